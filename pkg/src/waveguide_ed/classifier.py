"""Eigenstate taxonomy: radiance, regions, localisation signatures and exotic-state detectors.

Every threshold comes from a versioned JSON config. The default config ships
with the package (``data/thresholds_v1.json``); its values are calibration
constants of this implementation, fixed once against the ``N = 42`` spectra.

Geometry conventions for three-photon states, with sorted sites ``a <= b <= c``:

* Chebyshev distance from the main diagonal, ``r = c - a``.
* Folded tuple: the tuple reflected to the nearer end of the array, so that
  mirror-symmetric states look like a single corner.
* Corner distance ``d = a' + b' + c'`` on the folded tuple, offset so the
  closest admissible tuple sits at ``d = 0``.
* Elongation ``eta = Var(s) / (E[q^2] / 2)``, where ``s = (a'+b'+c')/sqrt(3)``
  is the coordinate along the diagonal and ``q^2`` the squared distance from
  it. ``eta`` is about 1 for three independent photons and grows when the
  photons are bound to each other but move freely together.
"""

from __future__ import annotations

import copy
import enum
import functools
import itertools
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .ansatz import FactorKind, FactorSet, batch_extract_factors, fermionic_product, symmetric_product
from .basis import BasisMap
from .errors import AmbiguousSignatureError, DegenerateProjectionError, InvalidArityError
from .model import ModelParams
from .observables import ProbabilityCube, batch_entropy, batch_ipr, batch_marginals, spectator_gather

CONFIG_VERSION = 1
DEFAULT_CONFIG = "thresholds_v1.json"


class Radiance(enum.Enum):
    SUPERRADIANT = "superradiant"
    SUBRADIANT = "subradiant"
    ORDINARY = "ordinary"


class Region(enum.Enum):
    FERMIONIC = "fermionic"
    CHAOTIC = "chaotic"
    LOCALIZED = "localized"
    SCATTERING = "scattering"
    UNASSIGNED = "unassigned"


class Exotic(enum.Enum):
    TRIMER = "trimer"
    CORNER = "corner"
    TRIMER_EDGE = "trimer_edge"
    ASYMMETRIC = "asymmetric"


# ---------------------------------------------------------------------------
# config


@functools.lru_cache(maxsize=None)
def _packaged(name: str) -> str:
    return resources.files("waveguide_ed").joinpath("data", name).read_text()


def load_thresholds(path=None) -> dict:
    """Threshold config from ``path``, or the packaged default."""
    text = _packaged(DEFAULT_CONFIG) if path is None else Path(path).read_text()
    cfg = json.loads(text)
    if cfg.get("version") != CONFIG_VERSION:
        raise ValueError(f"unsupported threshold config version {cfg.get('version')!r}")
    return cfg


def merge_thresholds(base: dict, overrides: Optional[dict]) -> dict:
    """Copy of ``base`` with the nested keys of ``overrides`` replaced."""
    out = copy.deepcopy(base)
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge_thresholds(out[key], value)
        else:
            out[key] = value
    return out


def _cfg(config: Optional[dict]) -> dict:
    return load_thresholds() if config is None else config


# ---------------------------------------------------------------------------
# labels


@dataclass(frozen=True)
class LocalisationSignature:
    n_edge: int
    n_centre: int
    n_free: int

    def __post_init__(self):
        counts = (self.n_edge, self.n_centre, self.n_free)
        if min(counts) < 0 or sum(counts) != 3:
            raise ValueError(f"photon counts {counts} must be non-negative and sum to 3")

    @classmethod
    def from_localized(cls, n_edge: int, n_centre: int) -> "LocalisationSignature":
        return cls(int(n_edge), int(n_centre), 3 - int(n_edge) - int(n_centre))


@dataclass(frozen=True)
class StateLabel:
    radiance: Radiance
    region: Region
    localisation: Optional[LocalisationSignature]
    exotic: frozenset = frozenset()

    @property
    def ambiguous(self) -> bool:
        return self.localisation is None


@dataclass(frozen=True)
class Evidence:
    kind: Exotic
    decay_length: float
    mass: float
    fit_residual: float
    elongation: float
    edge_mass: float = math.nan


def classify_radiance(record, params: ModelParams, config: Optional[dict] = None) -> Radiance:
    """Radiance class from the decay rate of a :class:`StateRecord` (or a bare rate)."""
    factor = _cfg(config)["radiance"]["subradiance_factor"]
    gamma = float(getattr(record, "decay_rate", record))
    if gamma > params.gamma0:
        return Radiance.SUPERRADIANT
    if gamma < params.gamma0 * factor:
        return Radiance.SUBRADIANT
    return Radiance.ORDINARY


# ---------------------------------------------------------------------------
# windows and localisation counts


@dataclass(frozen=True, eq=False)
class Windows:
    """Edge windows of ``w = ceil(fraction * N)`` sites at each end and a centred window."""

    n: int
    left: np.ndarray
    right: np.ndarray
    centre: np.ndarray

    @classmethod
    def for_size(cls, n: int, fraction: float = 0.1) -> "Windows":
        w = max(1, math.ceil(fraction * n))
        wc = w if (n - w) % 2 == 0 else w + 1
        if 2 * w + wc > n:
            raise ValueError(f"windows of width {w} do not fit into {n} sites")
        start = (n - wc) // 2
        return cls(n, np.arange(w), np.arange(n - w, n), np.arange(start, start + wc))

    @property
    def edge(self) -> np.ndarray:
        return np.concatenate([self.left, self.right])


def _windows(n: int, config: dict) -> Windows:
    return Windows.for_size(n, config["windows"]["fraction"])


def marginal_estimates(marginals: np.ndarray, win: Windows) -> np.ndarray:
    """Real-valued ``(n_edge, n_centre)`` estimates, shape ``(2, m)``, from ``(N, m)`` marginals.

    Each localized photon puts a third of the marginal into its window; a
    free photon is taken as spread evenly and contributes the window's share
    of sites. The resulting 2 x 2 linear system is exact for that model.
    """
    m_e = marginals[win.edge].sum(axis=0)
    m_c = marginals[win.centre].sum(axis=0)
    f_e = len(win.edge) / win.n
    f_c = len(win.centre) / win.n
    a = np.array([[1 - f_e, -f_e], [-f_c, 1 - f_c]])
    rhs = np.stack([3 * m_e - 3 * f_e, 3 * m_c - 3 * f_c])
    return np.linalg.solve(a, rhs)


def factor_kind(u, win: Windows, mass: float = 0.9) -> FactorKind:
    """Edge/centre/free label of one single-photon factor by its window mass."""
    p = np.abs(np.asarray(u)) ** 2
    p = p / p.sum()
    if p[win.edge].sum() >= mass:
        return FactorKind.EDGE
    if p[win.centre].sum() >= mass:
        return FactorKind.CENTRE
    return FactorKind.FREE


def window_labeler(n: int, config: Optional[dict] = None):
    """Labeler for :func:`waveguide_ed.ansatz.extract_factors` based on the localisation windows."""
    cfg = _cfg(config)
    win = _windows(n, cfg)
    return functools.partial(factor_kind, win=win, mass=cfg["windows"]["factor_mass"])


def _factor_counts(kinds: Sequence[FactorKind]) -> tuple:
    return (sum(k is FactorKind.EDGE for k in kinds), sum(k is FactorKind.CENTRE for k in kinds))


def _resolve(x, factor_estimate, band: float) -> tuple:
    xc = np.clip(np.asarray(x, dtype=float), 0.0, 3.0)
    guess = tuple(int(v) for v in np.rint(xc))
    unclear = bool(np.any(np.abs(xc - guess) > 0.5 - band)) or sum(guess) > 3
    if factor_estimate is None or factor_estimate == guess:
        if unclear and factor_estimate is None:
            raise AmbiguousSignatureError(
                f"marginal estimate {tuple(np.round(xc, 3))} is inside the hysteresis band",
                marginal_estimate=tuple(xc), factor_estimate=None,
            )
        return guess
    if unclear and np.all(np.abs(xc - factor_estimate) < 0.5 + band):
        return tuple(factor_estimate)
    raise AmbiguousSignatureError(
        f"marginal estimate {tuple(np.round(xc, 3))} and factor estimate {factor_estimate} disagree",
        marginal_estimate=tuple(xc), factor_estimate=factor_estimate,
    )


def localisation_count(record, config: Optional[dict] = None, factor_fit=None) -> LocalisationSignature:
    """Number of photons localized at the edges, at the centre, and free.

    ``record`` needs a ``marginal``. The factor fit (argument, or
    ``record.extras["factor_fit"]``) is used as a cross-check when its
    quality is at least ``windows.factor_fit_min``. Raises
    :class:`AmbiguousSignatureError` when the estimators disagree.
    """
    cfg = _cfg(config)
    p = np.asarray(record.marginal, dtype=float)
    win = _windows(len(p), cfg)
    x = marginal_estimates(p[:, None] / p.sum(), win)[:, 0]
    if factor_fit is None:
        factor_fit = getattr(record, "extras", {}).get("factor_fit")
    estimate = None
    if factor_fit is not None and factor_fit.fit_quality >= cfg["windows"]["factor_fit_min"]:
        mass = cfg["windows"]["factor_mass"]
        estimate = _factor_counts([factor_kind(u, win, mass) for u in factor_fit.factors.factors])
    return LocalisationSignature.from_localized(*_resolve(x, estimate, cfg["windows"]["band"]))


# ---------------------------------------------------------------------------
# cube geometry


@dataclass(frozen=True, eq=False)
class _Geometry:
    """Per-multiset geometric data for profile fits; ``weights`` are probabilities per multiset."""

    n: int
    multiplicity: np.ndarray
    r_onehot: sp.csr_array
    d_onehot: sp.csr_array
    r_counts: np.ndarray
    d_counts: np.ndarray
    s: np.ndarray
    q2: np.ndarray
    incidence: np.ndarray

    @classmethod
    def build(cls, tuples: np.ndarray, multiplicity: np.ndarray, n: int) -> "_Geometry":
        t = np.sort(np.asarray(tuples), axis=1)
        r = t[:, 2] - t[:, 0]
        flip = t.sum(axis=1) > 1.5 * (n - 1)
        folded = np.where(flip[:, None], n - 1 - t[:, ::-1], t)
        total = folded.sum(axis=1)
        d = total - total.min()
        rows = np.arange(len(t))
        r_onehot = sp.csr_array((np.ones(len(t)), (rows, r)), shape=(len(t), r.max() + 1))
        d_onehot = sp.csr_array((np.ones(len(t)), (rows, d)), shape=(len(t), d.max() + 1))
        # marginal weight of each site: occupation count / 3
        occ = np.zeros((len(t), n))
        np.add.at(occ, (np.repeat(rows, 3), t.ravel()), 1.0 / 3.0)
        return cls(
            n=n,
            multiplicity=np.asarray(multiplicity, dtype=float),
            r_onehot=r_onehot,
            d_onehot=d_onehot,
            r_counts=r_onehot.T @ multiplicity,
            d_counts=d_onehot.T @ multiplicity,
            s=total / math.sqrt(3.0),
            q2=(folded.astype(float) ** 2).sum(axis=1) - total.astype(float) ** 2 / 3.0,
            incidence=occ,
        )


@functools.lru_cache(maxsize=8)
def _cube_geometry(n: int):
    multisets = np.array(list(itertools.combinations_with_replacement(range(n), 3)))
    mult = np.array([len(set(itertools.permutations(m))) for m in map(tuple, multisets)], dtype=float)
    return multisets, _Geometry.build(multisets, mult, n)


@functools.lru_cache(maxsize=8)
def _reduced_geometry(n: int):
    from .basis import enumerate_basis

    basis = enumerate_basis(n, 3)
    return _Geometry.build(basis.tuples, np.full(basis.size, 6.0), n)


def _cube_weights(cube: ProbabilityCube) -> tuple:
    multisets, geom = _cube_geometry(cube.n)
    values = np.asarray(cube.values)
    # all permutations of a multiset carry the same value in a symmetric cube
    w = values[tuple(multisets.T)] * geom.multiplicity
    return geom, w[:, None] / w.sum()


def _exp_fit(mass: np.ndarray, counts: np.ndarray, points: int):
    """Decay length and rms log residual of the density envelope past its peak.

    The density is ``mass / counts``; its envelope at distance r is the
    largest density at any distance >= r, which removes the standing-wave
    oscillations of bound states. The log-linear fit covers ``points``
    admissible distances starting at the density maximum, so a monotone
    profile is fitted from its first point.
    """
    support = np.flatnonzero(counts > 0)
    dens = mass[support] / counts[support, None]
    env = np.maximum.accumulate(dens[::-1], axis=0)[::-1]
    y = np.log(np.maximum(env, 1e-300))
    pos = np.arange(len(support))[:, None]
    first = np.argmax(dens, axis=0)
    w = ((pos >= first) & (pos < first + points)).astype(float)
    x = support[:, None].astype(float)
    n = w.sum(axis=0)
    xm = (w * x).sum(axis=0) / n
    ym = (w * y).sum(axis=0) / n
    sxx = (w * (x - xm) ** 2).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.where(sxx > 0, (w * (x - xm) * (y - ym)).sum(axis=0) / sxx, 0.0)
        residual = np.sqrt((w * (y - ym - slope * (x - xm)) ** 2).sum(axis=0) / n)
        xi = np.where(slope < 0, -1.0 / slope, np.inf)
    return xi, residual


def _near(mass: np.ndarray, counts: np.ndarray, width: int) -> np.ndarray:
    start = np.flatnonzero(counts > 0)[0]
    return mass[: start + width + 1].sum(axis=0)


def geometry_features(geom: _Geometry, weights: np.ndarray, win: Windows, config: dict) -> dict:
    """Profile fits and moments for each column of ``weights`` (probability per multiset)."""
    tcfg, ccfg = config["trimer"], config["corner"]
    r_mass = geom.r_onehot.T @ weights
    d_mass = geom.d_onehot.T @ weights
    t_xi, t_res = _exp_fit(r_mass, geom.r_counts, tcfg["fit_points"])
    c_xi, c_res = _exp_fit(d_mass, geom.d_counts, ccfg["fit_points"])
    mean_s = geom.s @ weights
    var_s = (geom.s**2) @ weights - mean_s**2
    perp = geom.q2 @ weights / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        elongation = np.where(perp > 0, np.maximum(var_s, 0.0) / perp, np.inf)
    marg = geom.incidence.T @ weights
    return {
        "trimer_xi": t_xi,
        "trimer_residual": t_res,
        "diagonal_mass": _near(r_mass, geom.r_counts, tcfg["diag_width"]),
        "corner_xi": c_xi,
        "corner_residual": c_res,
        "corner_mass": _near(d_mass, geom.d_counts, ccfg["width"]),
        "elongation": elongation,
        "edge_mass": marg[win.edge].sum(axis=0),
    }


def _trimer_mask(f: dict, config: dict) -> np.ndarray:
    # a corner state also hugs the diagonal; its independent decay from the corner takes precedence
    c = config["trimer"]
    return (f["trimer_xi"] <= c["xi_max"]) & (f["diagonal_mass"] >= c["mass_min"]) & ~_corner_mask(f, config)


def _corner_mask(f: dict, config: dict) -> np.ndarray:
    c = config["corner"]
    return (f["corner_xi"] <= c["xi_max"]) & (f["corner_mass"] >= c["mass_min"]) & (f["elongation"] <= c["elongation_max"])


def _trimer_edge_mask(f: dict, config: dict) -> np.ndarray:
    return _trimer_mask(f, config) & (f["edge_mass"] >= config["trimer_edge"]["edge_mass_min"])


def _cube_features(cube: ProbabilityCube, config: dict) -> dict:
    geom, w = _cube_weights(cube)
    return {k: v[0] for k, v in geometry_features(geom, w, _windows(cube.n, config), config).items()}


def detect_trimer(cube: ProbabilityCube, config: Optional[dict] = None) -> Optional[Evidence]:
    """Bound trimer: probability decaying exponentially away from the main diagonal."""
    cfg = _cfg(config)
    f = _cube_features(cube, cfg)
    if not _trimer_mask(f, cfg):
        return None
    return Evidence(Exotic.TRIMER, float(f["trimer_xi"]), float(f["diagonal_mass"]),
                    float(f["trimer_residual"]), float(f["elongation"]), float(f["edge_mass"]))


def detect_corner(cube: ProbabilityCube, config: Optional[dict] = None) -> Optional[Evidence]:
    """Corner state: all three photons decaying independently from one end of the array."""
    cfg = _cfg(config)
    f = _cube_features(cube, cfg)
    if not _corner_mask(f, cfg):
        return None
    return Evidence(Exotic.CORNER, float(f["corner_xi"]), float(f["corner_mass"]),
                    float(f["corner_residual"]), float(f["elongation"]), float(f["edge_mass"]))


def detect_trimer_edge(cube: ProbabilityCube, config: Optional[dict] = None) -> Optional[Evidence]:
    """Trimer whose marginal is concentrated in the edge windows."""
    cfg = _cfg(config)
    f = _cube_features(cube, cfg)
    if not _trimer_edge_mask(f, cfg):
        return None
    return Evidence(Exotic.TRIMER_EDGE, float(f["trimer_xi"]), float(f["diagonal_mass"]),
                    float(f["trimer_residual"]), float(f["elongation"]), float(f["edge_mass"]))


def mirror_asymmetry(marginal) -> float:
    p = np.asarray(marginal, dtype=float)
    return float(np.abs(p - p[::-1]).sum() / p.sum())


def detect_asymmetric(marginal, config: Optional[dict] = None, localized: bool = True) -> bool:
    """Mirror asymmetry ``||P - reverse(P)||_1`` above threshold, for states flagged localized."""
    return bool(localized) and mirror_asymmetry(marginal) > _cfg(config)["asymmetric"]["threshold"]


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class AnsatzScores:
    fermionic: float = 0.0
    symmetric: float = 0.0
    fit_quality: float = 0.0


def region_label(record, scores: AnsatzScores, params: ModelParams, config: Optional[dict] = None,
                 localisation: Optional[LocalisationSignature] = None) -> Region:
    """Region of the entropy/energy map, decided by the first rule that applies.

    Fermionic, then Localized, Chaotic, Scattering; otherwise Unassigned.
    Energies and rates are measured in units of ``gamma0``.
    """
    c = _cfg(config)["region"]
    g0 = params.gamma0
    re = abs(np.real(record.energy) - params.omega0_offset) / g0
    if (scores.fermionic >= c["fermion_overlap_min"] and scores.fermionic > scores.symmetric
            and record.decay_rate <= c["fermion_gamma_max"] * g0 and re <= c["fermion_re_max"]):
        return Region.FERMIONIC
    localized_count = localisation is not None and localisation.n_edge + localisation.n_centre > 0
    if record.ipr >= c["localized_ipr_min"] or localized_count:
        return Region.LOCALIZED
    if record.entropy >= c["chaos_entropy_min"] and scores.fit_quality < c["chaos_fit_max"]:
        return Region.CHAOTIC
    if scores.fit_quality >= c["scattering_fit_min"] and re >= c["scattering_re_min"]:
        return Region.SCATTERING
    return Region.UNASSIGNED


# ---------------------------------------------------------------------------
# spectrum-wide classification


def state_parities(result, batch_size: int = 512) -> np.ndarray:
    """Mirror parity ``Re <v, M v>`` of every eigenvector (about +1 or -1)."""
    mirror = result.basis.mirror()
    out = np.empty(len(result))
    for idx, v in result.iter_vectors(batch_size):
        out[idx] = np.real(np.sum(v.conj() * v[mirror], axis=0)) / np.sum(np.abs(v) ** 2, axis=0)
    return out


def quasi_degenerate_pairs(energies: np.ndarray, parities: np.ndarray, ratio: float) -> list:
    """Isolated opposite-parity doublets ``(i, j)`` with ``i < j``.

    ``i`` and ``j`` must be each other's nearest level in the complex plane,
    have opposite parity, and be split by at most ``ratio`` times the
    distance from either of them to any third level.
    """
    energies = np.asarray(energies, dtype=complex)
    if len(energies) < 2:
        return []
    pts = np.column_stack([energies.real, energies.imag])
    dist, nn = cKDTree(pts).query(pts, k=min(4, len(energies)))
    # drop each point itself; exact duplicates may list it second
    near, gap = np.empty(len(energies), dtype=np.int64), np.empty(len(energies))
    for i in range(len(energies)):
        keep = nn[i] != i
        others, d = nn[i][keep], dist[i][keep]
        near[i] = others[0]
        gap[i] = d[1] if len(d) > 1 else np.inf
    pairs = []
    for i, j in enumerate(near):
        if i > j or near[j] != i or (parities[i] > 0) == (parities[j] > 0):
            continue
        if abs(energies[i] - energies[j]) <= ratio * min(gap[i], gap[j]):
            pairs.append((i, int(j)))
    return pairs


def _rotate_pair(v1: np.ndarray, v2: np.ndarray, basis: BasisMap) -> tuple:
    """Combinations ``(v1 +- e^{i theta} v2)/sqrt(2)`` with the largest left/right imbalance."""
    n = basis.n_atoms
    side = np.sign(np.arange(n) - (n - 1) / 2)
    cross = basis.incidence() @ side
    d = np.sum(v1.conj() * v2 * cross)
    if abs(d) < 1e-14:
        return v1, v2
    phase = np.conj(d) / abs(d)
    return (v1 + phase * v2) / math.sqrt(2), (v1 - phase * v2) / math.sqrt(2)


@dataclass
class SpectrumLabels:
    indices: np.ndarray
    labels: list
    features: dict
    config: dict
    pairs: list = field(default_factory=list)

    def count(self, exotic: Exotic) -> int:
        return sum(exotic in lab.exotic for lab in self.labels)

    def with_exotic(self, exotic: Exotic) -> np.ndarray:
        return np.array([i for i, lab in zip(self.indices, self.labels) if exotic in lab.exotic], dtype=np.int64)


def _ansatz_matrix(singles, basis: BasisMap, count: int, build) -> np.ndarray:
    order = np.argsort(-singles.energies.imag)[:count]  # most subradiant first
    cols = []
    for combo in itertools.combinations(sorted(order), 3):
        try:
            cols.append(build(FactorSet.from_eigenstates(singles, combo), basis))
        except DegenerateProjectionError:
            continue
    return np.stack(cols, axis=1) if cols else np.zeros((basis.size, 0))


def classify_spectrum(result, singles=None, config: Optional[dict] = None, indices=None,
                      batch_size: int = 256, iterations: int = 30) -> SpectrumLabels:
    """Labels and detector features for the eigenstates of a three-photon hard-core spectrum.

    Isolated opposite-parity doublets (see :func:`quasi_degenerate_pairs`,
    ratio ``asymmetric.doublet_ratio``) are replaced by the two combinations
    that maximize the left/right imbalance; their residual is half the
    splitting.
    ``singles`` (the one-photon spectrum) enables fermionic/symmetric ansatz
    scores from the most subradiant one-photon states.
    """
    cfg = _cfg(config)
    basis = result.basis
    if basis is None or basis.k != 3:
        raise InvalidArityError("classification needs a three-photon spectrum with its basis")
    params = result.params
    n = basis.n_atoms
    win = _windows(n, cfg)
    geom = _reduced_geometry(n)
    table = spectator_gather(basis)
    energies = result.energies

    pairs = quasi_degenerate_pairs(energies, state_parities(result), cfg["asymmetric"]["doublet_ratio"])
    partner = {}
    for i, j in pairs:
        partner[i], partner[j] = j, i

    fermi = sym = None
    if singles is not None:
        count = cfg["region"]["fermion_singles"]
        fermi = _ansatz_matrix(singles, basis, count, fermionic_product)
        sym = _ansatz_matrix(singles, basis, count, symmetric_product)

    idx_all = np.arange(len(result)) if indices is None else np.asarray(indices, dtype=np.int64)
    names = ["ipr", "entropy", "fit_quality", "asymmetry", "n_edge_estimate", "n_centre_estimate",
             "fermionic_overlap", "symmetric_overlap"]
    feats = {k: np.empty(len(idx_all)) for k in names}
    kinds = np.empty((len(idx_all), 2), dtype=np.int64)
    geo = {}
    for start in range(0, len(idx_all), batch_size):
        chunk = idx_all[start:start + batch_size]
        v = result.vectors(chunk)
        for col, i in enumerate(chunk):
            j = partner.get(int(i))
            if j is not None:
                a, b = _rotate_pair(*(result.vectors([min(i, j), max(i, j)]).T), basis)
                v[:, col] = a if i < j else b
        v /= np.linalg.norm(v, axis=0)
        p = np.abs(v) ** 2
        sl = slice(start, start + len(chunk))
        feats["ipr"][sl] = batch_ipr(v)
        feats["entropy"][sl], _ = batch_entropy(v, basis, table)
        marg = batch_marginals(v, basis)
        feats["asymmetry"][sl] = np.abs(marg - marg[::-1]).sum(axis=0)
        x = marginal_estimates(marg, win)
        feats["n_edge_estimate"][sl], feats["n_centre_estimate"][sl] = x
        factors, quality = batch_extract_factors(v, basis, iterations, table)
        feats["fit_quality"][sl] = quality
        mass = cfg["windows"]["factor_mass"]
        kinds[sl] = [_factor_counts([factor_kind(u, win, mass) for u in fs]) for fs in factors]
        if fermi is not None and fermi.shape[1]:
            feats["fermionic_overlap"][sl] = np.max(np.abs(fermi.conj().T @ v) ** 2, axis=0)
            feats["symmetric_overlap"][sl] = np.max(np.abs(sym.conj().T @ v) ** 2, axis=0)
        else:
            feats["fermionic_overlap"][sl] = 0.0
            feats["symmetric_overlap"][sl] = 0.0
        for key, val in geometry_features(geom, p, win, cfg).items():
            geo.setdefault(key, np.empty(len(idx_all)))[sl] = val
    feats.update(geo)

    trimer = _trimer_mask(feats, cfg)
    corner = _corner_mask(feats, cfg)
    trimer_edge = _trimer_edge_mask(feats, cfg)
    band = cfg["windows"]["band"]
    fit_min = cfg["windows"]["factor_fit_min"]

    labels = []
    for row, i in enumerate(idx_all):
        estimate = tuple(kinds[row]) if feats["fit_quality"][row] >= fit_min else None
        x = (feats["n_edge_estimate"][row], feats["n_centre_estimate"][row])
        try:
            loc = LocalisationSignature.from_localized(*_resolve(x, estimate, band))
        except AmbiguousSignatureError:
            loc = None
        record = _Record(energies[i], -energies[i].imag, feats["ipr"][row], feats["entropy"][row])
        scores = AnsatzScores(feats["fermionic_overlap"][row], feats["symmetric_overlap"][row],
                              feats["fit_quality"][row])
        region = region_label(record, scores, params, cfg, loc)
        exotic = set()
        if trimer[row]:
            exotic.add(Exotic.TRIMER)
        if trimer_edge[row]:
            exotic.add(Exotic.TRIMER_EDGE)
        if corner[row]:
            exotic.add(Exotic.CORNER)
        localized = region is Region.LOCALIZED or bool(exotic)
        if localized and feats["asymmetry"][row] > cfg["asymmetric"]["threshold"]:
            exotic.add(Exotic.ASYMMETRIC)
        labels.append(StateLabel(classify_radiance(record.decay_rate, params, cfg), region, loc, frozenset(exotic)))
    return SpectrumLabels(idx_all, labels, feats, cfg, pairs)


@dataclass(frozen=True)
class _Record:
    energy: complex
    decay_rate: float
    ipr: float
    entropy: float
