"""Per-state diagnostics: decay rate, IPR, entanglement entropy, marginal and probability cube.

Single-state functions take a reduced amplitude vector and its
:class:`~waveguide_ed.basis.BasisMap`. The ``batch_*`` functions take a
``(size, m)`` array of column vectors and are what spectrum-wide analyses use;
they work on the reduced amplitudes directly instead of building ``N**3``
tensors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import BasisMap, symmetrize_to_full
from .errors import InvalidArityError, ZeroVectorError


def _norm2(vector) -> float:
    n2 = float(np.vdot(vector, vector).real)
    if n2 == 0.0:
        raise ZeroVectorError("state vector is identically zero")
    return n2


def ipr(vector) -> float:
    """Inverse participation ratio ``sum |psi|^4 / (sum |psi|^2)^2``."""
    vector = np.asarray(vector)
    n2 = _norm2(vector)
    return float(np.sum(np.abs(vector) ** 4) / n2**2)


def decay_rate(eigen) -> float:
    """Radiative decay rate ``-Im eps`` of an :class:`EigenPair` or a per-photon energy."""
    eps = getattr(eigen, "energy_per_photon", eigen)
    return float(-np.imag(eps))


def entanglement_entropy(state, basis: BasisMap, leg: int = 0):
    """Von Neumann entropy of one photon against the rest.

    The symmetrized tensor is matricized as ``leg`` versus the remaining
    indices; the squared singular values, normalized to unit sum, are the
    Schmidt weights. Returns ``(entropy, weights)`` with weights in
    descending order and the entropy in nats.
    """
    if basis.k < 2:
        raise InvalidArityError("entanglement entropy needs at least two excitations")
    state = np.asarray(state)
    _norm2(state)
    return tensor_entropy(symmetrize_to_full(state, basis), leg)


def tensor_entropy(tensor, leg: int = 0):
    """Entropy and Schmidt weights of an arbitrary ``(N,) * k`` tensor, one leg against the rest."""
    tensor = np.asarray(tensor)
    if tensor.ndim < 2:
        raise InvalidArityError("entanglement entropy needs at least two excitations")
    mat = np.moveaxis(tensor, leg, 0).reshape(tensor.shape[leg], -1)
    sv = np.linalg.svd(mat, compute_uv=False)
    total = np.sum(sv**2)
    if total == 0:
        raise ZeroVectorError("state vector is identically zero")
    weights = sv**2 / total
    return _entropy(weights), weights


def _entropy(weights) -> float:
    p = weights[weights > 0]
    return float(-np.sum(p * np.log(p)) + 0.0)


def marginal(state, basis: BasisMap) -> np.ndarray:
    """One-photon position distribution ``P_a = sum_{b,c} |psi_abc|^2``, normalized to unit sum."""
    state = np.asarray(state)
    _norm2(state)
    return batch_marginals(state[:, None], basis)[:, 0]


@dataclass(frozen=True)
class ProbabilityCube:
    """``|psi_abc|^2`` on the ``N x N x N`` grid (a-major)."""

    n: int
    values: np.ndarray

    @property
    def normalization(self) -> float:
        return float(self.values.sum())

    def is_symmetric(self, atol: float = 1e-12) -> bool:
        return all(
            np.allclose(self.values, self.values.transpose(p), rtol=0, atol=atol)
            for p in itertools.permutations(range(3))
        )


def probability_cube(state, basis: BasisMap) -> ProbabilityCube:
    if basis.k != 3:
        raise InvalidArityError("probability cubes are defined for three excitations")
    state = np.asarray(state)
    n2 = _norm2(state)
    values = np.abs(symmetrize_to_full(state, basis)) ** 2 / n2
    return ProbabilityCube(n=basis.n_atoms, values=values)


@dataclass
class StateRecord:
    """One eigenstate together with its diagnostics."""

    index: int
    energy: complex
    decay_rate: float
    ipr: float
    entropy: float
    marginal: np.ndarray
    residual: float = 0.0
    schmidt_weights: Optional[np.ndarray] = None
    labels: Optional[object] = None
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# batch versions over column-stacked reduced vectors


def batch_ipr(vectors: np.ndarray) -> np.ndarray:
    p = np.abs(vectors) ** 2
    n2 = p.sum(axis=0)
    if np.any(n2 == 0):
        raise ZeroVectorError("batch contains a zero vector")
    return (p**2).sum(axis=0) / n2**2


def batch_marginals(vectors: np.ndarray, basis: BasisMap) -> np.ndarray:
    """``(N, m)`` array of normalized marginals for ``(size, m)`` reduced vectors."""
    p = np.abs(vectors) ** 2
    n2 = p.sum(axis=0)
    if np.any(n2 == 0):
        raise ZeroVectorError("batch contains a zero vector")
    # each occupied site of a tuple receives 1/k of its weight
    return basis.incidence().T @ p / (basis.k * n2)


def spectator_gather(basis: BasisMap) -> np.ndarray:
    """``(C(N, k-1), N)`` table of ``index(P + {a})`` for every spectator set ``P``; ``-1`` if ``a`` is in ``P``."""
    n, k = basis.n_atoms, basis.k
    spect = np.array(list(itertools.combinations(range(n), k - 1)), dtype=np.int64).reshape(-1, k - 1)
    table = np.full((len(spect), n), -1, dtype=np.int64)
    for a in range(n):
        rows = np.flatnonzero(~np.any(spect == a, axis=1))
        tuples = np.concatenate([spect[rows], np.full((len(rows), 1), a)], axis=1)
        table[rows, a] = basis.indices(tuples)
    return table


def gather_amplitudes(vectors: np.ndarray, table: np.ndarray) -> np.ndarray:
    """``(m, C(N, k-1), N)`` array ``W[s, P, a] = v_s[P + {a}]`` (zero where undefined)."""
    padded = np.concatenate([vectors, np.zeros((1, vectors.shape[1]), vectors.dtype)], axis=0)
    return np.moveaxis(padded[table], -1, 0)


def batch_one_body_density(vectors: np.ndarray, basis: BasisMap, table: Optional[np.ndarray] = None) -> np.ndarray:
    """One-photon reduced density matrices ``rho[s, a, a']``, each with unit trace."""
    if basis.k < 2:
        raise InvalidArityError("one-body density needs at least two excitations")
    if table is None:
        table = spectator_gather(basis)
    w = gather_amplitudes(vectors, table)
    rho = np.einsum("spa,spb->sab", w, w.conj(), optimize=True)
    tr = np.trace(rho, axis1=1, axis2=2).real
    if np.any(tr == 0):
        raise ZeroVectorError("batch contains a zero vector")
    return rho / tr[:, None, None]


def entropies_from_density(rho: np.ndarray):
    """Entropies and descending Schmidt weights from a stack of one-body density matrices."""
    evals = np.linalg.eigvalsh(rho)[:, ::-1]
    evals = np.clip(evals, 0.0, None)
    evals /= evals.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(evals > 0, -evals * np.log(evals), 0.0)
    return terms.sum(axis=1), evals


def batch_entropy(vectors: np.ndarray, basis: BasisMap, table: Optional[np.ndarray] = None):
    return entropies_from_density(batch_one_body_density(vectors, basis, table))


def max_entropy(n_atoms: int) -> float:
    return math.log(n_atoms)
