"""Product ansatze built from single-polariton factors, and factor extraction.

For a sorted tuple ``(a, b, c)`` the symmetric ansatz amplitude is the
permanent of the ``3 x 3`` matrix ``[u_i(t_j)]`` and the fermionic ansatz
amplitude is its determinant. Both are evaluated only on the hard-core
reduced basis, so double-occupancy components are dropped before
normalization.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .basis import BasisMap
from .errors import DegenerateProjectionError, InvalidArityError, LengthMismatchError, ZeroVectorError
from .observables import batch_one_body_density, gather_amplitudes, spectator_gather

PROJECTION_FLOOR = 1e-12
DEGENERACY_TOL = 1e-9


class FactorKind(enum.Enum):
    EIGENSTATE = "eigenstate"
    EDGE = "edge"
    CENTRE = "centre"
    FREE = "free"


@dataclass(frozen=True, eq=False)
class FactorSet:
    """Three single-polariton wave functions, each normalized to unit norm."""

    factors: tuple
    kinds: tuple = (FactorKind.FREE,) * 3
    eigen_indices: Optional[tuple] = None

    def __post_init__(self):
        if len(self.factors) != 3:
            raise InvalidArityError("a factor set holds exactly three factors")
        normed = []
        for u in self.factors:
            u = np.asarray(u, dtype=complex)
            n = np.linalg.norm(u)
            if n == 0:
                raise ZeroVectorError("factor is identically zero")
            normed.append(u / n)
        if len({len(u) for u in normed}) != 1:
            raise LengthMismatchError("factors have different lengths")
        object.__setattr__(self, "factors", tuple(normed))
        object.__setattr__(self, "kinds", tuple(self.kinds))

    @property
    def matrix(self) -> np.ndarray:
        return np.stack(self.factors)

    @classmethod
    def from_eigenstates(cls, single_result, indices: Sequence[int]) -> "FactorSet":
        return cls(
            factors=tuple(single_result.vector(i) for i in indices),
            kinds=(FactorKind.EIGENSTATE,) * 3,
            eigen_indices=tuple(int(i) for i in indices),
        )


def _check_map(factors: FactorSet, basis: BasisMap):
    if basis.k != 3:
        raise InvalidArityError("product ansatze are defined for three excitations")
    if len(factors.factors[0]) != basis.n_atoms:
        raise LengthMismatchError("factor length differs from the number of atoms")


def _signed_sum(u: np.ndarray, basis: BasisMap, signed: bool) -> np.ndarray:
    # u[i, t_j] for every tuple: shape (size, 3 factors, 3 slots)
    g = u[:, basis.tuples].transpose(1, 0, 2)
    out = np.zeros(basis.size, dtype=complex)
    for perm in itertools.permutations(range(3)):
        sign = np.linalg.det(np.eye(3)[list(perm)]) if signed else 1.0
        out += sign * g[:, perm[0], 0] * g[:, perm[1], 1] * g[:, perm[2], 2]
    return out


def _normalized(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n < PROJECTION_FLOOR:
        raise DegenerateProjectionError(f"ansatz vanishes on the hard-core basis (norm {n:.3g})")
    return v / n


def symmetric_product(factors: FactorSet, basis: BasisMap) -> np.ndarray:
    """Bosonic product ``u1 u2 u3 + permutations`` on the reduced basis, normalized."""
    _check_map(factors, basis)
    return _normalized(_signed_sum(factors.matrix, basis, signed=False))


def fermionic_product(factors: FactorSet, basis: BasisMap) -> np.ndarray:
    """Slater-determinant amplitude on ordered tuples ``a < b < c``, normalized.

    The bosonic tensor takes the same value on every permutation of a
    tuple, so only the ordered-sector sign pattern is stored.
    """
    _check_map(factors, basis)
    return _normalized(_signed_sum(factors.matrix, basis, signed=True))


def overlap(a, b) -> float:
    """``|<a, b>|^2 / (||a||^2 ||b||^2)``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise LengthMismatchError(f"vectors have shapes {a.shape} and {b.shape}")
    na = np.vdot(a, a).real
    nb = np.vdot(b, b).real
    if na == 0 or nb == 0:
        raise ZeroVectorError("overlap with a zero vector")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2 / (na * nb)))


def subspace_overlap(state, spanning: np.ndarray) -> float:
    """Weight of ``state`` inside the span of the columns of ``spanning``."""
    state = np.asarray(state)
    n2 = np.vdot(state, state).real
    if n2 == 0:
        raise ZeroVectorError("overlap with a zero vector")
    q, r = np.linalg.qr(np.asarray(spanning))
    keep = np.abs(np.diag(r)) > PROJECTION_FLOOR * max(1.0, np.abs(r).max())
    q = q[:, keep]
    proj = q.conj().T @ state
    return float(min(1.0, np.vdot(proj, proj).real / n2))


def ansatz_overlap(state, single_result, indices: Sequence[int], basis: BasisMap,
                   kind: str = "symmetric", degeneracy_tol: float = DEGENERACY_TOL) -> float:
    """Overlap of ``state`` with an ansatz built from single-photon eigenstates ``indices``.

    When a chosen factor is quasi-degenerate with other single-photon
    eigenstates, the overlap is taken against the span of all ansatze
    obtained by swapping in the degenerate partners.
    """
    build = symmetric_product if kind == "symmetric" else fermionic_product
    energies = single_result.energies
    groups = [np.flatnonzero(np.abs(energies - energies[i]) < degeneracy_tol) for i in indices]
    candidates = []
    for choice in itertools.product(*groups):
        if len(set(choice)) < 3:
            continue
        try:
            candidates.append(build(FactorSet.from_eigenstates(single_result, choice), basis))
        except DegenerateProjectionError:
            continue
    if not candidates:
        raise DegenerateProjectionError("no admissible ansatz for the requested factors")
    if len(candidates) == 1:
        return overlap(state, candidates[0])
    return subspace_overlap(state, np.stack(candidates, axis=1))


# ---------------------------------------------------------------------------
# factor extraction


@dataclass(frozen=True, eq=False)
class FactorFit:
    factors: FactorSet
    fit_quality: float


def _pair_matrix(y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``S[b, c] = y_b z_c + y_c z_b`` with the diagonal removed (hard-core)."""
    s = y[:, :, None] * z[:, None, :]
    s = s + s.transpose(0, 2, 1)
    n = s.shape[1]
    s[:, np.arange(n), np.arange(n)] = 0.0
    return s


def _update_factor(w: np.ndarray, pairs: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Least-squares optimal ``x`` for ``P Sym(x, y, z) ~ psi`` with ``y, z`` held fixed.

    ``P Sym(x, y, z) = A x`` with ``A[T, a] = S[T - a]``; the normal
    equations ``(A^H A) x = A^H psi`` are ``N x N`` and assembled from ``S``.
    """
    s = _pair_matrix(y, z)
    sp = s[:, pairs[:, 0], pairs[:, 1]]
    rhs = np.matmul(sp.conj()[:, None, :], w)[:, 0, :]
    gram = np.matmul(s, s.conj().transpose(0, 2, 1))
    total = 0.5 * np.sum(np.abs(s) ** 2, axis=(1, 2))
    n = s.shape[1]
    gram[:, np.arange(n), np.arange(n)] = total[:, None] - np.sum(np.abs(s) ** 2, axis=2)
    ridge = 1e-12 * (np.abs(total) + 1e-300)
    gram[:, np.arange(n), np.arange(n)] += ridge[:, None]
    x = np.linalg.solve(gram, rhs[..., None])[..., 0]
    norm = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.where(norm == 0, 1.0, norm)


def _als(w, pairs, u, iterations):
    u = list(u)
    for _ in range(iterations):
        for j in range(3):
            others = [u[i] for i in range(3) if i != j]
            u[j] = _update_factor(w, pairs, others[0], others[1])
    return np.stack(u, axis=1)


def _quality(vectors, factors, basis):
    quality = np.zeros(vectors.shape[1])
    for s in range(vectors.shape[1]):
        guess = _signed_sum(factors[s], basis, signed=False)
        if np.linalg.norm(guess) > PROJECTION_FLOOR:
            quality[s] = overlap(vectors[:, s], guess)
    return quality


# which density-matrix eigenvectors seed the three factors; repeated seeds
# avoid the flat directions that the hard-core projection opens up when
# two or three factors are equal
ALS_STARTS = ((0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 2))


def batch_extract_factors(vectors: np.ndarray, basis: BasisMap, iterations: int = 30,
                          table: Optional[np.ndarray] = None, starts=ALS_STARTS):
    """Fit single-polariton factors ``u1, u2, u3`` to each column of ``vectors``.

    Factors are seeded from the leading eigenvectors of the one-photon
    density matrix and refined by alternating least squares on the
    hard-core projection of their symmetric product; the best of several
    seedings is kept. Returns ``(factors, fit_quality)``: factors of shape
    ``(m, 3, N)`` and the squared overlap of the fitted symmetric product
    with each input.
    """
    if basis.k != 3:
        raise InvalidArityError("factor extraction is defined for three excitations")
    if table is None:
        table = spectator_gather(basis)
    n = basis.n_atoms
    pairs = np.array(list(itertools.combinations(range(n), 2)), dtype=np.int64)
    rho = batch_one_body_density(vectors, basis, table)
    _, evecs = np.linalg.eigh(rho)
    w = np.ascontiguousarray(gather_amplitudes(vectors, table))
    best, best_q = None, None
    for start in starts:
        factors = _als(w, pairs, [evecs[:, :, -1 - j] for j in start], iterations)
        quality = _quality(vectors, factors, basis)
        if best is None:
            best, best_q = factors, quality
        else:
            better = quality > best_q
            best[better], best_q[better] = factors[better], quality[better]
    return best, best_q


def extract_factors(state, basis: BasisMap, labeler=None, iterations: int = 30) -> FactorFit:
    """Leading single-polariton factors of ``state`` and the quality of their symmetric product.

    ``labeler`` maps a factor vector to a :class:`FactorKind`; without one,
    every factor is reported as ``FREE``.
    """
    state = np.asarray(state)
    if np.vdot(state, state).real == 0:
        raise ZeroVectorError("state vector is identically zero")
    factors, quality = batch_extract_factors(state[:, None], basis, iterations)
    us = tuple(factors[0])
    kinds = tuple(labeler(u) if labeler else FactorKind.FREE for u in us)
    return FactorFit(FactorSet(us, kinds), float(quality[0]))
