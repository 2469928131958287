"""Brute-force reference spectra for cross-checking the production path.

Nothing here reuses the reduced-basis machinery: the product-basis matrix is
written out element by element from Kronecker deltas, and the bosonic sector
is obtained by applying an explicitly assembled symmetrizer.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import TooLargeError
from .model import ModelParams
from .spectra import SpectrumResult, _Block

MAX_PRODUCT_DIM = 5000


def _single_matrix(params: ModelParams) -> np.ndarray:
    n = params.n_atoms
    h = np.empty((n, n), dtype=complex)
    for m in range(n):
        for j in range(n):
            h[m, j] = -1j * params.gamma0 * np.exp(1j * params.phase * abs(m - j))
        h[m, m] += params.omega0_offset
    return h


def product_basis_matrix(params: ModelParams, k: int, chi: float) -> np.ndarray:
    """``N**k`` matrix ``sum_slot delta(other slots) H[i_slot, j_slot] + chi * sum_pairs delta(i_p, i_q, j_p, j_q)``.

    The interaction term is on-site: both photons of the pair sit on the same
    atom before and after, and the spectator photon is untouched.
    """
    n = params.n_atoms
    dim = n**k
    if dim > MAX_PRODUCT_DIM:
        raise TooLargeError(f"product basis of dimension {dim} exceeds the oracle limit {MAX_PRODUCT_DIM}")
    h1 = _single_matrix(params)
    rows = np.indices((n,) * k).reshape(k, -1)
    i = rows[:, :, None]
    j = rows[:, None, :]
    delta = i == j  # delta[s, row, col]
    out = np.zeros((dim, dim), dtype=complex)
    for slot in range(k):
        spectators = np.ones((dim, dim), dtype=bool)
        for other in range(k):
            if other != slot:
                spectators &= delta[other]
        out += np.where(spectators, h1[i[slot], j[slot]], 0.0)
    for p, q in itertools.combinations(range(k), 2):
        onsite = (i[p] == i[q]) & (j[p] == j[q]) & (i[p] == j[p])
        for other in range(k):
            if other not in (p, q):
                onsite &= delta[other]
        out += chi * onsite
    return out


def symmetrizer(n: int, k: int) -> np.ndarray:
    """Projector ``(1/k!) sum_sigma P_sigma`` onto permutation-symmetric product states."""
    dim = n**k
    grid = np.indices((n,) * k).reshape(k, -1)
    proj = np.zeros((dim, dim))
    perms = list(itertools.permutations(range(k)))
    for perm in perms:
        permuted = np.ravel_multi_index(tuple(grid[p] for p in perm), (n,) * k)
        proj[permuted, np.arange(dim)] += 1.0
    return proj / len(perms)


def symmetric_sector_basis(n: int, k: int) -> np.ndarray:
    """Orthonormal columns spanning the range of :func:`symmetrizer`, one per multiset of sites."""
    proj = symmetrizer(n, k)
    cols = []
    for multiset in itertools.combinations_with_replacement(range(n), k):
        col = proj[:, np.ravel_multi_index(multiset, (n,) * k)]
        cols.append(col / np.linalg.norm(col))
    return np.stack(cols, axis=1)


def full_basis_reference_spectrum(params: ModelParams, k: int, chi: float,
                                  drop_above: float | None = None) -> SpectrumResult:
    """Spectrum of the product-basis Hamiltonian restricted to the bosonic sector.

    With ``drop_above`` set, eigenvalues with ``|raw energy| > drop_above``
    (doubly occupied states pushed up by a large ``chi``) are discarded.
    """
    h = product_basis_matrix(params, k, chi)
    sym = symmetric_sector_basis(params.n_atoms, k)
    block = sym.T @ h @ sym
    w, v = np.linalg.eig(block)
    keep = np.ones(len(w), dtype=bool) if drop_above is None else np.abs(w) <= drop_above
    w, v = w[keep], v[:, keep]
    order = np.lexsort((w.imag, w.real))
    w, v = w[order], v[:, order]
    residuals = np.linalg.norm(block @ v - v * w, axis=0)
    return SpectrumResult(
        params=params,
        k=k,
        representation="symmetric-sector",
        raw_energies=w,
        residuals=residuals,
        diagnostics={"backend": "numpy.linalg.eig", "chi": chi, "sector_dim": sym.shape[1]},
        _blocks=[_Block(None, v)],
        _block_of=np.zeros(len(w), dtype=np.int64),
        _column_of=np.arange(len(w)),
    )


def noninteracting_triples(singles, k: int = 3) -> np.ndarray:
    """Per-photon energies ``(e_a + e_b + ...)/k`` over all multisets of ``k`` single-photon energies."""
    singles = np.asarray(singles, dtype=complex)
    if singles.size == 0:
        raise ValueError("need at least one single-photon energy")
    combos = itertools.combinations_with_replacement(range(len(singles)), k)
    return np.array([singles[list(c)].sum() / k for c in combos])


def multiset_distance(a, b) -> float:
    """Largest distance in an optimal one-to-one matching of two equal-size complex multisets."""
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return math.inf
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max(initial=0.0))
