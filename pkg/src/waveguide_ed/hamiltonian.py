"""Assembly of the k-excitation effective Hamiltonian.

Two representations are provided:

* ``reduced``: the hard-core, bosonic-symmetric basis of sorted tuples
  (dimension ``C(N, k)``). The matrix is sparse: a tuple couples only to
  tuples differing in one site, with amplitude equal to the single-photon
  element between the differing sites.
* ``full``: the plain ``N**k`` product basis with the Kronecker sum of
  single-photon Hamiltonians plus a finite on-site repulsion ``chi`` per
  coincident pair of photons.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .basis import BasisMap, enumerate_basis
from .errors import InvalidArityError, MemoryBudgetExceededError
from .model import Finite, ModelParams, single_excitation_hamiltonian

DEFAULT_MEMORY_BUDGET = 1 << 30  # bytes


@dataclass(frozen=True)
class ParitySector:
    """Invariant subspace of the mirror reflection ``s -> N - 1 - s``.

    ``embedding`` is a sparse orthonormal ``(M, m)`` matrix whose columns
    span the sector inside the reduced basis.
    """

    parity: int
    embedding: sp.csr_array

    @property
    def size(self) -> int:
        return self.embedding.shape[1]


@dataclass(frozen=True, eq=False)
class KPhotonHamiltonian:
    params: ModelParams
    k: int
    representation: str  # "reduced" or "full"
    matrix: object  # scipy.sparse.csr_array (reduced) or ndarray (full)
    basis: Optional[BasisMap] = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return complex(self.matrix.diagonal().sum())

    def dense(self) -> np.ndarray:
        if sp.issparse(self.matrix):
            return self.matrix.toarray()
        return np.asarray(self.matrix)

    def matmul(self, vectors: np.ndarray) -> np.ndarray:
        return self.matrix @ vectors

    @cached_property
    def sectors(self) -> list:
        """Mirror-parity sectors of the reduced representation (even first)."""
        if self.representation != "reduced":
            raise ValueError("parity sectors are only defined for the reduced basis")
        return parity_sectors(self.basis)

    def sector_block(self, sector: ParitySector) -> np.ndarray:
        """Dense restriction ``Q^T H Q`` of the Hamiltonian to one parity sector."""
        q = sector.embedding
        return np.asarray((q.T @ (self.matrix @ q)).toarray())

    def dump(self, path) -> Path:
        """Write the dense matrix as row-major little-endian complex128 (re, im) pairs."""
        path = Path(path)
        np.ascontiguousarray(self.dense(), dtype="<c16").tofile(path)
        return path


def parity_sectors(basis: BasisMap) -> list:
    """Split the reduced basis into even and odd sectors of the mirror reflection.

    Each orbit ``{T, mirror(T)}`` with ``T != mirror(T)`` contributes
    ``(e_T +/- e_T') / sqrt(2)``; self-mirrored tuples belong to the even
    sector only. The smaller index of each orbit is listed first so that the
    representative carries the ``+`` sign.
    """
    m = basis.size
    mirror = basis.mirror()
    idx = np.arange(m)
    pair = idx < mirror
    single = idx == mirror
    reps = idx[pair]
    partners = mirror[pair]
    s = 1.0 / np.sqrt(2.0)
    sectors = []
    for parity in (+1, -1):
        if parity > 0:
            singles = idx[single]
            n_pairs = len(reps)
            rows = np.concatenate([reps, partners, singles])
            cols = np.concatenate([np.arange(n_pairs), np.arange(n_pairs),
                                   n_pairs + np.arange(len(singles))])
            vals = np.concatenate([np.full(n_pairs, s), np.full(n_pairs, s), np.ones(len(singles))])
            width = n_pairs + len(singles)
        else:
            n_pairs = len(reps)
            rows = np.concatenate([reps, partners])
            cols = np.concatenate([np.arange(n_pairs), np.arange(n_pairs)])
            vals = np.concatenate([np.full(n_pairs, s), np.full(n_pairs, -s)])
            width = n_pairs
        if width == 0:
            continue
        q = sp.csr_array((vals, (rows, cols)), shape=(m, width))
        sectors.append(ParitySector(parity=parity, embedding=q))
    return sectors


def build_kphoton_hardcore(params: ModelParams, k: int, basis: Optional[BasisMap] = None) -> KPhotonHamiltonian:
    """Hard-core Hamiltonian in the reduced basis.

    Element ``<T|H|T'>`` is ``H_pq`` when ``T`` and ``T'`` differ only by site
    ``p in T`` replaced with ``q in T'``; the diagonal is ``sum_{s in T} H_ss``.
    """
    if k not in (1, 2, 3):
        raise InvalidArityError(f"excitation number must be 1, 2 or 3, got {k!r}")
    if k > 1 and not params.is_hardcore:
        raise ValueError("build_kphoton_hardcore requires HardCore interaction")
    if basis is None:
        basis = enumerate_basis(params.n_atoms, k)
    elif basis.k != k or basis.n_atoms != params.n_atoms:
        raise ValueError("basis does not match (n_atoms, k)")
    n = params.n_atoms
    h1 = single_excitation_hamiltonian(params)
    tuples = basis.tuples
    m = basis.size

    rows = [np.arange(m)]
    cols = [np.arange(m)]
    vals = [h1[tuples, tuples].sum(axis=1)]
    for p in range(k):
        moved = np.repeat(tuples, n, axis=0)
        q = np.tile(np.arange(n), m)
        src = moved[:, p].copy()
        moved[:, p] = q
        target = basis.indices(moved)
        ok = (target >= 0) & (q != src)
        rows.append(np.repeat(np.arange(m), n)[ok])
        cols.append(target[ok])
        vals.append(h1[src[ok], q[ok]])
    mat = sp.csr_array(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)
    )
    mat.sort_indices()
    return KPhotonHamiltonian(params=params, k=k, representation="reduced", matrix=mat, basis=basis)


def _coincident_pairs(n: int, k: int) -> np.ndarray:
    """Number of coincident index pairs for every product-basis state, flattened a-major."""
    grids = np.indices((n,) * k).reshape(k, -1)
    count = np.zeros(grids.shape[1])
    for i, j in itertools.combinations(range(k), 2):
        count += grids[i] == grids[j]
    return count


def build_full_with_chi(
    params: ModelParams, k: int, memory_budget: int = DEFAULT_MEMORY_BUDGET
) -> KPhotonHamiltonian:
    """Product-basis Hamiltonian: Kronecker sum of ``k`` single-photon copies plus ``chi`` per coincident pair."""
    if k not in (2, 3):
        raise InvalidArityError(f"full-basis mode supports k = 2 or 3, got {k!r}")
    if not isinstance(params.interaction, Finite):
        raise ValueError("build_full_with_chi requires a Finite(chi) interaction")
    dim = params.n_atoms ** k
    need = dim * dim * 16
    if need > memory_budget:
        raise MemoryBudgetExceededError(
            f"dense {dim}x{dim} matrix needs {need / 2**20:.1f} MiB, budget is {memory_budget / 2**20:.1f} MiB"
        )
    h1 = single_excitation_hamiltonian(params)
    eye = np.eye(params.n_atoms)
    total = np.zeros((dim, dim), dtype=complex)
    for slot in range(k):
        term = np.ones((1, 1))
        for j in range(k):
            term = np.kron(term, h1 if j == slot else eye)
        total += term
    total[np.diag_indices(dim)] += params.interaction.chi * _coincident_pairs(params.n_atoms, k)
    return KPhotonHamiltonian(params=params, k=k, representation="full", matrix=total)
