"""Indexing of the hard-core k-excitation subspace.

A basis state is a strictly increasing tuple of occupied sites; sites are
0-based. The reduced basis keeps one representative per bosonic orbit, so
its dimension is ``C(N, k)``. ``symmetrize_to_full`` and ``reduce_from_full``
map between reduced amplitude vectors and permutation-symmetric rank-k
tensors of shape ``(N,) * k``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidArityError,
    LengthMismatchError,
    NonzeroDoubleOccupancyError,
    NotSymmetricError,
    TooFewAtomsError,
)

MAX_ARITY = 3


@dataclass(frozen=True, eq=False)
class BasisMap:
    """Bijection between sorted occupation tuples and dense indices.

    ``tuples[i]`` is the tuple with dense index ``i``; tuples are in
    lexicographic order. ``lookup`` is a dense ``(N,) * k`` table holding the
    index of every sorted tuple and ``-1`` elsewhere.
    """

    n_atoms: int
    k: int
    tuples: np.ndarray
    lookup: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.tuples)

    def __len__(self) -> int:
        return self.size

    def index(self, sites) -> int:
        """Dense index of an occupation tuple (order of ``sites`` is irrelevant)."""
        key = tuple(sorted(int(s) for s in sites))
        if len(key) != self.k or len(set(key)) != self.k:
            raise KeyError(f"{tuple(sites)!r} is not a valid {self.k}-site occupation")
        if key[0] < 0 or key[-1] >= self.n_atoms:
            raise KeyError(f"{tuple(sites)!r} has sites outside 0..{self.n_atoms - 1}")
        return int(self.lookup[key])

    def indices(self, sites: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`index` for an ``(m, k)`` array; invalid rows map to ``-1``."""
        sites = np.sort(np.asarray(sites), axis=1)
        return self.lookup[tuple(sites.T)]

    def tuple_of(self, index: int) -> tuple:
        return tuple(int(s) for s in self.tuples[index])

    def mirror(self) -> np.ndarray:
        """Index of the spatially reflected tuple ``s -> N - 1 - s`` for every basis state."""
        return self.indices(self.n_atoms - 1 - self.tuples)

    def incidence(self) -> np.ndarray:
        """``(size, N)`` 0/1 matrix: entry ``[i, s]`` is 1 when site ``s`` is occupied in tuple ``i``."""
        inc = np.zeros((self.size, self.n_atoms))
        rows = np.repeat(np.arange(self.size), self.k)
        inc[rows, self.tuples.ravel()] = 1.0
        return inc


def enumerate_basis(n_atoms: int, k: int) -> BasisMap:
    if k not in range(1, MAX_ARITY + 1):
        raise InvalidArityError(f"excitation number must be 1, 2 or 3, got {k!r}")
    if n_atoms < k:
        raise TooFewAtomsError(f"{n_atoms} atoms cannot host {k} hard-core excitations")
    tuples = np.array(list(itertools.combinations(range(n_atoms), k)), dtype=np.int64)
    tuples = tuples.reshape(-1, k)
    lookup = np.full((n_atoms,) * k, -1, dtype=np.int64)
    lookup[tuple(tuples.T)] = np.arange(len(tuples))
    tuples.setflags(write=False)
    lookup.setflags(write=False)
    return BasisMap(n_atoms=n_atoms, k=k, tuples=tuples, lookup=lookup)


def _check_length(reduced: np.ndarray, basis: BasisMap):
    if reduced.shape[0] != basis.size:
        raise LengthMismatchError(
            f"reduced vector has length {reduced.shape[0]}, basis has {basis.size} states"
        )


def symmetrize_to_full(reduced, basis: BasisMap) -> np.ndarray:
    """Spread each reduced amplitude ``v`` as ``v / sqrt(k!)`` over all permutations of its tuple.

    Accepts a vector of length ``basis.size`` or a ``(size, m)`` batch; for a
    batch the returned tensor has the state index last, ``(N,) * k + (m,)``.
    Entries with a repeated site index are zero and the norm is preserved.
    """
    reduced = np.asarray(reduced)
    _check_length(reduced, basis)
    k = basis.k
    dtype = np.result_type(reduced.dtype, np.float64)
    out = np.zeros((basis.n_atoms,) * k + reduced.shape[1:], dtype=dtype)
    scaled = reduced / math.sqrt(math.factorial(k))
    for perm in itertools.permutations(range(k)):
        out[tuple(basis.tuples[:, p] for p in perm)] = scaled
    return out


def reduce_from_full(tensor, basis: BasisMap, atol: float = 1e-10) -> np.ndarray:
    """Left inverse of :func:`symmetrize_to_full` for a single symmetric tensor."""
    tensor = np.asarray(tensor)
    k = basis.k
    if tensor.shape != (basis.n_atoms,) * k:
        raise LengthMismatchError(
            f"tensor shape {tensor.shape} does not match {(basis.n_atoms,) * k}"
        )
    for perm in itertools.permutations(range(k)):
        if np.max(np.abs(tensor - tensor.transpose(perm)), initial=0.0) > atol:
            raise NotSymmetricError(f"tensor is not symmetric under axis permutation {perm}")
    if k > 1:
        idx = np.indices(tensor.shape)
        coincident = np.zeros(tensor.shape, dtype=bool)
        for i, j in itertools.combinations(range(k), 2):
            coincident |= idx[i] == idx[j]
        worst = np.max(np.abs(tensor[coincident]), initial=0.0)
        if worst > atol:
            raise NonzeroDoubleOccupancyError(
                f"tensor has amplitude {worst:.3g} on a doubly occupied site"
            )
    return tensor[tuple(basis.tuples.T)] * math.sqrt(math.factorial(k))
