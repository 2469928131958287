import cmath
import math

import numpy as np
import pytest

from waveguide_ed import (
    Finite,
    build_full_with_chi,
    build_kphoton_hardcore,
    enumerate_basis,
    single_excitation_hamiltonian,
    symmetrize_to_full,
)
from waveguide_ed.errors import InvalidArityError, MemoryBudgetExceededError
from waveguide_ed.oracle import product_basis_matrix

from conftest import params


def test_element_between_neighbouring_tuples():
    phi = 0.37
    h = build_kphoton_hardcore(params(4, phi), 3)
    b = h.basis
    got = h.matrix[b.index((0, 1, 2)), b.index((0, 1, 3))]
    assert got == pytest.approx(-1j * cmath.exp(1j * phi), abs=1e-15)


def test_diagonal_and_trace():
    h = build_kphoton_hardcore(params(6, 0.02), 3)
    np.testing.assert_allclose(h.matrix.diagonal(), -3j)
    assert h.trace() == pytest.approx(-60j)


@pytest.mark.parametrize("k", [2, 3])
def test_matches_isometric_projection_of_kronecker_sum(phase, k):
    # reduced matrix = S^T (Kronecker sum) S with S the symmetrizing isometry
    p = params(5, phase)
    h = build_kphoton_hardcore(p, k)
    b = h.basis
    s = symmetrize_to_full(np.eye(b.size), b).reshape(-1, b.size)
    full = product_basis_matrix(p, k, chi=0.0)
    np.testing.assert_allclose(h.dense(), s.T @ full @ s, atol=1e-13)


@pytest.mark.parametrize("n,k", [(7, 2), (8, 3), (12, 3)])
def test_row_degree(n, k):
    h = build_kphoton_hardcore(params(n, 0.4), k)
    dense = h.dense()
    off = np.abs(dense) > 0
    np.fill_diagonal(off, False)
    np.testing.assert_array_equal(off.sum(axis=1), k * (n - k))


def test_complex_symmetric(phase):
    h = build_kphoton_hardcore(params(8, phase), 3).dense()
    assert np.array_equal(h, h.T)


def test_k1_equals_single_matrix():
    p = params(6, 0.9)
    np.testing.assert_array_equal(build_kphoton_hardcore(p, 1).dense(), single_excitation_hamiltonian(p))


def test_hardcore_arity_and_interaction_checks():
    with pytest.raises(InvalidArityError):
        build_kphoton_hardcore(params(6), 4)
    with pytest.raises(ValueError):
        build_kphoton_hardcore(params(6, interaction=Finite(1.0)), 3)


def test_parity_sectors_block_diagonalize():
    h = build_kphoton_hardcore(params(9, 0.7), 3)
    qs = [s.embedding.toarray() for s in h.sectors]
    q = np.hstack(qs)
    np.testing.assert_allclose(q.T @ q, np.eye(h.dimension), atol=1e-15)
    rotated = q.T @ h.dense() @ q
    m = qs[0].shape[1]
    assert np.abs(rotated[:m, m:]).max() < 1e-13
    np.testing.assert_allclose(rotated[:m, :m], h.sector_block(h.sectors[0]), atol=1e-14)


def test_full_chi_diagonal_entries():
    p = params(2, 0.3, interaction=Finite(5.0))
    h1 = single_excitation_hamiltonian(p)
    h = build_full_with_chi(p, 2).dense()
    assert h[0, 0] == pytest.approx(2 * h1[0, 0] + 5.0)
    p3 = params(3, 0.3, interaction=Finite(5.0))
    h1 = single_excitation_hamiltonian(p3)
    h3 = build_full_with_chi(p3, 3).dense()
    for m in range(3):
        idx = np.ravel_multi_index((m, m, m), (3, 3, 3))
        assert h3[idx, idx] == pytest.approx(3 * h1[m, m] + 15.0)


def test_full_chi_matches_literal_delta_form():
    p = params(4, 0.8, interaction=Finite(2.5))
    np.testing.assert_allclose(build_full_with_chi(p, 3).dense(), product_basis_matrix(p, 3, 2.5), atol=1e-14)


def test_full_chi_zero_is_kronecker_sum_spectrum():
    p = params(2, 0.6, interaction=Finite(0.0))
    e1 = np.linalg.eigvals(single_excitation_hamiltonian(p))
    sums = np.array([a + b + c for a in e1 for b in e1 for c in e1])
    got = np.linalg.eigvals(build_full_with_chi(p, 3).dense())
    np.testing.assert_allclose(np.sort_complex(got), np.sort_complex(sums), atol=1e-12)


def test_memory_budget():
    with pytest.raises(MemoryBudgetExceededError):
        build_full_with_chi(params(30, 0.1, interaction=Finite(1.0)), 3)
    with pytest.raises(ValueError):
        build_full_with_chi(params(3, 0.1), 3)


def test_dump_layout(tmp_path):
    h = build_kphoton_hardcore(params(5, 0.2), 2)
    path = h.dump(tmp_path / "h.bin")
    raw = np.fromfile(path, dtype="<f8")
    assert raw.size == 2 * h.dimension**2
    dense = h.dense()
    assert raw[0] == dense[0, 0].real and raw[1] == dense[0, 0].imag
    assert raw[2] == dense[0, 1].real
    back = raw.view("<c16").reshape(h.dimension, h.dimension)
    np.testing.assert_array_equal(back, dense)
