import math

import numpy as np
import pytest

from waveguide_ed import build_kphoton_hardcore, diagonalize, single_spectrum, verify_residuals
from waveguide_ed.errors import DimensionMismatchError, IndexOutOfRangeError
from waveguide_ed.spectra import SpectrumResult

from conftest import params


def test_two_atom_dicke_pair():
    res = diagonalize(build_kphoton_hardcore(params(2, math.pi), 1))
    np.testing.assert_allclose(np.sort_complex(res.energies), [-2j, 0], atol=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_sorted_normalized_gauged(phase, k):
    h = build_kphoton_hardcore(params(9, phase), k)
    res = diagonalize(h)
    assert len(res) == h.dimension
    e = res.energies
    order = np.lexsort((e.imag, e.real))
    np.testing.assert_array_equal(order, np.arange(len(e)))
    v = res.vectors()
    np.testing.assert_allclose(np.linalg.norm(v, axis=0), 1.0, atol=1e-12)
    pivots = v[np.argmax(np.abs(v), axis=0), np.arange(v.shape[1])]
    assert np.all(pivots.real > 0)
    assert np.abs(pivots.imag).max() < 1e-14
    assert res.residuals.max() <= 1e-8


def test_parity_and_plain_solver_agree():
    h = build_kphoton_hardcore(params(8, 0.7), 3)
    a = diagonalize(h)
    b = diagonalize(h, use_parity=False)
    np.testing.assert_allclose(a.energies, b.energies, atol=1e-12)
    # gauge-fixed vectors agree for nondegenerate eigenvalues
    gaps = np.abs(np.diff(a.energies))
    isolated = np.ones(len(a), bool)
    isolated[:-1] &= gaps > 1e-6
    isolated[1:] &= gaps > 1e-6
    idx = np.flatnonzero(isolated)[:20]
    np.testing.assert_allclose(a.vectors(idx), b.vectors(idx), atol=1e-8)


def test_per_photon_convention():
    h = build_kphoton_hardcore(params(6, 0.3), 3)
    res = diagonalize(h)
    np.testing.assert_allclose(res.raw_energies, 3 * res.energies)
    pair = res[4]
    assert pair.raw_energy == pytest.approx(3 * pair.energy_per_photon)


def test_determinism():
    h = build_kphoton_hardcore(params(10, 0.2), 3)
    a, b = diagonalize(h), diagonalize(h)
    np.testing.assert_array_equal(a.energies, b.energies)
    np.testing.assert_allclose(a.vectors(), b.vectors(), atol=1e-10)


def test_verify_residuals_independent():
    h = build_kphoton_hardcore(params(7, 1.0), 3)
    res = diagonalize(h)
    report = verify_residuals(res, h)
    assert report.ok
    assert report.max_residual < 1e-12


def test_verify_exact_2x2():
    res = single_spectrum(params(2, 0.5))
    report = verify_residuals(res, build_kphoton_hardcore(params(2, 0.5), 1))
    assert report.max_residual < 1e-14


def test_verify_flags_perturbed(rng):
    h = build_kphoton_hardcore(params(6, 0.4), 2)
    res = diagonalize(h)
    block = res._blocks[0]
    block.vectors += 1e-3 * (rng.normal(size=block.vectors.shape))
    report = verify_residuals(res, h)
    assert not report.ok
    assert report.max_residual > 1e-5


def test_verify_dimension_mismatch():
    h = build_kphoton_hardcore(params(5, 0.4), 2)
    empty = SpectrumResult(params=h.params, k=2, representation="reduced",
                           raw_energies=np.array([]), residuals=np.array([]))
    with pytest.raises(DimensionMismatchError):
        verify_residuals(empty, h)


def test_index_errors():
    res = single_spectrum(params(3, 0.4))
    with pytest.raises(IndexOutOfRangeError):
        res.vector(3)
    assert np.allclose(res.vector(-1), res.vector(2))


def test_save_load_roundtrip(tmp_path):
    h = build_kphoton_hardcore(params(7, 0.4), 3)
    res = diagonalize(h)
    res.save(tmp_path / "s.npz")
    back = SpectrumResult.load(tmp_path / "s.npz", h.params, h.basis)
    np.testing.assert_array_equal(back.energies, res.energies)
    np.testing.assert_array_equal(back.vectors(), res.vectors())


@pytest.mark.parametrize("n", [4, 8, 12])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_passivity_and_trace(phase, n, k):
    h = build_kphoton_hardcore(params(n, phase), k)
    res = diagonalize(h)
    assert res.energies.imag.max() <= 1e-10
    tr = h.trace()
    assert abs(res.raw_energies.sum() - tr) <= 1e-9 * abs(tr)
