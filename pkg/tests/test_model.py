import math

import mpmath
import numpy as np
import pytest

from waveguide_ed import Finite, HardCore, ModelParams, dispersion_energy, single_excitation_hamiltonian, single_spectrum
from waveguide_ed.errors import PoleProximityError

from conftest import params


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(0, 0.1)
    with pytest.raises(ValueError):
        ModelParams(3, 0.0)
    with pytest.raises(ValueError):
        ModelParams(3, 0.1, gamma0=-1.0)
    with pytest.raises(ValueError):
        Finite(-1.0)
    assert ModelParams(3, 0.1).interaction == HardCore()


def test_params_roundtrip_dict():
    p = ModelParams(5, 0.3, gamma0=2.0, omega0_offset=0.5, interaction=Finite(3.0))
    assert ModelParams.from_dict(p.to_dict()) == p


def test_single_atom():
    h = single_excitation_hamiltonian(params(1))
    assert h.shape == (1, 1)
    assert h[0, 0] == -1j


def test_phase_pi_signs():
    h = single_excitation_hamiltonian(params(3, math.pi))
    np.testing.assert_allclose(h[0, 1], 1j, atol=1e-15)
    np.testing.assert_allclose(h[1, 2], 1j, atol=1e-15)
    np.testing.assert_allclose(h[0, 2], -1j, atol=1e-15)


def test_two_atom_offdiagonal_high_precision():
    mpmath.mp.dps = 30
    ref = -1j * mpmath.exp(1j * mpmath.mpf("0.02"))
    h = single_excitation_hamiltonian(params(2, 0.02))
    assert abs(h[0, 1] - complex(ref)) < 1e-15
    np.testing.assert_allclose(h[0, 1], 0.0199987 - 0.9998000j, atol=5e-8)


def test_symmetric_bitwise(phase):
    h = single_excitation_hamiltonian(params(9, phase, omega0_offset=0.3))
    assert np.array_equal(h, h.T)
    assert not np.allclose(h, h.conj().T)


def test_decay_matrix_is_psd_rank_two(phase):
    h = single_excitation_hamiltonian(params(12, phase))
    decay = 0.5j * (h - h.conj().T)
    n = np.arange(12)
    np.testing.assert_allclose(decay, np.cos(phase * (n[:, None] - n[None, :])), atol=1e-14)
    evals = np.linalg.eigvalsh(decay)
    assert evals.min() > -1e-12
    assert np.sum(evals > 1e-9) <= 2


def test_dispersion_values_high_precision():
    mpmath.mp.dps = 30
    phi = mpmath.mpf("0.02")
    p = params(10, 0.02)
    for k in (mpmath.pi / 2, mpmath.pi):
        ref = mpmath.sin(phi) / (mpmath.cos(k) - mpmath.cos(phi))
        assert abs(dispersion_energy(float(k), p) - float(ref)) < 1e-13
    assert dispersion_energy(math.pi / 2, p) == pytest.approx(-0.0200027, abs=1e-7)
    assert dispersion_energy(math.pi, p) == pytest.approx(-0.0100003, abs=1e-7)


def test_dispersion_pole_and_branches():
    p = params(10, 0.3)
    with pytest.raises(PoleProximityError):
        dispersion_energy(0.3, p)
    assert dispersion_energy(0.29, p) > 0
    assert dispersion_energy(0.31, p) < 0
    with pytest.raises(ValueError):
        dispersion_energy(0.0, p)


@pytest.mark.parametrize("phi", [math.pi, 0.02])
def test_two_atom_spectrum_closed_form(phi):
    res = single_spectrum(params(2, phi))
    closed = np.array([-1j * (1 + np.exp(1j * phi)), -1j * (1 - np.exp(1j * phi))])
    got = np.sort_complex(res.energies)
    np.testing.assert_allclose(got, np.sort_complex(closed), atol=1e-14)


def test_single_atom_spectrum():
    res = single_spectrum(params(1))
    np.testing.assert_allclose(res.energies, [-1j])


def test_single_trace_identity(phase):
    p = params(11, phase, omega0_offset=0.7)
    res = single_spectrum(p)
    expected = -1j * 11 + 11 * 0.7
    assert abs(res.raw_energies.sum() - expected) <= 1e-12 * abs(expected)
    assert res.energies.imag.max() <= 1e-10
