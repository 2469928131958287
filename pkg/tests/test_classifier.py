import itertools
import json
import math
from types import SimpleNamespace

import numpy as np
import pytest

from waveguide_ed import build_kphoton_hardcore, diagonalize, enumerate_basis
from waveguide_ed.ansatz import FactorSet, extract_factors, symmetric_product
from waveguide_ed.classifier import (
    AnsatzScores,
    Exotic,
    LocalisationSignature,
    Radiance,
    Region,
    Windows,
    classify_radiance,
    classify_spectrum,
    detect_asymmetric,
    detect_corner,
    detect_trimer,
    detect_trimer_edge,
    load_thresholds,
    localisation_count,
    marginal_estimates,
    merge_thresholds,
    quasi_degenerate_pairs,
    region_label,
    window_labeler,
)
from waveguide_ed.errors import AmbiguousSignatureError
from waveguide_ed.observables import ProbabilityCube, marginal

from conftest import params


def cube_from(fn, n):
    a, b, c = np.indices((n, n, n))
    values = fn(a, b, c)
    return ProbabilityCube(n, values / values.sum())


def chebyshev(a, b, c):
    return np.maximum(np.maximum(a, b), c) - np.minimum(np.minimum(a, b), c)


@pytest.fixture
def trimer_cube():
    return cube_from(lambda a, b, c: np.exp(-chebyshev(a, b, c)), 20)


@pytest.fixture
def corner_cube():
    return cube_from(lambda a, b, c: np.exp(-(a + b + c) * 1.0), 20)


@pytest.fixture
def edge_trimer_cube():
    return cube_from(lambda a, b, c: np.exp(-chebyshev(a, b, c) - (a + b + c) / 4.0), 20)


@pytest.fixture
def uniform_cube():
    return cube_from(lambda a, b, c: np.ones(a.shape), 12)


def test_packaged_thresholds_are_versioned():
    cfg = load_thresholds()
    assert cfg["version"] == 1
    for section in ("radiance", "windows", "trimer", "corner", "trimer_edge", "asymmetric", "region"):
        assert section in cfg


def test_threshold_file_and_merge(tmp_path):
    cfg = load_thresholds()
    merged = merge_thresholds(cfg, {"trimer": {"xi_max": 9.0}})
    assert merged["trimer"]["xi_max"] == 9.0
    assert merged["trimer"]["mass_min"] == cfg["trimer"]["mass_min"]
    assert cfg["trimer"]["xi_max"] != 9.0 or merged is not cfg
    path = tmp_path / "t.json"
    path.write_text(json.dumps(dict(cfg, version=2)))
    with pytest.raises(ValueError):
        load_thresholds(path)


@pytest.mark.parametrize("gamma,expected", [
    (37.58969, Radiance.SUPERRADIANT),
    (2.272e-8, Radiance.SUBRADIANT),
    (1.0, Radiance.ORDINARY),
    (0.5, Radiance.ORDINARY),
    (0.0999, Radiance.SUBRADIANT),
])
def test_radiance(gamma, expected):
    assert classify_radiance(gamma, params(5)) is expected
    assert classify_radiance(SimpleNamespace(decay_rate=gamma), params(5)) is expected


def test_radiance_scales_with_gamma0():
    assert classify_radiance(1.5, params(5, gamma0=2.0)) is Radiance.ORDINARY


def test_windows_layout():
    w = Windows.for_size(42)
    np.testing.assert_array_equal(w.left, np.arange(5))
    np.testing.assert_array_equal(w.right, np.arange(37, 42))
    np.testing.assert_array_equal(w.centre, np.arange(18, 24))
    assert w.centre[0] == 41 - w.centre[-1]
    odd = Windows.for_size(21)
    assert odd.centre[0] == 20 - odd.centre[-1]
    with pytest.raises(ValueError):
        Windows.for_size(2)


def test_signature_invariant():
    assert LocalisationSignature.from_localized(1, 1).n_free == 1
    with pytest.raises(ValueError):
        LocalisationSignature(2, 2, 0)
    with pytest.raises(ValueError):
        LocalisationSignature(-1, 2, 2)


def _record(state, basis, with_fit=True):
    extras = {}
    if with_fit:
        extras["factor_fit"] = extract_factors(state, basis, labeler=window_labeler(basis.n_atoms))
    return SimpleNamespace(marginal=marginal(state, basis), extras=extras)


@pytest.fixture(scope="module")
def basis42():
    return enumerate_basis(42, 3)


def test_localisation_edge_free_free(basis42):
    n = 42
    u_edge = np.zeros(n)
    u_edge[0:3] = [1.0, 0.7, 0.3]
    u_free = np.ones(n)
    state = symmetric_product(FactorSet((u_edge, u_free, u_free)), basis42)
    rec = _record(state, basis42)
    assert localisation_count(rec) == LocalisationSignature(1, 0, 2)
    assert localisation_count(_record(state, basis42, with_fit=False)) == LocalisationSignature(1, 0, 2)


def test_localisation_two_centre(basis42):
    n = 42
    u1 = np.zeros(n)
    u1[19:22] = [0.5, 1.0, 0.5]
    u2 = np.zeros(n)
    u2[19:23] = [1.0, -0.4, 0.2, 0.8]
    state = symmetric_product(FactorSet((u1, u2, np.ones(n))), basis42)
    assert localisation_count(_record(state, basis42)) == LocalisationSignature(0, 2, 1)


def test_localisation_uniform_state(basis42):
    state = np.ones(basis42.size)
    assert localisation_count(_record(state, basis42)) == LocalisationSignature(0, 0, 3)


def test_marginal_estimate_exact_for_uniform_background():
    n = 42
    win = Windows.for_size(n)
    p = np.full(n, 1.0 / n) * 2 / 3
    p[win.left] += 1 / 3 / len(win.left)
    x = marginal_estimates(p[:, None], win)[:, 0]
    np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-12)


def test_localisation_ambiguous_without_factor_estimate():
    n = 42
    win = Windows.for_size(n)
    # half a photon's worth of excess edge mass sits right in the band
    p = np.full(n, 1.0 / n) * (1 - 0.5 / 3)
    p[win.left] += 0.5 / 3 / len(win.left)
    with pytest.raises(AmbiguousSignatureError) as err:
        localisation_count(SimpleNamespace(marginal=p, extras={}))
    assert err.value.marginal_estimate[0] == pytest.approx(0.5)


def test_localisation_disagreement_is_reported(basis42):
    n = 42
    u_edge = np.zeros(n)
    u_edge[0:3] = 1.0
    state = symmetric_product(FactorSet((u_edge, np.ones(n), np.ones(n))), basis42)
    fit = extract_factors(np.ones(basis42.size), basis42)
    with pytest.raises(AmbiguousSignatureError) as err:
        localisation_count(SimpleNamespace(marginal=marginal(state, basis42), extras={}), factor_fit=fit)
    assert err.value.factor_estimate == (0, 0)


def test_detectors_on_trimer(trimer_cube):
    ev = detect_trimer(trimer_cube)
    assert ev is not None and ev.kind is Exotic.TRIMER
    assert ev.decay_length == pytest.approx(1.0, abs=1e-9)
    assert detect_corner(trimer_cube) is None
    assert detect_trimer_edge(trimer_cube) is None


def test_trimer_with_standing_wave_profile():
    # bound states oscillate along r; the envelope still decays
    cube = cube_from(lambda a, b, c: np.exp(-chebyshev(a, b, c) / 1.5)
                     * (1.0 + 0.9 * np.cos(2.1 * chebyshev(a, b, c))), 20)
    ev = detect_trimer(cube)
    assert ev is not None
    assert 1.0 < ev.decay_length < 3.0


def test_detectors_on_corner(corner_cube):
    ev = detect_corner(corner_cube)
    assert ev is not None and ev.kind is Exotic.CORNER
    assert ev.decay_length == pytest.approx(1.0, abs=1e-9)
    assert ev.elongation == pytest.approx(1.0, abs=1e-6)
    assert detect_trimer(corner_cube) is None
    assert detect_trimer_edge(corner_cube) is None


def test_detectors_on_edge_trimer(edge_trimer_cube):
    assert detect_trimer_edge(edge_trimer_cube) is not None
    # trimer-edge states are trimers by construction
    assert detect_trimer(edge_trimer_cube) is not None
    assert detect_corner(edge_trimer_cube) is None


def test_detectors_on_uniform(uniform_cube):
    assert detect_trimer(uniform_cube) is None
    assert detect_corner(uniform_cube) is None
    assert detect_trimer_edge(uniform_cube) is None


def test_corner_detected_at_far_end(corner_cube):
    flipped = ProbabilityCube(corner_cube.n, corner_cube.values[::-1, ::-1, ::-1].copy())
    assert detect_corner(flipped) is not None


def test_asymmetric():
    n = 42
    p = np.ones(n) / n
    assert not detect_asymmetric(p)
    q = np.zeros(n)
    q[:5] = 0.2
    assert detect_asymmetric(q)
    assert not detect_asymmetric(q, localized=False)


def test_region_rules():
    p = params(10)
    base = dict(energy=0.0 - 1e-6j, decay_rate=1e-6, ipr=1e-4, entropy=1.0)
    rec = SimpleNamespace(**base)
    assert region_label(rec, AnsatzScores(0.9, 0.0, 0.2), p) is Region.FERMIONIC
    assert region_label(rec, AnsatzScores(0.1, 0.0, 0.2), p) is Region.UNASSIGNED
    loc = LocalisationSignature(1, 0, 2)
    assert region_label(rec, AnsatzScores(0.1, 0.0, 0.2), p, localisation=loc) is Region.LOCALIZED
    chaotic = SimpleNamespace(**dict(base, entropy=3.0))
    assert region_label(chaotic, AnsatzScores(0.0, 0.0, 0.1), p) is Region.CHAOTIC
    far = SimpleNamespace(**dict(base, energy=-6.0 - 2j, decay_rate=2.0))
    assert region_label(far, AnsatzScores(0.0, 0.0, 0.95), p) is Region.SCATTERING


def test_quasi_degenerate_pairs():
    e = np.array([0.0, 1e-12, 1.0, 1.0 + 1e-3, 2.0])
    parity = np.array([1, -1, 1, -1, 1])
    assert quasi_degenerate_pairs(e, parity, 1e-9) == [(0, 1)]
    assert quasi_degenerate_pairs(e, parity, 1e-2) == [(0, 1), (2, 3)]
    assert quasi_degenerate_pairs(e, np.ones(5), 1.0) == []


def test_doublet_must_be_isolated():
    e = np.array([0.0, 1e-4, 2e-4, 5.0])
    parity = np.array([1, -1, 1, -1])
    # level 2 sits as close to 1 as 0 does, so no isolated doublet exists
    assert quasi_degenerate_pairs(e, parity, 0.5) == []
    assert quasi_degenerate_pairs(np.array([0.0, 0.0, 7.0]), np.array([1, -1, 1]), 1e-12) == [(0, 1)]


def test_classify_small_spectrum_is_deterministic():
    p = params(9, 1.0)
    result = diagonalize(build_kphoton_hardcore(p, 3))
    singles = diagonalize(build_kphoton_hardcore(p, 1))
    a = classify_spectrum(result, singles)
    b = classify_spectrum(result, singles)
    assert a.labels == b.labels
    assert len(a.labels) == len(result)
    for lab in a.labels:
        if lab.localisation is not None:
            loc = lab.localisation
            assert loc.n_edge + loc.n_centre + loc.n_free == 3
    np.testing.assert_array_equal(a.features["ipr"], b.features["ipr"])
    sub = classify_spectrum(result, singles, indices=[3, 7])
    assert sub.labels == [a.labels[3], a.labels[7]]
