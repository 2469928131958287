"""Reference states of the N=42 spectra; needs --large (or WAVEGUIDE_ED_LARGE=1)."""

import numpy as np
import pytest

from waveguide_ed import ModelParams, build_kphoton_hardcore, diagonalize
from waveguide_ed.cache import default_cache_dir, hardcore_spectrum
from waveguide_ed.classifier import Radiance, Region, classify_spectrum

from conftest import large_enabled


@pytest.fixture(scope="module")
def labelled(request):
    if not large_enabled(request.config):
        pytest.skip("needs --large or WAVEGUIDE_ED_LARGE=1")
    p = ModelParams(42, 0.02)
    result = hardcore_spectrum(p, 3, cache_dir=default_cache_dir())
    singles = diagonalize(build_kphoton_hardcore(p, 1))

    targets = [10.7298 - 37.58969j, 3.5414 - 11.8320j, -0.010 - 2.272e-8j, -6.182 - 2.156j]
    nearest = [int(np.argmin(np.abs(result.energies - eps))) for eps in targets]
    labels = dict(zip(targets, classify_spectrum(result, singles, indices=nearest).labels))
    return labels.__getitem__


@pytest.mark.parametrize("eps,region", [
    (-0.010 - 2.272e-8j, Region.FERMIONIC),
    (3.5414 - 11.8320j, Region.LOCALIZED),
    (-6.182 - 2.156j, Region.SCATTERING),
])
def test_reference_regions(labelled, eps, region):
    assert labelled(eps).region is region


def test_cross_state_has_two_centre_photons(labelled):
    loc = labelled(3.5414 - 11.8320j).localisation
    assert (loc.n_edge, loc.n_centre, loc.n_free) == (0, 2, 1)


@pytest.mark.parametrize("eps,radiance", [
    (10.7298 - 37.58969j, Radiance.SUPERRADIANT),
    (-0.010 - 2.272e-8j, Radiance.SUBRADIANT),
])
def test_reference_radiance(labelled, eps, radiance):
    assert labelled(eps).radiance is radiance
