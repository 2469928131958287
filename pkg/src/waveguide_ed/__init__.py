"""Exact diagonalization of few-photon states in waveguide QED atom arrays."""

from .basis import BasisMap, enumerate_basis, reduce_from_full, symmetrize_to_full
from .hamiltonian import KPhotonHamiltonian, build_full_with_chi, build_kphoton_hardcore
from .model import Finite, HardCore, ModelParams, dispersion_energy, single_excitation_hamiltonian, single_spectrum
from .spectra import EigenPair, SpectrumResult, diagonalize, verify_residuals

__version__ = "0.1.0"
