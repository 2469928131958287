"""Physical parameters, the single-excitation Hamiltonian and the polariton dispersion.

Energies are in units of the single-atom radiative rate ``gamma0`` (hbar = 1)
and are counted from the atomic resonance unless ``omega0_offset`` is set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import PoleProximityError

DEFAULT_POLE_GUARD = 1e-9


@dataclass(frozen=True)
class HardCore:
    """Infinite on-site repulsion (photon blockade)."""

    def to_dict(self) -> dict:
        return {"kind": "hardcore"}


@dataclass(frozen=True)
class Finite:
    """Finite on-site polariton-polariton repulsion ``chi``."""

    chi: float

    def __post_init__(self):
        if not np.isfinite(self.chi) or self.chi < 0:
            raise ValueError(f"chi must be a finite non-negative number, got {self.chi!r}")

    def to_dict(self) -> dict:
        return {"kind": "finite", "chi": float(self.chi)}


Interaction = Union[HardCore, Finite]


def interaction_from_dict(d: dict) -> Interaction:
    kind = d.get("kind", "hardcore")
    if kind == "hardcore":
        return HardCore()
    if kind == "finite":
        return Finite(float(d["chi"]))
    raise ValueError(f"unknown interaction kind {kind!r}")


@dataclass(frozen=True)
class ModelParams:
    """Configuration of a periodic atom array coupled to a waveguide.

    Attributes
    ----------
    n_atoms : int
        Number of two-level atoms ``N``.
    phase : float
        Phase ``omega0 * d / c`` picked up by light between neighbouring atoms.
    gamma0 : float
        Radiative decay rate of one atom; sets the energy unit.
    omega0_offset : float
        Diagonal energy offset. ``0`` counts energies from the resonance.
    interaction : HardCore or Finite
        On-site interaction between excitations.
    """

    n_atoms: int
    phase: float
    gamma0: float = 1.0
    omega0_offset: float = 0.0
    interaction: Interaction = field(default_factory=HardCore)

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        if not (np.isfinite(self.phase) and self.phase > 0):
            raise ValueError(f"phase must be positive, got {self.phase!r}")
        if not (np.isfinite(self.gamma0) and self.gamma0 > 0):
            raise ValueError(f"gamma0 must be positive, got {self.gamma0!r}")
        if not np.isfinite(self.omega0_offset):
            raise ValueError("omega0_offset must be finite")
        if not isinstance(self.interaction, (HardCore, Finite)):
            raise TypeError("interaction must be HardCore() or Finite(chi)")

    @property
    def is_hardcore(self) -> bool:
        return isinstance(self.interaction, HardCore)

    def to_dict(self) -> dict:
        return {
            "n_atoms": self.n_atoms,
            "phase": float(self.phase),
            "gamma0": float(self.gamma0),
            "omega0_offset": float(self.omega0_offset),
            "interaction": self.interaction.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(
            n_atoms=int(d["n_atoms"]),
            phase=float(d["phase"]),
            gamma0=float(d.get("gamma0", 1.0)),
            omega0_offset=float(d.get("omega0_offset", 0.0)),
            interaction=interaction_from_dict(d.get("interaction", {})),
        )


def single_excitation_hamiltonian(params: ModelParams) -> np.ndarray:
    """Dense ``N x N`` matrix ``H_mn = offset * delta_mn - i gamma0 exp(i phase |m - n|)``.

    The matrix is complex symmetric (not Hermitian); mirrored entries are
    computed from the same ``|m - n|`` and are therefore bit-identical.
    """
    sites = np.arange(params.n_atoms)
    dist = np.abs(sites[:, None] - sites[None, :])
    h = -1j * params.gamma0 * np.exp(1j * params.phase * dist)
    h[np.diag_indices_from(h)] += params.omega0_offset
    return h


def dispersion_energy(k: float, params: ModelParams, pole_guard: float = DEFAULT_POLE_GUARD) -> float:
    """Polariton dispersion ``gamma0 sin(phase) / (cos k - cos phase)`` for Bloch vector ``k``.

    Positive on the upper branch (``k < phase``), negative on the lower one.
    """
    if not 0 < k <= np.pi:
        raise ValueError(f"k must lie in (0, pi], got {k!r}")
    denom = np.cos(k) - np.cos(params.phase)
    if abs(denom) < pole_guard:
        raise PoleProximityError(
            f"|cos k - cos phase| = {abs(denom):.3g} is below the pole guard {pole_guard:g}"
        )
    return params.gamma0 * np.sin(params.phase) / denom


def single_spectrum(params: ModelParams):
    """Sorted single-excitation eigenpairs (a :class:`SpectrumResult` with ``k = 1``)."""
    from .hamiltonian import build_kphoton_hardcore
    from .spectra import diagonalize

    return diagonalize(build_kphoton_hardcore(params, 1))
