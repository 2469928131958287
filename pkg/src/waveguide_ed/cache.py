"""On-disk cache of hard-core spectra keyed by a hash of the model parameters."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Optional

import numpy as np

from .basis import enumerate_basis
from .errors import SolverFailure
from .hamiltonian import build_kphoton_hardcore
from .model import ModelParams
from .spectra import RESIDUAL_TOL, SpectrumResult, diagonalize

log = logging.getLogger(__name__)

CACHE_FORMAT = 1


def config_hash(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def default_cache_dir() -> Path:
    return Path(os.environ.get("WAVEGUIDE_ED_CACHE", Path.home() / ".cache" / "waveguide_ed"))


def hardcore_spectrum(params: ModelParams, k: int, cache_dir: Optional[Path] = None,
                      residual_tol: float = RESIDUAL_TOL) -> SpectrumResult:
    """Diagonalize the hard-core ``k``-photon Hamiltonian, reusing a cached result when present."""
    basis = enumerate_basis(params.n_atoms, k)
    if cache_dir is None:
        return diagonalize(build_kphoton_hardcore(params, k, basis), residual_tol=residual_tol)
    cache_dir = Path(cache_dir)
    key = config_hash({"params": params.to_dict(), "k": k, "format": CACHE_FORMAT})
    path = cache_dir / f"spectrum_{key}.npz"
    if path.exists():
        log.info("loading cached spectrum %s", path)
        result = SpectrumResult.load(path, params, basis)
        bad = np.flatnonzero(result.residuals > residual_tol)
        if len(bad):
            raise SolverFailure(f"cached spectrum {path} exceeds residual tolerance {residual_tol:g}", indices=bad)
        return result
    result = diagonalize(build_kphoton_hardcore(params, k, basis), residual_tol=residual_tol)
    cache_dir.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp.npz")
    result.save(tmp)
    os.replace(tmp, path)
    return result
