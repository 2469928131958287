"""File formats for spectra, state records, probability cubes and scan summaries.

Tables are CSV whose first line is a ``# config_hash=...`` comment followed by
the header row. Floats are written with ``repr``, the shortest decimal string
that round-trips to the same double. Cubes are raw binary: a 24-byte header
(``b"WGEDCUBE"``, uint32 ``N``, uint32 ``k``, float64 normalization), then
``N**3`` little-endian float64 values in a-major (C) order. Every file is
written to a temporary name in the target directory and renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import NotSymmetricError
from .observables import ProbabilityCube

SPECTRUM_HEADER = ("index", "re_eps", "im_eps", "decay_rate", "ipr", "entropy")
CUBE_MAGIC = b"WGEDCUBE"
CUBE_HEADER = struct.Struct("<8sIId")


def write_atomic(path, data) -> Path:
    """Write ``data`` (str or bytes) to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode() if isinstance(data, str) else bytes(data)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def fmt(value) -> str:
    """Shortest round-trip decimal for floats; plain ``str`` otherwise."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if value is None:
        return ""
    return str(value)


def render_csv(header, rows, config_hash: str) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows, config_hash: str) -> Path:
    return write_atomic(path, render_csv(header, rows, config_hash))


def read_csv(path) -> tuple:
    """``(config_hash, rows)``; rows are dicts of strings."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# config_hash="):
            raise ValueError(f"{path} lacks the config hash line")
        return first.split("=", 1)[1], list(csv.DictReader(fh))


def spectrum_rows(energies, ipr, entropy):
    for i, eps in enumerate(energies):
        yield (i, float(eps.real), float(eps.imag), float(-eps.imag), float(ipr[i]), float(entropy[i]))


def write_json(path, payload: dict) -> Path:
    return write_atomic(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else str(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def cube_bytes(cube: ProbabilityCube, k: int = 3) -> bytes:
    values = np.ascontiguousarray(cube.values, dtype="<f8")
    return CUBE_HEADER.pack(CUBE_MAGIC, cube.n, k, cube.normalization) + values.tobytes()


def write_cube(path, cube: ProbabilityCube, k: int = 3) -> Path:
    return write_atomic(path, cube_bytes(cube, k))


def read_cube(path, atol: float = 1e-12) -> ProbabilityCube:
    """Load a cube file, checking its size and permutation symmetry."""
    raw = Path(path).read_bytes()
    magic, n, k, norm = CUBE_HEADER.unpack_from(raw)
    if magic != CUBE_MAGIC:
        raise ValueError(f"{path} is not a cube file")
    expected = CUBE_HEADER.size + 8 * n**3
    if len(raw) != expected:
        raise ValueError(f"{path} has {len(raw)} bytes, expected {expected}")
    values = np.frombuffer(raw, dtype="<f8", offset=CUBE_HEADER.size).reshape(n, n, n)
    cube = ProbabilityCube(n=n, values=values.astype(float))
    if not cube.is_symmetric(atol):
        raise NotSymmetricError(f"{path} holds a cube that is not permutation symmetric")
    if abs(cube.normalization - norm) > 1e-9 * max(1.0, abs(norm)):
        raise ValueError(f"{path} normalization {cube.normalization} differs from header {norm}")
    return cube
