"""Command-line driver.

Subcommands: ``spectrum``, ``state``, ``classify``, ``scan`` and
``oracle-check``. Settings come from built-in defaults, then a JSON config
file (``--config``), then explicit flags. Every output embeds the hash of the
resolved config. ``WAVEGUIDE_ED_THREADS`` (or ``--threads``) caps the BLAS
thread pool.
"""

from __future__ import annotations

import argparse
import ast
import json
import logging
import math
import operator
import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import outputs
from .cache import config_hash, hardcore_spectrum
from .classifier import (
    Exotic,
    Radiance,
    Region,
    SpectrumLabels,
    classify_spectrum,
    load_thresholds,
    merge_thresholds,
)
from .errors import SolverFailure, WaveguideError
from .hamiltonian import build_kphoton_hardcore
from .model import ModelParams
from .observables import batch_entropy, batch_ipr, marginal, probability_cube, spectator_gather

log = logging.getLogger("waveguide_ed")

LARGE_BYTES = 1 << 30
THREADS_ENV = "WAVEGUIDE_ED_THREADS"
EXIT_FAILURE = 1
EXIT_NEEDS_LARGE = 3


@dataclass
class RunConfig:
    n_atoms: int = 12
    phase: float = 0.02
    gamma0: float = 1.0
    omega0_offset: float = 0.0
    k: int = 3
    large: bool = False
    residual_tol: float = 1e-8
    output_dir: str = "."
    cache_dir: Optional[str] = None
    thresholds: dict = field(default_factory=dict)
    dump_matrix: Optional[str] = None

    # settings that do not change any computed number
    _LOCAL = ("large", "output_dir", "cache_dir", "dump_matrix")

    def params(self) -> ModelParams:
        return ModelParams(self.n_atoms, self.phase, self.gamma0, self.omega0_offset)

    def resolved_thresholds(self) -> dict:
        return merge_thresholds(load_thresholds(), self.thresholds)

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["thresholds"] = self.resolved_thresholds()
        return payload

    @property
    def hash(self) -> str:
        payload = {k: v for k, v in self.to_dict().items() if k not in self._LOCAL}
        return config_hash(payload)

    @classmethod
    def from_sources(cls, file_values: Optional[dict] = None, flags: Optional[dict] = None) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        merged = {}
        for source in (file_values or {}, flags or {}):
            unknown = set(source) - known
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            for key, value in source.items():
                if value is None:
                    continue
                if key == "thresholds":
                    value = merge_thresholds(merged.get("thresholds", {}), value)
                merged[key] = value
        return cls(**merged)


def predicted_solve_bytes(n_atoms: int, k: int) -> int:
    """Rough peak memory of the dense parity-blocked eigensolve (matrix, workspace and kept vectors)."""
    m = math.comb(n_atoms, k)
    big = (m + 1) // 2 if m > 1 else m
    small = m - big
    return 16 * (3 * big * big + big * big + small * small)


class NeedsLargeFlag(WaveguideError):
    pass


def _check_size(cfg: RunConfig) -> None:
    need = predicted_solve_bytes(cfg.n_atoms, cfg.k)
    if need > LARGE_BYTES and not cfg.large:
        raise NeedsLargeFlag(
            f"predicted memory {need / 2**30:.2f} GiB exceeds 1 GiB; pass --large to run anyway"
        )


def _spectrum(cfg: RunConfig):
    _check_size(cfg)
    params = cfg.params()
    if cfg.dump_matrix:
        path = build_kphoton_hardcore(params, cfg.k).dump(cfg.dump_matrix)
        log.info("wrote dense Hamiltonian to %s", path)
    return hardcore_spectrum(params, cfg.k, cfg.cache_dir, residual_tol=cfg.residual_tol)


def _singles(cfg: RunConfig):
    return hardcore_spectrum(cfg.params(), 1, residual_tol=cfg.residual_tol)


def _out(cfg: RunConfig, name: str) -> Path:
    return Path(cfg.output_dir) / name


def _write_manifest(cfg: RunConfig, command: str, extra: Optional[dict] = None) -> Path:
    payload = {
        "command": command,
        "version": __version__,
        "config": cfg.to_dict(),
        "config_hash": cfg.hash,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    payload.update(extra or {})
    return outputs.write_json(_out(cfg, f"{command}.run.json"), payload)


def _observables(result, batch_size: int = 256):
    n = len(result)
    ipr = np.empty(n)
    entropy = np.full(n, math.nan)
    table = spectator_gather(result.basis) if result.k >= 2 else None
    for idx, v in result.iter_vectors(batch_size):
        ipr[idx] = batch_ipr(v)
        if table is not None:
            entropy[idx], _ = batch_entropy(v, result.basis, table)
    return ipr, entropy


def cmd_spectrum(cfg: RunConfig) -> Path:
    result = _spectrum(cfg)
    ipr, entropy = _observables(result)
    path = outputs.write_csv(
        _out(cfg, "spectrum.csv"), outputs.SPECTRUM_HEADER,
        outputs.spectrum_rows(result.energies, ipr, entropy), cfg.hash,
    )
    _write_manifest(cfg, "spectrum", {"diagnostics": result.diagnostics, "rows": len(result)})
    return path


LABEL_HEADER = (
    "index", "re_eps", "im_eps", "radiance", "region", "n_edge", "n_centre", "n_free", "ambiguous",
    "trimer", "corner", "trimer_edge", "asymmetric", "trimer_xi", "diagonal_mass", "corner_xi",
    "corner_mass", "elongation", "edge_mass", "asymmetry", "ipr", "entropy", "fit_quality",
    "fermionic_overlap", "symmetric_overlap",
)


def _label_rows(result, labels: SpectrumLabels):
    f = labels.features
    for row, (i, lab) in enumerate(zip(labels.indices, labels.labels)):
        eps = result.energies[i]
        loc = lab.localisation
        counts = (loc.n_edge, loc.n_centre, loc.n_free) if loc else (None, None, None)
        yield (
            int(i), float(eps.real), float(eps.imag), lab.radiance.value, lab.region.value, *counts,
            lab.ambiguous, *(e in lab.exotic for e in (Exotic.TRIMER, Exotic.CORNER, Exotic.TRIMER_EDGE, Exotic.ASYMMETRIC)),
            *(float(f[key][row]) for key in LABEL_HEADER[13:]),
        )


def _classify(cfg: RunConfig, indices=None):
    if cfg.k != 3:
        raise ValueError("classification is defined for three-photon states (k = 3)")
    result = _spectrum(cfg)
    labels = classify_spectrum(result, _singles(cfg), cfg.resolved_thresholds(), indices=indices)
    return result, labels


def cmd_classify(cfg: RunConfig) -> Path:
    result, labels = _classify(cfg)
    path = outputs.write_csv(_out(cfg, "labels.csv"), LABEL_HEADER, _label_rows(result, labels), cfg.hash)
    _write_manifest(cfg, "classify", {"summary": summarize(result, labels), "rotated_pairs": labels.pairs})
    return path


def cmd_state(cfg: RunConfig, index: int) -> tuple:
    from .ansatz import ansatz_overlap

    result = _spectrum(cfg)
    pair = result[index]
    basis = result.basis
    payload = {
        "config_hash": cfg.hash,
        "index": index,
        "energy_per_photon": pair.energy_per_photon,
        "raw_energy": pair.raw_energy,
        "decay_rate": -pair.energy_per_photon.imag,
        "residual": pair.residual,
        "marginal": marginal(pair.vector, basis),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    cube_path = None
    if cfg.k == 3:
        singles = _singles(cfg)
        labels = classify_spectrum(result, singles, cfg.resolved_thresholds(), indices=[index])
        lab = labels.labels[0]
        top3 = np.argsort(-singles.energies.imag)[:3]
        payload["labels"] = {
            "radiance": lab.radiance.value,
            "region": lab.region.value,
            "localisation": asdict(lab.localisation) if lab.localisation else None,
            "exotic": sorted(e.value for e in lab.exotic),
            "rotated_with_partner": any(index in p for p in labels.pairs),
        }
        payload["features"] = {k: v[0] for k, v in labels.features.items()}
        payload["ansatz"] = {
            "factor_indices": top3,
            "fermionic_overlap": ansatz_overlap(pair.vector, singles, top3, basis, "fermionic"),
            "symmetric_overlap": ansatz_overlap(pair.vector, singles, top3, basis, "symmetric"),
            "best_fermionic_overlap": labels.features["fermionic_overlap"][0],
            "best_symmetric_overlap": labels.features["symmetric_overlap"][0],
            "factor_fit_quality": labels.features["fit_quality"][0],
        }
        cube_path = outputs.write_cube(_out(cfg, f"state_{index}.cube"), probability_cube(pair.vector, basis))
        payload["cube_file"] = cube_path.name
    json_path = outputs.write_json(_out(cfg, f"state_{index}.json"), payload)
    return json_path, cube_path


SUMMARY_HEADER = (
    "n_atoms", "phase", "status", "states",
    *(r.value for r in Radiance), *(r.value for r in Region), "ambiguous",
    *(e.value for e in Exotic), "min_decay_rate", "max_ipr", "config_hash", "error",
)


def summarize(result, labels: SpectrumLabels) -> dict:
    out = {"states": len(labels.labels)}
    for r in Radiance:
        out[r.value] = sum(lab.radiance is r for lab in labels.labels)
    for r in Region:
        out[r.value] = sum(lab.region is r for lab in labels.labels)
    out["ambiguous"] = sum(lab.ambiguous for lab in labels.labels)
    for e in Exotic:
        out[e.value] = labels.count(e)
    out["min_decay_rate"] = float(np.min(-result.energies[labels.indices].imag))
    out["max_ipr"] = float(np.max(labels.features["ipr"]))
    return out


def cmd_scan(cfg: RunConfig, phases=None, sizes=None) -> Path:
    points = [replace(cfg, phase=p) for p in phases] if phases else [replace(cfg, n_atoms=n) for n in sizes or []]
    if not points:
        raise ValueError("scan needs a non-empty list of phases or sizes")
    rows = []
    for point in points:
        row = {"n_atoms": point.n_atoms, "phase": float(point.phase), "config_hash": point.hash}
        try:
            result, labels = _classify(point)
            row.update(summarize(result, labels), status="ok")
        except (WaveguideError, ValueError, MemoryError) as exc:
            log.error("scan point N=%d phase=%g failed: %s", point.n_atoms, point.phase, exc)
            row.update(status="error", error=f"{type(exc).__name__}: {exc}")
        rows.append([row.get(key) for key in SUMMARY_HEADER])
    path = outputs.write_csv(_out(cfg, "scan.csv"), SUMMARY_HEADER, rows, cfg.hash)
    _write_manifest(cfg, "scan", {"points": [p.hash for p in points]})
    return path


def cmd_oracle_check(cfg: RunConfig, chi: float = 1e7, tol_hardcore: float = 1e-4,
                     tol_free: float = 1e-10) -> tuple:
    """Compare the production spectrum against the brute-force references; ``(ok, report path)``."""
    from .oracle import full_basis_reference_spectrum, multiset_distance, noninteracting_triples
    from .spectra import diagonalize

    params = cfg.params()
    hard = diagonalize(build_kphoton_hardcore(params, cfg.k), residual_tol=cfg.residual_tol)
    # doubly occupied states sit near chi; keep the band below chi / 2
    ref = full_basis_reference_spectrum(params, cfg.k, chi, drop_above=chi / 2)
    singles = diagonalize(build_kphoton_hardcore(params, 1)).energies
    free = full_basis_reference_spectrum(params, cfg.k, 0.0)
    dev_hard = multiset_distance(ref.energies, hard.energies)
    dev_free = multiset_distance(free.energies, noninteracting_triples(singles, cfg.k))
    ok = dev_hard <= tol_hardcore and dev_free <= tol_free
    report = {
        "config_hash": cfg.hash,
        "chi": chi,
        "hardcore_vs_large_chi": {"max_deviation": dev_hard, "tolerance": tol_hardcore},
        "noninteracting_vs_averages": {"max_deviation": dev_free, "tolerance": tol_free},
        "passed": ok,
    }
    return ok, outputs.write_json(_out(cfg, "oracle_check.json"), report)


# ---------------------------------------------------------------------------
# argument parsing

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_phase(text: str) -> float:
    """Float, or a small arithmetic expression using ``pi`` such as ``pi+0.3``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        raise ValueError(f"cannot parse phase {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse phase {text!r}") from exc


def _phase_arg(text: str) -> float:
    try:
        return parse_phase(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with RunConfig keys")
    common.add_argument("--n-atoms", type=int, dest="n_atoms")
    common.add_argument("--phase", type=_phase_arg, help="phi = omega0 d / c; accepts e.g. pi+0.3")
    common.add_argument("--gamma0", type=float)
    common.add_argument("--offset", type=float, dest="omega0_offset")
    common.add_argument("--k", type=int, help="number of excitations (1, 2 or 3)")
    common.add_argument("--large", action="store_const", const=True,
                        help="allow solves predicted to need more than 1 GiB")
    common.add_argument("--residual-tol", type=float, dest="residual_tol")
    common.add_argument("--out", dest="output_dir")
    common.add_argument("--cache-dir", dest="cache_dir")
    common.add_argument("--thresholds", type=Path, help="JSON file overriding classifier thresholds")
    common.add_argument("--dump-matrix", dest="dump_matrix",
                        help="also write the dense Hamiltonian as little-endian complex128")
    common.add_argument("--threads", type=int, help=f"BLAS threads (default: ${THREADS_ENV})")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="waveguide-ed", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="write spectrum.csv")
    st = sub.add_parser("state", parents=[common], help="write state_<i>.json and state_<i>.cube")
    st.add_argument("--index", type=int, required=True)
    sub.add_parser("classify", parents=[common], help="write labels.csv")
    sc = sub.add_parser("scan", parents=[common], help="write scan.csv, one row per parameter point")
    grp = sc.add_mutually_exclusive_group(required=True)
    grp.add_argument("--phases", type=_phase_arg, nargs="+")
    grp.add_argument("--n-list", type=int, nargs="+", dest="n_list")
    oc = sub.add_parser("oracle-check", parents=[common], help="compare against brute-force references")
    oc.add_argument("--chi", type=float, default=1e7)
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    file_values = json.loads(args.config.read_text()) if args.config else {}
    flags = {f.name: getattr(args, f.name, None) for f in fields(RunConfig) if f.name != "thresholds"}
    if args.thresholds:
        flags["thresholds"] = json.loads(args.thresholds.read_text())
    return RunConfig.from_sources(file_values, flags)


def _thread_limit(args):
    from threadpoolctl import threadpool_limits

    count = args.threads or os.environ.get(THREADS_ENV)
    return threadpool_limits(int(count)) if count else threadpool_limits(None)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "scan" and args.n_list is not None and not args.n_list:
        parser.error("scan needs at least one size")
    try:
        cfg = config_from_args(args)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    try:
        with _thread_limit(args):
            if args.command == "spectrum":
                print(cmd_spectrum(cfg))
            elif args.command == "state":
                for path in cmd_state(cfg, args.index):
                    if path is not None:
                        print(path)
            elif args.command == "classify":
                print(cmd_classify(cfg))
            elif args.command == "scan":
                print(cmd_scan(cfg, phases=args.phases, sizes=args.n_list))
            else:
                ok, path = cmd_oracle_check(cfg, chi=args.chi)
                print(path)
                return 0 if ok else EXIT_FAILURE
    except NeedsLargeFlag as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEEDS_LARGE
    except (WaveguideError, SolverFailure, ValueError, IndexError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
