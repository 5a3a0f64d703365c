"""Command-line front end.

Commands: ``sample``, ``validate``, ``coeffs``, ``solve``, ``roundtrip``,
``explicit``.  Every run writes exactly one ``manifest.json`` into the output
directory recording the command, input hashes, the config snapshot, tool
version, wall time and exit status.  Exit codes: 0 success, 1 domain failure
(invalid frame, homotopy failure), 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import fieldio, grid as tg, jsonio, reconstruct, solver
from .errors import (DegenerateE2, ExplicitCaseG33Zero, GridMismatch,
                     HomotopyFailed, InvalidFrame, LinearSolveFailed,
                     LineSearchFailed, NonzeroMeanU, NotExplicitCase,
                     PeriodicityCheckFailed, SingularMatrix, TorusMAError,
                     UnnormalizedF)
from .frames import (GroupCase, frame_from_dict, frame_to_dict,
                     sample_admissible, validate)
from .macoeffs import (check_hypotheses, coefficients, coefficients_from_dict,
                       coefficients_to_dict)
from .solver import SolverConfig

_USAGE_ERRORS = (ValueError, OSError, json.JSONDecodeError, GridMismatch,
                 NotExplicitCase, UnnormalizedF)
_DOMAIN_ERRORS = (InvalidFrame, SingularMatrix, HomotopyFailed,
                  ExplicitCaseG33Zero, DegenerateE2, NonzeroMeanU,
                  LineSearchFailed, LinearSolveFailed, PeriodicityCheckFailed)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Run:
    """Collects inputs/outputs of one command for the manifest."""

    def __init__(self, command: str, out_dir: Path):
        self.command = command
        self.out_dir = out_dir
        self.inputs: dict[str, str] = {}
        self.config: dict = {}
        self.started = time.perf_counter()

    def read_json(self, path: str):
        p = Path(path)
        data = json.loads(p.read_text(encoding="utf-8"))
        self.inputs[str(p)] = _sha256(p)
        return data

    def read_field(self, path: str) -> tg.TorusField:
        p = Path(path)
        f = fieldio.load_field(str(p))
        self.inputs[str(p)] = _sha256(p)
        self.inputs[str(p) + ".meta.json"] = _sha256(Path(str(p) + ".meta.json"))
        return f

    def write_manifest(self, exit_status: int) -> None:
        manifest = {
            "command": self.command,
            "version": __version__,
            "inputs": self.inputs,
            "config": self.config,
            "wall_time_s": time.perf_counter() - self.started,
            "exit_status": exit_status,
        }
        self.out_dir.mkdir(parents=True, exist_ok=True)
        jsonio.dump(manifest, self.out_dir / "manifest.json")


def _emit(run: _Run, name: str, report: dict) -> None:
    jsonio.dump(report, run.out_dir / name)
    sys.stdout.write(jsonio.dumps(report))


def _validation_dict(rep) -> dict:
    return {
        "valid": rep.valid,
        "violations": [
            {"constraint": name, "value": value, "tolerance": tol}
            for name, value, tol in rep.violations
        ],
        "warnings": list(rep.warnings),
    }


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        n1, n2 = text.lower().split("x")
        return int(n1), int(n2)
    except Exception as exc:
        raise ValueError(f"--grid expects N1xN2, got {text!r}") from exc


def _build_config(args, run: _Run) -> SolverConfig:
    cfg_dict = {}
    if getattr(args, "config", None):
        cfg_dict = run.read_json(args.config)
    cfg = SolverConfig.from_dict(cfg_dict)
    if getattr(args, "grid", None):
        n1, n2 = _parse_grid(args.grid)
        cfg = SolverConfig.from_dict({**cfg.to_dict(), "n1": n1, "n2": n2})
    if getattr(args, "backend", None):
        cfg = SolverConfig.from_dict({**cfg.to_dict(), "backend": args.backend})
    run.config["solver"] = cfg.to_dict()
    return cfg


def _build_F(args, run: _Run, gr: tg.TorusGrid, normalize: bool = True):
    """Right-hand-side field from --f-modes (generator) or --f-field (file)."""
    if getattr(args, "f_modes", None):
        modes = run.read_json(args.f_modes)
        if not isinstance(modes, list):
            raise ValueError("--f-modes file must hold a JSON list of modes")
        raw = tg.field_from_modes(gr, modes)
    elif getattr(args, "f_field", None):
        raw = run.read_field(args.f_field)
        if raw.grid != gr:
            raise GridMismatch(
                f"F field is {raw.grid.shape} but the run requests {gr.shape}")
    else:
        raise ValueError("one of --f-modes or --f-field is required")
    if not normalize:
        return raw, 0.0
    F = tg.normalize_F(raw)
    shift = float(raw.values[0, 0] - F.values[0, 0])
    return F, shift


def _save_field_outputs(run: _Run, name: str, f: tg.TorusField, csv: bool) -> None:
    fieldio.save_field(str(run.out_dir / f"{name}.f64"), f)
    if csv:
        fieldio.save_csv(str(run.out_dir / f"{name}.csv"), f)


def _cmd_sample(args, run: _Run) -> int:
    spec = sample_admissible(GroupCase(args.case), args.seed)
    record = frame_to_dict(spec)
    run.config["seed"] = args.seed
    _emit(run, "frame.json", record)
    return 0


def _cmd_validate(args, run: _Run) -> int:
    spec = frame_from_dict(run.read_json(args.frame))
    rep = validate(spec)
    _emit(run, "validation_report.json", _validation_dict(rep))
    return 0 if rep.valid else 1


def _cmd_coeffs(args, run: _Run) -> int:
    spec = frame_from_dict(run.read_json(args.frame))
    try:
        c = coefficients(spec)
    except ExplicitCaseG33Zero as exc:
        sys.stderr.write(f"error: {exc}; run the 'explicit' command instead\n")
        return 1
    record = coefficients_to_dict(c)
    record["identity_b_defect"] = c.B11 * c.B22 - c.B12**2 - c.D
    record["identity_c_defect"] = c.C11 * c.C22 - c.C12**2 - c.E1 - c.E2
    _emit(run, "coefficients.json", record)
    return 0


def _cmd_solve(args, run: _Run) -> int:
    c = coefficients_from_dict(run.read_json(args.coeffs))
    cfg = _build_config(args, run)
    F, shift = _build_F(args, run, cfg.grid)
    run.config["normalize_shift"] = shift
    u, report = solver.continuity_solve(c, F, cfg)
    _save_field_outputs(run, "u", u, args.csv)
    _emit(run, "solve_report.json", report.to_dict())
    return 0


def _cmd_roundtrip(args, run: _Run) -> int:
    spec = frame_from_dict(run.read_json(args.frame))
    rep = validate(spec)
    if not rep.valid:
        _emit(run, "validation_report.json", _validation_dict(rep))
        return 1
    c = coefficients(spec)
    cfg = _build_config(args, run)
    F, shift = _build_F(args, run, cfg.grid)
    run.config["normalize_shift"] = shift
    u, solve_report = solver.continuity_solve(c, F, cfg)
    a = reconstruct.one_form(u, spec, cfg.backend)
    residuals = reconstruct.system_residuals(a, u, spec, F, cfg.backend)
    _save_field_outputs(run, "u", u, args.csv)
    for name, f in (("a1", a.a1), ("a2", a.a2), ("a3", a.a3), ("a4", a.a4)):
        _save_field_outputs(run, name, f, args.csv)
    record = residuals.to_dict()
    if a.wrap_defects is not None:
        record["wrap_defects"] = list(a.wrap_defects)
    record["solve"] = solve_report.to_dict()
    record["hypotheses"] = _validation_dict(check_hypotheses(c))
    _emit(run, "roundtrip_report.json", record)
    return 0


def _cmd_explicit(args, run: _Run) -> int:
    spec = frame_from_dict(run.read_json(args.frame))
    gr = tg.TorusGrid(*_parse_grid(args.grid)) if args.grid else tg.TorusGrid(64, 64)
    # generated F is normalized; a field file is taken as-is so the exactness
    # certificate reflects the data
    F, shift = _build_F(args, run, gr, normalize=bool(args.f_modes))
    run.config["normalize_shift"] = shift
    (p, q), report = reconstruct.nil_explicit_g33zero(spec, F)
    _save_field_outputs(run, "p", p, args.csv)
    _save_field_outputs(run, "q", q, args.csv)
    record = report.to_dict()
    record["mean_p"] = tg.integral_mean(p)
    _emit(run, "explicit_report.json", record)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--csv", action="store_true",
                        help="also export fields as x1,x2,value CSV")

    fargs = argparse.ArgumentParser(add_help=False)
    fgroup = fargs.add_mutually_exclusive_group(required=True)
    fgroup.add_argument("--f-modes", help="JSON list of {k1,k2,amp,phase} cosine modes")
    fgroup.add_argument("--f-field", help="raw float64 field file (with .meta.json sidecar)")

    solve_common = argparse.ArgumentParser(add_help=False)
    solve_common.add_argument("--config", help="solver config JSON")
    solve_common.add_argument("--grid", help="grid size N1xN2 (overrides config)")
    solve_common.add_argument("--backend", choices=list(tg.BACKENDS),
                              help="derivative backend (overrides config)")

    p = argparse.ArgumentParser(prog="torusma", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", parents=[common], help="draw an admissible frame")
    sp.add_argument("--case", choices=[c.value for c in GroupCase], required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(handler=_cmd_sample)

    vp = sub.add_parser("validate", parents=[common], help="check frame constraints")
    vp.add_argument("frame", help="frame JSON file")
    vp.set_defaults(handler=_cmd_validate)

    cp = sub.add_parser("coeffs", parents=[common],
                        help="extract Monge-Ampere coefficients from a frame")
    cp.add_argument("frame", help="frame JSON file")
    cp.set_defaults(handler=_cmd_coeffs)

    so = sub.add_parser("solve", parents=[common, fargs, solve_common],
                        help="solve the reduced equation for given coefficients")
    so.add_argument("--coeffs", required=True, help="coefficient JSON file")
    so.set_defaults(handler=_cmd_solve)

    rt = sub.add_parser("roundtrip", parents=[common, fargs, solve_common],
                        help="solve, reconstruct the 1-form, verify the system")
    rt.add_argument("--frame", required=True, help="frame JSON file")
    rt.set_defaults(handler=_cmd_roundtrip)

    ep = sub.add_parser("explicit", parents=[common, fargs],
                        help="explicit two-form solution for G^3_3 = 0 nil frames")
    ep.add_argument("--frame", required=True, help="frame JSON file")
    ep.add_argument("--grid", help="grid size N1xN2 for generated F (default 64x64)")
    ep.set_defaults(handler=_cmd_explicit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run = _Run(args.command, Path(args.out))
    try:
        status = args.handler(args, run)
    except _DOMAIN_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        status = 1
    except _USAGE_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        status = 2
    run.write_manifest(status)
    return status


if __name__ == "__main__":
    sys.exit(main())
