"""Command-line front end.

Exit codes: 0 success, 2 invalid arguments, 1 computational failure.
Angles are in radians.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict

from . import fock
from .closedform import limits, mean_sq_photon, qfi_dsv
from .core import SIGMA_VAC, DsvParams, error_ellipse, mean_photon, phase_sensitive_param
from .sweep import (
    GridSpec,
    SweepSpec,
    format_float,
    grid_density,
    render,
    sweep_nbar,
    sweep_phase,
    to_json,
)

ORACLE_RTOL = 1e-6


class UsageError(Exception):
    pass


def _float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return v


def _pos_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _float_list(text: str) -> list[float]:
    return [_float(t.strip()) for t in text.split(",") if t.strip()]


def _state_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=_float, default=0.0, help="displacement magnitude |alpha|")
    p.add_argument("--phi", type=_float, default=0.0, help="displacement phase phi (rad)")
    p.add_argument("--r", type=_float, default=0.0, help="squeezing strength r")
    p.add_argument("--theta", type=_float, default=0.0, help="squeezing phase theta (rad)")
    p.add_argument("--phase", type=_float, default=None,
                   help="set phi - theta/2 directly (phi := PHASE, theta := 0); "
                        "overrides --phi/--theta")


def _measurements_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--measurements", type=_pos_int, default=1, help="number of measurements M")


def _output_flags(p: argparse.ArgumentParser, formats: list[str], default: str) -> None:
    p.add_argument("--format", choices=formats, default=default, help="output format")
    p.add_argument("--output", default="-", help="output file ('-' for stdout)")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="dsvmet",
        description="Phase-estimation limits of displaced squeezed vacuum probes.",
        formatter_class=fmt,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("limits", help="QFI, photon moments and accuracy limits", formatter_class=fmt)
    _state_flags(p)
    _measurements_flag(p)
    _output_flags(p, ["json", "text"], "json")

    p = sub.add_parser("sweep-phase", help="limits against phi - theta/2", formatter_class=fmt)
    p.add_argument("--alpha", type=_float, default=2.0, help="displacement magnitude |alpha|")
    p.add_argument("--r", type=_float, default=0.5, help="squeezing strength r")
    p.add_argument("--start", type=_float, default=-1.5 * math.pi, help="first phase (rad)")
    p.add_argument("--stop", type=_float, default=1.5 * math.pi, help="last phase (rad)")
    p.add_argument("--points", type=_pos_int, default=601, help="number of phase samples")
    _measurements_flag(p)
    _output_flags(p, ["csv", "json"], "csv")

    p = sub.add_parser("sweep-nbar", help="Cramer-Rao limit against mean photon number",
                       formatter_class=fmt)
    p.add_argument("--phase", type=_float, default=math.pi / 2, help="phi - theta/2 (rad)")
    p.add_argument("--start", type=_float, default=0.0, help="first mean photon number")
    p.add_argument("--stop", type=_float, default=100.0, help="last mean photon number")
    p.add_argument("--points", type=_pos_int, default=1001, help="number of n_bar samples")
    p.add_argument("--r-values", type=_float_list, default="0,0.5,1,1.5,2",
                   help="comma-separated squeezing strengths for the constant-r lines")
    _measurements_flag(p)
    _output_flags(p, ["csv", "json"], "csv")

    p = sub.add_parser("grid", help="density grid over (|alpha|, r) and its optimum",
                       formatter_class=fmt)
    p.add_argument("--alpha-max", type=_float, default=10.0, help="largest |alpha|")
    p.add_argument("--r-max", type=_float, default=2.5, help="largest r")
    p.add_argument("--alpha-points", type=_pos_int, default=201, help="|alpha| samples")
    p.add_argument("--r-points", type=_pos_int, default=201, help="r samples")
    p.add_argument("--phase", type=_float, default=math.pi / 2, help="phi - theta/2 (rad)")
    _measurements_flag(p)
    _output_flags(p, ["json", "csv"], "json")

    p = sub.add_parser("oracle", help="compare closed forms with the Fock-space oracle",
                       formatter_class=fmt)
    _state_flags(p)
    p.add_argument("--dim", type=_pos_int, default=None,
                   help="truncation dimension; chosen from --tail-tol when omitted")
    p.add_argument("--tail-tol", type=_float, default=fock.DEFAULT_TAIL_TOL,
                   help="largest acceptable truncated probability")
    p.add_argument("--dphi", type=_float, default=1e-4, help="finite phase step for the fidelity QFI")
    _output_flags(p, ["json", "text"], "json")

    p = sub.add_parser("ellipse", help="quadrature error ellipse (x = (a + a^dag)/2)",
                       formatter_class=fmt)
    _state_flags(p)
    _output_flags(p, ["json", "text"], "json")
    return parser


def _params(args) -> DsvParams:
    try:
        if args.phase is not None:
            return DsvParams.from_phase(args.alpha, args.r, args.phase)
        return DsvParams(alpha_mag=args.alpha, phi=args.phi, r=args.r, theta=args.theta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _text(d: dict) -> str:
    lines = []
    for k, v in d.items():
        lines.append(f"{k} = {format_float(v) if isinstance(v, float) else v}")
    return "\n".join(lines) + "\n"


def _scalar_output(d: dict, fmt: str) -> str:
    return to_json(d) if fmt == "json" else _text(d)


def _params_dict(p: DsvParams) -> dict:
    return {**asdict(p), "phase": phase_sensitive_param(p)}


def cmd_limits(args) -> str:
    p = _params(args)
    return _scalar_output({**_params_dict(p), **limits(p, args.measurements).to_dict()}, args.format)


def cmd_sweep_phase(args) -> str:
    try:
        spec = SweepSpec("phase", args.start, args.stop, args.points,
                         DsvParams(alpha_mag=args.alpha, r=args.r), args.measurements)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return render(sweep_phase(spec), args.format)


def cmd_sweep_nbar(args) -> str:
    r_values = args.r_values
    if isinstance(r_values, str):
        r_values = _float_list(r_values)
    try:
        spec = SweepSpec("n_bar", args.start, args.stop, args.points,
                         DsvParams.from_phase(0.0, 0.0, args.phase), args.measurements)
        table = sweep_nbar(spec, r_values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return render(table, args.format)


def cmd_grid(args) -> str:
    try:
        spec = GridSpec(args.alpha_max, args.r_max, args.alpha_points, args.r_points,
                        args.phase, args.measurements)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return render(grid_density(spec), args.format)


def _rel(a: float, b: float) -> float:
    # absolute difference when the reference is zero
    return abs(a - b) / abs(b) if b != 0 else abs(a - b)


class OracleMismatch(Exception):
    def __init__(self, text: str, failing: list[str]):
        super().__init__(text)
        self.text = text
        self.failing = failing


def cmd_oracle(args) -> str:
    p = _params(args)
    if not 0 < args.tail_tol <= 1e-4:
        raise UsageError(f"--tail-tol must lie in (0, 1e-4], got {args.tail_tol}")
    if not 1e-6 <= args.dphi <= 1e-2:
        raise UsageError(f"--dphi must lie in [1e-6, 1e-2], got {args.dphi}")
    if args.dim is not None and args.dim < 2:
        raise UsageError("--dim must be >= 2")
    if args.dim is None:
        state = fock.auto_state(p, args.tail_tol)
    else:
        state = fock.dsv_state(p, args.dim, args.tail_tol)
    dim = state.dim
    mean, second, var = fock.photon_moments(state)
    qfi_fid = fock.qfi_fidelity(p, args.dphi, dim, args.tail_tol)
    closed = {"n_bar": mean_photon(p), "n_sq_bar": mean_sq_photon(p), "qfi": qfi_dsv(p)}
    checks = {
        "n_bar": (closed["n_bar"], mean),
        "n_sq_bar": (closed["n_sq_bar"], second),
        "qfi_variance": (closed["qfi"], var),
        "qfi_fidelity": (closed["qfi"], qfi_fid),
    }
    report = {**_params_dict(p), "dim": dim, "tail_mass": state.tail_mass,
              "tail_tol": args.tail_tol, "dphi": args.dphi}
    failing = []
    for name, (ref, num) in checks.items():
        rel = _rel(num, ref)
        report[f"{name}_closed"] = ref
        report[f"{name}_oracle"] = num
        report[f"{name}_reldiff"] = rel
        if not rel <= ORACLE_RTOL:
            failing.append(name)
    report["tolerance"] = ORACLE_RTOL
    report["ok"] = not failing
    text = _scalar_output(report, args.format)
    if failing:
        raise OracleMismatch(text, failing)
    return text


def cmd_ellipse(args) -> str:
    p = _params(args)
    e = error_ellipse(p)
    d = {
        **_params_dict(p),
        "center_re": e.center.real,
        "center_im": e.center.imag,
        "semi_major": e.semi_major,
        "semi_minor": e.semi_minor,
        "orientation": e.orientation,
        "sigma_vac": SIGMA_VAC,
        "quadrature": "x = (a + a^dag)/2",
    }
    return _scalar_output(d, args.format)


COMMANDS = {
    "limits": cmd_limits,
    "sweep-phase": cmd_sweep_phase,
    "sweep-nbar": cmd_sweep_nbar,
    "grid": cmd_grid,
    "oracle": cmd_oracle,
    "ellipse": cmd_ellipse,
}


def _write(text: str, output: str) -> None:
    if output == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(output, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = COMMANDS[args.command](args)
        _write(text, args.output)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dsvmet {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OracleMismatch as exc:
        _write(exc.text, args.output)
        print(f"dsvmet oracle: mismatch above {ORACLE_RTOL:g} in: {', '.join(exc.failing)}",
              file=sys.stderr)
        return 1
    except fock.TruncationError as exc:
        print(f"dsvmet {args.command}: truncation failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"dsvmet {args.command}: cannot write {args.output}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        # e.g. a malformed DSVMET_THREADS
        print(f"dsvmet {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())
