"""Command line front end.

Exit codes: 0 success, 2 unreadable input, 3 infeasible problem, 4 solver
failure, 5 invalid configuration. Failures print a one-line JSON object
``{"error": ..., "code": ..., "message": ...}`` on standard error.
"""

import argparse
import json
import logging
import sys
from dataclasses import fields, replace

from .errors import ConfigError, ParseError, StabilizationError
from .fileio import parse_saliency, parse_trajectory, write_csv, write_plan
from .path import crop_window_from_fraction
from .problem import SALIENCY_MODES, StabilizerConfig
from .qp import SolverSettings
from .synth import SynthSpec, generate, quality
from .window import solve_global, solve_windowed

log = logging.getLogger("cinestab")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4
EXIT_CONFIG = 5

WEIGHT_KEYS = ("w0", "w1", "w2", "w3", "w_diag", "w_offdiag", "keystone_ratio_weight",
               "saliency_penalty", "center_weight")
SOLVER_KEYS = tuple(f.name for f in fields(SolverSettings))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser():
    ap = _Parser(prog="stabilize", description="Compute stabilizing corrections for a camera trajectory.")
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", metavar="FILE", help="trajectory file (JSON)")
    src.add_argument("--synth", metavar="FILE", help="synthetic trajectory spec (JSON)")
    ap.add_argument("--crop", type=float, default=0.2, help="crop budget, fraction in (0, 0.5] (default 0.2)")
    ap.add_argument("--margin", type=float, default=None, help="extra window size kept in reserve")
    mode = ap.add_mutually_exclusive_group()
    mode.add_argument("--window", metavar="LW,LS", help="windowed solve with length LW and stride LS")
    mode.add_argument("--global", dest="global_", action="store_true", help="solve all frames at once")
    ap.add_argument("--saliency", metavar="FILE", help="salient points per frame (JSON)")
    ap.add_argument("--saliency-mode", choices=SALIENCY_MODES, default="soft")
    ap.add_argument("--weights", metavar="K=V,...", default="",
                    help=f"weight and solver overrides; keys: {', '.join(WEIGHT_KEYS + SOLVER_KEYS)}")
    ap.add_argument("--seed", type=int, default=None, help="override the seed of --synth")
    ap.add_argument("--width", type=float, default=None, help="frame width in pixels for the crop report")
    ap.add_argument("--out", metavar="FILE", help="plan file to write (default: standard output)")
    ap.add_argument("--csv", metavar="FILE", help="per-frame plot data")
    ap.add_argument("--qp-dump", metavar="FILE", help="write the assembled QP as sparse triplets (global mode)")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def parse_overrides(text):
    """``"w0=100,w3=50"`` to ``({"w0": 100.0, ...}, {solver settings})``."""
    weights, solver = {}, {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"weight override {item!r} is not key=value")
        if key not in WEIGHT_KEYS + SOLVER_KEYS:
            raise ConfigError(f"unknown weight {key!r}")
        try:
            num = float(value)
        except ValueError as exc:
            raise ConfigError(f"weight {key!r} needs a number, got {value!r}") from exc
        if key in SOLVER_KEYS:
            solver[key] = int(num) if key in ("max_iterations", "ruiz_iterations", "refine_steps") else num
        else:
            weights[key] = num
    return weights, solver


def parse_window(text):
    try:
        lw, ls = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"--window expects LW,LS integers, got {text!r}") from exc
    return lw, ls


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc


def load_input(args):
    if args.input:
        return parse_trajectory(_read(args.input)), None
    try:
        doc = json.loads(_read(args.synth))
    except json.JSONDecodeError as exc:
        raise ParseError(f"synth spec: {exc.msg}", line=exc.lineno) from exc
    if args.seed is not None:
        doc["seed"] = args.seed
    try:
        spec = SynthSpec.from_dict(doc)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"synth spec: {exc}") from exc
    path, _ = generate(spec)
    return path, spec


def make_config(args, n):
    weights, solver = parse_overrides(args.weights)
    kw = dict(weights, crop_fraction=args.crop, crop_margin=args.margin, saliency_mode=args.saliency_mode)
    if solver:
        kw["solver"] = replace(SolverSettings(), **solver)
    if args.window:
        kw["window_length"], kw["window_stride"] = parse_window(args.window)
    if args.saliency:
        kw["saliency"] = parse_saliency(_read(args.saliency), n)
    try:
        return StabilizerConfig(**kw)
    except ValueError as exc:
        if isinstance(exc, StabilizationError):
            raise
        raise ConfigError(str(exc)) from exc


def run(args):
    path, spec = load_input(args)
    config = make_config(args, path.n)
    geom = crop_window_from_fraction(config.crop_fraction, path.aspect, config.crop_margin)
    if args.qp_dump:
        from .problem import assemble
        from .qp import dump_triplets

        with open(args.qp_dump, "w", encoding="utf-8") as fh:
            dump_triplets(assemble(path, geom, config).qp, fh)
    if args.window:
        plan = solve_windowed(path, geom, config)
    elif args.global_ or path.n <= config.window_length:
        plan = solve_global(path, geom, config)
    else:
        plan = solve_windowed(path, geom, config)
    report = quality(plan, path)
    extra = {"synth": spec.to_dict()} if spec is not None else None
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_plan(fh, plan, config, report, width=args.width, extra=extra)
    else:
        write_plan(sys.stdout, plan, config, report, width=args.width, extra=extra)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            write_csv(fh, plan, path)
    return EXIT_OK


def _report(exc, code):
    payload = {"error": type(exc).__name__, "code": code, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        return _report(exc, EXIT_CONFIG)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except StabilizationError as exc:
        return _report(exc, exc.exit_code)
    except OSError as exc:
        return _report(exc, EXIT_PARSE)


if __name__ == "__main__":
    sys.exit(main())
