"""Command line entry point: ``dispquant <subcommand> [flags]``.

Exit codes: 0 success, 1 invalid input or spec, 2 invariant violation.
"""
from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

import numpy as np

from .experiments import ExperimentSpec, SpecError, run
from .regularity import DEFAULT_SEED, besov_exponent, box_dimension, dimension_sandwich, lp_blocks
from .spectral import GridField, to_spectral
from .svg import Series, emit_svg
from ._validation import InvariantViolation

EXIT_OK, EXIT_SPEC, EXIT_INVARIANT = 0, 1, 2

CHI_HALF = {"pieces": [["0", "1", 1.0, 0.0]]}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SpecError("<args>", message)


def _globals() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads for independent scenario points")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for random time samplers")
    g.add_argument("--out-dir", default=argparse.SUPPRESS, help="directory for CSV/JSON/SVG artifacts")
    g.add_argument("--config", default=argparse.SUPPRESS, help="JSON file; for 'run' an experiment spec, otherwise flag values")
    return p


def _float_list(text: str) -> list:
    return [v.strip() for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = _globals()
    parser = _Parser(prog="dispquant", description="Talbot effect, fractal dimensions and frame NLS experiments on the torus.", parents=[common])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("talbot", parents=[common], help="evolve step data linearly; exact step output at rational times")
    p.add_argument("--data", help="step-function JSON (file path or inline)")
    p.add_argument("--time", default="1/3", help="'a/q' for t = 2 pi a/q, or a float t")
    p.add_argument("--order", type=int, default=2, help="dispersion order k")
    p.add_argument("--modes", type=int, default=1024, help="spectral cutoff N")
    p.add_argument("--samples", type=int, help="grid size M (default 4N)")
    p.add_argument("--out", help="CSV path for x,re,im,abs2")
    p.add_argument("--svg", action="store_true")

    p = sub.add_parser("diophantine", parents=[common], help="continued fraction expansion of t / 2 pi")
    p.add_argument("--value", action="append", required=False, help="float or p/q; repeatable")
    p.add_argument("--depth", type=int, default=30)

    p = sub.add_parser("dimension", parents=[common], help="box-counting and Hoelder dimension estimates")
    p.add_argument("--input", help="CSV grid (x,re,im) or experiment spec JSON")
    p.add_argument("--scales", help="fit window 'lo,hi' in dyadic levels")
    p.add_argument("--data", help="step-function JSON when no --input is given")
    p.add_argument("--times", type=int, default=10, help="number of screened times")
    p.add_argument("--t-list", help="explicit comma-separated times instead of screened samples")
    p.add_argument("--samples", type=int, default=2**14, help="grid size M")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--density", action="store_true", help="measure |u|^2 instead of Re u, Im u")
    p.add_argument("--svg", action="store_true")

    for name in ("nls", "kdv"):
        p = sub.add_parser(name, parents=[common], help=f"{name.upper()} evolution of step data")
        p.add_argument("--data", help="step-function JSON (file path or inline)")
        if name == "nls":
            p.add_argument("--lambda", dest="lam", type=float, default=1.0)
        p.add_argument("--t-list", default="0.1", help="comma-separated output times")
        p.add_argument("--dt", type=float, default=1e-4)
        p.add_argument("--modes", type=int, default=256)
        p.add_argument("--mollify", type=int, help="Fejer width applied to the data")

    p = sub.add_parser("vfe", parents=[common], help="Schroedinger map / filament run from planar step curvature")
    p.add_argument("--curvature", help="step-function JSON with mean 1 and period 2 pi/3")
    p.add_argument("--mollify", type=int, help="Fejer width for the curvature")
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--t-list", default="0.1", help="comma-separated output times")
    p.add_argument("--modes", type=int, default=2**11, help="grid size M")
    p.add_argument("--svg", action="store_true")

    sub.add_parser("run", parents=[common], help="run an experiment spec given by --config")
    return parser


def _load_json_arg(value: str | None, default=None, what: str = "data"):
    if value is None:
        return default
    path = Path(value)
    text = path.read_text() if path.exists() else value
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(what, f"invalid JSON: {exc}") from None


def _opt(args, name, default=None):
    return getattr(args, name, default)


def _spec(args, scenario, data, times, resolution, svg=False) -> ExperimentSpec:
    out = {}
    if _opt(args, "out_dir"):
        out["dir"] = args.out_dir
    if svg:
        out["svg"] = True
    return ExperimentSpec.from_dict(
        {
            "scenario": scenario,
            "data": data,
            "times": times,
            "resolution": resolution,
            "seed": _opt(args, "seed"),
            "outputs": out,
            "threads": _opt(args, "threads", 1),
        }
    )


def _cmd_talbot(args):
    N = args.modes
    res = {"N": N, "M": args.samples or 4 * N, "k": args.order}
    spec = _spec(args, "talbot", _load_json_arg(args.data, CHI_HALF), {"list": [args.time]}, res, args.svg)
    if args.out and not spec.outputs.get("dir"):
        spec.outputs["dir"] = str(Path(args.out).parent or ".")
    report = run(spec)
    if args.out:
        src = Path(spec.outputs["dir"]) / report.results[0]["file"]
        if src.resolve() != Path(args.out).resolve():
            shutil.copyfile(src, args.out)
    return report.to_dict()


def _cmd_diophantine(args):
    values = args.value or []
    if not values:
        raise SpecError("--value", "at least one value is required")
    spec = _spec(args, "diophantine", {}, {"list": values}, {"depth": args.depth})
    report = run(spec)
    if len(report.results) == 1:
        return report.to_dict()["results"][0]
    return report.to_dict()["results"]


def _window(scales):
    if not scales:
        return None
    try:
        lo, hi = (int(v) for v in scales.split(","))
    except ValueError:
        raise SpecError("--scales", "expected 'lo,hi'") from None
    return lo, hi


def _cmd_dimension(args):
    window = _window(args.scales)
    if args.input:
        text = Path(args.input).read_text()
        if args.input.endswith(".json"):
            report = run(ExperimentSpec.from_json(text))
            return report.to_dict()
        grid = GridField.from_csv(text)
        return _grid_dimension(grid, window, args)
    times = {"list": _float_list(args.t_list)} if args.t_list else {"screened": args.times}
    if "screened" in times and _opt(args, "seed") is None:
        args.seed = DEFAULT_SEED
    scenario = "density" if args.density else ("dispersion" if args.order != 2 else "dimension")
    res = {"M": args.samples, "k": args.order}
    report = run(_spec(args, scenario, _load_json_arg(args.data, CHI_HALF), times, res, args.svg))
    return report.to_dict()


def _grid_dimension(grid: GridField, window, args) -> dict:
    u = grid.samples
    out = {"box_dim": {}}
    est_re = box_dimension(u.real, window)
    out["box_dim"]["re"] = est_re.slope
    if np.any(u.imag):
        out["box_dim"]["im"] = box_dimension(u.imag, window).slope
    blocks = lp_blocks(to_spectral(grid))
    s_inf = besov_exponent(blocks, np.inf)
    s_1 = besov_exponent(blocks, 1)
    out["lower"], out["upper"] = dimension_sandwich(s_inf, s_1)
    out["s_inf"], out["s_1"] = s_inf, s_1
    out["blocks"] = {"j": blocks.j.tolist(), "l1": blocks.l1.tolist(), "l2": blocks.l2.tolist(), "linf": blocks.linf.tolist()}
    out["fit_window"] = list(est_re.scales)
    out_dir = _opt(args, "out_dir")
    if out_dir:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "dimension.json").write_text(json.dumps(out, sort_keys=True, indent=2) + "\n")
        if args.svg:
            lo, hi = est_re.scales
            lev = np.arange(len(est_re.log_counts))
            fit_x = lev[lo:hi + 1]
            coef = np.polyfit(fit_x, est_re.log_counts[lo:hi + 1], 1)
            svg = emit_svg(
                [Series(lev, est_re.log_counts, "log2 N(eps)", "marker"), Series(fit_x, np.polyval(coef, fit_x), f"slope {est_re.slope:.3f}")],
                title="box counting", xlabel="-log2 eps", ylabel="log2 count",
            )
            (d / "dimension.svg").write_text(svg)
    return out


def _times_from(args) -> dict:
    return {"list": _float_list(args.t_list)}


def _cmd_nls(args):
    res = {"N": args.modes, "dt": args.dt, "lambda": args.lam}
    if args.mollify is not None:
        res["mollify"] = args.mollify
    report = run(_spec(args, "nls", _load_json_arg(args.data, CHI_HALF), _times_from(args), res))
    return report.to_dict()


def _cmd_kdv(args):
    res = {"N": args.modes, "dt": args.dt}
    if args.mollify is not None:
        res["mollify"] = args.mollify
    report = run(_spec(args, "kdv", _load_json_arg(args.data, CHI_HALF), _times_from(args), res))
    return report.to_dict()


SQUARE_WAVE_CURVATURE = {
    "pieces": [[f"{2 * i}/3", f"{2 * i + 1}/3", 1.3, 0.0] for i in range(3)]
    + [[f"{2 * i + 1}/3", f"{2 * i + 2}/3", 0.7, 0.0] for i in range(3)]
}


def _cmd_vfe(args):
    res = {"M": args.modes, "dt": args.dt}
    if args.mollify is not None:
        res["mollify"] = args.mollify
    data = _load_json_arg(args.curvature, SQUARE_WAVE_CURVATURE, "curvature")
    report = run(_spec(args, "vfe", data, _times_from(args), res, args.svg))
    return report.to_dict()


def _cmd_run(args):
    cfg = _opt(args, "config")
    if not cfg:
        raise SpecError("--config", "run needs an experiment spec file")
    spec = ExperimentSpec.from_json(Path(cfg).read_text())
    # global flags override the file
    if _opt(args, "out_dir"):
        spec.outputs = dict(spec.outputs, dir=args.out_dir)
    if _opt(args, "seed") is not None:
        spec.seed = args.seed
    if _opt(args, "threads") is not None:
        spec.threads = args.threads
    spec.validate()
    return run(spec).to_dict()


COMMANDS = {
    "talbot": _cmd_talbot,
    "diophantine": _cmd_diophantine,
    "dimension": _cmd_dimension,
    "nls": _cmd_nls,
    "kdv": _cmd_kdv,
    "vfe": _cmd_vfe,
    "run": _cmd_run,
}


def _apply_config(parser, argv, args):
    """Re-parse with values from a flag config file as defaults (explicit flags win)."""
    cfg = _opt(args, "config")
    if not cfg or args.command == "run":
        return args
    values = json.loads(Path(cfg).read_text())
    if not isinstance(values, dict):
        raise SpecError("--config", "flag config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    dests = {a.dest for a in sub._actions}
    clean = {}
    for k, v in values.items():
        dest = k.lstrip("-").replace("-", "_")
        dest = "lam" if dest == "lambda" else dest
        if dest not in dests:
            raise SpecError(f"config.{k}", f"unknown option for '{args.command}'")
        clean[dest] = v
    sub.set_defaults(**clean)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return EXIT_SPEC
        args = _apply_config(parser, argv, args)
        result = COMMANDS[args.command](args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (SpecError, ValueError, TypeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    print(json.dumps(result, sort_keys=True, indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
