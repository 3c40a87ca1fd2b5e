"""Command line interface: ``cdrodeo <subcommand> ...``.

Exit status is 0 on success, 1 on input or usage errors and 2 on internal
failures. Component indices on the command line and in outputs are 1-based.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time

from . import __version__
from ._accel import BACKEND
from .diagnostics import compute_bounds, benchmark_oracle
from .estimator import Dataset, estimate_density
from .io import load_csv, read_matrix, write_csv, write_json, write_matrix
from .kernels import KERNEL_NAMES, get_kernel
from .marginal import MarginalConfig, fit_marginal_kde, marginal_known
from .rodeo import RodeoConfig, run_cdrodeo
from .simulation import (
    BENCH_POINT, ExampleSpec, replicate_runs, sample_example, slice_curves, true_marginal,
)

log = logging.getLogger("cdrodeo")

PRESETS = {
    "paper-sim": {"h0": "0.4", "beta": 0.95, "a": 1.1, "kernel": "gaussian", "marginal": "known:bench"},
    "paper-theory": {"h0": "theory", "beta": 0.95, "a": 1.1, "kernel": "biweight", "marginal": "known:bench"},
    "none": {"h0": "theory", "beta": 0.95, "a": 1.1, "kernel": "gaussian", "marginal": None},
}
KNOWN_DENSITIES = {"bench": true_marginal, "one": None}
SAMPLE_HEADER = ["x1", "x2", "x3", "x4", "y"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _add_tuning(p, with_preset=True):
    if with_preset:
        p.add_argument("--preset", choices=sorted(PRESETS), default="none")
    p.add_argument("--beta", type=float, help="bandwidth decrease factor in (0, 1)")
    p.add_argument("--h0", help="initial bandwidth, or 'theory' for 1/log n")
    p.add_argument("--a", type=float, help="threshold exponent on log n")
    p.add_argument("--kernel", choices=KERNEL_NAMES)
    p.add_argument("--max-iterations", type=int, default=10_000)
    p.add_argument("--batch", action="store_true", help="test all active components on the same bandwidth")


def _add_data(p):
    p.add_argument("--data", required=True, help="CSV with a header row")
    p.add_argument("--d1", type=int, required=True, help="number of leading covariate columns")
    p.add_argument("--point", type=_floats, required=True, help="query point, comma separated")
    p.add_argument("--marginal", help="known:bench | known:one | kde")
    p.add_argument("--aux-csv", help="auxiliary covariate sample for --marginal kde")
    p.add_argument("--split-aux", type=float, metavar="C",
                   help="carve an auxiliary sample of size n^C from the leading rows of --data")
    p.add_argument("--c-exponent", type=float, default=2.0)
    p.add_argument("--floor", default="paper", help="'paper' for (log n)^(-1/4) or a positive number")
    p.add_argument("--clip", action="store_true", help="report max(estimate, 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdrodeo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="draw a benchmark sample to CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("estimate", help="density estimate at a fixed bandwidth")
    _add_data(p)
    p.add_argument("--h", type=_floats, required=True, help="bandwidth, comma separated")
    p.add_argument("--kernel", choices=KERNEL_NAMES, default="gaussian")
    p.add_argument("--out")

    p = sub.add_parser("rodeo", help="greedy bandwidth selection at one point")
    _add_data(p)
    _add_tuning(p)
    p.add_argument("--trace", help="write the decision trace to this CSV")
    p.add_argument("--out", help="write the JSON result here instead of stdout")

    p = sub.add_parser("diag", help="stopping-iteration bounds for a synthetic oracle")
    p.add_argument("--preset", choices=["paper-example"], default="paper-example")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, default=0.95)
    p.add_argument("--a", type=float, default=1.1)
    p.add_argument("--kernel", choices=KERNEL_NAMES, default="biweight")
    p.add_argument("--out")

    p = sub.add_parser("reproduce-fig1", help="selected bandwidths over replications")
    p.add_argument("--n", type=int, default=200_000)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True)
    _add_tuning(p)
    p.set_defaults(preset="paper-sim")

    p = sub.add_parser("reproduce-fig2", help="estimate vs truth along one coordinate")
    p.add_argument("--axis", type=int, required=True, help="1-based coordinate index")
    p.add_argument("--grid", type=_floats, required=True)
    p.add_argument("--n", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base-point", type=_floats, default=list(BENCH_POINT))
    p.add_argument("--out", required=True)
    _add_tuning(p)
    p.set_defaults(preset="paper-sim")
    return parser


def _resolve_tuning(args, n=None) -> dict:
    preset = PRESETS[getattr(args, "preset", "none")]
    h0 = args.h0 if args.h0 is not None else preset["h0"]
    resolved = {
        "preset": getattr(args, "preset", "none"),
        "beta": args.beta if args.beta is not None else preset["beta"],
        "a": args.a if args.a is not None else preset["a"],
        "kernel": args.kernel or preset["kernel"],
        "max_iterations": args.max_iterations,
        "batch": args.batch,
    }
    if str(h0).lower() == "theory":
        resolved["h0_rule"] = "theory"
        resolved["h0"] = None
    else:
        try:
            resolved["h0"] = float(h0)
        except ValueError:
            raise UsageError(f"--h0 must be a number or 'theory', got {h0!r}") from None
        resolved["h0_rule"] = "fixed"
    if n is not None and resolved["h0"] is None:
        resolved["h0_resolved"] = 1.0 / math.log(n)
    return resolved


def _rodeo_config(t) -> RodeoConfig:
    return RodeoConfig(
        beta=t["beta"], h0=t["h0"], a=t["a"], max_iterations=t["max_iterations"], batch=t["batch"]
    )


def _split_sizes(total: int, c: float) -> int:
    """Largest main-sample size n with n + ceil(n^c) <= total."""
    lo, hi = 0, total
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid + math.ceil(mid**c) <= total:
            lo = mid
        else:
            hi = mid - 1
    return lo


def _load(args, marginal_default, kernel_name):
    data = load_csv(args.data, args.d1)
    spec = args.marginal or marginal_default or ("known:one" if args.d1 == 0 else "kde")
    info = {"marginal": spec, "data": args.data, "d1": args.d1}
    if spec.startswith("known:"):
        name = spec.split(":", 1)[1]
        if name not in KNOWN_DENSITIES:
            raise ValueError(f"unknown analytic marginal {name!r}; choose from {sorted(KNOWN_DENSITIES)}")
        if name == "bench" and (data.d1, data.d) != (4, 5):
            raise ValueError("known:bench needs d1=4 and five columns")
        marginal = marginal_known(KNOWN_DENSITIES[name], data)
    elif spec == "kde":
        if data.d1 == 0:
            raise ValueError("--marginal kde needs d1 >= 1")
        floor = args.floor if args.floor == "paper" else float(args.floor)
        if args.aux_csv:
            _, aux = read_matrix(args.aux_csv)
            if aux.shape[1] < data.d1:
                raise ValueError(f"{args.aux_csv}: expected at least {data.d1} columns")
            aux = aux[:, : data.d1]
        elif args.split_aux:
            n_main = _split_sizes(data.n, args.split_aux)
            if n_main < 3:
                raise ValueError(f"--split-aux {args.split_aux} leaves {n_main} main rows")
            aux = data.samples[: data.n - n_main, : data.d1]
            data = Dataset(data.samples[data.n - n_main :], data.d1)
            info["split_aux"] = {"c": args.split_aux, "n_aux": int(aux.shape[0]), "n_main": n_main}
        else:
            raise ValueError("--marginal kde needs --aux-csv or --split-aux")
        cfg = MarginalConfig(c_exponent=args.c_exponent, kernel_name=kernel_name, floor_rule=floor)
        marginal = fit_marginal_kde(aux, data.n, cfg, data)
        info.update(c_exponent=args.c_exponent, floor=marginal.floor, h_x=marginal.h_x,
                    kernel_x=marginal.kernel_x.name)
    else:
        raise ValueError(f"--marginal must be known:<name> or kde, got {spec!r}")
    info["n"] = data.n
    return data, marginal, info


def _emit(payload, out):
    if out:
        write_json(out, payload)
    else:
        print(json.dumps(payload, indent=2))


def _cmd_simulate(args):
    data = sample_example(ExampleSpec(n=args.n, seed=args.seed), stream=args.stream)
    write_matrix(args.out, data.samples, SAMPLE_HEADER)
    write_json(args.out + ".config.json", {"command": "simulate", "n": args.n, "seed": args.seed,
                                           "stream": args.stream})


def _cmd_estimate(args):
    k = get_kernel(args.kernel)
    data, marginal, info = _load(args, None, k.name)
    value = estimate_density(args.point, args.h, data, marginal, k)
    if args.clip:
        value = max(value, 0.0)
    _emit({"estimate": value, "config": {"command": "estimate", "point": args.point, "h": args.h,
                                         "kernel": k.name, "clip": args.clip, **info}}, args.out)


def _cmd_rodeo(args):
    kernel_name = args.kernel or PRESETS[args.preset]["kernel"]
    data, marginal, info = _load(args, PRESETS[args.preset]["marginal"], kernel_name)
    tuning = _resolve_tuning(args, data.n)
    k = get_kernel(tuning["kernel"])
    result = run_cdrodeo(args.point, data, marginal, k, _rodeo_config(tuning))
    payload = result.to_dict()
    if args.clip:
        payload["estimate"] = max(payload["estimate"], 0.0)
    payload["config"] = {"command": "rodeo", "point": args.point, "clip": args.clip,
                         "backend": BACKEND, **tuning, **info}
    if args.trace:
        write_csv(args.trace, ["iter", "j", "h_j", "Z", "lambda", "decision"], result.trace.rows())
    _emit(payload, args.out)


def _cmd_diag(args):
    k = get_kernel(args.kernel)
    oracle = benchmark_oracle(args.n, p=k.order, support_radius=k.quadrature_radius)
    diag = compute_bounds(oracle, args.n, args.beta, args.a, k.norms)
    payload = diag.to_dict()
    payload["relevant_set"] = sorted(j + 1 for j in oracle.relevant_set)
    payload["config"] = {"command": "diag", "preset": args.preset, "n": args.n, "beta": args.beta,
                         "a": args.a, "kernel": k.name, "p": oracle.p}
    _emit(payload, args.out)


def _cmd_fig1(args):
    tuning = _resolve_tuning(args, args.n)
    k = get_kernel(tuning["kernel"])
    t0 = time.perf_counter()
    report = replicate_runs(args.m, ExampleSpec(n=args.n, seed=args.seed), _rodeo_config(tuning), k,
                            threads=args.threads)
    elapsed = time.perf_counter() - t0
    header = ["run"] + [f"h{j + 1}" for j in range(5)] + [f"theta{j + 1}" for j in range(5)] + [
        "estimate", "stop_reason", "seconds"]
    rows = [
        [r, *report.bandwidths[r].tolist(), *report.thetas[r].tolist(), float(report.estimates[r]),
         report.stop_reasons[r], float(report.wall_clock[r])]
        for r in range(report.m)
    ]
    write_csv(args.out, header, rows)
    summary = {
        "config": {"command": "reproduce-fig1", "n": args.n, "m": args.m, "seed": args.seed,
                   "backend": BACKEND, **tuning},
        "quantiles": report.quantiles(),
        "fraction_theta3_theta4_zero": report.fraction_deactivated_first([2, 3]),
        "total_seconds": elapsed,
    }
    write_json(args.out + ".config.json", summary)
    print(json.dumps({k: summary[k] for k in ("fraction_theta3_theta4_zero", "total_seconds")}))


def _cmd_fig2(args):
    tuning = _resolve_tuning(args, args.n)
    k = get_kernel(tuning["kernel"])
    if not 1 <= args.axis <= 5:
        raise ValueError(f"--axis must lie in 1..5, got {args.axis}")
    rows = slice_curves(ExampleSpec(n=args.n, seed=args.seed), _rodeo_config(tuning), k,
                        args.base_point, args.axis - 1, args.grid)
    write_csv(args.out, ["coordinate", "estimate", "truth"],
              [(c, e, "" if math.isnan(t) else t) for c, e, t in rows])
    write_json(args.out + ".config.json", {"command": "reproduce-fig2", "axis": args.axis,
                                           "grid": args.grid, "n": args.n, "seed": args.seed,
                                           "base_point": args.base_point, **tuning})


COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "rodeo": _cmd_rodeo,
    "diag": _cmd_diag,
    "reproduce-fig1": _cmd_fig1,
    "reproduce-fig2": _cmd_fig2,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"cdrodeo: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, ValueError, IndexError, OSError) as exc:
        print(f"cdrodeo: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.exception("internal failure")
        print(f"cdrodeo: internal error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
