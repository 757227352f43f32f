"""Command-line front end.

Subcommands: value, fixed-cost, precommit, equilibrium, simulate,
reproduce-figures. Exit codes: 0 success, 1 numeric failure (bracket
exhaustion and friends), 2 model validation failure (the assumption
report is printed), 64 usage errors.

Every output file is accompanied by a <file>.manifest.json recording a
determinism key (subcommand, flags, model digest, tool version, seed
where applicable); reruns with an equal key produce byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .canonical import solve_canonical
from .equilibrium import solve_equilibrium, verify_equilibrium
from .errors import CondivError, ModelValidationError
from .figures import reproduce_figures
from .fixed_cost import ruin_cost_threshold, solve_fixed_cost
from .mc import SimConfig, simulate_policy
from .model import load_model, model_digest, require_valid
from .policy import BarrierPolicy, NoDividendPolicy, value_H, value_J, value_R, value_U
from .precommit import precommitment_sweep, solve_precommitment

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_VALIDATION = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _policy_arg(text: str) -> BarrierPolicy:
    try:
        lo, hi = (float(v) for v in text.split(","))
        return BarrierPolicy(lo, hi)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"bad policy {text!r}: {exc}")


def _span_arg(text: str):
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
        if n < 1:
            raise ValueError("need at least one point")
        return [float(v) for v in np.linspace(a, b, n)]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad sweep spec {text!r} (want a:b:n): {exc}")


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def build_parser() -> _Parser:
    p = _Parser(prog="condiv", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"condiv {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    def add_model(sp):
        sp.add_argument("--model", required=True, help="model JSON file")

    v = sub.add_parser("value", help="evaluate J, R, H or U at a point")
    add_model(v)
    v.add_argument("--fn", choices=("J", "R", "H", "U"), default="J")
    v.add_argument("--policy", type=_policy_arg, help="x_lower,x_upper")
    v.add_argument("--cost", type=_positive, help="payment cost (H only)")
    v.add_argument("--x", type=float, required=True)

    f = sub.add_parser("fixed-cost", help="smooth-fit barriers for a payment cost")
    add_model(f)
    f.add_argument("--cost", type=_positive)
    f.add_argument("--sweep-c", type=_span_arg, metavar="A:B:N")
    f.add_argument("--x0", type=float, default=1.0, help="start point for the H column")
    f.add_argument("--threshold", action="store_true",
                   help="also report the ruin-case cost threshold")
    f.add_argument("--out", help="CSV path for sweeps")

    pc = sub.add_parser("precommit", help="constrained solution for fixed x0")
    add_model(pc)
    pc.add_argument("--x0", type=_positive)
    pc.add_argument("--k", type=_positive)
    pc.add_argument("--sweep-k", type=_span_arg, metavar="A:B:N")
    pc.add_argument("--sweep-x0", type=_span_arg, metavar="A:B:N")
    pc.add_argument("--out", help="CSV path for sweeps")

    eq = sub.add_parser("equilibrium", help="time-consistent barriers")
    add_model(eq)
    eq.add_argument("--k", type=_positive)
    eq.add_argument("--verify", action="store_true", help="emit the certificate")
    eq.add_argument("--sweep-k", type=_span_arg, metavar="A:B:N")
    eq.add_argument("--out", help="CSV path for sweeps")

    sim = sub.add_parser("simulate", help="Monte Carlo estimate of J and R")
    add_model(sim)
    sim.add_argument("--policy", type=_policy_arg, required=True)
    sim.add_argument("--x0", type=float, required=True)
    sim.add_argument("--dt", type=_positive, default=1e-3)
    sim.add_argument("--paths", type=int, default=10_000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--horizon", type=_positive, default=None,
                     help="defaults to 100/r")

    rf = sub.add_parser("reproduce-figures", help="emit fig1..fig7 CSVs and PNGs")
    add_model(rf)
    rf.add_argument("--out-dir", required=True)
    rf.add_argument("--no-plots", action="store_true", help="CSVs only")

    return p


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _manifest_for(path: Path, args, digest: str, t0: float, extra=None) -> None:
    flags = {k: v for k, v in sorted(vars(args).items())
             if k != "cmd" and not callable(v)}
    flags = {k: (str(v) if isinstance(v, (Path, BarrierPolicy)) else v)
             for k, v in flags.items()}
    doc = {
        "determinism_key": {
            "subcommand": args.cmd,
            "flags": flags,
            "model_sha256": digest,
            "version": __version__,
        },
        "info": {
            "output": str(path),
            "wall_time_s": round(time.perf_counter() - t0, 6),
            **(extra or {}),
        },
    }
    with open(f"{path}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _policy_dict(pol) -> dict:
    if isinstance(pol, NoDividendPolicy):
        return {"type": "no-dividend"}
    return {"type": "barrier", "x_lower": pol.x_lower, "x_upper": pol.x_upper}


def _write_rows(path: str, header, rows) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _run(args) -> int:
    t0 = time.perf_counter()
    model = load_model(args.model)
    digest = model_digest(model)
    require_valid(model)

    if args.cmd == "simulate":
        cfg = SimConfig.for_model(
            model, dt=args.dt, n_paths=args.paths, seed=args.seed,
            t_horizon=args.horizon,
        )
        estJ, estR = simulate_policy(model, args.policy, args.x0, cfg)
        _emit({
            "model_sha256": digest,
            "policy": _policy_dict(args.policy),
            "x0": args.x0,
            "config": {"dt": cfg.dt, "t_horizon": cfg.t_horizon,
                       "n_paths": cfg.n_paths, "seed": cfg.seed},
            "J": {"mean": estJ.mean, "stderr": estJ.stderr},
            "R": {"mean": estR.mean, "stderr": estR.stderr},
        })
        return EXIT_OK

    g = solve_canonical(model)

    if args.cmd == "value":
        if args.fn == "U":
            val = value_U(g, args.x)
        else:
            if args.policy is None:
                raise SystemExit(_usage_error("--policy is required for J/R/H"))
            g = g.ensure(args.policy.x_upper)
            if args.fn == "J":
                val = value_J(g, args.policy, args.x)
            elif args.fn == "R":
                val = value_R(g, args.policy, args.x)
            else:
                if args.cost is None:
                    raise SystemExit(_usage_error("--cost is required for H"))
                val = value_H(g, args.cost, args.policy, args.x)
        _emit({"fn": args.fn, "x": args.x, "value": val, "x_star": g.x_b})
        return EXIT_OK

    if args.cmd == "fixed-cost":
        if args.sweep_c:
            header = ["c", "x_lower", "x_upper", "case", "H_at_x0"]
            rows = []
            for c in args.sweep_c:
                s = solve_fixed_cost(g, c)
                rows.append([repr(c), repr(s.x_lower), repr(s.x_upper),
                             s.case, repr(float(s.value_at(args.x0)))])
            if not args.out:
                raise SystemExit(_usage_error("--out is required with --sweep-c"))
            _write_rows(args.out, header, rows)
            _manifest_for(Path(args.out), args, digest, t0, {"rows": len(rows)})
            _emit({"written": args.out, "rows": len(rows)})
            return EXIT_OK
        if args.cost is None and not args.threshold:
            raise SystemExit(_usage_error("need --cost, --sweep-c or --threshold"))
        out = {}
        if args.cost is not None:
            s = solve_fixed_cost(g, args.cost)
            out.update({
                "c": args.cost, "policy": _policy_dict(s.policy), "case": s.case,
                "residual": s.residuals, "H_at_x0": float(s.value_at(args.x0)),
                "x0": args.x0,
            })
        if args.threshold:
            out["ruin_cost_threshold"] = ruin_cost_threshold(g)
        _emit(out)
        return EXIT_OK

    if args.cmd == "precommit":
        if args.sweep_k or args.sweep_x0:
            if args.sweep_k and args.sweep_x0:
                raise SystemExit(_usage_error("choose one of --sweep-k/--sweep-x0"))
            if args.sweep_k:
                if args.x0 is None:
                    raise SystemExit(_usage_error("--x0 is required with --sweep-k"))
                rows_in = precommitment_sweep(g, k_list=args.sweep_k, x0=args.x0)
            else:
                if args.k is None:
                    raise SystemExit(_usage_error("--k is required with --sweep-x0"))
                rows_in = precommitment_sweep(g, x0_list=args.sweep_x0, k=args.k)
            header = ["x0", "k", "ok", "c_star", "x_lower", "x_upper", "V",
                      "binding", "error"]
            rows = []
            for r in rows_in:
                if r.ok:
                    s = r.solution
                    pol = s.policy
                    lo = getattr(pol, "x_lower", "")
                    hi = getattr(pol, "x_upper", "")
                    rows.append([repr(r.x0), repr(r.k), 1, repr(s.c_star),
                                 repr(float(lo)) if lo != "" else "",
                                 repr(float(hi)) if hi != "" else "",
                                 repr(s.V), int(s.binding), ""])
                else:
                    rows.append([repr(r.x0), repr(r.k), 0, "", "", "", "", "", r.error])
            if not args.out:
                raise SystemExit(_usage_error("--out is required for sweeps"))
            _write_rows(args.out, header, rows)
            _manifest_for(Path(args.out), args, digest, t0, {"rows": len(rows)})
            _emit({"written": args.out, "rows": len(rows)})
            return EXIT_OK
        if args.x0 is None or args.k is None:
            raise SystemExit(_usage_error("need --x0 and --k (or a sweep)"))
        s = solve_precommitment(g, args.x0, args.k)
        _emit({
            "x0": s.x0, "k": s.k, "c_star": s.c_star,
            "policy": _policy_dict(s.policy), "V": s.V,
            "constraint_residual": s.constraint_residual,
            "iterations": s.iterations, "binding": s.binding,
        })
        return EXIT_OK

    if args.cmd == "equilibrium":
        if args.sweep_k:
            header = ["k", "x_lower", "x_upper", "residual_46", "residual_42",
                      "smoothfit_residual"]
            rows = []
            for k in args.sweep_k:
                s = solve_equilibrium(g, k)
                pol = s.policy
                lo = getattr(pol, "x_lower", "")
                hi = getattr(pol, "x_upper", "")
                rows.append([repr(k),
                             repr(float(lo)) if lo != "" else "",
                             repr(float(hi)) if hi != "" else "",
                             repr(s.residual_46), repr(s.residual_42),
                             repr(s.smoothfit_residual)])
            if not args.out:
                raise SystemExit(_usage_error("--out is required for sweeps"))
            _write_rows(args.out, header, rows)
            _manifest_for(Path(args.out), args, digest, t0, {"rows": len(rows)})
            _emit({"written": args.out, "rows": len(rows)})
            return EXIT_OK
        if args.k is None:
            raise SystemExit(_usage_error("--k is required"))
        s = solve_equilibrium(g, args.k)
        out = {
            "k": s.k, "policy": _policy_dict(s.policy),
            "residual_46": s.residual_46, "residual_42": s.residual_42,
            "smoothfit_residual": s.smoothfit_residual,
        }
        if args.verify:
            cert = verify_equilibrium(s.canonical, s)
            out["certificate"] = cert.to_dict()
        _emit(out)
        return EXIT_OK

    if args.cmd == "reproduce-figures":
        results = reproduce_figures(g, args.out_dir, render=not args.no_plots)
        for r in results:
            _manifest_for(r.csv_path, args, digest, t0, {"rows": r.n_rows})
            if r.png_path is not None:
                _manifest_for(r.png_path, args, digest, t0, {"rows": r.n_rows})
        _emit({
            "out_dir": str(args.out_dir),
            "figures": {r.name: {"csv": str(r.csv_path),
                                 "png": str(r.png_path) if r.png_path else None,
                                 "rows": r.n_rows}
                        for r in results},
        })
        return EXIT_OK

    raise AssertionError(f"unhandled subcommand {args.cmd}")


def _usage_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _run(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ModelValidationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        # unreadable or malformed model input counts as validation failure
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CondivError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
