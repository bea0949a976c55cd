"""Command-line front end: solve, tabulate, verify, simulate, sweep.

Exit codes: 0 success, 1 usage error, 2 model/cost assumption violation,
3 solver failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent import futures

import numpy as np

from . import mc, sn, sp, verify
from .costs import GameCosts
from .errors import AssumptionError, LevySaddleError
from .model import LevyModelSpec, Side, model_from_dict
from .scale import ScaleFunctionRep, scale_rep, w, w_prime, z, z_bar

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ASSUMPTION = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4

SWEEP_PARAMETERS = ("alpha_h", "beta_h", "C_g", "K_g", "sigma")


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage by default; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fmt(v) -> float | None:
    if v is None:
        return None
    if isinstance(v, float):
        if math.isnan(v):
            return None
        if math.isinf(v):
            return None
        return float(f"{v:.12g}")
    return v


def _fmt_cell(v: float) -> str:
    return f"{v:.12g}"


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def load_config(path: str):
    with open(path) as fh:
        doc = json.load(fh)
    model = model_from_dict(doc)
    c = doc.get("costs", {})
    costs = GameCosts(
        alpha_h=float(c.get("alpha", 1.0)),
        beta_h=float(c.get("beta", 1.0)),
        C_g=float(c.get("C", 1.0)),
        K_g=float(c.get("K", 1.0)),
    )
    return doc, model, costs


def solve_to_dict(model: LevyModelSpec, costs: GameCosts, rep: ScaleFunctionRep) -> dict:
    if model.side is Side.SPECTRALLY_NEGATIVE:
        eq = sn.solve_sn(rep, costs)
        return {
            "side": "SN",
            "sigma": _fmt(model.sigma),
            "a_star": _fmt(eq.a_star),
            "b_star": _fmt(eq.b_star),
            "a_bar": _fmt(eq.a_bar),
            "residuals": {"Lambda": _fmt(eq.residual_big), "lambda": _fmt(eq.residual_small)},
        }
    eq = sp.solve_sp(rep, costs)
    out = {
        "side": "SP",
        "sigma": _fmt(model.sigma),
        "case": eq.case_tag.value,
        "a_star": None if math.isinf(eq.a_star) else _fmt(eq.a_star),
        "b_star": _fmt(eq.b_star),
        "thresholds": {
            "b_under": _fmt(eq.b_under),
            "b_over": _fmt(eq.b_over),
            "B": _fmt(eq.B),
        },
        "residuals": {"Gamma": _fmt(eq.residual_cap), "gamma": _fmt(eq.residual_low)},
    }
    if eq.case_tag is sp.SpCase.COLLAPSED:
        out["derivative_at_b"] = {"left": -1.0, "right": _fmt(costs.K_g)}
    return out


def _equilibrium(model, costs, rep):
    if model.side is Side.SPECTRALLY_NEGATIVE:
        return sn.solve_sn(rep, costs)
    return sp.solve_sp(rep, costs)


def _value_fns(model, costs, eq):
    if model.side is Side.SPECTRALLY_NEGATIVE:
        return (lambda x: sn.value_sn(eq, x)), (lambda x: sn.value_sn_prime(eq, x))
    return (lambda x: sp.value_sp(eq, x)), (lambda x: sp.value_sp_prime(eq, x))


def _default_grid(eq, n=401):
    a = eq.a_star
    lo = eq.b_star - 8.0 if math.isinf(a) else a - 2.0
    return np.linspace(lo, eq.b_star + 2.0, n)


def _value_table(model, costs, eq, grid) -> str:
    value, deriv = _value_fns(model, costs, eq)
    lines = ["x,v,vp"]
    for x in grid:
        lines.append(f"{_fmt_cell(float(x))},{_fmt_cell(value(float(x)))},{_fmt_cell(deriv(float(x)))}")
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> int:
    _doc, model, costs = load_config(args.config)
    rep = scale_rep(model)
    result = solve_to_dict(model, costs, rep)
    text = json.dumps(result, indent=2)
    if args.out:
        _atomic_write(args.out, text + "\n")
    print(text)
    return EXIT_OK


def cmd_value(args) -> int:
    _doc, model, costs = load_config(args.config)
    rep = scale_rep(model)
    eq = _equilibrium(model, costs, rep)
    if args.x_lo is not None and args.x_hi is not None:
        grid = np.linspace(args.x_lo, args.x_hi, args.n)
    else:
        grid = _default_grid(eq, args.n)
    table = _value_table(model, costs, eq, grid)
    if args.out:
        _atomic_write(args.out, table)
    else:
        sys.stdout.write(table)
    return EXIT_OK


def cmd_verify(args) -> int:
    _doc, model, costs = load_config(args.config)
    with open(args.solution) as fh:
        sol = json.load(fh)
    rep = scale_rep(model)
    a_star = sol.get("a_star")
    a_star = -math.inf if a_star is None else float(a_star)
    b_star = float(sol["b_star"])
    collapsed = sol.get("case") == "collapsed"
    report = verify.verify_solution(rep, costs, a_star, b_star, collapsed=collapsed)
    text = json.dumps(report.to_dict(), indent=2, default=_fmt)
    if args.out:
        _atomic_write(args.out, text + "\n")
    print(text)
    if not report.passed:
        print("verification failed: " + "; ".join(report.failures), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_simulate(args) -> int:
    _doc, model, costs = load_config(args.config)
    cfg = mc.SimConfig(
        n_paths=args.paths,
        dt=args.dt,
        horizon=args.horizon,
        seed=args.seed,
        antithetic=args.antithetic,
    )
    est = mc.simulate_cost(model, costs, args.a, args.b, args.x, cfg)
    print(
        json.dumps(
            {
                "mean": _fmt(est.mean),
                "std_err": _fmt(est.std_err),
                "n_paths": est.n_paths,
                "truncation_bias_bound": _fmt(est.truncation_bias_bound),
            },
            indent=2,
        )
    )
    return EXIT_OK


def cmd_scale_dump(args) -> int:
    _doc, model, _costs = load_config(args.config)
    rep = scale_rep(model)
    grid = np.linspace(args.x_lo, args.x_hi, args.n)
    lines = ["x,W,Wp,Z,Zbar"]
    for xv in grid:
        xv = float(xv)
        wp = w_prime(rep, xv) if xv >= 0.0 else 0.0
        lines.append(
            f"{_fmt_cell(xv)},{_fmt_cell(w(rep, xv))},{_fmt_cell(wp)},"
            f"{_fmt_cell(z(rep, xv))},{_fmt_cell(z_bar(rep, xv))}"
        )
    table = "\n".join(lines) + "\n"
    if args.out:
        _atomic_write(args.out, table)
    else:
        sys.stdout.write(table)
    return EXIT_OK


def _patched_config(doc: dict, parameter: str, value: float) -> dict:
    import copy

    patched = copy.deepcopy(doc)
    if parameter == "sigma":
        patched["sigma"] = value
    else:
        key = {"alpha_h": "alpha", "beta_h": "beta", "C_g": "C", "K_g": "K"}[parameter]
        patched.setdefault("costs", {})[key] = value
    return patched


def _sweep_point(doc: dict, parameter: str, value: float, grid_spec, outputs: str):
    """Solve one sweep configuration and write its value table; fully picklable."""
    patched = _patched_config(doc, parameter, value)
    model = model_from_dict(patched)
    c = patched.get("costs", {})
    costs = GameCosts(
        alpha_h=float(c.get("alpha", 1.0)),
        beta_h=float(c.get("beta", 1.0)),
        C_g=float(c.get("C", 1.0)),
        K_g=float(c.get("K", 1.0)),
    )
    rep = scale_rep(model)
    eq = _equilibrium(model, costs, rep)
    if grid_spec is not None:
        grid = np.linspace(grid_spec[0], grid_spec[1], int(grid_spec[2]))
    else:
        grid = _default_grid(eq)
    table = _value_table(model, costs, eq, grid)
    fname = os.path.join(outputs, f"value_{parameter}_{value:g}.csv")
    _atomic_write(fname, table)
    case = getattr(eq, "case_tag", None)
    return {
        "value": value,
        "a_star": eq.a_star,
        "b_star": eq.b_star,
        "case": case.value if case is not None else None,
        "csv": fname,
    }


def cmd_sweep(args) -> int:
    doc, model, costs = load_config(args.config)
    with open(args.sweep) as fh:
        spec = json.load(fh)
    parameter = spec.get("parameter")
    values = spec.get("values", [])
    if parameter not in SWEEP_PARAMETERS:
        print(f"unknown sweep parameter: {parameter}", file=sys.stderr)
        return EXIT_USAGE
    if not values:
        print("sweep needs a nonempty values list", file=sys.stderr)
        return EXIT_USAGE
    grid_spec = spec.get("x_grid")
    outputs = spec.get("outputs", ".")
    os.makedirs(outputs, exist_ok=True)

    jobs = int(os.environ.get("LEVY_SADDLE_JOBS", args.jobs))
    results, errors = [], []
    if jobs > 1:
        with futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = {
                pool.submit(_sweep_point, doc, parameter, float(v), grid_spec, outputs): v
                for v in values
            }
            for fut in futures.as_completed(futs):
                v = futs[fut]
                try:
                    results.append(fut.result())
                except (LevySaddleError, ValueError) as exc:
                    errors.append({"value": v, "error": str(exc)})
                    print(f"sweep point {parameter}={v} failed: {exc}", file=sys.stderr)
    else:
        for v in values:
            try:
                results.append(_sweep_point(doc, parameter, float(v), grid_spec, outputs))
            except (LevySaddleError, ValueError) as exc:
                errors.append({"value": v, "error": str(exc)})
                print(f"sweep point {parameter}={v} failed: {exc}", file=sys.stderr)
    results.sort(key=lambda r: r["value"])

    lines = ["param,a_star,b_star"]
    for r in results:
        lines.append(f"{_fmt_cell(r['value'])},{_fmt_cell(r['a_star'])},{_fmt_cell(r['b_star'])}")
    _atomic_write(os.path.join(outputs, "summary.csv"), "\n".join(lines) + "\n")

    mono = _monotonicity_report(doc, parameter, results, grid_spec)
    _atomic_write(
        os.path.join(outputs, "monotonicity.json"), json.dumps(mono, indent=2) + "\n"
    )
    print(
        json.dumps(
            {
                "parameter": parameter,
                "points": [
                    {
                        "value": _fmt(r["value"]),
                        "a_star": _fmt(r["a_star"]) if not math.isinf(r["a_star"]) else None,
                        "b_star": _fmt(r["b_star"]),
                        "case": r["case"],
                    }
                    for r in results
                ],
                "errors": errors,
                "monotonicity": mono,
            },
            indent=2,
        )
    )
    return EXIT_OK


def _monotonicity_report(doc, parameter, results, grid_spec):
    """Pointwise ordering of the value functions across the swept parameter."""
    if len(results) < 2:
        return {"monotone": None, "direction": None}
    if grid_spec is not None:
        grid = np.linspace(grid_spec[0], grid_spec[1], int(grid_spec[2]))
    else:
        lo = min(
            (r["b_star"] - 8.0 if math.isinf(r["a_star"]) else r["a_star"] - 2.0)
            for r in results
        )
        hi = max(r["b_star"] for r in results) + 2.0
        grid = np.linspace(lo, hi, 401)

    tables = []
    for r in results:
        patched = _patched_config(doc, parameter, r["value"])
        model = model_from_dict(patched)
        c = patched.get("costs", {})
        costs = GameCosts(
            alpha_h=float(c.get("alpha", 1.0)),
            beta_h=float(c.get("beta", 1.0)),
            C_g=float(c.get("C", 1.0)),
            K_g=float(c.get("K", 1.0)),
        )
        rep = scale_rep(model)
        a = r["a_star"]
        ev = verify.build_evaluator(rep, costs, a, r["b_star"])
        tables.append(np.array([ev.value(float(x)) for x in grid]))

    directions = []
    for low, high in zip(tables, tables[1:]):
        diff = high - low
        if np.all(diff >= -1e-9):
            directions.append("nondecreasing")
        elif np.all(diff <= 1e-9):
            directions.append("nonincreasing")
        else:
            directions.append("mixed")
    monotone = len(set(directions)) == 1 and directions[0] != "mixed"
    return {
        "monotone": monotone,
        "direction": directions[0] if monotone else None,
        "pairwise": directions,
        "n_grid": int(grid.size),
    }


def build_parser() -> _Parser:
    parser = _Parser(prog="levy-saddle", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve for the barrier pair and print JSON")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("value", help="value-function table as CSV (x,v,vp)")
    p.add_argument("config")
    p.add_argument("--x-lo", type=float, default=None)
    p.add_argument("--x-hi", type=float, default=None)
    p.add_argument("--n", type=int, default=401)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_value)

    p = sub.add_parser("verify", help="certify a solution file against the model")
    p.add_argument("config")
    p.add_argument("solution")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo cost of a barrier pair")
    p.add_argument("config")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--antithetic", action="store_true")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="solve across a parameter list, write CSV tables")
    p.add_argument("config")
    p.add_argument("sweep")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("scale-dump", help="scale-function table as CSV")
    p.add_argument("config")
    p.add_argument("--x-lo", type=float, default=0.0)
    p.add_argument("--x-hi", type=float, default=10.0)
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_scale_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except AssumptionError as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"invalid model or costs: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except LevySaddleError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
