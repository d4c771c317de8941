"""Command-line interface.

Verbs: support-eval, solve-rc, check-assumptions, confset, portfolio,
norm-approx, regression, worst-case, solve.  JSON for structured inputs,
CSV for tabular data.  Exit codes: 0 success, 2 validation error, 3 solver
failure.
"""

import argparse
import json
import math
import sys
import time

import numpy as np

from romaq import assumptions, datadriven, linalg, rc, uset
from romaq.apps import normapprox, portfolio, regression, reports
from romaq.conic.program import ConicProgram
from romaq.conic.solver import OPTIMAL, solve


class ValidationError(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as fp:
            return json.load(fp)
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError("cannot read JSON %s: %s" % (path, e))


def _matrix(data, name):
    try:
        out = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError("field %r is not numeric" % name)
    if not np.all(np.isfinite(out)):
        raise ValidationError("field %r has non-finite entries" % name)
    return out


def cmd_support_eval(args):
    zset = uset.from_json_dict(_load_json(args.set))
    mat = _matrix(_load_json(args.matrix), "matrix")
    value = uset.support_value(zset, mat)
    print("%.6g" % value)
    return 0


def _robust_spec_from_json(payload):
    try:
        zset = uset.from_json_dict(payload["set"])
        spec = rc.RobustSpec(
            abar=_matrix(payload["abar"], "abar"),
            bbar=_matrix(payload.get("bbar", np.zeros(len(payload["abar"][0]))), "bbar"),
            avec=_matrix(payload.get("a", np.zeros(len(payload["abar"][0]))), "a"),
            c=float(payload.get("c", 0.0)),
            zset=zset,
            form=payload.get("form", "quadratic"),
            mode=payload.get("mode", "concave"),
            dmat=_matrix(payload["d"], "d") if "d" in payload else None,
        )
    except (KeyError, ValueError) as e:
        raise ValidationError("bad robust spec: %s" % e)
    return spec, payload


def cmd_solve_rc(args):
    spec, payload = _robust_spec_from_json(_load_json(args.spec))
    prog = ConicProgram()
    if spec.mode == rc.CONCAVE:
        res = rc.build_exact(spec, prog)
    elif args.variant == "inner":
        omega = payload.get("omega") or assumptions.omega_bound(spec.zset)
        res = rc.build_inner(spec, float(omega), prog)
    else:
        res = rc.build_outer(spec, prog)
    obj = payload.get("objective")
    if obj is None:
        obj = [1.0] * len(res.y)
    from romaq import expr as ex

    prog.set_objective(ex.dot(_matrix(obj, "objective"), res.y), sense="max")
    sol = solve(prog, tol=args.tol, max_iter=args.max_iter)
    if sol.status != OPTIMAL:
        print(json.dumps({"status": sol.status, "residuals": sol.residuals}, indent=1))
        return 3
    out = {
        "status": sol.status,
        "objective": -sol.objective,
        "y": [e.value(sol.x) for e in res.y],
        "w": [[res.w[i, j].value(sol.x) for j in range(res.w.shape[1])]
              for i in range(res.w.shape[0])],
        "flags": res.flags,
    }
    print(json.dumps(out, indent=1))
    return 0


def cmd_check_assumptions(args):
    payload = _load_json(args.spec)
    try:
        zset = uset.from_json_dict(payload["set"])
        abar = _matrix(payload["abar"], "abar")
    except KeyError as e:
        raise ValidationError("missing field %s" % e)
    rep = assumptions.report(abar, zset, samples=args.samples, seed=args.seed)
    print(json.dumps(rep.to_json_dict(), indent=1))
    return 0


def cmd_confset(args):
    try:
        names, data = datadriven.load_returns_csv(args.csv, percent=args.percent)
    except (OSError, ValueError) as e:
        raise ValidationError("cannot read CSV %s: %s" % (args.csv, e))
    est = datadriven.estimate(data)
    cs = datadriven.build_confidence_set(est, args.alpha)
    out = {
        "names": names,
        "mu": cs.mu.tolist(),
        "sigma": cs.sigma.tolist(),
        "rho": cs.rho,
        "rank": cs.rank,
        "n_obs": cs.n_obs,
        "alpha": cs.alpha,
        "psi": cs.psi.tolist(),
        "r_factor": cs.r_factor.tolist(),
    }
    print(json.dumps(out, indent=1))
    return 0


def cmd_portfolio(args):
    try:
        names, data = datadriven.load_returns_csv(args.csv, percent=args.percent)
    except (OSError, ValueError) as e:
        raise ValidationError("cannot read CSV %s: %s" % (args.csv, e))
    t0 = time.time()
    sols, rows, est, cs_hi, cs_lo = portfolio.run_comparison(
        data, lam=args.risk_aversion, alpha=args.alpha, alpha_small=args.alpha_small
    )
    out = args.out or "table1.csv"
    reports.write_table1(out, rows)
    print("assets:", ", ".join(names))
    for name, w in sols.items():
        print("%-12s %s" % (name, " ".join("%.4f" % v for v in w)))
    print("wrote %s (%.1fs)" % (out, time.time() - t0))
    return 0


def cmd_norm_approx(args):
    rng_seeds = range(args.seed, args.seed + args.seeds)
    rho_grid = [args.rho] if args.rho is not None else list(np.linspace(0.0, 0.1, 6))
    series = {"nominal": [], "inner": [], "outer": []}
    quart = {"nominal": [], "inner": [], "outer": []}
    timings = []
    t_all = time.time()
    for rho in rho_grid:
        per = {"nominal": [], "inner": [], "outer": []}
        for seed in rng_seeds:
            data = normapprox.gen_illconditioned(args.n, seed)
            rho_eff = max(rho, 1e-6)
            inst = normapprox.NormApproxInstance(
                data["abar"], data["b"], data["mask1"], data["mask2"],
                data["budget"], rho_eff,
            )
            omega = assumptions.omega_bound(normapprox.budget_set(inst))
            t0 = time.time()
            y_n, _ = normapprox.solve_nominal(inst)
            timings.append(("nominal[rho=%.3f,seed=%d]" % (rho, seed), time.time() - t0))
            t0 = time.time()
            y_i, _ = normapprox.solve_inner(inst, omega)
            timings.append(("inner[rho=%.3f,seed=%d]" % (rho, seed), time.time() - t0))
            t0 = time.time()
            y_o, _ = normapprox.solve_outer(inst)
            timings.append(("outer[rho=%.3f,seed=%d]" % (rho, seed), time.time() - t0))
            for name, y in (("nominal", y_n), ("inner", y_i), ("outer", y_o)):
                per[name].append(normapprox.worst_case_residual(inst, y)[0])
        for name in per:
            vals = np.asarray(per[name])
            series[name].append(float(vals.mean()))
            quart[name].append(tuple(np.percentile(vals, [25, 50, 75])))
    out_dir = args.out or "."
    reports.write_rho_sweep("%s/fig2.csv" % out_dir, rho_grid, series, seed=args.seed)
    reports.write_quartiles("%s/fig3.csv" % out_dir, rho_grid, quart, seed=args.seed)
    reports.write_timing("%s/timing.csv" % out_dir, timings, seed=args.seed)
    print("wrote fig2.csv fig3.csv timing.csv in %s (%.1fs)" % (out_dir, time.time() - t_all))
    return 0


def cmd_regression(args):
    if args.csv:
        try:
            names, data = datadriven.load_returns_csv(args.csv)
        except (OSError, ValueError) as e:
            raise ValidationError("cannot read CSV %s: %s" % (args.csv, e))
        resp_idx = names.index(args.response) if args.response in names else -1
        if resp_idx < 0:
            raise ValidationError("response column %r not found" % args.response)
        response = data[:, resp_idx]
        x_mat = np.delete(data, resp_idx, axis=1)
        agg = tuple(int(i) for i in args.agg_cols.split(",")) if args.agg_cols else ()
    else:
        x_mat, response = regression.gen_synthetic(args.seed, m=args.m, n=args.n)
        agg = tuple(range(min(2, args.n)))
    inst = regression.from_fractions(x_mat, response, agg)
    y_n, obj_n = regression.solve_nominal(inst)
    y_i, obj_i = regression.solve_inner(inst)
    w_n, _ = regression.worst_case_residual(inst, y_n)
    w_i, _ = regression.worst_case_residual(inst, y_i)
    out = {
        "omega": regression.regression_omega(inst),
        "nominal": {"coef": y_n.tolist(), "residual": obj_n, "worst_case": w_n},
        "robust": {"coef": y_i.tolist(), "objective": obj_i, "worst_case": w_i},
    }
    print(json.dumps(out, indent=1))
    return 0


def cmd_worst_case(args):
    payload = _load_json(args.instance)
    try:
        inst = normapprox.NormApproxInstance(
            _matrix(payload["abar"], "abar"),
            _matrix(payload["b"], "b"),
            _matrix(payload["mask1"], "mask1"),
            _matrix(payload["mask2"], "mask2"),
            int(payload["budget"]),
            float(payload["rho"]),
        )
        y = _matrix(payload["y"], "y")
    except (KeyError, ValueError) as e:
        raise ValidationError("bad instance: %s" % e)
    value, delta = normapprox.worst_case_residual(inst, y)
    for row in delta:
        print(" ".join("%7.4g" % v for v in row))
    print("%.6g" % value)
    return 0


def cmd_solve(args):
    payload = _load_json(args.program)
    try:
        prog = ConicProgram.from_json_dict(payload)
    except (KeyError, ValueError, TypeError) as e:
        raise ValidationError("bad program: %s" % e)
    sol = solve(prog, tol=args.tol, max_iter=args.max_iter)
    out = {
        "status": sol.status,
        "objective": sol.objective,
        "x": sol.x.tolist(),
        "residuals": sol.residuals,
        "iterations": sol.iterations,
    }
    print(json.dumps(out, indent=1))
    return 0 if sol.status == OPTIMAL else 3


def build_parser():
    p = argparse.ArgumentParser(prog="romaq", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("support-eval", help="evaluate a support function")
    q.add_argument("--set", required=True)
    q.add_argument("--matrix", required=True)
    q.set_defaults(func=cmd_support_eval)

    q = sub.add_parser("solve-rc", help="solve one robust constraint spec")
    q.add_argument("--spec", required=True)
    q.add_argument("--variant", choices=["exact", "inner", "outer"], default="exact")
    q.add_argument("--tol", type=float, default=1e-7)
    q.add_argument("--max-iter", type=int, default=200)
    q.set_defaults(func=cmd_solve_rc)

    q = sub.add_parser("check-assumptions", help="omega bound and Gram condition")
    q.add_argument("--spec", required=True)
    q.add_argument("--samples", type=int, default=2000)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_check_assumptions)

    q = sub.add_parser("confset", help="confidence set from returns CSV")
    q.add_argument("--csv", required=True)
    q.add_argument("--alpha", type=float, default=0.05)
    q.add_argument("--percent", action="store_true", help="divide inputs by 100")
    q.set_defaults(func=cmd_confset)

    q = sub.add_parser("portfolio", help="nominal/robust/chance comparison")
    q.add_argument("--csv", required=True)
    q.add_argument("--alpha", type=float, default=0.05)
    q.add_argument("--alpha-small", type=float, default=0.98)
    q.add_argument("--risk-aversion", type=float, default=3.0)
    q.add_argument("--percent", action="store_true")
    q.add_argument("--out")
    q.set_defaults(func=cmd_portfolio)

    q = sub.add_parser("norm-approx", help="norm approximation experiments")
    q.add_argument("--n", type=int, default=20)
    q.add_argument("--seeds", type=int, default=5)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--rho", type=float)
    q.add_argument("--out")
    q.set_defaults(func=cmd_norm_approx)

    q = sub.add_parser("regression", help="robust regression line")
    q.add_argument("--csv")
    q.add_argument("--response", default="y")
    q.add_argument("--agg-cols", default="")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--m", type=int, default=30)
    q.add_argument("--n", type=int, default=3)
    q.set_defaults(func=cmd_regression)

    q = sub.add_parser("worst-case", help="greedy worst-case scenario")
    q.add_argument("--instance", required=True)
    q.set_defaults(func=cmd_worst_case)

    q = sub.add_parser("solve", help="solve a raw conic program JSON")
    q.add_argument("program")
    q.add_argument("--tol", type=float, default=1e-7)
    q.add_argument("--max-iter", type=int, default=200)
    q.set_defaults(func=cmd_solve)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    except (ValueError, uset.UnsupportedOperation) as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    except RuntimeError as e:
        print("solver error: %s" % e, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
