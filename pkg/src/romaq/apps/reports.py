"""CSV report writers for the experiment drivers."""

import csv


def write_table1(path, rows, seed=None):
    """solutions x scenarios grid: objective / ann. risk / ann. return."""
    solutions = list(rows)
    scenarios = list(rows[solutions[0]])
    with open(path, "w", newline="") as fp:
        w = csv.writer(fp)
        header = ["scenario", "measure"] + solutions
        if seed is not None:
            w.writerow(["# seed", seed])
        w.writerow(header)
        for scen in scenarios:
            for measure in ("objective", "ann_risk", "ann_return"):
                w.writerow(
                    [scen, measure]
                    + ["%.6f" % rows[s][scen][measure] for s in solutions]
                )


def write_rho_sweep(path, rho_grid, series, seed=None):
    """fig2-style: one row per rho, one column per solution method."""
    names = list(series)
    with open(path, "w", newline="") as fp:
        w = csv.writer(fp)
        if seed is not None:
            w.writerow(["# seed", seed])
        w.writerow(["rho"] + names)
        for k, rho in enumerate(rho_grid):
            w.writerow(["%.6f" % rho] + ["%.6f" % series[n][k] for n in names])


def write_quartiles(path, rho_grid, quartiles, seed=None):
    """fig3-style: per rho and method, the residual quartiles."""
    names = list(quartiles)
    with open(path, "w", newline="") as fp:
        w = csv.writer(fp)
        if seed is not None:
            w.writerow(["# seed", seed])
        w.writerow(["rho", "method", "q1", "median", "q3"])
        for k, rho in enumerate(rho_grid):
            for name in names:
                q1, q2, q3 = quartiles[name][k]
                w.writerow(["%.6f" % rho, name, "%.6f" % q1, "%.6f" % q2, "%.6f" % q3])


def write_timing(path, timings, seed=None):
    with open(path, "w", newline="") as fp:
        w = csv.writer(fp)
        if seed is not None:
            w.writerow(["# seed", seed])
        w.writerow(["task", "seconds"])
        for name, secs in timings:
            w.writerow([name, "%.4f" % secs])
