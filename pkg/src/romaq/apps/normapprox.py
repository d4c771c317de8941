"""Norm approximation  min ||(Abar + D) y - b||  under budgeted uncertainty.

The uncertainty set is an entrywise box intersected with two masked
aggregate l1 budgets; the inner/outer programs bound the worst-case squared
residual from above and below.  A greedy heuristic produces feasible
near-worst scenarios used to evaluate solutions.
"""

from dataclasses import dataclass

import numpy as np

from romaq import expr as ex
from romaq import uset
from romaq.conic.program import ConicProgram
from romaq.conic.solver import OPTIMAL, solve


@dataclass
class NormApproxInstance:
    abar: np.ndarray
    b: np.ndarray
    mask1: np.ndarray
    mask2: np.ndarray
    budget: int
    rho: float

    def __post_init__(self):
        self.abar = np.asarray(self.abar, float)
        self.b = np.asarray(self.b, float)
        self.mask1 = np.asarray(self.mask1, float)
        self.mask2 = np.asarray(self.mask2, float)
        n = self.abar.shape[0]
        if self.abar.shape != (n, n) or self.mask1.shape != (n, n) or self.mask2.shape != (n, n):
            raise ValueError("matrices must all be square of one size")
        if not 1 <= self.budget <= n * n:
            raise ValueError("budget must lie in 1..n^2")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")

    @property
    def n(self):
        return self.abar.shape[0]


def budget_set(inst: NormApproxInstance):
    """Box of radius rho intersected with the two masked l1 budgets."""
    n = inst.n
    parts = [uset.NormBall("linf", inst.rho, n, n)]
    cap = inst.budget * inst.rho
    for mask in (inst.mask1, inst.mask2):
        if np.any(mask):
            parts.append(
                uset.HadamardMask(tuple(map(tuple, mask)), uset.NormBall("l1", cap, n, n))
            )
    return uset.intersection(parts, np.zeros((n, n)))


def gen_illconditioned(n, seed, with_masks=True):
    """Random test matrix with a huge condition number.

    U uniform (0,1)^{n x n}, b uniform (0,1)^n, i uniform in 1..n-1,
    D diagonal with i entries in (-5,5) and the rest in (0, 1e-8);
    Abar = U^T D U.  Optionally draws the 0/1 masks and the budget.
    """
    rng = np.random.default_rng(seed)
    u_mat = rng.uniform(0.0, 1.0, (n, n))
    b = rng.uniform(0.0, 1.0, n)
    i = int(rng.integers(1, n))
    diag = np.empty(n)
    diag[:i] = rng.uniform(-5.0, 5.0, i)
    diag[i:] = rng.uniform(0.0, 1e-8, n - i)
    abar = u_mat.T @ np.diag(diag) @ u_mat
    out = {"abar": abar, "b": b, "split": i}
    sv = np.linalg.svd(abar, compute_uv=False)
    out["condition"] = float(sv[0] / max(sv[-1], 1e-300))
    if with_masks:
        out["mask1"] = rng.integers(0, 2, (n, n)).astype(float)
        out["mask2"] = rng.integers(0, 2, (n, n)).astype(float)
        out["budget"] = int(rng.integers(1, n * n + 1))
    return out


def solve_nominal(inst: NormApproxInstance):
    """Plain least-norm solve of the nominal data."""
    n = inst.n
    prog = ConicProgram()
    y = prog.var_vector(n, "y")
    t = ex.LinExpr.var(prog.new_var("t"))
    resid = ex.lmul(inst.abar, np.array(y, dtype=object).reshape(-1, 1))[:, 0]
    prog.add_soc([t, *[resid[i] - inst.b[i] for i in range(n)]])
    prog.set_objective(t)
    sol = solve(prog)
    if sol.status != OPTIMAL:
        raise RuntimeError("nominal solve failed: %s" % sol.status)
    return np.array([e.value(sol.x) for e in y]), sol.objective


def _approx_program(inst: NormApproxInstance, omega_sq):
    n = inst.n
    zset = budget_set(inst)
    prog = ConicProgram()
    y = prog.var_vector(n, "y")
    w_mat, _ = prog.new_symmetric(n, "W")
    big = ex.zeros_mat((n + 1, n + 1))
    for i in range(n):
        for j in range(n):
            big[i, j] = w_mat[i, j]
        big[i, n] = y[i].copy()
        big[n, i] = y[i].copy()
    big[n, n] = ex.LinExpr.constant(1.0)
    prog.add_psd(big)
    # support argument 2 Abar W - 2 b y^T (Frobenius pairing with D)
    arg = ex.lmul(2.0 * inst.abar, w_mat)
    for i in range(n):
        for j in range(n):
            arg[i, j] = arg[i, j] + y[j] * (-2.0 * inst.b[i])
    support = uset.support_epigraph(zset, arg, prog)
    gram = inst.abar.T @ inst.abar + omega_sq * np.eye(n)
    objective = (
        ex.trace_pair(gram, w_mat)
        + support
        + ex.dot(-2.0 * (inst.abar.T @ inst.b), y)
        + float(inst.b @ inst.b)
    )
    prog.set_objective(objective)
    return prog, y


def solve_inner(inst: NormApproxInstance, omega):
    """Upper-bounding (safe) program; omega bounds the spectral norm."""
    prog, y = _approx_program(inst, omega**2)
    sol = solve(prog)
    if sol.status != OPTIMAL:
        raise RuntimeError("inner solve failed: %s" % sol.status)
    return np.array([e.value(sol.x) for e in y]), sol.objective


def solve_outer(inst: NormApproxInstance):
    """Lower-bounding (relaxed) program."""
    prog, y = _approx_program(inst, 0.0)
    sol = solve(prog)
    if sol.status != OPTIMAL:
        raise RuntimeError("outer solve failed: %s" % sol.status)
    return np.array([e.value(sol.x) for e in y]), sol.objective


def worst_case_heuristic(inst: NormApproxInstance, y):
    """Greedy near-worst scenario inside the budget set.

    Entries take the box-extreme sign pattern sgn(residual_i) sgn(y_j) rho,
    consuming mask budgets; columns are visited in decreasing |y_j| (ties by
    index), rows in order, and an entry is skipped when either mask budget
    would overflow.  The result is always a member of the set.
    """
    y = np.asarray(y, float)
    n = inst.n
    resid = inst.abar @ y - inst.b
    delta = np.zeros((n, n))
    c1 = c2 = 0
    cols = sorted(range(n), key=lambda j: (-abs(y[j]), j))
    for j in cols:
        for i in range(n):
            need1 = 1 if inst.mask1[i, j] else 0
            need2 = 1 if inst.mask2[i, j] else 0
            if need1 == 0 and need2 == 0:
                continue
            if c1 + need1 > inst.budget or c2 + need2 > inst.budget:
                continue
            val = np.sign(resid[i]) * np.sign(y[j]) * inst.rho
            if val == 0.0:
                continue
            delta[i, j] = val
            c1 += need1
            c2 += need2
    return delta


def worst_case_residual(inst: NormApproxInstance, y):
    delta = worst_case_heuristic(inst, y)
    return float(np.linalg.norm((inst.abar + delta) @ y - inst.b)), delta
