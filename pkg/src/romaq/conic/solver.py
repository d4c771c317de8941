"""Embedded primal-dual interior-point solver.

Solves   minimize c^T x  s.t.  A x + s = b,  s in K
with K a product of zero, nonnegative, second-order, and PSD cones, via the
homogeneous self-dual embedding with Nesterov-Todd scaling and a Mehrotra
predictor-corrector.  Dense block factorizations only; the iteration
schedule is fixed, so identical inputs produce identical outputs.

Search directions come from the reduced system

    [ G + dI   A_eq^T ] [dx    ]   [ r1 + A_k^T H^{-1} r2k ]
    [ A_eq    -dI     ] [dz_eq ] = [ r2_eq                 ],

with G = A_k^T H^{-1} A_k over the non-zero cones.  The tiny static
regularization d keeps the factorization alive on rank-deficient corners;
one step of iterative refinement removes its bias.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from romaq.conic import cones as _cones
from romaq.conic.program import PSD, SOC, ZERO, ConicProgram

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal_infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
MAX_ITER = "max_iter"
NUMERICAL_ERROR = "numerical_error"

_REG = 1e-10
_DEBUG_NEWTON = False


@dataclass
class Solution:
    status: str
    x: np.ndarray
    z: np.ndarray
    s: np.ndarray
    objective: float
    dual_objective: float
    residuals: dict
    iterations: int
    certificate: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status == OPTIMAL


class _Cones:
    """Bookkeeping for the non-zero cone blocks in compacted coordinates."""

    def __init__(self, cone_list):
        self.blocks = []
        self.slices = []      # into the compacted cone vector
        self.zero_mask_parts = []  # (start, stop) in full row coordinates
        r_full = 0
        r_k = 0
        for cone in cone_list:
            d = cone.vec_dim
            if cone.kind == ZERO:
                self.zero_mask_parts.append((r_full, r_full + d))
            else:
                self.blocks.append(_cones.make_block(cone))
                self.slices.append(slice(r_k, r_k + d))
                r_k += d
            r_full += d
        self.rows_full = r_full
        self.total = r_k
        self.degree = sum(b.degree for b in self.blocks)

    def zero_mask(self):
        mask = np.zeros(self.rows_full, dtype=bool)
        for lo, hi in self.zero_mask_parts:
            mask[lo:hi] = True
        return mask

    def unit(self):
        e = np.zeros(self.total)
        for b, sl in zip(self.blocks, self.slices):
            e[sl] = b.unit()
        return e

    def compute_scalings(self, s, z):
        return [b.compute_scaling(s[sl], z[sl]) for b, sl in zip(self.blocks, self.slices)]

    def apply_w(self, scalings, u, trans=False, inv=False):
        out = np.zeros(self.total)
        for b, sl, sc in zip(self.blocks, self.slices, scalings):
            out[sl] = b.apply_w(sc, u[sl], trans=trans, inv=inv)
        return out

    def apply_h(self, scalings, u):
        out = np.zeros(self.total)
        for b, sl, sc in zip(self.blocks, self.slices, scalings):
            out[sl] = b.apply_h(sc, u[sl])
        return out

    def apply_hinv(self, scalings, u):
        out = np.zeros_like(u)
        for b, sl, sc in zip(self.blocks, self.slices, scalings):
            out[sl] = b.apply_hinv_mat(sc, u[sl])
        return out

    def jprod(self, u, v):
        out = np.zeros(self.total)
        for b, sl in zip(self.blocks, self.slices):
            out[sl] = b.jprod(u[sl], v[sl])
        return out

    def jsolve_lam(self, scalings, v):
        out = np.zeros(self.total)
        for b, sl, sc in zip(self.blocks, self.slices, scalings):
            out[sl] = b.jsolve_lam(sc, v[sl])
        return out

    def lam_sq(self, scalings):
        out = np.zeros(self.total)
        for b, sl, sc in zip(self.blocks, self.slices, scalings):
            out[sl] = b.lam_sq(sc)
        return out

    def max_step_scaled(self, scalings, d_scaled):
        """Largest alpha with lambda + alpha * d staying in the cone."""
        alpha = float("inf")
        for b, sl, sc in zip(self.blocks, self.slices, scalings):
            if b.kind == "psd":
                alpha = min(alpha, b.max_step_diag(sc["sig"], d_scaled[sl]))
            else:
                alpha = min(alpha, b.max_step(b.lam(sc), d_scaled[sl]))
        return alpha


def solve(prog: ConicProgram, tol=1e-7, max_iter=200, verbose=False):
    """Solve a conic program; returns a Solution with a residual report."""
    c, a, b, cone_list, c0 = prog.assemble()
    return solve_data(c, a, b, cone_list, c0, tol=tol, max_iter=max_iter, verbose=verbose)


def _equilibrate(a, b, c, cone_list, passes=3):
    """Ruiz-style scaling; SOC/PSD row blocks share one scale so the cone
    geometry is preserved, nonneg/zero rows scale per row."""
    m, nv = a.shape
    d_r = np.ones(m)
    d_c = np.ones(nv)
    groups = []
    r = 0
    for cone in cone_list:
        d = cone.vec_dim
        if cone.kind in (SOC, PSD):
            groups.append(slice(r, r + d))
        else:
            groups.extend(slice(i, i + 1) for i in range(r, r + d))
        r += d
    a_s = a.copy()
    for _ in range(passes):
        for sl in groups:
            nrm = np.abs(a_s[sl]).max(initial=0.0)
            if nrm > 0:
                f = 1.0 / np.sqrt(nrm)
                a_s[sl] *= f
                d_r[sl] *= f
        cols = np.abs(a_s).max(axis=0)
        f = np.where(cols > 0, 1.0 / np.sqrt(np.where(cols > 0, cols, 1.0)), 1.0)
        a_s *= f
        d_c *= f
    return a_s, d_r * b, d_c * c, d_r, d_c


def solve_data(c, a, b, cone_list, c0=0.0, tol=1e-7, max_iter=200, verbose=False):
    cone_struct = _Cones(cone_list)
    nv = c.size
    a0, b0, c_orig = a, b, c
    if a.size:
        a, b, c, d_row, d_col = _equilibrate(a, b, c, cone_list)
    else:
        d_row, d_col = np.ones(a.shape[0]), np.ones(nv)
    zero_rows = cone_struct.zero_mask()
    a_eq, b_eq = a[zero_rows], b[zero_rows]
    a_k, b_k = a[~zero_rows], b[~zero_rows]
    n_eq = a_eq.shape[0]

    x = np.zeros(nv)
    z_k = cone_struct.unit()
    s_k = cone_struct.unit()
    z_eq = np.zeros(n_eq)
    tau, kappa = 1.0, 1.0

    bscale = 1.0 + np.linalg.norm(b0)
    cscale = 1.0 + np.linalg.norm(c_orig)
    degree = cone_struct.degree + 1

    def full_z(zk=None, zeq=None):
        z = np.zeros(cone_struct.rows_full)
        z[zero_rows] = z_eq if zeq is None else zeq
        z[~zero_rows] = z_k if zk is None else zk
        return z

    def full_s(sk=None):
        s = np.zeros(cone_struct.rows_full)
        s[~zero_rows] = s_k if sk is None else sk
        return s

    best = None
    best_metric = np.inf
    centering_budget = 10
    use_full_kkt = False

    def make_solution(status, iterations, cert=None, info=None, use_best=False):
        xc, zc, sc_, tc = x, full_z(), full_s(), tau
        if use_best and best is not None:
            xc, zc, sc_, tc = best
        if tc <= 1e-300:
            tc = 1.0
        xs = d_col * xc / tc
        zs = d_row * zc / tc
        ss = sc_ / d_row / tc
        res = residual_report(c_orig, a0, b0, xs, zs, ss, c0)
        return Solution(
            status, xs, zs, ss,
            res["primal_objective"], res["dual_objective"],
            res, iterations, certificate=cert, info=info or {},
        )

    for it in range(max_iter):
        zf, sf = full_z(), full_s()
        res_p = a @ x + sf - b * tau
        res_d = a.T @ zf + c * tau
        res_g = c @ x + b @ zf + kappa
        mu = (s_k @ z_k + tau * kappa) / degree

        xs = d_col * x / tau
        zs = d_row * zf / tau
        ss = sf / d_row / tau
        pres = np.linalg.norm(a0 @ xs + ss - b0) / bscale
        dres = np.linalg.norm(a0.T @ zs + c_orig) / cscale
        pobj, dobj = c_orig @ xs, -b0 @ zs
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        compl = (ss @ zs) / (1.0 + abs(pobj) + abs(dobj))
        if verbose:
            print(
                "it %3d  pres %.2e  dres %.2e  gap %.2e  compl %.2e  mu %.2e  "
                "tau %.2e  kappa %.2e" % (it, pres, dres, gap, compl, mu, tau, kappa)
            )
        if pres <= tol and dres <= tol and (gap <= tol or compl <= tol):
            return make_solution(OPTIMAL, it)

        metric = max(pres, dres, min(gap, compl))
        if metric < best_metric:
            best_metric = metric
            best = (x.copy(), zf.copy(), sf.copy(), tau)

        bz = b0 @ (d_row * zf)
        if bz < -1e-12:
            zbar = d_row * zf / (-bz)
            if np.linalg.norm(a0.T @ zbar) <= tol * cscale:
                return make_solution(PRIMAL_INFEASIBLE, it, cert=zbar)
        cx = c_orig @ (d_col * x)
        if cx < -1e-12:
            xbar = d_col * x / (-cx)
            sbar = sf / d_row / (-cx)
            if np.linalg.norm(a0 @ xbar + sbar) <= tol * bscale:
                return make_solution(
                    DUAL_INFEASIBLE, it, cert=np.concatenate([xbar, sbar])
                )

        try:
            scalings = cone_struct.compute_scalings(s_k, z_k)
        except np.linalg.LinAlgError:
            return make_solution(NUMERICAL_ERROR, it, info={"stage": "scaling"}, use_best=True)

        kz_total = cone_struct.total

        def factor_reduced():
            hinv_ak = np.zeros_like(a_k)
            for blk, sl, sc in zip(cone_struct.blocks, cone_struct.slices, scalings):
                hinv_ak[sl] = blk.apply_hinv_mat(sc, a_k[sl])
            g = a_k.T @ hinv_ak
            kkt = np.zeros((nv + n_eq, nv + n_eq))
            kkt[:nv, :nv] = g
            np.fill_diagonal(kkt[:nv, :nv], np.diag(g) + _REG)
            kkt[:nv, nv:] = a_eq.T
            kkt[nv:, :nv] = a_eq
            kkt[nv:, nv:] = -_REG * np.eye(n_eq)
            lu = scipy.linalg.lu_factor(kkt)

            def solve2(r1, r2_eq, r2_k):
                rr = r1 + a_k.T @ cone_struct.apply_hinv(scalings, r2_k)
                rhs = np.concatenate([rr, r2_eq])
                sol = scipy.linalg.lu_solve(lu, rhs)
                resid = rhs - np.concatenate(
                    [g @ sol[:nv] + a_eq.T @ sol[nv:], a_eq @ sol[:nv]]
                )
                sol = sol + scipy.linalg.lu_solve(lu, resid)
                dx, dzeq = sol[:nv], sol[nv:]
                dzk = cone_struct.apply_hinv(scalings, a_k @ dx - r2_k)
                return dx, dzeq, dzk

            return solve2

        def factor_full():
            # full augmented system: robust to dependent rows, costlier
            dim = nv + n_eq + kz_total
            kkt = np.zeros((dim, dim))
            np.fill_diagonal(kkt[:nv, :nv], _REG)
            kkt[:nv, nv : nv + n_eq] = a_eq.T
            kkt[nv : nv + n_eq, :nv] = a_eq
            np.fill_diagonal(kkt[nv : nv + n_eq, nv : nv + n_eq], -_REG)
            kkt[:nv, nv + n_eq :] = a_k.T
            kkt[nv + n_eq :, :nv] = a_k
            eye_k = np.eye(kz_total)
            hcols = np.empty((kz_total, kz_total))
            for j in range(kz_total):
                hcols[:, j] = cone_struct.apply_h(scalings, eye_k[:, j])
            kkt[nv + n_eq :, nv + n_eq :] = -hcols
            lu = scipy.linalg.lu_factor(kkt)

            def solve2(r1, r2_eq, r2_k):
                rhs = np.concatenate([r1, r2_eq, r2_k])
                sol = scipy.linalg.lu_solve(lu, rhs)
                return sol[:nv], sol[nv : nv + n_eq], sol[nv + n_eq :]

            return solve2

        lamv = np.zeros(cone_struct.total)
        for blk, sl, sc in zip(cone_struct.blocks, cone_struct.slices, scalings):
            lamv[sl] = blk.lam(sc)

        fac = {}

        def set_factor(full):
            fac["solve2"] = factor_full() if full else factor_reduced()
            fac["base"] = fac["solve2"](-c, b_eq, b_k)

        def newton_raw(r_d, r_p_eq, r_p_k, r_g, bs, r_tk):
            wbs = cone_struct.apply_w(
                scalings, cone_struct.jsolve_lam(scalings, bs), trans=True
            )
            rhs2k = r_p_k - wbs
            x2, zeq2, zk2 = fac["solve2"](r_d, r_p_eq, rhs2k)
            x1, zeq1, zk1 = fac["base"]
            denom = c @ x1 + b_eq @ zeq1 + b_k @ zk1 - kappa / tau
            numer = r_g - r_tk / tau - (c @ x2 + b_eq @ zeq2 + b_k @ zk2)
            dtau = numer / denom if denom != 0.0 else 0.0
            dx = x2 + dtau * x1
            dzeq = zeq2 + dtau * zeq1
            dzk = zk2 + dtau * zk1
            ds = wbs - cone_struct.apply_h(scalings, dzk)
            dkappa = (r_tk - kappa * dtau) / tau
            return np.array([*dx, *dzeq, *dzk, *ds, dtau, dkappa])

        def newton(r_d, r_p_eq, r_p_k, r_g, bs, r_tk, refine=8):
            """Direction with full-system iterative refinement.

            Elimination through H^{-1} loses digits once a PSD or SOC block
            approaches its boundary; refining against the original Newton
            equations restores the step accuracy cheaply.  The post-step
            residuals inherit the equation error directly, so the target is
            absolute (relative to the right-hand-side scale), not relative
            to the direction norm.
            """
            kz = cone_struct.total
            rhs_scale = 1.0 + max(
                np.abs(r_d).max(initial=0.0),
                np.abs(r_p_eq).max(initial=0.0),
                np.abs(r_p_k).max(initial=0.0),
                abs(r_g),
                np.abs(bs).max(initial=0.0),
                abs(r_tk),
            )
            sol = newton_raw(r_d, r_p_eq, r_p_k, r_g, bs, r_tk)
            best_sol, best_err = sol, np.inf
            for _ in range(refine):
                dx = sol[:nv]
                dzeq = sol[nv : nv + n_eq]
                dzk = sol[nv + n_eq : nv + n_eq + kz]
                ds = sol[nv + n_eq + kz : nv + n_eq + 2 * kz]
                dtau, dkappa = sol[-2], sol[-1]
                e_d = r_d - (a_eq.T @ dzeq + a_k.T @ dzk + c * dtau)
                e_p_eq = r_p_eq - (a_eq @ dx - b_eq * dtau)
                e_p_k = r_p_k - (a_k @ dx + ds - b_k * dtau)
                e_g = r_g - (c @ dx + b_eq @ dzeq + b_k @ dzk + dkappa)
                e_bs = bs - cone_struct.jprod(
                    lamv,
                    cone_struct.apply_w(scalings, dzk)
                    + cone_struct.apply_w(scalings, ds, trans=True, inv=True),
                )
                e_tk = r_tk - (kappa * dtau + tau * dkappa)
                err = max(
                    np.abs(e_d).max(initial=0.0),
                    np.abs(e_p_eq).max(initial=0.0),
                    np.abs(e_p_k).max(initial=0.0),
                    abs(e_g),
                    np.abs(e_bs).max(initial=0.0),
                    abs(e_tk),
                )
                stalled = err >= 0.5 * best_err
                if err < best_err:
                    best_sol, best_err = sol, err
                if err <= 1e-13 * rhs_scale or stalled:
                    break
                sol = sol + newton_raw(e_d, e_p_eq, e_p_k, e_g, e_bs, e_tk)
            if _DEBUG_NEWTON:
                print("    newton refine: err %.3e (rhs %.1e)" % (best_err, rhs_scale))
            sol = best_sol
            return (
                sol[:nv],
                sol[nv : nv + n_eq],
                sol[nv + n_eq : nv + n_eq + kz],
                sol[nv + n_eq + kz : nv + n_eq + 2 * kz],
                sol[-2],
                sol[-1],
            ), best_err / rhs_scale

        def compute_directions():
            rp = -res_p
            preds, err_a = newton(
                -res_d, rp[zero_rows], rp[~zero_rows], -res_g,
                -cone_struct.lam_sq(scalings), -tau * kappa,
            )
            dxa, dzeqa, dzka, dsa, dtaua, dkappaa = preds
            ds_sc = cone_struct.apply_w(scalings, dsa, trans=True, inv=True)
            dz_sc = cone_struct.apply_w(scalings, dzka)
            alpha_aff = min(
                cone_struct.max_step_scaled(scalings, ds_sc),
                cone_struct.max_step_scaled(scalings, dz_sc),
                (-tau / dtaua) if dtaua < 0 else np.inf,
                (-kappa / dkappaa) if dkappaa < 0 else np.inf,
                1.0,
            )
            mu_aff = (
                (s_k + alpha_aff * dsa) @ (z_k + alpha_aff * dzka)
                + (tau + alpha_aff * dtaua) * (kappa + alpha_aff * dkappaa)
            ) / degree
            sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3
            eta = 1.0 - sigma
            bs = (
                sigma * mu * cone_struct.unit()
                - cone_struct.lam_sq(scalings)
                - cone_struct.jprod(ds_sc, dz_sc)
            )
            rp = -eta * res_p
            dirs, err_c = newton(
                -eta * res_d, rp[zero_rows], rp[~zero_rows], -eta * res_g,
                bs, sigma * mu - tau * kappa - dtaua * dkappaa,
            )
            return dirs, sigma, alpha_aff, max(err_a, err_c)

        try:
            set_factor(use_full_kkt)
            dirs, sigma, alpha_aff, dir_err = compute_directions()
            if dir_err > 1e-9 and not use_full_kkt:
                # reduced normal-equations path has gone numerically rank
                # deficient; switch to the full augmented factorization
                use_full_kkt = True
                set_factor(True)
                dirs, sigma, alpha_aff, dir_err = compute_directions()
        except (np.linalg.LinAlgError, ValueError):
            return make_solution(NUMERICAL_ERROR, it, info={"stage": "factor"}, use_best=True)
        dx, dzeq, dzk, ds, dtau, dkappa = dirs

        def cone_step(ds_, dzk_, dtau_, dkappa_):
            ds_sc_ = cone_struct.apply_w(scalings, ds_, trans=True, inv=True)
            dz_sc_ = cone_struct.apply_w(scalings, dzk_)
            a_ = min(
                cone_struct.max_step_scaled(scalings, ds_sc_),
                cone_struct.max_step_scaled(scalings, dz_sc_),
                (-tau / dtau_) if dtau_ < 0 else np.inf,
                (-kappa / dkappa_) if dkappa_ < 0 else np.inf,
            )
            return min(0.99 * a_, 1.0)

        alpha = cone_step(ds, dzk, dtau, dkappa)
        if alpha <= 1e-4 and centering_budget > 0:
            # combined step collapsed at a degenerate face: recenter at the
            # current mu (leaves the feasibility residuals untouched)
            zero_k = np.zeros(cone_struct.total)
            cand, _ = newton(
                np.zeros(nv), np.zeros(n_eq), zero_k, 0.0,
                mu * cone_struct.unit() - cone_struct.lam_sq(scalings),
                mu - tau * kappa,
            )
            alpha_c = cone_step(cand[3], cand[2], cand[4], cand[5])
            if alpha_c > alpha:
                dx, dzeq, dzk, ds, dtau, dkappa = cand
                alpha = alpha_c
                centering_budget -= 1
        if not np.isfinite(alpha) or alpha <= 1e-11:
            return make_solution(NUMERICAL_ERROR, it, info={"stage": "step"}, use_best=True)

        if verbose:
            print("        sigma %.3f  alpha_aff %.3e  alpha %.3e" % (sigma, alpha_aff, alpha))
        x += alpha * dx
        z_eq += alpha * dzeq
        z_k += alpha * dzk
        s_k += alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkappa

    return make_solution(MAX_ITER, max_iter, use_best=True)


def residual_report(c, a, b, x, z, s, c0=0.0):
    """Residuals recomputed from raw data, independent of solver internals."""
    pres = np.linalg.norm(a @ x + s - b) / (1.0 + np.linalg.norm(b))
    dres = np.linalg.norm(a.T @ z + c) / (1.0 + np.linalg.norm(c))
    pobj = float(c @ x + c0)
    dobj = float(-b @ z + c0)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return {
        "primal_residual": float(pres),
        "dual_residual": float(dres),
        "gap": float(gap),
        "complementarity": float(abs(s @ z)),
        "primal_objective": pobj,
        "dual_objective": dobj,
    }


def verify(prog: ConicProgram, sol: Solution):
    """Independent residual check of a solution against a program."""
    from romaq import linalg

    c, a, b, cone_list, c0 = prog.assemble()
    report = residual_report(c, a, b, sol.x, sol.z, sol.s, c0)
    dist = 0.0
    r = 0
    for cone in cone_list:
        d = cone.vec_dim
        blkv = sol.s[r : r + d]
        if cone.kind == ZERO:
            dist = max(dist, float(np.abs(blkv).max(initial=0.0)))
        elif cone.kind == SOC:
            dist = max(dist, max(0.0, float(np.linalg.norm(blkv[1:]) - blkv[0])))
        elif cone.kind == PSD:
            dist = max(dist, max(0.0, -linalg.min_eig(linalg.smat(blkv))))
        else:
            dist = max(dist, float(np.clip(-blkv, 0.0, None).max(initial=0.0)))
        r += d
    report["cone_distance"] = dist
    return report
