"""Per-cone operations for the interior-point solver.

Each block supports the Jordan-algebra pieces the Nesterov-Todd
predictor-corrector needs: unit element, interior membership, scaling-point
computation from a primal-dual pair, application of W / W^T / W^{-1} /
W^{-T} / H = W^T W and its inverse, Jordan products and quotients against
the scaled variable, and maximal cone step lengths.

PSD blocks live in svec coordinates.  Their scaling uses the factor pair
(r, r^{-T}) with Lambda = r^{-1} S r^{-T} = r^T Z r diagonal, obtained from
Cholesky factors of S and Z and an SVD (the standard construction).
"""

import numpy as np

from romaq.backend import (chol_upper, conj_svec_apply, jacobi_eigh,
                           smat_batch, svec_batch, svec_len)

_INF = float("inf")


class NonnegBlock:
    kind = "nonneg"

    def __init__(self, dim):
        self.dim = dim
        self.degree = dim

    def unit(self):
        return np.ones(self.dim)

    def interior(self, u):
        return bool(np.all(u > 0.0))

    def max_step(self, u, du):
        neg = du < 0.0
        if not np.any(neg):
            return _INF
        return float(np.min(-u[neg] / du[neg]))

    def compute_scaling(self, s, z):
        w = np.sqrt(s / z)
        return {"w": w, "lam": np.sqrt(s * z)}

    def lam(self, sc):
        return sc["lam"]

    def apply_w(self, sc, u, trans=False, inv=False):
        w = sc["w"]
        return u / w if inv else u * w

    def apply_h(self, sc, u):
        return u * sc["w"] ** 2

    def apply_hinv_mat(self, sc, mat):
        w2 = sc["w"] ** 2
        return mat / (w2[:, None] if mat.ndim == 2 else w2)

    def jprod(self, u, v):
        return u * v

    def jsolve_lam(self, sc, v):
        return v / sc["lam"]

    def lam_sq(self, sc):
        return sc["lam"] ** 2

    def mu_contrib(self, sc):
        return float(np.sum(sc["lam"] ** 2))


class SocBlock:
    kind = "soc"

    def __init__(self, dim):
        self.dim = dim
        self.degree = 1

    def unit(self):
        e = np.zeros(self.dim)
        e[0] = 1.0
        return e

    def _jres(self, u):
        return u[0] ** 2 - u[1:] @ u[1:]

    def interior(self, u):
        return u[0] > 0.0 and self._jres(u) > 0.0

    def max_step(self, u, du):
        # largest alpha with u + alpha du in the cone
        a = du[0] ** 2 - du[1:] @ du[1:]
        b = 2.0 * (u[0] * du[0] - u[1:] @ du[1:])
        c = self._jres(u)
        best = _INF
        if du[0] < 0.0:
            best = -u[0] / du[0]
        roots = []
        if abs(a) < 1e-300:
            if b < 0.0:
                roots.append(-c / b)
        else:
            disc = b * b - 4.0 * a * c
            if disc >= 0.0:
                sq = np.sqrt(disc)
                q = -0.5 * (b + np.copysign(sq, b))
                for r in (q / a, c / q if q != 0.0 else _INF):
                    if r > 0.0 and np.isfinite(r):
                        roots.append(r)
        for r in roots:
            best = min(best, r)
        return float(best)

    def compute_scaling(self, s, z):
        # NT scaling point wbar; H = beta^2 (2 wbar wbar^T - J) is the
        # quadratic representation, W = beta (2 v v^T - J) its square root
        # with the half point v = (wbar + e)/sqrt(2 (wbar_0 + 1)).
        js, jz = self._jres(s), self._jres(z)
        sn, zn = s / np.sqrt(js), z / np.sqrt(jz)
        gamma = np.sqrt(0.5 * (1.0 + sn @ zn))
        wbar = sn.copy()
        wbar[0] += zn[0]
        wbar[1:] -= zn[1:]
        wbar /= 2.0 * gamma
        v = wbar.copy()
        v[0] += 1.0
        v /= np.sqrt(2.0 * (wbar[0] + 1.0))
        beta = (js / jz) ** 0.25
        sc = {"beta": beta, "wbar": wbar, "v": v}
        sc["lam"] = self.apply_w(sc, z)
        return sc

    def lam(self, sc):
        return sc["lam"]

    @staticmethod
    def _reflect_apply(w, u):
        # (2 w w^T - J) u
        ju = u.copy()
        ju[1:] = -ju[1:]
        return 2.0 * w * (w @ u) - ju

    def apply_w(self, sc, u, trans=False, inv=False):
        # W is symmetric for this cone
        v = sc["v"]
        if inv:
            jv = v.copy()
            jv[1:] = -jv[1:]
            return self._reflect_apply(jv, u) / sc["beta"]
        return sc["beta"] * self._reflect_apply(v, u)

    def apply_h(self, sc, u):
        return sc["beta"] ** 2 * self._reflect_apply(sc["wbar"], u)

    def apply_hinv_mat(self, sc, mat):
        jw = sc["wbar"].copy()
        jw[1:] = -jw[1:]
        cur = np.atleast_2d(mat.T).T
        jm = cur.copy()
        jm[1:] = -jm[1:]
        res = (2.0 * np.outer(jw, jw @ cur) - jm) / sc["beta"] ** 2
        return res if mat.ndim == 2 else res[:, 0]

    def jprod(self, u, v):
        out = np.empty_like(u)
        out[0] = u @ v
        out[1:] = u[0] * v[1:] + v[0] * u[1:]
        return out

    def jsolve_lam(self, sc, v):
        lam = sc["lam"]
        det = lam[0] ** 2 - lam[1:] @ lam[1:]
        u0 = (lam[0] * v[0] - lam[1:] @ v[1:]) / det
        out = np.empty_like(v)
        out[0] = u0
        out[1:] = (v[1:] - u0 * lam[1:]) / lam[0]
        return out

    def lam_sq(self, sc):
        return self.jprod(sc["lam"], sc["lam"])

    def mu_contrib(self, sc):
        lam = sc["lam"]
        return float(lam @ lam)


class PsdBlock:
    kind = "psd"

    def __init__(self, side):
        self.side = side
        self.dim = svec_len(side)
        self.degree = side

    def unit(self):
        return svec_batch(np.eye(self.side))

    def _mat(self, u):
        return smat_batch(u, self.side)[0]

    def interior(self, u):
        try:
            chol_upper(self._mat(u))
            return True
        except np.linalg.LinAlgError:
            return False

    def max_step(self, u, du):
        # largest alpha with smat(u) + alpha smat(du) psd
        m = self._mat(u)
        d = self._mat(du)
        r = chol_upper(m)
        rinv_t = np.linalg.solve(r.T, d)
        scaled = np.linalg.solve(r.T, rinv_t.T)
        w, _ = jacobi_eigh(0.5 * (scaled + scaled.T))
        lo = w[-1]
        return _INF if lo >= -1e-300 else float(-1.0 / lo)

    def max_step_diag(self, lam_diag, du):
        # step for Lambda + alpha smat(du) with Lambda = diag(lam_diag)
        d = self._mat(du)
        scal = 1.0 / np.sqrt(lam_diag)
        m = scal[:, None] * d * scal[None, :]
        w, _ = jacobi_eigh(0.5 * (m + m.T))
        lo = w[-1]
        return _INF if lo >= -1e-300 else float(-1.0 / lo)

    def compute_scaling(self, s, z):
        sm, zm = self._mat(s), self._mat(z)
        ls = chol_upper(sm).T  # lower factors
        lz = chol_upper(zm).T
        u_svd, sig, vt = np.linalg.svd(lz.T @ ls)
        isq = 1.0 / np.sqrt(sig)
        r = ls @ vt.T * isq[None, :]
        rti = lz @ u_svd * isq[None, :]
        return {"r": r, "rti": rti, "sig": sig}

    def lam(self, sc):
        lam = np.zeros(self.dim)
        side = self.side
        pos = 0
        for i in range(side):
            lam[pos] = sc["sig"][i]
            pos += side - i
        return lam

    def apply_w(self, sc, u, trans=False, inv=False):
        # W u = svec(r^T U r); W^T u = svec(r U r^T);
        # W^{-1} u = svec(rti U rti^T); W^{-T} u = svec(rti^T U rti)
        r, rti = sc["r"], sc["rti"]
        if not inv:
            m = r.T if trans else r
        else:
            m = rti if trans else rti.T
        return conj_svec_apply(m, u)

    def apply_h(self, sc, u):
        t = sc["r"] @ sc["r"].T
        return conj_svec_apply(t, u)

    def apply_hinv_mat(self, sc, mat):
        tinv = sc["rti"] @ sc["rti"].T
        return conj_svec_apply(tinv, mat)

    def jprod(self, u, v):
        um, vm = self._mat(u), self._mat(v)
        return svec_batch(0.5 * (um @ vm + vm @ um))

    def jsolve_lam(self, sc, v):
        sig = sc["sig"]
        vm = self._mat(v)
        um = 2.0 * vm / (sig[:, None] + sig[None, :])
        return svec_batch(um)

    def lam_sq(self, sc):
        lam2 = np.zeros(self.dim)
        side = self.side
        pos = 0
        for i in range(side):
            lam2[pos] = sc["sig"][i] ** 2
            pos += side - i
        return lam2

    def mu_contrib(self, sc):
        return float(np.sum(sc["sig"] ** 2))


def make_block(cone):
    if cone.kind == "nonneg":
        return NonnegBlock(cone.dim)
    if cone.kind == "soc":
        return SocBlock(cone.dim)
    if cone.kind == "psd":
        return PsdBlock(cone.dim)
    raise ValueError("no interior-point block for cone %r" % (cone.kind,))
