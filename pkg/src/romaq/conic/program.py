"""Conic-program intermediate representation.

A program is a list of affine constraint blocks, each asserting that a
vector of affine expressions lies in a cone from {zero, nonneg, soc, psd},
plus a linear objective to minimize.  PSD blocks are stored in svec
coordinates (sqrt(2)-scaled off-diagonals), which keeps the cone self-dual
with the plain dot product.
"""

import json
from dataclasses import dataclass

import numpy as np

from romaq import expr as ex
from romaq.backend import svec_len

ZERO, NONNEG, SOC, PSD = "zero", "nonneg", "soc", "psd"


@dataclass(frozen=True)
class Cone:
    kind: str
    dim: int  # for psd: the matrix side

    def __post_init__(self):
        if self.kind not in (ZERO, NONNEG, SOC, PSD):
            raise ValueError("unknown cone kind %r" % (self.kind,))
        if self.dim < 1:
            raise ValueError("cone dimension must be >= 1")

    @property
    def vec_dim(self):
        return svec_len(self.dim) if self.kind == PSD else self.dim


class ConicProgram:
    def __init__(self):
        self.num_vars = 0
        self.blocks = []  # (Cone, list[LinExpr])
        self.objective = ex.LinExpr()
        self._names = []

    # -- variables ---------------------------------------------------------

    def new_var(self, name=None):
        idx = self.num_vars
        self.num_vars += 1
        self._names.append(name or "x%d" % idx)
        return idx

    def new_vars(self, count, name=None):
        base = name or "x"
        return np.array(
            [self.new_var("%s[%d]" % (base, i)) for i in range(count)], dtype=int
        )

    def var_vector(self, count, name=None):
        return ex.var_vec(self.new_vars(count, name))

    def new_symmetric(self, n, name=None):
        """Expression matrix of a fresh symmetric variable block."""
        base = name or "S"
        idx = np.zeros((n, n), dtype=int)
        for i in range(n):
            for j in range(i, n):
                v = self.new_var("%s[%d,%d]" % (base, i, j))
                idx[i, j] = idx[j, i] = v
        mat = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                mat[i, j] = ex.LinExpr.var(idx[i, j])
        return mat, idx

    # -- constraints -------------------------------------------------------

    def _push(self, cone, exprs):
        exprs = [e.copy() if isinstance(e, ex.LinExpr) else ex.LinExpr.constant(e)
                 for e in np.ravel(exprs)]
        if len(exprs) != cone.vec_dim:
            raise ValueError(
                "cone %s expects %d entries, got %d" % (cone, cone.vec_dim, len(exprs))
            )
        for e in exprs:
            for k in e.terms:
                if not 0 <= k < self.num_vars:
                    raise ValueError("expression references unknown variable %d" % k)
        self.blocks.append((cone, exprs))

    def add_equality(self, exprs):
        exprs = np.ravel(exprs)
        self._push(Cone(ZERO, len(exprs)), exprs)

    def add_nonneg(self, exprs):
        exprs = np.ravel(exprs)
        self._push(Cone(NONNEG, len(exprs)), exprs)

    def add_soc(self, exprs):
        """(t, x) with t >= ||x||_2."""
        exprs = np.ravel(exprs)
        self._push(Cone(SOC, len(exprs)), exprs)

    def add_psd(self, mat):
        """Assert a symmetric expression matrix is positive semidefinite."""
        if mat.shape[0] != mat.shape[1]:
            raise ValueError("psd block must be square")
        self._push(Cone(PSD, mat.shape[0]), ex.svec_mat(mat))

    def add_cone_membership(self, exprs, cone):
        if cone.kind == PSD:
            self._push(cone, np.ravel(exprs))
        elif cone.kind == ZERO:
            self.add_equality(exprs)
        elif cone.kind == NONNEG:
            self.add_nonneg(exprs)
        else:
            self.add_soc(exprs)

    def set_objective(self, objective, sense="min"):
        objective = objective if isinstance(objective, ex.LinExpr) else ex.LinExpr.constant(objective)
        if sense == "min":
            self.objective = objective.copy()
        elif sense == "max":
            self.objective = objective * -1.0
        else:
            raise ValueError("sense must be 'min' or 'max'")

    # -- assembly ----------------------------------------------------------

    def assemble(self):
        """Dense standard-form data: minimize c^T x s.t. b - A x in K."""
        nv = self.num_vars
        rows = sum(c.vec_dim for c, _ in self.blocks)
        a = np.zeros((rows, nv))
        b = np.zeros(rows)
        cones = []
        r = 0
        for cone, exprs in self.blocks:
            cones.append(cone)
            for e in exprs:
                b[r] = e.const
                for k, v in e.terms.items():
                    a[r, k] -= v
                r += 1
        c = np.zeros(nv)
        for k, v in self.objective.terms.items():
            c[k] += v
        return c, a, b, cones, self.objective.const

    # -- JSON --------------------------------------------------------------

    def to_json_dict(self):
        c, a, b, cones, c0 = self.assemble()
        out = {"num_vars": self.num_vars, "minimize": list(c), "offset": c0, "blocks": []}
        r = 0
        for cone in cones:
            d = cone.vec_dim
            out["blocks"].append(
                {
                    "cone": cone.kind,
                    "dim": cone.dim,
                    "matrix": [list(row) for row in a[r : r + d]],
                    "rhs": list(b[r : r + d]),
                }
            )
            r += d
        return out

    def dump_json(self, fp_or_path):
        payload = self.to_json_dict()
        if hasattr(fp_or_path, "write"):
            json.dump(payload, fp_or_path, indent=1)
        else:
            with open(fp_or_path, "w") as fp:
                json.dump(payload, fp, indent=1)

    @staticmethod
    def from_json_dict(payload):
        prog = ConicProgram()
        nv = int(payload["num_vars"])
        prog.new_vars(nv)
        obj = ex.LinExpr.constant(payload.get("offset", 0.0))
        for k, v in enumerate(payload["minimize"]):
            if v:
                obj += ex.LinExpr.var(k, v)
        prog.objective = obj
        for blk in payload["blocks"]:
            cone = Cone(blk["cone"], int(blk["dim"]))
            mat = np.asarray(blk["matrix"], dtype=float)
            rhs = np.asarray(blk["rhs"], dtype=float)
            if mat.shape != (cone.vec_dim, nv) or rhs.shape != (cone.vec_dim,):
                raise ValueError("inconsistent block dimensions in JSON program")
            exprs = []
            for i in range(cone.vec_dim):
                e = ex.LinExpr.constant(rhs[i])
                for k in range(nv):
                    if mat[i, k]:
                        e += ex.LinExpr.var(k, -mat[i, k])
                exprs.append(e)
            prog._push(cone, exprs)
        return prog

    @staticmethod
    def load_json(fp_or_path):
        if hasattr(fp_or_path, "read"):
            payload = json.load(fp_or_path)
        else:
            with open(fp_or_path) as fp:
                payload = json.load(fp)
        return ConicProgram.from_json_dict(payload)
