"""The diagonal flow g_t^x attached to a point x of a quadric and the norm
inequality relating ||g_t^x v|| to the approximation of x by v."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .geometry import PointLike, dist_many, unit
from .points import row_heights
from .quadform import (
    QuadFormError,
    QuadraticForm,
    hyperbolic_normalize,
    inertia,
    is_good_form,
    residual_gram,
)

EXACT = "exact-orthogonal"
CONJUGATED = "conjugated"


class NotGoodForm(QuadFormError):
    pass


class KernelPoint(QuadFormError):
    pass


@dataclass(frozen=True)
class DaniConstants:
    c0: float
    c1: float
    c_big: float
    c_small: float


def _opnorm(m) -> float:
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvalsh(m)).max())


def constants(form: QuadraticForm) -> DaniConstants:
    """c0 = max(2, |Q~|), c1 = |Q|, C = 3 c0, c = 1 / (C sqrt(5 c1))."""
    if not is_good_form(form) or form.gram[0][-1] != 1:
        raise NotGoodForm("constants need the form 2 y_1 y_{n+1} + Q~(y_2..y_n)")
    c0 = max(2.0, _opnorm(residual_gram(form)))
    c1 = _opnorm(form.gram)
    big = 3.0 * c0
    return DaniConstants(c0, c1, big, 1.0 / (big * math.sqrt(5.0 * c1)))


@dataclass(frozen=True)
class TransportedConstant:
    """Simplex constant for a form that is not in hyperbolic normal form.

    ``good`` holds the constants of T^T A T, and the effective constant
    divides c_small by the height distortion D |T^{-1}|_inf and the metric
    distortion cond(T) of the change of basis T.
    """

    good: DaniConstants
    height_factor: float
    metric_factor: float
    c_small: float
    good_gram: tuple


def transported_constants(form: QuadraticForm, base: Sequence[int]) -> TransportedConstant:
    hb = hyperbolic_normalize(form, base)
    size = form.size
    tg = hb.transformed_gram(form)
    g = QuadraticForm.from_rational(tg)
    if g.gram != tuple(tuple(int(a) for a in r) for r in tg):
        raise NotGoodForm("transformed Gram is not integral; rescale the form first")
    good = constants(g)
    t = np.array([[float(a) for a in r] for r in hb.basis])
    tinv_exact = _inverse([[a for a in r] for r in hb.basis])
    den = math.lcm(*(a.denominator for r in tinv_exact for a in r))
    tinf = max(sum(abs(float(a)) for a in r) for r in tinv_exact)
    s = np.linalg.svd(t, compute_uv=False)
    hf = den * tinf
    mf = float(s.max() / s.min())
    return TransportedConstant(good, hf, mf, good.c_small / (hf * mf), g.gram)


def _inverse(m):
    n = len(m)
    a = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(m)]
    for c in range(n):
        p = next(i for i in range(c, n) if a[i][c] != 0)
        a[c], a[p] = a[p], a[c]
        inv = 1 / a[c][c]
        a[c] = [x * inv for x in a[c]]
        for i in range(n):
            if i != c and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return [r[n:] for r in a]


def _pivoted_frame(first: np.ndarray, proj: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal columns: ``first``, then Gram-Schmidt on the columns of ``proj``
    taking the largest residual each time."""
    frame = [first / np.linalg.norm(first)]
    cols = [proj[:, j] for j in range(proj.shape[1])]
    while len(frame) < dim:
        q = np.column_stack(frame)
        resid = [c - q @ (q.T @ c) for c in cols]
        norms = [np.linalg.norm(r) for r in resid]
        j = int(np.argmax(norms))
        frame.append(resid[j] / norms[j])
    return np.column_stack(frame)


@dataclass(frozen=True)
class FlowContext:
    form: QuadraticForm
    x: np.ndarray
    u_x: np.ndarray        # maps x onto the reference isotropic line
    scale: np.ndarray      # N; identity in exact-orthogonal mode
    rotation: np.ndarray   # orthogonal part u, commuting with sign(A)
    ref: np.ndarray
    ref_dual: np.ndarray
    mode: str

    def boost(self, t: float) -> np.ndarray:
        r, s = self.ref, self.ref_dual
        return np.eye(len(r)) + (math.exp(-t) - 1) * np.outer(r, r) + (math.exp(t) - 1) * np.outer(s, s)

    def matrix(self, t: float) -> np.ndarray:
        """g_t^x = N^{-1} u^T h_t u N (= u_x^{-1} a_t u_x for good forms with spectrum +-1)."""
        core = self.rotation.T @ self.boost(t) @ self.rotation
        if self.mode == EXACT:
            return core
        return np.linalg.solve(self.scale, core @ self.scale)


def build_context(form: QuadraticForm, x: PointLike) -> FlowContext:
    a = form.matrix.astype(np.float64)
    size = form.size
    x = unit(np.asarray(getattr(x, "coords", x), dtype=np.float64))
    if np.linalg.norm(a @ x) < 1e-12:
        raise KernelPoint("x lies in the kernel of Q")
    if abs(x @ a @ x) > 1e-9 * max(1.0, np.abs(a).max()):
        raise QuadFormError("x is not on the quadric")
    lam, vecs = np.linalg.eigh(a)
    if np.any(np.abs(lam) < 1e-12):
        raise QuadFormError("the flow needs a nonsingular form")
    exact = np.allclose(np.abs(lam), 1.0, atol=1e-12, rtol=0)
    if exact:
        scale = np.eye(size)
        sign = a
    else:
        scale = vecs @ np.diag(np.sqrt(np.abs(lam))) @ vecs.T
        sign = vecs @ np.diag(np.sign(lam)) @ vecs.T
    p_plus = (np.eye(size) + sign) / 2
    p_minus = (np.eye(size) - sign) / 2
    if exact and is_good_form(form) and form.gram[0][-1] == 1:
        ref = np.eye(size)[0]
    else:
        fp = _pivoted_frame(p_plus[:, np.argmax(np.linalg.norm(p_plus, axis=0))], p_plus, 1)
        fm = _pivoted_frame(p_minus[:, np.argmax(np.linalg.norm(p_minus, axis=0))], p_minus, 1)
        ref = (fp[:, 0] + fm[:, 0]) / math.sqrt(2)
    ref_p, ref_m = p_plus @ ref, p_minus @ ref
    xs = scale @ x
    xs = xs / np.linalg.norm(xs)
    x_p, x_m = p_plus @ xs, p_minus @ xs
    dim_p = int(round(np.trace(p_plus)))
    dim_m = size - dim_p
    rot = (_pivoted_frame(ref_p, p_plus, dim_p) @ _pivoted_frame(x_p, p_plus, dim_p).T
           + _pivoted_frame(ref_m, p_minus, dim_m) @ _pivoted_frame(x_m, p_minus, dim_m).T)
    return FlowContext(
        form=form,
        x=x,
        u_x=rot @ scale,
        scale=scale,
        rotation=rot,
        ref=ref,
        ref_dual=ref_p - ref_m,
        mode=EXACT if exact else CONJUGATED,
    )


def flow_norm(ctx: FlowContext, v: Sequence[int], t: float) -> float:
    return float(np.linalg.norm(ctx.matrix(t) @ np.asarray(v, dtype=np.float64)))


@dataclass(frozen=True)
class DaniReport:
    t: float
    height: int
    dist: float
    lhs: float
    rhs: float
    ratio: float
    mode: str


def dani_rhs(c_big: float, h, d, t):
    h = np.asarray(h, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    return c_big * np.maximum.reduce([np.exp(-t) * h, h * d, np.exp(t) * h * d * d])


def verify_dani(ctx: FlowContext, consts: DaniConstants, v: Sequence[int], t: float) -> DaniReport:
    v = np.asarray(v, dtype=np.int64)
    h = int(np.abs(v).max())
    d = float(dist_many(ctx.x, v[None, :])[0])
    lhs = flow_norm(ctx, v, t)
    rhs = float(dani_rhs(consts.c_big, h, d, t))
    return DaniReport(t, h, d, lhs, rhs, lhs / rhs, ctx.mode)


def dani_sweep(ctx: FlowContext, consts: DaniConstants, vs: np.ndarray, ts: np.ndarray) -> list[DaniReport]:
    """verify_dani for pairs (vs[i], ts[i]) sharing one base point."""
    vs = np.asarray(vs, dtype=np.int64)
    ts = np.asarray(ts, dtype=np.float64)
    hs = row_heights(vs)
    ds = dist_many(ctx.x, vs)
    out = []
    for v, h, d, t in zip(vs.astype(np.float64), hs, ds, ts):
        lhs = float(np.linalg.norm(ctx.matrix(float(t)) @ v))
        rhs = float(dani_rhs(consts.c_big, h, d, t))
        out.append(DaniReport(float(t), int(h), float(d), lhs, rhs, lhs / rhs, ctx.mode))
    return out


def dual_use_ratio(ctx: FlowContext, consts: DaniConstants, table: np.ndarray, rho: float) -> float:
    """max ||g_t v|| / (C c) with e^t = 1/rho over v in B(x, rho) with H(v) <= c/rho (0 if none).

    The simplex argument needs this to stay <= 1.
    """
    hs = row_heights(table)
    pts = table[hs <= consts.c_small / rho]
    if len(pts) == 0:
        return 0.0
    pts = pts[dist_many(ctx.x, pts) <= rho]
    if len(pts) == 0:
        return 0.0
    g = ctx.matrix(math.log(1 / rho))
    norms = np.linalg.norm(pts.astype(np.float64) @ g.T, axis=1)
    return float(norms.max() / (consts.c_big * consts.c_small))


def t_grid() -> np.ndarray:
    return np.linspace(0.0, 12.0, 49)


def write_dani_csv(reports: Sequence[DaniReport], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t", "H", "dist", "lhs", "rhs", "ratio", "mode"])
    for r in reports:
        writer.writerow([repr(r.t), r.height, repr(r.dist), repr(r.lhs), repr(r.rhs), repr(r.ratio), r.mode])


def nonsingular(form: QuadraticForm) -> bool:
    return inertia(form).nonsingular
