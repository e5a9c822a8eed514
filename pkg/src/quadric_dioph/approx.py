"""Intrinsic approximation experiments: best-approximation records, Dirichlet
constants, exponent estimates, simplex-lemma checks and cover counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .geometry import PointLike, _vec, dist_many
from .points import (
    IsotropicSubspace,
    NotIsotropicPair,
    _solve_index,
    canonical_rows,
    default_moduli,
    enumerate_array,
    local_obstruction,
    row_heights,
    solve_coordinate,
    totally_isotropic_closure,
)
from .quadform import QuadraticForm


# distances below this are float noise around a rational x and count as 0
RATIONAL_TOL = 1e-13


class NoRationalPoints(ValueError):
    pass


class DegenerateRational(ValueError):
    pass


class TooFewRecords(ValueError):
    pass


@dataclass(frozen=True)
class ApproxRecord:
    v: tuple[int, ...]
    h: int
    d: float

    @property
    def quality(self) -> float:
        return self.h * self.d


@dataclass(frozen=True)
class ExponentEstimate:
    beta_hat: float
    intercept: float
    sample_count: int
    h_cap: int

    @property
    def infinite(self) -> bool:
        return math.isinf(self.beta_hat)


# -- records --------------------------------------------------------------------


def _merge_records(records: list[ApproxRecord], x: np.ndarray, pts: np.ndarray) -> list[ApproxRecord]:
    if len(pts) == 0:
        return records
    hs = row_heights(pts)
    ds = dist_many(x, pts)
    ds[ds < RATIONAL_TOL] = 0.0
    order = np.lexsort((ds, hs))
    best = records[-1].d if records else math.inf
    last_h = records[-1].h if records else 0
    for i in order:
        h, d = int(hs[i]), float(ds[i])
        if h <= last_h and records:
            continue
        if d < best:
            records.append(ApproxRecord(tuple(int(a) for a in pts[i]), h, d))
            best, last_h = d, h
            if d == 0.0:
                break
    return records


def records_from_table(table: np.ndarray, x: PointLike) -> list[ApproxRecord]:
    """Scan a height-sorted point table, keeping strict improvements."""
    return _merge_records([], _vec(x), table)


@lru_cache(maxsize=16)
def _small_table(form: QuadraticForm, h: int) -> np.ndarray:
    return enumerate_array(form, h)


def tube_points(form: QuadraticForm, x: PointLike, h_lo: int, h_hi: int, delta: float,
                batch: int = 2_000_000) -> Optional[np.ndarray]:
    """Points v with h_lo <= H(v) <= h_hi and dist(x, v) < delta.

    Scans integer vectors near the line R x with one coordinate dropped and
    solves Q(v) = 0 for it.  Writing v = mu x + p with p orthogonal to x and
    |p| = |v| sin(angle) < |v| delta, every coordinate of the reduced vector
    differs from s x'_i / x'_j by at most 2 |p| where s is its j-th coordinate.
    Returns None if delta is too large for the scan to be complete.
    """
    x = _vec(x)
    size = form.size
    allowed = [i for i in range(size) if form.gram[i][i] != 0] or [_solve_index(form)]
    k = min(allowed, key=lambda i: abs(x[i]))
    others = [i for i in range(size) if i != k]
    xr = x[others]
    j = int(np.argmax(np.abs(xr)))
    if xr[j] < 0:
        xr = -xr
    den = xr[j] * math.sqrt(max(0.0, 1 - delta * delta)) - delta
    if den <= 0:
        return None
    vmax = math.sqrt(size) * h_hi
    s_lo = max(1, math.ceil(h_lo * den * (1 - 1e-12)))
    s_hi = h_hi
    if s_lo > s_hi:
        return np.zeros((0, size), dtype=np.int64)
    idx = [i for i in range(len(others)) if i != j]
    found = []
    s_all = np.arange(s_lo, s_hi + 1, dtype=np.int64)
    rad = 2 * delta * np.minimum(vmax, s_all / den) * (1 + 1e-12) + 1e-9
    centers = [s_all * (xr[i] / xr[j]) for i in idx]
    los = [np.maximum(np.ceil(c - rad), -h_hi).astype(np.int64) for c in centers]
    his = [np.minimum(np.floor(c + rad), h_hi).astype(np.int64) for c in centers]
    lens = [np.maximum(hi - lo + 1, 0) for lo, hi in zip(los, his)]
    per_s = np.prod(np.stack(lens), axis=0) if lens else np.ones_like(s_all)
    cum = np.cumsum(per_s)
    start = 0
    while start < len(s_all):
        base = cum[start - 1] if start else 0
        stop = int(np.searchsorted(cum, base + batch, side="right"))
        stop = max(stop, start + 1)
        sl = slice(start, stop)
        counts = per_s[sl]
        total = int(counts.sum())
        start = stop
        if total == 0:
            continue
        owner = np.repeat(np.arange(len(counts)), counts)
        r = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        rest = np.empty((total, len(others)), dtype=np.int64)
        rest[:, j] = s_all[sl][owner]
        stride = np.ones(total, dtype=np.int64)
        for pos, i in enumerate(idx):
            ln = lens[pos][sl][owner]
            rest[:, i] = los[pos][sl][owner] + (r // stride) % ln
            stride = stride * ln
        sol = solve_coordinate(form, k, rest, h_hi)
        if len(sol) == 0:
            continue
        sol = canonical_rows(sol)
        hs = row_heights(sol)
        sol = sol[(hs >= h_lo) & (hs <= h_hi)]
        if len(sol):
            sol = sol[dist_many(x, sol) < delta]
            found.append(sol)
    if not found:
        return np.zeros((0, size), dtype=np.int64)
    return np.unique(np.concatenate(found), axis=0)


def best_records(form: QuadraticForm, x: PointLike, h_max: int,
                 table: Optional[np.ndarray] = None, h_seed: int = 32) -> list[ApproxRecord]:
    """Best-approximation sequence of x by points of X(Q) with height <= h_max.

    With ``table`` the records come from a full height-sorted scan; without
    it, a small table up to ``h_seed`` starts the sequence and dyadic height
    bands are searched in a tube around x whose width is the current record.
    """
    x = _vec(x)
    if table is not None:
        recs = records_from_table(table[row_heights(table) <= h_max], x)
    else:
        h0 = min(h_max, h_seed)
        recs = records_from_table(_small_table(form, h0), x)
        lo = h0 + 1
        if not recs and lo <= h_max:
            if local_obstruction(form, default_moduli(form)) is None:
                recs = records_from_table(enumerate_array(form, h_max), x)
            lo = h_max + 1
        while lo <= h_max and recs and recs[-1].d > 0:
            hi = min(h_max, 2 * lo - 1)
            pts = tube_points(form, x, lo, hi, recs[-1].d)
            if pts is None:
                table_hi = enumerate_array(form, hi)
                pts = table_hi[row_heights(table_hi) >= lo]
            recs = _merge_records(recs, x, pts)
            lo = hi + 1
    if not recs:
        raise NoRationalPoints(f"no rational points of height <= {h_max}")
    return recs


def dirichlet_constant(records: Sequence[ApproxRecord]) -> float:
    """max_k d_k * h_{k+1}: the product at the scale where record k is superseded."""
    if not records:
        raise ValueError("no records")
    if any(r.d == 0 for r in records):
        raise DegenerateRational("x is a rational point of X")
    if len(records) == 1:
        return records[0].quality
    return max(a.d * b.h for a, b in zip(records, records[1:]))


def exponent(records: Sequence[ApproxRecord], h_min: int = 1, min_records: int = 5) -> ExponentEstimate:
    """Least-squares slope of -log d against log h over records with h >= h_min."""
    h_cap = max((r.h for r in records), default=0)
    if any(r.d == 0 for r in records):
        return ExponentEstimate(math.inf, math.nan, len(records), h_cap)
    use = [r for r in records if r.h >= h_min]
    if len(use) < min_records:
        raise TooFewRecords(f"{len(use)} records with h >= {h_min}, need {min_records}")
    lh = np.log([r.h for r in use])
    ld = -np.log([r.d for r in use])
    slope, icept = np.polyfit(lh, ld, 1)
    return ExponentEstimate(max(0.0, float(slope)), float(icept), len(use), h_cap)


# -- simplex lemma checks ---------------------------------------------------------


@dataclass
class SimplexReport:
    rho: float
    members: np.ndarray
    passed: bool
    subspace: Optional[IsotropicSubspace] = None
    violation: Optional[tuple[int, int, int]] = None
    strong: bool = False

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def certificate(self) -> Optional[dict]:
        if self.violation is None:
            return None
        i, j, b = self.violation
        return {"v": self.members[i].tolist(), "w": self.members[j].tolist(), "bilinear": b}


def _c_of(consts) -> float:
    return float(getattr(consts, "c_small", consts))


def simplex_members(table: np.ndarray, x: PointLike, rho: float, c: float, strong: bool = False,
                    heights: Optional[np.ndarray] = None) -> np.ndarray:
    hs = row_heights(table) if heights is None else heights
    cand = hs <= c / rho
    pts, hs = table[cand], hs[cand]
    if len(pts) == 0:
        return pts
    d = dist_many(x, pts)
    if strong:
        keep = d <= np.sqrt(rho / hs)
    else:
        keep = d <= rho
    return pts[keep]


def _closure_report(form, members, rho, strong) -> SimplexReport:
    if len(members) <= 1:
        sub = totally_isotropic_closure(members, form) if len(members) else None
        return SimplexReport(rho, members, True, sub, None, strong)
    try:
        sub = totally_isotropic_closure(members, form)
    except NotIsotropicPair as err:
        return SimplexReport(rho, members, False, None, (err.i, err.j, err.value), strong)
    return SimplexReport(rho, members, True, sub, None, strong)


def simplex_verify(form: QuadraticForm, x: PointLike, rho: float, consts,
                   table: np.ndarray) -> SimplexReport:
    """Rational points in B(x, rho) of height <= c/rho must span a totally isotropic subspace."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    members = simplex_members(table, x, rho, _c_of(consts))
    return _closure_report(form, members, rho, False)


def strong_simplex_verify(form: QuadraticForm, x: PointLike, rho: float, consts,
                          table: np.ndarray) -> SimplexReport:
    """Same closure test for {v : H(v) <= c/rho, dist(x, v) <= sqrt(rho / H(v))}."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    members = simplex_members(table, x, rho, _c_of(consts), strong=True)
    return _closure_report(form, members, rho, True)


# -- the unit-circle separation oracle ------------------------------------------------


def circle_chord_sq(v: Sequence[int], w: Sequence[int]) -> Fraction:
    """|p1/q1 - p2/q2|^2 for points (p, q) of x_1^2 + ... + x_n^2 = q^2, via 2 - 2<p1,p2>/(q1 q2).

    The identity is checked against the direct sum of squares.
    """
    *p1, q1 = (int(a) for a in v)
    *p2, q2 = (int(a) for a in w)
    via = 2 - Fraction(2 * sum(a * b for a, b in zip(p1, p2)), q1 * q2)
    direct = sum((Fraction(a, q1) - Fraction(b, q2)) ** 2 for a, b in zip(p1, p2))
    if via != direct:
        raise AssertionError(f"chord identity fails for {v}, {w}")
    return via


def projective_dist_sq_from_chord(s: Fraction) -> Fraction:
    """dist^2 between [(p1/q1, 1)] and [(p2/q2, 1)] when both p_i/q_i are unit vectors."""
    return s / 2 - s * s / 16


@dataclass(frozen=True)
class CircleOracle:
    predicts_at_most_one: bool
    pairs_checked: int


def circle_oracle(points: np.ndarray, rho: float, c: float) -> CircleOracle:
    """Predict from exact separations whether B(x, rho) can hold two points of height <= c/rho.

    Distinct points satisfy chord^2 >= 1/(q1 q2) >= (rho/c)^2; if the matching
    projective separation exceeds 2 rho, no ball of radius rho holds two of
    them.  Every pair in ``points`` is also checked against the exact identity
    and bound.
    """
    h_cap = math.floor(c / rho)
    r = Fraction(rho)
    if h_cap < 1:
        predicts = True
    else:
        s_min = Fraction(1, h_cap * h_cap)
        predicts = projective_dist_sq_from_chord(s_min) > 4 * r * r
    n = 0
    pts = [tuple(int(a) for a in p) for p in points]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            s = circle_chord_sq(pts[i], pts[j])
            if s < Fraction(1, pts[i][-1] * pts[j][-1]):
                raise AssertionError(f"separation bound fails for {pts[i]}, {pts[j]}")
            n += 1
    return CircleOracle(predicts, n)


# -- cover counting ------------------------------------------------------------------


@dataclass
class CoverCount:
    p: int
    beta: float
    radius: float
    qualifying: int
    count: int
    truncated: bool = False


def _greedy_net(units: np.ndarray, radius: float) -> int:
    """Size of a greedy radius-net of the given unit vectors (grid hash, cell = radius)."""
    cells: dict[tuple, list[np.ndarray]] = {}
    size = units.shape[1]
    offsets = np.stack(np.meshgrid(*([[-1, 0, 1]] * size), indexing="ij"), axis=-1).reshape(-1, size)
    count = 0
    for u in units:
        hit = False
        for w in (u, -u):
            key = np.floor(w / radius).astype(np.int64)
            for off in offsets:
                for c in cells.get(tuple(key + off), ()):
                    if np.linalg.norm(w - (w @ c) * c) <= radius:
                        hit = True
                        break
                if hit:
                    break
            if hit:
                break
        if not hit:
            cells.setdefault(tuple(np.floor(u / radius).astype(np.int64)), []).append(u)
            count += 1
    return count


def cover_count(form: QuadraticForm, beta: float, p: int, sample_budget: int,
                table: np.ndarray, radius: Optional[float] = None) -> CoverCount:
    """Number of balls needed to cover the points within 2^{-beta p} of some v with 2^p <= H(v) < 2^{p+1}.

    Balls have radius ``radius`` (default 2^{-beta p}, the size of the pieces
    of that set); the count is the size of a greedy net of the qualifying
    centres.
    """
    if beta < 1:
        raise ValueError("beta must be >= 1")
    r = 2.0 ** (-beta * p) if radius is None else radius
    hs = row_heights(table)
    band = table[(hs >= 2 ** p) & (hs < 2 ** (p + 1))]
    truncated = len(band) > sample_budget
    band = band[:sample_budget]
    if len(band) == 0:
        return CoverCount(p, beta, r, 0, 0, truncated)
    units = band / np.linalg.norm(band, axis=1, keepdims=True)
    return CoverCount(p, beta, r, len(band), _greedy_net(units, r), truncated)


@dataclass
class DimensionDiagnostic:
    beta: float
    counts: list[CoverCount] = field(default_factory=list)

    @property
    def ratios(self) -> list[float]:
        return [math.log2(c.count) / (self.beta * c.p) for c in self.counts if c.count > 0]

    @property
    def slope(self) -> float:
        """Regression slope of log2(count) against log2(1/radius) = beta p."""
        pts = [(self.beta * c.p, math.log2(c.count)) for c in self.counts if c.count > 0]
        if len(pts) < 2:
            return math.nan
        xs, ys = zip(*pts)
        return float(np.polyfit(xs, ys, 1)[0])


def cover_dimension(form: QuadraticForm, beta: float, ps: Sequence[int], table: np.ndarray,
                    sample_budget: int = 1_000_000) -> DimensionDiagnostic:
    diag = DimensionDiagnostic(beta)
    for p in ps:
        diag.counts.append(cover_count(form, beta, p, sample_budget, table))
    return diag
