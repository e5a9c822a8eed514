"""Rational points on projective quadrics: canonical form, enumeration by
height, totally isotropic closures and bounds on the Q-rank."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .quadform import (
    QuadFormError,
    QuadraticForm,
    bilinear,
    determinant,
    evaluate,
    inertia,
    is_good_form,
    rank,
)

log = logging.getLogger(__name__)

_CHUNK = 1 << 20


class ZeroVector(QuadFormError):
    pass


class BasePointInvalid(QuadFormError):
    pass


class NotIsotropicPair(QuadFormError):
    def __init__(self, i: int, j: int, value: int):
        super().__init__(f"B(v{i}, v{j}) = {value} != 0")
        self.i, self.j, self.value = i, j, value


@dataclass(frozen=True, order=True)
class RationalProjectivePoint:
    """Primitive integer vector whose last nonzero coordinate is positive."""

    coords: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(a) for a in self.coords)
        if math.gcd(*c) != 1:
            raise ValueError(f"{c} is not primitive")
        if next(a for a in reversed(c) if a != 0) < 0:
            raise ValueError(f"{c} is not sign-canonical")
        object.__setattr__(self, "coords", c)

    @property
    def height(self) -> int:
        return max(abs(a) for a in self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def __getitem__(self, i):
        return self.coords[i]


def canonicalize(v: Sequence[int]) -> RationalProjectivePoint:
    v = [int(a) for a in v]
    g = math.gcd(*v)
    if g == 0:
        raise ZeroVector("cannot projectivize the zero vector")
    v = [a // g for a in v]
    if next(a for a in reversed(v) if a != 0) < 0:
        v = [-a for a in v]
    return RationalProjectivePoint(tuple(v))


def height(v: Sequence[int]) -> int:
    return max(abs(int(a)) for a in v)


@dataclass(frozen=True)
class IsotropicSubspace:
    basis: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        b = tuple(tuple(int(a) for a in v) for v in self.basis)
        if not b:
            raise ValueError("an isotropic subspace needs at least one basis vector")
        if rank(b) != len(b):
            raise ValueError("basis vectors are linearly dependent")
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def is_totally_isotropic(self, form: QuadraticForm) -> bool:
        return all(bilinear(form, u, w) == 0 for u in self.basis for w in self.basis)

    def contains(self, v: Sequence[int]) -> bool:
        return rank(list(self.basis) + [tuple(int(a) for a in v)]) == self.dim


@dataclass(frozen=True)
class QRankBounds:
    lower: int
    upper: int
    witness: Optional[IsotropicSubspace] = None
    obstruction: Optional[int] = None

    @property
    def exact(self) -> bool:
        return self.lower == self.upper


# -- array helpers -----------------------------------------------------------


def canonical_rows(v: np.ndarray) -> np.ndarray:
    """Primitive, sign-canonical rows; zero rows and non-primitive rows are dropped."""
    if len(v) == 0:
        return v.reshape(0, v.shape[1] if v.ndim == 2 else 0)
    g = np.gcd.reduce(np.abs(v), axis=1)
    v = v[g == 1]
    nz = v != 0
    last = v.shape[1] - 1 - np.argmax(nz[:, ::-1], axis=1)
    sign = np.sign(v[np.arange(len(v)), last])
    return v * sign[:, None]


def row_heights(v: np.ndarray) -> np.ndarray:
    return np.abs(v).max(axis=1) if len(v) else np.zeros(0, dtype=np.int64)


def sort_table(v: np.ndarray) -> np.ndarray:
    """Unique rows ordered by height, then lexicographically."""
    if len(v) == 0:
        return v
    v = np.unique(v, axis=0)
    keys = [v[:, i] for i in range(v.shape[1] - 1, -1, -1)] + [row_heights(v)]
    return v[np.lexsort(keys)]


def _box(h: int, ndim: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    cols = np.unravel_index(idx, (2 * h + 1,) * ndim) if ndim else ()
    return np.stack(cols, axis=1) - h if ndim else np.zeros((len(idx), 0), dtype=np.int64)


def _isqrt(a: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(a.astype(np.float64))).astype(np.int64)
    r -= (r * r > a).astype(np.int64)
    r += ((r + 1) * (r + 1) <= a).astype(np.int64)
    return r


def solve_coordinate(form: QuadraticForm, k: int, rest: np.ndarray, h: int) -> np.ndarray:
    """All integer v with Q(v)=0, |v_k| <= h and v without coordinate k equal to a row of ``rest``."""
    a = form.matrix
    others = [i for i in range(form.size) if i != k]
    sub = a[np.ix_(others, others)]
    lin = rest @ a[others, k]
    const = np.einsum("ij,jk,ik->i", rest, sub, rest)
    akk = int(a[k, k])
    out = []
    if akk != 0:
        disc = lin * lin - akk * const
        ok = disc >= 0
        lin, disc, rows = lin[ok], disc[ok], rest[ok]
        r = _isqrt(disc)
        sq = r * r == disc
        lin, r, rows = lin[sq], r[sq], rows[sq]
        for sgn in (1, -1):
            num = -lin + sgn * r
            good = (num % akk == 0)
            vk = num[good] // akk
            keep = np.abs(vk) <= h
            out.append(np.insert(rows[good][keep], k, vk[keep], axis=1))
    else:
        lin2 = 2 * lin
        nz = lin2 != 0
        num, den, rows = -const[nz], lin2[nz], rest[nz]
        good = num % den == 0
        vk = num[good] // den[good]
        keep = np.abs(vk) <= h
        out.append(np.insert(rows[good][keep], k, vk[keep], axis=1))
        free = (~nz) & (const == 0)
        if free.any():
            rows = rest[free]
            for vk in range(-h, h + 1):
                out.append(np.insert(rows, k, vk, axis=1))
    return np.concatenate(out) if out else np.zeros((0, form.size), dtype=np.int64)


def _solve_index(form: QuadraticForm) -> int:
    diag = [i for i in range(form.size) if form.gram[i][i] != 0]
    if diag:
        return diag[-1]
    return next(i for i in range(form.size) if any(form.gram[i]))


# -- enumeration ---------------------------------------------------------------


def bruteforce_array(form: QuadraticForm, h_max: int) -> np.ndarray:
    """Exhaustive scan of the box |v_i| <= h_max, solving Q(v)=0 for one coordinate.

    The free coordinates are scanned with the first one nonnegative (v and -v
    are the same projective point).
    """
    if h_max < 1:
        raise ValueError("h_max must be >= 1")
    k = _solve_index(form)
    nfree = form.size - 1
    side = 2 * h_max + 1
    # first free coordinate >= 0: skip the lower part of the flattened box
    start = (side ** nfree) // side * h_max if nfree else 0
    total = side ** nfree
    found = []
    for lo in range(start, total, _CHUNK):
        rest = _box(h_max, nfree, lo, min(lo + _CHUNK, total))
        sol = solve_coordinate(form, k, rest, h_max)
        if len(sol):
            found.append(canonical_rows(sol))
    if not found:
        return np.zeros((0, form.size), dtype=np.int64)
    return sort_table(np.concatenate(found))


def good_form_array(form: QuadraticForm, h_max: int) -> np.ndarray:
    """Enumeration for 2a y_1 y_{n+1} + Q~(w) = 0 by matching products y_1 y_{n+1}."""
    if not is_good_form(form):
        raise QuadFormError("form is not in hyperbolic normal form")
    a = form.matrix
    size = form.size
    m = size - 2
    coef = 2 * int(a[0, size - 1])
    res = a[1:-1, 1:-1]
    side = 2 * h_max + 1
    ys = np.arange(-h_max, h_max + 1, dtype=np.int64)
    y1, yl = np.meshgrid(ys, ys, indexing="ij")
    y1, yl = y1.ravel(), yl.ravel()
    prod = y1 * yl
    order = np.argsort(prod, kind="stable")
    prod_sorted, y1s, yls = prod[order], y1[order], yl[order]
    found = [np.array([[1] + [0] * (size - 1), [0] * (size - 1) + [1]], dtype=np.int64)]
    total = side ** m
    start = (side ** m) // side * h_max if m else 0
    for lo in range(start, total, _CHUNK):
        w = _box(h_max, m, lo, min(lo + _CHUNK, total))
        w = w[np.any(w != 0, axis=1)]
        q = np.einsum("ij,jk,ik->i", w, res, w)
        ok = q % coef == 0
        w, t = w[ok], -(q[ok] // coef)
        left = np.searchsorted(prod_sorted, t, side="left")
        right = np.searchsorted(prod_sorted, t, side="right")
        counts = right - left
        if counts.sum() == 0:
            continue
        wi = np.repeat(np.arange(len(w)), counts)
        offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        pi = np.repeat(left, counts) + offs
        v = np.column_stack([y1s[pi], w[wi], yls[pi]])
        found.append(canonical_rows(v))
    return sort_table(np.concatenate(found))


def pythagorean_array(h_max: int) -> np.ndarray:
    """Points of x^2 + y^2 = z^2 with z <= h_max from Euclid's parametrization."""
    if h_max < 1:
        raise ValueError("h_max must be >= 1")
    rows = [np.array([[1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1]], dtype=np.int64)]
    mmax = math.isqrt(max(h_max - 1, 0))
    m, n = np.meshgrid(np.arange(1, mmax + 1), np.arange(1, mmax + 1), indexing="ij")
    m, n = m.ravel().astype(np.int64), n.ravel().astype(np.int64)
    ok = (n < m) & ((m - n) % 2 == 1) & (np.gcd(m, n) == 1) & (m * m + n * n <= h_max)
    m, n = m[ok], n[ok]
    a, b, c = m * m - n * n, 2 * m * n, m * m + n * n
    for p, q in ((a, b), (b, a)):
        for sp in (1, -1):
            for sq in (1, -1):
                rows.append(np.stack([sp * p, sq * q, c], axis=1))
    return sort_table(np.concatenate(rows))


def enumerate_array(form: QuadraticForm, h_max: int) -> np.ndarray:
    """Sorted table of all points of height <= h_max (fastest available method)."""
    if form.gram == ((1, 0, 0), (0, 1, 0), (0, 0, -1)):
        return pythagorean_array(h_max)
    if is_good_form(form):
        return good_form_array(form, h_max)
    return bruteforce_array(form, h_max)


def _to_points(arr: np.ndarray) -> set[RationalProjectivePoint]:
    return {RationalProjectivePoint(tuple(int(a) for a in row)) for row in arr}


def enumerate_bruteforce(form: QuadraticForm, h_max: int) -> set[RationalProjectivePoint]:
    return _to_points(bruteforce_array(form, h_max))


def parametrized_array(form: QuadraticForm, base: Sequence[int], h_max: int) -> np.ndarray:
    """Points of height <= h_max as second intersections of lines through ``base``."""
    base = np.array([int(a) for a in base], dtype=np.int64)
    if len(base) != form.size or evaluate(form, base.tolist()) != 0:
        raise BasePointInvalid("base point must lie on the quadric")
    if not inertia(form).nonsingular:
        raise BasePointInvalid("parametrization needs a nonsingular form")
    a = form.matrix
    ab = a @ base
    if not ab.any():
        raise BasePointInvalid("base point lies in the kernel")
    k = int(np.argmax(np.abs(base)))
    bmax = int(np.abs(base).max())
    W = 2 * h_max * (1 + bmax)
    nfree = form.size - 1
    side = 2 * W + 1
    total = side ** nfree
    start = total // side * W
    found = [canonical_rows(base[None, :])]
    lines = []
    for lo in range(start, total, _CHUNK):
        w = np.insert(_box(W, nfree, lo, min(lo + _CHUNK, total)), k, 0, axis=1)
        w = w[np.gcd.reduce(np.abs(w), axis=1) == 1]
        bw = w @ ab
        qw = np.einsum("ij,jk,ik->i", w, a, w)
        sec = (bw != 0) & (qw != 0)
        p = qw[sec, None] * base[None, :] - 2 * bw[sec, None] * w[sec]
        p = p // np.gcd.reduce(np.abs(p), axis=1)[:, None]
        p = p[row_heights(p) <= h_max]
        found.append(canonical_rows(p))
        iso = w[qw == 0]
        found.append(canonical_rows(iso[row_heights(iso) <= h_max]))
        lines.extend(w[(qw == 0) & (bw == 0)])
    for w in lines:
        # the whole line through base and w lies on the quadric
        wmax = int(np.abs(w).max())
        amax = h_max // abs(int(base[k]))
        cmax = (h_max + amax * bmax) // wmax
        for al in range(-amax, amax + 1):
            for ga in range(1, cmax + 1):
                if math.gcd(al, ga) != 1:
                    continue
                v = al * base + ga * w
                if np.abs(v).max() <= h_max:
                    found.append(canonical_rows(v[None, :]))
    return sort_table(np.concatenate(found))


def enumerate_parametrized(form: QuadraticForm, base: Sequence[int], h_max: int) -> set[RationalProjectivePoint]:
    return _to_points(parametrized_array(form, base, h_max))


# -- isotropic subspaces and rank --------------------------------------------


def totally_isotropic_closure(points: Sequence[Sequence[int]], form: QuadraticForm) -> IsotropicSubspace:
    """Span of the points if it is totally isotropic, else raise NotIsotropicPair.

    For isotropic v, w we have Q(v +- w) = +-2 B(v, w), so pairwise
    orthogonality is exactly the condition.
    """
    vecs = [tuple(int(a) for a in v) for v in points]
    if not vecs:
        raise ValueError("closure of an empty set of points")
    for i, v in enumerate(vecs):
        q = evaluate(form, v)
        if q != 0:
            raise QuadFormError(f"point {i} = {v} is not on the quadric (Q = {q})")
    for i in range(len(vecs)):
        for j in range(i + 1, len(vecs)):
            b = bilinear(form, vecs[i], vecs[j])
            if b != 0:
                raise NotIsotropicPair(i, j, b)
    basis: list[tuple[int, ...]] = []
    for v in vecs:
        if rank(basis + [v]) > len(basis):
            basis.append(v)
    return IsotropicSubspace(tuple(basis))


def _prime_factors(n: int) -> list[int]:
    n = abs(n)
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def default_moduli(form: QuadraticForm) -> list[int]:
    """p^2 for primes p | det first, then 4, 8, 9, 25, 49."""
    det = determinant(form)
    mods = [p * p for p in _prime_factors(det)] if det != 0 else []
    return mods + [m for m in (4, 8, 9, 25, 49) if m not in mods]


_MAX_RESIDUE_SCAN = 30_000_000


def local_obstruction(form: QuadraticForm, moduli: Iterable[int]) -> Optional[int]:
    """First modulus m with no solution of Q(v) = 0 mod m having some coordinate prime to m.

    Each m must be a prime power.  A None result proves nothing.
    """
    a = form.matrix
    size = form.size
    for m in moduli:
        p = _prime_factors(m)
        if len(p) != 1:
            raise ValueError(f"{m} is not a prime power")
        p = p[0]
        if m ** size > _MAX_RESIDUE_SCAN:
            log.warning("skipping modulus %d: residue scan too large", m)
            continue
        tail = np.stack(np.unravel_index(np.arange(m ** (size - 1)), (m,) * (size - 1)), axis=1).astype(np.int64)
        tail_ok = np.any(tail % p != 0, axis=1)
        solvable = False
        for x0 in range(m):
            v = np.insert(tail, 0, x0, axis=1)
            q = np.einsum("ij,jk,ik->i", v, a, v) % m
            mask = q == 0
            if x0 % p == 0:
                mask &= tail_ok
            if mask.any():
                solvable = True
                break
        if not solvable:
            return m
    return None


def _isotropic_search(form: QuadraticForm, table: np.ndarray, cap: int) -> list[tuple[int, ...]]:
    """Largest set (<= cap) of independent, pairwise orthogonal points; DFS in height order."""
    if cap == 0 or len(table) == 0:
        return []
    a = form.matrix
    gram = table @ a @ table.T
    vecs = [tuple(int(x) for x in row) for row in table]
    best: list[int] = []

    def dfs(chosen: list[int], cands: np.ndarray):
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
        if len(best) >= cap or len(chosen) + len(cands) <= len(best):
            return
        for pos, idx in enumerate(cands):
            if len(best) >= cap:
                return
            if rank([vecs[i] for i in chosen] + [vecs[idx]]) <= len(chosen):
                continue
            rest = cands[pos + 1:]
            rest = rest[gram[idx, rest] == 0]
            dfs(chosen + [int(idx)], rest)

    dfs([], np.arange(len(vecs)))
    return [vecs[i] for i in best]


def qrank_bounds(form: QuadraticForm, h_max: int, table: Optional[np.ndarray] = None,
                 moduli: Optional[Sequence[int]] = None) -> QRankBounds:
    inert = inertia(form)
    # kernel vectors extend any totally isotropic subspace
    upper = min(inert.pos, inert.neg) + inert.zero
    obstruction = local_obstruction(form, default_moduli(form) if moduli is None else moduli)
    if obstruction is not None:
        upper = 0
    if table is None:
        table = enumerate_array(form, h_max)
    else:
        table = table[row_heights(table) <= h_max]
    witness = _isotropic_search(form, table, upper)
    sub = IsotropicSubspace(tuple(witness)) if witness else None
    return QRankBounds(len(witness), upper, sub, obstruction)


# -- CSV ----------------------------------------------------------------------


def write_points_csv(table: np.ndarray, fh) -> None:
    """One row per point: coordinates x1..x{n+1}, then height."""
    writer = csv.writer(fh, lineterminator="\n")
    size = table.shape[1]
    writer.writerow([f"x{i + 1}" for i in range(size)] + ["height"])
    for row, h in zip(table.tolist(), row_heights(table).tolist()):
        writer.writerow(row + [h])


def read_points_csv(fh) -> np.ndarray:
    rows = list(csv.reader(fh))
    body = [[int(a) for a in r[:-1]] for r in rows[1:]]
    return np.array(body, dtype=np.int64).reshape(len(body), len(rows[0]) - 1)
