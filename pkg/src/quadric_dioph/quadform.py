"""Exact algebra of integral quadratic forms.

A form on Z^{n+1} is stored as its symmetric integer Gram matrix A, so that
Q(v) = v^T A v and B(v, w) = v^T A w.  Everything here is exact: integers
for evaluation, :class:`fractions.Fraction` for eliminations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np


class QuadFormError(ValueError):
    pass


class DimensionMismatch(QuadFormError):
    pass


class NotIsotropic(QuadFormError):
    pass


class PointInKernel(QuadFormError):
    pass


@dataclass(frozen=True)
class Inertia:
    pos: int
    neg: int
    zero: int

    @property
    def nonsingular(self) -> bool:
        return self.zero == 0


@dataclass(frozen=True)
class QuadraticForm:
    """Integral quadratic form in ``dim + 1`` variables (projective dimension ``dim``)."""

    gram: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(_as_int(a) for a in row) for row in self.gram)
        size = len(rows)
        if size < 2 or any(len(r) != size for r in rows):
            raise QuadFormError("gram must be a square matrix of size >= 2")
        for i in range(size):
            for j in range(i + 1, size):
                if rows[i][j] != rows[j][i]:
                    raise QuadFormError(f"gram is not symmetric at ({i}, {j})")
        if all(a == 0 for r in rows for a in r):
            raise QuadFormError("gram is the zero matrix")
        object.__setattr__(self, "gram", rows)

    @classmethod
    def diagonal(cls, *entries: int) -> "QuadraticForm":
        size = len(entries)
        return cls(tuple(tuple(entries[i] if i == j else 0 for j in range(size)) for i in range(size)))

    @classmethod
    def from_rational(cls, gram: Sequence[Sequence]) -> "QuadraticForm":
        """Clear denominators of a rational Gram matrix (the quadric is unchanged)."""
        fr = [[Fraction(a) for a in row] for row in gram]
        den = math.lcm(*(a.denominator for row in fr for a in row))
        return cls(tuple(tuple(int(a * den) for a in row) for row in fr))

    @classmethod
    def from_json(cls, text_or_obj) -> "QuadraticForm":
        obj = json.loads(text_or_obj) if isinstance(text_or_obj, str) else text_or_obj
        form = cls(tuple(tuple(r) for r in obj["gram"]))
        if "dim" in obj and obj["dim"] != form.dim:
            raise QuadFormError(f"dim {obj['dim']} does not match gram of size {form.size}")
        return form

    def to_json(self) -> str:
        return json.dumps({"dim": self.dim, "gram": [list(r) for r in self.gram]})

    @property
    def size(self) -> int:
        return len(self.gram)

    @property
    def dim(self) -> int:
        return len(self.gram) - 1

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.array(self.gram, dtype=np.int64)

    def __call__(self, v: Sequence[int]) -> int:
        return evaluate(self, v)

    def __repr__(self) -> str:
        return f"QuadraticForm({[list(r) for r in self.gram]})"


def _as_int(a) -> int:
    if isinstance(a, (bool, np.bool_)):
        raise QuadFormError("gram entries must be integers")
    if isinstance(a, (int, np.integer)):
        return int(a)
    if isinstance(a, float) and a.is_integer():
        return int(a)
    if isinstance(a, Fraction) and a.denominator == 1:
        return int(a)
    raise QuadFormError(f"gram entry {a!r} is not an integer")


def _check(form: QuadraticForm, v: Sequence) -> None:
    if len(v) != form.size:
        raise DimensionMismatch(f"vector has {len(v)} coordinates, form needs {form.size}")


def evaluate(form: QuadraticForm, v: Sequence[int]) -> int:
    """Q(v) = v^T A v (exact)."""
    return bilinear(form, v, v)


def bilinear(form: QuadraticForm, v: Sequence[int], w: Sequence[int]) -> int:
    """B(v, w) = v^T A w (exact; rationals give a Fraction)."""
    _check(form, v)
    _check(form, w)
    total = 0
    for i, row in enumerate(form.gram):
        if v[i] == 0:
            continue
        total += v[i] * sum(a * wj for a, wj in zip(row, w) if a)
    return total


def inertia(form: QuadraticForm) -> Inertia:
    """Signature by exact symmetric elimination.

    Uses 1x1 pivots on nonzero diagonal entries and 2x2 hyperbolic pivots
    [[0, b], [b, 0]] when the remaining diagonal vanishes.
    """
    m = [[Fraction(a) for a in row] for row in form.gram]
    active = list(range(form.size))
    pos = neg = 0
    while active:
        piv = next((i for i in active if m[i][i] != 0), None)
        if piv is not None:
            d = m[piv][piv]
            if d > 0:
                pos += 1
            else:
                neg += 1
            active.remove(piv)
            for j in active:
                if m[j][piv] == 0:
                    continue
                f = m[j][piv] / d
                for k in active:
                    m[j][k] -= f * m[piv][k]
            continue
        pair = next(((i, j) for i in active for j in active if i < j and m[i][j] != 0), None)
        if pair is None:
            break
        i, j = pair
        b = m[i][j]
        pos += 1
        neg += 1
        active.remove(i)
        active.remove(j)
        ci = {k: m[k][i] for k in active}
        cj = {k: m[k][j] for k in active}
        for k in active:
            for l in active:
                m[k][l] -= (ci[k] * cj[l] + cj[k] * ci[l]) / b
    return Inertia(pos, neg, form.size - pos - neg)


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Exact basis of {x : rows @ x = 0} via reduced row echelon form."""
    m = [[Fraction(a) for a in r] for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [a * inv for a in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        x = [Fraction(0)] * ncols
        x[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            x[pc] = -m[i][fc]
        basis.append(x)
    return basis


def primitive_integer(vec: Sequence) -> tuple[int, ...]:
    """Scale a nonzero rational vector to a primitive integer vector (sign kept)."""
    fr = [Fraction(a) for a in vec]
    den = math.lcm(*(a.denominator for a in fr))
    ints = [int(a * den) for a in fr]
    g = math.gcd(*ints)
    if g == 0:
        raise QuadFormError("zero vector")
    return tuple(a // g for a in ints)


def kernel(form: QuadraticForm) -> list[tuple[int, ...]]:
    """Basis of ker A as primitive integer vectors; empty iff nonsingular."""
    return [primitive_integer(x) for x in nullspace(form.gram, form.size)]


def rank(vectors: Sequence[Sequence]) -> int:
    if not vectors:
        return 0
    return len(vectors[0]) - len(nullspace(vectors, len(vectors[0])))


@dataclass(frozen=True)
class HyperbolicBasis:
    """Columns (e, b_2, ..., b_n, f) with Q(e)=Q(f)=0, B(e,f)=1, b_i orthogonal to e and f."""

    basis: tuple[tuple[Fraction, ...], ...]  # rows of the change-of-basis matrix T
    residual: tuple[tuple[Fraction, ...], ...]

    @property
    def columns(self) -> list[tuple[Fraction, ...]]:
        size = len(self.basis)
        return [tuple(self.basis[i][j] for i in range(size)) for j in range(size)]

    def transformed_gram(self, form: QuadraticForm) -> list[list[Fraction]]:
        cols = self.columns
        return [[bilinear(form, u, w) for w in cols] for u in cols]


def hyperbolic_normalize(form: QuadraticForm, e: Sequence[int]) -> HyperbolicBasis:
    """Rational basis putting Q in the shape 2 y_1 y_{n+1} + Q~(y_2, ..., y_n)."""
    e = tuple(int(a) for a in e)
    _check(form, e)
    if evaluate(form, e) != 0:
        raise NotIsotropic(f"Q({e}) = {evaluate(form, e)} != 0")
    size = form.size
    ae = [sum(a * x for a, x in zip(row, e)) for row in form.gram]
    if all(a == 0 for a in ae):
        raise PointInKernel(f"{e} lies in ker Q")
    k = next(i for i in range(size) if ae[i] != 0)
    g = [0] * size
    g[k] = 1
    beg = ae[k]
    qg = form.gram[k][k]
    f0 = [Fraction(g[i]) - Fraction(qg, 2 * beg) * e[i] for i in range(size)]
    scale = bilinear(form, e, f0)
    f = [a / scale for a in f0]
    af = [sum(a * x for a, x in zip(row, f)) for row in form.gram]
    comp = [primitive_integer(x) for x in nullspace([ae, af], size)]
    cols = [tuple(Fraction(a) for a in e)] + [tuple(Fraction(a) for a in c) for c in comp] + [tuple(f)]
    rows = tuple(tuple(cols[j][i] for j in range(size)) for i in range(size))
    residual = tuple(tuple(Fraction(bilinear(form, u, w)) for w in comp) for u in comp)
    return HyperbolicBasis(rows, residual)


def good_form(residual: Sequence[Sequence[int]] = ()) -> QuadraticForm:
    """Integral form 2 y_1 y_{n+1} + y'^T R y' for an integer residual Gram R."""
    m = len(residual)
    size = m + 2
    gram = [[0] * size for _ in range(size)]
    gram[0][size - 1] = gram[size - 1][0] = 1
    for i in range(m):
        for j in range(m):
            gram[i + 1][j + 1] = residual[i][j]
    return QuadraticForm(tuple(tuple(r) for r in gram))


def is_good_form(form: QuadraticForm) -> bool:
    """True when rows 1 and n+1 of the Gram matrix have the hyperbolic-pair shape."""
    last = form.size - 1
    g = form.gram
    if g[0][last] == 0:
        return False
    for j in range(form.size):
        if j != last and g[0][j] != 0:
            return False
        if j != 0 and g[last][j] != 0:
            return False
    return True


def residual_gram(form: QuadraticForm) -> list[list[int]]:
    return [list(r[1:-1]) for r in form.gram[1:-1]]


def determinant(form: QuadraticForm) -> int:
    """Exact determinant (Bareiss)."""
    m = [list(r) for r in form.gram]
    n = len(m)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]
