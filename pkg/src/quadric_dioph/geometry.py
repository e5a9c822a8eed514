"""Floating-point geometry of P^n(R): the sine-of-angle metric, distances to
linear subspaces and random sampling of points on a real quadric.

Tolerances: 1e-9 for "lies on X", 1e-12 for algebraic identities and for the
sign convention.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .quadform import QuadraticForm

SIGN_TOL = 1e-12
FEAS_TOL = 1e-9


class DefiniteForm(ValueError):
    pass


class EmptyIntersection(ValueError):
    pass


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator; ``seed`` may be an int or a tuple of ints."""
    key = list(seed) if isinstance(seed, (tuple, list)) else [int(seed)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def unit(v) -> np.ndarray:
    """Unit representative of [v] with the last non-negligible coordinate positive."""
    v = np.asarray(v, dtype=np.float64)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    if v.ndim == 1:
        nz = np.flatnonzero(np.abs(v) > SIGN_TOL)
        return -v if v[nz[-1]] < 0 else v
    big = np.abs(v) > SIGN_TOL
    last = v.shape[1] - 1 - np.argmax(big[:, ::-1], axis=1)
    sign = np.sign(v[np.arange(len(v)), last])
    return v * sign[:, None]


@dataclass(frozen=True)
class RealProjectivePoint:
    coords: np.ndarray

    def __post_init__(self):
        c = unit(self.coords)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)

    def __len__(self):
        return len(self.coords)


PointLike = Union[RealProjectivePoint, Sequence[float], np.ndarray]


def _vec(x: PointLike) -> np.ndarray:
    v = np.asarray(x.coords if isinstance(x, RealProjectivePoint) else x, dtype=np.float64)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def dist(x: PointLike, y: PointLike) -> float:
    """||x ^ y|| / (||x|| ||y||), i.e. the sine of the angle between the lines."""
    a, b = _vec(x), _vec(y)
    if a.shape != b.shape:
        raise ValueError("points live in different ambient dimensions")
    # perpendicular component: same value as sqrt(1 - <a,b>^2), stable near 0
    perp = a - np.dot(a, b) * b
    return float(min(1.0, np.linalg.norm(perp)))


def dist_many(x: PointLike, ys: np.ndarray) -> np.ndarray:
    """Distances from one point to each row of ``ys`` (rows need not be unit)."""
    a = _vec(x)
    b = _vec(np.asarray(ys, dtype=np.float64))
    c = b @ a
    perp = a[None, :] - c[:, None] * b
    return np.minimum(1.0, np.linalg.norm(perp, axis=1))


def orthonormal_basis(vectors) -> np.ndarray:
    """Columns spanning the real span of ``vectors`` (given as rows)."""
    m = np.asarray(vectors, dtype=np.float64).T
    q, _ = np.linalg.qr(m)
    return q


def dist_to_subspace(x: PointLike, subspace) -> float:
    """Distance from x to the projectivization of span(basis)."""
    basis = subspace.basis if hasattr(subspace, "basis") else subspace
    q = orthonormal_basis(basis)
    a = _vec(x)
    perp = a - q @ (q.T @ a)
    return float(min(1.0, np.linalg.norm(perp)))


def chart(x: PointLike) -> np.ndarray:
    """Affine chart x_{n+1} != 0: [x] -> (x_1/x_{n+1}, ..., x_n/x_{n+1})."""
    v = np.asarray(x.coords if isinstance(x, RealProjectivePoint) else x, dtype=np.float64)
    return v[:-1] / v[-1]


def qvalue(form: QuadraticForm, x: PointLike) -> float:
    v = np.asarray(x.coords if isinstance(x, RealProjectivePoint) else x, dtype=np.float64)
    return float(v @ form.matrix @ v)


# -- sampling -------------------------------------------------------------------


def _split_spectrum(a: np.ndarray):
    lam, vecs = np.linalg.eigh(a)
    tol = 1e-12 * max(1.0, np.abs(lam).max())
    return lam, vecs, lam > tol, lam < -tol


def _sample_in(a: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    lam, vecs, pos, neg = _split_spectrum(a)
    if not pos.any() or not neg.any():
        raise DefiniteForm("form has no real isotropic vectors")
    u = rng.standard_normal((count, int(pos.sum())))
    w = rng.standard_normal((count, int(neg.sum())))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    v = u / np.sqrt(lam[pos]) @ vecs[:, pos].T + w / np.sqrt(-lam[neg]) @ vecs[:, neg].T
    return unit(v)


def sample_points(form: QuadraticForm, count: int, seed) -> np.ndarray:
    """``count`` unit vectors on X, rows.

    Law: in eigen-coordinates scaled so that Q = |u|^2 - |w|^2, u and w are
    independent and uniform on the unit spheres of the two eigenspaces.
    """
    return _sample_in(form.matrix.astype(np.float64), count, make_rng(seed))


def sample_point(form: QuadraticForm, seed) -> RealProjectivePoint:
    return RealProjectivePoint(sample_points(form, 1, seed)[0])


def slice_frame(form: QuadraticForm, circle_spec) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal rows spanning the slice and the restricted Gram matrix."""
    spec = np.asarray(circle_spec, dtype=np.float64)
    if spec.ndim != 2 or spec.shape[0] != 3 or spec.shape[1] != form.size:
        raise ValueError("circle_spec must be 3 vectors in the ambient space")
    frame = orthonormal_basis(spec).T
    return frame, frame @ form.matrix @ frame.T


def sample_on_submanifold_many(form: QuadraticForm, circle_spec, count: int, seed) -> np.ndarray:
    frame, m = slice_frame(form, circle_spec)
    try:
        y = _sample_in(m, count, make_rng(seed))
    except DefiniteForm:
        raise EmptyIntersection("the slice does not meet the quadric in a curve") from None
    return unit(y @ frame)


def sample_on_submanifold(form: QuadraticForm, circle_spec, seed) -> RealProjectivePoint:
    """A point of the conic X cut out by a 3-dimensional subspace (same law as sample_points)."""
    return RealProjectivePoint(sample_on_submanifold_many(form, circle_spec, 1, seed)[0])


def project_to_quadric(a: np.ndarray, p: np.ndarray, steps: int = 4) -> np.ndarray:
    """Newton steps along the gradient A p until Q(p) ~ 0; returns a unit vector."""
    p = p / np.linalg.norm(p)
    for _ in range(steps):
        g = a @ p
        gg = g @ g
        if gg == 0:
            break
        p = p - (p @ g) / (2 * gg) * g
        p = p / np.linalg.norm(p)
    return p


def perturb_on_quadric(form: QuadraticForm, x: PointLike, r: float, rng: np.random.Generator) -> np.ndarray:
    """A point of X at distance about ``r`` from x in a random tangent direction."""
    a = form.matrix.astype(np.float64)
    v = _vec(x)
    q = orthonormal_basis([v, a @ v])
    t = rng.standard_normal(len(v))
    t -= q @ (q.T @ t)
    t /= np.linalg.norm(t)
    return unit(project_to_quadric(a, v + np.tan(r) * t))


def write_samples_csv(points: np.ndarray, seeds: Sequence, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["seed"] + [f"x{i + 1}" for i in range(points.shape[1])])
    for s, row in zip(seeds, points.tolist()):
        writer.writerow([s] + [repr(float(c)) for c in row])
