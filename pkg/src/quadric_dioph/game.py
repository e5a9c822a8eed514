"""The isotropic Schmidt game on a rational quadric.

Alice follows the explicit strategy: at round i she takes every rational
point of height <= c / rho_i in the doubled ball 2B_i, deletes the
beta*rho_i neighbourhood of their totally isotropic span, and deletes a
ball around the centre when there is nothing to delete.  Bob answers with
a ball of radius beta*rho_i inside what is left.

Centres are kept in mpmath at a working precision large enough to resolve
the final radius; the point table is used only up to its height cap.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import mpmath
import numpy as np
from mpmath import mp

from .geometry import FEAS_TOL, dist_many, make_rng, orthonormal_basis, sample_point, slice_frame, unit
from .geometry import sample_on_submanifold
from .points import IsotropicSubspace, NotIsotropicPair, row_heights, totally_isotropic_closure
from .quadform import QuadraticForm

BOB_ATTEMPTS = 10_000


class ClosureFailure(RuntimeError):
    """Rational points Alice must delete do not span a totally isotropic subspace."""

    def __init__(self, round_: int, pair):
        super().__init__(f"round {round_}: points {pair[0]} and {pair[1]} have B = {pair[2]}")
        self.round = round_
        self.pair = pair


class NoFeasibleBall(RuntimeError):
    pass


class BobStrategy(str, enum.Enum):
    RANDOM = "random"
    GREEDY = "greedy"
    STUBBORN = "stubborn"


# -- small mp linear algebra --------------------------------------------------------


def _dot(a, b):
    return mpmath.fsum(x * y for x, y in zip(a, b))


def _norm(a):
    return mpmath.sqrt(_dot(a, a))


def _scale(a, s):
    return [x * s for x in a]


def _add(a, b):
    return [x + y for x, y in zip(a, b)]


def _matvec(m, a):
    return [_dot(row, a) for row in m]


def _unit(a):
    return _scale(a, 1 / _norm(a))


def mp_dist(a, b):
    """Projective distance of unit vectors, as |a - (a.b) b|."""
    return _norm(_add(a, _scale(b, -_dot(a, b))))


def _orthonormal(vectors):
    out = []
    for v in vectors:
        w = [mpmath.mpf(int(x)) for x in v]
        for e in out:
            w = _add(w, _scale(e, -_dot(w, e)))
        out.append(_unit(w))
    return out


def _resid(y, onb):
    r = list(y)
    for e in onb:
        r = _add(r, _scale(e, -_dot(r, e)))
    return r


def mp_dist_to_span(y, onb):
    return _norm(_resid(y, onb))


def _to_float(a) -> np.ndarray:
    return np.array([float(x) for x in a])


def _fmt(a) -> list[str]:
    return [mpmath.nstr(x, mp.dps, strip_zeros=False) for x in a]


# -- geometry of the playing field ---------------------------------------------------


class Field:
    """Points of X, or of X cut by a linear slice K, in coordinates z with y = F^T z."""

    def __init__(self, form: QuadraticForm, slice_spec=None):
        self.form = form
        a = form.matrix.astype(np.float64)
        if slice_spec is None:
            frame = np.eye(form.size)
        else:
            frame, _ = slice_frame(form, slice_spec)
        self.frame_f = frame
        self.frame = [[mpmath.mpf(float(x)) for x in row] for row in frame]
        am = [[mpmath.mpf(int(x)) for x in row] for row in form.matrix]
        ft = list(zip(*self.frame))
        fa = [[_dot(row, col) for col in zip(*am)] for row in self.frame]
        self.m = [[_dot(row, col) for col in zip(*ft)] for row in fa]
        self.m_f = frame @ a @ frame.T

    def embed(self, z):
        return _unit([_dot(col, z) for col in zip(*self.frame)])

    def project(self, z, steps: int = 60):
        """Newton steps onto {z^T M z = 0}, starting from z."""
        tol = mpmath.mpf(10) ** (-(mp.dps - 5))
        for _ in range(steps):
            g = _matvec(self.m, z)
            q = _dot(z, g)
            if abs(q) <= tol * _dot(z, z):
                break
            z = _add(z, _scale(g, -q / (2 * _dot(g, g))))
        return _unit(z)

    def tangent(self, z) -> np.ndarray:
        """Orthonormal rows spanning the tangent directions at z (float)."""
        zf = _to_float(z)
        cons = np.stack([zf, self.m_f @ zf])
        _, s, vt = np.linalg.svd(cons)
        return vt[2:]

    def step(self, z, direction: np.ndarray, r: float):
        """Move from z along a tangent direction by about r, then back onto X."""
        d = [mpmath.mpf(float(x)) for x in direction]
        return self.project(_add(z, _scale(d, mpmath.mpf(r))))


# -- state and transcript --------------------------------------------------------------


@dataclass
class Deletion:
    kind: str  # "subspace" or "ball"
    epsilon: mpmath.mpf
    subspace: Optional[IsotropicSubspace] = None
    center: Optional[list] = None
    onb: list = field(default_factory=list)

    def distance(self, y):
        if self.kind == "subspace":
            return mp_dist_to_span(y, self.onb)
        return mp_dist(y, self.center)


@dataclass
class RoundRecord:
    index: int
    center: list
    radius: mpmath.mpf
    deletion: Deletion
    members: np.ndarray


@dataclass
class GameState:
    center: list
    radius: mpmath.mpf
    beta: float
    round: int = 0
    deleted: Optional[Deletion] = None
    transcript: list = field(default_factory=list)
    center_z: Optional[list] = None

    def __post_init__(self):
        if not 0 < self.beta < 1 / 3:
            raise ValueError("beta must lie in (0, 1/3)")
        if not 0 < self.radius < 1:
            raise ValueError("radius must lie in (0, 1)")


@dataclass
class GameResult:
    x_final: list
    final_radius: mpmath.mpf
    rounds: list[RoundRecord]
    transcript: list
    beta: float
    c: float
    dps: int
    h_table: int

    @property
    def x_float(self) -> np.ndarray:
        return _to_float(self.x_final)

    def transcript_json(self) -> str:
        return json.dumps(self.transcript, sort_keys=True)


@dataclass
class BACertificate:
    x: list
    c0: float
    h_cap: int
    min_quality: float
    valid: bool
    excluded: int = 0
    argmin: Optional[tuple[int, ...]] = None

    def to_json(self) -> dict:
        return {"c0": self.c0, "min_quality": self.min_quality, "valid": self.valid, "h_cap": self.h_cap}


# -- moves -------------------------------------------------------------------------------


class Alice:
    """Alice's explicit strategy with a point table that is complete up to ``h_table``."""

    def __init__(self, form: QuadraticForm, c: float, table: np.ndarray):
        self.form = form
        self.c = c
        self.table = table
        self.heights = row_heights(table)
        self.h_table = int(self.heights.max()) if len(table) else 0
        self._near = np.arange(len(table))

    def move(self, state: GameState) -> tuple[Deletion, np.ndarray]:
        rho = state.radius
        eps = state.beta * rho
        cf = _to_float(state.center)
        near = self._near
        if len(near):
            d = dist_many(cf, self.table[near])
            near = near[d <= 3 * float(rho) + 1e-12]
        self._near = near
        hcap = min(self.c / float(rho), self.h_table)
        cand = near[self.heights[near] <= hcap]
        members = []
        for i in cand:
            v = self.table[i]
            y = _unit([mpmath.mpf(int(a)) for a in v])
            if mp_dist(state.center, y) <= 2 * rho:
                members.append(v)
        members = np.array(members, dtype=np.int64).reshape(-1, self.form.size)
        if len(members) == 0:
            return Deletion("ball", eps, center=list(state.center)), members
        try:
            sub = totally_isotropic_closure(members, self.form)
        except NotIsotropicPair as err:
            raise ClosureFailure(state.round, (members[err.i].tolist(), members[err.j].tolist(), err.value)) from None
        return Deletion("subspace", eps, subspace=sub, onb=_orthonormal(sub.basis)), members


class Bob:
    def __init__(self, fld: Field, strategy: BobStrategy, rng: np.random.Generator, alice: Alice):
        self.field = fld
        self.strategy = BobStrategy(strategy)
        self.rng = rng
        self.alice = alice

    def _feasible(self, state, deletion, z_new, rho_next):
        y_old = self.field.embed(state.center_z)
        y_new = self.field.embed(z_new)
        slack = FEAS_TOL * state.radius
        if mp_dist(y_old, y_new) + rho_next > state.radius - slack:
            return None
        margin = deletion.distance(y_new) - deletion.epsilon - rho_next
        return margin if margin > slack else None

    def _random_dir(self, tan):
        w = self.rng.standard_normal(len(tan))
        return w @ tan / np.linalg.norm(w)

    def move(self, state: GameState, deletion: Deletion):
        rho = state.radius
        rho_next = state.beta * rho
        reach = float((1 - state.beta) * rho)
        tan = self.field.tangent(state.center_z)
        if self.strategy is BobStrategy.STUBBORN:
            z = self._stubborn(state, deletion, tan, reach, rho_next)
        elif self.strategy is BobStrategy.GREEDY:
            z = self._greedy(state, deletion, tan, reach, rho_next)
        else:
            z = None
        if z is None:
            z = self._random(state, deletion, tan, reach, rho_next)
        return z, rho_next

    def _random(self, state, deletion, tan, reach, rho_next):
        k = len(tan)
        for _ in range(BOB_ATTEMPTS):
            r = reach * self.rng.random() ** (1.0 / k)
            z = self.field.step(state.center_z, self._random_dir(tan), r)
            if self._feasible(state, deletion, z, rho_next) is not None:
                return z
        raise NoFeasibleBall(f"no feasible ball after {BOB_ATTEMPTS} attempts in round {state.round}")

    def _stubborn(self, state, deletion, tan, reach, rho_next):
        if self._feasible(state, deletion, state.center_z, rho_next) is not None:
            return state.center_z
        dirs = [self._random_dir(tan) for _ in range(16)]
        if deletion.kind == "subspace":
            away = self.field.frame_f @ _to_float(_resid(self.field.embed(state.center_z), deletion.onb))
            t = tan.T @ (tan @ away)
            if np.linalg.norm(t) > 0:
                dirs.insert(0, t / np.linalg.norm(t))
            radii = np.geomspace(1e-3 * reach, reach, 60)
        else:
            base = float(deletion.epsilon + rho_next)
            radii = base * (1 + np.geomspace(1e-8, 1e-2, 13))
        for r in radii:
            for d in dirs:
                z = self.field.step(state.center_z, d, r)
                if self._feasible(state, deletion, z, rho_next) is not None:
                    return z
        return None

    def _greedy(self, state, deletion, tan, reach, rho_next):
        al = self.alice
        lo, hi = al.c / float(state.radius), al.c / float(rho_next)
        pick = np.flatnonzero((al.heights > lo) & (al.heights <= hi))
        if len(pick) == 0:
            return None
        cf = _to_float(self.field.embed(state.center_z))
        d = dist_many(cf, al.table[pick])
        target = al.table[pick[int(np.argmin(d))]]
        tz = self.field.frame_f @ unit(target)
        zf = _to_float(state.center_z)
        if tz @ zf < 0:
            tz = -tz
        t = tan.T @ (tan @ (tz - zf))
        if np.linalg.norm(t) == 0:
            return None
        t = t / np.linalg.norm(t)
        ty = _unit([mpmath.mpf(int(a)) for a in target])
        best, best_d = None, None
        r_to = min(reach, float(np.min(d)))
        angles = np.linspace(-np.pi / 3, np.pi / 3, 9) if len(tan) > 1 else [0.0]
        for ang in angles:
            direc = t
            if len(tan) > 1:
                other = self._random_dir(tan)
                other -= (other @ t) * t
                other /= np.linalg.norm(other)
                direc = math.cos(ang) * t + math.sin(ang) * other
            for r in np.linspace(r_to, r_to * 0.05, 12):
                z = self.field.step(state.center_z, direc, r)
                if self._feasible(state, deletion, z, rho_next) is None:
                    continue
                dz = mp_dist(self.field.embed(z), ty)
                if best_d is None or dz < best_d:
                    best, best_d = z, dz
                break
        return best


# -- play --------------------------------------------------------------------------------


def working_dps(beta: float, rounds: int, rho0: float) -> int:
    return 25 + math.ceil(rounds * math.log10(1 / beta) + math.log10(1 / rho0))


def play(form: QuadraticForm, beta: float, rounds: int, bob_strategy, seed, *, c: float,
         table: np.ndarray, rho0: float = 0.05, slice_spec=None) -> GameResult:
    """Play ``rounds`` rounds; returns the final centre and the transcript.

    ``c`` is the simplex constant used by Alice; ``table`` must hold every
    point of X up to its largest height.  With ``slice_spec`` (three spanning
    vectors) Bob's centres stay on the slice of X they cut out.
    """
    if not 0 < beta < 1 / 3:
        raise ValueError("beta must lie in (0, 1/3)")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    dps = working_dps(beta, rounds, rho0)
    with mp.workdps(dps):
        rng = make_rng(seed)
        fld = Field(form, slice_spec)
        if slice_spec is None:
            x0 = sample_point(form, (int(rng.integers(2**31)),)).coords
        else:
            x0 = sample_on_submanifold(form, slice_spec, (int(rng.integers(2**31)),)).coords
        z0 = fld.project([mpmath.mpf(float(a)) for a in fld.frame_f @ x0])
        alice = Alice(form, c, table)
        bob = Bob(fld, bob_strategy, rng, alice)
        state = GameState(fld.embed(z0), mpmath.mpf(rho0), beta, center_z=z0)
        records = []
        log = [_bob_entry(-1, state.center, state.radius)]
        for i in range(rounds):
            state.round = i
            deletion, members = alice.move(state)
            state.deleted = deletion
            records.append(RoundRecord(i, list(state.center), state.radius, deletion, members))
            log.append({
                "round": i, "actor": "alice", "center": _fmt(state.center), "radius": mpmath.nstr(state.radius, 17),
                "deleted_basis": [list(v) for v in deletion.subspace.basis] if deletion.subspace else None,
                "epsilon": mpmath.nstr(deletion.epsilon, 17), "kind": deletion.kind,
            })
            z, rho_next = bob.move(state, deletion)
            state.center_z = z
            state.center = fld.embed(z)
            state.radius = rho_next
            log.append(_bob_entry(i, state.center, state.radius))
        state.transcript = log
        return GameResult(list(state.center), state.radius, records, log, beta, c, dps, alice.h_table)


def _bob_entry(i, center, radius):
    return {"round": i, "actor": "bob", "center": _fmt(center), "radius": mpmath.nstr(radius, 17),
            "deleted_basis": None, "epsilon": None}


# -- checks ------------------------------------------------------------------------------


def certify_ba(x_final, form: QuadraticForm, beta: float, consts, h_cap: int, table: np.ndarray,
               rho_last: Optional[float] = None) -> BACertificate:
    """min H(v) dist(x, v) over the table up to h_cap, against c0 = c beta^2.

    Heights above c / rho_last (where the game gives no guarantee) are
    excluded and counted.
    """
    c = float(getattr(consts, "c_small", consts))
    c0 = c * beta * beta
    hs = row_heights(table)
    cap = h_cap if rho_last is None else min(h_cap, math.floor(c / rho_last))
    excluded = int(np.count_nonzero((hs > cap) & (hs <= h_cap)))
    keep = hs <= cap
    pts, hs = table[keep], hs[keep]
    x = np.array([float(a) for a in x_final])
    if len(pts) == 0:
        return BACertificate(list(x_final), c0, cap, math.inf, True, excluded)
    q = hs * dist_many(x, pts)
    j = int(np.argmin(q))
    mq = float(q[j])
    return BACertificate(list(x_final), c0, cap, mq, mq >= c0 - 1e-9, excluded, tuple(int(a) for a in pts[j]))


@dataclass
class BranchViolation:
    round: int
    v: tuple[int, ...]
    branch: str
    dist: float
    bound: float


def two_branch_check(result: GameResult, form: QuadraticForm, table: np.ndarray) -> tuple[int, list[BranchViolation]]:
    """Check each v with c/rho_{i-1} <= H(v) <= c/rho_i (rho_{-1} = rho_0/beta):
    either v is outside 2B_i and dist(x, v) >= beta rho_{i-1}, or v lies in
    the deleted subspace L_i and dist(x, v) >= beta^2 rho_{i-1}."""
    beta, c = result.beta, result.c
    hs = row_heights(table)
    xf = result.x_float
    checked, bad = 0, []
    with mp.workdps(result.dps):
        x = result.x_final
        for rec in result.rounds:
            rho = rec.radius
            prev = rho / beta
            lo, hi = c / float(prev), c / float(rho)
            if lo > result.h_table:
                break
            sel = np.flatnonzero((hs >= lo) & (hs <= hi))
            if len(sel) == 0:
                continue
            pts = table[sel]
            dc = dist_many(_to_float(rec.center), pts)
            dx = dist_many(xf, pts)
            tol = 1e-9 * float(rho)
            inside = dc <= 2 * float(rho)
            bound = np.where(inside, beta * beta * float(prev), beta * float(prev))
            unsure = (np.abs(dc - 2 * float(rho)) <= tol) | (np.abs(dx - bound) <= tol)
            checked += len(sel)
            for k in np.flatnonzero(inside | unsure | (dx < bound)):
                v = pts[k]
                if unsure[k]:
                    y = _unit([mpmath.mpf(int(a)) for a in v])
                    d = mp_dist(x, y)
                    is_in = mp_dist(rec.center, y) <= 2 * rho
                else:
                    d, is_in = dx[k], bool(inside[k])
                if not is_in:
                    if d < beta * prev:
                        bad.append(BranchViolation(rec.index, tuple(map(int, v)), "outside", float(d), float(beta * prev)))
                else:
                    sub = rec.deletion.subspace
                    if sub is None or not sub.contains(v) or d < beta * beta * prev:
                        bad.append(BranchViolation(rec.index, tuple(map(int, v)), "inside", float(d),
                                                   float(beta * beta * prev)))
    return checked, bad


def replay(transcript: Sequence[dict]) -> list[float]:
    """Final centre recorded in a transcript."""
    return [float(a) for a in transcript[-1]["center"]]
