import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quadric_dioph.flow import (
    CONJUGATED,
    EXACT,
    KernelPoint,
    NotGoodForm,
    build_context,
    constants,
    dani_sweep,
    dual_use_ratio,
    flow_norm,
    t_grid,
    transported_constants,
    verify_dani,
    write_dani_csv,
)
from quadric_dioph.geometry import perturb_on_quadric, sample_points, unit
from quadric_dioph.points import enumerate_array
from quadric_dioph.quadform import QuadraticForm, good_form

from conftest import CIRCLE, GOOD_CIRCLE, GOOD_SPHERE, GOOD_SPLIT, SPHERE


def opnorm(m):
    return float(np.abs(np.linalg.eigvalsh(np.array(m, dtype=float))).max())


def test_constants_circle_good_form():
    k = constants(GOOD_CIRCLE)
    assert (k.c0, k.c1, k.c_big) == (2.0, 1.0, 6.0)
    assert k.c_small == pytest.approx(1 / (6 * math.sqrt(5)), rel=1e-15)
    assert k.c_small == pytest.approx(0.0745356, abs=1e-7)


def test_constants_follow_operator_norms():
    k = constants(good_form([[3]]))
    assert (k.c0, k.c_big) == (3.0, 9.0)
    assert constants(good_form()).c0 == 2.0
    f = good_form([[2, 1], [1, -4]])
    k = constants(f)
    assert k.c0 == pytest.approx(max(2, opnorm([[2, 1], [1, -4]])))
    assert k.c1 == pytest.approx(opnorm(f.gram))
    assert k.c_small == pytest.approx(1 / (3 * k.c0 * math.sqrt(5 * k.c1)))


def test_constants_need_good_form():
    with pytest.raises(NotGoodForm):
        constants(CIRCLE)


def test_transported_constant_for_standard_circle():
    t = transported_constants(CIRCLE, (1, 0, 1))
    assert t.good_gram == ((0, 0, 1), (0, 1, 0), (1, 0, 0))
    assert t.height_factor == 4 and t.metric_factor == pytest.approx(2)
    assert t.c_small == pytest.approx(constants(GOOD_CIRCLE).c_small / 8)


def test_context_at_reference_point():
    ctx = build_context(GOOD_CIRCLE, (1, 0, 0))
    assert ctx.mode == EXACT
    assert np.allclose(ctx.u_x, np.eye(3))
    assert np.allclose(ctx.matrix(1.5), np.diag([math.exp(-1.5), 1, math.exp(1.5)]))
    assert flow_norm(ctx, (1, 0, 0), 2) == pytest.approx(math.exp(-2))
    assert flow_norm(ctx, (0, 0, 1), 2) == pytest.approx(math.exp(2))
    rep = verify_dani(ctx, constants(GOOD_CIRCLE), (1, 0, 0), 3.0)
    assert rep.ratio == pytest.approx(1 / 6)


def test_modes():
    assert build_context(SPHERE, sample_points(SPHERE, 1, 0)[0]).mode == EXACT
    f = QuadraticForm.diagonal(1, 2, -1)
    assert build_context(f, sample_points(f, 1, 0)[0]).mode == CONJUGATED


def test_kernel_point_rejected():
    with pytest.raises(KernelPoint):
        build_context(QuadraticForm.diagonal(1, 0, -1), (0, 1, 0))


@pytest.mark.parametrize("form", [GOOD_CIRCLE, GOOD_SPHERE, GOOD_SPLIT, SPHERE, QuadraticForm.diagonal(1, 2, -1)])
@given(seed=st.integers(0, 10_000))
def test_context_invariants(form, seed):
    x = sample_points(form, 1, seed)[0]
    ctx = build_context(form, x)
    a = form.matrix.astype(float)
    ref = ctx.u_x @ x
    assert np.linalg.norm(ref - (ref @ ctx.ref) * ctx.ref) <= 1e-9 * np.linalg.norm(ref)
    if ctx.mode == EXACT:
        assert np.allclose(ctx.u_x.T @ ctx.u_x, np.eye(form.size), atol=1e-9)
    rng = np.random.default_rng(seed)
    s, t = rng.uniform(-10, 10, size=2)
    g = ctx.matrix(t)
    w = rng.standard_normal(form.size)
    gw = g @ w
    assert abs(gw @ a @ gw - w @ a @ w) <= 1e-6 * (w @ w) * np.linalg.norm(g, 2) ** 2
    gs = ctx.matrix(s)
    assert np.allclose(gs @ g, ctx.matrix(s + t), rtol=0, atol=1e-9 * np.abs(gs).max() * np.abs(g).max())


def test_t_zero_is_isometry_in_exact_mode():
    ctx = build_context(GOOD_SPHERE, sample_points(GOOD_SPHERE, 1, 5)[0])
    v = (3, 0, 4, 0)
    assert flow_norm(ctx, v, 0.0) == pytest.approx(5.0)


@pytest.mark.parametrize("form,h", [(GOOD_CIRCLE, 300), (GOOD_SPHERE, 40)])
def test_dani_bound_small_sweep(form, h):
    table = enumerate_array(form, h)
    consts = constants(form)
    rng = np.random.default_rng(1)
    worst = 0.0
    for k in range(60):
        if k % 2:
            x = sample_points(form, 1, k)[0]
        else:
            v = table[rng.integers(len(table))]
            x = perturb_on_quadric(form, unit(v), 10 ** -rng.uniform(0, 6), rng)
        ctx = build_context(form, x)
        vs = table[rng.integers(len(table), size=30)]
        reps = dani_sweep(ctx, consts, vs, rng.uniform(0, 12, size=30))
        worst = max(worst, max(r.ratio for r in reps))
        worst = max(worst, max(r.ratio for r in dani_sweep(ctx, consts, vs[:1].repeat(49, 0), t_grid())))
        assert dual_use_ratio(ctx, consts, table, 10 ** -rng.uniform(1, 2.5)) <= 1
    assert worst <= 1 + 1e-9


def test_t_grid():
    g = t_grid()
    assert len(g) == 49 and g[0] == 0 and g[-1] == 12 and g[1] == 0.25


def test_dani_csv():
    ctx = build_context(GOOD_CIRCLE, (1, 0, 0))
    buf = io.StringIO()
    write_dani_csv([verify_dani(ctx, constants(GOOD_CIRCLE), (1, 0, 0), 1.0)], buf)
    assert buf.getvalue().splitlines()[0] == "t,H,dist,lhs,rhs,ratio,mode"
