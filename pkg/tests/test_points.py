import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quadric_dioph.points import (
    NotIsotropicPair,
    RationalProjectivePoint,
    ZeroVector,
    bruteforce_array,
    canonicalize,
    enumerate_array,
    enumerate_bruteforce,
    enumerate_parametrized,
    good_form_array,
    local_obstruction,
    parametrized_array,
    pythagorean_array,
    qrank_bounds,
    read_points_csv,
    row_heights,
    totally_isotropic_closure,
    write_points_csv,
)
from quadric_dioph.quadform import QuadraticForm, bilinear, evaluate

from conftest import CIRCLE, GOOD_CIRCLE, GOOD_SPHERE, GOOD_SPLIT, SPHERE, SPLIT


def naive_points(form, h):
    """Independent oracle: loop over the whole box in pure Python."""
    out = set()
    for v in itertools.product(range(-h, h + 1), repeat=form.size):
        if any(v) and math.gcd(*v) == 1 and evaluate(form, v) == 0:
            if next(a for a in reversed(v) if a) > 0:
                out.add(v)
    return out


def as_set(arr):
    return {tuple(int(a) for a in r) for r in arr}


def test_circle_counts():
    assert len(enumerate_array(CIRCLE, 1)) == 4
    assert len(enumerate_array(CIRCLE, 5)) == 12
    assert as_set(enumerate_array(CIRCLE, 5)) == naive_points(CIRCLE, 5)


@pytest.mark.parametrize("form,h", [(CIRCLE, 7), (SPHERE, 4), (SPLIT, 2), (GOOD_CIRCLE, 6),
                                    (QuadraticForm.diagonal(1, 0, -1), 3), (QuadraticForm([[2, 1, 0], [1, -1, 0], [0, 0, 3]]), 5)])
def test_matches_naive_oracle(form, h):
    assert as_set(bruteforce_array(form, h)) == naive_points(form, h)
    assert as_set(enumerate_array(form, h)) == naive_points(form, h)


@pytest.mark.parametrize("h", [5, 25, 100])
def test_parametrized_agrees_on_circle(h):
    assert enumerate_parametrized(CIRCLE, (1, 0, 1), h) == enumerate_bruteforce(CIRCLE, h)


def test_parametrized_agrees_on_sphere():
    assert enumerate_parametrized(SPHERE, (1, 0, 0, 1), 5) == enumerate_bruteforce(SPHERE, 5)


@pytest.mark.parametrize("h", [1, 2, 13, 200, 1000])
def test_pythagorean_path(h):
    assert np.array_equal(pythagorean_array(h), bruteforce_array(CIRCLE, h))


@pytest.mark.parametrize("form,h", [(GOOD_CIRCLE, 60), (GOOD_SPHERE, 12), (GOOD_SPLIT, 5)])
def test_good_form_path(form, h):
    assert np.array_equal(good_form_array(form, h), bruteforce_array(form, h))


def test_table_is_sorted_canonical():
    t = enumerate_array(SPHERE, 9)
    hs = row_heights(t)
    assert np.all(np.diff(hs) >= 0)
    for v in t:
        p = RationalProjectivePoint(tuple(int(a) for a in v))
        assert evaluate(SPHERE, p) == 0


@given(st.integers(1, 40), st.integers(1, 40))
def test_enumeration_prefix(h1, h2):
    lo, hi = sorted((h1, h2))
    small, big = enumerate_array(CIRCLE, lo), enumerate_array(CIRCLE, hi)
    assert np.array_equal(small, big[row_heights(big) <= lo])


@given(st.lists(st.integers(-30, 30), min_size=3, max_size=5).filter(any), st.integers(-5, 5).filter(bool))
def test_canonicalize_projective(v, k):
    p = canonicalize(v)
    assert canonicalize([k * a for a in v]) == p
    assert math.gcd(*p.coords) == 1
    assert next(a for a in reversed(p.coords) if a) > 0


def test_point_validation():
    with pytest.raises(ZeroVector):
        canonicalize((0, 0, 0))
    with pytest.raises(ValueError):
        RationalProjectivePoint((2, 0, 2))
    with pytest.raises(ValueError):
        RationalProjectivePoint((1, 0, -1))
    assert RationalProjectivePoint((3, -4, 5)).height == 5


def test_qrank_regression_table():
    cases = [(CIRCLE, 1, None), (SPHERE, 1, None), (SPLIT, 2, None),
             (QuadraticForm.diagonal(1, 1, -3), 0, 9), (QuadraticForm.diagonal(1, 1, 1), 0, 4)]
    for form, r, obs in cases:
        b = qrank_bounds(form, 10)
        assert b.lower == b.upper == r
        assert b.obstruction == obs
        if b.witness is not None:
            assert b.witness.is_totally_isotropic(form)


@given(st.lists(st.integers(-3, 3), min_size=6, max_size=6))
def test_qrank_bounds_ordered(e):
    a = np.zeros((3, 3), dtype=int)
    a[np.triu_indices(3)] = e
    a = a + np.triu(a, 1).T
    if not a.any():
        return
    b = qrank_bounds(QuadraticForm(a.tolist()), 4)
    assert 0 <= b.lower <= b.upper


def test_local_obstruction_sound():
    # a residue obstruction must not fire when a rational point exists
    for form in (CIRCLE, SPHERE, QuadraticForm.diagonal(1, 1, -2)):
        assert local_obstruction(form, [4, 8, 9, 25]) is None


def test_closure_on_split_form():
    pts = [(1, 0, 0, 0), (0, 1, 0, 0), (1, 1, 0, 0)]
    sub = totally_isotropic_closure(pts, SPLIT)
    assert sub.dim == 2
    assert all(bilinear(SPLIT, u, w) == 0 for u in pts for w in pts)
    assert sub.contains((2, 3, 0, 0)) and not sub.contains((0, 0, 1, 0))


def test_closure_failure_names_the_pair():
    with pytest.raises(NotIsotropicPair) as err:
        totally_isotropic_closure([(1, 0, 1), (3, 4, 5)], CIRCLE)
    assert (err.value.i, err.value.j, err.value.value) == (0, 1, -2)


def test_csv_roundtrip():
    t = enumerate_array(CIRCLE, 10)
    buf = io.StringIO()
    write_points_csv(t, buf)
    assert buf.getvalue().splitlines()[0] == "x1,x2,x3,height"
    buf.seek(0)
    assert np.array_equal(read_points_csv(buf), t)
