from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quadric_dioph.quadform import (
    DimensionMismatch,
    Inertia,
    NotIsotropic,
    PointInKernel,
    QuadFormError,
    QuadraticForm,
    bilinear,
    determinant,
    evaluate,
    good_form,
    hyperbolic_normalize,
    inertia,
    is_good_form,
    kernel,
)

from conftest import CIRCLE, SPLIT

small = st.integers(-6, 6)


@st.composite
def forms(draw, size=None):
    n = size or draw(st.integers(2, 5))
    entries = draw(st.lists(small, min_size=n * n, max_size=n * n))
    a = np.array(entries).reshape(n, n)
    a = np.triu(a) + np.triu(a, 1).T
    if not a.any():
        a[0, 0] = 1
    return QuadraticForm(a.tolist())


def vectors(n):
    return st.lists(st.integers(-50, 50), min_size=n, max_size=n)


def test_evaluate_examples():
    assert evaluate(CIRCLE, (3, 4, 5)) == 0
    assert evaluate(CIRCLE, (1, 1, 1)) == 1
    assert evaluate(QuadraticForm.diagonal(1, 1, -3), (1, 1, 1)) == -1


def test_bilinear_examples():
    assert bilinear(CIRCLE, (1, 0, 1), (3, 4, 5)) == 3 - 5
    assert bilinear(CIRCLE, (3, 4, 5), (3, 4, 5)) == 0
    assert bilinear(SPLIT, (1, 0, 0, 0), (0, 1, 0, 0)) == 0


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        evaluate(CIRCLE, (1, 2))


@pytest.mark.parametrize("gram", [[[1, 2], [3, 1]], [[0, 0], [0, 0]], [[1]], [[1, 0.5], [0.5, 1]]])
def test_invalid_gram(gram):
    with pytest.raises(QuadFormError):
        QuadraticForm(gram)


def test_rational_gram_is_scaled():
    f = QuadraticForm.from_rational([[Fraction(1, 2), 0], [0, Fraction(-1, 3)]])
    assert f.gram == ((3, 0), (0, -2))


def test_json_roundtrip():
    assert QuadraticForm.from_json(SPLIT.to_json()) == SPLIT
    with pytest.raises(QuadFormError):
        QuadraticForm.from_json({"dim": 3, "gram": [[1, 0], [0, -1]]})


def test_inertia_examples():
    assert inertia(CIRCLE) == Inertia(2, 1, 0)
    assert inertia(SPLIT) == Inertia(2, 2, 0)
    assert inertia(QuadraticForm.diagonal(1, 0, -1)) == Inertia(1, 1, 1)


def test_kernel_examples():
    assert kernel(CIRCLE) == []
    assert kernel(QuadraticForm.diagonal(1, 0, -1)) == [(0, 1, 0)]
    ker = kernel(QuadraticForm([[1, 1, 0], [1, 1, 0], [0, 0, 0]]))
    assert len(ker) == 2
    a = np.array([[1, 1, 0], [1, 1, 0], [0, 0, 0]])
    for v in ker:
        assert not (a @ np.array(v)).any()
    assert np.linalg.matrix_rank(np.array(ker)) == 2


def test_normalize_circle():
    hb = hyperbolic_normalize(CIRCLE, (1, 0, 1))
    assert hb.columns == [(1, 0, 1), (0, 1, 0), (Fraction(1, 2), 0, Fraction(-1, 2))]
    assert hb.residual == ((1,),)
    assert hb.transformed_gram(CIRCLE) == [[0, 0, 1], [0, 1, 0], [1, 0, 0]]


def test_normalize_identity_on_good_form():
    g = good_form([[1]])
    hb = hyperbolic_normalize(g, (1, 0, 0))
    assert hb.columns == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


def test_normalize_errors():
    with pytest.raises(NotIsotropic):
        hyperbolic_normalize(CIRCLE, (1, 1, 1))
    with pytest.raises(PointInKernel):
        hyperbolic_normalize(QuadraticForm.diagonal(1, 0, -1), (0, 1, 0))


def test_determinant():
    assert determinant(CIRCLE) == -1
    assert determinant(SPLIT) == 1
    assert determinant(QuadraticForm([[2, 1], [1, 2]])) == 3


@given(forms(), st.data())
def test_polarization(form, data):
    v = data.draw(vectors(form.size))
    w = data.draw(vectors(form.size))
    s = [a + b for a, b in zip(v, w)]
    assert evaluate(form, s) == evaluate(form, v) + evaluate(form, w) + 2 * bilinear(form, v, w)


@given(forms())
def test_inertia_matches_eigenvalue_signs(form):
    lam = np.linalg.eigvalsh(form.matrix.astype(float))
    tol = 1e-9
    expected = (int((lam > tol).sum()), int((lam < -tol).sum()), int((abs(lam) <= tol).sum()))
    assert inertia(form) == Inertia(*expected)


@given(forms(), st.data())
def test_inertia_congruence_invariant(form, data):
    n = form.size
    t = np.array(data.draw(st.lists(st.integers(-3, 3), min_size=n * n, max_size=n * n))).reshape(n, n)
    if round(np.linalg.det(t)) == 0:
        t = t + 7 * np.eye(n, dtype=int)
    if round(np.linalg.det(t)) == 0:
        return
    g = QuadraticForm((t.T @ form.matrix @ t).tolist())
    assert inertia(g) == inertia(form)


@given(forms())
def test_kernel_dimension_is_zero_count(form):
    assert len(kernel(form)) == inertia(form).zero


@given(st.sampled_from([CIRCLE, SPLIT, QuadraticForm.diagonal(1, 1, 1, -1), QuadraticForm.diagonal(2, 3, -5)]),
       st.data())
def test_normalize_block_shape(form, data):
    from quadric_dioph.points import enumerate_array

    pts = enumerate_array(form, 6)
    e = pts[data.draw(st.integers(0, len(pts) - 1))]
    g = hyperbolic_normalize(form, e).transformed_gram(form)
    n = form.size - 1
    assert g[0][n] == g[n][0] == 1
    assert all(g[0][j] == 0 for j in range(n)) and all(g[n][j] == 0 for j in range(1, n + 1))
    assert is_good_form(QuadraticForm.from_rational(g))
