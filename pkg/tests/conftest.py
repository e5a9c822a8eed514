import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from quadric_dioph.quadform import QuadraticForm, good_form

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

CIRCLE = QuadraticForm.diagonal(1, 1, -1)
SPHERE = QuadraticForm.diagonal(1, 1, 1, -1)
SPLIT = QuadraticForm(((0, 0, 0, 1), (0, 0, 1, 0), (0, 1, 0, 0), (1, 0, 0, 0)))
GOOD_CIRCLE = good_form([[1]])
GOOD_SPHERE = good_form([[1, 0], [0, 1]])
GOOD_3SPHERE = good_form([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
GOOD_SPLIT = good_form([[0, 1], [1, 0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
