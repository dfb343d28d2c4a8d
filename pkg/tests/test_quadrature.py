import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from resonance_atlas.errors import QuadratureNonConvergence
from resonance_atlas.quadrature import tanh_sinh


def test_inverse_sqrt_endpoint():
    r = tanh_sinh(lambda x, da, db: 0.5 / np.sqrt(db), 0.0, 1.0, 1e-12)
    assert abs(r.value - 1.0) < 1e-11


def test_sqrt_and_log():
    assert abs(tanh_sinh(lambda x, da, db: np.sqrt(db), 0.0, 1.0).value - 2 / 3) < 1e-10
    assert abs(tanh_sinh(lambda x, da, db: np.log(da), 0.0, 1.0).value + 1.0) < 1e-9


def test_empty_and_reversed():
    assert tanh_sinh(lambda x, da, db: x, 2.0, 2.0).value == 0.0
    with pytest.raises(ValueError):
        tanh_sinh(lambda x, da, db: x, 1.0, 0.0)


def test_nonconvergence_reported():
    with pytest.raises(QuadratureNonConvergence):
        tanh_sinh(lambda x, da, db: np.sin(400 * x), 0.0, 10.0, 1e-14, max_level=3)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 4), st.floats(0.5, 3))
def test_smooth_matches_scipy(a, length, k):
    b = a + length
    f = lambda x: np.cos(k * x) * np.exp(-0.1 * x * x)  # noqa: E731
    ref = quad(f, a, b, epsabs=1e-13, epsrel=1e-13)[0]
    got = tanh_sinh(lambda x, da, db: f(x), a, b, 1e-12).value
    assert abs(got - ref) < 1e-10 * max(1.0, abs(ref))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 5.0))
def test_endpoint_singularity_scaling(L):
    # int_0^L (L - x)^(-1/2) dx = 2 sqrt(L)
    got = tanh_sinh(lambda x, da, db: 1 / np.sqrt(db), 0.0, L, 1e-12).value
    assert abs(got - 2 * math.sqrt(L)) < 1e-10 * max(1.0, got)
