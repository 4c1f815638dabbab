import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magloop.center import (LinearObservable, NotALoopError, commutator, drift_velocity,
                            floquet_point, loop_center, make_report, time_average_matrix)
from magloop.profiles import Constant, Harmonic

vec = st.lists(st.floats(-10, 10), min_size=4, max_size=4)


def test_canonical_commutator():
    assert commutator(LinearObservable((1, 0, 0, 0)), LinearObservable((0, 0, 1, 0))) == 1.0
    assert commutator((0, 1, 0, 0), (0, 0, 0, 1)) == 1.0
    assert commutator((1, 0, 0, 0), (0, 1, 0, 0)) == 0.0


@settings(max_examples=50)
@given(vec, vec)
def test_commutator_antisymmetric(a, b):
    assert commutator(a, b) == -commutator(b, a)


def test_fuzzy_loop_observables():
    cX = LinearObservable((1, 0, 0, 41 / (14 * math.pi)))
    cY = LinearObservable((0, 0, -31 / (14 * math.pi), 6 / (7 * math.pi ** 2)))
    assert commutator(cX, cY) == pytest.approx(-31 / (14 * math.pi), abs=1e-15)


def test_observable_validation():
    with pytest.raises(ValueError):
        LinearObservable((1, 2, 3))
    with pytest.raises(ValueError):
        LinearObservable((1, 2, 3, float("nan")))


@pytest.mark.parametrize("beta", [0.25, 0.5, 1.0, 2.0])
def test_constant_field_center(beta):
    r = loop_center(Constant(beta), duration=math.pi / beta)
    np.testing.assert_allclose(r.cX.vector, [0.5, 0, 0, 1 / (2 * beta)], atol=1e-10)
    np.testing.assert_allclose(r.cY.vector, [0, 0.5, -1 / (2 * beta), 0], atol=1e-10)
    assert r.kappa == pytest.approx(-1 / (2 * beta), abs=1e-10)
    assert not r.vanishing


def test_free_averages():
    avg = time_average_matrix(Constant(0.0), "cylindrical", 1.0)
    np.testing.assert_allclose(avg[0], [1, 0, 0.5, 0], atol=1e-14)
    x_row = floquet_point(Constant(0.0), window_start=0.4)[0]
    np.testing.assert_allclose(x_row.vector, [1, 0, 0.4 + 0.5, 0], atol=1e-13)


def test_floquet_point_depends_on_window_for_non_loops():
    a = floquet_point(Harmonic(0.3, 0.5), window_start=0.0)[0]
    b = floquet_point(Harmonic(0.3, 0.5), window_start=0.25)[0]
    assert np.linalg.norm(a.vector - b.vector) > 1e-3


def test_non_loop_rejected():
    with pytest.raises(NotALoopError):
        loop_center(Harmonic(0.3, 0.5), n_periods=3)


def test_loop_centers_vanish_and_ignore_window(refined_loops):
    for rl in refined_loops.values():
        r = loop_center(rl.profile, "cylindrical", rl.n)
        assert r.vanishing and r.cX.norm() + r.cY.norm() < 1e-6 and r.kappa == 0.0
        shifted = floquet_point(rl.profile, window_start=0.37, period=rl.n)
        assert np.abs(shifted[0].vector - r.cX.vector).max() < 1e-8


def test_constant_center_window_shift():
    beta = 0.7
    a = time_average_matrix(Constant(beta), "cylindrical", math.pi / beta)
    b = time_average_matrix(Constant(beta), "cylindrical", math.pi / beta, t0=0.31)
    np.testing.assert_allclose(a[:2], b[:2], atol=1e-8)


def test_drift_velocity_conventions():
    beta = 0.8
    r = loop_center(Constant(beta), duration=math.pi / beta)
    np.testing.assert_allclose(drift_velocity(r, (1.0, 0.0)), [0, -1 / (2 * beta)], atol=1e-10)
    np.testing.assert_allclose(drift_velocity(r, (0.0, 1.0)), [1 / (2 * beta), 0], atol=1e-10)
    zero = make_report(np.zeros((4, 4)))
    assert zero.vanishing
    np.testing.assert_array_equal(drift_velocity(zero, (3.0, -2.0)), [0.0, 0.0])
