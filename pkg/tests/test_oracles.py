from specpart.eigensolver import smallest_dirichlet_eig
from specpart.grid import build_domain
from specpart.oracles import (
    ball_lambda1,
    ball_radius,
    bessel_first_zero,
    box_lambda1,
    equal_ball_prediction,
    equal_balls_fit,
    faber_krahn_bound,
    unit_ball_volume,
)

import numpy as np
from numpy.testing import assert_allclose

import pytest

RTOL = 1e-10

J0_FIRST_ZERO = 2.404825557695773
J_HALF_FIRST_ZERO = np.pi


def test_bessel_first_zero():
    assert_allclose(bessel_first_zero(2), J0_FIRST_ZERO, rtol=1e-11)
    assert_allclose(bessel_first_zero(3), J_HALF_FIRST_ZERO, rtol=1e-11)


def test_unit_ball_volume():
    assert_allclose(unit_ball_volume(2), np.pi)
    assert_allclose(unit_ball_volume(3), 4.0 * np.pi / 3.0)


@pytest.mark.parametrize("N", [1, 4])
def test_unsupported_dimension(N):
    with pytest.raises(ValueError):
        ball_lambda1(N, 1.0)
    with pytest.raises(ValueError):
        equal_ball_prediction(N, 2, 0.1)


def test_ball_lambda1_values():
    assert_allclose(ball_lambda1(2, 1.0), 5.783185962946784, rtol=RTOL)
    assert_allclose(ball_lambda1(3, 1.0), np.pi ** 2, rtol=RTOL)
    assert_allclose(ball_lambda1(2, 0.5), 4.0 * ball_lambda1(2, 1.0), rtol=RTOL)


def test_ball_lambda1_vectorized():
    radii = np.array([0.5, 1.0, 2.0])
    assert_allclose(ball_lambda1(2, radii), [ball_lambda1(2, r) for r in radii], rtol=RTOL)


def test_ball_lambda1_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        ball_lambda1(2, 0.0)


def test_box_lambda1():
    assert_allclose(box_lambda1([1.0, 1.0]), 2 * np.pi ** 2, rtol=RTOL)
    assert_allclose(box_lambda1([2.0, 1.0]), 1.25 * np.pi ** 2, rtol=RTOL)
    assert_allclose(box_lambda1([1.0, 1.0, 1.0]), 3 * np.pi ** 2, rtol=RTOL)
    with pytest.raises(ValueError):
        box_lambda1([1.0, 0.0])


def test_equal_ball_prediction_two_disks():
    prediction = equal_ball_prediction(2, 2, 0.1)
    assert_allclose(prediction.radius, 0.126157, rtol=1e-5)
    assert_allclose(prediction.total_objective, 726.8, rtol=1e-3)
    assert_allclose(prediction.total_objective, 2 * prediction.per_ball_lambda, rtol=RTOL)


def test_equal_ball_prediction_single_unit_disk():
    prediction = equal_ball_prediction(2, 1, np.pi)
    assert_allclose(prediction.radius, 1.0, rtol=RTOL)
    assert_allclose(prediction.total_objective, J0_FIRST_ZERO ** 2, rtol=RTOL)


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_equal_ball_prediction_scaling(k):
    # in 2D the objective scales like 1 / a
    small = equal_ball_prediction(2, k, 0.1)
    large = equal_ball_prediction(2, k, 0.2)
    assert_allclose(large.total_objective, small.total_objective / 2.0, rtol=1e-12)


def test_equal_ball_prediction_rejects():
    with pytest.raises(ValueError):
        equal_ball_prediction(2, 0, 0.1)
    with pytest.raises(ValueError):
        equal_ball_prediction(2, 2, 0.0)


@pytest.mark.parametrize("N, k", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_equal_balls_minimize_eigenvalue_sum(N, k):
    a = 0.1
    best = equal_ball_prediction(N, k, a).total_objective
    rng = np.random.default_rng(11)
    shares = rng.dirichlet(np.ones(k), size=10000)
    totals = np.array([faber_krahn_bound(N, a * s) for s in shares])
    assert np.all(totals >= best * (1 - 1e-12))


def test_faber_krahn_bound_matches_prediction():
    prediction = equal_ball_prediction(3, 3, 0.12)
    assert_allclose(faber_krahn_bound(3, [0.04, 0.04, 0.04]), prediction.total_objective,
                    rtol=RTOL)
    with pytest.raises(ValueError):
        faber_krahn_bound(2, [0.1, 0.0])


def test_ball_radius():
    assert_allclose(ball_radius(2, np.pi), 1.0, rtol=RTOL)
    assert_allclose(ball_radius(3, 4.0 * np.pi / 3.0 * 8.0), 2.0, rtol=RTOL)


def test_equal_balls_fit():
    assert equal_balls_fit((1.0, 1.0), 2, 0.126)
    assert not equal_balls_fit((1.0, 1.0), 2, 0.3)
    assert equal_balls_fit((1.0, 1.0), 1, 0.45)
    assert not equal_balls_fit((1.0, 1.0), 1, 0.6)


def test_faber_krahn_bound_widened_by_half_cell():
    h = 1.0 / 128
    measures = [0.05, 0.03]
    radii = ball_radius(2, np.array(measures)) + h / 2
    assert_allclose(faber_krahn_bound(2, measures, h), np.sum(ball_lambda1(2, radii)), rtol=RTOL)
    assert faber_krahn_bound(2, measures, h) < faber_krahn_bound(2, measures)
    with pytest.raises(ValueError):
        faber_krahn_bound(2, measures, -h)


def test_staircase_disk_against_widened_bound():
    grid = build_domain("disk 0.2 0.5 0.5 1 1", 128)
    lam = smallest_dirichlet_eig(grid).lambda_
    assert lam < faber_krahn_bound(2, [grid.measure])
    assert lam >= 0.95 * faber_krahn_bound(2, [grid.measure], grid.spacing)
