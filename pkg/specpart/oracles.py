from collections import namedtuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv

BallPrediction = namedtuple("BallPrediction", ["radius", "per_ball_lambda", "total_objective"])

# bracket of the first positive zero of J_nu, keyed by nu = N/2 - 1
BESSEL_ZERO_BRACKETS = {
    2: (0.0, (2.0, 3.0)),
    3: (0.5, (3.0, 4.0)),
}
BESSEL_XTOL = 1e-12


def _check_dimension(N):
    if N not in BESSEL_ZERO_BRACKETS:
        message = "Only N = 2 and N = 3 are supported, got N = {}.".format(N)
        raise ValueError(message)


def unit_ball_volume(N):
    """ Volume |B_1| of the unit ball in R^N (N = 2 or 3). """
    _check_dimension(N)
    return np.pi if N == 2 else 4.0 * np.pi / 3.0


def bessel_first_zero(N):
    """ First positive zero of J_{N/2-1}, by Brent's method on its bracket. """
    _check_dimension(N)
    order, (low, high) = BESSEL_ZERO_BRACKETS[N]
    return brentq(lambda x: jv(order, x), low, high, xtol=BESSEL_XTOL)


def ball_lambda1(N, r):
    """ First Dirichlet eigenvalue of a ball of radius ``r`` in R^N.

    Parameters
    ----------
    N : int
        Dimension, 2 or 3.
    r : float or numpy.ndarray
        Radius (or radii), strictly positive.

    Returns
    -------
    lambda1 : float or numpy.ndarray
        ``(j_{N/2-1,1} / r)^2``.
    """
    _check_dimension(N)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("Ball radius must be positive.")
    value = (bessel_first_zero(N) / r) ** 2
    return float(value) if value.ndim == 0 else value


def box_lambda1(lengths):
    """ First Dirichlet eigenvalue of a box, pi^2 * sum(1 / L_i^2). """
    lengths = np.asarray(lengths, dtype=float)
    if np.any(lengths <= 0):
        raise ValueError("Box edge lengths must be positive, got {}.".format(lengths.tolist()))
    return float(np.pi ** 2 * np.sum(1.0 / lengths ** 2))


def ball_radius(N, measure):
    """ Radius of the ball of the given measure. """
    return (np.asarray(measure, dtype=float) / unit_ball_volume(N)) ** (1.0 / N)


def equal_ball_prediction(N, k, a):
    """ Objective of k disjoint equal balls sharing the total measure ``a``.

    Among k disjoint balls of total measure ``a`` the sum of first
    eigenvalues is smallest when all radii agree, and this configuration
    is optimal once ``a`` is small enough for the balls to fit.

    Parameters
    ----------
    N : int
    k : int
        Number of balls, at least one.
    a : float
        Total measure, positive.

    Returns
    -------
    prediction : BallPrediction
    """
    _check_dimension(N)
    if k < 1:
        raise ValueError("k must be at least 1, got {}.".format(k))
    if not a > 0:
        raise ValueError("The measure budget a must be positive, got {}.".format(a))
    radius = float((a / (k * unit_ball_volume(N))) ** (1.0 / N))
    per_ball = ball_lambda1(N, radius)
    return BallPrediction(radius, per_ball, k * per_ball)


def faber_krahn_bound(N, measures, spacing=0.0):
    """ Sum over phases of lambda_1 of the ball with the same measure.

    Parameters
    ----------
    N : int
    measures : sequence of float
        Positive measures.
    spacing : float
        Grid spacing ``h`` of cell-counted measures. Each ball radius is
        widened by ``h / 2``: a set of cells with zero values at the centres
        of the cells around it behaves like the set grown by half a cell.

    Returns
    -------
    bound : float
    """
    measures = np.asarray(measures, dtype=float)
    if np.any(measures <= 0):
        raise ValueError("Faber-Krahn bound needs positive measures, got {}.".format(measures.tolist()))
    if spacing < 0:
        raise ValueError("spacing must be nonnegative, got {}.".format(spacing))
    return float(np.sum(ball_lambda1(N, ball_radius(N, measures) + 0.5 * spacing)))


def equal_balls_fit(lengths, k, radius, clearance_factor=2.0):
    """ Whether k balls of ``radius``, spread evenly along the main diagonal
    of the box, stay inside it with gaps of at least ``clearance_factor * radius``.
    """
    lengths = np.asarray(lengths, dtype=float)
    diagonal = np.sqrt(np.sum(lengths ** 2))
    # a centre on the diagonal clears every face once it is radius * D / min(L) from a corner
    usable = diagonal - 2.0 * radius * diagonal / lengths.min()
    if usable < 0:
        return False
    if k == 1:
        return True
    spacing = usable / (k - 1)
    return bool(spacing >= (2.0 + clearance_factor) * radius)
