from collections import namedtuple
import logging

import numpy as np

from specpart.eigensolver import rayleigh_quotient
from specpart.exceptions import PhaseCollapseError
from specpart.grid import dirichlet_energy, inner, laplacian_apply
from specpart.oracles import unit_ball_volume

logger = logging.getLogger(__name__)

EnergyBreakdown = namedtuple("EnergyBreakdown", [
    "dirichlet",
    "measure_excess",
    "measure_penalty",
    "segregation_penalty",
    "total",
])

DEFAULT_EPS_REL = 1e-3


class PhaseVector(object):
    """ k nonnegative fields on a common grid, with the measure budget ``a``.

    Parameters
    ----------
    grid : DomainGrid
    fields : array_like
        Array of shape ``(k,) + grid.dims``.
    a : float
        Total measure budget, positive.
    """

    def __init__(self, grid, fields, a):
        fields = np.array(fields, dtype=float)
        if fields.ndim != grid.ndim + 1 or fields.shape[1:] != grid.dims:
            message = "Phase fields of shape {} do not match grid dims {}." \
                      .format(fields.shape, grid.dims)
            raise ValueError(message)
        if not a > 0:
            raise ValueError("The measure budget a must be positive, got {}.".format(a))
        self.grid = grid
        self.fields = fields
        self.a = float(a)

    def __repr__(self):
        return "PhaseVector(k={}, a={!r}, grid={!r})".format(self.k, self.a, self.grid)

    @property
    def k(self):
        return self.fields.shape[0]

    def copy(self):
        return PhaseVector(self.grid, self.fields.copy(), self.a)

    def with_fields(self, fields):
        return PhaseVector(self.grid, fields, self.a)

    def norms(self):
        return np.array([np.sqrt(inner(self.grid, u, u)) for u in self.fields])

    def is_segregated(self):
        """ At most one positive phase per cell. """
        return bool(np.all(np.count_nonzero(self.fields > 0, axis=0) <= 1))

    def validate(self):
        if not np.all(np.isfinite(self.fields)):
            raise ValueError("Phase fields contain non-finite values.")
        if np.any(self.fields < 0):
            raise ValueError("Phase fields must be nonnegative.")
        if np.any(self.fields[:, ~self.grid.mask] != 0):
            raise ValueError("Phase fields must vanish outside the mask.")


def support_cells(u, eps_rel=DEFAULT_EPS_REL):
    """ Cells where ``|u|`` exceeds ``eps_rel`` times its sup norm. """
    magnitude = np.abs(u)
    peak = magnitude.max()
    if peak == 0:
        return np.zeros(magnitude.shape, dtype=bool)
    return magnitude > eps_rel * peak


def support_measure(grid, u, eps_rel=DEFAULT_EPS_REL):
    """ Measure of the thresholded support of ``u``.

    Parameters
    ----------
    grid : DomainGrid
    u : numpy.ndarray
    eps_rel : float
        Relative threshold in ``[0, 1)``; zero counts every nonzero cell.

    Returns
    -------
    measure : float
        ``h^N * #{cells : |u| > eps_rel * max|u|}``.
    """
    if not 0 <= eps_rel < 1:
        raise ValueError("eps_rel must lie in [0, 1), got {}.".format(eps_rel))
    u = grid.check_field(u)
    return np.count_nonzero(support_cells(u, eps_rel) & grid.mask) * grid.cell_volume


def smoothed_measure(grid, u, eps_measure):
    """ h^N * sum(min(u^2 / eps^2, 1)): differentiable surrogate of the support measure. """
    if not eps_measure > 0:
        raise ValueError("eps_measure must be positive, got {}.".format(eps_measure))
    u = grid.check_field(u)
    rho = np.minimum(u * u / eps_measure ** 2, 1.0)
    return grid.cell_volume * np.sum(rho[grid.mask])


def _check_weights(mu, beta):
    if mu < 0 or beta < 0:
        message = "Penalty weights must be nonnegative (mu={}, beta={}).".format(mu, beta)
        raise ValueError(message)


def _segregation_sum(grid, fields):
    total = 0.0
    squares = fields * fields
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            total += np.sum(squares[i] * squares[j])
    return grid.cell_volume * total


def penalized_energy(grid, U, mu, beta, eps_measure, eps_rel=DEFAULT_EPS_REL):
    """ Smoothed penalized functional of a phase vector.

    total = sum_i R(u_i) + mu [sum_i M_eps(u_i) - a]^+ + beta sum_{i<j} int u_i^2 u_j^2

    where R is the Rayleigh quotient and M_eps the smoothed measure.
    ``measure_excess`` reports the thresholded (not smoothed) excess.

    Parameters
    ----------
    grid : DomainGrid
    U : PhaseVector
    mu : float
        Measure penalty weight.
    beta : float
        Segregation penalty weight.
    eps_measure : float
        Smoothing width of the measure surrogate.
    eps_rel : float
        Support threshold used for ``measure_excess``.

    Returns
    -------
    breakdown : EnergyBreakdown
    """
    _check_weights(mu, beta)
    quotients = []
    for i, u in enumerate(U.fields):
        if not np.any(u):
            message = "Phase {} is identically zero; its Rayleigh quotient is undefined.".format(i)
            raise PhaseCollapseError(message, phase=i)
        quotients.append(rayleigh_quotient(grid, u))

    supports = sum(support_measure(grid, u, eps_rel) for u in U.fields)
    measure_excess = max(supports - U.a, 0.0)

    measure_penalty = 0.0
    if mu > 0:
        smoothed = sum(smoothed_measure(grid, u, eps_measure) for u in U.fields)
        measure_penalty = mu * max(smoothed - U.a, 0.0)

    segregation_penalty = 0.0
    if beta > 0:
        segregation_penalty = beta * _segregation_sum(grid, U.fields)

    total = float(np.sum(quotients)) + measure_penalty + segregation_penalty
    return EnergyBreakdown(tuple(quotients), measure_excess, measure_penalty,
                           segregation_penalty, total)


def energy_gradient(grid, U, mu, beta, eps_measure):
    """ L2 gradient of the smoothed penalized functional, shape ``(k,) + dims``. """
    _check_weights(mu, beta)
    fields = U.fields
    gradient = np.zeros_like(fields)

    for i, u in enumerate(fields):
        norm_sq = inner(grid, u, u)
        if norm_sq == 0:
            raise PhaseCollapseError("Phase {} is identically zero.".format(i), phase=i)
        q = dirichlet_energy(grid, u) / norm_sq
        gradient[i] = 2.0 * (laplacian_apply(grid, u) - q * u) / norm_sq

    if mu > 0:
        smoothed = sum(smoothed_measure(grid, u, eps_measure) for u in fields)
        if smoothed > U.a:
            below = fields * fields < eps_measure ** 2
            gradient += mu * np.where(below, 2.0 * fields / eps_measure ** 2, 0.0)

    if beta > 0:
        squares = fields * fields
        others = squares.sum(axis=0) - squares
        gradient += 2.0 * beta * fields * others

    gradient[:, ~grid.mask] = 0.0
    return gradient


def mu_threshold(c_tilde, N, a, k):
    """ Penalty weight above which the penalized and constrained problems
    share their minimizers.

    ``(2^((k-1)/2) c_tilde a^((2-N)/(2N)) / (N |B_1|^(1/N)))^2``

    Parameters
    ----------
    c_tilde : float
        Upper bound of the optimal level, nonnegative.
    N : int
        Dimension, 2 or 3.
    a : float
        Measure budget, positive.
    k : int
        Number of phases, at least 2.

    Returns
    -------
    mu : float
    """
    if c_tilde < 0:
        raise ValueError("c_tilde must be nonnegative, got {}.".format(c_tilde))
    if not a > 0:
        raise ValueError("The measure budget a must be positive, got {}.".format(a))
    if k < 2:
        raise ValueError("k must be at least 2, got {}.".format(k))
    ball = unit_ball_volume(N)
    root = 2.0 ** ((k - 1) / 2.0) * c_tilde * a ** ((2.0 - N) / (2.0 * N)) \
        / (N * ball ** (1.0 / N))
    return root ** 2


def penalty_gap(grid, minimizer, competitor, mu):
    """ Exact-measure penalized value of ``competitor`` minus the Rayleigh
    sum of ``minimizer``. Nonnegative whenever ``minimizer`` is optimal and
    ``mu`` lies above the threshold.
    """
    level = sum(rayleigh_quotient(grid, u) for u in minimizer.fields)
    quotients = sum(rayleigh_quotient(grid, v) for v in competitor.fields)
    supports = sum(support_measure(grid, v, 0.0) for v in competitor.fields)
    return quotients + mu * max(supports - competitor.a, 0.0) - level
