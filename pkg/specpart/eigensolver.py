from collections import namedtuple
import logging

import numpy as np
from scipy.sparse.linalg import cg

from specpart.exceptions import EigenSolverError
from specpart.grid import dirichlet_energy, inner, label_components

logger = logging.getLogger(__name__)

EigenResult = namedtuple("EigenResult", ["lambda_", "eigenfunction", "iterations", "residual"])

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 500
INNER_TOL = 1e-8
STAGNATION_TOL = 1e-9


def rayleigh_quotient(grid, u):
    """ Dirichlet energy of ``u`` over its squared L2 norm.

    Parameters
    ----------
    grid : DomainGrid
    u : numpy.ndarray
        Field on the grid, not identically zero.

    Returns
    -------
    quotient : float
    """
    norm_sq = inner(grid, u, u)
    if norm_sq == 0:
        raise ValueError("Rayleigh quotient of the zero field is undefined.")
    return dirichlet_energy(grid, u) / norm_sq


def _inverse_iteration(matrix, tol, max_iter, inner_tol, stagnation_tol):
    """ Smallest eigenpair of an SPD matrix by inverse iteration with CG solves.

    Returns ``(lambda, x, iterations, relative_residual)`` with ``x`` of unit
    Euclidean norm.
    """
    n = matrix.shape[0]
    x = np.ones(n) / np.sqrt(n)
    lam = x.dot(matrix.dot(x))
    relative_residual = np.inf
    for iteration in range(1, max_iter + 1):
        y, info = cg(matrix, x, x0=np.zeros(n), rtol=inner_tol, atol=0.0)
        if info > 0:
            logger.debug("CG stopped after {} iterations above rtol {}.".format(info, inner_tol))
        x_new = y / np.linalg.norm(y)
        ax = matrix.dot(x_new)
        lam_new = x_new.dot(ax)
        relative_residual = np.linalg.norm(ax - lam_new * x_new) / lam_new
        stagnant = abs(lam_new - lam) <= stagnation_tol * lam_new
        x, lam = x_new, lam_new
        if stagnant and relative_residual <= tol:
            return lam, x, iteration, relative_residual

    message = "Inverse iteration did not converge in {} iterations" \
              " (relative residual {:.3e}, tolerance {:.1e}).".format(
                  max_iter, relative_residual, tol)
    raise EigenSolverError(message, residual=relative_residual * lam, iterations=max_iter)


def smallest_dirichlet_eig(grid, subset=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                           inner_tol=INNER_TOL, stagnation_tol=STAGNATION_TOL):
    """ Smallest Dirichlet eigenpair of -Delta_h restricted to a cell subset.

    Each face-connected component of ``subset`` is solved separately and
    the component with the smallest eigenvalue is returned; the
    eigenfunction vanishes on the other components.

    Parameters
    ----------
    grid : DomainGrid
    subset : numpy.ndarray of bool, optional
        Cells of the candidate set, contained in ``grid.mask``. Defaults to
        the whole interior.
    tol : float
        Required relative residual ``||-Delta_h u - lambda u|| / lambda``.
    max_iter : int
        Cap on inverse-iteration steps per component.
    inner_tol : float
        Relative residual of the inner conjugate-gradient solves.
    stagnation_tol : float
        Relative eigenvalue change accepted as converged.

    Returns
    -------
    result : EigenResult
        ``eigenfunction`` is nonnegative and has unit L2 norm; ``residual``
        is the L2 norm of ``-Delta_h u - lambda u``.
    """
    if subset is None:
        subset = grid.mask
    subset = np.asarray(subset, dtype=bool)
    if subset.shape != grid.dims:
        message = "Subset of shape {} does not match grid dims {}.".format(subset.shape, grid.dims)
        raise ValueError(message)
    if not subset.any():
        raise ValueError("Cannot solve an eigenproblem on an empty subset.")
    if np.any(subset & ~grid.mask):
        raise ValueError("Subset leaves the interior of the grid.")

    labels, n_components = label_components(subset)
    best = None
    total_iterations = 0
    for label in range(1, n_components + 1):
        cells = labels == label
        lam, x, iterations, relative_residual = _inverse_iteration(
            grid.restricted_matrix(cells), tol, max_iter, inner_tol, stagnation_tol)
        total_iterations += iterations
        if best is None or lam < best[0]:
            best = (lam, x, cells, relative_residual)

    lam, x, cells, relative_residual = best
    u = np.zeros(grid.dims)
    u[cells] = x
    if u.sum() < 0:
        u = -u
    u /= np.sqrt(inner(grid, u, u))

    logger.debug("lambda_1 = {:.8g} on {} cells ({} components, {} iterations)".format(
        lam, int(subset.sum()), n_components, total_iterations))
    return EigenResult(lam, u, total_iterations, relative_residual * lam)
