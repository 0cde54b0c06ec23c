"""
Local deformations of segregated phase vectors.

``deform_simple`` pushes one phase down by ``t * phi``; ``deform_transfer``
lets one phase invade the region where ``phi`` is positive at the expense of
the others. Both renormalize every touched phase to unit L2 norm and keep
supports pairwise disjoint. Supports in this module are exact zero sets.
"""
from collections import namedtuple
import logging

import numpy as np

from specpart.eigensolver import rayleigh_quotient
from specpart.exceptions import PhaseCollapseError
from specpart.grid import inner
from specpart.regression import convergence_order

logger = logging.getLogger(__name__)

DeformationReport = namedtuple("DeformationReport", [
    "t",
    "norms_after",
    "support_inclusions",
    "disjointness",
    "energy_delta",
])

ExpansionCheck = namedtuple("ExpansionCheck", ["slope", "remainders", "first_order"])


def _check_index(U, i):
    if not 0 <= i < U.k:
        raise IndexError("Phase index {} out of range for k = {}.".format(i, U.k))


def _check_test_function(U, phi):
    phi = U.grid.check_field(phi)
    if np.any(phi < 0):
        raise ValueError("The test function phi must be nonnegative.")
    return phi


def _normalized(grid, v, phase):
    norm_sq = inner(grid, v, v)
    if norm_sq == 0:
        message = "Deformation annihilated phase {}.".format(phase)
        raise PhaseCollapseError(message, phase=phase)
    return v / np.sqrt(norm_sq)


def hat_transform(U, i):
    """ u_i minus the sum of the other phases. """
    _check_index(U, i)
    others = np.sum(np.delete(U.fields, i, axis=0), axis=0)
    return U.fields[i] - others


def deform_simple(U, i, phi, t):
    """ Lower phase ``i`` by ``t * phi`` and renormalize it.

    Parameters
    ----------
    U : PhaseVector
    i : int
        Index of the deformed phase.
    phi : numpy.ndarray
        Nonnegative test field.
    t : float
        Step, at most ``max(u_i) / (2 max(phi))``.

    Returns
    -------
    deformed : PhaseVector
    """
    _check_index(U, i)
    phi = _check_test_function(U, phi)
    if t < 0:
        raise ValueError("Deformation step must be nonnegative, got {}.".format(t))
    if t == 0:
        return U.copy()

    u = U.fields[i]
    peak_phi = phi.max()
    if peak_phi > 0 and t > 0.5 * u.max() / peak_phi:
        message = "Step t = {} exceeds half of max(u_{}) / max(phi) = {}.".format(
            t, i, 0.5 * u.max() / peak_phi)
        raise ValueError(message)

    fields = U.fields.copy()
    fields[i] = _normalized(U.grid, np.maximum(u - t * phi, 0.0), i)
    return U.with_fields(fields)


def deform_transfer(U, i, phi, t):
    """ Let phase ``i`` grow by ``t * phi`` into the others.

    Phase ``i`` becomes ``(hat(u_i) + t phi)^+`` and every other phase
    ``j`` becomes ``(hat(u_j) - t phi)^+``, each renormalized.

    Raises
    ------
    PhaseCollapseError
        When a phase has no positive cell left.
    """
    _check_index(U, i)
    phi = _check_test_function(U, phi)
    if t < 0:
        raise ValueError("Deformation step must be nonnegative, got {}.".format(t))
    if t == 0:
        return U.copy()

    fields = np.empty_like(U.fields)
    for j in range(U.k):
        shift = t * phi if j == i else -t * phi
        fields[j] = _normalized(U.grid, np.maximum(hat_transform(U, j) + shift, 0.0), j)
    return U.with_fields(fields)


def check_deformation(before, after, i, phi, kind):
    """ Cell-wise verification of a deformation's conclusions.

    Parameters
    ----------
    before, after : PhaseVector
    i : int
        Deformed (``simple``) or receiving (``transfer``) phase.
    phi : numpy.ndarray
    kind : str
        ``"simple"`` or ``"transfer"``.

    Returns
    -------
    report : DeformationReport
        ``t`` is left as ``None``; callers fill it with ``_replace``.
    """
    if kind not in ("simple", "transfer"):
        raise ValueError("Unknown deformation kind '{}'.".format(kind))
    grid = before.grid
    old = before.fields > 0
    new = after.fields > 0
    allowed = old.copy()
    if kind == "transfer":
        allowed[i] |= phi > 0

    inclusions = tuple(bool(not np.any(new[j] & ~allowed[j])) for j in range(before.k))
    disjoint = bool(np.all(np.count_nonzero(new, axis=0) <= 1))
    norms = tuple(np.sqrt(inner(grid, u, u)) for u in after.fields)
    delta = sum(rayleigh_quotient(grid, u) for u in after.fields) \
        - sum(rayleigh_quotient(grid, u) for u in before.fields)
    return DeformationReport(None, norms, inclusions, disjoint, delta)


def expansion_check(grid, u, phi, t_list, sign=1):
    """ Remainder of the first-order expansion of ``1 / ||(u + sign t phi)^+||^2``.

    The expansion is ``1/||u+||^2 - sign (2 t / ||u+||^4) int u+ phi``.

    Parameters
    ----------
    grid : DomainGrid
    u, phi : numpy.ndarray
    t_list : sequence of float
        Strictly decreasing positive steps.
    sign : int
        +1 or -1.

    Returns
    -------
    check : ExpansionCheck
        ``slope`` is the fitted log-log order of the remainders (``inf``
        when the expansion is exact), ``first_order`` the coefficient of t.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1, got {}.".format(sign))
    t_list = np.asarray(t_list, dtype=float)
    if t_list.size < 2 or np.any(t_list <= 0) or np.any(np.diff(t_list) >= 0):
        raise ValueError("t_list must hold at least two strictly decreasing positive steps.")

    u_plus = np.maximum(grid.check_field(u), 0.0)
    phi = grid.check_field(phi)
    base = inner(grid, u_plus, u_plus)
    if base == 0:
        raise ValueError("The positive part of u vanishes.")
    first_order = -sign * 2.0 * inner(grid, u_plus, phi) / base ** 2

    remainders = []
    for t in t_list:
        moved = np.maximum(u + sign * t * phi, 0.0)
        norm_sq = inner(grid, moved, moved)
        if norm_sq == 0:
            raise ValueError("(u {} t phi)^+ vanishes at t = {}.".format("+" if sign > 0 else "-", t))
        remainders.append(abs(1.0 / norm_sq - (1.0 / base + first_order * t)))
    remainders = np.array(remainders)

    nonzero = remainders > 0
    if np.count_nonzero(nonzero) < 2:
        slope = np.inf
    else:
        slope = convergence_order(t_list[nonzero], remainders[nonzero])
    return ExpansionCheck(slope, remainders, first_order)
