from collections import OrderedDict, namedtuple
from warnings import warn
import logging

import numpy as np
from scipy import ndimage

from specpart.eigensolver import DEFAULT_TOL, rayleigh_quotient, smallest_dirichlet_eig
from specpart.energy import DEFAULT_EPS_REL, PhaseVector, support_cells
from specpart.exceptions import PhaseCollapseError
from specpart.grid import gradient_density, inner, label_components, laplacian_apply
from specpart.oracles import faber_krahn_bound

logger = logging.getLogger(__name__)

PartitionResult = namedtuple("PartitionResult", [
    "supports",
    "components_per_phase",
    "measures",
    "lambdas",
    "quotients",
    "eigenfunctions",
    "objective",
    "rayleigh_gap",
    "saturation_gap",
])

AuditCheck = namedtuple("AuditCheck", ["passed", "margin", "threshold"])
_EigenView = namedtuple("_EigenView", ["lambda_", "eigenfunction"])

SATURATION_SLACK = 0.02
FABER_KRAHN_SLACK = 0.05
SUBSOLUTION_TOL = 1e-6
EIGEN_RESIDUAL_TOL = 1e-4

# integral of 1/|x| over the unit cube centred at the origin
UNIT_CUBE_INVERSE_DISTANCE = 3.0 * np.log(2.0 + np.sqrt(3.0)) - np.pi / 2.0


class AuditReport(object):
    """ Outcome of the structural checks on an extracted partition.

    Every flag is backed by an ``AuditCheck`` holding the numeric margin
    (nonnegative when the check passes) and the threshold it was held to.
    """

    CHECKS = ["saturation", "connected", "disjoint", "faber_krahn", "subsolution",
              "eigen_residual"]

    def __init__(self, saturation, connected, disjoint, faber_krahn, subsolution,
                 eigen_residual):
        self.saturation = saturation
        self.connected = connected
        self.disjoint = disjoint
        self.faber_krahn = faber_krahn
        self.subsolution = subsolution
        self.eigen_residual = eigen_residual

    @property
    def saturation_ok(self):
        return self.saturation.passed

    @property
    def connected_ok(self):
        return self.connected.passed

    @property
    def disjoint_ok(self):
        return self.disjoint.passed

    @property
    def faber_krahn_ok(self):
        return self.faber_krahn.passed

    @property
    def subsolution_ok(self):
        return self.subsolution.passed

    @property
    def eigen_residual_ok(self):
        return self.eigen_residual.passed

    @property
    def all_ok(self):
        return all(getattr(self, name).passed for name in self.CHECKS)

    def failed(self):
        return [name for name in self.CHECKS if not getattr(self, name).passed]

    def as_dict(self):
        report = OrderedDict()
        for name in self.CHECKS:
            check = getattr(self, name)
            report[name + "_ok"] = bool(check.passed)
            report[name + "_margin"] = float(check.margin)
            report[name + "_threshold"] = float(check.threshold)
        return report


def _summarize(grid, supports, fields, eigenresults, a):
    components, measures, quotients = [], [], []
    for support, u in zip(supports, fields):
        components.append(label_components(support)[1])
        measures.append(np.count_nonzero(support) * grid.cell_volume)
        quotients.append(rayleigh_quotient(grid, np.where(support, u, 0.0)))
    lambdas = tuple(float(e.lambda_) for e in eigenresults)
    objective = float(np.sum(lambdas))
    return PartitionResult(
        supports=np.array(supports),
        components_per_phase=tuple(components),
        measures=tuple(measures),
        lambdas=lambdas,
        quotients=tuple(quotients),
        eigenfunctions=np.array([e.eigenfunction for e in eigenresults]),
        objective=objective,
        rayleigh_gap=float(np.sum(quotients)) - objective,
        saturation_gap=abs(float(np.sum(measures)) - a),
    )


def extract_partition(grid, U, eps_rel=DEFAULT_EPS_REL, tol=DEFAULT_TOL):
    """ Thresholded supports of a segregated phase vector, with one
    eigensolve per support.

    Parameters
    ----------
    grid : DomainGrid
    U : PhaseVector
        Hard-segregated phases.
    eps_rel : float
        Relative support threshold.
    tol : float
        Relative eigen-residual of the per-support solves.

    Returns
    -------
    result : PartitionResult
        ``quotients`` are Rayleigh quotients of the phases restricted to
        their supports, so ``lambdas[i] <= quotients[i]`` up to ``tol``.
    """
    if not U.is_segregated():
        raise ValueError("Partition extraction needs hard-segregated phases.")
    supports = []
    for i, u in enumerate(U.fields):
        support = support_cells(u, eps_rel) & grid.mask
        if not support.any():
            raise PhaseCollapseError("Phase {} has an empty support.".format(i), phase=i)
        supports.append(support)

    eigenresults = [smallest_dirichlet_eig(grid, s, tol=tol) for s in supports]
    result = _summarize(grid, supports, U.fields, eigenresults, U.a)
    logger.info("Extracted partition: objective {:.6g}, measures {}, components {}".format(
        result.objective, ["{:.4g}".format(m) for m in result.measures],
        list(result.components_per_phase)))
    return result


def phases_from_partition(grid, supports, a, tol=DEFAULT_TOL):
    """ Unit-norm first eigenfunctions of disjoint cell sets, as a PhaseVector. """
    supports = np.asarray(supports, dtype=bool)
    if np.any(np.count_nonzero(supports, axis=0) > 1):
        raise ValueError("Partition cells must be pairwise disjoint.")
    fields = []
    for i, support in enumerate(supports):
        if not support.any():
            raise PhaseCollapseError("Partition cell {} is empty.".format(i), phase=i)
        fields.append(smallest_dirichlet_eig(grid, support, tol=tol).eigenfunction)
    return PhaseVector(grid, np.array(fields), a)


def principal_components(grid, U, result):
    """ Keep, in every phase, only the component carrying its first eigenvalue.

    The eigenvalue sum is unchanged and no measure grows.

    Returns
    -------
    U : PhaseVector
        Phases restricted to their principal components, renormalized.
    result : PartitionResult
    """
    supports, fields = [], []
    for support, u, v in zip(result.supports, U.fields, result.eigenfunctions):
        labels, _ = label_components(support)
        principal = labels == labels[np.unravel_index(np.argmax(v), v.shape)]
        restricted = np.where(principal, u, 0.0)
        supports.append(principal)
        fields.append(restricted / np.sqrt(inner(grid, restricted, restricted)))

    eigenresults = [_EigenView(lam, v) for lam, v in zip(result.lambdas, result.eigenfunctions)]
    kept = U.with_fields(np.array(fields))
    return kept, _summarize(grid, supports, kept.fields, eigenresults, U.a)


def _interior_cells(support):
    structure = ndimage.generate_binary_structure(support.ndim, 1)
    return ndimage.binary_erosion(support, structure=structure, border_value=0)


def audit_partition(grid, result, U, a, tol=SUBSOLUTION_TOL, residual_tol=EIGEN_RESIDUAL_TOL):
    """ Check an extracted partition against the properties of optimal ones.

    - saturation: ``|sum(measures) - a| <= 2% a``
    - connected: one component per phase
    - disjoint: no cell shared by two supports or two positive phases
    - faber_krahn: objective at least 95% of the ball bound of the measures,
      each ball widened by half a cell
    - subsolution: ``h^N (lambda_i u_i - (-Delta_h u_i))``, the pairing with
      the indicator of each cell, is at least ``-tol * max(lambda)``
    - eigen_residual: ``||-Delta_h u_i - lambda_i u_i||`` over the interior
      cells of each support is at most ``residual_tol * lambda_i``

    The last two test the phases ``u_i`` of ``U`` (scaled to unit norm)
    against the extracted eigenvalues. Nothing is raised; failures are
    reported as warnings.

    Returns
    -------
    report : AuditReport
    """
    saturation_gap = abs(float(np.sum(result.measures)) - a)
    saturation_threshold = SATURATION_SLACK * a
    saturation = AuditCheck(saturation_gap <= saturation_threshold,
                            saturation_threshold - saturation_gap, saturation_threshold)

    extra = max(result.components_per_phase) - 1
    connected = AuditCheck(extra == 0, -float(extra), 0.0)

    shared = np.count_nonzero(np.count_nonzero(result.supports, axis=0) > 1)
    shared += np.count_nonzero(np.count_nonzero(U.fields > 0, axis=0) > 1)
    disjoint = AuditCheck(shared == 0, -float(shared), 0.0)

    bound = faber_krahn_bound(grid.ndim, result.measures, grid.spacing)
    fk_margin = result.objective / bound - (1.0 - FABER_KRAHN_SLACK)
    faber_krahn = AuditCheck(fk_margin >= 0, fk_margin, 1.0 - FABER_KRAHN_SLACK)

    lam_max = max(result.lambdas)
    worst_test = np.inf
    worst_ratio = 0.0
    for lam, u, support in zip(result.lambdas, U.fields, result.supports):
        u = u / np.sqrt(inner(grid, u, u))
        defect = lam * u - laplacian_apply(grid, u)
        worst_test = min(worst_test, grid.cell_volume * defect[grid.mask].min())
        interior = _interior_cells(support)
        residual = np.sqrt(inner(grid, np.where(interior, defect, 0.0),
                                 np.where(interior, defect, 0.0)))
        worst_ratio = max(worst_ratio, residual / lam)
    subsolution_margin = worst_test + tol * lam_max
    subsolution = AuditCheck(subsolution_margin >= 0, subsolution_margin, -tol * lam_max)
    eigen_residual = AuditCheck(worst_ratio <= residual_tol, residual_tol - worst_ratio,
                                residual_tol)

    report = AuditReport(saturation, connected, disjoint, faber_krahn, subsolution,
                         eigen_residual)
    if not report.all_ok:
        warn("Partition audit failed: {}.".format(", ".join(report.failed())))
    return report


def _ball_weight(grid, distances):
    if grid.ndim == 2:
        return np.ones_like(distances)
    with np.errstate(divide="ignore"):
        weight = 1.0 / distances
    weight[distances == 0] = UNIT_CUBE_INVERSE_DISTANCE / grid.spacing
    return weight


def cjk_diagnostic(grid, U, center, radii):
    """ Monotonicity functional of every pair of phases on balls around a cell.

    psi(r) = (r^-2 int_{B_r} |grad u_i|^2 |x - x0|^(2-N))
             * (r^-2 int_{B_r} |grad u_j|^2 |x - x0|^(2-N))

    The singular weight at the centre cell is replaced by its cell average.

    Parameters
    ----------
    grid : DomainGrid
    U : PhaseVector
    center : tuple of int
        Index of the centre cell.
    radii : sequence of float
        Ball radii, each at least ``2h`` and inside the box.

    Returns
    -------
    psi : OrderedDict
        ``(i, j) -> numpy.ndarray`` of psi values, one per radius.
    """
    center = np.asarray(center, dtype=np.int64)
    if center.shape != (grid.ndim,):
        raise ValueError("Centre must have {} indices.".format(grid.ndim))
    position = (center + 0.5) * grid.spacing
    lengths = np.array(grid.lengths)
    for r in radii:
        if r < 2 * grid.spacing:
            raise ValueError("Radius {} is below two cells ({}).".format(r, 2 * grid.spacing))
        if np.any(position - r < 0) or np.any(position + r > lengths):
            raise ValueError("Ball of radius {} around {} leaves the grid.".format(
                r, tuple(center)))

    offsets = np.indices(grid.dims) - center.reshape((-1,) + (1,) * grid.ndim)
    distances = grid.spacing * np.sqrt(np.sum(offsets ** 2, axis=0))
    weighted = [gradient_density(grid, u) * _ball_weight(grid, distances) for u in U.fields]

    energies = np.array([[grid.cell_volume * np.sum(w[distances <= r]) / r ** 2
                          for r in radii] for w in weighted])
    psi = OrderedDict()
    for i in range(U.k):
        for j in range(i + 1, U.k):
            psi[(i, j)] = energies[i] * energies[j]
    return psi


def _reflections(grid):
    reflections = OrderedDict()
    for axis in range(grid.ndim):
        reflections["axis{}".format(axis)] = lambda u, axis=axis: np.flip(u, axis=axis)
    if grid.ndim == 2 and grid.dims[0] == grid.dims[1]:
        reflections["diagonal"] = lambda u: u.T
        reflections["antidiagonal"] = lambda u: np.flip(np.flip(u, 0), 1).T
    return OrderedDict((name, reflect) for name, reflect in reflections.items()
                       if np.array_equal(reflect(grid.mask), grid.mask))


def axial_symmetry_defect(grid, U):
    """ Relative L2 distance between the phases and their mirror images.

    For every reflection of the box that maps the mask onto itself, each
    phase is compared with the closest reflected phase (reflections may
    swap phases) and the relative defects are summed.

    Returns
    -------
    defects : OrderedDict
        ``{"defects": {name: value}, "best_axis": name, "best_defect": value}``;
        empty values when no reflection preserves the mask.
    """
    defects = OrderedDict()
    norms = U.norms()
    for name, reflect in _reflections(grid).items():
        mirrored = [reflect(u) for u in U.fields]
        total = 0.0
        for u, norm in zip(U.fields, norms):
            total += min(np.sqrt(inner(grid, u - m, u - m)) for m in mirrored) / norm
        defects[name] = float(total)
    if not defects:
        return OrderedDict([("defects", defects), ("best_axis", None), ("best_defect", None)])
    best = min(defects, key=defects.get)
    return OrderedDict([("defects", defects), ("best_axis", best), ("best_defect", defects[best])])
