from collections import namedtuple
from functools import reduce
from warnings import warn
import logging
import os

import numpy as np
from scipy import ndimage
from scipy import sparse

from specpart.exceptions import DomainError

logger = logging.getLogger(__name__)

MIN_RESOLUTION = 8

SHAPE_KINDS = ["square", "rectangle", "cube", "disk", "ball", "mask"]

DomainSpec = namedtuple("DomainSpec", ["kind", "params", "path"])


class DomainGrid(object):
    """ Uniform cell-centred discretization of a box with an interior mask.

    Cell ``(i_1, ..., i_N)`` has its centre at ``origin + (i + 1/2) h``.
    Cells outside the mask carry the value zero in every operator; the
    faces of the enclosing box are zero-Dirichlet walls (ghost value
    ``-u`` beyond the wall).

    Parameters
    ----------
    mask : array_like of bool
        Interior indicator, one entry per cell. Two or three axes.
    spacing : float
        Grid step ``h``, in length units.
    origin : sequence of float, optional
        Coordinates of the lower corner of the box. Defaults to zero.
    descriptor : str, optional
        The shape descriptor this grid was built from, echoed in manifests.
    """

    def __init__(self, mask, spacing, origin=None, descriptor=None):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim not in (2, 3):
            message = "Only two- and three-dimensional grids are supported," \
                      " got a mask with {} axes.".format(mask.ndim)
            raise DomainError(message)
        if not spacing > 0:
            message = "Grid spacing must be positive, got {}.".format(spacing)
            raise DomainError(message)
        if not mask.any():
            message = "The mask has no interior cell; refine the resolution" \
                      " or enlarge the shape."
            raise DomainError(message)

        self.mask = mask
        self.spacing = float(spacing)
        if origin is None:
            origin = (0.0,) * mask.ndim
        self.origin = tuple(float(o) for o in origin)
        self.descriptor = descriptor

        self._interior_index = np.full(mask.shape, -1, dtype=np.int64)
        self._interior_index[mask] = np.arange(int(mask.sum()))
        self._laplacian = None

    def __repr__(self):
        return "DomainGrid(dims={}, spacing={!r}, interior={})".format(
            self.dims, self.spacing, self.n_interior)

    @property
    def dims(self):
        return self.mask.shape

    @property
    def ndim(self):
        return self.mask.ndim

    @property
    def cell_volume(self):
        return self.spacing ** self.ndim

    @property
    def n_interior(self):
        return int(self.mask.sum())

    @property
    def measure(self):
        """ Lebesgue measure of the discrete domain (interior cell count times h^N). """
        return self.n_interior * self.cell_volume

    @property
    def lengths(self):
        return tuple(n * self.spacing for n in self.dims)

    def cell_centers(self):
        """ Coordinates of every cell centre, one array per axis ("ij" indexing). """
        axes = [o + (np.arange(n) + 0.5) * self.spacing
                for o, n in zip(self.origin, self.dims)]
        return np.meshgrid(*axes, indexing="ij")

    def check_field(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != self.dims:
            message = "Field of shape {} does not match grid dims {}." \
                      .format(u.shape, self.dims)
            raise ValueError(message)
        return u

    @property
    def laplacian_matrix(self):
        """ Sparse -Delta_h on the interior cells, in interior (row-major) order. """
        if self._laplacian is None:
            box = box_laplacian(self.dims, self.spacing)
            idx = np.flatnonzero(self.mask.ravel())
            if idx.size == box.shape[0]:
                self._laplacian = box
            else:
                self._laplacian = box[idx][:, idx].tocsr()
        return self._laplacian

    def restricted_matrix(self, subset):
        """ -Delta_h restricted to ``subset`` (zero Dirichlet on its complement). """
        subset = np.asarray(subset, dtype=bool)
        rows = self._interior_index[subset & self.mask]
        return self.laplacian_matrix[rows][:, rows].tocsr()

    def to_interior(self, u):
        return self.check_field(u)[self.mask]

    def from_interior(self, values):
        u = np.zeros(self.dims)
        u[self.mask] = values
        return u


def _wall_laplacian_1d(n):
    # ghost = -u beyond each wall adds one to the end diagonals
    diag = np.full(n, 2.0)
    diag[0] += 1.0
    diag[-1] += 1.0
    off = -np.ones(n - 1)
    return sparse.diags([off, diag, off], [-1, 0, 1], shape=(n, n), format="csr")


def box_laplacian(dims, spacing):
    """ (2N+1)-point negative Laplacian of a full box as a Kronecker sum.

    Parameters
    ----------
    dims : tuple of int
        Cell counts per axis.
    spacing : float
        Grid step ``h``.

    Returns
    -------
    A : scipy.sparse.csr_matrix
        ``prod(dims)`` square matrix acting on row-major flattened fields.
    """
    total = None
    for axis, n in enumerate(dims):
        factors = [sparse.identity(m, format="csr") for m in dims]
        factors[axis] = _wall_laplacian_1d(n)
        term = reduce(lambda left, right: sparse.kron(left, right, format="csr"), factors)
        total = term if total is None else total + term
    return (total / spacing ** 2).tocsr()


def laplacian_apply(grid, u):
    """ Apply -Delta_h with zero exterior to a field; the result vanishes off the mask. """
    values = grid.laplacian_matrix.dot(grid.to_interior(u))
    return grid.from_interior(values)


def dirichlet_energy(grid, u):
    """ Discrete Dirichlet integral of ``u``.

    Sum over cell faces of the squared difference, times h^(N-2). Faces
    on the box walls contribute ``2 u^2``. Equals ``h^N <-Delta_h u, u>``.
    """
    v = np.where(grid.mask, grid.check_field(u), 0.0)
    total = 0.0
    for axis in range(grid.ndim):
        d = np.diff(v, axis=axis)
        first = np.take(v, 0, axis=axis)
        last = np.take(v, -1, axis=axis)
        total += np.sum(d * d) + 2.0 * (np.sum(first * first) + np.sum(last * last))
    return total * grid.spacing ** (grid.ndim - 2)


def inner(grid, u, v):
    """ Midpoint-rule L2 inner product. """
    return grid.cell_volume * np.sum(grid.check_field(u) * grid.check_field(v) * grid.mask)


def l2_norm(grid, u):
    return np.sqrt(inner(grid, u, u))


def gradient_density(grid, u):
    """ Cell-wise |grad u|^2, averaging the squared forward and backward
    differences on each axis. Exterior cells and the box walls count as zero.
    """
    v = np.where(grid.mask, grid.check_field(u), 0.0)
    density = np.zeros(grid.dims)
    for axis, n in enumerate(grid.dims):
        pad = [(1, 1) if ax == axis else (0, 0) for ax in range(grid.ndim)]
        d = np.diff(np.pad(v, pad), axis=axis)
        backward = np.take(d, np.arange(n), axis=axis)
        forward = np.take(d, np.arange(1, n + 1), axis=axis)
        density += 0.5 * (backward ** 2 + forward ** 2)
    return np.where(grid.mask, density / grid.spacing ** 2, 0.0)


def label_components(cells):
    """ Face-connected (2N-neighbour) components of a boolean cell set.

    Returns
    -------
    labels : numpy.ndarray of int
        Zero outside ``cells``, component ids ``1..n`` inside.
    n : int
        Number of components.
    """
    cells = np.asarray(cells, dtype=bool)
    structure = ndimage.generate_binary_structure(cells.ndim, 1)
    labels, n = ndimage.label(cells, structure=structure)
    return labels, int(n)


def parse_domain(text):
    """ Parse a shape descriptor.

    Accepted forms: ``square L``, ``rectangle L1 L2 [L3]``, ``cube L``,
    ``disk r``, ``disk r cx cy Lx Ly``, ``ball r`` and ``mask PATH``.

    Returns
    -------
    spec : DomainSpec
    """
    tokens = text.split()
    if not tokens:
        raise DomainError("Empty domain descriptor.")
    kind = tokens[0].lower()
    if kind not in SHAPE_KINDS:
        message = "Unknown domain kind '{}'; expected one of {}.".format(kind, SHAPE_KINDS)
        raise DomainError(message)

    if kind == "mask":
        if len(tokens) != 2:
            raise DomainError("Domain 'mask' takes exactly one path, got '{}'.".format(text))
        return DomainSpec(kind, (), tokens[1])

    try:
        params = tuple(float(t) for t in tokens[1:])
    except ValueError:
        raise DomainError("Non-numeric parameter in domain descriptor '{}'.".format(text))

    expected = {
        "square": (1,),
        "rectangle": (2, 3),
        "cube": (1,),
        "disk": (1, 5),
        "ball": (1,),
    }[kind]
    if len(params) not in expected:
        message = "Domain '{}' takes {} parameters, got {}.".format(
            kind, " or ".join(str(e) for e in expected), len(params))
        raise DomainError(message)
    if kind == "disk" and len(params) == 5:
        positive = (params[0], params[3], params[4])
    else:
        positive = params
    if any(p <= 0 for p in positive):
        raise DomainError("Dimensions and radii must be positive in '{}'.".format(text))
    return DomainSpec(kind, params, None)


def _shape_box(spec):
    """ (lengths, origin, predicate) for analytic shapes; predicate maps centres to bool. """
    p = spec.params
    if spec.kind == "square":
        return (p[0], p[0]), (0.0, 0.0), None
    if spec.kind == "cube":
        return (p[0],) * 3, (0.0,) * 3, None
    if spec.kind == "rectangle":
        return tuple(p), (0.0,) * len(p), None
    if spec.kind == "disk":
        r = p[0]
        if len(p) == 5:
            center, lengths, origin = (p[1], p[2]), (p[3], p[4]), (0.0, 0.0)
        else:
            center, lengths, origin = (0.0, 0.0), (2 * r, 2 * r), (-r, -r)

        def inside(x, y):
            return (x - center[0]) ** 2 + (y - center[1]) ** 2 <= r ** 2
        return lengths, origin, inside
    if spec.kind == "ball":
        r = p[0]

        def inside(x, y, z):
            return x ** 2 + y ** 2 + z ** 2 <= r ** 2
        return (2 * r,) * 3, (-r,) * 3, inside
    raise DomainError("Domain kind '{}' has no analytic box.".format(spec.kind))


def domain_measure(spec):
    """ Measure |Omega| of the continuous shape (mask files: cell count times h^N). """
    if spec.kind == "mask":
        from specpart.importers import read_mask_file
        mask, h = read_mask_file(spec.path)
        return mask.sum() * h ** mask.ndim
    p = spec.params
    if spec.kind == "square":
        return p[0] ** 2
    if spec.kind == "cube":
        return p[0] ** 3
    if spec.kind == "rectangle":
        return float(np.prod(p))
    if spec.kind == "disk":
        return np.pi * p[0] ** 2
    return 4.0 / 3.0 * np.pi * p[0] ** 3


def describe_domain(spec):
    if spec.kind == "mask":
        return "mask {}".format(spec.path)
    return " ".join([spec.kind] + ["{:g}".format(v) for v in spec.params])


def build_domain(spec, resolution):
    """ Discretize a shape on a uniform grid.

    Parameters
    ----------
    spec : DomainSpec or str
        Shape descriptor (see ``parse_domain``).
    resolution : int
        Cells per unit length, at least 8. Mask files carry their own
        spacing, which takes precedence.

    Returns
    -------
    grid : DomainGrid
    """
    if isinstance(spec, str):
        spec = parse_domain(spec)
    if resolution < MIN_RESOLUTION:
        message = "Resolution must be at least {}, got {}.".format(MIN_RESOLUTION, resolution)
        raise DomainError(message)

    if spec.kind == "mask":
        from specpart.importers import read_mask_file
        mask, spacing = read_mask_file(spec.path)
        if abs(spacing * resolution - 1.0) > 1e-9:
            logger.debug("Mask file {} uses h = {}; resolution {} ignored.".format(
                os.path.basename(spec.path), spacing, resolution))
        origin = None
    else:
        lengths, origin, inside = _shape_box(spec)
        spacing = 1.0 / resolution
        dims = tuple(int(round(length * resolution)) for length in lengths)
        if min(dims) < 1:
            message = "Resolution {} is too coarse for domain '{}'.".format(
                resolution, describe_domain(spec))
            raise DomainError(message)
        mask = np.ones(dims, dtype=bool)
        if inside is not None:
            axes = [o + (np.arange(n) + 0.5) * spacing for o, n in zip(origin, dims)]
            mask = inside(*np.meshgrid(*axes, indexing="ij"))

    if not mask.any():
        message = "Domain '{}' has no interior cell at resolution {}.".format(
            describe_domain(spec), resolution)
        raise DomainError(message)

    grid = DomainGrid(mask, spacing, origin=origin, descriptor=describe_domain(spec))

    _, n_components = label_components(mask)
    if n_components > 1:
        warn("Domain '{}' is disconnected ({} components); continuing."
             .format(grid.descriptor, n_components))

    logger.info("Built {} for '{}' (|Omega| = {:.6g}).".format(
        grid, grid.descriptor, grid.measure))
    return grid
