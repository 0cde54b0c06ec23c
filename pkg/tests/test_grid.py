from specpart.grid import (
    DomainGrid,
    box_laplacian,
    build_domain,
    dirichlet_energy,
    domain_measure,
    gradient_density,
    inner,
    label_components,
    laplacian_apply,
    parse_domain,
)
from specpart.exceptions import DomainError
from specpart.regression import convergence_order
from specpart.util.testing import get_data_path

import numpy as np
from numpy.testing import assert_allclose

import pytest

from .fixtures.grids import unit_square_16
from .fixtures.grids import unit_square_32
from .fixtures.grids import unit_square_64
from .fixtures.grids import unit_disk_128
from .fixtures.grids import unit_cube_16
from .fixtures.grids import l_shape_grid

RTOL = 1e-10
ATOL = 1e-12


def sine_mode(grid):
    centers = grid.cell_centers()
    return np.prod([np.sin(np.pi * x / length) for x, length in zip(centers, grid.lengths)],
                   axis=0)


def discrete_sine_eigenvalue(grid):
    h = grid.spacing
    return sum((2.0 - 2.0 * np.cos(np.pi * h / length)) / h ** 2 for length in grid.lengths)


def test_build_unit_square(unit_square_64):
    assert unit_square_64.dims == (64, 64)
    assert unit_square_64.n_interior == 64 * 64
    assert unit_square_64.spacing == 1.0 / 64
    assert_allclose(unit_square_64.measure, 1.0, rtol=RTOL)
    assert unit_square_64.descriptor == "square 1"


def test_build_rectangle_and_cube(unit_cube_16):
    grid = build_domain("rectangle 2 1", 16)
    assert grid.dims == (32, 16)
    assert_allclose(grid.lengths, (2.0, 1.0))
    assert unit_cube_16.dims == (16, 16, 16)
    assert unit_cube_16.ndim == 3


def test_build_disk_area():
    grid = build_domain("disk 0.5 0.5 0.5 1 1", 64)
    assert abs(grid.measure - np.pi / 4) <= 2 * grid.spacing


def test_build_centered_disk_origin(unit_disk_128):
    assert unit_disk_128.dims == (256, 256)
    assert unit_disk_128.origin == (-1.0, -1.0)
    assert abs(unit_disk_128.measure - np.pi) <= 2 * unit_disk_128.spacing


def test_build_domain_resolution_too_low():
    with pytest.raises(DomainError):
        build_domain("square 1", 4)


def test_build_domain_no_interior():
    # the only cell centre lies outside a disk this small
    with pytest.raises(DomainError):
        build_domain("disk 0.01 0.5 0.5 1 1", 8)


def test_mask_file_without_interior_raises():
    with pytest.raises(DomainError):
        build_domain("mask {}".format(get_data_path("data/empty_mask.txt")), 8)


def test_mask_file_grid(l_shape_grid):
    assert l_shape_grid.dims == (16, 16)
    assert l_shape_grid.spacing == 0.0625
    assert l_shape_grid.n_interior == 16 * 8 + 8 * 8
    assert_allclose(domain_measure(parse_domain("mask {}".format(
        get_data_path("data/l_shape_mask.txt")))), l_shape_grid.measure)


def test_disconnected_mask_warns():
    with pytest.warns(UserWarning, match="disconnected"):
        grid = build_domain("mask {}".format(get_data_path("data/two_blocks_mask.txt")), 12)
    assert grid.n_interior == 50


@pytest.mark.parametrize("text", [
    "hexagon 1",
    "square -1",
    "square",
    "rectangle 1",
    "disk 1 0.5",
    "cube one",
    "mask",
    "",
])
def test_parse_domain_rejects(text):
    with pytest.raises(DomainError):
        parse_domain(text)


def test_parse_domain_mask_path():
    spec = parse_domain("mask shapes/l.txt")
    assert spec.kind == "mask"
    assert spec.path == "shapes/l.txt"


@pytest.mark.parametrize("text, measure", [
    ("square 2", 4.0),
    ("rectangle 1 0.5", 0.5),
    ("rectangle 1 0.5 2", 1.0),
    ("cube 0.5", 0.125),
    ("disk 1", np.pi),
    ("ball 1", 4.0 * np.pi / 3.0),
])
def test_domain_measure(text, measure):
    assert_allclose(domain_measure(parse_domain(text)), measure, rtol=RTOL)


def test_domain_grid_rejects_bad_input():
    with pytest.raises(DomainError):
        DomainGrid(np.ones(8, dtype=bool), 0.125)
    with pytest.raises(DomainError):
        DomainGrid(np.ones((8, 8), dtype=bool), 0.0)
    with pytest.raises(DomainError):
        DomainGrid(np.zeros((8, 8), dtype=bool), 0.125)


def test_check_field_shape(unit_square_16):
    with pytest.raises(ValueError):
        unit_square_16.check_field(np.zeros((16, 15)))


def test_laplacian_of_zero_field(unit_disk_128):
    lap = laplacian_apply(unit_disk_128, np.zeros(unit_disk_128.dims))
    assert np.all(lap == 0)


def test_box_laplacian_shape_and_symmetry():
    A = box_laplacian((5, 4), 0.25)
    assert A.shape == (20, 20)
    assert abs(A - A.T).max() == 0
    # corner cell: two walls, two neighbours
    assert_allclose(A[0, 0], 6.0 / 0.25 ** 2)


@pytest.mark.parametrize("resolution", [16, 32, 64])
def test_laplacian_sine_mode_is_exact_eigenvector(resolution):
    grid = build_domain("square 1", resolution)
    u = sine_mode(grid)
    assert_allclose(laplacian_apply(grid, u), discrete_sine_eigenvalue(grid) * u,
                    rtol=1e-9, atol=1e-9)


def test_laplacian_sine_mode_second_order():
    steps, errors = [], []
    for resolution in [16, 32, 64]:
        grid = build_domain("square 1", resolution)
        steps.append(grid.spacing)
        errors.append(abs(discrete_sine_eigenvalue(grid) - 2 * np.pi ** 2))
        # leading error term pi^4 h^2 / 6 for the two axes
        assert errors[-1] <= 1.05 * np.pi ** 4 * grid.spacing ** 2 / 6
    assert convergence_order(steps, errors) >= 1.95


def test_laplacian_is_symmetric(unit_disk_128):
    rng = np.random.default_rng(3)
    u = rng.standard_normal(unit_disk_128.dims) * unit_disk_128.mask
    v = rng.standard_normal(unit_disk_128.dims) * unit_disk_128.mask
    assert_allclose(inner(unit_disk_128, laplacian_apply(unit_disk_128, u), v),
                    inner(unit_disk_128, u, laplacian_apply(unit_disk_128, v)), rtol=RTOL)


def test_laplacian_vanishes_outside_mask(unit_disk_128):
    rng = np.random.default_rng(4)
    u = rng.standard_normal(unit_disk_128.dims)
    assert np.all(laplacian_apply(unit_disk_128, u)[~unit_disk_128.mask] == 0)


def test_dirichlet_energy_zero_and_scaling(unit_disk_128):
    assert dirichlet_energy(unit_disk_128, np.zeros(unit_disk_128.dims)) == 0
    u = sine_mode(unit_disk_128) * unit_disk_128.mask
    assert_allclose(dirichlet_energy(unit_disk_128, 3.0 * u),
                    9.0 * dirichlet_energy(unit_disk_128, u), rtol=1e-12)


@pytest.mark.parametrize("grid_name", ["unit_square_32", "unit_disk_128", "unit_cube_16",
                                       "l_shape_grid"])
def test_dirichlet_energy_matches_operator(grid_name, request):
    grid = request.getfixturevalue(grid_name)
    rng = np.random.default_rng(5)
    u = rng.standard_normal(grid.dims) * grid.mask
    assert_allclose(dirichlet_energy(grid, u), inner(grid, laplacian_apply(grid, u), u),
                    rtol=RTOL)


def test_dirichlet_energy_ignores_exterior_values(unit_disk_128):
    rng = np.random.default_rng(6)
    u = rng.standard_normal(unit_disk_128.dims)
    assert_allclose(dirichlet_energy(unit_disk_128, u),
                    dirichlet_energy(unit_disk_128, u * unit_disk_128.mask), rtol=1e-14)


def test_gradient_density_sums_to_energy(unit_square_32):
    # away from the walls every face is counted half from each side
    u = np.zeros(unit_square_32.dims)
    u[4:28, 4:28] = np.random.default_rng(7).uniform(size=(24, 24))
    total = unit_square_32.cell_volume * np.sum(gradient_density(unit_square_32, u))
    assert_allclose(total, dirichlet_energy(unit_square_32, u), rtol=1e-12)


def test_gradient_density_of_constant_interior(unit_square_16):
    u = np.zeros(unit_square_16.dims)
    u[4:12, 4:12] = 1.0
    density = gradient_density(unit_square_16, u)
    assert np.all(density[6:10, 6:10] == 0)
    assert np.all(density >= 0)


def test_label_components_face_connectivity():
    cells = np.zeros((6, 6), dtype=bool)
    cells[0:2, 0:2] = True
    cells[2, 2] = True  # diagonal contact only
    cells[4:, 4:] = True
    labels, n = label_components(cells)
    assert n == 3
    assert np.all(labels[~cells] == 0)
    assert len(np.unique(labels[cells])) == 3


def test_to_and_from_interior(l_shape_grid):
    values = np.arange(l_shape_grid.n_interior, dtype=float)
    u = l_shape_grid.from_interior(values)
    assert np.all(u[~l_shape_grid.mask] == 0)
    assert_allclose(l_shape_grid.to_interior(u), values, atol=ATOL)
