import random

import numpy as np
import pytest

from octoroot.basin import (
    BACKEND,
    NONE,
    BasinGrid,
    GridSpec,
    PaletteError,
    backend_module,
    classify_point,
    colorize,
    metrics,
    render,
)
from octoroot.expr import Problem, builtin
from octoroot.methods import ALL_METHODS, DEFAULT_PARAMS, MethodId

SMALL = GridSpec(width=41, height=41)


def compiled_available():
    try:
        backend_module("compiled")
    except ImportError:
        return False
    return True


# -- grid geometry ---------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(re_min=1, re_max=1),
        dict(im_min=2, im_max=-2),
        dict(width=0),
        dict(height=-1),
        dict(max_iter=0),
        dict(escape_tol=0),
        dict(sampling="random"),
    ],
)
def test_grid_spec_validation(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_default_grid_protocol():
    g = GridSpec()
    assert (g.re_min, g.re_max, g.im_min, g.im_max) == (-3, 3, -3, 3)
    assert (g.width, g.height, g.max_iter, g.escape_tol) == (600, 600, 15, 1e-3)


@pytest.mark.parametrize("sampling", ["edge", "center"])
@pytest.mark.parametrize("n", [1, 2, 7, 600, 601])
def test_axes_are_mirror_symmetric(sampling, n):
    g = GridSpec(width=n, height=n, sampling=sampling)
    re, im = g.real_axis(), g.imag_axis()
    assert np.array_equal(re, -re[::-1])
    assert np.array_equal(im, -re)


def test_edge_sampling_hits_the_corners():
    g = GridSpec(width=5, height=3)
    assert g.real_axis().tolist() == [-3, -1.5, 0, 1.5, 3]
    assert g.imag_axis().tolist() == [3, 0, -3]
    assert g.point(0, 0) == complex(-3, 3)
    assert g.point(2, 4) == complex(3, -3)


def test_center_sampling_uses_pixel_centers():
    g = GridSpec(width=6, height=6, sampling="center")
    assert g.real_axis().tolist() == [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]


# -- single points -----------------------------------------------------------------


def test_start_on_root_needs_zero_iterations():
    assert classify_point(MethodId.M1, None, builtin("p1"), 1) == (0, 0)


def test_nearby_start_converges_in_one_or_two_steps():
    idx, n = classify_point(MethodId.M1, None, builtin("p1"), 1.4)
    assert idx == 0 and 1 <= n <= 2


def test_start_within_half_tolerance_of_a_root():
    p = builtin("p5")
    for k, r in enumerate(p.root_values()):
        z = complex(r) + 0.5e-3 * np.exp(1j * k)
        assert classify_point(MethodId.M3, None, p, z) == (k, 0)


def test_singular_start_is_nonconvergent_with_max_iterations():
    # f'(0) = 0 for x^2 - 1
    spec = GridSpec(max_iter=9)
    assert classify_point(MethodId.M1, None, builtin("p1"), 0, spec) == (None, 9)


def test_one_by_one_grid_at_origin():
    eps = 1e-9
    spec = GridSpec(-eps, eps, -eps, eps, width=1, height=1)
    assert spec.point(0, 0) == 0
    grid = render(MethodId.M4, None, builtin("p2"), spec)
    # the origin is the first root of x^3 - x
    assert grid.cell(0, 0) == (0, 0)
    m = metrics(grid)
    assert (m.ipp, m.nc_percent, m.icc) == (0, 0, 0)


def test_classification_is_independent_of_visit_order():
    p = builtin("p3")
    spec = GridSpec(width=9, height=9)
    grid = render(MethodId.M2, None, p, spec, backend="generic")
    cells = [(r, c) for r in range(9) for c in range(9)]
    random.Random(4).shuffle(cells)
    for r, c in cells:
        assert classify_point(MethodId.M2, None, p, spec.point(r, c), spec) == grid.cell(r, c)


# -- metrics -------------------------------------------------------------------


def _synthetic(idx, its, max_iter=15):
    idx = np.asarray(idx, dtype=np.int16)
    spec = GridSpec(width=idx.shape[1], height=idx.shape[0], max_iter=max_iter)
    return BasinGrid(spec, idx, np.asarray(its, dtype=np.int16), (1, -1), MethodId.M1, "x^2-1")


def test_metrics_all_three_iterations():
    m = metrics(_synthetic(np.zeros((4, 4)), np.full((4, 4), 3)))
    assert (m.ipp, m.nc_percent, m.icc) == (3, 0, 3)


def test_metrics_with_nonconvergent_cells():
    m = metrics(_synthetic([[0, NONE], [1, NONE]], [[2, 15], [4, 15]]))
    assert m.ipp == 36 / 4
    assert m.nc_percent == 50
    assert m.icc == 3


def test_metrics_all_nonconvergent():
    m = metrics(_synthetic(np.full((2, 2), NONE), np.full((2, 2), 15)))
    assert (m.ipp, m.nc_percent, m.icc) == (15, 100, 0)


def test_grid_shape_is_checked():
    with pytest.raises(ValueError):
        _synthetic(np.zeros((2, 2)), np.zeros((2, 3)))


@pytest.mark.parametrize("name", ["p1", "p3", "p6"])
def test_metric_identity(name):
    grid = render(MethodId.M6, None, builtin(name), SMALL)
    m = metrics(grid)
    M = grid.spec.max_iter
    # exact integer form of ipp * total = icc * convergent + M * nonconvergent
    assert m.iteration_sum == m.convergent_iteration_sum + M * m.nonconvergent
    assert m.nonconvergent == grid.nonconvergent
    assert m.total == sum(1 for _ in grid.cells)


def test_iterations_of_nonconvergent_cells_are_max_iter():
    grid = render(MethodId.M5, None, builtin("p4"), SMALL)
    nc = grid.root_index == NONE
    assert np.all(grid.iterations[nc] == SMALL.max_iter)
    assert np.all(grid.iterations[~nc] <= SMALL.max_iter)


# -- symmetry and backend agreement ----------------------------------------------------


def _conjugate_map(roots):
    out = []
    for r in roots:
        c = complex(r).conjugate()
        out.append(min(range(len(roots)), key=lambda j: abs(complex(roots[j]) - c)))
    return np.array(out + [NONE], dtype=np.int16)


@pytest.mark.parametrize("method", ALL_METHODS)
@pytest.mark.parametrize("name", ["p1", "p2", "p3", "p5"])
def test_real_coefficients_give_conjugate_symmetric_basins(method, name):
    grid = render(method, None, builtin(name), SMALL)
    conj = _conjugate_map(grid.roots)
    flipped = conj[grid.root_index[::-1]]
    assert np.array_equal(flipped, grid.root_index)
    assert np.array_equal(grid.iterations[::-1], grid.iterations)


@pytest.mark.parametrize("method", ALL_METHODS)
@pytest.mark.parametrize("name", ["p1", "p4", "p6"])
def test_python_kernel_matches_generic_step(method, name):
    spec = GridSpec(width=23, height=19)
    a = render(method, None, builtin(name), spec, backend="python")
    b = render(method, None, builtin(name), spec, backend="generic")
    assert np.array_equal(a.root_index, b.root_index)
    assert np.array_equal(a.iterations, b.iterations)


@pytest.mark.skipif(not compiled_available(), reason="compiled kernel not built")
@pytest.mark.parametrize("method", ALL_METHODS)
@pytest.mark.parametrize("name", ["p1", "p2", "p3", "p4", "p5", "p6"])
def test_compiled_kernel_matches_python_kernel(method, name):
    spec = GridSpec(width=101, height=101)
    a = render(method, None, builtin(name), spec, backend="compiled")
    b = render(method, None, builtin(name), spec, backend="python")
    assert np.array_equal(a.root_index, b.root_index)
    assert np.array_equal(a.iterations, b.iterations)


def test_default_backend_reported():
    assert BACKEND in ("compiled", "python")
    grid = render(MethodId.M1, None, builtin("p1"), GridSpec(width=3, height=3))
    assert grid.backend == BACKEND
    f = Problem.from_strings("e", "exp(x)-2", root="ln(2)")
    assert render(MethodId.M1, None, f, GridSpec(width=3, height=3)).backend == "generic"


def test_kernel_backend_requires_polynomial():
    f = Problem.from_strings("e", "exp(x)-2", root="ln(2)")
    with pytest.raises(ValueError):
        render(MethodId.M1, None, f, GridSpec(width=3, height=3), backend="python")


def test_precision_path_agrees_with_hardware_away_from_boundaries():
    spec = GridSpec(width=9, height=9)
    hw = render(MethodId.M3, DEFAULT_PARAMS, builtin("p2"), spec)
    mp = render(MethodId.M3, DEFAULT_PARAMS, builtin("p2"), GridSpec(width=9, height=9, digits=30))
    assert mp.backend == "generic"
    assert np.mean(hw.root_index == mp.root_index) > 0.9


# -- reference grids ----------------------------------------------------------------


def test_m1_on_p1_default_grid():
    m = metrics(render(MethodId.M1, None, builtin("p1")))
    assert m.nonconvergent == 4
    assert abs(m.nc_percent - 0.00111) < 1e-4


def test_m4_on_p1_default_grid_converges_everywhere():
    assert metrics(render(MethodId.M4, None, builtin("p1"))).nonconvergent == 0


# -- coloring ------------------------------------------------------------------------


def test_colorize_brightness_ramp():
    pal = [(255, 0, 0), (0, 255, 0)]
    grid = _synthetic([[0, 0, 0, NONE, 1]], [[0, 14, 15, 15, 7]])
    img = colorize(grid, pal)
    assert img.shape == (1, 5, 3) and img.dtype == np.uint8
    assert img[0, 0].tolist() == [255, 0, 0]
    assert img[0, 1].tolist() == [102, 0, 0]
    assert img[0, 2].tolist() == [102, 0, 0]
    assert img[0, 3].tolist() == [0, 0, 0]
    # 255 * (70 - 21) // 70
    assert img[0, 4].tolist() == [0, 178, 0]


def test_colorize_rejects_short_palette():
    grid = _synthetic([[0]], [[0]])
    with pytest.raises(PaletteError):
        colorize(grid, [(1, 2, 3)])
    with pytest.raises(PaletteError):
        colorize(grid, [(1, 2, 3), (0, 0, 256)])


def test_default_palette_covers_every_builtin():
    for name in ("p1", "p2", "p3", "p4", "p5", "p6"):
        colorize(render(MethodId.M2, None, builtin(name), GridSpec(width=5, height=5)))
