"""Basins of attraction on a rectangular grid of the complex plane.

Polynomial problems at hardware precision go through a per-pixel kernel:
the compiled extension when it is importable, otherwise a numpy fallback
with the same semantics. ``OCTOROOT_BACKEND=python`` forces the fallback.
Everything else (non-polynomial problems, an explicit ``digits``) uses the
generic scalar step one pixel at a time.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..expr import Problem
from ..methods import DEFAULT_PARAMS, MethodId, MethodParams, Status, step
from ..numerics import HARDWARE, PrecisionContext
from . import _fallback

NONE = -1


def _select_backend():
    if os.environ.get("OCTOROOT_BACKEND", "").lower() == "python":
        return _fallback, "python"
    try:
        from . import _kernel
    except ImportError:
        return _fallback, "python"
    return _kernel, "compiled"


_backend, BACKEND = _select_backend()


def backend_module(name: str | None = None):
    """The kernel module for ``name`` ("compiled" or "python"); default is the active one."""
    if name is None:
        return _backend
    if name == "python":
        return _fallback
    if name == "compiled":
        from . import _kernel

        return _kernel
    raise ValueError(f"unknown backend {name!r}")


class PaletteError(ValueError):
    """The palette has fewer colors than the grid has roots."""


@dataclass(frozen=True)
class GridSpec:
    """Sampling rectangle, resolution and iteration protocol.

    ``sampling="edge"`` places the first and last samples on the rectangle's
    edges (``width`` points spanning ``[re_min, re_max]``); ``"center"``
    samples pixel centers. ``digits`` selects a working precision for the
    generic path; ``None`` means hardware doubles.
    """

    re_min: float = -3.0
    re_max: float = 3.0
    im_min: float = -3.0
    im_max: float = 3.0
    width: int = 600
    height: int = 600
    max_iter: int = 15
    escape_tol: float = 1e-3
    sampling: str = "edge"
    digits: int | None = None

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("grid bounds must satisfy min < max")
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not self.escape_tol > 0:
            raise ValueError("escape_tol must be positive")
        if self.sampling not in ("edge", "center"):
            raise ValueError("sampling must be 'edge' or 'center'")
        if self.max_iter > np.iinfo(np.int16).max:
            raise ValueError("max_iter too large")

    def real_axis(self) -> np.ndarray:
        return _axis(self.re_min, self.re_max, self.width, self.sampling)

    def imag_axis(self) -> np.ndarray:
        """Imaginary part of each row, top row first."""
        return _axis(self.im_min, self.im_max, self.height, self.sampling)[::-1].copy()

    def point(self, row: int, col: int) -> complex:
        return complex(self.real_axis()[col], self.imag_axis()[row])


def _axis(lo: float, hi: float, n: int, sampling: str) -> np.ndarray:
    k = np.arange(n, dtype=np.float64)
    if sampling == "center" or n == 1:
        # weights sum to n, so mirrored samples are exact negatives on symmetric ranges
        a = 2 * (n - k) - 1
        b = 2 * k + 1
        return (lo * a + hi * b) / (2 * n)
    return (lo * (n - 1 - k) + hi * k) / (n - 1)


@dataclass
class BasinGrid:
    """Per-pixel classification; row 0 is the top (largest imaginary part)."""

    spec: GridSpec
    root_index: np.ndarray
    iterations: np.ndarray
    roots: tuple
    method: MethodId
    polynomial: str
    backend: str = field(default="generic", compare=False)

    def __post_init__(self):
        shape = (self.spec.height, self.spec.width)
        if self.root_index.shape != shape or self.iterations.shape != shape:
            raise ValueError(f"cell arrays must have shape {shape}")

    @property
    def cells(self):
        """Iterate ``(root_index or None, iterations)`` row by row."""
        for r, n in zip(self.root_index.ravel().tolist(), self.iterations.ravel().tolist()):
            yield (None if r == NONE else r, n)

    def cell(self, row: int, col: int):
        r = int(self.root_index[row, col])
        return (None if r == NONE else r, int(self.iterations[row, col]))

    @property
    def total(self) -> int:
        return int(self.root_index.size)

    @property
    def nonconvergent(self) -> int:
        return int(np.count_nonzero(self.root_index == NONE))


@dataclass(frozen=True)
class BasinMetrics:
    ipp: float
    nc_percent: float
    icc: float
    total: int = 0
    nonconvergent: int = 0
    iteration_sum: int = 0
    convergent_iteration_sum: int = 0


def _nearest(roots, z, tol) -> int:
    for i, r in enumerate(roots):
        if abs(z - r) < tol:
            return i
    return NONE


def classify_point(
    method: MethodId,
    params: MethodParams | None,
    problem: Problem,
    z0,
    spec: GridSpec = GridSpec(),
    *,
    ev=None,
    roots=None,
):
    """Follow the orbit of ``z0`` and return ``(root_index or None, iterations)``.

    The root test runs before the first step (0 iterations) and after each
    step. A failed step or a non-finite iterate ends the orbit as
    nonconvergent with ``max_iter`` iterations.
    """
    params = params or DEFAULT_PARAMS
    ctx = _context(spec)
    if roots is None:
        roots = problem.root_values(ctx)
    if not roots:
        raise ValueError(f"problem {problem.name!r} has no known roots")
    if ev is None:
        ev = problem.evaluator(ctx)
    z = ctx.convert(z0)
    tol = spec.escape_tol
    for k in range(spec.max_iter + 1):
        if not ctx.isfinite(z):
            break
        i = _nearest(roots, z, tol)
        if i != NONE:
            return i, k
        if k == spec.max_iter:
            break
        out = step(method, ev, z, params)
        if out.status is not Status.OK:
            break
        z = out.next
    return None, spec.max_iter


def _context(spec: GridSpec):
    return HARDWARE if spec.digits is None else PrecisionContext(spec.digits)


def _kernel_coefficients(problem: Problem):
    poly = problem.polynomial
    if poly is None:
        return None
    return np.array([HARDWARE.convert(c) for c in reversed(poly)], dtype=np.complex128)


def render(
    method: MethodId,
    params: MethodParams | None,
    problem: Problem,
    spec: GridSpec = GridSpec(),
    *,
    backend: str | None = None,
) -> BasinGrid:
    """Classify every pixel of ``spec``.

    ``backend`` may force "compiled", "python" or "generic"; by default the
    kernel is used whenever the problem is a polynomial at hardware precision.
    """
    params = params or DEFAULT_PARAMS
    ctx = _context(spec)
    roots = problem.root_values(ctx)
    if not roots:
        raise ValueError(f"problem {problem.name!r} has no known roots")
    coeffs = _kernel_coefficients(problem) if spec.digits is None else None
    if backend is None:
        backend = BACKEND if coeffs is not None else "generic"
    re_axis, im_axis = spec.real_axis(), spec.imag_axis()
    if backend == "generic":
        idx, its = _render_generic(method, params, problem, spec, ctx, roots, re_axis, im_axis)
    else:
        if coeffs is None:
            raise ValueError("the kernel backends need a polynomial at hardware precision")
        mod = backend_module(backend)
        idx, its = mod.classify_grid(
            coeffs,
            np.array(roots, dtype=np.complex128),
            re_axis,
            im_axis,
            method.value,
            np.array(params.as_tuple(), dtype=np.float64),
            spec.max_iter,
            spec.escape_tol,
        )
    return BasinGrid(
        spec=spec,
        root_index=np.asarray(idx, dtype=np.int16),
        iterations=np.asarray(its, dtype=np.int16),
        roots=tuple(roots),
        method=method,
        polynomial=problem.source,
        backend=backend,
    )


def _render_generic(method, params, problem, spec, ctx, roots, re_axis, im_axis):
    ev = problem.evaluator(ctx)
    idx = np.full((spec.height, spec.width), NONE, dtype=np.int16)
    its = np.full((spec.height, spec.width), spec.max_iter, dtype=np.int16)
    for row, im in enumerate(im_axis.tolist()):
        for col, re in enumerate(re_axis.tolist()):
            r, n = classify_point(method, params, problem, ctx.complex(re, im), spec, ev=ev, roots=roots)
            if r is not None:
                idx[row, col] = r
            its[row, col] = n
    return idx, its


def metrics(grid: BasinGrid) -> BasinMetrics:
    """Mean iterations per point, percentage nonconvergent, mean iterations per convergent point."""
    total = grid.total
    if total == 0:
        raise ValueError("empty grid")
    its = grid.iterations.astype(np.int64)
    conv = grid.root_index != NONE
    nc = total - int(np.count_nonzero(conv))
    it_sum = int(its.sum())
    conv_sum = int(its[conv].sum())
    return BasinMetrics(
        ipp=it_sum / total,
        nc_percent=100.0 * nc / total,
        icc=conv_sum / (total - nc) if nc < total else 0.0,
        total=total,
        nonconvergent=nc,
        iteration_sum=it_sum,
        convergent_iteration_sum=conv_sum,
    )


# Ten well-separated anchors; p6 has ten roots.
DEFAULT_PALETTE = (
    (230, 25, 75),
    (60, 180, 75),
    (0, 130, 200),
    (255, 225, 25),
    (145, 30, 180),
    (70, 240, 240),
    (245, 130, 48),
    (240, 50, 230),
    (210, 245, 60),
    (250, 190, 212),
)


def colorize(grid: BasinGrid, palette=DEFAULT_PALETTE) -> np.ndarray:
    """RGB8 image of shape ``(height, width, 3)``.

    Root ``i`` reached after ``n`` iterations gets ``palette[i]`` scaled by
    ``1 - 0.6 * min(n, M-1) / (M-1)`` (rounded down); nonconvergent cells are black.
    """
    pal = np.asarray(palette, dtype=np.int64).reshape(-1, 3)
    if pal.shape[0] < len(grid.roots):
        raise PaletteError(
            f"palette has {pal.shape[0]} colors but the grid has {len(grid.roots)} roots"
        )
    if pal.size and (pal.min() < 0 or pal.max() > 255):
        raise PaletteError("palette entries must be in 0..255")
    M = grid.spec.max_iter
    idx = grid.root_index.astype(np.int64)
    conv = idx != NONE
    img = np.zeros(idx.shape + (3,), dtype=np.uint8)
    if M == 1:
        scale_num, scale_den = np.full(idx.shape, 1, np.int64), 1
    else:
        m = np.minimum(grid.iterations.astype(np.int64), M - 1)
        scale_den = 5 * (M - 1)
        scale_num = scale_den - 3 * m
    base = pal[np.where(conv, idx, 0)]
    vals = base * scale_num[..., None] // scale_den
    img[conv] = vals[conv].astype(np.uint8)
    return img


__all__ = [
    "BACKEND",
    "NONE",
    "BasinGrid",
    "BasinMetrics",
    "DEFAULT_PALETTE",
    "GridSpec",
    "PaletteError",
    "backend_module",
    "classify_point",
    "colorize",
    "metrics",
    "render",
]
