"""Uniform 1-D grid and its discrete Sobolev toolbox.

The negative-order norms used throughout the package are induced by the
resolvent (I - D2)^-1 of the three-point discrete Laplacian D2, realised by
direct tridiagonal solves (cyclic-tridiagonal under periodic boundary
conditions).  Everything here is a pure function of its inputs; Grid and
GridField are immutable and freely shareable across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_banded

PERIODIC = "periodic"
NEUMANN = "neumann"
_BOUNDARIES = (PERIODIC, NEUMANN)


class GridError(ValueError):
    """Invalid grid construction or grid operation."""


class MollifierError(ValueError):
    """Mollifier kernel incompatible with the grid."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``point_count`` nodes covering [-half_width, half_width).

    Node j sits at -half_width + j * spacing, so the rightmost node is one
    spacing short of +half_width (the wrap point under periodic boundaries).
    """

    half_width: float
    point_count: int
    boundary: str = PERIODIC

    def __post_init__(self) -> None:
        if self.point_count < 8:
            raise GridError(f"need at least 8 grid points, got {self.point_count}")
        if not self.half_width > 0:
            raise GridError(f"half_width must be positive, got {self.half_width}")
        if self.boundary not in _BOUNDARIES:
            raise GridError(f"unknown boundary condition {self.boundary!r}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.point_count

    @cached_property
    def nodes(self) -> np.ndarray:
        x = -self.half_width + self.spacing * np.arange(self.point_count)
        x.setflags(write=False)
        return x


def make_grid(half_width: float, point_count: int, boundary: str = PERIODIC) -> Grid:
    """Build a validated uniform grid (spacing = 2 * half_width / point_count)."""
    return Grid(float(half_width), int(point_count), boundary)


@dataclass(frozen=True)
class GridField:
    """Real-valued function sampled at the nodes of a Grid.

    Values are copied and frozen at construction; all entries must be finite.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.point_count,):
            raise GridError(
                f"field length {v.shape} does not match grid size {self.grid.point_count}"
            )
        if not np.all(np.isfinite(v)):
            raise GridError("field contains non-finite entries")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def field(grid: Grid, values) -> GridField:
    return GridField(grid, values)


def zero_field(grid: Grid) -> GridField:
    return GridField(grid, np.zeros(grid.point_count))


def integral(f: GridField) -> float:
    """Discrete integral h * sum(f)."""
    return float(f.grid.spacing * f.values.sum())


def inner(f: GridField, g: GridField) -> float:
    """Discrete L2 inner product h * sum(f * g)."""
    if f.grid != g.grid:
        raise GridError("fields live on different grids")
    return float(f.grid.spacing * (f.values * g.values).sum())


def laplacian_values(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Three-point second difference respecting the grid's boundary rule."""
    h2 = grid.spacing ** 2
    if grid.boundary == PERIODIC:
        return (np.roll(v, -1) - 2.0 * v + np.roll(v, 1)) / h2
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h2
    out[0] = (v[1] - v[0]) / h2
    out[-1] = (v[-2] - v[-1]) / h2
    return out


def laplacian(f: GridField) -> GridField:
    return GridField(f.grid, laplacian_values(f.grid, f.values))


def _solve_tridiag(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def _solve_cyclic_tridiag(
    lower: np.ndarray,
    diag: np.ndarray,
    upper: np.ndarray,
    corner_top: float,
    corner_bottom: float,
    rhs: np.ndarray,
) -> np.ndarray:
    """Solve a tridiagonal system with wrap-around corner entries.

    corner_top is A[0, n-1], corner_bottom is A[n-1, 0]; the rank-one update
    (Sherman-Morrison) reduces the system to two ordinary tridiagonal solves.
    """
    n = diag.shape[0]
    gamma = -(abs(corner_top) + abs(corner_bottom) + 1.0)
    d = diag.copy()
    d[0] -= gamma
    d[-1] -= corner_top * corner_bottom / gamma
    u = np.zeros(n)
    u[0] = gamma
    u[-1] = corner_bottom
    stacked = np.column_stack([rhs, u])
    sol = _solve_tridiag(lower, d, upper, stacked)
    y, q = sol[:, 0], sol[:, 1]
    ratio = corner_top / gamma
    vy = y[0] + ratio * y[-1]
    vq = q[0] + ratio * q[-1]
    return y - q * (vy / (1.0 + vq))


def helmholtz_inverse_values(grid: Grid, rhs: np.ndarray) -> np.ndarray:
    """Apply (I - D2)^-1 with the grid's boundary rule."""
    n = grid.point_count
    c = 1.0 / grid.spacing ** 2
    diag = np.full(n, 1.0 + 2.0 * c)
    off = np.full(n - 1, -c)
    if grid.boundary == PERIODIC:
        return _solve_cyclic_tridiag(off, diag, off, -c, -c, rhs)
    diag[0] = 1.0 + c
    diag[-1] = 1.0 + c
    return _solve_tridiag(off, diag, off, rhs)


def helmholtz_inverse(f: GridField) -> GridField:
    """Solve (I - D2) g = f by a direct (cyclic-)tridiagonal factorisation."""
    return GridField(f.grid, helmholtz_inverse_values(f.grid, f.values))


def sobolev_norm_values(grid: Grid, v: np.ndarray, order: int) -> float:
    h = grid.spacing
    if order == 0:
        return float(np.sqrt(h * np.dot(v, v)))
    if order == -1:
        g = helmholtz_inverse_values(grid, v)
        return float(np.sqrt(max(h * np.dot(v, g), 0.0)))
    if order == -2:
        g = helmholtz_inverse_values(grid, v)
        return float(np.sqrt(h * np.dot(g, g)))
    raise GridError(f"unsupported Sobolev order {order}; expected 0, -1 or -2")


def sobolev_norm(f: GridField, order: int) -> float:
    """Discrete H^s norm for s in {0, -1, -2}, induced by (I - D2)^(s/2)."""
    return sobolev_norm_values(f.grid, f.values, order)


def derivative_values(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Second-order first derivative: centered inside, one-sided at Neumann ends."""
    h = grid.spacing
    if grid.boundary == PERIODIC:
        return (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * h)
    return np.gradient(v, h, edge_order=2)


def multiplier_norm_bound(e: GridField) -> float:
    """Upper bound sqrt(2) * (sup|e|^2 + sup|e'|^2)^(1/2) for the operator norm
    of pointwise multiplication by e acting on the discrete H^-1 space."""
    v = e.values
    d = derivative_values(e.grid, v)
    return float(np.sqrt(2.0) * np.sqrt(np.max(v * v) + np.max(d * d)))


def bump_kernel(x) -> np.ndarray:
    """The standard compactly supported bump exp(-1/(1-x^2)) on |x| < 1.

    Outside the support the clipped 1 - x^2 makes the exponent underflow to
    an exact 0, so no masking pass is needed.
    """
    x = np.asarray(x, dtype=np.float64)
    s = 1.0 - x * x
    np.maximum(s, 1e-300, out=s)
    return np.exp(-1.0 / s)


@dataclass(frozen=True)
class Mollifier:
    """Compactly supported smoothing kernel of width ``scale``.

    The discrete weights are the bump kernel sampled at node offsets and
    renormalised to unit sum, so convolution preserves constants and, under
    periodic boundaries, the discrete integral.
    """

    scale: float

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise MollifierError(f"mollifier scale must be positive, got {self.scale}")

    def discrete_weights(self, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
        """Offsets -W..W and matching weights (sum exactly 1)."""
        reach = int(np.ceil(self.scale / grid.spacing))
        offsets = np.arange(-reach, reach + 1)
        w = bump_kernel(offsets * grid.spacing / self.scale)
        total = w.sum()
        if total <= 0:
            raise MollifierError("mollifier kernel vanishes at this grid spacing")
        return offsets, w / total


def mollify(f: GridField, m: Mollifier) -> GridField:
    """Discrete convolution with the mollifier kernel.

    Periodic grids wrap; Neumann grids mirror-pad and reject kernels whose
    support does not fit inside the domain.
    """
    grid = f.grid
    offsets, weights = m.discrete_weights(grid)
    reach = offsets[-1]
    if 2 * reach + 1 > grid.point_count:
        raise MollifierError(
            f"kernel support ({2 * reach + 1} nodes) exceeds grid extent ({grid.point_count})"
        )
    v = f.values
    if grid.boundary == PERIODIC:
        out = np.zeros_like(v)
        for o, w in zip(offsets, weights):
            out += w * np.roll(v, -o)
        return GridField(grid, out)
    padded = np.pad(v, reach, mode="symmetric")
    out = np.zeros_like(v)
    n = grid.point_count
    for i, w in enumerate(weights):
        out += w * padded[i : i + n]
    return GridField(grid, out)


def interp_values(grid: Grid, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Linear interpolation of node values at arbitrary positions.

    Periodic grids wrap around; otherwise values are extended as constants
    beyond the outermost nodes.
    """
    x = np.asarray(x, dtype=np.float64)
    if grid.boundary == PERIODIC:
        span = 2.0 * grid.half_width
        pos = (x + grid.half_width) % span
        h = grid.spacing
        idx = np.minimum((pos / h).astype(np.int64), grid.point_count - 1)
        frac = pos / h - idx
        nxt = (idx + 1) % grid.point_count
        return values[idx] * (1.0 - frac) + values[nxt] * frac
    return np.interp(x, grid.nodes, values)


def bump_field(grid: Grid, center: float = 0.0, width: float = 1.0, amplitude: float = 1.0) -> GridField:
    """Smooth compactly supported field; handy as a weak-form test function."""
    return GridField(grid, amplitude * bump_kernel((grid.nodes - center) / width))


def boundary_mass_fraction(f: GridField, inner_fraction: float = 0.9) -> float:
    """Fraction of |f|'s discrete mass carried by nodes with |x| > inner_fraction * L."""
    mask = np.abs(f.grid.nodes) > inner_fraction * f.grid.half_width
    total = np.abs(f.values).sum()
    if total == 0.0:
        return 0.0
    return float(np.abs(f.values[mask]).sum() / total)
