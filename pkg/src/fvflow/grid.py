"""Nonuniform 1D/2D cell partitions and cell-average initialization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError

# two-point Gauss nodes on [-1/2, 1/2] (relative to the cell width), equal weights
_GAUSS2 = np.array([-0.5 / np.sqrt(3.0), 0.5 / np.sqrt(3.0)])


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Cell partition of ``[a, b]``.

    ``edges`` holds x_{1/2} .. x_{N+1/2}; ``widths`` the cell sizes h_j.
    Centers and half widths h_{j+1/2} = (h_j + h_{j+1})/2 are derived once.
    """

    edges: np.ndarray
    widths: np.ndarray
    centers: np.ndarray = field(init=False, repr=False)
    half_widths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        edges = np.array(self.edges, dtype=float)
        widths = np.array(self.widths, dtype=float)
        if edges.ndim != 1 or widths.shape != (edges.size - 1,):
            raise GridError("edges must have exactly one more entry than widths")
        if widths.size < 1:
            raise GridError("a grid needs at least one cell")
        if not np.all(np.diff(edges) > 0):
            raise GridError("edges must be strictly increasing")
        if not np.all(widths > 0):
            raise GridError("cell widths must be positive")
        edges.flags.writeable = False
        widths.flags.writeable = False
        centers = edges[:-1] + 0.5 * widths
        half = 0.5 * (widths[:-1] + widths[1:])
        centers.flags.writeable = False
        half.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "half_widths", half)

    @property
    def n(self) -> int:
        return self.widths.size

    @property
    def a(self) -> float:
        return float(self.edges[0])

    @property
    def b(self) -> float:
        return float(self.edges[-1])

    @property
    def interfaces(self) -> np.ndarray:
        """Interior interfaces x_{3/2} .. x_{N-1/2}."""
        return self.edges[1:-1]

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.widths == self.widths[0]))


def build_grid_1d(a: float, b: float, widths, min_cells: int = 2) -> Grid1D:
    """Grid on [a, b] from cell widths. 2D axes may use ``min_cells=1``."""
    widths = np.asarray(widths, dtype=float)
    if widths.ndim != 1 or widths.size < min_cells:
        raise GridError(f"need at least {min_cells} cell widths")
    if not np.all(np.isfinite(widths)) or np.any(widths <= 0):
        raise GridError("cell widths must be finite and positive")
    if not b > a:
        raise GridError(f"empty domain [{a}, {b}]")
    total = float(np.sum(widths))
    if abs(total - (b - a)) > 1e-12 * (b - a):
        raise GridError(f"widths sum to {total!r}, expected b - a = {b - a!r}")
    edges = np.empty(widths.size + 1)
    edges[0] = a
    edges[1:] = a + np.cumsum(widths)
    edges[-1] = b
    return Grid1D(edges, widths)


def uniform_grid_1d(a: float, b: float, n: int, min_cells: int = 2) -> Grid1D:
    if n < min_cells:
        raise GridError(f"a grid needs at least {min_cells} cells")
    return build_grid_1d(a, b, np.full(n, (b - a) / n), min_cells)


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Tensor product of two 1D grids. Fields live on arrays of shape (nx, ny)."""

    gx: Grid1D
    gy: Grid1D

    @property
    def shape(self) -> tuple[int, int]:
        return (self.gx.n, self.gy.n)

    @property
    def size(self) -> int:
        return self.gx.n * self.gy.n

    @property
    def areas(self) -> np.ndarray:
        return np.outer(self.gx.widths, self.gy.widths)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates, each of shape (nx, ny)."""
        return np.meshgrid(self.gx.centers, self.gy.centers, indexing="ij")


def uniform_grid_2d(ax, bx, nx, ay, by, ny) -> Grid2D:
    return Grid2D(uniform_grid_1d(ax, bx, nx, 1), uniform_grid_1d(ay, by, ny, 1))


def _nodes(grid: Grid1D, points: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes of shape (N, points) and weights summing to one."""
    if points == 2:
        ref, w = _GAUSS2, np.array([0.5, 0.5])
    else:
        ref, w = np.polynomial.legendre.leggauss(points)
        ref, w = 0.5 * ref, 0.5 * w
    x = grid.centers[:, None] + grid.widths[:, None] * ref[None, :]
    return x, w


def cell_average_init_1d(f, grid: Grid1D, points: int = 2) -> np.ndarray:
    """Cell averages of ``f`` by Gauss-Legendre quadrature (two points by default)."""
    x, w = _nodes(grid, points)
    vals = np.asarray(f(x), dtype=float)
    vals = np.broadcast_to(vals, x.shape)
    if not np.all(np.isfinite(vals)):
        raise GridError("initial density is not finite at a quadrature node")
    return vals @ w


def cell_average_init_2d(f, grid: Grid2D, points: int = 2) -> np.ndarray:
    x, wx = _nodes(grid.gx, points)
    y, wy = _nodes(grid.gy, points)
    # axes: (i, p, j, q)
    X = x[:, :, None, None]
    Y = y[None, None, :, :]
    vals = np.broadcast_to(np.asarray(f(X, Y), dtype=float), (x.shape[0], points, y.shape[0], points))
    if not np.all(np.isfinite(vals)):
        raise GridError("initial density is not finite at a quadrature node")
    return np.einsum("ipjq,p,q->ij", vals, wx, wy)
