"""2D tensor-grid steppers on a five-band system in G = rho/M.

Unknowns are ordered with x fastest: p = i + nx * j (Fortran order of an
(nx, ny) array). The system matrix is a strictly diagonally dominant
M-matrix, so symmetric Gauss-Seidel sweeps started from a nonnegative guess
keep every iterate nonnegative when the right-hand side is nonnegative.

Pure sweeps converge slowly once tau/h^2 is large, so by default the sweeps
are warm-started from a sparse direct solve (clamped at zero); the sweeps
then only polish the residual to tolerance.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla
from numba import njit

from .errors import ConvergenceError
from .grid import Grid2D
from .model import MobilityProfile2D, ProblemSpec, mobility_profile_2d
from .state import SolverState, finalize_step

RESIDUAL_TOL = 1e-12
MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class BandedSystem2D:
    """Row (i, j): center G_ij + west G_{i-1,j} + east G_{i+1,j} + south G_{i,j-1} + north G_{i,j+1} = rhs.

    All arrays have shape (nx, ny); coefficients pointing outside the domain are zero.
    ``base``, when given, is center minus the flux couplings, used for residuals
    formed from differences of G.
    """

    center: np.ndarray
    west: np.ndarray
    east: np.ndarray
    south: np.ndarray
    north: np.ndarray
    rhs: np.ndarray
    base: np.ndarray | None = None

    @property
    def shape(self):
        return self.center.shape

    def off_diagonal_sum(self) -> np.ndarray:
        return np.abs(self.west) + np.abs(self.east) + np.abs(self.south) + np.abs(self.north)

    def is_strictly_dominant(self) -> bool:
        return bool(np.all(self.center > self.off_diagonal_sum()) and np.all(self.center > 0))

    def matvec(self, g) -> np.ndarray:
        g = np.asarray(g).reshape(self.shape, order="F") if np.ndim(g) == 1 else g
        out = self.center * g
        out[1:, :] += self.west[1:, :] * g[:-1, :]
        out[:-1, :] += self.east[:-1, :] * g[1:, :]
        out[:, 1:] += self.south[:, 1:] * g[:, :-1]
        out[:, :-1] += self.north[:, :-1] * g[:, 1:]
        return out

    def residual(self, g) -> np.ndarray:
        """rhs - A g as an (nx, ny) array; see BandedSystem1D.residual."""
        g = np.asarray(g).reshape(self.shape, order="F") if np.ndim(g) == 1 else g
        if self.base is None:
            return self.rhs - self.matvec(g)
        r = self.rhs - self.base * g
        dx = np.diff(g, axis=0)
        dy = np.diff(g, axis=1)
        r[:-1, :] -= self.east[:-1, :] * dx
        r[1:, :] += self.west[1:, :] * dx
        r[:, :-1] -= self.north[:, :-1] * dy
        r[:, 1:] += self.south[:, 1:] * dy
        return r

    def to_sparse(self):
        nx, ny = self.shape
        n = nx * ny
        f = lambda a: a.ravel(order="F")
        bands = [(f(self.center), 0), (f(self.west)[1:], -1), (f(self.east)[:-1], 1),
                 (f(self.south)[nx:], -nx), (f(self.north)[:-nx], nx)]
        merged = {}
        for d, k in bands:  # with nx == 1 the x and y bands share offsets
            if d.size:
                merged[k] = merged[k] + d if k in merged else d
        return sparse.diags(list(merged.values()), list(merged), shape=(n, n), format="csc")

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


def assemble_first_order_2d(grid: Grid2D, mob: MobilityProfile2D, rho_n, tau: float,
                            source=None) -> BandedSystem2D:
    """|I_ij| rho^{n+1} - tau (flux differences) = |I_ij| rho^n, fluxes scaled by tilde-M.

    tilde-M_{i+1/2,j} = h^y_j / h^x_{i+1/2} M_{i+1/2,j}, tilde-M_{i,j+1/2} = h^x_i / h^y_{j+1/2} M_{i,j+1/2}.
    """
    if tau <= 0:
        raise ValueError("time step must be positive")
    gx, gy = grid.gx, grid.gy
    area = grid.areas
    tx = tau * mob.x_faces * gy.widths[None, :] / gx.half_widths[:, None]
    ty = tau * mob.y_faces * gx.widths[:, None] / gy.half_widths[None, :]
    center = area * mob.at_centers
    center[:-1, :] += tx
    center[1:, :] += tx
    center[:, :-1] += ty
    center[:, 1:] += ty
    west = np.zeros_like(center)
    east = np.zeros_like(center)
    south = np.zeros_like(center)
    north = np.zeros_like(center)
    east[:-1, :] = -tx
    west[1:, :] = -tx
    north[:, :-1] = -ty
    south[:, 1:] = -ty
    rhs = area * np.asarray(rho_n, dtype=float)
    if source is not None:
        rhs = rhs + area * tau * source
    return BandedSystem2D(center, west, east, south, north, rhs, area * mob.at_centers)


@njit(cache=True)
def _sgs_sweep(c, w, e, s, nn, b, g, nx):
    n = c.size
    for p in range(n):
        acc = b[p]
        i = p % nx
        if i > 0:
            acc -= w[p] * g[p - 1]
        if i < nx - 1:
            acc -= e[p] * g[p + 1]
        if p >= nx:
            acc -= s[p] * g[p - nx]
        if p < n - nx:
            acc -= nn[p] * g[p + nx]
        g[p] = acc / c[p]
    for p in range(n - 1, -1, -1):
        acc = b[p]
        i = p % nx
        if i > 0:
            acc -= w[p] * g[p - 1]
        if i < nx - 1:
            acc -= e[p] * g[p + 1]
        if p >= nx:
            acc -= s[p] * g[p - nx]
        if p < n - nx:
            acc -= nn[p] * g[p + nx]
        g[p] = acc / c[p]


_factor_cache: dict = {}


def _factor(system: BandedSystem2D):
    """Sparse LU, reused when the matrix repeats (W = 0 runs)."""
    digest = hashlib.blake2b(digest_size=16)
    for a in (system.center, system.west, system.east, system.south, system.north):
        digest.update(np.ascontiguousarray(a).data)
    key = (system.shape, digest.digest())
    lu = _factor_cache.get(key)
    if lu is None:
        lu = spla.splu(system.to_sparse())
        _factor_cache.clear()
        _factor_cache[key] = lu
    return lu


def _direct(system: BandedSystem2D) -> np.ndarray:
    """LU solve plus one refinement step from the difference-form residual."""
    lu = _factor(system)
    g = lu.solve(system.rhs.ravel(order="F"))
    if system.base is not None:
        g = g + lu.solve(system.residual(g).ravel(order="F"))
    return g


def relative_residual(system: BandedSystem2D, g) -> float:
    """||b - A g||_inf / (||b||_inf + ||A||_inf ||g||_inf)."""
    r = system.residual(g.reshape(system.shape, order="F"))
    scale = np.max(np.abs(system.rhs)) + np.max(system.center + system.off_diagonal_sum()) * np.max(np.abs(g))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(r)) / scale)


def solve_banded_2d(system: BandedSystem2D, tol: float = RESIDUAL_TOL, max_sweeps: int = MAX_SWEEPS,
                    warm_start: bool = True) -> np.ndarray:
    """Symmetric Gauss-Seidel to relative residual ``tol``; returns G as an (nx, ny) array.

    Raises ConvergenceError (with ``.residual``) if the sweep budget runs out.
    """
    nx, ny = system.shape
    f = lambda a: np.ascontiguousarray(a.ravel(order="F"), dtype=float)
    c, w, e, s, nn, b = map(f, (system.center, system.west, system.east, system.south,
                                system.north, system.rhs))
    if warm_start:
        g = _direct(system)
        if np.all(b >= 0):
            g = np.maximum(g, 0.0)
    else:
        g = np.zeros_like(b)
    res = relative_residual(system, g)
    sweeps = 0
    while res > tol:
        if sweeps >= max_sweeps:
            raise ConvergenceError(f"symmetric Gauss-Seidel stalled at relative residual {res:.3e}", res)
        _sgs_sweep(c, w, e, s, nn, b, g, nx)
        sweeps += 1
        res = relative_residual(system, g)
    return g.reshape((nx, ny), order="F")


def _source(spec: ProblemSpec, grid: Grid2D, t: float):
    if spec.source is None:
        return None
    X, Y = grid.mesh()
    return np.broadcast_to(np.asarray(spec.source(X, Y, t), dtype=float), X.shape)


def step_first_order_2d(state: SolverState, grid: Grid2D, spec: ProblemSpec, tau: float) -> SolverState:
    mob = mobility_profile_2d(grid, spec, state.rho)
    system = assemble_first_order_2d(grid, mob, state.rho, tau, _source(spec, grid, state.time + tau))
    rho_new = mob.at_centers * solve_banded_2d(system)
    rho_new = finalize_step(rho_new, state.rho, grid, state, limiter=None)
    return state.advanced(rho_new, tau, mob)


def step_explicit_euler_2d(state: SolverState, grid: Grid2D, spec: ProblemSpec, tau: float) -> SolverState:
    rho = state.rho
    mob = mobility_profile_2d(grid, spec, rho)
    G = rho / mob.at_centers
    fx = mob.x_faces / grid.gx.half_widths[:, None] * np.diff(G, axis=0)
    fy = mob.y_faces / grid.gy.half_widths[None, :] * np.diff(G, axis=1)
    div = np.zeros_like(rho)
    div[:-1, :] += fx / grid.gx.widths[:-1, None]
    div[1:, :] -= fx / grid.gx.widths[1:, None]
    div[:, :-1] += fy / grid.gy.widths[None, :-1]
    div[:, 1:] -= fy / grid.gy.widths[None, 1:]
    rho_new = rho + tau * div
    F = _source(spec, grid, state.time)
    if F is not None:
        rho_new = rho_new + tau * F
    return state.advanced(rho_new, tau, mob)


def predictor_2d(state: SolverState, grid: Grid2D, spec: ProblemSpec, tau: float):
    if state.rho_prev is None:
        raise ValueError("second-order step needs rho^{n-1}; take the first step with step_first_order_2d")
    mob = mobility_profile_2d(grid, spec, 1.5 * state.rho - 0.5 * state.rho_prev)
    F = _source(spec, grid, state.time + 0.5 * tau)
    system = assemble_first_order_2d(grid, mob, state.rho, 0.5 * tau, F)
    return mob.at_centers * solve_banded_2d(system), mob


def step_second_order_2d(state: SolverState, grid: Grid2D, spec: ProblemSpec, tau: float,
                         limiter: bool = True) -> SolverState:
    rho_star, mob = predictor_2d(state, grid, spec, tau)
    rho_new = 2.0 * rho_star - state.rho
    rho_new = finalize_step(rho_new, state.rho, grid, state, limiter=limiter)
    return state.advanced(rho_new, tau, mob)
