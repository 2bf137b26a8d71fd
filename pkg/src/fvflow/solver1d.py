"""1D steppers in the unknown G = rho/M.

Every implicit step solves a strictly diagonally dominant tridiagonal
M-matrix system; a nonnegative right-hand side therefore gives G >= 0,
and the direct elimination below keeps that sign exactly in floating point
(the refinement step is clamped to keep it too).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import FVFlowError
from .grid import Grid1D
from .model import MobilityProfile, ProblemSpec, mobility_profile_1d
from .state import SolverState, finalize_step


@dataclass(frozen=True)
class BandedSystem1D:
    """Rows: sub[j-1] G[j-1] + diag[j] G[j] + sup[j] G[j+1] = rhs[j].

    ``base``, when given, is the diagonal minus the flux couplings
    (diag = base - sub - sup); it lets residuals be formed from differences of G.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray
    base: np.ndarray | None = None

    def is_strictly_dominant(self) -> bool:
        off = np.zeros_like(self.diag)
        off[1:] += np.abs(self.sub)
        off[:-1] += np.abs(self.sup)
        return bool(np.all(self.diag > off) and np.all(self.diag > 0))

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def matvec(self, g) -> np.ndarray:
        out = self.diag * g
        out[1:] += self.sub * g[:-1]
        out[:-1] += self.sup * g[1:]
        return out

    def residual(self, g) -> np.ndarray:
        """rhs - A g; with ``base`` the couplings act on G differences, so a
        constant G leaves no cancellation error from the large flux diagonal."""
        if self.base is None:
            return self.rhs - self.matvec(g)
        r = self.rhs - self.base * g
        dg = np.diff(g)
        r[:-1] -= self.sup * dg
        r[1:] += self.sub * dg
        return r


def assemble_first_order_1d(grid: Grid1D, mob: MobilityProfile, rho_n, tau: float,
                            source=None) -> BandedSystem1D:
    """Implicit step  h_j rho^{n+1}_j - tau (C_{j+1/2} - C_{j-1/2}) = h_j rho^n_j  in G.

    ``source`` (values at cell centers) adds h_j * tau * F_j to the right-hand side.
    """
    if tau <= 0:
        raise ValueError("time step must be positive")
    h = grid.widths
    flux = tau * mob.at_interfaces / grid.half_widths
    diag = h * mob.at_centers
    diag[:-1] += flux
    diag[1:] += flux
    rhs = h * np.asarray(rho_n, dtype=float)
    if source is not None:
        rhs = rhs + h * tau * source
    return BandedSystem1D(-flux, diag, -flux.copy(), rhs, h * mob.at_centers)


@njit(cache=True)
def _thomas(sub, diag, sup, rhs):
    n = diag.size
    cp = np.empty(n)
    dp = np.empty(n)
    x = np.empty(n)
    m = diag[0]
    if not m > 0.0:
        return x, False
    cp[0] = sup[0] / m if n > 1 else 0.0
    dp[0] = rhs[0] / m
    for i in range(1, n):
        m = diag[i] - sub[i - 1] * cp[i - 1]
        if not m > 0.0:
            return x, False
        cp[i] = sup[i] / m if i < n - 1 else 0.0
        dp[i] = (rhs[i] - sub[i - 1] * dp[i - 1]) / m
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x, True


def _eliminate(system: BandedSystem1D, rhs) -> np.ndarray:
    x, ok = _thomas(np.ascontiguousarray(system.sub, dtype=float),
                    np.ascontiguousarray(system.diag, dtype=float),
                    np.ascontiguousarray(system.sup, dtype=float),
                    np.ascontiguousarray(rhs, dtype=float))
    if not ok:
        raise FVFlowError("nonpositive pivot in tridiagonal elimination; system is not diagonally dominant")
    return x


def solve_tridiagonal(system: BandedSystem1D, refine: bool = True) -> np.ndarray:
    """Thomas elimination, plus one refinement step when the system carries ``base``.

    The refinement removes the rounding bias that otherwise accumulates over
    many steps near a discrete equilibrium.
    """
    x = _eliminate(system, system.rhs)
    if refine and system.base is not None:
        x = x + _eliminate(system, system.residual(x))
        if np.all(system.rhs >= 0):
            # the exact solution is nonnegative; only the correction's rounding can dip below
            x = np.maximum(x, 0.0)
    return x


def _source(spec: ProblemSpec, grid: Grid1D, t: float):
    if spec.source is None:
        return None
    return np.broadcast_to(np.asarray(spec.source(grid.centers, t), dtype=float), grid.centers.shape)


def step_first_order_1d(state: SolverState, grid: Grid1D, spec: ProblemSpec, tau: float) -> SolverState:
    """Semi-implicit step: mobility frozen at rho^n, fluxes implicit in rho^{n+1}."""
    mob = mobility_profile_1d(grid, spec, state.rho)
    system = assemble_first_order_1d(grid, mob, state.rho, tau, _source(spec, grid, state.time + tau))
    rho_new = mob.at_centers * solve_tridiagonal(system)
    rho_new = finalize_step(rho_new, state.rho, grid, state, limiter=None)
    return state.advanced(rho_new, tau, mob)


def step_explicit_euler_1d(state: SolverState, grid: Grid1D, spec: ProblemSpec, tau: float) -> SolverState:
    """Forward Euler reference stepper; positive only under tau <= gamma h^2."""
    rho = state.rho
    mob = mobility_profile_1d(grid, spec, rho)
    G = rho / mob.at_centers
    flux = mob.at_interfaces / grid.half_widths * np.diff(G)
    div = np.zeros_like(rho)
    div[:-1] += flux
    div[1:] -= flux
    rho_new = rho + tau * div / grid.widths
    F = _source(spec, grid, state.time)
    if F is not None:
        rho_new = rho_new + tau * F
    return state.advanced(rho_new, tau, mob)


def predictor_1d(state: SolverState, grid: Grid1D, spec: ProblemSpec, tau: float):
    """Half-step implicit predictor with mobility at 3/2 rho^n - 1/2 rho^{n-1}.

    Returns (rho_star, mobility).
    """
    if state.rho_prev is None:
        raise ValueError("second-order step needs rho^{n-1}; take the first step with step_first_order_1d")
    extrapolated = 1.5 * state.rho - 0.5 * state.rho_prev
    mob = mobility_profile_1d(grid, spec, extrapolated)
    F = _source(spec, grid, state.time + 0.5 * tau)
    system = assemble_first_order_1d(grid, mob, state.rho, 0.5 * tau, F)
    return mob.at_centers * solve_tridiagonal(system), mob


def step_second_order_1d(state: SolverState, grid: Grid1D, spec: ProblemSpec, tau: float,
                         limiter: bool = True) -> SolverState:
    """Predictor-corrector step; negatives beyond rounding noise go to the limiter."""
    rho_star, mob = predictor_1d(state, grid, spec, tau)
    rho_new = 2.0 * rho_star - state.rho
    rho_new = finalize_step(rho_new, state.rho, grid, state, limiter=limiter)
    return state.advanced(rho_new, tau, mob)
