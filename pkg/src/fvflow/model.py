"""Problem definition, discrete convolution and the mobility M = exp(-V - W*rho).

Interaction sums are direct O(N^2) (1D) / O((NxNy)^2) (2D) sums. The kernel
samples h_i W(x_i - x) are evaluated once per (grid, spec) pair and cached as
dense matrices; this is the memory and time hot spot of the package.

Kernels that are infinite at zero displacement (the Keller-Segel log kernel)
have that self pair dropped from the sum. Any other non-finite kernel value
is an error.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import KernelError, MobilityRangeError, SpecError
from .grid import Grid1D, Grid2D

EXPONENT_LIMIT = 700.0


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Coefficients of  rho_t = div(grad rho + rho grad(V + intensity * W*rho)) + F.

    ``domain`` is ``(a, b)`` in 1D and ``((ax, bx), (ay, by))`` in 2D. All
    callables are vectorized over numpy arrays: ``V(x)``/``V(x, y)``,
    ``W(s)``/``W(s, t)``, ``rho0(x)``/``rho0(x, y)``, ``source(x, t)``/``source(x, y, t)``.
    ``V=None`` and ``W=None`` mean identically zero.
    """

    rho0: Callable
    domain: tuple
    V: Callable | None = None
    W: Callable | None = None
    intensity: float = 1.0
    source: Callable | None = None
    name: str = ""

    def __post_init__(self):
        dom = np.asarray(self.domain, dtype=float)
        if dom.shape not in ((2,), (2, 2)):
            raise SpecError(f"domain must be (a, b) or ((ax, bx), (ay, by)), got {self.domain!r}")
        if np.any(dom[..., 1] <= dom[..., 0]):
            raise SpecError(f"empty domain {self.domain!r}")
        if not np.isfinite(self.intensity):
            raise SpecError("intensity must be finite")
        self._check_symmetry(dom)
        self._check_initial(dom)

    @property
    def dim(self) -> int:
        return 1 if np.ndim(self.domain[0]) == 0 else 2

    def _check_symmetry(self, dom):
        if self.W is None:
            return
        if self.dim == 1:
            span = dom[1] - dom[0]
            s = span * (np.arange(1, 66) / 65.0 - 0.00731)
            pairs = [(self.W(s), self.W(-s))]
        else:
            sx = (dom[0, 1] - dom[0, 0]) * (np.arange(1, 18) / 17.0 - 0.0173)
            sy = (dom[1, 1] - dom[1, 0]) * (np.arange(1, 18) / 17.0 - 0.0291)
            S, T = np.meshgrid(np.concatenate([sx, -sx]), np.concatenate([sy, -sy]), indexing="ij")
            pairs = [(self.W(S, T), self.W(-S, -T))]
        for w_plus, w_minus in pairs:
            w_plus = np.asarray(w_plus, dtype=float)
            w_minus = np.asarray(w_minus, dtype=float)
            scale = np.max(np.abs(w_plus[np.isfinite(w_plus)]), initial=0.0)
            if not np.allclose(w_plus, w_minus, rtol=1e-12, atol=1e-12 * scale, equal_nan=True):
                raise SpecError("interaction kernel W must be symmetric, W(s) = W(-s)")

    def _check_initial(self, dom):
        if self.dim == 1:
            x = np.linspace(dom[0], dom[1], 257)
            vals = np.broadcast_to(np.asarray(self.rho0(x), dtype=float), x.shape)
        else:
            X, Y = np.meshgrid(np.linspace(*dom[0], 33), np.linspace(*dom[1], 33), indexing="ij")
            vals = np.broadcast_to(np.asarray(self.rho0(X, Y), dtype=float), X.shape)
        if np.any(vals < 0):
            raise SpecError("initial density must be nonnegative")


@dataclass(frozen=True)
class MobilityProfile:
    at_centers: np.ndarray  # (N,)
    at_interfaces: np.ndarray  # (N-1,)


@dataclass(frozen=True)
class MobilityProfile2D:
    at_centers: np.ndarray  # (nx, ny)
    x_faces: np.ndarray  # (nx-1, ny), at (x_{i+1/2}, y_j)
    y_faces: np.ndarray  # (nx, ny-1), at (x_i, y_{j+1/2})


def _kernel_block(W, weights, *displacements):
    """weights[None, :] * W(displacement), dropping a singular self pair.

    Returns (matrix, skipped) where skipped tells whether any self pair was dropped.
    """
    vals = np.asarray(W(*displacements), dtype=float)
    vals = np.broadcast_to(vals, displacements[0].shape).copy()
    bad = ~np.isfinite(vals)
    skipped = False
    if bad.any():
        at_zero = np.logical_and.reduce([d == 0 for d in displacements])
        if np.any(bad & ~at_zero):
            raise KernelError("interaction kernel is not finite at a nonzero displacement")
        vals[bad] = 0.0
        skipped = True
    return vals * weights[None, :], skipped


@dataclass(frozen=True)
class StaticTerms:
    """Density-independent samples: V and weighted kernel matrices at centers/interfaces."""

    V_centers: np.ndarray
    V_faces: tuple  # 1D: (V at interfaces,); 2D: (V on x faces, V on y faces)
    K_centers: np.ndarray | None
    K_faces: tuple  # matrices mapping the flattened density to the face convolutions
    skipped_self_term: bool


def _eval(fn, *args):
    if fn is None:
        return np.zeros(np.broadcast(*args).shape)
    return np.broadcast_to(np.asarray(fn(*args), dtype=float), np.broadcast(*args).shape).copy()


@functools.lru_cache(maxsize=4)
def static_terms(grid, spec: ProblemSpec) -> StaticTerms:
    if isinstance(grid, Grid1D):
        if spec.dim != 1:
            raise SpecError("1D grid given for a 2D problem")
        xc, xf = grid.centers, grid.interfaces
        Vc, Vf = _eval(spec.V, xc), _eval(spec.V, xf)
        if spec.W is None:
            return StaticTerms(Vc, (Vf,), None, (None,), False)
        Kc, s1 = _kernel_block(spec.W, grid.widths, xc[None, :] - xc[:, None])
        Kf, s2 = _kernel_block(spec.W, grid.widths, xc[None, :] - xf[:, None])
        return StaticTerms(Vc, (Vf,), Kc, (Kf,), s1 or s2)

    if not isinstance(grid, Grid2D) or spec.dim != 2:
        raise SpecError("grid and problem dimension disagree")
    xc, yc = grid.gx.centers, grid.gy.centers
    xf, yf = grid.gx.interfaces, grid.gy.interfaces
    C = np.meshgrid(xc, yc, indexing="ij")
    FX = np.meshgrid(xf, yc, indexing="ij")
    FY = np.meshgrid(xc, yf, indexing="ij")
    Vc, Vx, Vy = _eval(spec.V, *C), _eval(spec.V, *FX), _eval(spec.V, *FY)
    if spec.W is None:
        return StaticTerms(Vc, (Vx, Vy), None, (None, None), False)
    # flattened with x fastest (Fortran order), matching the linear-system ordering
    area = grid.areas.ravel(order="F")
    sx, sy = C[0].ravel(order="F"), C[1].ravel(order="F")
    mats, skipped = [], False
    for tx, ty in (C, FX, FY):
        tx, ty = tx.ravel(order="F"), ty.ravel(order="F")
        K, s = _kernel_block(spec.W, area, sx[None, :] - tx[:, None], sy[None, :] - ty[:, None])
        mats.append(K)
        skipped = skipped or s
    return StaticTerms(Vc, (Vx, Vy), mats[0], (mats[1], mats[2]), skipped)


def _guarded_exp(exponent):
    if not np.all(np.isfinite(exponent)) or np.max(np.abs(exponent), initial=0.0) > EXPONENT_LIMIT:
        raise MobilityRangeError(
            f"|V + intensity * W*rho| exceeds {EXPONENT_LIMIT:g}; mobility would leave floating range"
        )
    return np.exp(exponent)


def convolve_1d(grid: Grid1D, spec: ProblemSpec, rho, x: float) -> float:
    """sum_i h_i W(x_i - x) rho_i, accumulated in ascending index order."""
    if spec.W is None:
        return 0.0
    rho = np.asarray(rho, dtype=float)
    total = 0.0
    for xi, hi, ri in zip(grid.centers, grid.widths, rho):
        d = xi - x
        w = float(spec.W(d))
        if not np.isfinite(w):
            if d == 0:
                continue
            raise KernelError(f"W is not finite at displacement {d!r}")
        total += hi * w * ri
    return total


def mobility_value_1d(grid: Grid1D, spec: ProblemSpec, rho, x: float) -> float:
    v = 0.0 if spec.V is None else float(spec.V(x))
    return float(_guarded_exp(np.array(-v - spec.intensity * convolve_1d(grid, spec, rho, x))))


def interaction_potential(grid, spec: ProblemSpec, rho) -> np.ndarray:
    """g = intensity * (W*rho) at cell centers, same shape as ``rho``."""
    rho = np.asarray(rho, dtype=float)
    st = static_terms(grid, spec)
    if st.K_centers is None:
        return np.zeros_like(rho)
    if rho.ndim == 1:
        return spec.intensity * (st.K_centers @ rho)
    g = st.K_centers @ rho.ravel(order="F")
    return spec.intensity * g.reshape(rho.shape, order="F")


def mobility_profile_1d(grid: Grid1D, spec: ProblemSpec, rho) -> MobilityProfile:
    rho = np.asarray(rho, dtype=float)
    st = static_terms(grid, spec)
    ec, ef = -st.V_centers, -st.V_faces[0]
    if st.K_centers is not None:
        ec = ec - spec.intensity * (st.K_centers @ rho)
        ef = ef - spec.intensity * (st.K_faces[0] @ rho)
    return MobilityProfile(_guarded_exp(ec), _guarded_exp(ef))


def mobility_profile_2d(grid: Grid2D, spec: ProblemSpec, rho) -> MobilityProfile2D:
    rho = np.asarray(rho, dtype=float)
    st = static_terms(grid, spec)
    ec, ex, ey = -st.V_centers, -st.V_faces[0], -st.V_faces[1]
    if st.K_centers is not None:
        flat = rho.ravel(order="F")
        nx, ny = grid.shape
        a = spec.intensity
        ec = ec - a * (st.K_centers @ flat).reshape((nx, ny), order="F")
        ex = ex - a * (st.K_faces[0] @ flat).reshape((nx - 1, ny), order="F")
        ey = ey - a * (st.K_faces[1] @ flat).reshape((nx, ny - 1), order="F")
    return MobilityProfile2D(_guarded_exp(ec), _guarded_exp(ex), _guarded_exp(ey))


def mobility_profile(grid, spec, rho):
    if isinstance(grid, Grid2D):
        return mobility_profile_2d(grid, spec, rho)
    return mobility_profile_1d(grid, spec, rho)
