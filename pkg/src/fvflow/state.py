"""Two-level solver state and the post-step positivity policy shared by 1D and 2D."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import limiter as _limiter
from .grid import Grid2D

log = logging.getLogger(__name__)

# entries in [-NOISE_LEVEL * scale, 0) are rounding noise and are clamped to zero
NOISE_LEVEL = 1e-13


@dataclass(frozen=True)
class StepRecord:
    """Something non-routine happened in a step: clamping, negatives, or a limiter pass."""

    step: int
    clamped: int = 0
    negatives: int = 0
    limited: bool = False
    events: tuple = ()


@dataclass
class SolverState:
    """rho^n and rho^{n-1}; ``log`` is shared between successive states of one run."""

    rho: np.ndarray
    rho_prev: np.ndarray | None = None
    time: float = 0.0
    step_index: int = 0
    mobility: object = None  # mobility used by the step that produced ``rho``
    log: list = field(default_factory=list)
    limiter_cap: int | None = None

    def advanced(self, rho_new, tau, mobility) -> SolverState:
        return SolverState(
            rho=rho_new,
            rho_prev=self.rho,
            time=self.time + tau,
            step_index=self.step_index + 1,
            mobility=mobility,
            log=self.log,
            limiter_cap=self.limiter_cap,
        )


def finalize_step(rho_new, rho_old, grid, state: SolverState, limiter: bool | None):
    """Clamp rounding noise; hand genuine negatives to the limiter (or warn).

    ``limiter=None`` means the stepper has no limiter stage (first-order steps).
    Returns the possibly modified density.
    """
    if not np.any(rho_new < 0):
        return rho_new
    step = state.step_index + 1
    scale = float(np.max(np.abs(rho_old)))
    if scale == 0.0:
        scale = float(np.max(np.abs(rho_new)))
    rho_new = rho_new.copy()
    noise = (rho_new < 0) & (rho_new >= -NOISE_LEVEL * scale)
    rho_new[noise] = 0.0
    clamped = int(noise.sum())
    negative = rho_new < 0
    n_neg = int(negative.sum())
    if n_neg == 0:
        state.log.append(StepRecord(step, clamped=clamped))
        return rho_new
    if limiter:
        if isinstance(grid, Grid2D):
            rho_new, events = _limiter.limit_field_2d(rho_new, grid, cap=state.limiter_cap)
        else:
            rho_new, events = _limiter.limit_field_1d(rho_new, grid, cap=state.limiter_cap)
        events = tuple(e._replace(step=step) for e in events)
        state.log.append(StepRecord(step, clamped, n_neg, True, events))
    else:
        log.warning("step %d: %d negative cell values (min %.3e), no limiter applied",
                    step, n_neg, float(rho_new.min()))
        state.log.append(StepRecord(step, clamped, n_neg, False))
    return rho_new
