"""Positivity-preserving, energy-dissipating finite volume schemes for
rho_t = div(grad rho + rho grad(V + W*rho)) + F in one and two dimensions."""

from .config import RunConfig
from .grid import Grid1D, Grid2D, build_grid_1d, uniform_grid_1d, uniform_grid_2d
from .harness import ConvergenceRow, convergence_study, emit_outputs, run
from .model import ProblemSpec
from .state import SolverState

__all__ = ["RunConfig", "Grid1D", "Grid2D", "build_grid_1d", "uniform_grid_1d", "uniform_grid_2d",
           "ConvergenceRow", "convergence_study", "emit_outputs", "run", "ProblemSpec", "SolverState"]
