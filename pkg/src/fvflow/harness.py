"""Time loop, convergence studies and file output for configured runs.

Time step policy: tau is exactly the configured value (or rule value), the run
takes n = round(t_end / tau) steps (at least one), and the final time is
n * tau. Errors against exact solutions are measured at that final time.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import solver1d, solver2d
from .config import RunConfig
from .diagnostics import EnergyReport, discrete_energy, dissipation, error_norms, observed_order, total_mass
from .errors import ConfigError
from .grid import (Grid2D, build_grid_1d, cell_average_init_1d, cell_average_init_2d, uniform_grid_1d,
                   uniform_grid_2d)
from .model import static_terms
from .problems import Problem, get_problem, inline_problem
from .state import SolverState

log = logging.getLogger(__name__)


@dataclass
class RunPlan:
    """A config resolved against its problem's defaults."""

    config: RunConfig
    problem: Problem
    grid: object
    tau: float
    tau_rule: str
    tau_coef: float
    n_steps: int
    scheme: str
    snapshot_steps: tuple

    @property
    def t_final(self) -> float:
        return self.n_steps * self.tau

    @property
    def h(self) -> float:
        if isinstance(self.grid, Grid2D):
            return float(max(self.grid.gx.widths.max(), self.grid.gy.widths.max()))
        return float(self.grid.widths.max())


@dataclass
class RunResult:
    plan: RunPlan
    state: SolverState
    energy: list
    snapshots: list  # (step, time, rho)
    metadata: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.plan.grid

    @property
    def rho(self) -> np.ndarray:
        return self.state.rho

    @property
    def limiter_events(self) -> list:
        return [e for rec in self.state.log for e in rec.events]

    @property
    def step_records(self) -> list:
        return list(self.state.log)


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    l1: float
    l1_order: float | None
    linf: float
    linf_order: float | None

    def csv_row(self) -> str:
        f = lambda v: "" if v is None else f"{v:.17g}"
        return f"{self.N},{self.l1:.17g},{f(self.l1_order)},{self.linf:.17g},{f(self.linf_order)}"


def resolve_problem(config: RunConfig) -> Problem:
    if config.inline is not None:
        return inline_problem(config.inline)
    return get_problem(config.problem, **config.params)


def build_grid(config: RunConfig, problem: Problem):
    dom = problem.spec.domain
    if problem.dim == 1:
        if config.widths is not None:
            return build_grid_1d(dom[0], dom[1], config.widths)
        n = config.N if config.N is not None else problem.N
        return uniform_grid_1d(dom[0], dom[1], int(n))
    default = problem.N if isinstance(problem.N, (tuple, list)) else (problem.N, problem.N)
    nx = config.Nx or config.N or default[0]
    ny = config.Ny or config.N or default[1]
    (ax, bx), (ay, by) = dom
    return uniform_grid_2d(ax, bx, int(nx), ay, by, int(ny))


def plan_run(config: RunConfig) -> RunPlan:
    config.validate()
    problem = resolve_problem(config)
    grid = build_grid(config, problem)
    if config.tau is not None:
        rule, coef = "fixed", float(config.tau)
    else:
        rule = config.tau_rule or problem.tau_rule
        coef = float(config.tau_coef if config.tau_coef is not None else problem.tau_coef)
    plan_h = RunPlan(config, problem, grid, 1.0, rule, coef, 1, "first", ())
    tau = {"fixed": coef, "h": coef * plan_h.h, "h2": coef * plan_h.h**2}[rule]
    t_end = float(config.t_end if config.t_end is not None else problem.t_end)
    n_steps = max(1, int(round(t_end / tau)))
    if config.snapshot_times is not None:
        snaps = config.snapshot_times
        if any(t > t_end * (1 + 1e-12) for t in snaps):
            raise ConfigError("snapshot times must not exceed t_end")
    else:
        # problem defaults past a shortened t_end are dropped
        snaps = [t for t in problem.snapshot_times if t <= t_end * (1 + 1e-12)]
    snap_steps = tuple(sorted({min(n_steps, int(round(t / tau))) for t in snaps} | {n_steps}))
    scheme = config.scheme or problem.scheme
    return RunPlan(config, problem, grid, tau, rule, coef, n_steps, scheme, snap_steps)


def initial_density(problem: Problem, grid) -> np.ndarray:
    if isinstance(grid, Grid2D):
        return cell_average_init_2d(problem.spec.rho0, grid)
    return cell_average_init_1d(problem.spec.rho0, grid)


def advance(state: SolverState, grid, spec, tau: float, scheme: str, limiter: bool) -> SolverState:
    """One step; a second-order run falls back to the first-order stepper while rho^{n-1} is missing."""
    two_d = isinstance(grid, Grid2D)
    mod = solver2d if two_d else solver1d
    sfx = "2d" if two_d else "1d"
    if scheme == "explicit":
        return getattr(mod, f"step_explicit_euler_{sfx}")(state, grid, spec, tau)
    if scheme == "second" and state.rho_prev is not None:
        return getattr(mod, f"step_second_order_{sfx}")(state, grid, spec, tau, limiter=limiter)
    return getattr(mod, f"step_first_order_{sfx}")(state, grid, spec, tau)


def _energy_or_nan(rho, grid, spec) -> float:
    if np.any(rho < 0):
        return math.nan
    return discrete_energy(rho, grid, spec)


def run(config: RunConfig, plan: RunPlan | None = None) -> RunResult:
    plan = plan or plan_run(config)
    spec, grid, tau = plan.problem.spec, plan.grid, plan.tau
    rho0 = initial_density(plan.problem, grid)
    state = SolverState(rho0, limiter_cap=config.limiter_cap)
    energy = [EnergyReport(0, 0.0, total_mass(rho0, grid), _energy_or_nan(rho0, grid, spec), 0.0)]
    snapshots = [(0, 0.0, rho0.copy())] if 0 in plan.snapshot_steps else []
    for n in range(1, plan.n_steps + 1):
        state = advance(state, grid, spec, tau, plan.scheme, config.limiter)
        # keep the step count exact: time = n * tau, not an accumulated sum
        state.time = n * tau
        rho = state.rho
        diss = dissipation(rho, state.mobility, grid) if not np.any(rho < 0) else math.nan
        energy.append(EnergyReport(n, state.time, total_mass(rho, grid), _energy_or_nan(rho, grid, spec), diss))
        if n in plan.snapshot_steps:
            snapshots.append((n, state.time, rho.copy()))
    return RunResult(plan, state, energy, snapshots, metadata(plan, rho0))


def metadata(plan: RunPlan, rho0) -> dict:
    grid = plan.grid
    st = static_terms(grid, plan.problem.spec)
    return {
        "problem": plan.problem.name,
        "params": plan.problem.params or plan.config.params,
        "scheme": plan.scheme,
        "N": list(grid.shape) if isinstance(grid, Grid2D) else grid.n,
        "tau": plan.tau,
        "tau_rule": plan.tau_rule,
        "tau_coef": plan.tau_coef,
        "steps": plan.n_steps,
        "t_final": plan.t_final,
        "limiter": bool(plan.config.limiter) if plan.scheme == "second" else "n/a",
        "kernel_self_term": "skipped" if st.skipped_self_term else "none",
        "initial_mass": total_mass(rho0, grid),
    }


def exact_averages(problem: Problem, grid, t: float) -> np.ndarray:
    if problem.exact is None:
        raise ConfigError(f"problem {problem.name!r} has no exact solution")
    if isinstance(grid, Grid2D):
        return cell_average_init_2d(lambda x, y: problem.exact(x, y, t), grid, points=6)
    return cell_average_init_1d(lambda x: problem.exact(x, t), grid, points=6)


def convergence_study(config: RunConfig, levels) -> list[ConvergenceRow]:
    """Errors at t = n tau against exact cell averages; orders log2(e_N / e_2N) between successive rows."""
    levels = [int(n) for n in levels]
    if len(levels) < 1:
        raise ConfigError("need at least one refinement level")
    if config.widths is not None:
        raise ConfigError("convergence studies use uniform grids; drop 'widths'")
    rows = []
    prev = None
    for n in levels:
        cfg = config.replace(N=n, Nx=None, Ny=None)
        plan = plan_run(cfg)
        res = run(cfg, plan)
        l1, linf = error_norms(res.rho, exact_averages(plan.problem, plan.grid, res.state.time), plan.grid)
        if prev is None:
            rows.append(ConvergenceRow(n, l1, None, linf, None))
        else:
            # ratio of successive levels need not be 2
            r = math.log2(n / prev[0])
            rows.append(ConvergenceRow(n, l1, observed_order(prev[1], l1) / r, linf,
                                       observed_order(prev[2], linf) / r))
        prev = (n, l1, linf)
    return rows


# ---- output -------------------------------------------------------------------

def _header(meta: dict) -> str:
    return "# " + json.dumps(meta, sort_keys=True, default=float)


def _fmt(v) -> str:
    return f"{v:.17g}"


def write_energy_csv(path, result: RunResult):
    lines = [_header(result.metadata), "step,time,mass,energy,dissipation"]
    lines += [r.csv_row() for r in result.energy]
    Path(path).write_text("\n".join(lines) + "\n")


def write_snapshot_csv(path, result: RunResult, step: int, time: float, rho):
    grid = result.grid
    meta = dict(result.metadata, step=step, time=time)
    if isinstance(grid, Grid2D):
        X, Y = grid.mesh()
        cols = "x,y,rho"
        body = [f"{_fmt(x)},{_fmt(y)},{_fmt(r)}" for x, y, r in
                zip(X.ravel(order="F"), Y.ravel(order="F"), np.asarray(rho).ravel(order="F"))]
    else:
        cols = "x,rho"
        body = [f"{_fmt(x)},{_fmt(r)}" for x, r in zip(grid.centers, rho)]
    Path(path).write_text("\n".join([_header(meta), cols] + body) + "\n")


def write_limiter_log(path, result: RunResult):
    lines = [_header(result.metadata), "step,anchor,size,theta,mass_before,mass_after"]
    for e in result.limiter_events:
        anchor = ":".join(map(str, e.anchor)) if isinstance(e.anchor, tuple) else str(e.anchor)
        lines.append(f"{e.step},{anchor},{e.size},{_fmt(e.theta)},{_fmt(e.mass_before)},{_fmt(e.mass_after)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_step_log(path, result: RunResult):
    lines = [_header(result.metadata), "step,clamped,negatives,limited"]
    lines += [f"{r.step},{r.clamped},{r.negatives},{int(r.limited)}" for r in result.step_records]
    Path(path).write_text("\n".join(lines) + "\n")


def write_state(path, result: RunResult):
    s = result.state
    prev = s.rho_prev if s.rho_prev is not None else np.full_like(s.rho, np.nan)
    np.savez(path, rho=s.rho, rho_prev=prev, time=s.time, step=s.step_index)


def snapshot_name(step: int, time: float) -> str:
    return f"snapshot_{step:06d}.csv"


def emit_outputs(result: RunResult, outdir) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "energy.csv", out / "limiter.csv", out / "steps.csv", out / "state.npz"]
    write_energy_csv(written[0], result)
    write_limiter_log(written[1], result)
    write_step_log(written[2], result)
    write_state(written[3], result)
    for step, time, rho in result.snapshots:
        p = out / snapshot_name(step, time)
        write_snapshot_csv(p, result, step, time, rho)
        written.append(p)
    return written


def convergence_table_text(rows: list[ConvergenceRow]) -> str:
    f = lambda v: "-" if v is None else f"{v:.4f}"
    lines = [f"{'N':>6} {'l1':>12} {'order':>8} {'linf':>12} {'order':>8}"]
    for r in rows:
        lines.append(f"{r.N:>6} {r.l1:>12.5e} {f(r.l1_order):>8} {r.linf:>12.5e} {f(r.linf_order):>8}")
    return "\n".join(lines) + "\n"


def emit_convergence(rows: list[ConvergenceRow], outdir, meta: dict) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    csv = out / "convergence.csv"
    txt = out / "convergence.txt"
    csv.write_text("\n".join([_header(meta), "N,l1,l1_order,linf,linf_order"] + [r.csv_row() for r in rows]) + "\n")
    txt.write_text(convergence_table_text(rows))
    return [csv, txt]
