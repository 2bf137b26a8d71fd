import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fvflow.diagnostics import discrete_energy_1d, dissipation_1d, total_mass
from fvflow.errors import FVFlowError
from fvflow.grid import uniform_grid_1d
from fvflow.model import MobilityProfile, ProblemSpec, mobility_profile_1d
from fvflow.solver1d import (BandedSystem1D, assemble_first_order_1d, predictor_1d, solve_tridiagonal,
                             step_explicit_euler_1d, step_first_order_1d, step_second_order_1d)
from fvflow.state import SolverState

from helpers import dense_first_order_1d, random_density, random_grid_1d, random_spec_1d

flat = lambda x: 1 + 0 * x


def two_cell():
    g = uniform_grid_1d(0.0, 2.0, 2)
    spec = ProblemSpec(rho0=flat, domain=(0.0, 2.0))
    return g, spec


def test_assembly_two_cells():
    g, _ = two_cell()
    mob = MobilityProfile(np.ones(2), np.ones(1))
    sys_ = assemble_first_order_1d(g, mob, np.array([1.0, 0.0]), 1.0)
    np.testing.assert_array_equal(sys_.to_dense(), [[2, -1], [-1, 2]])
    np.testing.assert_array_equal(sys_.rhs, [1, 0])
    assert sys_.is_strictly_dominant()


def test_assembly_small_tau_is_identity_step():
    g = uniform_grid_1d(0, 1, 5)
    mob = MobilityProfile(np.linspace(1, 2, 5), np.linspace(1.1, 1.9, 4))
    rho = np.array([0.1, 0.4, 0.0, 2.0, 1.0])
    sys_ = assemble_first_order_1d(g, mob, rho, 1e-300)
    np.testing.assert_array_equal(sys_.diag, g.widths * mob.at_centers)
    np.testing.assert_allclose(solve_tridiagonal(sys_), rho / mob.at_centers, rtol=1e-15, atol=1e-290)


def test_assembly_uniform_state():
    g = uniform_grid_1d(0, 1, 6)
    mob = MobilityProfile(np.ones(6), np.ones(5))
    sys_ = assemble_first_order_1d(g, mob, np.full(6, 3.0), 0.7)
    np.testing.assert_allclose(sys_.rhs, g.widths * 3.0)
    np.testing.assert_allclose(solve_tridiagonal(sys_), 3.0, rtol=1e-14)


def test_assembly_rejects_nonpositive_tau():
    g, _ = two_cell()
    with pytest.raises(ValueError):
        assemble_first_order_1d(g, MobilityProfile(np.ones(2), np.ones(1)), np.ones(2), 0.0)


def test_tridiagonal_small_cases():
    ident = BandedSystem1D(np.zeros(3), np.ones(3), np.zeros(3), np.array([1.0, -2.0, 3.0]))
    np.testing.assert_array_equal(solve_tridiagonal(BandedSystem1D(np.zeros(2), np.ones(3), np.zeros(2),
                                                                   ident.rhs)), ident.rhs)
    two = BandedSystem1D(np.array([-1.0]), np.array([2.0, 2.0]), np.array([-1.0]), np.array([1.0, 0.0]))
    np.testing.assert_allclose(solve_tridiagonal(two), [2 / 3, 1 / 3], rtol=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_tridiagonal_against_dense(seed):
    rng = np.random.default_rng(seed)
    n = 6
    sub, sup = rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n - 1)
    off = np.zeros(n)
    off[1:] += np.abs(sub)
    off[:-1] += np.abs(sup)
    diag = off + rng.uniform(0.01, 2, n)
    sys_ = BandedSystem1D(sub, diag, sup, rng.normal(size=n))
    x = solve_tridiagonal(sys_)
    np.testing.assert_allclose(x, np.linalg.solve(sys_.to_dense(), sys_.rhs), rtol=1e-12,
                               atol=1e-12 * np.max(np.abs(x)))
    assert np.max(np.abs(sys_.matvec(x) - sys_.rhs)) <= 1e-12 * np.max(np.abs(sys_.rhs)) * 10


def test_tridiagonal_zero_pivot():
    with pytest.raises(FVFlowError):
        solve_tridiagonal(BandedSystem1D(np.array([1.0]), np.array([1.0, 1.0]), np.array([1.0]), np.ones(2)))


def test_first_order_two_cells():
    g, spec = two_cell()
    out = step_first_order_1d(SolverState(np.array([1.0, 0.0])), g, spec, 1.0)
    np.testing.assert_allclose(out.rho, [2 / 3, 1 / 3], rtol=1e-15)
    assert total_mass(out.rho, g) == pytest.approx(1.0, rel=1e-15)
    assert out.time == 1.0 and out.step_index == 1
    np.testing.assert_array_equal(out.rho_prev, [1.0, 0.0])


@pytest.mark.parametrize("tau", [1e-3, 1.0, 1e3])
def test_first_order_preserves_steady_state(tau):
    g = uniform_grid_1d(-4, 4, 50)
    spec = ProblemSpec(rho0=flat, domain=(-4, 4), V=lambda x: x**2 / 2 + np.sin(3 * x))
    rho = 0.7 * np.exp(-spec.V(g.centers))
    out = step_first_order_1d(SolverState(rho), g, spec, tau)
    np.testing.assert_allclose(out.rho, rho, rtol=1e-12, atol=0)


@given(st.integers(0, 2**32 - 1))
def test_first_order_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    g, spec = random_grid_1d(rng), random_spec_1d(rng)
    rho = random_density(rng, g.n)
    tau = float(10.0 ** rng.uniform(-3, 3))
    out = step_first_order_1d(SolverState(rho), g, spec, tau)
    want, A, _ = dense_first_order_1d(g, mobility_profile_1d(g, spec, rho), rho, tau)
    np.testing.assert_allclose(out.rho, want, rtol=1e-9, atol=1e-12 * rho.max())


def test_first_order_huge_tau_stays_positive(rng):
    g = random_grid_1d(rng, 30)
    spec = random_spec_1d(rng)
    for _ in range(20):
        rho = random_density(rng, g.n, zeros=0.5)
        out = step_first_order_1d(SolverState(rho), g, spec, 1e6)
        assert out.rho.min() >= -1e-14 * rho.max()


def test_source_enters_at_new_time():
    g, _ = two_cell()
    spec = ProblemSpec(rho0=flat, domain=(0.0, 2.0), source=lambda x, t: t + 0 * x)
    out = step_first_order_1d(SolverState(np.array([1.0, 1.0]), time=0.5), g, spec, 0.25)
    # uniform source keeps the state uniform: rho + tau F(t + tau)
    np.testing.assert_allclose(out.rho, 1.0 + 0.25 * 0.75, rtol=1e-15)


def test_explicit_euler_examples():
    g, spec = two_cell()
    out = step_explicit_euler_1d(SolverState(np.array([1.0, 0.0])), g, spec, 0.1)
    np.testing.assert_allclose(out.rho, [0.9, 0.1], rtol=1e-15)
    out = step_explicit_euler_1d(SolverState(np.array([1.0, 0.0])), g, spec, 2.0)
    np.testing.assert_allclose(out.rho, [-1.0, 2.0], rtol=1e-15)
    out = step_explicit_euler_1d(SolverState(np.full(2, 0.4)), g, spec, 5.0)
    np.testing.assert_array_equal(out.rho, 0.4)


def test_explicit_and_implicit_agree_for_tiny_tau(rng):
    g = uniform_grid_1d(0, 1, 30)
    # data satisfying the zero-flux condition, so tau^2 A^2 rho stays O(tau^2)
    spec = ProblemSpec(rho0=flat, domain=(0, 1), V=lambda x: np.sin(2 * x))
    rho = np.exp(-spec.V(g.centers)) * (1.0 + 0.5 * np.cos(np.pi * g.centers))
    a = step_explicit_euler_1d(SolverState(rho), g, spec, 1e-6).rho
    b = step_first_order_1d(SolverState(rho), g, spec, 1e-6).rho
    assert np.max(np.abs(a - b)) <= 1e-9 * rho.max()


def cn_oracle(rho_n, tau):
    """Crank-Nicolson system for rho^{n+1} on the 2-cell, h = 1, M = 1 grid."""
    L = np.array([[1.0, -1.0], [-1.0, 1.0]])
    I = np.eye(2)
    return np.linalg.solve(I + tau / 2 * L, (I - tau / 2 * L) @ rho_n)


def test_second_order_two_cells():
    g, spec = two_cell()
    state = SolverState(np.array([1.0, 0.0]), rho_prev=np.array([1.0, 0.0]), step_index=1)
    rho_star, _ = predictor_1d(state, g, spec, 1.0)
    # predictor rows [1.5, -0.5 | 1], [-0.5, 1.5 | 0]
    np.testing.assert_allclose(rho_star, np.linalg.solve([[1.5, -0.5], [-0.5, 1.5]], [1.0, 0.0]), rtol=1e-15)
    np.testing.assert_allclose(rho_star, [0.75, 0.25], rtol=1e-15)
    out = step_second_order_1d(state, g, spec, 1.0)
    np.testing.assert_allclose(out.rho, [0.5, 0.5], rtol=1e-15)
    np.testing.assert_allclose(out.rho, cn_oracle(np.array([1.0, 0.0]), 1.0), rtol=1e-15)


@pytest.mark.parametrize("tau", [0.1, 0.5, 1.0])
def test_second_order_linear_case_is_crank_nicolson(tau):
    g, spec = two_cell()
    rho = np.array([0.8, 0.3])
    out = step_second_order_1d(SolverState(rho, rho_prev=rho.copy()), g, spec, tau)
    np.testing.assert_allclose(out.rho, cn_oracle(rho, tau), rtol=1e-14)


def test_second_order_needs_history():
    g, spec = two_cell()
    with pytest.raises(ValueError):
        step_second_order_1d(SolverState(np.ones(2)), g, spec, 0.1)


def test_second_order_preserves_steady_state():
    g = uniform_grid_1d(-3, 3, 40)
    spec = ProblemSpec(rho0=flat, domain=(-3, 3), V=lambda x: np.cos(2 * x) + x)
    rho = 2.0 * np.exp(-spec.V(g.centers))
    state = SolverState(rho, rho_prev=rho.copy())
    rho_star, _ = predictor_1d(state, g, spec, 0.7)
    np.testing.assert_allclose(rho_star, rho, rtol=1e-13)
    np.testing.assert_allclose(step_second_order_1d(state, g, spec, 0.7).rho, rho, rtol=1e-13)


@given(st.integers(0, 2**32 - 1))
def test_corrector_identity(seed):
    rng = np.random.default_rng(seed)
    g, spec = random_grid_1d(rng), random_spec_1d(rng)
    rho = random_density(rng, g.n, zeros=0.0) + 0.5
    prev = rho * rng.uniform(0.9, 1.1, g.n)
    state = SolverState(rho, rho_prev=prev)
    tau = 1e-3
    rho_star, _ = predictor_1d(state, g, spec, tau)
    out = step_second_order_1d(state, g, spec, tau, limiter=False)
    if out.rho.min() >= 0:
        np.testing.assert_array_equal(out.rho, 2.0 * rho_star - rho)
        np.testing.assert_allclose(out.rho + rho, 2.0 * rho_star, rtol=1e-15, atol=1e-15 * rho.max())


def test_second_order_negative_values_go_to_limiter(caplog):
    # plateau data with tau = 1 makes the corrector overshoot below zero at the plateau edges
    g = uniform_grid_1d(-5, 5, 200)
    spec = ProblemSpec(rho0=flat, domain=(-5, 5), V=lambda x: x**2 / 2)
    rho0 = np.where(np.abs(g.centers) <= 3.5, 0.358, 0.0)
    s = step_first_order_1d(SolverState(rho0), g, spec, 1.0)
    with caplog.at_level(logging.WARNING, logger="fvflow"):
        raw = step_second_order_1d(s, g, spec, 1.0, limiter=False)
    assert raw.rho.min() < 0
    assert any("no limiter" in r.message for r in caplog.records)
    limited = step_second_order_1d(s, g, spec, 1.0, limiter=True)
    assert limited.rho.min() >= 0
    assert total_mass(limited.rho, g) == pytest.approx(total_mass(raw.rho, g), rel=1e-14)
    rec = limited.log[-1]
    assert rec.limited and rec.events and all(e.step == 2 for e in rec.events)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["first", "second", "explicit"]))
def test_mass_conserved_every_step(seed, scheme):
    rng = np.random.default_rng(seed)
    g, spec = random_grid_1d(rng), random_spec_1d(rng, amp=1.0)
    rho = random_density(rng, g.n)
    m0 = total_mass(rho, g)
    tau = 0.2 * g.widths.min() ** 2 if scheme == "explicit" else float(10 ** rng.uniform(-3, 1))
    state = SolverState(rho)
    for _ in range(5):
        if scheme == "first" or state.rho_prev is None:
            state = step_first_order_1d(state, g, spec, tau)
        elif scheme == "second":
            state = step_second_order_1d(state, g, spec, tau)
        else:
            state = step_explicit_euler_1d(state, g, spec, tau)
        assert abs(total_mass(state.rho, g) - m0) <= 1e-12 * m0


@given(st.integers(0, 2**32 - 1))
def test_energy_step_inequality_without_interaction(seed):
    rng = np.random.default_rng(seed)
    g, spec = random_grid_1d(rng), random_spec_1d(rng, with_w=False)
    rho = random_density(rng, g.n, zeros=0.3)
    tau = float(10 ** rng.uniform(-3, 3))
    out = step_first_order_1d(SolverState(rho), g, spec, tau)
    E0, E1 = discrete_energy_1d(rho, g, spec), discrete_energy_1d(out.rho, g, spec)
    I = dissipation_1d(out.rho, out.mobility, g)
    assert I >= 0
    assert E1 - E0 <= -tau * I + 1e-12 * max(1.0, abs(E0))


def test_every_assembled_system_is_dominant(rng):
    for _ in range(50):
        g, spec = random_grid_1d(rng), random_spec_1d(rng)
        rho = random_density(rng, g.n)
        mob = mobility_profile_1d(g, spec, rho)
        assert assemble_first_order_1d(g, mob, rho, float(10 ** rng.uniform(-4, 4))).is_strictly_dominant()


@given(st.integers(0, 2**32 - 1))
def test_difference_residual_matches_matvec(seed):
    rng = np.random.default_rng(seed)
    g = random_grid_1d(rng)
    spec = random_spec_1d(rng, a=g.a, b=g.b)
    rho = random_density(rng, g.n)
    mob = mobility_profile_1d(g, spec, rho)
    sys_ = assemble_first_order_1d(g, mob, rho, float(rng.uniform(0.01, 10.0)))
    x = rng.uniform(0, 2, g.n)
    plain = BandedSystem1D(sys_.sub, sys_.diag, sys_.sup, sys_.rhs)
    scale = np.max(np.abs(sys_.diag)) * np.max(np.abs(x)) + np.max(np.abs(sys_.rhs))
    np.testing.assert_allclose(sys_.residual(x), plain.residual(x), atol=1e-13 * scale)


def test_refinement_keeps_equilibrium_exact():
    g = uniform_grid_1d(-1, 1, 30)
    spec = ProblemSpec(rho0=flat, domain=(-1, 1), V=lambda x: 4 * np.cos(3 * x) - 2 * x)
    rho = np.exp(-spec.V(g.centers))
    mob = mobility_profile_1d(g, spec, rho)
    sys_ = assemble_first_order_1d(g, mob, rho, 1.0)
    np.testing.assert_array_equal(solve_tridiagonal(sys_), np.ones(30))
    np.testing.assert_array_equal(step_first_order_1d(SolverState(rho), g, spec, 1.0).rho, rho)
