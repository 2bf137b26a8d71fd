"""Random problem generators and dense reference solvers shared by the tests."""

import numpy as np

from fvflow.grid import build_grid_1d, uniform_grid_2d
from fvflow.model import ProblemSpec


def random_grid_1d(rng, n=None, a=-1.0, b=2.0):
    n = int(rng.integers(2, 40)) if n is None else n
    w = rng.uniform(0.2, 1.0, n)
    return build_grid_1d(a, b, w / w.sum() * (b - a))


def random_spec_1d(rng, a=-1.0, b=2.0, with_w=True, amp=2.0):
    c = rng.uniform(-amp, amp, 3)
    k = rng.uniform(0.5, 3.0)
    V = lambda x: c[0] * np.cos(k * x) + c[1] * x
    W = None
    if with_w:
        d = rng.uniform(-1.0, 1.0, 2)
        W = lambda s: d[0] * np.cos(2 * s) + d[1] * np.exp(-s * s)
    return ProblemSpec(rho0=lambda x: 1 + 0 * x, domain=(a, b), V=V, W=W, intensity=float(c[2]))


def random_density(rng, shape, zeros=0.2):
    rho = rng.uniform(0, 3, shape) * (rng.random(shape) > zeros)
    rho.flat[int(rng.integers(rho.size))] += 0.5  # positive mass
    return rho


def random_problem_2d(rng, with_w=True, nmax=8):
    nx, ny = int(rng.integers(1, nmax)), int(rng.integers(1, nmax))
    if nx * ny < 2:
        nx = 2
    g = uniform_grid_2d(0.0, rng.uniform(0.5, 3.0), nx, 0.0, rng.uniform(0.5, 3.0), ny)
    c = rng.uniform(-1.5, 1.5, 3)
    V = lambda x, y: c[0] * np.sin(x + 2 * y) + c[1] * x * y
    W = (lambda s, t: np.cos(s) * np.cos(t) + 0.3 * np.exp(-s * s - t * t)) if with_w else None
    spec = ProblemSpec(rho0=lambda x, y: 1 + 0 * x, domain=((g.gx.a, g.gx.b), (g.gy.a, g.gy.b)), V=V, W=W,
                       intensity=float(c[2]))
    return g, spec


def dense_first_order_1d(grid, mob, rho, tau, source=None):
    """Independent dense assembly and solve of the implicit step in G."""
    n = grid.n
    A = np.zeros((n, n))
    for j in range(n):
        A[j, j] = grid.widths[j] * mob.at_centers[j]
    for j in range(n - 1):
        lam = tau / grid.half_widths[j] * mob.at_interfaces[j]
        A[j, j] += lam
        A[j + 1, j + 1] += lam
        A[j, j + 1] -= lam
        A[j + 1, j] -= lam
    b = grid.widths * rho
    if source is not None:
        b = b + grid.widths * tau * source
    return mob.at_centers * np.linalg.solve(A, b), A, b
