"""Built-in benchmark problems and inline (expression-based) problem specs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ConfigError
from .model import ProblemSpec


@dataclass(frozen=True)
class Problem:
    """A ProblemSpec plus the run defaults that go with it."""

    name: str
    spec: ProblemSpec
    N: int | tuple  # 1D cell count, or (Nx, Ny)
    tau_rule: str = "fixed"  # "fixed" | "h" | "h2"
    tau_coef: float = 0.1  # the fixed tau, or the c in c*h / c*h^2
    t_end: float = 1.0
    snapshot_times: tuple = ()
    scheme: str = "first"
    exact: Callable | None = None  # exact(x, t) or exact(x, y, t)
    description: str = ""
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.spec.dim


def _accuracy1d(**params):
    def F(x, t):
        c = np.cos(x)
        return np.pi * np.exp(-2 * t) * (2 * c**2 + 2 * c - 1) + np.exp(-t) * (2 * c**2 + 2 * c - 3)

    spec = ProblemSpec(rho0=lambda x: 2 + np.cos(x), domain=(-np.pi, np.pi), V=np.cos, W=np.cos,
                       source=F, name="accuracy1d")
    return Problem("accuracy1d", spec, N=80, tau_rule="h2", tau_coef=1.0, t_end=1.0,
                   snapshot_times=(0.0, 1.0), exact=lambda x, t: np.exp(-t) * (2 + np.cos(x)),
                   description="manufactured solution e^{-t}(2+cos x), V = W = cos x, on [-pi, pi]")


def _fokker_planck(**params):
    # plateau of height (1/7) * int_{-5}^{5} e^{-x^2/2} dx on [-3.5, 3.5]
    height = integrate.quad(lambda x: np.exp(-x * x / 2), -5.0, 5.0, epsabs=1e-13, epsrel=1e-13)[0] / 7.0
    spec = ProblemSpec(rho0=lambda x: np.where(np.abs(x) <= 3.5, height, 0.0), domain=(-5.0, 5.0),
                       V=lambda x: 0.5 * x**2, name="fokker_planck")
    return Problem("fokker_planck", spec, N=200, tau_coef=0.1, t_end=4.0,
                   snapshot_times=(0.0, 0.2, 0.5, 1.0, 2.0, 4.0),
                   description="linear Fokker-Planck, V = x^2/2, plateau initial data on [-5, 5]",
                   params={"plateau_height": height})


def _doi_onsager(alpha=3.0, **params):
    alpha = float(alpha)
    spec = ProblemSpec(rho0=lambda x: (x + 1) / (2 * np.pi * (np.pi + 1)), domain=(0.0, 2 * np.pi),
                       W=lambda s: np.sin(s) ** 2, intensity=alpha, name="doi_onsager")
    if alpha <= 4:
        t_end, snaps = 30.0, (0.0, 0.5, 5.0, 15.0, 25.0, 30.0)
    else:
        t_end, snaps = 35.0, (0.0, 0.5, 1.0, 5.0, 25.0, 35.0)
    return Problem("doi_onsager", spec, N=80, tau_coef=0.1, t_end=t_end, snapshot_times=snaps,
                   description="Doi-Onsager with Maier-Saupe kernel sin^2, zero-flux on [0, 2 pi]",
                   params={"alpha": alpha})


def _accuracy2d(**params):
    def F(x, y, t):
        sx, sy, cx, cy = np.sin(x), np.sin(y), np.cos(x), np.cos(y)
        return np.exp(-t) * (2 * sx**2 * sy**2 + 5 * sx * sy - cx**2 * sy**2 - sx**2 * cy**2 - 2)

    half = np.pi / 2
    spec = ProblemSpec(rho0=lambda x, y: 2 + np.sin(x) * np.sin(y), domain=((-half, half), (-half, half)),
                       V=lambda x, y: np.sin(x) * np.sin(y), source=F, name="accuracy2d")
    return Problem("accuracy2d", spec, N=(40, 40), tau_rule="h2", tau_coef=0.1, t_end=1.0,
                   snapshot_times=(0.0, 1.0),
                   exact=lambda x, y, t: np.exp(-t) * (2 + np.sin(x) * np.sin(y)),
                   description="manufactured solution e^{-t}(2+sin x sin y), V = sin x sin y")


def log_kernel(s, t):
    with np.errstate(divide="ignore"):
        return np.log(np.hypot(s, t)) / (2 * np.pi)


def _keller_segel(case="sub", chi=1.0, **params):
    if case not in ("sub", "super"):
        raise ConfigError(f"keller_segel case must be 'sub' or 'super', got {case!r}")
    if case == "sub":
        height, L, t_end, snaps = 2 * (np.pi - 0.2), 5.0, 16.0, (0.0, 2.0, 8.0, 12.0, 16.0)
    else:
        height, L, t_end, snaps = 2 * (np.pi + 0.2), 1.5, 2.0, (0.0, 0.5, 1.0, 1.5, 2.0)

    def rho0(x, y):
        return np.where((np.abs(x) <= 1) & (np.abs(y) <= 1), height, 0.0)

    spec = ProblemSpec(rho0=rho0, domain=((-L, L), (-L, L)), W=log_kernel, intensity=float(chi),
                       name=f"keller_segel_{case}")
    return Problem("keller_segel", spec, N=(51, 51), tau_coef=0.01, t_end=t_end, snapshot_times=snaps,
                   description=f"parabolic-elliptic Keller-Segel, {case}-critical mass 8(pi {'-' if case == 'sub' else '+'} 0.2)",
                   params={"case": case, "chi": float(chi)})


def _touchdown1d(**params):
    # exact solution e^{t}(1 - cos x) touches zero at x = 0 while the attractive
    # cos kernel pulls mass towards it; W*rho = -pi e^t cos x
    def F(x, t):
        c, s = np.cos(x), np.sin(x)
        return np.exp(t) * (1 - 2 * c) + np.pi * np.exp(2 * t) * (1 - c - 2 * s**2)

    spec = ProblemSpec(rho0=lambda x: 1 - np.cos(x), domain=(-np.pi, np.pi), W=np.cos, source=F,
                       name="touchdown1d")
    return Problem("touchdown1d", spec, N=160, tau_rule="h", tau_coef=1.0, t_end=1.0, scheme="second",
                   snapshot_times=(0.0, 1.0), exact=lambda x, t: np.exp(t) * (1 - np.cos(x)),
                   description="manufactured solution e^{t}(1-cos x), W = cos x, touching zero at x = 0")


BUILTINS = {
    "accuracy1d": _accuracy1d,
    "fokker_planck": _fokker_planck,
    "doi_onsager": _doi_onsager,
    "accuracy2d": _accuracy2d,
    "keller_segel": _keller_segel,
    "touchdown1d": _touchdown1d,
}


def builtin_problems() -> dict:
    """Name -> factory(**params) -> Problem."""
    return dict(BUILTINS)


def get_problem(name: str, **params) -> Problem:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown problem {name!r}; known: {', '.join(sorted(BUILTINS))}") from None
    return factory(**params)


_INLINE_KEYS = {"dim", "domain", "V", "W", "intensity", "rho0", "source", "exact", "N", "tau", "t_end", "name"}


def inline_problem(d: dict) -> Problem:
    """Problem from expression strings.

    1D variables: x (V, rho0), s (W), x, t (source, exact).
    2D variables: x, y (V, rho0), sx, sy (W), x, y, t (source, exact).
    """
    import sympy

    unknown = set(d) - _INLINE_KEYS
    if unknown:
        raise ConfigError(f"unknown inline problem keys: {sorted(unknown)}")
    dim = int(d.get("dim", 1))
    if dim not in (1, 2):
        raise ConfigError("inline dim must be 1 or 2")
    names = {1: {"V": "x", "rho0": "x", "W": "s", "source": "x t", "exact": "x t"},
             2: {"V": "x y", "rho0": "x y", "W": "sx sy", "source": "x y t", "exact": "x y t"}}[dim]

    def compile_expr(key):
        text = d.get(key)
        if text is None:
            return None
        args = sympy.symbols(names[key], seq=True)
        try:
            expr = sympy.sympify(str(text))
        except (sympy.SympifyError, TypeError) as exc:
            raise ConfigError(f"cannot parse inline {key} = {text!r}") from exc
        extra = expr.free_symbols - set(args)
        if extra:
            raise ConfigError(f"inline {key} uses unknown symbols {sorted(map(str, extra))}")
        return sympy.lambdify(args, expr, modules="numpy")

    if "rho0" not in d or "domain" not in d:
        raise ConfigError("inline problem needs 'rho0' and 'domain'")
    domain = tuple(d["domain"]) if dim == 1 else tuple(tuple(p) for p in d["domain"])
    spec = ProblemSpec(rho0=compile_expr("rho0"), domain=domain, V=compile_expr("V"), W=compile_expr("W"),
                       intensity=float(d.get("intensity", 1.0)), source=compile_expr("source"),
                       name=d.get("name", "inline"))
    default_n = 50 if dim == 1 else (20, 20)
    return Problem(d.get("name", "inline"), spec, N=d.get("N", default_n), tau_coef=float(d.get("tau", 0.1)),
                   t_end=float(d.get("t_end", 1.0)), exact=compile_expr("exact"),
                   description="inline problem")
