"""Model problems: -(a u')' + b u' + c u = f on an interval with mixed BCs.

Coefficients and data are vectorized callables of the spatial coordinate.
Built-in problems carry closed-form solutions, with the flux sigma = -a u'
and its derivative supplied through the identity sigma' = f - b u' - c u so
no symbolic differentiation of piecewise or steep expressions is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Dirichlet",
    "Neumann",
    "ExactSolution",
    "ProblemSpec",
    "poisson_problem",
    "reaction_diffusion_problem",
    "interface_problem",
    "PROBLEM_BUILDERS",
    "build_problem",
]


@dataclass(frozen=True)
class Dirichlet:
    """Essential condition u = value at one endpoint."""

    value: float


@dataclass(frozen=True)
class Neumann:
    """Flux condition n . sigma = value at one endpoint (n is the outward normal)."""

    value: float


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solution pair: u, u', sigma = -a u', and sigma'."""

    u: Callable
    u_prime: Callable
    sigma: Callable
    sigma_prime: Callable


@dataclass(frozen=True)
class ProblemSpec:
    """One boundary value problem -(a u')' + b u' + c u = f on (interval)."""

    interval: tuple[float, float]
    coeff_a: Callable
    coeff_b: Callable
    coeff_c: Callable
    rhs_f: Callable
    bc_left: Dirichlet | Neumann
    bc_right: Dirichlet | Neumann
    exact: ExactSolution | None = None
    name: str = ""

    def __post_init__(self):
        lo, hi = self.interval
        if not hi > lo:
            raise ValueError("interval must have positive length")
        for bc in (self.bc_left, self.bc_right):
            if not isinstance(bc, (Dirichlet, Neumann)):
                raise ValueError("boundary conditions must be Dirichlet or Neumann")


# ----------------------------------------------------------------------
# Poisson with a sharp interior bump


def poisson_problem() -> ProblemSpec:
    """-u'' = f on (0, 1), u(0) = u(1) = 0, with a Gaussian bump at x = 1/3."""
    shift = np.exp(-400.0 / 9.0)

    def bump(x):
        return np.exp(-100.0 * (x - 1.0 / 3.0) ** 2)

    def u(x):
        x = np.asarray(x, dtype=np.float64)
        return x * (bump(x) - shift)

    def u_prime(x):
        x = np.asarray(x, dtype=np.float64)
        return bump(x) * (1.0 - 200.0 * x * (x - 1.0 / 3.0)) - shift

    def f(x):
        x = np.asarray(x, dtype=np.float64)
        poly = x**3 - 2.0 * x**2 / 3.0 + 173.0 * x / 1800.0 + 1.0 / 300.0
        return -40000.0 * poly * bump(x)

    one = _constant(1.0)
    zero = _constant(0.0)
    return ProblemSpec(
        interval=(0.0, 1.0),
        coeff_a=one,
        coeff_b=zero,
        coeff_c=zero,
        rhs_f=f,
        bc_left=Dirichlet(0.0),
        bc_right=Dirichlet(0.0),
        exact=ExactSolution(u=u, u_prime=u_prime, sigma=lambda x: -u_prime(x), sigma_prime=f),
        name="poisson",
    )


# ----------------------------------------------------------------------
# singularly perturbed reaction-diffusion


def reaction_diffusion_problem(epsilon: float = 0.01) -> ProblemSpec:
    """-eps^2 u'' + u = f on (-1, 1), u(-1) = u(1) = 0, interior layers at |x| = 1/2."""
    eps = float(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    offset = np.tanh(3.0 / (4.0 * eps))

    def phase(x):
        return (x**2 - 0.25) / eps

    def u(x):
        x = np.asarray(x, dtype=np.float64)
        return np.tanh(phase(x)) - offset

    def u_prime(x):
        x = np.asarray(x, dtype=np.float64)
        return (2.0 * x / eps) * _sech2(phase(x))

    def f(x):
        x = np.asarray(x, dtype=np.float64)
        t = np.tanh(phase(x))
        return -2.0 * (eps - 4.0 * x**2 * t) * _sech2(phase(x)) + t - offset

    def sigma(x):
        x = np.asarray(x, dtype=np.float64)
        return -2.0 * eps * x * _sech2(phase(x))

    def sigma_prime(x):
        return f(x) - u(x)

    return ProblemSpec(
        interval=(-1.0, 1.0),
        coeff_a=_constant(eps**2),
        coeff_b=_constant(0.0),
        coeff_c=_constant(1.0),
        rhs_f=f,
        bc_left=Dirichlet(0.0),
        bc_right=Dirichlet(0.0),
        exact=ExactSolution(u=u, u_prime=u_prime, sigma=sigma, sigma_prime=sigma_prime),
        name="reaction-diffusion",
    )


# ----------------------------------------------------------------------
# piecewise-constant diffusion with a flux-continuous kink


def interface_problem(k: float = 10.0) -> ProblemSpec:
    """-(a u')' = f on (0, 1) with a = 1 on (0, 1/2) and a = k on (1/2, 1).

    The solution is piecewise polynomial, continuous with continuous flux
    at x = 1/2 but a kinked derivative there.  At exactly x = 1/2 the
    coefficient and the derivative take their left-side values.
    """
    k = float(k)
    if k <= 0:
        raise ValueError("k must be positive")

    def left(x):
        return x <= 0.5

    def coeff_a(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(left(x), 1.0, k)

    def f(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(left(x), 8.0 * k * (3.0 * x - 1.0), 4.0 * k * (k + 1.0))

    def u(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(
            left(x),
            4.0 * k * x**2 * (1.0 - x),
            (2.0 * (k + 1.0) * x - 1.0) * (1.0 - x),
        )

    def u_prime(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(
            left(x),
            4.0 * k * (2.0 * x - 3.0 * x**2),
            2.0 * (k + 1.0) * (1.0 - 2.0 * x) + 1.0,
        )

    def sigma(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(
            left(x),
            -4.0 * k * (2.0 * x - 3.0 * x**2),
            -k * (2.0 * (k + 1.0) * (1.0 - 2.0 * x) + 1.0),
        )

    return ProblemSpec(
        interval=(0.0, 1.0),
        coeff_a=coeff_a,
        coeff_b=_constant(0.0),
        coeff_c=_constant(0.0),
        rhs_f=f,
        bc_left=Dirichlet(0.0),
        bc_right=Dirichlet(0.0),
        exact=ExactSolution(u=u, u_prime=u_prime, sigma=sigma, sigma_prime=f),
        name="interface",
    )


PROBLEM_BUILDERS: dict[str, Callable[..., ProblemSpec]] = {
    "poisson": poisson_problem,
    "reaction-diffusion": reaction_diffusion_problem,
    "interface": interface_problem,
}


def build_problem(name: str, **params) -> ProblemSpec:
    """Instantiate a built-in problem by name (see ``PROBLEM_BUILDERS``)."""
    if name not in PROBLEM_BUILDERS:
        known = ", ".join(sorted(PROBLEM_BUILDERS))
        raise ValueError(f"unknown problem {name!r}; available: {known}")
    return PROBLEM_BUILDERS[name](**params)


def _constant(value: float) -> Callable:
    def const(x):
        return np.full_like(np.asarray(x, dtype=np.float64), value)

    return const


def _sech2(z):
    """sech(z)**2 evaluated without overflow for large |z|."""
    e = np.exp(-2.0 * np.abs(z))
    return 4.0 * e / (1.0 + e) ** 2
