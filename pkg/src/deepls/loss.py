"""Discrete loss functionals: energy, least squares, and FOSLS.

All three are midpoint-rule discretizations over a partition, with boundary
conditions enforced weakly through mesh-weighted penalty terms.  Spatial
derivatives of network outputs are backward-offset difference quotients with
step tau = h/2 per element, so every functional is a plain composition of
network evaluations and the evaluation points never leave the closed domain.

The functions accept anything exposing vectorized ``u(x)`` / ``sigma(x)``
callables, which lets exact solutions stand in for a network.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .autodiff import Tensor
from .net import Activation
from .problems import Dirichlet, Neumann, ProblemSpec
from .quad import Partition

__all__ = [
    "LossKind",
    "LossSpec",
    "CallablePair",
    "energy_loss",
    "ls_loss",
    "fosls_loss",
    "fosls_indicators",
    "loss_function",
]


class LossKind(Enum):
    ENERGY = "energy"
    LS = "ls"
    FOSLS = "fosls"


@dataclass(frozen=True)
class LossSpec:
    """Which functional to minimize and its boundary penalty weights."""

    kind: LossKind
    alpha_d: float = 1.0
    alpha_n: float = 1.0

    def __post_init__(self):
        if self.alpha_d < 0 or self.alpha_n < 0:
            raise ValueError("penalty weights must be nonnegative")


@dataclass
class CallablePair:
    """A (u, sigma) pair of plain callables, interchangeable with a network."""

    u: "callable"
    sigma: "callable" = field(default=lambda x: np.zeros_like(np.asarray(x, dtype=np.float64)))
    activation: Activation = Activation.SIGMOID


# ----------------------------------------------------------------------
# shared plumbing


def _quad_data(prob: ProblemSpec, part: Partition):
    mids = part.midpoints
    widths = part.widths
    a = np.asarray(prob.coeff_a(mids), dtype=np.float64)
    if np.any(a <= 0):
        raise ValueError("coeff_a must be positive at every quadrature point")
    return mids, widths, widths / 2.0, a


def _stacked(fn, chunks):
    """Evaluate ``fn`` once on the concatenated chunks and split the result."""
    values = fn(np.concatenate(chunks))
    parts = []
    start = 0
    for chunk in chunks:
        parts.append(values[start : start + chunk.size])
        start += chunk.size
    return parts


def _boundary_sites(part: Partition):
    """(endpoint, adjacent element length, outward normal, stack index) per end."""
    return (
        (part.left, part.h_left, -1.0, 0),
        (part.right, part.h_right, 1.0, 1),
    )


def _as_float(total):
    if isinstance(total, Tensor):
        return total
    total = float(total)
    if not np.isfinite(total):
        raise FloatingPointError("loss evaluated to a non-finite value")
    return total


# ----------------------------------------------------------------------
# FOSLS


def _fosls_interior(net, prob: ProblemSpec, part: Partition):
    """Per-element FOSLS residual terms (divergence and constitutive)."""
    mids, widths, tau, a = _quad_data(prob, part)
    b = prob.coeff_b(mids)
    c = prob.coeff_c(mids)
    f = prob.rhs_f(mids)
    sqrt_a = np.sqrt(a)
    u_mid, u_back, u_end = _stacked(net.u, [mids, mids - tau, part.endpoints])
    s_mid, s_back, s_end = _stacked(net.sigma, [mids, mids - tau, part.endpoints])
    du = (u_mid - u_back) / tau
    ds = (s_mid - s_back) / tau
    divergence = ds + b * du + c * u_mid - f
    constitutive = s_mid / sqrt_a + sqrt_a * du
    eta = (divergence**2 + constitutive**2) * widths
    return eta, u_end, s_end


def fosls_loss(net, prob: ProblemSpec, part: Partition, spec: LossSpec):
    """Discrete first-order-system least-squares functional.

    Interior: the squared residuals of sigma' + b u' + c u = f and of
    a^(-1/2) sigma + a^(1/2) u' = 0 at element midpoints, times element
    length.  Boundary: alpha_d (u - g)^2 / h_E on Dirichlet ends and
    alpha_n (n sigma - g)^2 h_E on Neumann ends.
    """
    if spec.kind is not LossKind.FOSLS:
        raise ValueError("spec.kind must be FOSLS")
    eta, u_end, s_end = _fosls_interior(net, prob, part)
    total = eta.sum()
    for bc, (x, h_e, normal, i) in zip((prob.bc_left, prob.bc_right), _boundary_sites(part)):
        if isinstance(bc, Dirichlet):
            total = total + spec.alpha_d * (u_end[i] - bc.value) ** 2 / h_e
        else:
            total = total + spec.alpha_n * (normal * s_end[i] - bc.value) ** 2 * h_e
    return _as_float(total)


def fosls_indicators(net, prob: ProblemSpec, part: Partition) -> np.ndarray:
    """Per-element FOSLS interior terms; they sum to the loss minus boundary."""
    eta, _, _ = _fosls_interior(net, prob, part)
    eta = np.asarray(eta, dtype=np.float64)
    if not np.isfinite(eta).all():
        raise FloatingPointError("error indicators are not finite")
    return eta


# ----------------------------------------------------------------------
# energy (Ritz)


def energy_loss(net, prob: ProblemSpec, part: Partition, spec: LossSpec):
    """Discrete energy functional for symmetric problems (requires b = 0).

    Interior: (a u'^2 + c u^2) / 2 - f u at element midpoints, times element
    length.  Neumann data enters linearly, Dirichlet ends get the same
    penalty as the FOSLS functional.  Only the upper branch is used.
    """
    if spec.kind is not LossKind.ENERGY:
        raise ValueError("spec.kind must be ENERGY")
    mids, widths, tau, a = _quad_data(prob, part)
    if np.any(prob.coeff_b(mids) != 0):
        raise ValueError("the energy loss requires b = 0")
    c = prob.coeff_c(mids)
    f = prob.rhs_f(mids)
    u_mid, u_back, u_end = _stacked(net.u, [mids, mids - tau, part.endpoints])
    du = (u_mid - u_back) / tau
    total = ((0.5 * (a * du**2 + c * u_mid**2) - f * u_mid) * widths).sum()
    for bc, (x, h_e, normal, i) in zip((prob.bc_left, prob.bc_right), _boundary_sites(part)):
        if isinstance(bc, Dirichlet):
            total = total + spec.alpha_d * (u_end[i] - bc.value) ** 2 / h_e
        else:
            total = total - bc.value * u_end[i]
    return _as_float(total)


# ----------------------------------------------------------------------
# strong-form least squares


def ls_loss(net, prob: ProblemSpec, part: Partition, spec: LossSpec):
    """Discrete least-squares functional on the second-order form.

    Interior: the squared residual of -(a u')' + b u' + c u = f with the
    second derivative taken by a central difference (a is treated as
    constant within each element).  Dirichlet penalties scale as h_E^(-3)
    and Neumann penalties as h_E^(-1).  Needs a smooth activation.
    """
    if spec.kind is not LossKind.LS:
        raise ValueError("spec.kind must be LS")
    activation = getattr(net, "activation", Activation.SIGMOID)
    if not activation.smooth:
        raise ValueError("the least-squares loss requires a smooth activation")
    mids, widths, tau, a = _quad_data(prob, part)
    b = prob.coeff_b(mids)
    c = prob.coeff_c(mids)
    f = prob.rhs_f(mids)
    chunks = [mids, mids + tau, mids - tau, part.endpoints]
    neumann_taus = {}
    for bc, (x, h_e, normal, i) in zip((prob.bc_left, prob.bc_right), _boundary_sites(part)):
        if isinstance(bc, Neumann):
            # one-sided derivative stepping into the domain
            neumann_taus[i] = h_e / 2.0
            chunks.append(np.array([x - normal * neumann_taus[i]]))
    stacked = _stacked(net.u, chunks)
    u_mid, u_fwd, u_back, u_end = stacked[:4]
    u_inner = stacked[4:]
    du = (u_mid - u_back) / tau
    d2u = (u_fwd - 2.0 * u_mid + u_back) / tau**2
    residual = -a * d2u + b * du + c * u_mid - f
    total = (residual**2 * widths).sum()
    inner_idx = 0
    for bc, (x, h_e, normal, i) in zip((prob.bc_left, prob.bc_right), _boundary_sites(part)):
        if isinstance(bc, Dirichlet):
            total = total + spec.alpha_d * (u_end[i] - bc.value) ** 2 / h_e**3
        else:
            t = neumann_taus[i]
            # one-sided quotient for u'(x_E), stepping into the domain
            du_end = normal * (u_end[i] - u_inner[inner_idx][0]) / t
            inner_idx += 1
            a_end = float(prob.coeff_a(np.array([x]))[0])
            total = total + spec.alpha_n * (normal * a_end * du_end + bc.value) ** 2 / h_e
    return _as_float(total)


_LOSS_FUNCTIONS = {
    LossKind.ENERGY: energy_loss,
    LossKind.LS: ls_loss,
    LossKind.FOSLS: fosls_loss,
}


def loss_function(kind: LossKind):
    """The loss callable for a given kind."""
    return _LOSS_FUNCTIONS[kind]
