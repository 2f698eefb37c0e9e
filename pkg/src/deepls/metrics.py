"""Error reports: relative norms against exact solutions and the functional ratio.

All norms are midpoint-rule quadratures on a fresh uniform evaluation grid,
much finer than the training partition.  Network derivatives on that grid
use the same backward-offset quotient as the losses, with tau = h_eval / 2.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .loss import LossKind, LossSpec, fosls_loss
from .problems import ProblemSpec
from .quad import Partition, uniform_partition

__all__ = [
    "DenominatorKind",
    "ErrorReport",
    "eval_point_count",
    "relative_errors",
    "relative_functional",
    "experiment_report",
    "write_metrics_json",
    "write_solution_csv",
]

MIN_EVAL_POINTS = 10_000
EVAL_FACTOR = 10


class DenominatorKind(Enum):
    """What normalizes the functional value: the exact pair or the trained pair."""

    EXACT = "exact"
    COMPUTED = "computed"


@dataclass(frozen=True)
class ErrorReport:
    """Relative errors of one trained network; None marks inapplicable entries."""

    rel_l2_u: float | None
    rel_h1semi_u: float | None
    rel_energy_u: float | None
    rel_l2_sigma: float | None
    rel_functional: float | None
    denominator_kind: DenominatorKind
    eval_points: int

    def __post_init__(self):
        for name in ("rel_l2_u", "rel_h1semi_u", "rel_energy_u", "rel_l2_sigma", "rel_functional"):
            value = getattr(self, name)
            if value is not None and not (np.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {value}")

    def to_json_dict(self) -> dict:
        return {
            "rel_l2_u": self.rel_l2_u,
            "rel_h1semi_u": self.rel_h1semi_u,
            "rel_energy_u": self.rel_energy_u,
            "rel_l2_sigma": self.rel_l2_sigma,
            "rel_functional": self.rel_functional,
            "denominator_kind": self.denominator_kind.value,
            "eval_points": self.eval_points,
        }


def eval_point_count(train_points: int) -> int:
    """Evaluation grid size: ten times the training grid, at least 10**4."""
    return max(EVAL_FACTOR * int(train_points), MIN_EVAL_POINTS)


def _rel_norm(err_sq: float, ref_sq: float, what: str) -> float:
    if ref_sq <= 0:
        raise ZeroDivisionError(f"zero reference norm for {what}")
    return float(np.sqrt(err_sq / ref_sq))


def relative_errors(
    net,
    prob: ProblemSpec,
    n_eval: int,
    include_sigma: bool = True,
) -> ErrorReport:
    """Relative L2, H1-seminorm, and weighted energy-norm errors of ``net``.

    The energy norm of v is (||v||^2 + ||a^(1/2) v'||^2)^(1/2); with a = 1
    it is the full H1 norm and for reaction-diffusion it carries the eps
    weighting.  ``include_sigma`` adds the relative L2 error of the lower
    branch against the exact flux.  The functional entry is left unset.
    """
    if prob.exact is None:
        raise ValueError("relative_errors needs a problem with an exact solution")
    if n_eval < 1:
        raise ValueError("n_eval must be positive")
    grid = uniform_partition(prob.interval, n_eval)
    x, w = grid.midpoints, grid.widths
    tau = w / 2.0
    a = np.asarray(prob.coeff_a(x), dtype=np.float64)

    u_exact = prob.exact.u(x)
    du_exact = prob.exact.u_prime(x)
    stacked = np.atleast_1d(net.u(np.concatenate([x, x - tau])))
    u_hat = stacked[:n_eval]
    du_hat = (u_hat - stacked[n_eval:]) / tau

    e = u_hat - u_exact
    de = du_hat - du_exact
    rel_l2 = _rel_norm(np.sum(e**2 * w), np.sum(u_exact**2 * w), "u in L2")
    rel_h1 = _rel_norm(np.sum(de**2 * w), np.sum(du_exact**2 * w), "u in H1 seminorm")
    rel_energy = _rel_norm(
        np.sum((e**2 + a * de**2) * w),
        np.sum((u_exact**2 + a * du_exact**2) * w),
        "u in the energy norm",
    )
    rel_sigma = None
    if include_sigma:
        s_exact = prob.exact.sigma(x)
        s_hat = np.atleast_1d(net.sigma(x))
        rel_sigma = _rel_norm(
            np.sum((s_hat - s_exact) ** 2 * w), np.sum(s_exact**2 * w), "sigma in L2"
        )
    return ErrorReport(
        rel_l2_u=rel_l2,
        rel_h1semi_u=rel_h1,
        rel_energy_u=rel_energy,
        rel_l2_sigma=rel_sigma,
        rel_functional=None,
        denominator_kind=DenominatorKind.EXACT,
        eval_points=n_eval,
    )


def relative_functional(
    net,
    prob: ProblemSpec,
    part: Partition,
    denominator: DenominatorKind,
    n_eval: int | None = None,
) -> float:
    """sqrt of the discrete FOSLS value over the energy norm of a reference pair.

    The reference pair is the exact (sigma, u) for ``EXACT`` or the network's
    own pair for ``COMPUTED``; either way the norm uses the a-weighted form
    (||a^(-1/2) s||^2 + ||s'||^2 + ||v||^2 + ||a^(1/2) v'||^2)^(1/2) on the
    evaluation grid.
    """
    if n_eval is None:
        n_eval = eval_point_count(part.n_elements)
    numerator = float(np.sqrt(fosls_loss(net, prob, part, LossSpec(LossKind.FOSLS))))
    grid = uniform_partition(prob.interval, n_eval)
    x, w = grid.midpoints, grid.widths
    tau = w / 2.0
    a = np.asarray(prob.coeff_a(x), dtype=np.float64)
    if denominator is DenominatorKind.EXACT:
        if prob.exact is None:
            raise ValueError("the exact-pair denominator needs an exact solution")
        v = prob.exact.u(x)
        dv = prob.exact.u_prime(x)
        s = prob.exact.sigma(x)
        ds = prob.exact.sigma_prime(x)
    else:
        stacked_u = np.atleast_1d(net.u(np.concatenate([x, x - tau])))
        stacked_s = np.atleast_1d(net.sigma(np.concatenate([x, x - tau])))
        v = stacked_u[:n_eval]
        dv = (v - stacked_u[n_eval:]) / tau
        s = stacked_s[:n_eval]
        ds = (s - stacked_s[n_eval:]) / tau
    norm_sq = float(np.sum((s**2 / a + ds**2 + v**2 + a * dv**2) * w))
    if norm_sq <= 0:
        raise ZeroDivisionError("zero energy-norm denominator for the functional ratio")
    return numerator / np.sqrt(norm_sq)


def experiment_report(
    net,
    prob: ProblemSpec,
    part: Partition,
    with_sigma: bool,
    denominator: DenominatorKind = DenominatorKind.EXACT,
) -> ErrorReport:
    """Full report for a trained network on its final training partition.

    ``with_sigma`` marks runs whose lower branch was trained (FOSLS); only
    those get flux and functional entries.  Without an exact solution all
    exact-based entries are None and the functional uses the computed pair.
    """
    n_eval = eval_point_count(part.n_elements)
    if prob.exact is None:
        rel_fn = relative_functional(net, prob, part, DenominatorKind.COMPUTED, n_eval)
        return ErrorReport(
            rel_l2_u=None,
            rel_h1semi_u=None,
            rel_energy_u=None,
            rel_l2_sigma=None,
            rel_functional=rel_fn,
            denominator_kind=DenominatorKind.COMPUTED,
            eval_points=n_eval,
        )
    report = relative_errors(net, prob, n_eval, include_sigma=with_sigma)
    rel_fn = None
    if with_sigma:
        rel_fn = relative_functional(net, prob, part, denominator, n_eval)
    return ErrorReport(
        rel_l2_u=report.rel_l2_u,
        rel_h1semi_u=report.rel_h1semi_u,
        rel_energy_u=report.rel_energy_u,
        rel_l2_sigma=report.rel_l2_sigma,
        rel_functional=rel_fn,
        denominator_kind=denominator,
        eval_points=n_eval,
    )


# ----------------------------------------------------------------------
# artifacts


def write_metrics_json(report: ErrorReport, seed: int, wall_time_s: float, path) -> None:
    payload = report.to_json_dict()
    payload["seed"] = int(seed)
    payload["wall_time_s"] = float(wall_time_s)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def write_solution_csv(net, prob: ProblemSpec, n_eval: int, path) -> None:
    """Pointwise exact and predicted (u, sigma) on the evaluation grid."""
    grid = uniform_partition(prob.interval, n_eval)
    x = grid.midpoints
    u_pred = np.atleast_1d(net.u(x))
    s_pred = np.atleast_1d(net.sigma(x))
    if prob.exact is not None:
        u_exact = np.asarray(prob.exact.u(x), dtype=np.float64)
        s_exact = np.asarray(prob.exact.sigma(x), dtype=np.float64)
    else:
        u_exact = s_exact = np.full_like(x, np.nan)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "u_exact", "u_pred", "sigma_exact", "sigma_pred"])
        for row in zip(x, u_exact, u_pred, s_exact, s_pred):
            writer.writerow([repr(float(v)) for v in row])
