"""Full-batch Adam training with stepwise learning-rate decay and refinement.

Training minimizes one of the discrete functionals over the flat parameter
vector.  The quadrature partition may be refined during the run, either
locally (guided by the per-element FOSLS indicators) or globally once;
optimizer moments persist across refinement events.  Experiments replicate
over an odd number of seeds and report the replica with the median error.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import metrics as metrics_mod
from .loss import LossKind, LossSpec, fosls_indicators, loss_function
from .net import Activation, TwoBranchNet, init_network, value_and_grad
from .problems import ProblemSpec
from .quad import Partition, refine_global, refine_local

__all__ = [
    "HalveEvery",
    "LocalRefine",
    "GlobalRefineOnce",
    "TrainConfig",
    "AdamState",
    "adam_step",
    "TrainResult",
    "TrainingDivergedError",
    "train",
    "ReplicaOutcome",
    "run_replicated",
    "pick_median",
]


@dataclass(frozen=True)
class HalveEvery:
    """Halve the learning rate after every ``every`` iterations."""

    every: int

    def __post_init__(self):
        if self.every < 1:
            raise ValueError("decay interval must be at least 1")


@dataclass(frozen=True)
class LocalRefine:
    """Bisect the top ``fraction`` of elements by indicator every ``every`` iterations."""

    every: int
    fraction: float = 0.1

    def __post_init__(self):
        if self.every < 1:
            raise ValueError("refinement interval must be at least 1")
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError("fraction must lie in (0, 1]")


@dataclass(frozen=True)
class GlobalRefineOnce:
    """Bisect every element once, after ``at`` iterations."""

    at: int

    def __post_init__(self):
        if self.at < 1:
            raise ValueError("refinement iteration must be at least 1")


@dataclass(frozen=True)
class TrainConfig:
    iterations: int
    lr0: float
    decay: HalveEvery | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seeds: tuple[int, ...] = (0, 1, 2)
    refine: LocalRefine | GlobalRefineOnce | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            raise ValueError("Adam momentum factors must lie in [0, 1)")
        if self.eps <= 0:
            raise ValueError("Adam eps must be positive")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if len(self.seeds) == 0:
            raise ValueError("at least one seed is required")

    def learning_rate(self, t: int) -> float:
        """Effective rate at 0-based iteration ``t``: lr0 * 2**-(t // every)."""
        if self.decay is None:
            return self.lr0
        return self.lr0 * 2.0 ** -(t // self.decay.every)


@dataclass
class AdamState:
    """First and second moment accumulators."""

    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n))


def adam_step(
    params: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    t: int,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; ``t`` is the 1-based step index."""
    if t < 1:
        raise ValueError("step index t starts at 1")
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad**2
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps), AdamState(m, v)


class TrainingDivergedError(RuntimeError):
    """Raised when the loss turns non-finite; carries the iteration and value."""

    def __init__(self, iteration: int, value: float):
        super().__init__(f"loss became non-finite at iteration {iteration}: {value}")
        self.iteration = iteration
        self.value = value


@dataclass
class TrainResult:
    net: TwoBranchNet
    loss_history: np.ndarray
    lr_history: np.ndarray
    final_partition: Partition
    seed: int | None


def train(
    net: TwoBranchNet,
    prob: ProblemSpec,
    part: Partition,
    spec: LossSpec,
    cfg: TrainConfig,
) -> TrainResult:
    """Minimize the configured functional from ``net``'s current parameters.

    The loss history records the functional value at the parameters each
    iteration started from, so rerunning a configuration reproduces it
    bitwise.  Refinement events happen strictly inside the iteration budget
    and keep the optimizer moments.
    """
    _validate_combination(prob, part, spec, cfg)
    loss = loss_function(spec.kind)
    params = net.params.copy()
    state = AdamState.zeros(params.size)
    losses = np.empty(cfg.iterations)
    rates = np.empty(cfg.iterations)
    current = part
    for t in range(cfg.iterations):
        if _refine_now(cfg.refine, t):
            snapshot = net.with_params(params)
            if isinstance(cfg.refine, LocalRefine):
                eta = fosls_indicators(snapshot, prob, current)
                current = refine_local(current, eta, cfg.refine.fraction)
            else:
                current = refine_global(current)
        lr = cfg.learning_rate(t)
        value, grad = value_and_grad(
            lambda n: loss(n, prob, current, spec), net.with_params(params)
        )
        if not np.isfinite(value):
            raise TrainingDivergedError(t, value)
        losses[t] = value
        rates[t] = lr
        params, state = adam_step(
            params, grad, state, t + 1, lr, cfg.beta1, cfg.beta2, cfg.eps
        )
    return TrainResult(
        net=net.with_params(params),
        loss_history=losses,
        lr_history=rates,
        final_partition=current,
        seed=net.init_seed,
    )


def _refine_now(refine, t: int) -> bool:
    if isinstance(refine, LocalRefine):
        return t > 0 and t % refine.every == 0
    if isinstance(refine, GlobalRefineOnce):
        return t == refine.at
    return False


def _validate_combination(prob, part, spec, cfg) -> None:
    if cfg.refine is not None and spec.kind is not LossKind.FOSLS:
        raise ValueError("adaptive refinement relies on the FOSLS indicators")
    mids = part.midpoints
    if spec.kind is LossKind.ENERGY and np.any(prob.coeff_b(mids) != 0):
        raise ValueError("the energy loss requires b = 0")


# ----------------------------------------------------------------------
# replication


@dataclass
class ReplicaOutcome:
    result: TrainResult
    report: "metrics_mod.ErrorReport"
    selection_metric: float
    wall_time_s: float
    seed: int


def run_replicated(
    upper_widths: Sequence[int],
    lower_widths: Sequence[int],
    activation: Activation,
    prob: ProblemSpec,
    part: Partition,
    spec: LossSpec,
    cfg: TrainConfig,
    denominator: "metrics_mod.DenominatorKind | None" = None,
) -> tuple[ReplicaOutcome, list[ReplicaOutcome]]:
    """Train one replica per seed and return (median outcome, all outcomes).

    Replicas are ranked by the relative L2 error of u when the problem has
    an exact solution, otherwise by the relative functional value.  A
    replica that diverges is recorded as failed; as long as at least one
    succeeds the median is taken over the successes, otherwise the first
    failure is re-raised.
    """
    if len(cfg.seeds) % 2 == 0:
        raise ValueError("an odd number of seeds keeps the median well defined")
    outcomes: list[ReplicaOutcome] = []
    failures: list[Exception] = []
    for seed in cfg.seeds:
        try:
            outcomes.append(
                run_one_replica(
                    upper_widths, lower_widths, activation, prob, part, spec, cfg, seed,
                    denominator,
                )
            )
        except TrainingDivergedError as err:
            failures.append(err)
    if not outcomes:
        raise failures[0]
    return pick_median(outcomes), outcomes


def run_one_replica(
    upper_widths,
    lower_widths,
    activation: Activation,
    prob: ProblemSpec,
    part: Partition,
    spec: LossSpec,
    cfg: TrainConfig,
    seed: int,
    denominator: "metrics_mod.DenominatorKind | None" = None,
) -> ReplicaOutcome:
    """Train one seeded replica and attach its error report."""
    started = time.perf_counter()
    net = init_network(upper_widths, lower_widths, activation, seed)
    result = train(net, prob, part, spec, cfg)
    wall = time.perf_counter() - started
    if denominator is None:
        denominator = metrics_mod.DenominatorKind.EXACT
    report = metrics_mod.experiment_report(
        result.net,
        prob,
        result.final_partition,
        with_sigma=spec.kind is LossKind.FOSLS,
        denominator=denominator,
    )
    metric = _selection_metric(report, prob)
    return ReplicaOutcome(
        result=result, report=report, selection_metric=metric, wall_time_s=wall, seed=seed
    )


def _selection_metric(report, prob) -> float:
    if prob.exact is not None:
        return report.rel_l2_u
    if report.rel_functional is None:
        raise ValueError("no exact solution and no functional value to rank replicas by")
    return report.rel_functional


def pick_median(outcomes: list[ReplicaOutcome]) -> ReplicaOutcome:
    """The outcome with the median selection metric (upper median if even)."""
    if not outcomes:
        raise ValueError("no outcomes to choose from")
    ranked = sorted(outcomes, key=lambda o: o.selection_metric)
    return ranked[len(ranked) // 2]
