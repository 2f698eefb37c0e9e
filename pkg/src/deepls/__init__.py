"""Deep least-squares solvers for one-dimensional second-order elliptic problems.

Two-branch fully connected networks approximate the solution and its flux by
minimizing a discrete energy, least-squares, or first-order-system
least-squares functional over a midpoint quadrature partition, optionally
refined adaptively during training.
"""

from .cli import ExperimentConfig, compare_runs, run_experiment
from .loss import (
    CallablePair,
    LossKind,
    LossSpec,
    energy_loss,
    fosls_indicators,
    fosls_loss,
    ls_loss,
)
from .metrics import (
    DenominatorKind,
    ErrorReport,
    relative_errors,
    relative_functional,
)
from .net import (
    Activation,
    TwoBranchNet,
    fd_derivative,
    fd_second_derivative,
    forward,
    init_network,
    param_gradient,
)
from .problems import (
    Dirichlet,
    ExactSolution,
    Neumann,
    ProblemSpec,
    build_problem,
    interface_problem,
    poisson_problem,
    reaction_diffusion_problem,
)
from .quad import Partition, refine_global, refine_local, uniform_partition
from .train import (
    GlobalRefineOnce,
    HalveEvery,
    LocalRefine,
    TrainConfig,
    TrainResult,
    TrainingDivergedError,
    adam_step,
    run_replicated,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Activation",
    "CallablePair",
    "DenominatorKind",
    "Dirichlet",
    "ErrorReport",
    "ExactSolution",
    "ExperimentConfig",
    "GlobalRefineOnce",
    "HalveEvery",
    "LocalRefine",
    "LossKind",
    "LossSpec",
    "Neumann",
    "Partition",
    "ProblemSpec",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "TwoBranchNet",
    "adam_step",
    "build_problem",
    "compare_runs",
    "energy_loss",
    "fd_derivative",
    "fd_second_derivative",
    "forward",
    "fosls_indicators",
    "fosls_loss",
    "init_network",
    "interface_problem",
    "ls_loss",
    "param_gradient",
    "poisson_problem",
    "reaction_diffusion_problem",
    "refine_global",
    "refine_local",
    "relative_errors",
    "relative_functional",
    "run_experiment",
    "run_replicated",
    "train",
    "uniform_partition",
]
