"""Experiment runner: configuration, orchestration, and run artifacts.

Every run writes a self-contained output directory: a ``config.json``
snapshot that reproduces the run bit for bit, one loss-history CSV per
seed, and the median replica's metrics, pointwise solution, and (for
adaptive runs) final partition.  Presets ``table1``..``table5`` bundle the
benchmark protocols; ``compare`` tabulates stored runs side by side and
``report`` renders figures from a run directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .loss import LossKind, LossSpec
from .metrics import (
    DenominatorKind,
    eval_point_count,
    write_metrics_json,
    write_solution_csv,
)
from .net import Activation
from .problems import PROBLEM_BUILDERS, ProblemSpec, build_problem
from .quad import uniform_partition
from .train import (
    GlobalRefineOnce,
    HalveEvery,
    LocalRefine,
    ReplicaOutcome,
    TrainConfig,
    TrainingDivergedError,
    pick_median,
    run_one_replica,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "run_experiment",
    "compare_runs",
    "main",
    "EXIT_CONFIG",
    "EXIT_IO",
    "EXIT_TRAINING",
]

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_TRAINING = 4

SMALL_WIDTHS = (24, 14, 14, 1)
BIG_WIDTHS = (32, 24, 24, 1)

WORKERS_ENV = "DEEPLS_WORKERS"


class ConfigError(ValueError):
    """An experiment configuration that fails module preconditions."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat, serializable description of one experiment.

    The snapshot written to ``config.json`` is exactly this record; loading
    it back and re-running reproduces the same loss histories per seed.
    """

    problem: str
    loss: str
    activation: str
    points: int
    iters: int
    lr: float
    out: str
    epsilon: float = 0.01
    k: float = 10.0
    upper_widths: tuple[int, ...] = SMALL_WIDTHS
    lower_widths: tuple[int, ...] = SMALL_WIDTHS
    decay_every: int | None = None
    refine: str | None = None
    seeds: tuple[int, ...] = (0, 1, 2)
    denominator: str = "exact"
    alpha_d: float = 1.0
    alpha_n: float = 1.0

    def to_json_dict(self) -> dict:
        payload = asdict(self)
        payload["upper_widths"] = list(self.upper_widths)
        payload["lower_widths"] = list(self.lower_widths)
        payload["seeds"] = list(self.seeds)
        return payload

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        import dataclasses

        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        required = {f.name for f in fields(cls) if f.default is dataclasses.MISSING}
        missing = required - set(data)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        coerced = dict(data)
        for key in ("upper_widths", "lower_widths", "seeds"):
            if key in coerced and coerced[key] is not None:
                coerced[key] = tuple(int(v) for v in coerced[key])
        return cls(**coerced)

    # -- resolution to domain objects ----------------------------------

    def build_problem(self) -> ProblemSpec:
        if self.problem not in PROBLEM_BUILDERS:
            raise ConfigError(
                f"unknown problem {self.problem!r}; available: {sorted(PROBLEM_BUILDERS)}"
            )
        try:
            if self.problem == "reaction-diffusion":
                return build_problem(self.problem, epsilon=self.epsilon)
            if self.problem == "interface":
                return build_problem(self.problem, k=self.k)
            return build_problem(self.problem)
        except ValueError as err:
            raise ConfigError(str(err)) from None

    def build_loss_spec(self) -> LossSpec:
        try:
            kind = LossKind(self.loss)
        except ValueError:
            raise ConfigError(
                f"unknown loss {self.loss!r}; available: {[k.value for k in LossKind]}"
            ) from None
        try:
            return LossSpec(kind, alpha_d=self.alpha_d, alpha_n=self.alpha_n)
        except ValueError as err:
            raise ConfigError(str(err)) from None

    def build_activation(self) -> Activation:
        try:
            return Activation(self.activation)
        except ValueError:
            raise ConfigError(
                f"unknown activation {self.activation!r}; available: "
                f"{[a.value for a in Activation if a is not Activation.IDENTITY]}"
            ) from None

    def build_train_config(self) -> TrainConfig:
        decay = HalveEvery(self.decay_every) if self.decay_every else None
        try:
            return TrainConfig(
                iterations=self.iters,
                lr0=self.lr,
                decay=decay,
                seeds=tuple(self.seeds),
                refine=parse_refine(self.refine),
            )
        except ValueError as err:
            raise ConfigError(str(err)) from None

    def build_denominator(self) -> DenominatorKind:
        try:
            return DenominatorKind(self.denominator)
        except ValueError:
            raise ConfigError(
                f"unknown denominator {self.denominator!r}; available: "
                f"{[d.value for d in DenominatorKind]}"
            ) from None

    def validate(self) -> None:
        """Fail fast on any invalid field before any output is written."""
        prob = self.build_problem()
        spec = self.build_loss_spec()
        act = self.build_activation()
        cfg = self.build_train_config()
        self.build_denominator()
        if self.points < 1:
            raise ConfigError("points must be >= 1")
        if len(self.seeds) % 2 == 0:
            raise ConfigError("an odd number of seeds keeps the median well defined")
        for name, widths in (("upper_widths", self.upper_widths), ("lower_widths", self.lower_widths)):
            if not widths or any(w < 1 for w in widths):
                raise ConfigError(f"{name} must be non-empty positive widths")
            if widths[-1] != 1:
                raise ConfigError(f"{name} must end with an output width of 1")
        if spec.kind is not LossKind.FOSLS and cfg.refine is not None:
            raise ConfigError("adaptive refinement needs the fosls loss for its indicators")
        if spec.kind is LossKind.LS and not act.smooth:
            raise ConfigError("the ls loss needs a twice-differentiable activation")
        if self.denominator == "exact" and prob.exact is None:
            raise ConfigError("the exact denominator needs a problem with an exact solution")


def parse_refine(token: str | None):
    """Parse ``local:<every>:<fraction>`` or ``global:<at>`` schedules."""
    if token is None:
        return None
    parts = token.split(":")
    try:
        if parts[0] == "local" and len(parts) == 3:
            return LocalRefine(every=int(parts[1]), fraction=float(parts[2]))
        if parts[0] == "global" and len(parts) == 2:
            return GlobalRefineOnce(at=int(parts[1]))
    except ValueError as err:
        raise ConfigError(f"bad refine schedule {token!r}: {err}") from None
    raise ConfigError(
        f"bad refine schedule {token!r}; expected local:<every>:<fraction> or global:<at>"
    )


# ----------------------------------------------------------------------
# orchestration


def _replica_worker(config_dict: dict, seed: int) -> ReplicaOutcome:
    """Rebuild everything from primitives and train one seed.

    Module-level so a process pool can pickle it; problems hold closures,
    so each worker reconstructs its own from the flat config.
    """
    cfg = ExperimentConfig.from_dict(config_dict)
    prob = cfg.build_problem()
    part = uniform_partition(prob.interval, cfg.points)
    return run_one_replica(
        cfg.upper_widths,
        cfg.lower_widths,
        cfg.build_activation(),
        prob,
        part,
        cfg.build_loss_spec(),
        cfg.build_train_config(),
        seed,
        cfg.build_denominator(),
    )


def _run_replicas(cfg: ExperimentConfig) -> tuple[ReplicaOutcome, list[ReplicaOutcome]]:
    config_dict = cfg.to_json_dict()
    workers = int(os.environ.get(WORKERS_ENV, "1"))
    outcomes: list[ReplicaOutcome] = []
    failures: list[Exception] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(seed, pool.submit(_replica_worker, config_dict, seed)) for seed in cfg.seeds]
            for seed, fut in futures:
                try:
                    outcomes.append(fut.result())
                except TrainingDivergedError as err:
                    failures.append(err)
    else:
        for seed in cfg.seeds:
            try:
                outcomes.append(_replica_worker(config_dict, seed))
            except TrainingDivergedError as err:
                failures.append(err)
    if not outcomes:
        raise failures[0]
    return pick_median(outcomes), outcomes


def run_experiment(cfg: ExperimentConfig):
    """Run all replicas, persist artifacts, and return the median report.

    The output directory receives ``config.json``, ``history_<seed>.csv``
    per successful replica, and the median replica's ``metrics.json`` and
    ``solution.csv`` (plus ``partition.csv`` for adaptive runs).
    """
    cfg.validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w") as fh:
        json.dump(cfg.to_json_dict(), fh, indent=2)
        fh.write("\n")
    median, outcomes = _run_replicas(cfg)
    for oc in outcomes:
        _write_history(oc, out / f"history_{oc.seed}.csv")
    write_metrics_json(median.report, median.seed, median.wall_time_s, out / "metrics.json")
    prob = cfg.build_problem()
    n_eval = eval_point_count(median.result.final_partition.n_elements)
    write_solution_csv(median.result.net, prob, n_eval, out / "solution.csv")
    if cfg.refine is not None:
        median.result.final_partition.save_csv(out / "partition.csv")
    return median.report


def _write_history(outcome: ReplicaOutcome, path: Path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "lr", "loss"])
        rows = zip(outcome.result.lr_history, outcome.result.loss_history)
        for i, (lr, loss) in enumerate(rows):
            writer.writerow([i, repr(float(lr)), repr(float(loss))])


# ----------------------------------------------------------------------
# run comparison

_COMPARE_COLUMNS = (
    "run",
    "rel_l2_u",
    "rel_h1semi_u",
    "rel_energy_u",
    "rel_l2_sigma",
    "rel_functional",
    "seed",
)


def compare_runs(run_dirs, csv_path=None) -> str:
    """One row per stored run, in the order given; missing metrics are ---.

    Returns the text table; optionally writes the same rows as CSV.
    """
    if not run_dirs:
        raise ValueError("no run directories given")
    rows = []
    for d in run_dirs:
        path = Path(d) / "metrics.json"
        with open(path) as fh:
            metrics = json.load(fh)
        row = [Path(d).name]
        for key in _COMPARE_COLUMNS[1:]:
            value = metrics.get(key)
            row.append("---" if value is None else str(value))
        rows.append(row)
    if csv_path is not None:
        import csv

        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_COMPARE_COLUMNS)
            writer.writerows(rows)
    header = list(_COMPARE_COLUMNS)
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


# ----------------------------------------------------------------------
# argument parsing

_PRESETS: dict[str, dict] = {
    "table1": dict(
        problem="poisson", loss="fosls", activation="leaky-relu", points=800,
        iters=10_000, lr=5e-4, upper_widths=SMALL_WIDTHS, lower_widths=SMALL_WIDTHS,
    ),
    "table2": dict(
        problem="poisson", loss="fosls", activation="sigmoid", points=200,
        iters=10_000, lr=5e-4, upper_widths=SMALL_WIDTHS, lower_widths=SMALL_WIDTHS,
    ),
    "table3": dict(
        problem="reaction-diffusion", epsilon=0.01, loss="fosls", activation="leaky-relu",
        points=2000, iters=20_000, lr=1e-3, decay_every=5000,
        upper_widths=BIG_WIDTHS, lower_widths=BIG_WIDTHS,
    ),
    "table4": dict(
        problem="interface", k=10.0, loss="fosls", activation="leaky-relu",
        points=500, iters=20_000, lr=1e-3, decay_every=5000,
        upper_widths=BIG_WIDTHS, lower_widths=BIG_WIDTHS,
    ),
    "table5": dict(
        problem="poisson", loss="fosls", activation="leaky-relu", points=200,
        iters=10_000, lr=5e-4, upper_widths=SMALL_WIDTHS, lower_widths=SMALL_WIDTHS,
        denominator="computed",
    ),
}

_TABLE5_MODES = {
    "local": dict(points=200, refine="local:2000:0.1"),
    "global": dict(points=200, refine="global:5000"),
    "uniform": dict(points=292, refine=None),
}


def _parse_widths(token: str) -> tuple[int, ...]:
    try:
        widths = tuple(int(v) for v in token.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad widths {token!r}; expected e.g. 24,14,14,1")
    return widths


def _parse_seeds(token: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in token.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seeds {token!r}; expected e.g. 0,1,2")


def _add_solve_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="load a stored config.json; explicit flags override it")
    p.add_argument("--problem", choices=sorted(PROBLEM_BUILDERS))
    p.add_argument("--epsilon", type=float, help="reaction-diffusion perturbation parameter")
    p.add_argument("--k", type=float, help="interface right-half diffusion coefficient")
    p.add_argument("--loss", choices=[k.value for k in LossKind])
    p.add_argument(
        "--activation",
        choices=[a.value for a in Activation if a is not Activation.IDENTITY],
    )
    p.add_argument("--points", type=int, help="quadrature point count")
    p.add_argument("--iters", type=int, help="optimizer iterations")
    p.add_argument("--lr", type=float, help="initial learning rate")
    p.add_argument("--decay-every", type=int, help="halve the learning rate every this many iterations")
    p.add_argument("--refine", help="local:<every>:<fraction> or global:<at>")
    p.add_argument("--seeds", type=_parse_seeds, help="comma-separated replica seeds")
    p.add_argument("--widths", type=_parse_widths, help="per-branch layer widths, e.g. 24,14,14,1")
    p.add_argument("--denominator", choices=[d.value for d in DenominatorKind])
    p.add_argument("--alpha-d", type=float, help="Dirichlet boundary weight")
    p.add_argument("--alpha-n", type=float, help="Neumann boundary weight")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deepls",
        description="Train two-branch networks on energy, LS, or FOSLS functionals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one experiment from flags or a config file")
    _add_solve_flags(solve)

    for name in _PRESETS:
        p = sub.add_parser(name, help=f"run the {name} benchmark protocol")
        _add_solve_flags(p)
        if name == "table5":
            p.add_argument(
                "--mode", choices=sorted(_TABLE5_MODES), default="local",
                help="refinement strategy for the adaptive study",
            )

    comp = sub.add_parser("compare", help="tabulate metrics from stored run directories")
    comp.add_argument("dirs", nargs="+", help="run directories containing metrics.json")
    comp.add_argument("--csv", help="also write the table as CSV to this path")

    rep = sub.add_parser("report", help="render solution and training figures for a run")
    rep.add_argument("dir", help="run directory with solution.csv and history CSVs")
    return parser


def _merge_config(args: argparse.Namespace, preset: str | None) -> ExperimentConfig:
    """Layer defaults < preset < config file < explicit flags."""
    merged: dict = {}
    if preset is not None:
        merged.update(_PRESETS[preset])
        if preset == "table5":
            merged.update(_TABLE5_MODES[args.mode])
            merged.setdefault("out", f"runs/{preset}-{args.mode}")
        else:
            merged.setdefault("out", f"runs/{preset}")
    if args.config is not None:
        try:
            with open(args.config) as fh:
                merged.update(json.load(fh))
        except OSError as err:
            raise _IOFailure(f"cannot read config file: {err}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"malformed config file {args.config!r}: {err}") from None
    flag_map = {
        "problem": args.problem, "epsilon": args.epsilon, "k": args.k,
        "loss": args.loss, "activation": args.activation, "points": args.points,
        "iters": args.iters, "lr": args.lr, "decay_every": args.decay_every,
        "refine": args.refine, "seeds": args.seeds, "denominator": args.denominator,
        "alpha_d": args.alpha_d, "alpha_n": args.alpha_n, "out": args.out,
    }
    if args.widths is not None:
        flag_map["upper_widths"] = args.widths
        flag_map["lower_widths"] = args.widths
    merged.update({k: v for k, v in flag_map.items() if v is not None})
    required = ("problem", "loss", "activation", "points", "iters", "lr", "out")
    missing = [k for k in required if k not in merged]
    if missing:
        raise ConfigError(f"missing required options: {missing}")
    return ExperimentConfig.from_dict(merged)


class _IOFailure(RuntimeError):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "compare":
            try:
                text = compare_runs(args.dirs, csv_path=args.csv)
            except ValueError as err:
                raise ConfigError(str(err)) from None
            except (OSError, json.JSONDecodeError) as err:
                raise _IOFailure(f"cannot read metrics: {err}") from err
            print(text)
            return 0
        if args.command == "report":
            from .report import render_run

            try:
                paths = render_run(args.dir)
            except (OSError, ValueError) as err:
                raise _IOFailure(f"cannot render report: {err}") from err
            for p in paths:
                print(p)
            return 0
        preset = args.command if args.command in _PRESETS else None
        cfg = _merge_config(args, preset)
        cfg.validate()
        try:
            report = run_experiment(cfg)
        except OSError as err:
            raise _IOFailure(f"cannot write run outputs: {err}") from err
        print(json.dumps(report.to_json_dict(), indent=2))
        return 0
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except _IOFailure as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except TrainingDivergedError as err:
        print(f"error: training aborted: {err}", file=sys.stderr)
        return EXIT_TRAINING


if __name__ == "__main__":
    sys.exit(main())
