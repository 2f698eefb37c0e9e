"""End-to-end benchmark gates, one test per advertised guarantee.

In order: exact architecture sizes; accuracy bars for the bump-load Poisson
benchmark at two quadrature resolutions; per-functional accuracy on the same
benchmark with the smooth activation; boundary-layer accuracy without
overshoot on the singularly perturbed problem; the qualitative separation of
the three functionals on the discontinuous-coefficient problem; the adaptive
refinement study; the fast invariant suite; and bit-identical reruns from a
persisted config snapshot.

Every training test re-runs its full protocol (three seeded replicas), so
this module costs hours of CPU; those tests carry the ``slow`` marker.  Each
test aggregates its clauses and reports every violated bar in one message.
"""

import json
import statistics
import subprocess
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from deepls.cli import _PRESETS, BIG_WIDTHS, SMALL_WIDTHS, ExperimentConfig, run_experiment
from deepls.loss import LossKind, LossSpec
from deepls.metrics import DenominatorKind
from deepls.net import Activation, init_network
from deepls.problems import interface_problem, poisson_problem
from deepls.quad import uniform_partition
from deepls.train import (
    GlobalRefineOnce,
    HalveEvery,
    LocalRefine,
    TrainConfig,
    run_replicated,
)

SEEDS = (0, 1, 2)


def preset_config(name: str, out: Path, **overrides) -> ExperimentConfig:
    merged = {**_PRESETS[name], **overrides}
    return ExperimentConfig(out=str(out), **merged)


def test_architecture_parameter_counts_are_exact():
    small = init_network(SMALL_WIDTHS, SMALL_WIDTHS, Activation.LEAKY_RELU, seed=0)
    big = init_network(BIG_WIDTHS, BIG_WIDTHS, Activation.LEAKY_RELU, seed=0)
    assert small.param_count == 1246
    assert big.param_count == 2962


@pytest.mark.slow
def test_poisson_fosls_leaky_accuracy_at_two_resolutions(tmp_path):
    fine = run_experiment(preset_config("table1", tmp_path / "n800"))
    coarse = run_experiment(preset_config("table1", tmp_path / "n200", points=200))
    failures = []
    if not fine.rel_l2_u <= 0.06:
        failures.append(f"rel_l2_u at 800 points = {fine.rel_l2_u:.6f} > 0.06")
    if not fine.rel_l2_sigma <= 0.05:
        failures.append(f"rel_l2_sigma at 800 points = {fine.rel_l2_sigma:.6f} > 0.05")
    if not fine.rel_l2_u <= coarse.rel_l2_u:
        failures.append(
            "rel_l2_u did not improve with quadrature resolution: "
            f"{fine.rel_l2_u:.6f} at 800 points vs {coarse.rel_l2_u:.6f} at 200"
        )
    assert not failures, "; ".join(failures)


@pytest.mark.slow
def test_poisson_sigmoid_accuracy_for_each_functional(tmp_path):
    results = {}
    for loss in ("energy", "ls", "fosls"):
        report = run_experiment(preset_config("table2", tmp_path / loss, loss=loss))
        results[loss] = report.rel_l2_u
    failures = [
        f"{loss}: median rel_l2_u = {value:.6f} > 0.04"
        for loss, value in results.items()
        if not value <= 0.04
    ]
    assert not failures, "; ".join(failures) + f"; all results: {results}"


def overshoot_ratio(run_dir: Path) -> float:
    """max |u_pred| / max |u_exact| over the stored evaluation grid."""
    rows = np.loadtxt(run_dir / "solution.csv", delimiter=",", skiprows=1)
    return float(np.abs(rows[:, 2]).max() / np.abs(rows[:, 1]).max())


@pytest.mark.slow
def test_reaction_diffusion_accuracy_without_overshoot(tmp_path):
    failures = []
    for activation, bar in [("leaky-relu", 0.03), ("sigmoid", 0.01)]:
        out = tmp_path / activation
        report = run_experiment(preset_config("table3", out, activation=activation))
        if not report.rel_l2_u <= bar:
            failures.append(f"{activation}: median rel_l2_u = {report.rel_l2_u:.6f} > {bar}")
        ratio = overshoot_ratio(out)
        if not ratio <= 1.05:
            failures.append(f"{activation}: overshoot ratio = {ratio:.4f} > 1.05")
    assert not failures, "; ".join(failures)


@pytest.mark.slow
def test_interface_problem_separates_the_three_functionals():
    prob = interface_problem(k=10.0)
    part = uniform_partition(prob.interval, 500)
    cfg = TrainConfig(iterations=20_000, lr0=1e-3, decay=HalveEvery(5000), seeds=SEEDS)
    legs = {
        "fosls": (LossKind.FOSLS, Activation.LEAKY_RELU),
        "energy": (LossKind.ENERGY, Activation.SIGMOID),
        "ls": (LossKind.LS, Activation.SIGMOID),
    }
    medians, by_seed = {}, {}
    for name, (kind, activation) in legs.items():
        median, outcomes = run_replicated(
            BIG_WIDTHS, BIG_WIDTHS, activation, prob, part, LossSpec(kind), cfg
        )
        medians[name] = median.report.rel_l2_u
        by_seed[name] = {o.seed: o.report.rel_l2_u for o in outcomes}
    failures = []
    if not medians["fosls"] <= 0.02:
        failures.append(f"fosls: median rel_l2_u = {medians['fosls']:.6f} > 0.02")
    if not medians["energy"] <= 0.12:
        failures.append(f"energy: median rel_l2_u = {medians['energy']:.6f} > 0.12")
    if not medians["ls"] >= 0.1:
        failures.append(f"ls: median rel_l2_u = {medians['ls']:.6f} < 0.1")
    for seed in SEEDS:
        fosls, energy, ls = (by_seed[name][seed] for name in ("fosls", "energy", "ls"))
        if not fosls < energy < ls:
            failures.append(
                f"seed {seed}: expected fosls < energy < ls, got "
                f"{fosls:.6f}, {energy:.6f}, {ls:.6f}"
            )
    assert not failures, "; ".join(failures)


@pytest.mark.slow
def test_local_refinement_beats_global_and_uniform_baselines():
    prob = poisson_problem()
    modes = {
        "local": (200, LocalRefine(every=2000, fraction=0.1)),
        "global": (200, GlobalRefineOnce(at=5000)),
        "uniform": (292, None),
    }
    medians = {}
    for name, (points, refine) in modes.items():
        cfg = TrainConfig(iterations=10_000, lr0=5e-4, refine=refine, seeds=SEEDS)
        _, outcomes = run_replicated(
            SMALL_WIDTHS,
            SMALL_WIDTHS,
            Activation.LEAKY_RELU,
            prob,
            uniform_partition(prob.interval, points),
            LossSpec(LossKind.FOSLS),
            cfg,
            denominator=DenominatorKind.COMPUTED,
        )
        medians[name] = statistics.median(o.report.rel_functional for o in outcomes)
    assert medians["local"] < medians["global"] and medians["local"] < medians["uniform"], (
        f"median relative functional values: {medians}"
    )


def test_invariant_suite_is_fast_and_training_free():
    suite = Path(__file__).with_name("test_properties.py")
    assert "deepls.train" not in suite.read_text()
    started = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", str(suite)],
        capture_output=True,
        text=True,
    )
    elapsed = time.perf_counter() - started
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert elapsed < 60.0, f"invariant suite took {elapsed:.1f}s"


@pytest.mark.slow
def test_preset_rerun_from_snapshot_is_bit_identical(tmp_path):
    """Replay mechanics are length-independent, so the preset runs shortened."""
    first = tmp_path / "first"
    run_experiment(preset_config("table2", first, iters=600))
    snapshot = json.loads((first / "config.json").read_text())
    rerun = tmp_path / "rerun"
    run_experiment(replace(ExperimentConfig.from_dict(snapshot), out=str(rerun)))
    for seed in SEEDS:
        name = f"history_{seed}.csv"
        assert (first / name).read_bytes() == (rerun / name).read_bytes(), name
    assert (first / "solution.csv").read_bytes() == (rerun / "solution.csv").read_bytes()
