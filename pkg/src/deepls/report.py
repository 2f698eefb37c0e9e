"""Figure rendering for stored run directories.

Reads the delimited artifacts a run leaves behind (``solution.csv`` and the
per-seed ``history_<seed>.csv`` files) and renders them to PNG files next
to the data: ``solution.png`` with the exact and predicted u and sigma, and
``training.png`` with the loss history of every replica.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_run", "render_solution", "render_training"]


def _read_columns(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"{path} has no data rows")
    data = np.array(rows, dtype=np.float64)
    return {name: data[:, i] for i, name in enumerate(header)}


def render_solution(run_dir: Path, out_path: Path) -> None:
    cols = _read_columns(run_dir / "solution.csv")
    has_exact = not np.all(np.isnan(cols["u_exact"]))
    trained_sigma = not np.allclose(cols["sigma_pred"], 0.0)
    panels = 2 if trained_sigma else 1
    fig, axes = plt.subplots(1, panels, figsize=(5.0 * panels, 3.6), squeeze=False)
    ax = axes[0][0]
    if has_exact:
        ax.plot(cols["x"], cols["u_exact"], "k--", lw=1.2, label="exact")
    ax.plot(cols["x"], cols["u_pred"], "C0-", lw=1.0, label="network")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend(frameon=False)
    if trained_sigma:
        ax = axes[0][1]
        if has_exact:
            ax.plot(cols["x"], cols["sigma_exact"], "k--", lw=1.2, label="exact")
        ax.plot(cols["x"], cols["sigma_pred"], "C1-", lw=1.0, label="network")
        ax.set_xlabel("x")
        ax.set_ylabel("sigma")
        ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_training(run_dir: Path, out_path: Path) -> None:
    histories = sorted(run_dir.glob("history_*.csv"))
    if not histories:
        raise ValueError(f"no history CSVs in {run_dir}")
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for path in histories:
        cols = _read_columns(path)
        seed = path.stem.split("_", 1)[1]
        ax.semilogy(cols["iteration"], cols["loss"], lw=0.9, label=f"seed {seed}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_run(run_dir) -> list[Path]:
    """Render solution.png and training.png inside a run directory."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise ValueError(f"{run_dir} is not a run directory")
    written = []
    solution_png = run_dir / "solution.png"
    render_solution(run_dir, solution_png)
    written.append(solution_png)
    training_png = run_dir / "training.png"
    render_training(run_dir, training_png)
    written.append(training_png)
    return written
