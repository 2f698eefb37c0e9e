"""Interval partitions, midpoint quadrature, and adaptive refinement."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import ceil
from pathlib import Path
from typing import Callable

import numpy as np

__all__ = [
    "Partition",
    "uniform_partition",
    "refine_global",
    "refine_local",
    "integrate",
]


@dataclass(frozen=True)
class Partition:
    """Strictly increasing breakpoints splitting an interval into elements."""

    breakpoints: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=np.float64)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("a partition needs at least two breakpoints")
        if not np.isfinite(bp).all():
            raise ValueError("breakpoints must be finite")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        bp = bp.copy()
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    @property
    def left(self) -> float:
        return float(self.breakpoints[0])

    @property
    def right(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def n_elements(self) -> int:
        return self.breakpoints.size - 1

    @property
    def midpoints(self) -> np.ndarray:
        bp = self.breakpoints
        return 0.5 * (bp[:-1] + bp[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def endpoints(self) -> np.ndarray:
        return np.array([self.left, self.right])

    @property
    def h_left(self) -> float:
        """Length of the element adjacent to the left boundary."""
        return float(self.breakpoints[1] - self.breakpoints[0])

    @property
    def h_right(self) -> float:
        """Length of the element adjacent to the right boundary."""
        return float(self.breakpoints[-1] - self.breakpoints[-2])

    # ------------------------------------------------------------------

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["breakpoint"])
            for x in self.breakpoints:
                writer.writerow([repr(float(x))])

    @classmethod
    def load_csv(cls, path) -> "Partition":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["breakpoint"]:
            raise ValueError(f"{Path(path)} is not a partition file")
        return cls(np.array([float(r[0]) for r in rows[1:]]))


def uniform_partition(interval: tuple[float, float], n: int) -> Partition:
    """Split ``interval`` into ``n`` equal elements."""
    lo, hi = interval
    if n < 1:
        raise ValueError("need at least one element")
    if not hi > lo:
        raise ValueError("interval must have positive length")
    return Partition(np.linspace(lo, hi, int(n) + 1))


def refine_global(part: Partition) -> Partition:
    """Bisect every element."""
    return _bisect(part, np.ones(part.n_elements, dtype=bool))


def refine_local(part: Partition, indicators, fraction: float) -> Partition:
    """Bisect the elements carrying the largest error indicators.

    Marks every element whose indicator reaches the ceil(fraction * n)-th
    largest value, so ties at the threshold are all refined.
    """
    eta = np.asarray(indicators, dtype=np.float64)
    if eta.shape != (part.n_elements,):
        raise ValueError("one indicator per element is required")
    if not np.isfinite(eta).all():
        raise ValueError("indicators must be finite")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    n = part.n_elements
    count = ceil(fraction * n)
    threshold = np.partition(eta, n - count)[n - count]
    return _bisect(part, eta >= threshold)


def _bisect(part: Partition, marked: np.ndarray) -> Partition:
    bp = part.breakpoints
    mids = part.midpoints
    pieces = []
    for i in range(part.n_elements):
        pieces.append(bp[i])
        if marked[i]:
            pieces.append(mids[i])
    pieces.append(bp[-1])
    return Partition(np.array(pieces))


def integrate(g: Callable, part: Partition) -> float:
    """Midpoint-rule integral of ``g`` over the partition."""
    return float(np.sum(np.asarray(g(part.midpoints)) * part.widths))
