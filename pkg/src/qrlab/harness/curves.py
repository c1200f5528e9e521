"""Per-seed curve files, binned cross-seed aggregation and summary windows."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..ppo import LearningCurve

SEED_HEADER = ("step", "episodic_return")
AGG_HEADER = ("bin_start", "mean", "std", "n_seeds")
DEFAULT_BIN = 2000


def write_curve(path: str | Path, curve: LearningCurve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SEED_HEADER)
        for s, r in zip(curve.steps, curve.returns):
            w.writerow((int(s), repr(float(r))))


def read_curve(path: str | Path, seed: int | None = None) -> LearningCurve:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != SEED_HEADER:
        raise ValueError(f"{path}: expected header {','.join(SEED_HEADER)}")
    if seed is None:
        stem = Path(path).stem
        seed = int(stem.split("_")[-1]) if stem.startswith("seed_") else -1
    return LearningCurve(seed, [int(r[0]) for r in rows[1:]], [float(r[1]) for r in rows[1:]])


@dataclass
class AggregateCurve:
    bin_start: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    n_seeds: np.ndarray

    def __len__(self) -> int:
        return len(self.bin_start)


def _series(c):
    if isinstance(c, LearningCurve):
        return np.asarray(c.steps, dtype=np.int64), np.asarray(c.returns, dtype=np.float64)
    steps, returns = c
    return np.asarray(steps, dtype=np.int64), np.asarray(returns, dtype=np.float64)


def aggregate(curves, bin_width: int = DEFAULT_BIN) -> AggregateCurve:
    """Mean-of-seed-means and population std per ``bin_width``-step bucket.

    A seed counts towards a bin only if it finished at least one episode there.
    """
    curves = list(curves)
    if not curves:
        raise ValueError("aggregate() needs at least one curve")
    if bin_width < 1:
        raise ValueError("bin_width must be positive")
    per_seed = []
    for c in curves:
        steps, returns = _series(c)
        bins = steps // bin_width
        uniq, inv = np.unique(bins, return_inverse=True)
        sums = np.bincount(inv, weights=returns, minlength=len(uniq))
        counts = np.bincount(inv, minlength=len(uniq))
        per_seed.append(dict(zip(uniq.tolist(), (sums / counts).tolist())))
    grid = sorted(set().union(*per_seed))
    mean, std, n = [], [], []
    for b in grid:
        xs = np.array([d[b] for d in per_seed if b in d])
        mean.append(xs.mean())
        std.append(xs.std())
        n.append(len(xs))
    return AggregateCurve(np.array(grid, dtype=np.int64) * bin_width, np.array(mean),
                          np.array(std), np.array(n, dtype=np.int64))


def write_aggregate(path: str | Path, agg: AggregateCurve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGG_HEADER)
        for row in zip(agg.bin_start, agg.mean, agg.std, agg.n_seeds):
            w.writerow((int(row[0]), repr(float(row[1])), repr(float(row[2])), int(row[3])))


def read_aggregate(path: str | Path) -> AggregateCurve:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != AGG_HEADER:
        raise ValueError(f"{path}: expected header {','.join(AGG_HEADER)}")
    cols = list(zip(*rows[1:])) or [(), (), (), ()]
    return AggregateCurve(np.array(cols[0], dtype=np.int64), np.array(cols[1], dtype=float),
                          np.array(cols[2], dtype=float), np.array(cols[3], dtype=np.int64))


def final_window_mean(curve: LearningCurve, total_steps: int, window: int = 20_000) -> float:
    """Mean return of episodes that ended within the last ``window`` steps (nan if none)."""
    steps, returns = _series(curve)
    mask = steps > total_steps - window
    return float(returns[mask].mean()) if mask.any() else float("nan")


def last_episodes_mean(curve: LearningCurve, n: int = 10) -> float:
    _, returns = _series(curve)
    return float(returns[-n:].mean()) if len(returns) else float("nan")
