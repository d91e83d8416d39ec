"""Regret, alpha-regret and queue statistics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bandit import true_weight_vector
from .matching import EnumerationTooLarge, MatchingTable, max_weight_matching
from .network import NetworkGraph

REGRET_COLUMNS = ("run", "frame", "t", "regret", "alpha_regret", "normalized_regret")
STABILITY_COLUMNS = ("policy", "lambda", "run", "end_total_queue")
TRACE_COLUMNS = ("policy", "lambda", "run", "t", "total_queue")


class OracleUnavailable(RuntimeError):
    pass


def log_checkpoints(frame_length: int, extra: Iterable[int] = ()) -> list[int]:
    """Slots 10^2, 10^3, ... inside the frame, plus the frame end and extras."""
    pts = set(x for x in extra if 1 <= x <= frame_length)
    x = 100
    while x < frame_length:
        pts.add(x)
        x *= 10
    pts.add(frame_length)
    return sorted(pts)


def regret_sample(t: int, alpha: float, r_star: float, reward_sum: float) -> tuple[float, float]:
    """``t * alpha * r* - sum r_w(S)`` and its value divided by ``r*``."""
    reg = t * alpha * r_star - reward_sum
    return reg, (reg / r_star if r_star > 0 else 0.0)


@dataclass
class RegretAccumulator:
    """Per-frame regret against the genie optimum on true frame weights.

    ``window`` (in-frame slots, inclusive) counts slots whose schedule falls
    below ``alpha * r*``.
    """

    graph: NetworkGraph
    mu: np.ndarray
    alpha: float
    checkpoints: Sequence[int]
    allow_large: bool = False
    window: tuple[int, int] | None = None
    rows: list[tuple] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._table = MatchingTable(self.graph) if self.graph.link_count <= 30 else None
        self._ckpt = set(self.checkpoints)
        self.frame = 0
        self.t = 0
        self.r_star = 0.0
        self.reward_sum = 0.0
        self.w: list[float] = []
        self.window_slots = 0
        self.window_outside = 0
        self.outside_by_frame: list[tuple[int, int]] = []

    def start_frame(self, queues: Sequence[int]) -> None:
        if self.frame:
            self.outside_by_frame.append((self.window_outside, self.window_slots))
        self.frame += 1
        self.t = 0
        self.reward_sum = 0.0
        self.window_slots = 0
        self.window_outside = 0
        w = true_weight_vector(queues, self.mu)
        self.w = w.tolist()
        if self._table is not None:
            _, self.r_star = self._table.best(w)
        else:
            try:
                _, self.r_star = max_weight_matching(self.graph, w, allow_large=self.allow_large)
            except EnumerationTooLarge as exc:
                raise OracleUnavailable(str(exc)) from exc
        self._threshold = self.alpha * self.r_star - 1e-12 * max(1.0, self.r_star)

    def add(self, run: int, schedule: Iterable[int]) -> None:
        w = self.w
        val = 0.0
        for lid in sorted(schedule):
            val += w[lid]
        self.t += 1
        self.reward_sum += val
        if self.window and self.window[0] <= self.t <= self.window[1]:
            self.window_slots += 1
            if val < self._threshold:
                self.window_outside += 1
        if self.t in self._ckpt:
            reg, _ = regret_sample(self.t, 1.0, self.r_star, self.reward_sum)
            areg, _ = regret_sample(self.t, self.alpha, self.r_star, self.reward_sum)
            norm = reg / self.r_star if self.r_star > 0 else 0.0
            self.rows.append((run, self.frame, self.t, reg, areg, norm))

    def finish(self) -> None:
        if self.frame:
            self.outside_by_frame.append((self.window_outside, self.window_slots))
            self.frame = 0


@dataclass
class QueueStats:
    end_total: float
    max_total: float


def queue_stats(trace: Sequence[float]) -> QueueStats:
    """End and peak total queue of one run's total-queue trace."""
    if len(trace) == 0:
        return QueueStats(0.0, 0.0)
    return QueueStats(float(trace[-1]), float(max(trace)))


def mean_end_queue(rows: Iterable[tuple], policy: str, lam: float) -> float:
    """Arithmetic mean of end-of-run totals from stability rows."""
    vals = [r[3] for r in rows if r[0] == policy and math.isclose(r[1], lam)]
    if not vals:
        raise KeyError(f"no rows for policy {policy!r} at lambda {lam}")
    return float(np.mean(vals))


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for row in rows:
            wr.writerow([_fmt(x) for x in row])


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(round(x, 10))
    return str(x)
