"""Per-link UCB statistics with frame-scoped queue weighting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .augment import LocalView
from .matching import greedy_matching
from .network import Matching, NetworkGraph


class IndexUndefined(ValueError):
    """Raised when an index is requested for a link that has never been played."""


@dataclass(frozen=True)
class FrameContext:
    frame_length: int
    frame: int  # 1-based
    slot: int  # in-frame slot, 1..frame_length
    link_count: int

    @property
    def frame_start(self) -> int:
        return (self.frame - 1) * self.frame_length + 1

    @property
    def global_slot(self) -> int:
        return self.frame_start + self.slot - 1

    @property
    def warming_up(self) -> bool:
        return self.slot <= self.link_count


def queue_ratios(queues: Sequence[float]) -> np.ndarray:
    """``q_i / max_j q_j``; all ones when every queue is empty."""
    q = np.asarray(queues, dtype=float)
    q_star = q.max() if q.size else 0.0
    if q_star <= 0:
        return np.ones_like(q)
    return q / q_star


def true_weight_vector(queues: Sequence[float], mu: Sequence[float]) -> np.ndarray:
    """Frame weights ``(q_i / q*) * mu_i`` known only to a genie."""
    return queue_ratios(queues) * np.asarray(mu, dtype=float)


class LinkBanditState:
    """Play counts and reward sums for one frame, plus the frozen queue snapshot."""

    def __init__(self, link_count: int):
        self.link_count = link_count
        self.plays = np.zeros(link_count, dtype=np.int64)
        self.reward_sum = np.zeros(link_count)
        self.frame_queues = np.zeros(link_count, dtype=np.int64)
        self.q_star = 0
        self.ratios = np.ones(link_count)

    def reset_frame(self, queues: Sequence[int]) -> None:
        q = np.asarray(queues, dtype=np.int64)
        if q.shape != (self.link_count,):
            raise ValueError("queue vector has the wrong length")
        self.plays[:] = 0
        self.reward_sum[:] = 0.0
        self.frame_queues = q.copy()
        self.q_star = int(q.max()) if q.size else 0
        self.ratios = queue_ratios(q)

    def record_play(self, link: int, x: float) -> None:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"reward {x} outside [0, 1]")
        self.plays[link] += 1
        self.reward_sum[link] += x

    def record_plays(self, links: Sequence[int], xs: Sequence[float]) -> None:
        for lid, x in zip(links, xs):
            self.record_play(lid, x)

    def raw_mean(self, link: int) -> float:
        if self.plays[link] == 0:
            raise IndexUndefined(f"link {link} has not been played this frame")
        return float(self.reward_sum[link] / self.plays[link])

    def weighted_mean(self, link: int) -> float:
        return float(self.ratios[link]) * self.raw_mean(link)

    def _exploration(self, t: int) -> float:
        return (self.link_count + 1) * math.log(t) if t > 1 else 0.0

    def ucb_index(self, link: int, t: int) -> float:
        tau = int(self.plays[link])
        if tau == 0:
            raise IndexUndefined(f"link {link} has not been played this frame")
        return self.weighted_mean(link) + math.sqrt(self._exploration(t) / tau)

    def _check_warm(self) -> None:
        if self.plays.min(initial=1) == 0:
            raise IndexUndefined("some link has not been played this frame")

    def ucb_indices(self, t: int) -> np.ndarray:
        self._check_warm()
        means = self.reward_sum / self.plays
        return self.ratios * means + np.sqrt(self._exploration(t) / self.plays)

    def local_view(self, t: int) -> LocalView:
        """Per-link data a node can hold without knowing the network maximum."""
        self._check_warm()
        return LocalView(
            frame_queues=self.frame_queues.tolist(),
            means=(self.reward_sum / self.plays).tolist(),
            radii=np.sqrt(self._exploration(t) / self.plays).tolist(),
        )


def warmup_schedules(g: NetworkGraph) -> list[Matching]:
    """For slot t (1-based), a matching holding link t-1, completed greedily by id."""
    out = []
    for lid in range(g.link_count):
        w = np.zeros(g.link_count)
        w[lid] = 1.0
        out.append(greedy_matching(g, w))
    return out
