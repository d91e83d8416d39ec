"""Slotted simulation of one policy on one network for one run."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bandit import FrameContext
from .metrics import RegretAccumulator
from .network import Matching, NetworkGraph
from .policies import Policy
from .traffic import TrafficDriver, TrafficModel

SlotObserver = Callable[[int, Matching, np.ndarray], None]


@dataclass
class RunResult:
    end_queues: np.ndarray
    trace: list[tuple[int, int]] = field(default_factory=list)
    arrivals: int = 0
    departures: int = 0

    @property
    def end_total(self) -> int:
        return int(self.end_queues.sum())


def simulate(
    g: NetworkGraph,
    traffic: TrafficModel,
    policy: Policy,
    horizon: int,
    frame_length: int,
    traffic_seed,
    *,
    initial_queues: Sequence[int] | None = None,
    run: int = 0,
    regret: RegretAccumulator | None = None,
    trace_every: int = 0,
    draw_when_empty: bool = True,
    observer: SlotObserver | None = None,
) -> RunResult:
    """Run ``horizon`` slots. Frames of ``frame_length`` slots start at slot 1.

    The bandit observes ``X_i`` for every scheduled link, including empty
    ones unless ``draw_when_empty`` is off; the queue drops by one only when a
    packet is present and the transmission succeeds.
    """
    L = g.link_count
    q = np.zeros(L, dtype=np.int64) if initial_queues is None else np.array(initial_queues, dtype=np.int64)
    if q.shape != (L,) or np.any(q < 0):
        raise ValueError("initial queues must be a non-negative vector, one entry per link")
    driver = TrafficDriver(traffic, traffic_seed)
    result = RunResult(q)
    n_arr = 0
    n_dep = 0
    frame = 0
    for t in range(1, horizon + 1):
        slot = (t - 1) % frame_length + 1
        if slot == 1:
            frame += 1
            if policy.uses_frames:
                policy.start_frame(q)
            if regret is not None:
                regret.start_frame(q)
        ctx = FrameContext(frame_length, frame, slot, L)
        schedule = policy.select(ctx, q)
        arr, x, dep = driver.next_slot()
        if draw_when_empty:
            seen = schedule
        else:
            seen = [lid for lid in schedule if q[lid] > 0]
        for lid in schedule:
            if dep[lid] and q[lid] > 0:
                q[lid] -= 1
                n_dep += 1
        q += arr
        n_arr += int(arr.sum())
        policy.observe(seen, x)
        if regret is not None:
            regret.add(run, schedule)
        if observer is not None:
            observer(t, schedule, q)
        if trace_every and t % trace_every == 0:
            result.trace.append((t, int(q.sum())))
    if regret is not None:
        regret.finish()
    result.end_queues = q
    result.arrivals = n_arr
    result.departures = n_dep
    return result
