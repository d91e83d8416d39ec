"""Per-slot scheduling policies: A^k-UCB, its local-normalizer variant,
greedy matching on UCB indices, and the max-weight genie."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .augment import (
    PREFER_MATCHED,
    ProtocolStream,
    RoundDraws,
    run_augmentation_round,
    run_augmentation_round_distributed,
)
from .bandit import FrameContext, LinkBanditState, warmup_schedules
from .matching import MAX_BNB_LINKS, MatchingTable, greedy_matching, max_weight_matching
from .network import Matching, NetworkGraph

AKUCB, DIST_AKUCB, UCB_GMM, MWM_GENIE = "akucb", "dakucb", "ucb_gmm", "mwm"
POLICY_KINDS = (AKUCB, DIST_AKUCB, UCB_GMM, MWM_GENIE)


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    k: int = 3
    p: float = 0.2
    frame_length: int = 5000
    label: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.kind in (AKUCB, DIST_AKUCB):
            if self.k < 2:
                raise ValueError("k must be at least 2")
            if not 0 < self.p < 1:
                raise ValueError("p must lie in (0, 1)")
        if self.frame_length < 1:
            raise ValueError("frame_length must be positive")

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind in (AKUCB, DIST_AKUCB):
            return f"{self.kind}_k{self.k}"
        return self.kind

    @property
    def uses_frames(self) -> bool:
        return self.kind != MWM_GENIE


def node_normalizers(g: NetworkGraph, queues: Sequence[int]) -> list[float]:
    """Largest frame-start queue among each node's links."""
    return [float(max((queues[l] for l in g.incident[v]), default=0)) for v in range(g.node_count)]


def akucb_slot(g: NetworkGraph, ctx: FrameContext, bandit: LinkBanditState, s_prev: Matching,
               p: float, k: int, draws: RoundDraws, collision: str = PREFER_MATCHED) -> Matching:
    w = bandit.ucb_indices(ctx.slot)
    s_new, _ = run_augmentation_round(g, s_prev, w, p, k, draws, collision=collision)
    return s_new


def dist_akucb_slot(g: NetworkGraph, ctx: FrameContext, normalizers: list[float],
                    bandit: LinkBanditState, s_prev: Matching, p: float, k: int,
                    draws: RoundDraws, collision: str = PREFER_MATCHED) -> Matching:
    view = bandit.local_view(ctx.slot)
    s_new, _, _ = run_augmentation_round_distributed(
        g, s_prev, view, normalizers, p, k, draws, collision=collision
    )
    return s_new


def ucb_gmm_slot(g: NetworkGraph, ctx: FrameContext, bandit: LinkBanditState) -> Matching:
    return greedy_matching(g, bandit.ucb_indices(ctx.slot))


def mwm_genie_slot(g: NetworkGraph, queues: Sequence[int], mu: Sequence[float],
                   table: MatchingTable | None = None) -> Matching:
    w = np.asarray(queues, dtype=float) * np.asarray(mu, dtype=float)
    if table is not None:
        return table.best(w)[0]
    return max_weight_matching(g, w)[0]


class Policy:
    """A stateful scheduler owned by one run."""

    name = "policy"
    uses_frames = True

    def start_frame(self, queues: Sequence[int]) -> None:
        pass

    def select(self, ctx: FrameContext, queues: Sequence[int]) -> Matching:
        raise NotImplementedError

    def observe(self, links: Sequence[int], rewards: Sequence[float]) -> None:
        pass


class _UcbPolicy(Policy):
    def __init__(self, g: NetworkGraph):
        self.g = g
        self.bandit = LinkBanditState(g.link_count)
        self._warmup = warmup_schedules(g)

    def start_frame(self, queues):
        self.bandit.reset_frame(queues)

    def observe(self, links, rewards):
        plays = self.bandit.plays
        sums = self.bandit.reward_sum
        for lid in links:
            plays[lid] += 1
            sums[lid] += rewards[lid]


class AkUcbPolicy(_UcbPolicy):
    def __init__(self, g: NetworkGraph, k: int, p: float, draw_seed, *,
                 collision: str = PREFER_MATCHED, reset_schedule: bool = True, name: str | None = None):
        super().__init__(g)
        self.k, self.p = k, p
        self.collision = collision
        self.reset_schedule = reset_schedule
        self.stream = ProtocolStream(draw_seed, g.node_count)
        self.schedule = Matching(g)
        self.name = name or f"akucb_k{k}"

    def start_frame(self, queues):
        super().start_frame(queues)
        if self.reset_schedule:
            self.schedule = Matching(self.g)

    def select(self, ctx, queues):
        draws = self.stream.next_round()
        if ctx.warming_up:
            return self._warmup[ctx.slot - 1]
        self.schedule = self._step(ctx, draws)
        return self.schedule

    def _step(self, ctx, draws):
        return akucb_slot(self.g, ctx, self.bandit, self.schedule, self.p, self.k, draws, self.collision)


class DistAkUcbPolicy(AkUcbPolicy):
    def __init__(self, g: NetworkGraph, k: int, p: float, draw_seed, **kw):
        kw.setdefault("name", f"dakucb_k{k}")
        super().__init__(g, k, p, draw_seed, **kw)
        self.normalizers = [0.0] * g.node_count

    def start_frame(self, queues):
        super().start_frame(queues)
        self.normalizers = node_normalizers(self.g, queues)

    def _step(self, ctx, draws):
        return dist_akucb_slot(self.g, ctx, self.normalizers, self.bandit, self.schedule,
                               self.p, self.k, draws, self.collision)


class UcbGmmPolicy(_UcbPolicy):
    name = UCB_GMM

    def select(self, ctx, queues):
        if ctx.warming_up:
            return self._warmup[ctx.slot - 1]
        return ucb_gmm_slot(self.g, ctx, self.bandit)


class MwmGeniePolicy(Policy):
    name = MWM_GENIE
    uses_frames = False

    def __init__(self, g: NetworkGraph, mu: Sequence[float], *, allow_large: bool = False):
        self.g = g
        self.mu = np.asarray(mu, dtype=float)
        if g.link_count <= MAX_BNB_LINKS:
            self.table = MatchingTable(g)
        elif allow_large:
            self.table = None
        else:
            raise ValueError(
                f"MWM genie on {g.link_count} links needs the exact polynomial solver; "
                "enable the exact_mwm_large toggle"
            )

    def select(self, ctx, queues):
        return mwm_genie_slot(self.g, queues, self.mu, self.table)


def build_policy(spec: PolicySpec, g: NetworkGraph, mu: Sequence[float], draw_seed, *,
                 collision: str = PREFER_MATCHED, reset_schedule: bool = True,
                 allow_large_mwm: bool = False) -> Policy:
    if spec.kind == AKUCB:
        return AkUcbPolicy(g, spec.k, spec.p, draw_seed, collision=collision,
                           reset_schedule=reset_schedule, name=spec.name)
    if spec.kind == DIST_AKUCB:
        return DistAkUcbPolicy(g, spec.k, spec.p, draw_seed, collision=collision,
                               reset_schedule=reset_schedule, name=spec.name)
    if spec.kind == UCB_GMM:
        pol = UcbGmmPolicy(g)
        pol.name = spec.name
        return pol
    pol = MwmGeniePolicy(g, mu, allow_large=allow_large_mwm)
    pol.name = spec.name
    return pol
