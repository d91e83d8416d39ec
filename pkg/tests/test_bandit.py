from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from akucb.bandit import (
    FrameContext,
    IndexUndefined,
    LinkBanditState,
    queue_ratios,
    true_weight_vector,
    warmup_schedules,
)
from akucb.network import NetworkGraph, grid_topology, is_matching, ring_topology


def test_ucb_index_example():
    st_ = LinkBanditState(3)
    st_.reset_frame([5, 5, 5])
    for x in [1.0] * 3 + [0.2] * 1 + [0.0] * 12:
        st_.record_play(0, x)
    assert st_.raw_mean(0) == pytest.approx(0.2)
    # independent evaluation: 0.2 + sqrt(4 ln 100 / 16)
    expect = 0.2 + math.sqrt(4 * math.log(100) / 16)
    assert st_.ucb_index(0, 100) == pytest.approx(expect, abs=1e-12)
    assert st_.ucb_index(0, 100) == pytest.approx(1.27298, abs=1e-5)


def test_zero_queue_index_is_exploration_only():
    # (|L|+1) ln t = 4 * 2 = 8 plays at t = e^2
    st_ = LinkBanditState(3)
    st_.reset_frame([0, 4, 2])
    st_.record_plays([0] * 8, [1.0] * 8)
    assert st_.ucb_index(0, math.e**2) == pytest.approx(1.0, abs=1e-12)


def test_index_at_t1_is_weighted_mean():
    st_ = LinkBanditState(2)
    st_.reset_frame([2, 4])
    st_.record_play(0, 1.0)
    assert st_.ucb_index(0, 1) == pytest.approx(0.5)


def test_record_play_examples():
    st_ = LinkBanditState(1)
    st_.reset_frame([1])
    st_.record_play(0, 1.0)
    assert st_.raw_mean(0) == 1.0
    st_.record_play(0, 0.0)
    assert st_.raw_mean(0) == 0.5
    with pytest.raises(ValueError):
        st_.record_play(0, 1.5)


def test_reset_frame_ratios():
    st_ = LinkBanditState(3)
    st_.reset_frame([3, 1, 2])
    assert st_.q_star == 3
    assert np.allclose(st_.ratios, [1, 1 / 3, 2 / 3])
    st_.reset_frame([0, 0, 0])
    assert np.allclose(st_.ratios, 1)
    with pytest.raises(IndexUndefined):
        st_.ucb_index(0, 5)
    with pytest.raises(IndexUndefined):
        st_.ucb_indices(5)


def test_frame_isolation():
    a = LinkBanditState(4)
    a.reset_frame([1, 2, 3, 4])
    for lid in range(4):
        a.record_play(lid, 0.3)
    a.reset_frame([4, 3, 2, 1])
    b = LinkBanditState(4)
    b.reset_frame([4, 3, 2, 1])
    assert np.array_equal(a.plays, b.plays) and np.array_equal(a.reward_sum, b.reward_sum)
    assert np.array_equal(a.ratios, b.ratios)


def test_true_weight_vector_examples():
    assert np.allclose(true_weight_vector([3, 1, 2], [0.6, 0.3, 0.9]), [0.6, 0.1, 0.6])
    assert np.allclose(true_weight_vector([0, 0], [0.2, 0.7]), [0.2, 0.7])
    assert np.allclose(true_weight_vector([5, 1], [0, 0]), 0)
    assert np.allclose(queue_ratios([0, 4]), [0, 1])


def test_warmup_schedules():
    assert [set(m) for m in warmup_schedules(NetworkGraph(2, ((0, 1),)))] == [{0}]
    ring = warmup_schedules(ring_topology(6))
    assert ring[0] == {0, 2, 4}
    g = grid_topology(4, 4)
    scheds = warmup_schedules(g)
    for t, m in enumerate(scheds):
        assert t in m and is_matching(g, m)
    assert set().union(*scheds) == set(range(g.link_count))


def test_frame_context():
    ctx = FrameContext(frame_length=100, frame=3, slot=7, link_count=5)
    assert ctx.frame_start == 201 and ctx.global_slot == 207
    assert not ctx.warming_up
    assert FrameContext(100, 1, 5, 5).warming_up


def test_mean_concentrates():
    rng = np.random.default_rng(2024)
    st_ = LinkBanditState(1)
    st_.reset_frame([1])
    st_.record_plays([0] * 100_000, (rng.random(100_000) < 0.5).astype(float))
    assert 0.49 <= st_.raw_mean(0) <= 0.51


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.integers(1, 10**6), st.integers(0, 100))
def test_index_dominates_weighted_mean(xs, t, q):
    st_ = LinkBanditState(2)
    st_.reset_frame([q, 100])
    st_.record_plays([0] * len(xs), xs)
    st_.record_play(1, 0.5)
    assert st_.ucb_index(0, t) >= st_.weighted_mean(0)
    assert 0 <= st_.weighted_mean(0) <= 1
    assert st_.ucb_indices(t)[0] == pytest.approx(st_.ucb_index(0, t))
