from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from akucb.network import grid_topology
from akucb.traffic import (
    QueueState,
    TrafficDriver,
    TrafficModel,
    make_grid_experiment_traffic,
    make_random_network_experiment,
    make_ring_experiment,
    step_queues,
)


class FixedRng:
    """Stands in for a Generator: random() returns preset uniforms."""

    def __init__(self, *arrays):
        self._arrays = list(arrays)

    def random(self, shape=None):
        return np.asarray(self._arrays.pop(0), dtype=float)


def bern_sampler(rng, mu, shape):
    return (rng.random(shape) < mu).astype(float)


def test_step_truncates_at_zero():
    tm = TrafficModel([0.0], [1.0], sampler=bern_sampler)
    qs, x = step_queues(QueueState([0]), [0], tm, FixedRng([0.0], [0.5]))
    assert qs.queues.tolist() == [0] and x == {0: 1.0}


def test_step_service_and_arrival():
    tm = TrafficModel([1.0, 1.0], [1.0, 1.0], sampler=bern_sampler)
    qs, x = step_queues(QueueState([5, 5]), [0], tm, FixedRng([0.0], [0.0, 0.0]))
    assert qs.queues.tolist() == [5, 6]
    assert list(x) == [0] and qs.t == 2


def test_queue_state_rejects_negative():
    with pytest.raises(ValueError):
        QueueState([-1])


def test_traffic_model_validation():
    with pytest.raises(ValueError):
        TrafficModel([0.5], [1.2])
    with pytest.raises(ValueError):
        TrafficModel([0.5, 0.5], [0.5])


def test_grid_traffic():
    g = grid_topology(4, 4)
    tm = make_grid_experiment_traffic(g, 0.08, 3)
    assert np.all(tm.arrival == 0.08)
    assert np.array_equal(tm.service, make_grid_experiment_traffic(g, 0.08, 3).service)
    assert np.all((tm.service >= 0.25) & (tm.service <= 0.75))


def test_ring_experiment():
    ex = make_ring_experiment(0.08)
    assert np.allclose(ex.traffic.arrival, 1 / 6 + 0.08)
    assert ex.traffic.arrival[0] == pytest.approx(0.24667, abs=1e-5)
    assert ex.initial_queues.tolist() == [3000, 2000, 1000, 3000, 2000, 1000]
    assert ex.frame_length == 6000 and np.all(ex.traffic.service == 0.5)
    assert np.allclose(make_ring_experiment(0).traffic.arrival, 1 / 6)
    with pytest.raises(ValueError):
        make_ring_experiment(-0.1)


def test_random_network_experiment():
    ex = make_random_network_experiment(0.3, 0, 1)
    assert (ex.graph.node_count, ex.graph.link_count) == (50, 200)
    assert ex.frame_length == 500
    assert np.all((ex.rho >= 0.4) & (ex.rho <= 0.7))
    assert np.allclose(ex.traffic.arrival, 0.3 * ex.rho)


def test_driver_is_reproducible_and_block_independent():
    tm = TrafficModel(np.full(4, 0.3), np.full(4, 0.6))
    a = TrafficDriver(tm, 9)
    b = TrafficDriver(tm, 9)
    for _ in range(5000):
        xa, xb = a.next_slot(), b.next_slot()
        assert all(np.array_equal(u, v) for u, v in zip(xa, xb))


def test_driver_rates():
    tm = TrafficModel(np.full(3, 0.2), np.full(3, 0.7))
    d = TrafficDriver(tm, 1)
    arr = np.array([d.next_slot()[0] for _ in range(20000)])
    assert abs(arr.mean() - 0.2) < 0.01


def test_driver_custom_sampler_in_unit_interval():
    tm = TrafficModel(np.full(2, 0.1), np.full(2, 0.5),
                      sampler=lambda rng, mu, shape: rng.uniform(0, 2 * mu, size=shape))
    d = TrafficDriver(tm, 0)
    for _ in range(100):
        _, x, dep = d.next_slot()
        assert np.all((x >= 0) & (x <= 1)) and set(np.unique(dep)) <= {0.0, 1.0}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.lists(st.integers(0, 5), min_size=3, max_size=3))
def test_step_changes_each_queue_by_at_most_one(seed, q0):
    tm = TrafficModel([0.3, 0.5, 0.2], [0.6, 0.4, 0.9])
    rng = np.random.default_rng(seed)
    qs = QueueState(q0)
    for t in range(200):
        sched = [0, 2] if t % 2 else [1]
        before = qs.queues.copy()
        qs, x = step_queues(qs, sched, tm, rng)
        assert set(x) == set(sched)
        assert np.all(qs.queues >= 0)
        assert np.all(qs.queues - before <= 1) and np.all(qs.queues - before >= -1)
