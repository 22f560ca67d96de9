import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rismec.queues import (QueueState, actual_throughput, conservation_gap,
                           draw_arrivals, latency, step_queues)
from rismec.scenario import load_config

CFG = load_config("")


class TestArrivals:
    def test_zero_rate_zero_arrivals(self, rng):
        cfg = load_config("arrival_rate_bps = 0")
        assert np.all(draw_arrivals(rng, cfg) == 0)

    def test_poisson_mean(self, rng):
        # mean 5e4 * 0.1 = 5000 bits within 3 sigma over 1e4 slots
        n = 10_000
        total = sum(draw_arrivals(rng, CFG)[0] for _ in range(n))
        mean = total / n
        assert abs(mean - 5000.0) < 3 * np.sqrt(5000.0 / n)

    def test_integer_valued(self, rng):
        a = draw_arrivals(rng, CFG)
        assert np.all(a == np.round(a))

    def test_deterministic_mode(self, rng):
        cfg = load_config("arrival_mode = deterministic")
        for _ in range(5):
            assert np.all(draw_arrivals(rng, cfg) == 5000.0)


class TestGating:
    def test_boundary_included(self):
        r = np.array([1e5, 2e5])
        c = np.array([1e5, 2e5])
        assert np.array_equal(actual_throughput(r, c), r)

    def test_above_capacity_loses_everything(self):
        out = actual_throughput(np.array([1e5 + 1e-6]), np.array([1e5]))
        assert out[0] == 0.0

    def test_zero_rate_zero_throughput(self):
        assert actual_throughput(np.array([0.0]), np.array([1e5]))[0] == 0.0


class TestStepQueues:
    def test_hand_case_plain_decrement(self):
        st0 = QueueState(np.array([100.0]), np.zeros(1), np.array([100.0]),
                         np.zeros(1))
        cfg = load_config("num_ues = 1")
        out = step_queues(st0, np.array([40.0]), np.zeros(1), np.array([10.0]),
                          1.0, cfg)
        assert out.q_local[0] == pytest.approx(70.0)
        assert out.q_remote[0] == pytest.approx(40.0)

    def test_hand_case_underflow_clamps_at_buffer(self):
        st0 = QueueState(np.array([30.0]), np.zeros(1), np.array([30.0]),
                         np.zeros(1))
        cfg = load_config("num_ues = 1")
        out = step_queues(st0, np.array([40.0]), np.zeros(1), np.array([7.0]),
                          1.0, cfg)
        assert out.q_local[0] == pytest.approx(7.0)    # all 30 left, A remains
        assert out.q_remote[0] == pytest.approx(30.0)  # min(30, 40) transferred

    def test_fixed_point(self):
        st0 = QueueState(np.array([55.0]), np.array([20.0]), np.array([75.0]),
                         np.zeros(1))
        cfg = load_config("num_ues = 1")
        out = step_queues(st0, np.zeros(1), np.zeros(1), np.zeros(1), 0.1, cfg)
        assert out.q_local[0] == 55.0 and out.q_remote[0] == 20.0

    def test_remote_service(self):
        cfg = load_config("num_ues = 1")   # 0.1 bits per cycle
        st0 = QueueState(np.zeros(1), np.array([500.0]), np.array([500.0]),
                         np.zeros(1))
        out = step_queues(st0, np.zeros(1), np.array([2000.0]), np.zeros(1),
                          1.0, cfg)
        assert out.q_remote[0] == pytest.approx(300.0)   # 2000 cycles * 0.1
        assert out.cum_processed[0] == pytest.approx(200.0)

    @given(st.lists(st.tuples(
        st.floats(0, 1e5), st.floats(0, 1e6), st.floats(0, 1e5)),
        min_size=1, max_size=40))
    @settings(max_examples=30, deadline=None)
    def test_nonnegativity_and_conservation(self, steps):
        cfg = load_config("num_ues = 1")
        state = QueueState.zeros(1)
        for thr, cyc, arr in steps:
            state = step_queues(state, np.array([thr]), np.array([cyc]),
                                np.array([round(arr)]), 0.08, cfg)
            assert state.q_local[0] >= 0 and state.q_remote[0] >= 0
            assert np.all(conservation_gap(state) < 1e-6)


class TestLatency:
    def test_hand_value_equals_bound(self):
        # 1.5e4 bits / 5e4 bit/s = 0.3 s
        assert latency(np.full(4, 1.5e4), CFG)[0] == pytest.approx(0.3)

    def test_zero_queue_zero_latency(self):
        assert np.all(latency(np.zeros(4), CFG) == 0)

    def test_linearity(self):
        l1 = latency(np.full(4, 1e4), CFG)
        l2 = latency(np.full(4, 2e4), CFG)
        assert np.allclose(l2, 2 * l1)

    def test_zero_rate_is_absent_not_zero(self):
        cfg = load_config("arrival_rate_bps = 0")
        out = latency(np.full(4, 1e4), cfg)
        assert np.all(np.isnan(out))
