import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dxagent.thresholds import (
    ThresholdInit,
    ThresholdMode,
    ThresholdTable,
    batch_update,
    should_stop,
    update_threshold,
)


def table(values=(1.0, 1.0, 1.0), lambda_=0.99, epsilon=0.01, mode=ThresholdMode.ADAPTIVE, fixed=0.0):
    return ThresholdTable(values=np.array(values, dtype=float), lambda_=lambda_,
                          epsilon=epsilon, mode=mode, fixed_value=fixed)


class TestShouldStop:
    def test_below_threshold_stops(self):
        assert should_stop(0.04, 0, table(values=(0.05, 1.0, 1.0)))

    def test_equality_does_not_stop(self):
        assert not should_stop(0.05, 0, table(values=(0.05, 1.0, 1.0)))

    def test_fixed_mode_ignores_table(self):
        t = table(values=(99.0, 99.0, 99.0), mode=ThresholdMode.FIXED, fixed=0.1)
        assert not should_stop(0.5, 0, t)
        assert should_stop(0.05, 0, t)

    def test_unreachable_fixed_threshold_never_stops(self):
        t = table(mode=ThresholdMode.FIXED, fixed=-1.0)
        assert not should_stop(0.0, 0, t)


class TestUpdateThreshold:
    def test_polyak_direct_substitution(self):
        t = table()
        applied = update_threshold(t, 0, 0.5)
        assert applied
        assert t.values[0] == pytest.approx(0.995, abs=1e-12)

    def test_epsilon_gate_blocks_small_differences(self):
        t = table(values=(0.505, 1.0, 1.0))
        applied = update_threshold(t, 0, 0.5)
        assert not applied
        assert t.values[0] == 0.505

    def test_lambda_one_never_moves(self):
        t = table(lambda_=1.0)
        update_threshold(t, 1, 0.0)
        assert t.values[1] == 1.0

    def test_fixed_mode_rejected(self):
        t = table(mode=ThresholdMode.FIXED)
        with pytest.raises(ValueError):
            update_threshold(t, 0, 0.5)

    @given(
        k=st.floats(0.0, 5.0),
        h=st.floats(0.0, 5.0),
        lam=st.floats(0.0, 1.0),
    )
    @settings(max_examples=300, deadline=None)
    def test_stays_nonnegative_and_convex(self, k, h, lam):
        t = table(values=(k, 0.0, 0.0), lambda_=lam)
        update_threshold(t, 0, h)
        v = float(t.values[0])
        assert v >= 0.0
        assert min(k, h) - 1e-12 <= v <= max(k, h) + 1e-12

    def test_entropy_terminated_update_strictly_decreases(self):
        """When every contributing episode stopped via the entropy criterion,
        the group mean lies below K, so a gated update must shrink K."""
        rng = np.random.default_rng(0)
        for _ in range(200):
            k = float(rng.uniform(0.2, 3.0))
            h = float(rng.uniform(0.0, k * 0.999))
            t = table(values=(k, 0.0, 0.0))
            applied = update_threshold(t, 0, h)
            if applied:
                assert t.values[0] < k


class TestBatchUpdate:
    def test_empty_list_no_change(self):
        t = table()
        events = batch_update(t, [])
        assert events == []
        np.testing.assert_array_equal(t.values, [1.0, 1.0, 1.0])

    def test_group_mean_semantics(self):
        t = table()
        batch_update(t, [(0, 0.4), (0, 0.6)])
        assert t.values[0] == pytest.approx(0.99 * 1.0 + 0.01 * 0.5, abs=1e-12)

    def test_two_diseases_update_independently(self):
        t = table()
        batch_update(t, [(0, 0.2), (2, 0.8)])
        assert t.values[0] == pytest.approx(0.99 + 0.01 * 0.2, abs=1e-12)
        assert t.values[1] == 1.0
        assert t.values[2] == pytest.approx(0.99 + 0.01 * 0.8, abs=1e-12)

    def test_batch_differs_from_sequential(self):
        """Documented semantics: one update with the group mean, which is not
        the same as chaining per-episode updates."""
        t_batch = table()
        batch_update(t_batch, [(0, 0.0), (0, 1.0)])

        t_seq = table()
        update_threshold(t_seq, 0, 0.0)
        update_threshold(t_seq, 0, 1.0)

        assert t_batch.values[0] == pytest.approx(0.995, abs=1e-12)
        assert t_seq.values[0] == pytest.approx(0.99 * 0.99 + 0.01, abs=1e-12)
        assert t_batch.values[0] != pytest.approx(float(t_seq.values[0]), abs=1e-6)

    def test_events_carry_termination_flags(self):
        t = table()
        events = batch_update(t, [(0, 0.1), (0, 0.3), (1, 0.2)], [True, False, True])
        by_disease = {e.disease: e for e in events}
        assert not by_disease[0].group_all_entropy_terminated
        assert by_disease[1].group_all_entropy_terminated
        assert by_disease[0].group_size == 2


class TestInit:
    def test_uniform(self):
        t = ThresholdTable.from_init(ThresholdInit(kind="uniform", value=2.0), 4)
        np.testing.assert_array_equal(t.values, [2.0, 2.0, 2.0, 2.0])

    def test_per_disease(self):
        init = ThresholdInit(kind="per_disease", values=(0.1, 0.2, 0.3))
        t = ThresholdTable.from_init(init, 3)
        np.testing.assert_array_equal(t.values, [0.1, 0.2, 0.3])
        with pytest.raises(ValueError):
            ThresholdTable.from_init(init, 4)

    def test_random_deterministic_within_range(self):
        init = ThresholdInit(kind="random", low=0.0, high=1.0, seed=5)
        a = ThresholdTable.from_init(init, 10)
        b = ThresholdTable.from_init(init, 10)
        np.testing.assert_array_equal(a.values, b.values)
        assert (a.values >= 0.0).all() and (a.values <= 1.0).all()

    def test_bad_lambda_rejected(self):
        with pytest.raises(ValueError):
            ThresholdTable.from_init(ThresholdInit(), 3, lambda_=1.5)
