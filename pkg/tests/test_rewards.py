import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dxagent.patients import Feedback
from dxagent.rewards import (
    Outcome,
    RewardConfig,
    combine,
    entropy_reward,
    step_reward_rp,
    terminal_reward_rp,
)

CFG = RewardConfig()


class TestStepReward:
    def test_positive_discovery(self):
        assert step_reward_rp(Feedback.POSITIVE, CFG) == pytest.approx(0.7, abs=1e-12)

    def test_negative_discovery(self):
        assert step_reward_rp(Feedback.NEGATIVE, CFG) == pytest.approx(-0.3, abs=1e-12)

    def test_zeroed_bonuses_leave_pure_query_cost(self):
        cfg = RewardConfig(negative_discovery_bonus=0.0, positive_discovery_bonus=0.0)
        assert step_reward_rp(Feedback.POSITIVE, cfg) == -1.0
        assert step_reward_rp(Feedback.NEGATIVE, cfg) == -1.0


class TestTerminalReward:
    @pytest.mark.parametrize(
        "outcome,expected",
        [(Outcome.CORRECT, 1.0), (Outcome.INCORRECT, -1.0), (Outcome.TIMEOUT, -1.0)],
    )
    def test_defaults(self, outcome, expected):
        assert terminal_reward_rp(outcome, CFG) == expected


class TestEntropyReward:
    def test_direct_substitution(self):
        assert entropy_reward(1.5, 0.5, 2.0) == pytest.approx(0.5, abs=1e-12)

    def test_negative_information_gain_clamped(self):
        assert entropy_reward(0.5, 1.5, 2.0) == 0.0

    def test_no_change_gives_zero(self):
        assert entropy_reward(0.8, 0.8, 2.0) == 0.0

    def test_zero_initial_entropy_gives_zero(self):
        assert entropy_reward(0.0, 0.0, 0.0) == 0.0

    @given(
        h_prev=st.floats(0, 10),
        h_next=st.floats(0, 10),
        h0=st.floats(0.01, 10),
    )
    @settings(max_examples=300, deadline=None)
    def test_nonnegative_and_bounded(self, h_prev, h_next, h0):
        r = entropy_reward(h_prev, h_next, h0)
        assert r >= 0.0
        if h_prev <= h0:
            assert r <= 1.0


class TestCombine:
    def test_weighted_sum(self):
        assert combine(0.7, 0.2, CFG) == pytest.approx(1.2, abs=1e-12)

    def test_nu_zero_leaves_rp(self):
        cfg = RewardConfig(nu=0.0)
        assert combine(0.7, 5.0, cfg) == pytest.approx(0.7)

    def test_zero_inputs(self):
        assert combine(0.0, 0.0, CFG) == 0.0

    @given(
        rp=st.floats(-5, 5), rh=st.floats(-5, 5),
        a=st.floats(-3, 3), b=st.floats(-3, 3),
    )
    @settings(max_examples=200, deadline=None)
    def test_linear_in_each_argument(self, rp, rh, a, b):
        assert combine(rp + a, rh, CFG) == pytest.approx(combine(rp, rh, CFG) + CFG.mu * a, abs=1e-9)
        assert combine(rp, rh + b, CFG) == pytest.approx(combine(rp, rh, CFG) + CFG.nu * b, abs=1e-9)

    def test_per_turn_bound(self):
        """Per-turn combined reward with defaults stays inside the analytic
        envelope when the normalized entropy drop is in [0, 1]."""
        low = CFG.mu * (CFG.query_cost + CFG.negative_discovery_bonus)
        high = CFG.mu * (CFG.query_cost + CFG.positive_discovery_bonus) + CFG.nu * 1.0
        for fb in Feedback:
            for rh in (0.0, 0.3, 1.0):
                r = combine(step_reward_rp(fb, CFG), rh, CFG)
                assert low - 1e-12 <= r <= high + 1e-12
