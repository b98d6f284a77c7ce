"""Trade-off bound: growth constant, switch index, loss bound, budget schedule."""

import math
import random

import mpmath
import pytest

from arctic_lab.tradeoff import (
    DomainError,
    TradeoffParams,
    cooperation_loss_bound,
    phi,
    risk_budget_sequence,
    simulate_tight_policy,
    switch_index,
)


class TestPhi:
    def test_golden_ratio(self):
        assert phi(1.0) == pytest.approx(1.6180339887498949, abs=1e-15)

    def test_unit_at_zero(self):
        assert phi(0.0) == 1.0

    def test_two(self):
        assert phi(2.0) == pytest.approx(2.0, abs=1e-15)

    def test_characteristic_identity(self):
        rnd = random.Random(1)
        for _ in range(200):
            c = rnd.uniform(0.0, 10.0)
            p = phi(c)
            assert p + c == pytest.approx(p * p, abs=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            phi(-0.1)


class TestSwitchIndex:
    def test_full_budget_needs_no_ramp(self):
        assert switch_index(1.0, 1.0, 100) == 0
        assert switch_index(1.0, 3.0, 7) == 0

    def test_hand_computed_log(self):
        # ln(100)/ln(golden ratio) = 9.57, rounded up.
        assert switch_index(0.01, 1.0, 100) == 10

    def test_capped_by_horizon(self):
        assert switch_index(0.5, 1.0, 1) == 1

    def test_zero_budget_diverges(self):
        with pytest.raises(DomainError):
            switch_index(0.0, 1.0, 100)

    def test_bad_growth_constant(self):
        with pytest.raises(DomainError):
            switch_index(0.5, 0.0, 10)


PD_PARAMS = TradeoffParams(epsilon=0.01, d=0.75, P_minus_S=0.25, T_rounds=100,
                           v=0.25, R=0.75)


class TestLossBound:
    def test_full_budget_vacuous(self):
        params = TradeoffParams(epsilon=1.0, d=0.6, P_minus_S=0.3, T_rounds=50,
                                v=0.25, R=0.75)
        # I = 0 and the geometric factor collapses to 1, leaving -d.
        assert cooperation_loss_bound(params) == pytest.approx(-0.6, abs=1e-12)

    def test_pd_parameters_against_high_precision(self):
        # C = 3, phi = (1 + sqrt 13)/2, I = 6; recompute every subterm with
        # 50-digit arithmetic.
        assert PD_PARAMS.C == pytest.approx(3.0, abs=1e-15)
        index = switch_index(0.01, 3.0, 100)
        assert index == 6
        with mpmath.workdps(50):
            p = (1 + mpmath.sqrt(13)) / 2
            geometric = (1 - p ** 7) / (1 - p)
            expected = mpmath.mpf(6) / 100 * 75 - mpmath.mpf("0.75") * mpmath.mpf("0.01") * geometric
            assert cooperation_loss_bound(PD_PARAMS) == pytest.approx(float(expected), abs=1e-12)

    def test_integer_geometric_series(self):
        # C = 2 makes phi exactly 2: (1 - 2^3)/(1 - 2) = 7 at I = 2.
        params = TradeoffParams(epsilon=0.25, d=0.5, P_minus_S=0.25, T_rounds=100,
                                v=0.25, R=0.75)
        assert params.C == 2.0
        assert switch_index(0.25, 2.0, 100) == 2
        expected = (2 / 100) * 75.0 - 0.5 * 0.25 * 7.0
        assert cooperation_loss_bound(params) == pytest.approx(expected, abs=1e-12)

    def test_more_capital_never_costs_cooperation(self):
        # The realized shortfall of the tight schedule is non-increasing in
        # epsilon; the bound itself shares that shape between switch-index
        # steps (the integer ceiling makes it a sawtooth at step boundaries).
        prev_gap = math.inf
        prev_bound = math.inf
        prev_index = None
        for eps in [x / 100 for x in range(1, 101)]:
            params = TradeoffParams(epsilon=eps, d=0.5, P_minus_S=0.25,
                                    T_rounds=200, v=0.0, R=0.5)
            gap = params.optimal_cooperative_value - simulate_tight_policy(params)
            assert gap <= prev_gap + 1e-9
            prev_gap = gap
            index = switch_index(eps, params.C, params.T_rounds)
            bound = cooperation_loss_bound(params)
            if index == prev_index:
                assert bound <= prev_bound + 1e-9
            prev_index, prev_bound = index, bound

    def test_vanishes_relative_to_horizon(self):
        fractions = []
        for t_rounds in (100, 1000, 10000):
            params = TradeoffParams(epsilon=0.05, d=0.5, P_minus_S=0.25,
                                    T_rounds=t_rounds, v=0.0, R=0.5)
            fractions.append(
                cooperation_loss_bound(params) / params.optimal_cooperative_value
            )
        assert fractions[0] > fractions[1] > fractions[2]
        assert fractions[2] < 0.01


class TestRiskBudgetSequence:
    def test_scaled_fibonacci_with_cap(self):
        seq = risk_budget_sequence(0.1, 1.0, 8)
        assert seq == pytest.approx([0.1, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0, 1.0], abs=1e-12)

    def test_no_capital_no_cooperation(self):
        assert risk_budget_sequence(0.0, 2.0, 6) == [0.0] * 6

    def test_full_capital_caps_immediately(self):
        assert risk_budget_sequence(1.0, 0.5, 5) == [1.0] * 5

    def test_growth_envelope(self):
        # a_t <= eps * phi(C)^t for 200 random budget/growth pairs out to t=200.
        rnd = random.Random(9)
        for _ in range(200):
            eps = rnd.uniform(1e-6, 1.0)
            c = rnd.uniform(1e-3, 5.0)
            p = phi(c)
            seq = risk_budget_sequence(eps, c, 200)
            for t, a in enumerate(seq):
                assert a <= eps * p ** t + 1e-12


class TestTightPolicy:
    def test_full_budget_closed_form(self):
        params = TradeoffParams(epsilon=1.0, d=0.25, P_minus_S=0.25, T_rounds=10,
                                v=0.25, R=0.5)
        assert simulate_tight_policy(params) == pytest.approx(
            10 * 0.25 + 9 * 0.25, abs=1e-12
        )

    def test_zero_budget_is_safe_play(self):
        params = TradeoffParams(epsilon=0.0, d=0.25, P_minus_S=0.25, T_rounds=10,
                                v=0.25, R=0.5)
        assert simulate_tight_policy(params) == pytest.approx(2.5, abs=1e-12)

    def test_brute_force_summation(self):
        params = TradeoffParams(epsilon=0.1, d=0.25, P_minus_S=0.25, T_rounds=10,
                                v=0.25, R=0.5)
        schedule = [0.0] + risk_budget_sequence(0.1, 1.0, 10)[:-1]
        expected = sum(0.25 * a + 0.25 for a in schedule)
        assert simulate_tight_policy(params) == pytest.approx(expected, abs=1e-12)

    def test_bound_holds_against_schedule_in_surplus_units(self):
        # With rewards measured as surplus over the game value (v = 0 and the
        # full-cooperation return R = d), the realized shortfall of the tight
        # schedule is never smaller than the stated bound.
        rnd = random.Random(17)
        for _ in range(400):
            d = rnd.uniform(0.05, 2.0)
            params = TradeoffParams(
                epsilon=rnd.uniform(1e-4, 1.0),
                d=d,
                P_minus_S=rnd.uniform(0.05, 2.0),
                T_rounds=rnd.randrange(3, 500),
                v=0.0,
                R=d,
            )
            gap = params.optimal_cooperative_value - simulate_tight_policy(params)
            assert gap >= cooperation_loss_bound(params) - 1e-6
