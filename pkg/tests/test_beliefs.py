import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlmarkets.beliefs import (
    NEG_INF,
    Belief,
    FactorTable,
    UtilityKind,
    expected_utility,
    normalize,
    normalize_log,
    restricted_expected_utility,
    utility_eval,
)
from mlmarkets.errors import ContractError, DegenerateBeliefError, LogDomainError
from mlmarkets.outcome_space import Clique, OutcomeSpace

L, G, E = UtilityKind.LINEAR, UtilityKind.LOG, UtilityKind.EXP


class TestUtilityEval:
    def test_log_one(self):
        assert utility_eval(G, 1.0) == 0.0

    def test_exp_zero(self):
        assert utility_eval(E, 0.0) == -1.0

    def test_linear_debt_is_minus_infinity(self):
        assert utility_eval(L, -0.5) == NEG_INF
        assert utility_eval(L, 0.0) == NEG_INF
        assert utility_eval(L, 2.5) == 2.5

    def test_sentinel_orders_below_reals(self):
        assert max([NEG_INF, -1e308]) == -1e308

    @pytest.mark.parametrize("kind", list(UtilityKind))
    def test_monotone(self, kind):
        xs = np.linspace(0.01, 20, 500)
        us = [utility_eval(kind, x) for x in xs]
        assert all(b > a for a, b in zip(us, us[1:]))

    @pytest.mark.parametrize("kind", [G, E])
    def test_concave_on_grid(self, kind):
        xs = np.linspace(0.05, 8, 40)
        for x1 in xs:
            for x2 in xs:
                for t in (0.1, 0.5, 0.9):
                    mix = utility_eval(kind, t * x1 + (1 - t) * x2)
                    assert mix >= t * utility_eval(kind, x1) + (1 - t) * utility_eval(kind, x2) - 1e-12

    @settings(max_examples=200)
    @given(st.floats(-30, 30), st.floats(-30, 30))
    def test_exp_wealth_translation(self, w, x):
        ratio = utility_eval(E, w + x) / utility_eval(E, x)
        assert ratio == pytest.approx(math.exp(-w), rel=1e-12)


class TestNormalize:
    def test_uniform(self):
        np.testing.assert_allclose(normalize([1, 1, 1, 1]).table, [0.25] * 4)

    def test_geometric_mean_case(self):
        b = normalize([math.sqrt(0.45), math.sqrt(0.05)])
        np.testing.assert_allclose(b.table, [0.75, 0.25], atol=1e-15)
        np.testing.assert_allclose(normalize([0.6708, 0.2236]).table, [0.75, 0.25], atol=1e-4)

    def test_all_zero(self):
        with pytest.raises(DegenerateBeliefError):
            normalize([0, 0])

    def test_from_logs(self):
        np.testing.assert_allclose(normalize_log(np.log([2.0, 6.0])).table, [0.25, 0.75])

    def test_belief_requires_normalized_table(self):
        with pytest.raises(DegenerateBeliefError):
            Belief([0.5, 0.6])

    def test_zero_belief_allowed_but_factor_rejected(self):
        b = Belief([0.0, 1.0])
        assert b.log_table[0] == -np.inf
        with pytest.raises(LogDomainError):
            FactorTable(Clique((0,)), [0.0, 1.0])
        with pytest.raises(LogDomainError):
            b.require_positive()


class TestExpectedUtility:
    def test_zero_position_log(self):
        assert expected_utility(normalize([1, 3]), G, 1.0, [0.4, 0.6], [0, 0]) == 0.0

    def test_zero_position_exp(self):
        assert expected_utility(normalize([1, 3]), E, 0.0, [0.4, 0.6], [0, 0]) == -1.0

    def test_worked_exp(self):
        eu = expected_utility(Belief([0.8, 0.2]), E, 0.0, [0.5, 0.5], [1.0, -1.0])
        hand = -(0.8 * math.exp(-1) + 0.2 * math.exp(1))
        assert eu == pytest.approx(hand, abs=1e-15)
        assert eu == pytest.approx(-0.837960, abs=1e-6)

    def test_zero_probability_drops_bankrupt_outcome(self):
        # Outcome 1 would leave wealth 0, but the agent gives it zero weight.
        eu = expected_utility(Belief([1.0, 0.0]), G, 1.0, [0.5, 0.5], [1.0, -1.0])
        assert eu == pytest.approx(math.log(2.0))
        assert expected_utility(Belief([0.5, 0.5]), G, 1.0, [0.5, 0.5], [2.0, -2.0]) == NEG_INF

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            expected_utility(Belief([0.5, 0.5]), G, 1.0, [0.5, 0.5], [1.0])

    @settings(max_examples=100)
    @given(st.sampled_from(list(UtilityKind)), st.floats(0.1, 10))
    def test_zero_position_equals_utility_of_wealth(self, kind, w):
        eu = expected_utility(normalize([1, 2, 3]), kind, w, [0.2, 0.3, 0.5], [0, 0, 0])
        assert eu == pytest.approx(utility_eval(kind, w), rel=1e-15)

    def test_restricted_matches_direct_sum(self):
        space = OutcomeSpace.binary("y1", "y2")
        p = normalize([0.3, 0.1, 0.2, 0.4])
        c, s, w = np.array([0.6, 0.45]), np.array([0.3, -0.7]), 0.2
        direct = 0.0
        for prob, y in zip(p.table, [(0, 0), (0, 1), (1, 0), (1, 1)]):
            direct -= prob * math.exp(-w + s[0] * (c[0] - y[0]) + s[1] * (c[1] - y[1]))
        assert restricted_expected_utility(p, space, w, c, s) == pytest.approx(direct, rel=1e-14)
