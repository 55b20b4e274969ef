"""
test_market.py

Tests for the market maker: decision weights, scoring, aggregation,
the step ledger and settlement.
"""

import math

import numpy as np
import pytest

from pm_fusion.decision_maker import DecisionRecord
from pm_fusion.errors import ConfigurationError, MarketStateError
from pm_fusion.market import (
    EPSILON_WEIGHT,
    LedgerEntry,
    MarketState,
    aggregate_beliefs,
    aggregate_beliefs_literal,
    average_payment,
    decision_weight,
    payment,
    score_report,
    settle_market,
)
from pm_fusion.model import TypeDistribution, uniform
from pm_fusion.sensor_agent import EPSILON_REPORT, Report, clip_report

P_TABLE = {(0, 1): 0.5, (0, 2): 0.2, (1, 1): 0.5, (1, 2): 0.8}
UTILITIES = (10.0, 6.0)


def record(decision_id, time=1):
    return DecisionRecord(time=time, decision_id=decision_id, expected_utility=0.0)


def report(agent_id, values, weight=1.0, time=1):
    return Report(agent_id=agent_id, time=time, values=TypeDistribution(values), expert_weight=weight)


def test_decision_weight():
    decisions = [record(0), record(1, 2)]
    assert decision_weight(decisions, 1, P_TABLE, UTILITIES) == pytest.approx(10.0)
    assert decision_weight(decisions, 2, P_TABLE, UTILITIES) == pytest.approx(6.0)
    assert decision_weight([record(0)], 2, P_TABLE, UTILITIES) == pytest.approx(1.2)


def test_decision_weight_floor_and_errors():
    assert decision_weight([], 1, P_TABLE, UTILITIES) == EPSILON_WEIGHT
    with pytest.raises(ConfigurationError, match="decision 5"):
        decision_weight([record(5)], 1, P_TABLE, UTILITIES)
    with pytest.raises(ValueError, match="type_index"):
        decision_weight([record(0)], 3, P_TABLE, UTILITIES)


def test_score_report():
    assert score_report(1.0, 3.0) == 0.0
    assert score_report(0.5, 2.0) == pytest.approx(2.0 * math.log(0.5))
    assert score_report(0.5, 0.0) == 0.0
    assert score_report(EPSILON_REPORT, 1.0) == pytest.approx(math.log(EPSILON_REPORT))
    with pytest.raises(ValueError, match="clip"):
        score_report(1e-9, 1.0)
    with pytest.raises(ValueError, match="varpi"):
        score_report(0.5, -1.0)


def test_score_is_monotone_in_report():
    values = [score_report(r, 2.5) for r in np.linspace(0.01, 1.0, 50)]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_payment():
    assert payment([4.0, 4.0], -1.0) == pytest.approx(7.0)
    assert payment([], 0.0) == 0.0


def test_average_payment_hand_value():
    reports = [report("a", [0.5, 0.5]), report("b", [0.25, 0.75])]
    ledgers = {"a": [LedgerEntry(1, 1.0, 1.0)], "b": [LedgerEntry(1, 1.0, 1.0)]}
    assert average_payment(reports, ledgers, 2.0, 1) == pytest.approx(-2.1589, abs=1e-4)


def test_aggregate_examples():
    assert aggregate_beliefs([report("a", [0.7, 0.3])]).allclose([0.7, 0.3])
    assert aggregate_beliefs([report("a", [0.8, 0.2]), report("b", [0.5, 0.5])]).allclose([0.8, 0.2])
    halves = aggregate_beliefs([report("a", [0.8, 0.2], 0.5), report("b", [0.5, 0.5], 0.5)])
    assert halves.allclose([2 / 3, 1 / 3])


def test_aggregate_identical_reports_with_unit_weight_sum():
    r = [0.6, 0.3, 0.1]
    pooled = aggregate_beliefs([report("a", r, 0.25), report("b", r, 0.75)])
    assert pooled.allclose(r, atol=1e-12)


def test_aggregate_unnormalized_weights():
    """Identical reports with total weight W pool to r**W normalized."""
    pooled = aggregate_beliefs([report("a", [0.8, 0.2]), report("b", [0.8, 0.2])])
    assert pooled.allclose([0.64 / 0.68, 0.04 / 0.68])


def test_aggregate_handles_extreme_reports():
    """Log space keeps tiny components finite."""
    reports = [report(f"x{i}", clip_report([1.0, 0.0, 0.0]).tolist()) for i in range(50)]
    pooled = aggregate_beliefs(reports)
    assert pooled.argmax() == 1
    assert np.all(np.isfinite(pooled.probs))


def test_aggregate_empty():
    with pytest.raises(ValueError, match="empty"):
        aggregate_beliefs([])
    with pytest.raises(ValueError, match="empty"):
        aggregate_beliefs_literal([], {}, 1.0)


def test_literal_matches_pool():
    rng = np.random.default_rng(11)
    for _ in range(200):
        reports = [
            report(f"a{i}", clip_report(rng.dirichlet(np.ones(3))).tolist(), 1.0 - rng.random())
            for i in range(int(rng.integers(2, 8)))
        ]
        ledgers = {r.agent_id: [LedgerEntry(1, r.expert_weight, float(rng.uniform(-5, 5)))] for r in reports}
        literal = aggregate_beliefs_literal(reports, ledgers, float(rng.uniform(0.5, 5.0)))
        assert literal.allclose(aggregate_beliefs(reports), atol=1e-9)


def test_literal_accepts_per_type_varpi():
    reports = [report("a", [0.6, 0.4]), report("b", [0.7, 0.3])]
    ledgers = {"a": [LedgerEntry(1, 1.0, 2.0)], "b": [LedgerEntry(1, 1.0, 3.0)]}
    assert aggregate_beliefs_literal(reports, ledgers, [2.0, 2.0]).allclose(aggregate_beliefs(reports))
    with pytest.raises(ValueError, match="varpi"):
        aggregate_beliefs_literal(reports, ledgers, [1.0])
    with pytest.raises(ValueError, match="varpi"):
        aggregate_beliefs_literal(reports, ledgers, 0.0)


@pytest.fixture
def market():
    state = MarketState(object_id="mine-1", m=2, window=3)
    reports = [report("a", [0.7, 0.3]), report("b", [0.4, 0.6])]
    state.record_step(1, reports, aggregate_beliefs(reports))
    state.record_reward("a", 1, 1.0, 4.0)
    state.record_reward("b", 1, 1.0, 3.0)
    return state


def test_market_state_ledger(market):
    assert market.time == 1
    assert market.report_counts() == {"a": 1, "b": 1}
    assert market.last_report("a").values.allclose([0.7, 0.3])
    assert market.last_report("c") is None
    assert market.current_belief() == market.aggregate_trajectory[-1]
    assert MarketState(object_id="o", m=3, window=1).current_belief().allclose(uniform(3))


def test_market_state_rejects_out_of_order_steps(market):
    with pytest.raises(MarketStateError, match="Expected step 2"):
        market.record_step(3, [], uniform(2))
    with pytest.raises(ValueError, match="twice"):
        market.record_step(2, [report("a", [0.5, 0.5], time=2)] * 2, uniform(2))
    with pytest.raises(ValueError, match="time stamps"):
        market.record_step(2, [report("a", [0.5, 0.5], time=1)], uniform(2))


def test_market_state_reward_checks(market):
    with pytest.raises(MarketStateError, match="already recorded"):
        market.record_reward("a", 1, 1.0, 4.0)
    with pytest.raises(MarketStateError, match="no report"):
        market.record_reward("c", 1, 1.0, 4.0)


def test_varpi_estimate(market):
    market.record_decision(record(0))
    belief = market.current_belief()
    expected = belief[0] * 5.0 + belief[1] * 1.2
    assert market.varpi_estimate(P_TABLE, UTILITIES) == pytest.approx(expected)


def test_settlement_requires_closed_window(market):
    with pytest.raises(MarketStateError, match="before its window closes"):
        settle_market(market, 1, P_TABLE, UTILITIES)


def test_closed_market_rejects_updates(market):
    market.close()
    with pytest.raises(MarketStateError, match="closed"):
        market.record_step(2, [], uniform(2))


def test_close_checks_reward_alignment():
    state = MarketState(object_id="o", m=2, window=2)
    state.record_step(1, [report("a", [0.5, 0.5])], uniform(2))
    with pytest.raises(MarketStateError, match="rewards"):
        state.close()


def test_settlement_pays_rewards_plus_score(market):
    market.record_decision(record(0))
    market.close()
    settled = settle_market(market, 1, P_TABLE, UTILITIES)
    assert set(settled) == {"a", "b"}
    varpi = 5.0
    assert settled["a"].varpi == pytest.approx(varpi)
    assert settled["a"].total == pytest.approx(4.0 + varpi * math.log(0.7))
    assert settled["b"].total == pytest.approx(3.0 + varpi * math.log(0.4))
    assert settled["a"].reports == 1
    assert settled["a"].report_at_truth == pytest.approx(0.7)


def test_settlement_zero_score_for_certain_report():
    state = MarketState(object_id="o", m=2, window=1)
    state.record_step(1, [report("a", [1.0, 0.0])], TypeDistribution([1.0, 0.0]))
    state.record_reward("a", 1, 1.0, 3.0)
    state.close()
    settled = settle_market(state, 1, P_TABLE, UTILITIES)
    assert settled["a"].total == pytest.approx(3.0)


def test_truthful_outearns_manipulated_report():
    state = MarketState(object_id="o", m=2, window=1)
    honest, liar = report("honest", [0.8, 0.2]), report("liar", [0.2, 0.8])
    state.record_step(1, [honest, liar], aggregate_beliefs([honest, liar]))
    state.record_reward("honest", 1, 1.0, 4.0)
    state.record_reward("liar", 1, 1.0, 4.0)
    state.record_decision(record(1))
    state.close()
    settled = settle_market(state, 1, P_TABLE, UTILITIES)
    assert settled["honest"].total > settled["liar"].total
