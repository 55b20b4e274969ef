"""
test_incentives.py

Incentive properties of the scoring mechanism and the aggregation oracle,
on reduced sample counts.
"""

from unittest.mock import patch

import numpy as np
import pytest

from pm_fusion.incentives import (
    IncentiveInstance,
    belief_grid,
    expected_utility,
    maximize_agent_utility,
    oracle_check,
    properness_suite,
    random_instance,
    random_report_set,
    strategy_grid_check,
    truthful_optimum_suite,
)
from pm_fusion.model import TypeDistribution
from pm_fusion.sensor_agent import EPSILON_REPORT, Strategy, agent_expected_utility, make_report


def test_random_instance_shapes():
    rng = np.random.default_rng(0)
    for _ in range(50):
        instance = random_instance(rng)
        assert instance.belief.m in (2, 3)
        assert 0 < instance.varpi <= 10
        assert instance.p_table.shape[1] == instance.belief.m
        assert np.allclose(instance.p_table.sum(axis=0), 1.0)


def test_expected_utility_prefers_belief():
    instance = IncentiveInstance(TypeDistribution([0.7, 0.3]), 2.0, np.array([[0.4, 0.1], [0.6, 0.9]]), 1.5)
    truthful = expected_utility(instance, instance.belief)
    assert truthful > expected_utility(instance, TypeDistribution([0.5, 0.5]))
    assert truthful > expected_utility(instance, TypeDistribution([0.9, 0.1]))


def test_properness_suite():
    result = properness_suite(samples=100, reports_per_instance=20, seed=1)
    assert result.passed
    assert result.comparisons == 2000
    assert result.worst_gap <= 1e-9


def test_truthful_optimum_suite():
    result = truthful_optimum_suite(samples=100, seed=2)
    assert result.passed
    assert result.max_error <= 1e-3


def test_maximizer_recovers_skewed_belief():
    instance = IncentiveInstance(TypeDistribution([0.05, 0.15, 0.8]), 7.5, np.full((3, 3), 1 / 3), 0.0)
    best = maximize_agent_utility(instance)
    assert best.allclose(instance.belief, atol=1e-3)


def test_maximizer_optimizes_the_given_scoring_rule():
    """A linear rule is improper: its optimum puts all mass on the likeliest type."""
    instance = IncentiveInstance(TypeDistribution([0.7, 0.3]), 2.0, np.array([[0.4, 0.1], [0.6, 0.9]]), 1.5)
    best = maximize_agent_utility(instance, scoring_rule=lambda r_j, varpi: varpi * r_j)
    assert best[0] > 0.99
    assert not best.allclose(instance.belief, atol=0.1)


def test_maximizer_evaluates_agent_expected_utility():
    instance = IncentiveInstance(TypeDistribution([0.6, 0.4]), 1.0, np.full((2, 2), 0.5), 0.0)
    with patch("pm_fusion.incentives.agent_expected_utility", wraps=agent_expected_utility) as spy:
        maximize_agent_utility(instance)
    assert spy.call_count > 0
    report = spy.call_args.args[0]
    assert min(report) >= EPSILON_REPORT


def test_belief_grid():
    grid = belief_grid(step=0.5, m=3)
    assert len(grid) == 6
    assert all(abs(sum(b) - 1.0) < 1e-12 for b in grid)
    assert len(belief_grid(step=0.05)) == 231


def _top_two_equal(belief):
    ordered = sorted(belief, reverse=True)
    return ordered[0] == ordered[1]


@pytest.mark.parametrize("step, points, ties", [(0.1, 66, 6), (0.05, 231, 12)])
def test_strategy_grid(step, points, ties):
    result = strategy_grid_check(step=step)
    assert result.points == points
    assert result.passed
    assert result.ties == ties
    assert ties == sum(_top_two_equal(b) for b in belief_grid(step))


def test_truthful_and_manipulated_reports_tie_only_on_equal_top_two():
    rng = np.random.default_rng(0)
    for belief in belief_grid(0.05):
        instance = IncentiveInstance(belief, 1.0, np.full((2, 3), 0.5), 0.0)
        truthful = expected_utility(instance, make_report(belief, Strategy.TRUTHFUL, rng))
        manipulated = expected_utility(instance, make_report(belief, Strategy.MALICIOUS, rng))
        assert (abs(truthful - manipulated) <= 1e-9) == _top_two_equal(belief)


def test_random_report_set():
    rng = np.random.default_rng(3)
    reports, ledgers = random_report_set(rng)
    assert 2 <= len(reports) <= 10
    assert set(ledgers) == {r.agent_id for r in reports}
    assert all(0 < r.expert_weight <= 1 for r in reports)
    assert all(min(r.values) >= EPSILON_REPORT * (1 - 1e-12) for r in reports)


def test_oracle_check():
    result = oracle_check(samples=200, seed=4)
    assert result.samples == 200
    assert result.max_difference <= 1e-9
    assert result.max_reward_shift <= 1e-12
    assert result.max_varpi_shift <= 1e-12
    assert result.passed


@pytest.mark.parametrize("seed", [0, 1])
def test_oracle_check_is_deterministic(seed):
    assert oracle_check(samples=20, seed=seed) == oracle_check(samples=20, seed=seed)
