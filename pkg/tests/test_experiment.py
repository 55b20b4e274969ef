"""
test_experiment.py

End-to-end behavior of the default scenario over 30 seeded runs:
convergence speed, comparison with the baselines, the RMSE trajectory and
deterrence of malicious reporting.
"""

import numpy as np
import pytest

from pm_fusion.harness import run_experiment
from pm_fusion.reporting import improvement_pct

RUNS = 30


@pytest.fixture(scope="module")
def experiment(default_config):
    return run_experiment(default_config.with_overrides(runs=RUNS, w_bel=0.5))


def test_every_pair_ran(experiment, default_config):
    assert len(experiment.episodes) == RUNS * len(default_config.objects) * 3


def test_market_converges_within_window(experiment):
    assert 4.0 <= experiment.mean_steps("pm") <= 10.0
    for object_type in ("mine", "metallic"):
        assert 5.0 <= experiment.mean_steps("pm", object_type) <= 9.0


def test_market_beats_baselines(experiment):
    pm = experiment.mean_final("pm", "rmse")
    ddf = experiment.mean_final("ddf", "rmse")
    ds = experiment.mean_final("ds", "rmse")
    assert pm <= ddf
    assert improvement_pct("rmse", pm, ds) >= 2.0


def test_rmse_decreases_over_time(experiment):
    rmse = {
        row.time: row.mean
        for row in experiment.summary()
        if row.method == "pm" and row.metric == "rmse"
    }
    for t in range(1, 5):
        assert rmse[t + 2] < rmse[t]
    # no drift back up once the episodes have stopped
    assert rmse[10] <= rmse[5]


def test_market_classifies_most_objects(experiment):
    accuracy = np.mean([e.correct for e in experiment.select("pm")])
    assert accuracy >= 0.85
    for object_type in ("mine", "metallic", "non_metallic"):
        assert np.mean([e.correct for e in experiment.select("pm", object_type)]) >= 0.75


def test_market_classifies_better_than_information_filter(experiment):
    pm = np.mean([e.correct for e in experiment.select("pm")])
    ddf = np.mean([e.correct for e in experiment.select("ddf")])
    assert pm >= ddf


def test_malicious_agents_earn_less(default_config):
    config = default_config.with_overrides(runs=RUNS, malicious_fraction=0.3)
    result = run_experiment(config, methods=["pm"])
    payments = {"truthful": [], "malicious": []}
    for episode in result.episodes:
        for record in episode.settlement.values():
            payments[record.strategy].append(record.total)
    assert payments["malicious"], "no malicious agent was ever deployed"
    assert np.mean(payments["truthful"]) > np.mean(payments["malicious"])
