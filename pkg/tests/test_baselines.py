"""
test_baselines.py

Tests for the Dempster-Shafer and information-filter baselines.
"""

import itertools

import numpy as np
import pytest

from pm_fusion.baselines import (
    DSLayout,
    FilterState,
    MassFunction,
    ddf_run,
    ddf_update,
    ds_classify,
    ds_combine,
    ds_masses_for_report,
    flatten_type_evidence,
    pignistic,
)
from pm_fusion.errors import ConfigurationError, ConflictError
from pm_fusion.model import TypeDistribution, uniform
from pm_fusion.sensor_agent import clip_report

FRAME = ("a", "b", "c")
SUBSETS = [frozenset(s) for k in (1, 2) for s in itertools.combinations(FRAME, k)]


def random_mass(rng):
    """Random mass function that keeps some mass on the whole frame."""
    focal = [SUBSETS[i] for i in rng.choice(len(SUBSETS), size=int(rng.integers(1, 4)), replace=False)]
    weights = rng.dirichlet(np.ones(len(focal) + 1))
    masses = dict(zip(focal, weights[:-1]))
    masses[frozenset(FRAME)] = weights[-1]
    return MassFunction(FRAME, masses)


def assert_same_masses(m1, m2, tol=1e-12):
    keys = set(m1.masses) | set(m2.masses)
    for key in keys:
        assert m1.mass_of(key) == pytest.approx(m2.mass_of(key), abs=tol)


@pytest.fixture
def ds_layout():
    return DSLayout(
        type_frame=("mine", "metallic", "non_metallic"),
        level_frame=("low", "medium", "high"),
        metal_feature=0,
        mine_types=frozenset({"mine"}),
        friendly_by_level={
            "low": frozenset({"non_metallic"}),
            "medium": frozenset({"metallic"}),
            "high": frozenset({"metallic"}),
        },
        reliability=0.9,
    )


def test_mass_function_validation():
    with pytest.raises(ValueError, match="sum to 1"):
        MassFunction(FRAME, {"a": 0.5})
    with pytest.raises(ValueError, match="subset"):
        MassFunction(FRAME, {"z": 1.0})
    with pytest.raises(ValueError, match="empty set"):
        MassFunction(FRAME, {frozenset(): 0.5, "a": 0.5})
    m = MassFunction(FRAME, {"a": 0.25, ("a",): 0.25, FRAME: 0.5})
    assert m.mass_of({"a"}) == pytest.approx(0.5)


def test_simple_support_and_vacuous():
    m = MassFunction.simple_support(FRAME, {"a", "b"}, 0.7)
    assert m.mass_of({"a", "b"}) == pytest.approx(0.7)
    assert m.mass_of(FRAME) == pytest.approx(0.3)
    assert MassFunction.simple_support(FRAME, FRAME, 0.7) == MassFunction.vacuous(FRAME)


def test_dempster_rule_hand_example():
    m1 = MassFunction(FRAME, {"a": 0.6, FRAME: 0.4})
    m2 = MassFunction(FRAME, {"b": 0.5, FRAME: 0.5})
    combined = ds_combine(m1, m2)
    assert combined.mass_of({"a"}) == pytest.approx(0.3 / 0.7)
    assert combined.mass_of({"b"}) == pytest.approx(0.2 / 0.7)
    assert combined.mass_of(FRAME) == pytest.approx(0.2 / 0.7)


def test_total_conflict():
    with pytest.raises(ConflictError, match="conflict"):
        ds_combine(MassFunction(FRAME, {"a": 1.0}), MassFunction(FRAME, {"b": 1.0}))


def test_frames_must_match():
    with pytest.raises(ValueError, match="Cannot combine"):
        ds_combine(MassFunction.vacuous(FRAME), MassFunction.vacuous(("a", "b")))


def test_vacuous_is_neutral():
    rng = np.random.default_rng(0)
    m = random_mass(rng)
    assert_same_masses(ds_combine(m, MassFunction.vacuous(FRAME)), m)


def test_dempster_rule_commutative_and_associative():
    rng = np.random.default_rng(2024)
    for _ in range(500):
        m1, m2, m3 = random_mass(rng), random_mass(rng), random_mass(rng)
        assert_same_masses(ds_combine(m1, m2), ds_combine(m2, m1))
        assert_same_masses(ds_combine(ds_combine(m1, m2), m3), ds_combine(m1, ds_combine(m2, m3)))


def test_pignistic():
    m = MassFunction(FRAME, {("a", "b"): 0.5, "c": 0.5})
    assert pignistic(m).tolist() == pytest.approx([0.25, 0.25, 0.5])
    assert pignistic(MassFunction.vacuous(FRAME)).tolist() == pytest.approx([1 / 3] * 3)


def test_pignistic_splits_frame_mass_evenly():
    m = MassFunction(("mine", "clutter"), {"mine": 0.6, ("mine", "clutter"): 0.4})
    assert pignistic(m).tolist() == pytest.approx([0.8, 0.2])


def test_ds_layout_validation():
    with pytest.raises(ConfigurationError, match="mine_types"):
        DSLayout(("m", "x"), ("lo", "hi"), 0, frozenset({"z"}), {"lo": frozenset({"x"}), "hi": frozenset({"x"})})
    with pytest.raises(ConfigurationError, match="No friendly"):
        DSLayout(("m", "x"), ("lo", "hi"), 0, frozenset({"m"}), {"lo": frozenset({"x"})})
    with pytest.raises(ConfigurationError, match="non-mine"):
        DSLayout(("m", "x"), ("lo",), 0, frozenset({"m"}), {"lo": frozenset({"m"})})


def test_masses_for_report(ds_layout):
    values = TypeDistribution([0.7, 0.2, 0.1])
    level_fn, type_fns = ds_masses_for_report(values, metal_reading=1, metal_noise=0.4, expert_weight=1.0, layout=ds_layout)
    assert level_fn.mass_of(("low", "medium", "high")) == pytest.approx(0.1)
    assert level_fn.mass_of({"medium"}) == pytest.approx(0.9 * 0.6)
    assert level_fn.mass_of({"low"}) == pytest.approx(0.9 * 0.2)
    medium = type_fns["medium"]
    assert medium.mass_of({"mine"}) == pytest.approx(0.9 * 0.7)
    assert medium.mass_of({"metallic"}) == pytest.approx(0.9 * 0.3)
    assert type_fns["low"].mass_of({"non_metallic"}) == pytest.approx(0.9 * 0.3)


def test_masses_discounted_by_expert_weight(ds_layout):
    level_fn, _ = ds_masses_for_report(uniform(3), 0, 0.4, expert_weight=0.0, layout=ds_layout)
    assert level_fn == MassFunction.vacuous(ds_layout.level_frame)


def test_ds_classify(ds_layout):
    reports = [TypeDistribution([0.8, 0.1, 0.1]), clip_report([0.6, 0.3, 0.1])]
    evidence = [ds_masses_for_report(r, 1, 0.3, 1.0, ds_layout) for r in reports]
    result = ds_classify([e[0] for e in evidence], flatten_type_evidence([e[1] for e in evidence]), ds_layout.type_frame)
    assert result.argmax() == 1
    # non_metallic only shares the frame mass at the medium level
    assert result[2] == pytest.approx(0.01 / 3 / 0.6436)


def test_ds_classify_without_evidence(ds_layout):
    assert ds_classify([], {}, ds_layout.type_frame).allclose(uniform(3))


def test_ds_classify_missing_level(ds_layout):
    level_fn, _ = ds_masses_for_report(uniform(3), 2, 0.1, 1.0, ds_layout)
    with pytest.raises(ConfigurationError, match="high"):
        ds_classify([level_fn], {}, ds_layout.type_frame)


def test_ddf_update_hand_example():
    state = FilterState(uniform(2))
    state = ddf_update(state, TypeDistribution([0.8, 0.2]))
    assert state.posterior.allclose([0.8, 0.2])
    state = ddf_update(state, TypeDistribution([0.8, 0.2]))
    assert state.posterior.allclose([0.64 / 0.68, 0.04 / 0.68])
    assert state.updates_applied == 2


def test_ddf_rejects_unclipped_likelihood():
    with pytest.raises(ValueError, match="at least"):
        ddf_update(FilterState(uniform(2)), TypeDistribution([1.0, 0.0]))
    with pytest.raises(ValueError, match="components"):
        ddf_update(FilterState(uniform(2)), uniform(3))


def test_ddf_order_independent():
    rng = np.random.default_rng(99)
    for _ in range(500):
        likelihoods = [clip_report(rng.dirichlet(np.ones(3))) for _ in range(int(rng.integers(2, 6)))]
        forward = ddf_run(FilterState(uniform(3)), likelihoods).posterior
        backward = ddf_run(FilterState(uniform(3)), likelihoods[::-1]).posterior
        assert forward.allclose(backward, atol=1e-12)
