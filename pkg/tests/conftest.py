"""
conftest.py

Shared fixtures: the packaged default scenario, a fresh fusion registry and
small hand-made layouts.
"""

import numpy as np
import pytest

from pm_fusion.fusion_registry import FusionRegistry, register_default_methods
from pm_fusion.model import DomainLayout, SensorType, SensorTypeSpec
from pm_fusion.scenario import load_scenario


@pytest.fixture(scope="session")
def default_config():
    """The packaged default scenario (validated once per session)."""
    return load_scenario()


@pytest.fixture
def registry():
    return register_default_methods(FusionRegistry())


@pytest.fixture
def small_layout():
    """Two types, two binary features."""
    return DomainLayout(
        type_names=("mine", "clutter"),
        feature_names=("metal", "size"),
        feature_levels=(("low", "high"), ("small", "large")),
    )


@pytest.fixture
def md_spec():
    return SensorTypeSpec(name=SensorType.MD, noise_level=(0.2, 0.3), report_cost=1.0, count_available=2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
