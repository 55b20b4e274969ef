"""
test_utils.py

Tests for serialization and CSV helpers.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from pm_fusion.decision_maker import DecisionRecord
from pm_fusion.model import SensorType, TypeDistribution
from pm_fusion.utils import format_cell, to_dict, to_json, write_csv


def test_to_dict_converts_domain_types():
    record = DecisionRecord(
        time=2,
        decision_id=7,
        expected_utility=np.float64(1.5),
        requested={SensorType.GPR: 1},
        deployed={SensorType.GPR: 1},
    )
    data = to_dict(record)
    assert data["requested"] == {"GPR": 1}
    assert data["expected_utility"] == 1.5
    assert isinstance(data["expected_utility"], float)
    assert to_dict(TypeDistribution([0.25, 0.75])) == [0.25, 0.75]
    assert to_dict({"path": Path("a/b"), "arr": np.arange(2)}) == {"path": "a/b", "arr": [0, 1]}


def test_to_json_is_valid_json():
    text = to_json({"belief": TypeDistribution([0.5, 0.5]), "sensor": SensorType.MD})
    assert json.loads(text) == {"belief": [0.5, 0.5], "sensor": "MD"}


@pytest.mark.parametrize(
    "value, expected",
    [
        (True, "true"),
        (False, "false"),
        (0.1 + 0.2, "0.3"),
        (np.float64(1 / 3), "0.3333333333"),
        (float("nan"), "nan"),
        (3, "3"),
        (SensorType.IR, "IR"),
        ("", ""),
    ],
)
def test_format_cell(value, expected):
    assert format_cell(value) == expected


def test_write_csv(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 0.5], ["x,y", True]])
    assert path.read_text(encoding="utf-8") == 'a,b\n1,0.5\n"x,y",true\n'


def test_write_csv_header_only(tmp_path):
    path = write_csv(tmp_path / "empty.csv", ["a", "b"], [])
    assert path.read_text(encoding="utf-8") == "a,b\n"


def test_write_csv_reports_path(tmp_path):
    target = tmp_path / "missing" / "t.csv"
    with pytest.raises(OSError, match="Cannot write"):
        write_csv(target, ["a"], [])
