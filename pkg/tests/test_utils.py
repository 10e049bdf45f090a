import io
import json
import math
from enum import Enum

import numpy as np
import pandas as pd

from src.schemas import SqueezeClass
from src.utils import DataProcessor, ReportFormatter


def test_csv_metadata_header_and_float_format(tmp_path):
    df = pd.DataFrame({"x": [0.1, 1.0 / 3.0], "n_eff": [math.nan, 2.0]})
    path = tmp_path / "t.csv"
    DataProcessor.write_csv(df, path, {"command": "sweep", "seed": 42})
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[:3] == ["# command: sweep", "# seed: 42", "x,n_eff"]
    assert "0.333333333," in text
    assert DataProcessor.read_metadata(path) == {"command": "sweep", "seed": "42"}
    back = DataProcessor.read_csv(path)
    assert math.isnan(back["n_eff"][0])


def test_write_csv_to_stream():
    buffer = io.StringIO()
    DataProcessor.write_csv(pd.DataFrame({"a": [1]}), buffer)
    assert buffer.getvalue() == "a\n1\n"


def test_json_rendering_of_report_values():
    report = {"c": 1 + 2j, "cls": SqueezeClass.NONE, "n": np.float64(0.5),
              "bad": math.inf, "arr": np.array([1.0, 2.0])}
    data = json.loads(ReportFormatter.to_json(report))
    assert data == {"c": {"re": 1.0, "im": 2.0}, "cls": "none", "n": 0.5,
                    "bad": "inf", "arr": [1.0, 2.0]}


def test_text_rendering():
    class Mode(Enum):
        A = "a"
    text = ReportFormatter.to_text({"N_eff": 0.25, "poles": {"Omega_1": 1 - 1j}, "mode": Mode.A}, "Title")
    lines = text.splitlines()
    assert lines[0] == "Title"
    assert lines[2].split() == ["N_eff", "0.25"]
    assert "1-1i" in text
    assert lines[-1].split() == ["mode", "a"]
