import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, TextIO, Union

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.9g"


class DataProcessor:
    """Utility class for result-table operations"""

    @staticmethod
    def write_csv(df: pd.DataFrame, target: Union[str, Path, TextIO],
                  metadata: Optional[Mapping[str, Any]] = None) -> None:
        """Write a table as byte-stable CSV.

        Args:
            df: Table to write, columns in output order
            target: Path or open text stream
            metadata: Written first as '# key: value' lines, in the given order
        """
        header = "".join(f"# {k}: {v}\n" for k, v in (metadata or {}).items())
        body = df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        if isinstance(target, (str, Path)):
            with open(target, "w", encoding="utf-8", newline="") as fh:
                fh.write(header + body)
        else:
            target.write(header + body)

    @staticmethod
    def read_csv(file_path: Union[str, Path]) -> pd.DataFrame:
        """Load a table written by ``write_csv`` (metadata lines skipped)."""
        return pd.read_csv(file_path, comment="#")

    @staticmethod
    def read_metadata(file_path: Union[str, Path]) -> Dict[str, str]:
        meta = {}
        with open(file_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.startswith("#"):
                    break
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
        return meta


def _plain(value: Any) -> Any:
    """JSON-ready copy of numpy scalars, complex numbers, enums and containers."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": _plain(float(value.real)), "im": _plain(float(value.imag))}
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Enum):
        return value.value
    return value


class ReportFormatter:
    """Human table and JSON renderings of a flat-ish report dictionary"""

    @staticmethod
    def to_json(report: Mapping[str, Any]) -> str:
        return json.dumps(_plain(dict(report)), indent=2, sort_keys=False) + "\n"

    @staticmethod
    def _cell(value: Any) -> str:
        if isinstance(value, (complex, np.complexfloating)):
            return f"{value.real:.9g}{value.imag:+.9g}i"
        if isinstance(value, (float, np.floating)):
            return f"{value:.9g}"
        if isinstance(value, Enum):
            return str(value.value)
        return str(value)

    @classmethod
    def to_text(cls, report: Mapping[str, Any], title: str = "") -> str:
        lines = [title, "=" * max(len(title), 40)] if title else []
        for key, value in report.items():
            if isinstance(value, Mapping):
                lines.append(f"{key}:")
                lines.extend(f"  {k:<22} {cls._cell(v)}" for k, v in value.items())
            elif isinstance(value, (list, tuple)):
                lines.append(f"{key:<24} " + ", ".join(cls._cell(v) for v in value))
            else:
                lines.append(f"{key:<24} {cls._cell(value)}")
        return "\n".join(lines) + "\n"
