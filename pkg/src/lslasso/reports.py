"""
Report serialization.

Every run ends in :func:`emit_report`, which writes ``<name>.json`` (sorted
keys, shortest round-trip floats) and, when the report carries per-trial rows,
``<name>.csv`` with 17 significant digits, then prints a one-line summary.
Verification reports keep the trial columns ``trial, statistic, threshold,
violated`` first; extra diagnostics follow in a fixed order.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd

from .errors import ReportError

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


@dataclass
class Report:
    """A named result without a Monte-Carlo verdict (bounds, fit, re, simulate)."""

    name: str
    payload: Dict[str, Any]
    rows: Optional[pd.DataFrame] = field(default=None, repr=False)
    passed: bool = True
    csv_path: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        out = dict(self.payload)
        out.update(name=self.name, csv_path=self.csv_path)
        out["pass"] = self.passed
        return out


def _plain(value):
    """JSON-ready copy of value; non-finite floats become "inf", "-inf" or "nan"."""
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if value is None or isinstance(value, (str, int)):
        return value
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def to_json(document: Dict[str, Any]) -> str:
    """Strict JSON (no Infinity or NaN tokens) with sorted keys."""
    return json.dumps(_plain(document), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise ReportError(f"cannot write {path}: {e.strerror or e}") from e


def _write_csv(path: Path, rows: pd.DataFrame) -> None:
    try:
        rows.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise ReportError(f"cannot write {path}: {e.strerror or e}") from e


def _summary_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}" if math.isfinite(value) else str(value)
    return str(value)


def summary_line(reports: List[Any]) -> str:
    """``PASS``/``FAIL`` line naming every failing check."""
    failing = [r.name for r in reports if not r.passed]
    if len(reports) == 1:
        report = reports[0]
        doc = report.to_dict()
        parts = [f"{report.name}: {'PASS' if report.passed else 'FAIL'}"]
        for key in ("violations", "trials", "violation_rate", "nominal_q", "mc_mean", "bound",
                    "kappa", "objective"):
            if key in doc:
                parts.append(f"{key}={_summary_value(doc[key])}")
        return " ".join(parts)
    head = f"{len(reports) - len(failing)}/{len(reports)} checks passed"
    return f"{head}; failing: {', '.join(failing)}" if failing else f"{head}: PASS"


def emit_report(report: Union[Any, Iterable[Any]], output_dir: Union[str, Path],
                include_timestamp: bool = False, echo: bool = True) -> int:
    """
    Write the JSON and CSV files of one report or a sequence of reports.

    Args:
        report: an object with ``name``, ``passed``, ``rows``, ``csv_path`` and
            ``to_dict()``, or a list of them.
        output_dir: created when missing.
        include_timestamp: add a ``generated_at`` UTC field; off by default so
            repeated runs give byte-identical JSON.
        echo: print the summary line to standard output.

    Returns:
        int: 0 when every report passed, 1 otherwise.

    Raises:
        ReportError: the directory or a file cannot be written.
    """
    reports = list(report) if isinstance(report, (list, tuple)) else [report]
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ReportError(f"cannot create output directory {out}: {e.strerror or e}") from e

    for item in reports:
        rows = getattr(item, "rows", None)
        if rows is not None and len(rows.columns):
            csv_file = out / f"{item.name}.csv"
            _write_csv(csv_file, rows)
            item.csv_path = csv_file.name
        document = item.to_dict()
        if include_timestamp:
            document["generated_at"] = datetime.now(timezone.utc).isoformat()
        json_file = out / f"{item.name}.json"
        _write_text(json_file, to_json(document))
        logger.info("wrote %s", json_file)

    line = summary_line(reports)
    if echo:
        print(line)
    return 0 if all(r.passed for r in reports) else 1
