"""Re-aggregation of trial logs into metrics files."""

from __future__ import annotations

import json
import math
from pathlib import Path

from ..coordination import TrialRecord
from .metrics import MetricsTable

METRICS_CSV = "metrics.csv"
PLOT_JSON = "plots.json"


def _finite(obj):
    # strict JSON has no NaN
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def load_records(directory) -> list:
    """All trial logs under ``directory`` (or its ``trials`` subfolder), sorted by file name."""
    d = Path(directory)
    if (d / "trials").is_dir():
        d = d / "trials"
    if not d.is_dir():
        raise FileNotFoundError(f"no such log directory: {directory}")
    files = sorted(d.glob("*.json"))
    if not files:
        raise FileNotFoundError(f"no trial logs in {d}")
    return [TrialRecord.load(f) for f in files]


def write_metrics(out, table: MetricsTable):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / METRICS_CSV).write_text(table.to_csv())
    (out / PLOT_JSON).write_text(json.dumps(_finite(table.plot_data()), indent=1))


def report(directory, out=None) -> MetricsTable:
    """Rebuild the metrics of a finished run from its trial logs alone."""
    table = MetricsTable.from_records(load_records(directory))
    write_metrics(out if out is not None else directory, table)
    return table
