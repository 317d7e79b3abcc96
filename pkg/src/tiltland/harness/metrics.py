"""Trial metrics and their per-cell aggregation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np

# pad moment of inertia about the tilt axis, kg m^2
PLATFORM_INERTIA = 0.014
# carrier mass for linear kinetic energy, kg
CARRIER_MASS = 50.0


def rotational_energy(trajectory: dict, inertia: float = PLATFORM_INERTIA) -> float:
    """Mean rotational kinetic energy of the pad, from finite-difference tilt rate."""
    t = np.asarray(trajectory["t"], dtype=float)
    tilt = np.asarray(trajectory["platform_tilt"], dtype=float)
    if t.size < 2:
        return 0.0
    omega = np.diff(tilt) / np.diff(t)
    return float(np.mean(0.5 * inertia * omega ** 2))


def linear_energy(trajectory: dict, mass: float = CARRIER_MASS) -> float:
    """Mean linear kinetic energy of the carrier."""
    v = np.asarray(trajectory["platform_speed"], dtype=float)
    if v.size == 0:
        return 0.0
    return float(np.mean(0.5 * mass * v ** 2))


def _quantiles(x):
    if not len(x):
        return [math.nan] * 5
    return [float(v) for v in np.quantile(np.asarray(x, dtype=float), [0.0, 0.25, 0.5, 0.75, 1.0])]


@dataclass
class CellMetrics:
    """Aggregates over the trials of one (strategy, start position) cell.

    Tilts are in degrees and cover trials that reached touchdown.
    """

    strategy: str
    position_index: int
    position: tuple
    trials: int
    successes: int
    touchdowns: int
    tilt_mean: float
    tilt_min: float
    tilt_q1: float
    tilt_median: float
    tilt_q3: float
    tilt_max: float
    rotational_energy: float
    linear_energy: float
    tilts: list = field(default_factory=list)
    landings: list = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


CSV_COLUMNS = ("strategy", "position_index", "position_x", "position_y", "trials", "successes",
               "success_rate", "touchdowns", "tilt_mean_deg", "tilt_min_deg", "tilt_q1_deg",
               "tilt_median_deg", "tilt_q3_deg", "tilt_max_deg", "rotational_energy_j",
               "linear_energy_j")


def cell_metrics(strategy: str, position_index: int, position, records, inertia=PLATFORM_INERTIA,
                 mass=CARRIER_MASS) -> CellMetrics:
    tilts, landings = [], []
    for r in records:
        td = r.touchdown
        if td is not None:
            tilts.append(math.degrees(td.tilt))
            landings.append({"x": float(td.location[0]), "y": float(td.location[1]),
                             "tilt_deg": math.degrees(td.tilt), "success": bool(td.success)})
        else:
            last = r.trajectory["uav_position"][-1] if r.trajectory["uav_position"] else [math.nan] * 2
            landings.append({"x": float(last[0]), "y": float(last[1]), "tilt_deg": None, "success": False})
    q = _quantiles(tilts)
    rot = [rotational_energy(r.trajectory, inertia) for r in records]
    lin = [linear_energy(r.trajectory, mass) for r in records]
    return CellMetrics(strategy, int(position_index), tuple(float(v) for v in position), len(records),
                       sum(1 for r in records if r.success), len(tilts),
                       float(np.mean(tilts)) if tilts else math.nan, *q,
                       float(np.mean(rot)) if rot else 0.0, float(np.mean(lin)) if lin else 0.0,
                       tilts, landings)


@dataclass
class MetricsTable:
    """Per-cell metrics plus strategy-level summaries."""

    cells: list

    @classmethod
    def from_records(cls, records: Iterable, inertia=PLATFORM_INERTIA, mass=CARRIER_MASS) -> "MetricsTable":
        """Group tagged trial records by (strategy, position) and aggregate.

        Records are sorted by their tags first so the result does not depend
        on the order they were produced in.
        """
        groups = {}
        for r in records:
            tg = r.tags
            key = (tg["strategy"], int(tg["position_index"]))
            groups.setdefault(key, []).append(r)
        order = {}
        cells = []
        for key in sorted(groups, key=lambda k: (k[1], k[0])):
            rs = sorted(groups[key], key=lambda r: int(r.tags["trial"]))
            order.setdefault(key[0], min((int(r.tags.get("strategy_index", 0)) for r in rs)))
            cells.append(cell_metrics(key[0], key[1], rs[0].tags["position"], rs, inertia, mass))
        cells.sort(key=lambda c: (order[c.strategy], c.strategy, c.position_index))
        return cls(cells)

    @property
    def strategies(self) -> list:
        seen = []
        for c in self.cells:
            if c.strategy not in seen:
                seen.append(c.strategy)
        return seen

    def cell(self, strategy: str, position_index: int) -> CellMetrics:
        for c in self.cells:
            if c.strategy == strategy and c.position_index == position_index:
                return c
        raise KeyError((strategy, position_index))

    def select(self, strategy: str) -> list:
        return [c for c in self.cells if c.strategy == strategy]

    def success_rate(self, strategy: str) -> float:
        cs = self.select(strategy)
        n = sum(c.trials for c in cs)
        return sum(c.successes for c in cs) / n if n else 0.0

    def mean_tilt(self, strategy: str) -> float:
        """Mean touchdown tilt in degrees over all touchdowns of a strategy."""
        t = [v for c in self.select(strategy) for v in c.tilts]
        return float(np.mean(t)) if t else math.nan

    def compare(self, strategy: str, baseline: str) -> dict:
        """Success and tilt changes of ``strategy`` relative to ``baseline``.

        Success deltas are given both in percentage points and relative to
        the baseline rate, since either reading is common.
        """
        s, b = self.success_rate(strategy), self.success_rate(baseline)
        ts, tb = self.mean_tilt(strategy), self.mean_tilt(baseline)
        return {
            "strategy": strategy,
            "baseline": baseline,
            "success_rate": s,
            "baseline_success_rate": b,
            "success_delta_points": 100.0 * (s - b),
            "success_delta_relative": (s - b) / b if b > 0 else (math.inf if s > 0 else 0.0),
            "tilt_mean_deg": ts,
            "baseline_tilt_mean_deg": tb,
            "tilt_reduction": 1.0 - ts / tb if tb > 0 else math.nan,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in self.cells:
            w.writerow([c.strategy, c.position_index, repr(c.position[0]), repr(c.position[1]), c.trials,
                        c.successes, repr(c.success_rate), c.touchdowns, *(repr(v) for v in (
                            c.tilt_mean, c.tilt_min, c.tilt_q1, c.tilt_median, c.tilt_q3, c.tilt_max,
                            c.rotational_energy, c.linear_energy))])
        return buf.getvalue()

    def plot_data(self) -> dict:
        """Box-plot, landing-scatter and energy-scatter series as plain data."""
        return {
            "box": [{"strategy": c.strategy, "position_index": c.position_index,
                     "position": list(c.position), "tilts_deg": c.tilts,
                     "quartiles_deg": [c.tilt_min, c.tilt_q1, c.tilt_median, c.tilt_q3, c.tilt_max]}
                    for c in self.cells],
            "landings": [dict(l, strategy=c.strategy, position_index=c.position_index,
                              marker="o" if l["success"] else "x")
                         for c in self.cells for l in c.landings],
            "energy": [{"strategy": c.strategy, "position_index": c.position_index,
                        "linear_j": c.linear_energy, "rotational_j": c.rotational_energy}
                       for c in self.cells],
            "summary": [{"strategy": s, "success_rate": self.success_rate(s),
                         "tilt_mean_deg": _nan_to_none(self.mean_tilt(s))} for s in self.strategies],
        }

    def summary_lines(self) -> list:
        out = []
        for s in self.strategies:
            out.append(f"{s:24s} success {100 * self.success_rate(s):5.1f}%  "
                       f"mean tilt {self.mean_tilt(s):6.2f} deg")
        return out


def _nan_to_none(v):
    return None if isinstance(v, float) and math.isnan(v) else v
