"""Experiment definitions and the batch runner."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from ..coordination import BusConfig, PlatformControllerConfig, Scenario, TrialRecord, \
    UavControllerConfig, run_trial
from ..gp import GpModel
from ..wavefield import WaveModel
from .gpbuild import DEFAULT_BOUNDS, build_experiment3_gp
from .metrics import MetricsTable
from .strategies import DEFAULT_STRATEGIES, GP_MEAN_ONLY, GP_WITH_VARIANCE, PURE_COOPERATION, Strategy

log = logging.getLogger(__name__)

DEFAULT_POSITIONS = tuple((x, 1.0) for x in (-1.5, -1.0, -0.5, 0.5, 1.0, 1.5))
# the learned field is only trustworthy near its data; these starts sit on
# the side where leaving the data also lowers the true amplitude
GP_POSITIONS = ((-1.5, 1.0), (-1.0, 1.0), (-1.0, 0.0))


@dataclass(frozen=True)
class GpSource:
    """How to obtain the learned field: load ``path`` or fit a fresh one."""

    path: Optional[str] = None
    n: int = 50
    seed: int = 0
    noise_std: float = 0.01
    bounds: tuple = DEFAULT_BOUNDS

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("gp.n must be >= 2")
        if self.noise_std < 0.0:
            raise ValueError("gp.noise_std must be >= 0")

    def build(self, wave: WaveModel) -> GpModel:
        if self.path:
            return GpModel.load(self.path)
        return build_experiment3_gp(wave, self.n, self.seed, self.bounds, self.noise_std)


@dataclass(frozen=True)
class ExperimentSpec:
    """A grid of strategies by platform start positions, ``trials`` each.

    ``scenario`` is the template every cell is derived from; the start
    position and tilt weights are filled in per cell.
    """

    name: str = "experiment"
    scenario: Scenario = field(default_factory=Scenario)
    strategies: tuple = tuple(DEFAULT_STRATEGIES.values())
    positions: tuple = DEFAULT_POSITIONS
    trials: int = 5
    seed: int = 0
    gp: Optional[GpSource] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials per cell must be >= 1")
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        if not self.positions:
            raise ValueError("at least one start position is required")
        labels = [s.label for s in self.strategies]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate strategy labels: {labels}")
        for p in self.positions:
            if len(p) != 2:
                raise ValueError(f"start positions are planar points, got {p!r}")

    @property
    def wave(self) -> WaveModel:
        return self.scenario.wave

    def cell_scenario(self, strategy: Strategy, position, tilt_model=None) -> Scenario:
        sc = self.scenario
        return replace(sc, platform_start=tuple(float(v) for v in position), tilt_model=tilt_model,
                       uav=replace(sc.uav, lambda_u=strategy.lambda_u),
                       platform=replace(sc.platform, lambda_w=strategy.lambda_w, lambda_v=strategy.lambda_v))

    def to_dict(self) -> dict:
        d = {"name": self.name, "seed": self.seed, "trials": self.trials,
             "positions": [list(p) for p in self.positions],
             "strategies": [s.to_dict() for s in self.strategies],
             "scenario": self.scenario.to_dict()}
        if self.gp is not None:
            d["gp"] = {"path": self.gp.path, "n": self.gp.n, "seed": self.gp.seed,
                       "noise_std": self.gp.noise_std, "bounds": [list(b) for b in self.gp.bounds]}
        return d


def cell_seed(master: int, strategy: str, position_index: int, trial: int) -> int:
    """Stable 63-bit seed for one trial of one cell."""
    key = f"{int(master)}|{strategy}|{int(position_index)}|{int(trial)}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little") >> 1


def experiment1(**kw) -> ExperimentSpec:
    """Calm water, all four strategies."""
    kw.setdefault("scenario", Scenario(wave=WaveModel(2.3)))
    return ExperimentSpec(name="experiment1", **kw)


def experiment2(**kw) -> ExperimentSpec:
    """Rough water, all four strategies."""
    kw.setdefault("scenario", Scenario(wave=WaveModel(8.0)))
    return ExperimentSpec(name="experiment2", **kw)


def experiment3(**kw) -> ExperimentSpec:
    """Rough water seen through a learned field."""
    kw.setdefault("scenario", Scenario(wave=WaveModel(8.0)))
    kw.setdefault("strategies", (PURE_COOPERATION, GP_MEAN_ONLY, GP_WITH_VARIANCE))
    kw.setdefault("positions", GP_POSITIONS)
    kw.setdefault("gp", GpSource())
    return ExperimentSpec(name="experiment3", **kw)


PRESETS = {"experiment1": experiment1, "experiment2": experiment2, "experiment3": experiment3}


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    table: MetricsTable
    records: list
    gp: Optional[GpModel] = None


def _run_cell(args):
    scenario, seed, tags = args
    try:
        return run_trial(scenario, seed, tags)
    except Exception as exc:  # a broken trial is a failed landing, not a broken batch
        log.exception("trial %s failed", tags)
        return _failed_record(scenario, seed, tags, f"{type(exc).__name__}: {exc}")


def _failed_record(scenario, seed, tags, diagnostic) -> TrialRecord:
    from ..coordination.trial import SOLVE_FIELDS, TRAJECTORY_FIELDS
    empty = lambda names: {n: [] for n in names}
    return TrialRecord(int(seed), scenario.to_dict(), 0.0, "aborted", empty(TRAJECTORY_FIELDS),
                       [], {"uav": empty(SOLVE_FIELDS), "platform": empty(SOLVE_FIELDS)},
                       {"sent": {}, "dropped": {}, "log": []}, None, diagnostic, dict(tags))


def trial_filename(tags: dict) -> str:
    return f"{tags['strategy']}_p{int(tags['position_index'])}_t{int(tags['trial'])}.json"


def run_experiment(spec: ExperimentSpec, out: Optional[os.PathLike] = None, parallel: int = 1,
                   gp: Optional[GpModel] = None, progress=None) -> ExperimentResult:
    """Run every (strategy, position, trial) cell and aggregate the metrics.

    With ``out`` set, the resolved spec, the GP (if any), one log per trial,
    the metrics CSV and plot-ready JSON are written there.
    """
    if gp is None and spec.gp is not None:
        gp = spec.gp.build(spec.wave)
    jobs = []
    for si, strat in enumerate(spec.strategies):
        for pi, pos in enumerate(spec.positions):
            sc = spec.cell_scenario(strat, pos, gp)
            for k in range(spec.trials):
                tags = {"experiment": spec.name, "strategy": strat.label, "strategy_index": si,
                        "position_index": pi, "position": [float(pos[0]), float(pos[1])], "trial": k}
                jobs.append((sc, cell_seed(spec.seed, strat.label, pi, k), tags))
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as ex:
            records = list(ex.map(_run_cell, jobs))
    else:
        records = []
        for job in jobs:
            records.append(_run_cell(job))
            if progress is not None:
                progress(records[-1])
    table = MetricsTable.from_records(records)
    if out is not None:
        write_artifacts(Path(out), spec, table, records, gp)
    return ExperimentResult(spec, table, records, gp)


def write_artifacts(out: Path, spec: ExperimentSpec, table: MetricsTable, records, gp=None):
    from .report import write_metrics
    trials = out / "trials"
    trials.mkdir(parents=True, exist_ok=True)
    (out / "spec.json").write_text(json.dumps(spec.to_dict(), indent=2))
    if gp is not None:
        gp.save(out / "gp.json")
    for r in records:
        r.save(trials / trial_filename(r.tags))
    write_metrics(out, table)
