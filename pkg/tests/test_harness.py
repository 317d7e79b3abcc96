import csv
import io
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from tiltland.coordination import Scenario, TrialRecord
from tiltland.gp import GpModel
from tiltland.harness import (CARRIER_MASS, DEFAULT_STRATEGIES, FULL, GP_MEAN_ONLY, GP_WITH_VARIANCE,
                              PLATFORM_INERTIA, PURE_COOPERATION, ConfigError, ExperimentSpec, MetricsTable,
                              Strategy, build_experiment3_gp, cell_seed, experiment3, get_strategy,
                              linear_energy, load_records, parse_config, report, rotational_energy,
                              run_experiment, sample_dataset)
from tiltland.harness.cli import main
from tiltland.harness.metrics import CSV_COLUMNS
from tiltland.wavefield import WaveModel, squared_tilt


# strategies

@pytest.mark.parametrize("s", list(DEFAULT_STRATEGIES.values()))
def test_strategy_weights_match_name(s):
    assert (s.lambda_u > 0) == (s.name in ("uav_tilt_only", "full"))
    assert (s.lambda_w > 0) == (s.name in ("platform_tilt_only", "full"))
    assert Strategy.from_dict(s.to_dict()) == s
    assert get_strategy(s.name) == s


@pytest.mark.parametrize("kw", [dict(name="pure_cooperation", lambda_u=1.0, lambda_w=0.0, lambda_v=0.0),
                                dict(name="full", lambda_u=0.0, lambda_w=1.0, lambda_v=0.0),
                                dict(name="teleport", lambda_u=0.0, lambda_w=0.0, lambda_v=0.0)])
def test_inconsistent_strategy_rejected(kw):
    with pytest.raises(ValueError):
        Strategy(**kw)


def test_gp_variants_differ_only_in_variance_weight():
    assert GP_MEAN_ONLY.lambda_v == 0.0 and GP_WITH_VARIANCE.lambda_v == 100.0
    assert GP_MEAN_ONLY.label != GP_WITH_VARIANCE.label
    assert GP_MEAN_ONLY.lambda_w == GP_WITH_VARIANCE.lambda_w > 0


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(trials=0)
    with pytest.raises(ValueError):
        ExperimentSpec(strategies=(FULL, FULL))
    with pytest.raises(ValueError):
        ExperimentSpec(positions=((1.0, 1.0, 0.0),))


def test_cell_seed_is_stable_and_distinct():
    seeds = {cell_seed(0, s, p, k) for s in ("full", "pure_cooperation") for p in range(6) for k in range(5)}
    assert len(seeds) == 60
    assert cell_seed(7, "full", 2, 3) == cell_seed(7, "full", 2, 3)
    assert 0 <= cell_seed(7, "full", 2, 3) < 2 ** 63


def test_cell_scenario_applies_weights():
    spec = experiment3(gp=None)
    sc = spec.cell_scenario(GP_WITH_VARIANCE, (-1.0, 0.0))
    assert sc.platform_start == (-1.0, 0.0)
    assert sc.platform.lambda_v == 100.0 and sc.uav.lambda_u == GP_WITH_VARIANCE.lambda_u


# energies

def test_rotational_energy_constant_rate():
    t = np.linspace(0.0, 0.2, 11)
    traj = {"t": t.tolist(), "platform_tilt": (np.deg2rad(135.0) * t).tolist()}
    assert rotational_energy(traj) == pytest.approx(0.5 * PLATFORM_INERTIA * np.deg2rad(135.0) ** 2)
    assert rotational_energy(traj) == pytest.approx(0.0389, abs=5e-5)


@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_linear_energy_constant_speed(sign):
    # speed is signed along the heading, so reversing changes nothing
    traj = {"platform_speed": [sign * 0.5] * 7}
    assert linear_energy(traj) == pytest.approx(6.25)
    assert CARRIER_MASS == 50.0


def test_energies_of_empty_trajectory():
    assert rotational_energy({"t": [0.0], "platform_tilt": [0.1]}) == 0.0
    assert linear_energy({"platform_speed": []}) == 0.0


# a small real experiment shared by the table, report and CLI tests

@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    spec = ExperimentSpec(name="small", scenario=Scenario(wave=WaveModel(2.3)),
                          strategies=(PURE_COOPERATION, FULL), positions=((1.0, 1.0),), trials=2, seed=5)
    return out, run_experiment(spec, out)


def test_artifacts_written(small_run):
    out, res = small_run
    assert sorted(p.name for p in (out / "trials").iterdir()) == [
        "full_p0_t0.json", "full_p0_t1.json", "pure_cooperation_p0_t0.json", "pure_cooperation_p0_t1.json"]
    for name in ("spec.json", "metrics.csv", "plots.json"):
        assert (out / name).is_file()
    assert json.loads((out / "spec.json").read_text())["trials"] == 2


def test_table_counts_match_records(small_run):
    _, res = small_run
    assert res.table.strategies == ["pure_cooperation", "full"]
    for c in res.table.cells:
        recs = [r for r in res.records if r.tags["strategy"] == c.strategy]
        assert c.trials == 2
        assert c.successes == sum(r.success for r in recs)
        assert c.touchdowns == sum(r.touchdown is not None for r in recs)


def test_report_recount_is_bit_exact(small_run, tmp_path):
    out, res = small_run
    table = report(out, tmp_path)
    assert (tmp_path / "metrics.csv").read_text() == (out / "metrics.csv").read_text()
    assert (tmp_path / "plots.json").read_text() == (out / "plots.json").read_text()
    assert table.to_csv() == res.table.to_csv()


def test_report_is_order_independent(small_run):
    _, res = small_run
    assert MetricsTable.from_records(res.records[::-1]).to_csv() == res.table.to_csv()


def test_csv_layout(small_run):
    _, res = small_run
    rows = list(csv.reader(io.StringIO(res.table.to_csv())))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 3
    assert [r[0] for r in rows[1:]] == ["pure_cooperation", "full"]


def test_report_missing_directory(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_records(tmp_path / "nope")


def _fake(strategy, k, success, tilt_deg):
    td = None
    if tilt_deg is not None:
        td = {"time": 1.0, "offset": [0.0, 0.0], "location": [0.0, 0.0], "tilt": math.radians(tilt_deg),
              "descent_speed": 0.2, "success": success}
    return TrialRecord.from_dict({
        "schema_version": 1, "seed": k, "scenario": {}, "start_time": 0.0, "outcome": "touchdown",
        "touchdown": td, "diagnostic": "", "phases": [], "messages": {}, "solves": {},
        "tags": {"strategy": strategy, "position_index": 0, "position": [0.0, 0.0], "trial": k,
                 "strategy_index": 0 if strategy == "base" else 1},
        "trajectory": {"t": [0.0, 1.0], "platform_tilt": [0.0, 0.0], "platform_speed": [0.0, 0.0],
                       "uav_position": [[0, 0, 1], [0, 0, 1]]}})


def test_compare_points_and_relative():
    recs = [_fake("base", k, k < 2, 10.0) for k in range(4)] + [_fake("new", k, k < 3, 4.0) for k in range(4)]
    cmp = MetricsTable.from_records(recs).compare("new", "base")
    assert cmp["success_delta_points"] == pytest.approx(25.0)
    assert cmp["success_delta_relative"] == pytest.approx(0.5)
    assert cmp["tilt_reduction"] == pytest.approx(0.6)


def test_missing_touchdown_counts_as_failure():
    recs = [_fake("base", 0, False, None), _fake("base", 1, True, 3.0)]
    c = MetricsTable.from_records(recs).cell("base", 0)
    assert (c.trials, c.successes, c.touchdowns) == (2, 1, 1)
    assert c.tilt_mean == pytest.approx(3.0)
    assert [l["success"] for l in c.landings] == [False, True]


# configuration

def test_config_overrides():
    cfg = parse_config("preset: experiment1\nseed: 4\ntrials: 2\nuav: {lambda_u: 1e5}\n"
                       "bus: {delay: 0.1, drop_probability: 0.1}\npositions: [[0.5, 1.0]]\n")
    assert cfg.spec.seed == 4 and cfg.spec.trials == 2 and cfg.spec.positions == ((0.5, 1.0),)
    assert cfg.spec.wave.amplitude == 2.3
    assert cfg.spec.scenario.bus.delay == 0.1


@pytest.mark.parametrize("text,line", [
    ("seed: 1\nwaev: {amplitude: 2}\n", 2),
    ("seed: 1\ntrials: 2\nbus: {drop_probability: 2.0}\n", 3),
    ("seed: 1\nstrategies:\n  - {name: full, lambda_u: 0}\n", 3),
    ("trials: many\n", 1),
])
def test_config_errors_point_at_line(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config(text, "cfg.yaml")
    assert exc.value.line == line
    assert str(exc.value).startswith(f"cfg.yaml:{line}:")


# command line

def test_cli_missing_config(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "none.yaml")]) == 1


def test_cli_bad_key(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("seed: 1\nbogus: 3\n")
    assert main(["experiment", "--config", str(p)]) == 1


def test_cli_usage_error():
    assert main(["fly"]) == 1


def test_cli_run_and_report(tmp_path, small_run, capsys):
    p = tmp_path / "one.yaml"
    p.write_text("preset: experiment1\nscenario: {timeout: 2.0}\nrun: {strategy: full, position: [0.5, 1.0]}\n")
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "logs")]) == 0
    assert "full from (0.5, 1)" in capsys.readouterr().out
    assert main(["report", str(small_run[0]), "--out", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "rep" / "metrics.csv").read_text() == (small_run[0] / "metrics.csv").read_text()


# learned field

@pytest.fixture(scope="module")
def gp():
    return build_experiment3_gp()


def test_dataset_is_stratified():
    d = sample_dataset(WaveModel(8.0), seed=2)
    assert d.inputs.shape == (50, 3)
    strata = np.floor((d.inputs[:, 0] + 0.5) * 50).astype(int)
    assert sorted(strata) == list(range(50))
    assert np.all(d.observations >= 0.0)


def test_noise_free_fit_interpolates():
    d = sample_dataset(WaveModel(8.0), n=12, seed=1, noise_std=0.0)
    fitted = build_experiment3_gp(n=12, seed=1, noise_std=0.0, restarts=1)
    model = GpModel(d, replace(fitted.hyperparams, noise_variance=0.0))
    assert np.allclose(model.mean(d.inputs), d.observations, atol=1e-6)


def test_fitted_field_tracks_truth(gp):
    g = np.meshgrid(np.linspace(-0.5, 0.5, 9), np.linspace(-0.5, 1.5, 5), np.linspace(0.0, 2.0, 21),
                    indexing="ij")
    a = np.stack([v.ravel() for v in g], axis=1)
    truth = squared_tilt(WaveModel(8.0), a[:, :2], a[:, 2])
    rmse = np.sqrt(np.mean((gp.mean(a) - truth) ** 2))
    assert rmse / np.sqrt(np.mean(truth ** 2)) < 0.2


def test_gp_save_load(gp, tmp_path):
    gp.save(tmp_path / "gp.json")
    back = GpModel.load(tmp_path / "gp.json")
    q = np.array([[0.1, 0.2, 0.3], [-2.0, 1.0, 1.9]])
    assert np.array_equal(back.mean(q), gp.mean(q))
    assert np.array_equal(back.variance(q), gp.variance(q))
