"""Command-line entry point: ``tiltland {run,experiment,fit-gp,report}``.

Exit status is 0 on success, 1 for invalid input (bad config, unknown
strategy, missing files) and 2 when a run fails at runtime.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from ..coordination import run_trial
from .config import ConfigError, load_config
from .experiment import PRESETS, cell_seed, run_experiment, trial_filename
from .report import report

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("tiltland")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tiltland", description="Cooperative landing on a tilting platform.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, parallel=False):
        sp.add_argument("--config", type=Path, help="YAML experiment config")
        sp.add_argument("--preset", choices=sorted(PRESETS), help="base experiment when no config is given")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--strategy", help="strategy label; comma-separated for experiments")
        if parallel:
            sp.add_argument("--parallel", type=int, default=1, help="worker processes")

    common(sub.add_parser("run", help="simulate a single trial"))
    common(sub.add_parser("experiment", help="run a strategy by position batch"), parallel=True)
    common(sub.add_parser("fit-gp", help="fit the learned tilt field"))
    rp = sub.add_parser("report", help="rebuild metrics from trial logs")
    rp.add_argument("logs", type=Path, help="experiment output directory")
    rp.add_argument("--out", type=Path, help="where to write metrics (default: the log directory)")
    return p


def _load(args):
    if args.config is not None:
        cfg = load_config(args.config)
        spec, sel = cfg.spec, cfg.run
    else:
        from .config import RunSelection
        spec, sel = PRESETS[args.preset or "experiment2"](), RunSelection()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    return spec, sel


def _pick_strategies(spec, names):
    if not names:
        return spec
    wanted = [n.strip() for n in names.split(",") if n.strip()]
    by_label = {s.label: s for s in spec.strategies}
    missing = [n for n in wanted if n not in by_label]
    if missing:
        raise ConfigError(f"unknown strategy {missing[0]!r}; configured: {', '.join(by_label)}")
    return replace(spec, strategies=tuple(by_label[n] for n in wanted))


def _cmd_run(args) -> int:
    spec, sel = _load(args)
    label = args.strategy or sel.strategy or spec.strategies[-1].label
    spec = _pick_strategies(spec, label)
    strat = spec.strategies[0]
    pos = sel.position or spec.positions[0]
    gp = spec.gp.build(spec.wave) if spec.gp is not None else None
    seed = cell_seed(spec.seed, strat.label, 0, 0)
    tags = {"experiment": spec.name, "strategy": strat.label, "strategy_index": 0, "position_index": 0,
            "position": [float(pos[0]), float(pos[1])], "trial": 0}
    rec = run_trial(spec.cell_scenario(strat, pos, gp), seed, tags)
    td = rec.touchdown
    print(f"{strat.label} from ({pos[0]:g}, {pos[1]:g}): {rec.outcome} after {rec.duration:.2f} s"
          + (f", tilt {math.degrees(td.tilt):.2f} deg, {'success' if td.success else 'failure'}" if td else "")
          + (f" ({rec.diagnostic})" if rec.diagnostic else ""))
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        rec.save(args.out / trial_filename(tags))
    return EXIT_OK


def _cmd_experiment(args) -> int:
    spec, _ = _load(args)
    spec = _pick_strategies(spec, args.strategy)
    if args.parallel < 1:
        raise ConfigError("--parallel must be >= 1")
    out = args.out if args.out is not None else Path("results") / spec.name
    res = run_experiment(spec, out, parallel=args.parallel,
                         progress=lambda r: log.info("%s p%s t%s: %s", r.tags["strategy"],
                                                     r.tags["position_index"], r.tags["trial"], r.outcome))
    for line in res.table.summary_lines():
        print(line)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_fit_gp(args) -> int:
    spec, _ = _load(args)
    from .experiment import GpSource
    src = spec.gp if spec.gp is not None else GpSource()
    if args.seed is not None:
        src = replace(src, seed=args.seed, path=None)
    model = src.build(spec.wave)
    out = args.out if args.out is not None else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "gp.json")
    print(json.dumps(model.hyperparams.to_dict()))
    print(f"wrote {out / 'gp.json'}")
    return EXIT_OK


def _cmd_report(args) -> int:
    table = report(args.logs, args.out)
    for line in table.summary_lines():
        print(line)
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "experiment": _cmd_experiment, "fit-gp": _cmd_fit_gp, "report": _cmd_report}


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
