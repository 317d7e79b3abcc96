"""YAML experiment configuration with line-anchored validation errors.

A config describes one experiment. Every section is optional; missing
values fall back to the chosen preset (``experiment2`` by default)::

    preset: experiment2
    name: rough-water
    seed: 7
    trials: 5
    positions: [[-1.5, 1.0], [1.5, 1.0]]
    strategies: [pure_cooperation, full]
    wave: {amplitude: 8.0}
    bus: {delay: 0.1, drop_probability: 0.1}
    uav: {horizon: 10}
    platform: {coop_planar: 50.0}
    touchdown: {max_tilt: 0.1745}
    scenario: {timeout: 60.0}
    gp: {n: 50, seed: 0, noise_std: 0.01}
    run: {strategy: full, position: [1.0, 1.0]}
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import yaml

from ..coordination import Scenario
from .experiment import PRESETS, ExperimentSpec, GpSource
from .strategies import Strategy, get_strategy

SCENARIO_KEYS = ("plant_dt", "uav_period", "platform_period", "log_period", "timeout",
                 "start_time", "position_jitter", "uav_start", "platform_heading")
SECTIONS = ("wave", "uav", "platform", "bus", "touchdown")
TOP_KEYS = ("preset", "name", "seed", "trials", "positions", "strategies", "scenario", "gp", "run",
            *SECTIONS)


class ConfigError(ValueError):
    """Invalid configuration, pointing at the offending line when known."""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.message, self.line, self.source = message, line, source
        loc = source or "<config>"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}")


@dataclass
class RunSelection:
    """Which single cell the ``run`` subcommand simulates."""

    strategy: Optional[str] = None
    position: Optional[tuple] = None


@dataclass
class LoadedConfig:
    spec: ExperimentSpec
    run: RunSelection
    raw: dict


class _Ctx:
    def __init__(self, source):
        self.source = source

    def fail(self, node, msg):
        line = node.start_mark.line + 1 if node is not None else None
        raise ConfigError(msg, line, self.source)


def _plain(node):
    return yaml.SafeLoader("").construct_object(node, deep=True)


def _items(ctx, node, what):
    if not isinstance(node, yaml.MappingNode):
        ctx.fail(node, f"{what} must be a mapping")
    out = {}
    for k, v in node.value:
        key = _plain(k)
        if not isinstance(key, str):
            ctx.fail(k, f"{what}: keys must be strings")
        if key in out:
            ctx.fail(k, f"{what}: duplicate key {key!r}")
        out[key] = (k, v)
    return out


def _number(ctx, node, what, integer=False):
    v = _plain(node)
    if isinstance(v, str) and not integer:
        # YAML 1.1 reads exponents without a dot (1e5) as strings
        try:
            v = float(v)
        except ValueError:
            pass
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and not isinstance(v, int)):
        ctx.fail(node, f"{what} must be {'an integer' if integer else 'a number'}, got {v!r}")
    if not integer and not math.isfinite(v):
        ctx.fail(node, f"{what} must be finite")
    return int(v) if integer else float(v)


def _tuple(ctx, node, what, like):
    v = _plain(node)
    if not isinstance(v, list):
        ctx.fail(node, f"{what} must be a list")

    def conv(x, ref):
        if isinstance(x, list):
            return tuple(conv(a, ref[0] if isinstance(ref, tuple) and ref else None) for a in x)
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            ctx.fail(node, f"{what} must contain numbers")
        return float(x)
    out = conv(v, like)
    if isinstance(like, tuple) and like and len(out) != len(like):
        ctx.fail(node, f"{what} must have {len(like)} entries, got {len(out)}")
    return out


def _override(ctx, obj, node, what):
    """Copy of dataclass ``obj`` with fields taken from a mapping node."""
    names = {f.name: f for f in dataclasses.fields(obj)}
    kw = {}
    for key, (knode, vnode) in _items(ctx, node, what).items():
        f = names.get(key)
        if f is None:
            ctx.fail(knode, f"unknown key {what}.{key}; expected one of {', '.join(names)}")
        cur = getattr(obj, key)
        label = f"{what}.{key}"
        if dataclasses.is_dataclass(cur):
            kw[key] = _override(ctx, cur, vnode, label)
        elif isinstance(cur, bool):
            v = _plain(vnode)
            if not isinstance(v, bool):
                ctx.fail(vnode, f"{label} must be true or false")
            kw[key] = v
        elif isinstance(cur, int) and "float" not in str(f.type):
            kw[key] = _number(ctx, vnode, label, integer=True)
        elif isinstance(cur, float):
            kw[key] = _number(ctx, vnode, label)
        elif isinstance(cur, tuple):
            kw[key] = _tuple(ctx, vnode, label, cur)
        elif isinstance(cur, str) or (cur is None and "str" in str(f.type)):
            v = _plain(vnode)
            if v is not None and not isinstance(v, str):
                ctx.fail(vnode, f"{label} must be a string")
            kw[key] = v
        elif cur is None and "int" in str(f.type):
            kw[key] = None if _plain(vnode) is None else _number(ctx, vnode, label, integer=True)
        elif cur is None and "float" in str(f.type):
            kw[key] = None if _plain(vnode) is None else _number(ctx, vnode, label)
        else:
            ctx.fail(knode, f"{label} cannot be set from a config file")
    try:
        return replace(obj, **kw)
    except (TypeError, ValueError) as exc:
        ctx.fail(node, f"{what}: {exc}")


def _strategy(ctx, node):
    if isinstance(node, yaml.ScalarNode):
        try:
            return get_strategy(str(_plain(node)))
        except ValueError as exc:
            ctx.fail(node, str(exc))
    items = _items(ctx, node, "strategy")
    allowed = ("name", "label", "lambda_u", "lambda_w", "lambda_v")
    d = {}
    for key, (knode, vnode) in items.items():
        if key not in allowed:
            ctx.fail(knode, f"unknown strategy key {key!r}; expected one of {', '.join(allowed)}")
        d[key] = str(_plain(vnode)) if key in ("name", "label") else _number(ctx, vnode, f"strategy.{key}")
    if "name" not in d:
        ctx.fail(node, "strategy needs a name")
    try:
        return Strategy.from_dict(d)
    except ValueError as exc:
        ctx.fail(node, str(exc))


def _positions(ctx, node):
    if not isinstance(node, yaml.SequenceNode) or not node.value:
        ctx.fail(node, "positions must be a non-empty list of [x, y] points")
    return tuple(_tuple(ctx, p, "position", (0.0, 0.0)) for p in node.value)


def parse_config(text: str, source: Optional[str] = None) -> LoadedConfig:
    ctx = _Ctx(source)
    try:
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ConfigError(f"YAML syntax error: {exc.problem}", mark.line + 1 if mark else None, source) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML error: {exc}", None, source) from None
    if root is None:
        items = {}
    else:
        items = _items(ctx, root, "config")
    for key, (knode, _) in items.items():
        if key not in TOP_KEYS:
            ctx.fail(knode, f"unknown key {key!r}; expected one of {', '.join(TOP_KEYS)}")

    preset = "experiment2"
    if "preset" in items:
        knode, vnode = items["preset"]
        preset = _plain(vnode)
        if preset not in PRESETS:
            ctx.fail(vnode, f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}")
    base = PRESETS[preset]()

    sc = base.scenario
    for sec in SECTIONS:
        if sec in items:
            sc = replace(sc, **{sec: _override(ctx, getattr(sc, sec), items[sec][1], sec)})
    if "scenario" in items:
        node = items["scenario"][1]
        for key, (knode, _) in _items(ctx, node, "scenario").items():
            if key not in SCENARIO_KEYS:
                ctx.fail(knode, f"unknown key scenario.{key}; expected one of {', '.join(SCENARIO_KEYS)}")
        sc = _override(ctx, sc, node, "scenario")

    kw = {"scenario": sc}
    if "name" in items:
        kw["name"] = str(_plain(items["name"][1]))
    for key in ("seed", "trials"):
        if key in items:
            kw[key] = _number(ctx, items[key][1], key, integer=True)
    if "trials" in kw and kw["trials"] < 1:
        ctx.fail(items["trials"][1], "trials must be >= 1")
    if "positions" in items:
        kw["positions"] = _positions(ctx, items["positions"][1])
    if "strategies" in items:
        node = items["strategies"][1]
        if not isinstance(node, yaml.SequenceNode) or not node.value:
            ctx.fail(node, "strategies must be a non-empty list")
        kw["strategies"] = tuple(_strategy(ctx, s) for s in node.value)
    if "gp" in items:
        node = items["gp"][1]
        if _plain(node) is None:
            kw["gp"] = None
        else:
            kw["gp"] = _override(ctx, GpSource(), node, "gp")
    try:
        spec = replace(base, **kw)
    except ValueError as exc:
        ctx.fail(root, str(exc))

    run = RunSelection()
    if "run" in items:
        sub = _items(ctx, items["run"][1], "run")
        for key, (knode, vnode) in sub.items():
            if key == "strategy":
                run.strategy = str(_plain(vnode))
                if run.strategy not in [s.label for s in spec.strategies]:
                    ctx.fail(vnode, f"run.strategy {run.strategy!r} is not among the configured strategies")
            elif key == "position":
                run.position = _tuple(ctx, vnode, "run.position", (0.0, 0.0))
            else:
                ctx.fail(knode, f"unknown key run.{key}; expected strategy or position")
    return LoadedConfig(spec, run, _plain(root) if root is not None else {})


def load_config(path) -> LoadedConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("config file not found", None, str(path))
    return parse_config(p.read_text(), str(path))
