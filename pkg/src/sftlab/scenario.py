"""Scenario files: shifts, named potentials and measures, and a task list.

A scenario is a JSON object::

    {
      "seed": 0,
      "systems": {"two_shift": {"full_shift": 2},
                  "union": {"union": [{"full_shift": 2}, {"full_shift": 3}]}},
      "potentials": {"zero": {"system": "two_shift", "constant": 0.0},
                     "ones": {"system": "two_shift", "indicator": ["1"]}},
      "measures": {"mix": {"system": "union", "mixture": ["p0", "p1"], "weights": [0.5, 0.5]}},
      "tasks": [{"type": "rate-audit", "system": "two_shift", "base": "zero",
                 "directions": ["ones"], "grid": [0.25, 0.5, 0.75]}]
    }

A single ``"system"`` entry may replace the ``"systems"`` map; it is then
called ``"default"`` and every ``"system"`` field may be omitted.
Potentials are ``{"constant": c}``, ``{"indicator": [symbols]}``,
``{"cylinder": word}``, ``{"depth": k, "values": {word: value} or [values],
"default": v}`` or ``{"sum": [names], "coefficients": [..]}``; any of them
accepts a ``"scale"`` factor. Measures are ``{"bernoulli": probs}``,
``{"point_mass": symbol}``, ``{"parry": component}``, ``{"equilibrium":
potential}`` or ``{"mixture": [names], "weights": [..]}``.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .sft import MarkovMeasure, Potential, Sft, bernoulli, mixture, parry_measure, point_mass

TASK_TYPES = ("pressure", "equilibrium", "kinkscan", "rate-audit", "ldp-audit", "dichotomy", "schauder-check")


class ScenarioError(InputError):
    """Malformed or inconsistent scenario; the message names the field."""


@dataclass
class Scenario:
    raw: dict
    seed: int
    systems: dict
    potentials: dict = field(default_factory=dict)
    measures: dict = field(default_factory=dict)
    tasks: list = field(default_factory=list)
    source: str = "<scenario>"

    def system(self, name, where: str) -> Sft:
        if name is None:
            if len(self.systems) == 1:
                return next(iter(self.systems.values()))
            raise ScenarioError(f"{where}.system: required when the scenario defines several systems")
        if name not in self.systems:
            raise ScenarioError(f"{where}.system: unresolved system {name!r}")
        return self.systems[name]

    def potential(self, name, where: str) -> Potential:
        if name not in self.potentials:
            raise ScenarioError(f"{where}: unresolved potential {name!r}")
        return self.potentials[name]

    def measure(self, name, where: str) -> MarkovMeasure:
        if name not in self.measures:
            raise ScenarioError(f"{where}: unresolved measure {name!r}")
        return self.measures[name]


def load(path, overrides=(), seed: int | None = None) -> Scenario:
    """Parse, apply ``key=value`` overrides and resolve a scenario file."""
    path = Path(path)
    text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: top level must be an object")
    for item in overrides:
        apply_override(raw, item)
    if seed is not None:
        raw["seed"] = int(seed)
    return build(raw, source=str(path))


def apply_override(raw: dict, item: str):
    """Set a dotted path, e.g. ``tasks.0.delta=0.05``; values parse as JSON
    when possible and stay strings otherwise."""
    if "=" not in item:
        raise ScenarioError(f"override {item!r}: expected key=value")
    key, value = item.split("=", 1)
    try:
        val = json.loads(value)
    except json.JSONDecodeError:
        val = value
    parts = key.split(".")
    node = raw
    for i, p in enumerate(parts[:-1]):
        node = _child(node, p, ".".join(parts[: i + 1]))
    last = parts[-1]
    if isinstance(node, list):
        node[_index(node, last, key)] = val
    elif isinstance(node, dict):
        node[last] = val
    else:
        raise ScenarioError(f"override {key}: cannot set a field of a scalar")


def _index(node, p, where):
    try:
        i = int(p)
        node[i]
        return i
    except (ValueError, IndexError):
        raise ScenarioError(f"override {where}: no list entry {p!r}") from None


def _child(node, p, where):
    if isinstance(node, list):
        return node[_index(node, p, where)]
    if isinstance(node, dict):
        if p not in node:
            node[p] = {}
        return node[p]
    raise ScenarioError(f"override {where}: cannot descend into a scalar")


def build(raw: dict, source: str = "<scenario>") -> Scenario:
    raw = copy.deepcopy(raw)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ScenarioError("seed: must be a nonnegative integer")
    systems_raw = dict(raw.get("systems", {}))
    if "system" in raw:
        systems_raw.setdefault("default", raw["system"])
    if not systems_raw:
        raise ScenarioError("systems: at least one system is required")
    systems = {}
    for name, spec in systems_raw.items():
        systems[name] = _build_system(spec, f"systems.{name}", systems_raw, systems)
    sc = Scenario(raw, seed, systems, source=source)
    for name, spec in raw.get("potentials", {}).items():
        sc.potentials[name] = _build_potential(sc, spec, f"potentials.{name}")
    for name, spec in raw.get("measures", {}).items():
        sc.measures[name] = _build_measure(sc, spec, f"measures.{name}")
    tasks = raw.get("tasks", [])
    if not isinstance(tasks, list) or not tasks:
        raise ScenarioError("tasks: must be a non-empty list")
    names = set()
    for i, t in enumerate(tasks):
        where = f"tasks[{i}]"
        if not isinstance(t, dict) or t.get("type") not in TASK_TYPES:
            raise ScenarioError(f"{where}.type: must be one of {', '.join(TASK_TYPES)}")
        t.setdefault("name", t["type"] if t["type"] not in names else f"{t['type']}_{i}")
        if t["name"] in names:
            raise ScenarioError(f"{where}.name: duplicate task name {t['name']!r}")
        names.add(t["name"])
        _check_numbers(t, where)
        sc.tasks.append(t)
    return sc


def _check_numbers(t: dict, where: str):
    for key, val in t.items():
        if key.endswith("tol") or key == "delta":
            if not isinstance(val, (int, float)) or not val > 0:
                raise ScenarioError(f"{where}.{key}: must be a positive number")
        if key in ("grid", "x_grid", "n_schedule", "probes", "samples") and isinstance(val, list) and not val:
            raise ScenarioError(f"{where}.{key}: grid is empty")


def _build_system(spec, where, raw_all, built) -> Sft:
    if isinstance(spec, str):
        if spec not in raw_all:
            raise ScenarioError(f"{where}: unresolved system {spec!r}")
        if spec not in built:
            built[spec] = _build_system(raw_all[spec], f"systems.{spec}", raw_all, built)
        return built[spec]
    if not isinstance(spec, dict):
        raise ScenarioError(f"{where}: must be an object")
    try:
        if "full_shift" in spec:
            return Sft.full_shift(int(spec["full_shift"]))
        if spec.get("golden_mean"):
            return Sft.golden_mean()
        if "transitions" in spec:
            return Sft(spec["transitions"], spec.get("symbols"))
        if "union" in spec:
            parts = [_build_system(p, f"{where}.union[{i}]", raw_all, built) for i, p in enumerate(spec["union"])]
            return Sft.disjoint_union(*parts)
    except ScenarioError:
        raise
    except (InputError, ValueError, TypeError) as e:
        raise ScenarioError(f"{where}: {e}") from None
    raise ScenarioError(f"{where}: expected one of full_shift, golden_mean, transitions, union")


def _build_potential(sc: Scenario, spec, where) -> Potential:
    if not isinstance(spec, dict):
        raise ScenarioError(f"{where}: must be an object")
    sft = sc.system(spec.get("system"), where)
    try:
        if "constant" in spec:
            p = Potential.constant(sft, float(spec["constant"]))
        elif "indicator" in spec:
            p = Potential.indicator(sft, spec["indicator"])
        elif "cylinder" in spec:
            p = Potential.cylinder(sft, spec["cylinder"])
        elif "values" in spec:
            depth = int(spec.get("depth", 1))
            vals = spec["values"]
            if isinstance(vals, dict):
                p = Potential.from_table(sft, depth, vals, spec.get("default"))
            else:
                p = Potential(sft, depth, vals)
        elif "sum" in spec:
            names = spec["sum"]
            coef = spec.get("coefficients", [1.0] * len(names))
            if len(coef) != len(names):
                raise ScenarioError(f"{where}.coefficients: length differs from sum")
            p = Potential.constant(sft, 0.0)
            for i, (n, c) in enumerate(zip(names, coef)):
                p = p + float(c) * sc.potential(n, f"{where}.sum[{i}]")
        else:
            raise ScenarioError(f"{where}: expected constant, indicator, cylinder, values or sum")
    except ScenarioError:
        raise
    except (InputError, ValueError, TypeError) as e:
        raise ScenarioError(f"{where}: {e}") from None
    return float(spec.get("scale", 1.0)) * p


def _build_measure(sc: Scenario, spec, where) -> MarkovMeasure:
    if not isinstance(spec, dict):
        raise ScenarioError(f"{where}: must be an object")
    sft = sc.system(spec.get("system"), where)
    try:
        if "bernoulli" in spec:
            return bernoulli(sft, spec["bernoulli"])
        if "point_mass" in spec:
            s = spec["point_mass"]
            return point_mass(sft, sft.parse_word(s)[0] if isinstance(s, str) else int(s))
        if "parry" in spec:
            comp = spec["parry"]
            return parry_measure(sft, int(spec.get("depth", 1)), component=None if comp is None else _component(sft, comp, where))
        if "equilibrium" in spec:
            from .pressure import pressure_spectral

            f = sc.potential(spec["equilibrium"], f"{where}.equilibrium")
            report = pressure_spectral(sft, f)
            return report.equilibrium_states[int(spec.get("index", 0))]
        if "mixture" in spec:
            ms = [sc.measure(n, f"{where}.mixture[{i}]") for i, n in enumerate(spec["mixture"])]
            w = spec.get("weights", [1.0 / len(ms)] * len(ms))
            return mixture(ms, w)
    except ScenarioError:
        raise
    except (InputError, ValueError, TypeError, IndexError) as e:
        raise ScenarioError(f"{where}: {e}") from None
    raise ScenarioError(f"{where}: expected bernoulli, point_mass, parry, equilibrium or mixture")


def _component(sft: Sft, comp, where) -> int:
    """Components are named by any of their symbols."""
    sym = sft.parse_word(comp)[0] if isinstance(comp, str) else int(comp)
    if not 0 <= sym < sft.alphabet_size:
        raise ScenarioError(f"{where}: symbol {comp!r} outside the alphabet")
    c = int(sft.component_index[sym])
    if c not in sft.components:
        raise ScenarioError(f"{where}: symbol {comp!r} is not in a nontrivial component")
    return c


def bundled(name: str) -> Path:
    """Path of a scenario shipped with the package."""
    p = Path(__file__).parent / "scenarios" / (name if name.endswith(".json") else name + ".json")
    if not p.exists():
        raise ScenarioError(f"no bundled scenario {name!r}")
    return p


def as_points(grid, where: str) -> list[np.ndarray]:
    if not isinstance(grid, list) or not grid:
        raise ScenarioError(f"{where}: grid is empty")
    try:
        return [np.atleast_1d(np.asarray(x, dtype=float)) for x in grid]
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}: grid entries must be numbers or lists of numbers") from None
