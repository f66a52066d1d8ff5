"""JSON scenario and sweep files.

A scenario document has optional ``topology``, ``phy`` and ``access``
sections; any field left out takes its Table I default. Unknown keys are
rejected by the schema.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .errors import ConfigError, RelayLabError
from .scenario import DEST, RELAY, AccessConfig, PhyConfig, Scenario, Topology

TABLE_ONE = {
    "topology": {"n": 5, "user_relay": 60.0, "user_dest": 130.0, "relay_dest": 80.0},
    "phy": {"gamma_dest": 0.2, "gamma_relay": 0.2, "alpha": 4.0, "g": 1e-10,
            "user_power": 1e-3, "relay_power": 1e-2,
            "noise_dest": 1e-11, "noise_relay": 1e-11, "fading": []},
    "access": {"q": 0.1, "q0": 0.95, "p_rx": 1.0, "p_tx": 1.0},
}

_num = {"type": "number"}
_prob = {"type": "number", "minimum": 0, "maximum": 1}
_pos = {"type": "number", "exclusiveMinimum": 0}


def _scalar_or_list(item):
    return {"oneOf": [item, {"type": "array", "items": item, "minItems": 1}]}


SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "defaults": {"enum": ["table_one"]},
        "topology": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "user_relay": _scalar_or_list(_pos),
                "user_dest": _scalar_or_list(_pos),
                "relay_dest": _pos,
            },
        },
        "phy": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "gamma": {"type": "number", "minimum": 0},
                "gamma_dest": {"type": "number", "minimum": 0},
                "gamma_relay": {"type": "number", "minimum": 0},
                "alpha": {"type": "number", "minimum": 2, "maximum": 7},
                "g": _prob,
                "user_power": _scalar_or_list(_pos),
                "relay_power": _pos,
                "noise_dest": _pos,
                "noise_relay": _pos,
                "fading": {
                    "type": "array",
                    "items": {
                        "type": "object", "additionalProperties": False,
                        "required": ["tx", "rx", "v"],
                        "properties": {"tx": {"type": "integer", "minimum": 0},
                                       "rx": {"enum": ["relay", "dest"]},
                                       "v": _pos},
                    },
                },
            },
        },
        "access": {
            "type": "object", "additionalProperties": False,
            "properties": {"q": _scalar_or_list(_prob), "q0": _prob,
                           "p_rx": _prob, "p_tx": _prob},
        },
    },
}

SWEEP_VARIABLES = ("n", "gamma", "g", "q0", "q", "p_rx", "p_tx")

SWEEP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["variable", "values"],
    "properties": {
        "scenario": SCENARIO_SCHEMA,
        "variable": {"enum": list(SWEEP_VARIABLES)},
        "values": {"type": "array", "items": _num, "minItems": 1},
        "optimize": {"type": "boolean"},
        "grid": {"type": "integer", "minimum": 11},
        "refine": {"type": "boolean"},
    },
}


def _validate(doc, schema):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def _merged(doc: dict) -> dict:
    out = {}
    for sec, defaults in TABLE_ONE.items():
        merged = dict(defaults)
        given = doc.get(sec, {})
        if sec == "phy" and "gamma" in given:
            if "gamma_dest" in given or "gamma_relay" in given:
                raise ConfigError("give either phy.gamma or phy.gamma_dest/gamma_relay")
            merged["gamma_dest"] = merged["gamma_relay"] = given["gamma"]
            given = {k: v for k, v in given.items() if k != "gamma"}
        merged.update(given)
        out[sec] = merged
    return out


def scenario_from_dict(doc: dict) -> Scenario:
    _validate(doc, SCENARIO_SCHEMA)
    m = _merged(doc)
    t, p, a = m["topology"], m["phy"], m["access"]
    n = t["n"]
    try:
        topo = Topology.build(n, t["user_relay"], t["user_dest"], t["relay_dest"])
        fading = {}
        for f in p["fading"]:
            if not 1 <= f["tx"] <= n and not (f["tx"] == RELAY and f["rx"] == "dest"):
                raise ConfigError(f"fading entry names unknown link {f['tx']}->{f['rx']}")
            fading[(f["tx"], RELAY if f["rx"] == "relay" else DEST)] = f["v"]
        phy = PhyConfig(gamma_dest=p["gamma_dest"], gamma_relay=p["gamma_relay"],
                        alpha=p["alpha"], g=p["g"], user_power=p["user_power"],
                        relay_power=p["relay_power"], noise_dest=p["noise_dest"],
                        noise_relay=p["noise_relay"], fading=fading)
        q = a["q"] if isinstance(a["q"], list) else [a["q"]] * n
        access = AccessConfig(tuple(q), q0=a["q0"], p_rx=a["p_rx"], p_tx=a["p_tx"])
        return Scenario(topo, phy, access)
    except ConfigError:
        raise
    except (RelayLabError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path) -> Scenario:
    return scenario_from_dict(_load_json(path))


def _compact(values):
    vals = list(values)
    return vals[0] if len(set(vals)) == 1 else vals


def scenario_to_dict(scenario: Scenario) -> dict:
    """Fully explicit document; ``scenario_from_dict`` inverts it exactly."""
    t, p, a = scenario.topology, scenario.phy, scenario.access
    fading = [{"tx": i, "rx": "relay" if j == RELAY else "dest", "v": v}
              for (i, j), v in sorted(p.fading.items())]
    up = p.user_power if isinstance(p.user_power, (int, float)) else _compact(p.user_power)
    return {
        "topology": {"n": t.n, "user_relay": _compact(t.user_relay()),
                     "user_dest": _compact(t.user_dest()),
                     "relay_dest": t.distance(RELAY, DEST)},
        "phy": {"gamma_dest": p.gamma_dest, "gamma_relay": p.gamma_relay, "alpha": p.alpha,
                "g": p.g, "user_power": up, "relay_power": p.relay_power,
                "noise_dest": p.noise_dest, "noise_relay": p.noise_relay, "fading": fading},
        "access": {"q": _compact(a.q), "q0": a.q0, "p_rx": a.p_rx, "p_tx": a.p_tx},
    }


@dataclass(frozen=True)
class SweepSpec:
    base: dict
    variable: str
    values: tuple[float, ...]
    optimize: bool = False
    grid: int = 41
    refine: bool = True
    scenarios: tuple[Scenario, ...] = field(default=(), repr=False)


def apply_override(base: dict, variable: str, value) -> dict:
    doc = json.loads(json.dumps(base))
    if variable == "n":
        if value != int(value):
            raise ConfigError(f"n must be an integer, got {value}")
        doc.setdefault("topology", {})["n"] = int(value)
    elif variable == "gamma":
        phy = doc.setdefault("phy", {})
        for k in ("gamma_dest", "gamma_relay"):
            phy.pop(k, None)
        phy["gamma"] = value
    elif variable == "g":
        doc.setdefault("phy", {})["g"] = value
    else:
        doc.setdefault("access", {})[variable] = value
    return doc


def sweep_from_dict(doc: dict) -> SweepSpec:
    _validate(doc, SWEEP_SCHEMA)
    base = doc.get("scenario", {})
    values = tuple(doc["values"])
    scenarios = tuple(scenario_from_dict(apply_override(base, doc["variable"], v))
                      for v in values)
    return SweepSpec(base, doc["variable"], values, doc.get("optimize", False),
                     doc.get("grid", 41), doc.get("refine", True), scenarios)


def load_sweep(path) -> SweepSpec:
    return sweep_from_dict(_load_json(path))
