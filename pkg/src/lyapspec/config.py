"""Experiment configuration: JSON with a ``version`` field, strict keys and defaults.

Every section is optional; a command reads its own section and falls back to
the defaults in ``SCHEMA``. Values:

* complex numbers are a number or ``[re, im]``;
* grids are a sorted list or ``{"start": a, "stop": b, "num": n}``;
* the map is ``{"quadratic": c}``, ``{"num": [...], "den": [...]}`` with
  ascending ``[re, im]`` coefficients, or ``{"file": path}`` pointing to either.

See ``docs/config.md`` for the full key reference.
"""
from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import ConfigError, InvalidMapError
from .maps import RationalMap

CONFIG_VERSION = 1
MAX_TREE_LEAVES = 2**22
MAX_PERIOD = 16

# value kinds: "int", "float", "bool", "complex", "complex?", "grid", "grid?", "str:<a|b>",
# "float?", "int_list", "float_list", "complex_list", or a nested dict / list-of-dict marker
SCHEMA: dict[str, Any] = {
    "pressure": {
        "d_grid": ("grid", {"start": -2.0, "stop": 3.0, "num": 51}),
        "method": ("str:auto|tree|periodic", "auto"),
        "depth": ("int", 10),
        "extrapolate": ("bool", False),
        "base": ("complex?", None),
    },
    "spectrum": {
        "d_grid": ("grid", {"start": -4.0, "stop": 4.0, "num": 81}),
        "alpha_grid": ("grid?", None),
        "alpha_points": ("int", 201),
        "method": ("str:auto|tree|periodic", "auto"),
        "depth": ("int", 10),
        "extrapolate": ("bool", False),
        "base": ("complex?", None),
        "duality_tol": ("float", 1e-4),
    },
    "orbit": {
        "x": ("complex?", None),
        "n": ("int", 200),
        "mode": ("str:forward|backward", "forward"),
        "count": ("int", 1),
        "sigma": ("float?", None),
        "census": ("section?", {"y": ("complex", 0j), "n": ("int", 10), "R": ("float", 0.1)}),
        "conical": ("section?", {"r": ("float", 0.1), "n_max": ("int", 10), "K_cap": ("float", 4.0)}),
    },
    "gds": {
        "systems": ("systems", []),
        "bridge": ("bool", False),
        "search_depth": ("int", 12),
        "refine": ("int_list", []),
        "d_grid": ("grid", {"start": 0.0, "stop": 1.0, "num": 11}),
        "convergence": ("bool", False),
        "reference_depth": ("int", 14),
    },
    "conformal": {
        "d": ("float", 1.0),
        "P": ("float?", None),
        "x": ("complex?", None),
        "n": ("int", 8),
        "test_arcs": ("int", 0),
        "test_disks": ("disks", []),
        "pointwise": ("section?", {"q": ("float", 1.0), "delta": ("float", 0.3),
                                   "n_list": ("int_list", [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]),
                                   "extra_depth": ("int", 8)}),
    },
    "wmeasure": {
        "loops": ("loops", []),
        "depth": ("int", 6),
        "eps_seed": ("float", 0.1),
        "C": ("float", 10.0),
        "search_depth": ("int", 12),
        "truncate": ("int_list?", None),
    },
    "selftest": {
        "quick": ("bool", True),
    },
}
TOP_LEVEL = {"version", "map", "seed", "precision", "name"} | set(SCHEMA)


def _line_of(text: Optional[str], key: str) -> str:
    if not text:
        return ""
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return f" (line {text.count(chr(10), 0, m.start()) + 1})" if m else ""


class _Checker:
    def __init__(self, text: Optional[str]):
        self.text = text

    def fail(self, path: str, msg: str):
        key = path.rsplit(".", 1)[-1].split("[", 1)[0]
        raise ConfigError(f"config key '{path}'{_line_of(self.text, key)}: {msg}")

    def number(self, path, v, integer=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path, f"expected a number, got {v!r}")
        if integer and not (isinstance(v, int) or float(v).is_integer()):
            self.fail(path, f"expected an integer, got {v!r}")
        return int(v) if integer else float(v)

    def complex_(self, path, v):
        if isinstance(v, (list, tuple)) and len(v) == 2:
            return complex(self.number(path, v[0]), self.number(path, v[1]))
        return complex(self.number(path, v))

    def grid(self, path, v):
        if isinstance(v, dict):
            extra = set(v) - {"start", "stop", "num"}
            if extra or len(v) != 3:
                self.fail(path, "grid object needs exactly start, stop, num")
            num = self.number(path + ".num", v["num"], integer=True)
            if num < 1:
                self.fail(path + ".num", "must be positive")
            g = np.linspace(self.number(path, v["start"]), self.number(path, v["stop"]), num)
        elif isinstance(v, list):
            g = np.array([self.number(path, x) for x in v], dtype=float)
        else:
            self.fail(path, "expected a list or {start, stop, num}")
        if g.size > 1 and np.any(np.diff(g) <= 0):
            self.fail(path, "grid must be strictly increasing")
        return g

    def value(self, path, kind, v, sub=None):
        opt = kind.endswith("?")
        base = kind.rstrip("?")
        if v is None:
            if opt:
                return None
            self.fail(path, "value required")
        if base == "int":
            return self.number(path, v, integer=True)
        if base == "float":
            return self.number(path, v)
        if base == "bool":
            if not isinstance(v, bool):
                self.fail(path, f"expected true/false, got {v!r}")
            return v
        if base == "complex":
            return self.complex_(path, v)
        if base == "grid":
            return self.grid(path, v)
        if base.startswith("str:"):
            allowed = base[4:].split("|")
            if v not in allowed:
                self.fail(path, f"expected one of {allowed}, got {v!r}")
            return v
        if base == "int_list":
            if not isinstance(v, list):
                self.fail(path, "expected a list")
            return [self.number(f"{path}[{i}]", x, integer=True) for i, x in enumerate(v)]
        if base == "section":
            if v is False:
                return None
            if not isinstance(v, dict):
                self.fail(path, "expected an object")
            return self.section(path, v, sub)
        if base == "disks":
            return [self.disk(f"{path}[{i}]", x) for i, x in enumerate(self.list_(path, v))]
        if base == "loops":
            return [self.section(f"{path}[{i}]", x, {"p": ("complex", 0j), "r": ("float", 0.1)})
                    for i, x in enumerate(self.list_(path, v))]
        if base == "systems":
            return [self.system(f"{path}[{i}]", x) for i, x in enumerate(self.list_(path, v))]
        raise AssertionError(kind)

    def list_(self, path, v):
        if not isinstance(v, list):
            self.fail(path, "expected a list")
        return v

    def disk(self, path, v):
        s = self.section(path, v, {"c": ("complex", 0j), "r": ("float", 0.1)}, required=("c", "r"))
        if s["r"] <= 0:
            self.fail(path + ".r", "radius must be positive")
        return s

    def system(self, path, v):
        if not isinstance(v, dict) or len(v) != 1:
            self.fail(path, "system must be one of {loop: ...}, {disks: ...}, {file: ...}")
        (kind, body), = v.items()
        if kind == "loop":
            return {"kind": "loop", **self.section(path + ".loop", body,
                                                   {"p": ("complex", 0j), "r": ("float", 0.1)},
                                                   required=("p",))}
        if kind == "disks":
            s = self.section(path + ".disks", body, {"disks": ("disks", []), "witnesses": ("complex_list", [])},
                             required=("disks", "witnesses"))
            return {"kind": "disks", **s}
        if kind == "file":
            if not isinstance(body, str):
                self.fail(path + ".file", "expected a path")
            return {"kind": "file", "file": body}
        self.fail(path, f"unknown system kind {kind!r}")

    def section(self, path, v, schema, required=()):
        if not isinstance(v, dict):
            self.fail(path, "expected an object")
        unknown = sorted(set(v) - set(schema))
        if unknown:
            self.fail(f"{path}.{unknown[0]}", "unknown key")
        for k in required:
            if k not in v:
                self.fail(f"{path}.{k}", "missing required key")
        out = {}
        for k, spec in schema.items():
            kind, default = spec
            if kind == "complex_list":
                raw = v.get(k, default)
                out[k] = [self.complex_(f"{path}.{k}[{i}]", x) for i, x in enumerate(self.list_(f"{path}.{k}", raw))]
                continue
            if kind.startswith("section"):
                if k in v:
                    out[k] = self.value(f"{path}.{k}", kind, v[k], default)
                else:
                    out[k] = None
                continue
            raw = v.get(k, copy.deepcopy(default))
            out[k] = self.value(f"{path}.{k}", kind, raw)
        return out


@dataclass
class ExperimentConfig:
    map: RationalMap
    seed: int = 0
    precision: str = "double"
    name: str = "experiment"
    sections: dict = field(default_factory=dict)
    source: Optional[Path] = None

    def section(self, name: str) -> dict:
        return self.sections[name]


def _load_map(chk: _Checker, v, base_dir: Optional[Path]) -> RationalMap:
    if not isinstance(v, dict):
        chk.fail("map", "expected an object")
    if "file" in v:
        if set(v) != {"file"}:
            chk.fail("map", "a map file reference takes no other keys")
        p = Path(v["file"])
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        try:
            data = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            chk.fail("map.file", f"cannot read map file: {exc}")
        return _load_map(chk, data, p.parent)
    if "quadratic" in v:
        if set(v) != {"quadratic"}:
            chk.fail("map", "quadratic takes no other keys")
        return RationalMap.quadratic(chk.complex_("map.quadratic", v["quadratic"]))
    unknown = sorted(set(v) - {"num", "den"})
    if unknown:
        chk.fail(f"map.{unknown[0]}", "unknown key")
    if "num" not in v:
        chk.fail("map.num", "missing required key")
    num = [chk.complex_(f"map.num[{i}]", c) for i, c in enumerate(chk.list_("map.num", v["num"]))]
    den = [chk.complex_(f"map.den[{i}]", c) for i, c in enumerate(chk.list_("map.den", v.get("den", [1.0])))]
    try:
        return RationalMap(tuple(num), tuple(den))
    except InvalidMapError as exc:
        raise ConfigError(f"config key 'map'{_line_of(chk.text, 'map')}: {exc}") from exc


def _check_bounds(chk: _Checker, cfg: ExperimentConfig):
    deg = cfg.map.degree
    for name in ("pressure", "spectrum"):
        s = cfg.sections[name]
        if s["depth"] < 2:
            chk.fail(f"{name}.depth", "must be at least 2")
        if s["method"] == "periodic" and s["depth"] > MAX_PERIOD:
            chk.fail(f"{name}.depth", f"periodic depth is limited to {MAX_PERIOD}")
        if s["method"] != "periodic" and deg ** s["depth"] > MAX_TREE_LEAVES:
            chk.fail(f"{name}.depth", f"tree with {deg}^{s['depth']} leaves exceeds {MAX_TREE_LEAVES}")
    c = cfg.sections["conformal"]
    if c["n"] < 0 or deg ** c["n"] > MAX_TREE_LEAVES:
        chk.fail("conformal.n", "depth out of range")
    o = cfg.sections["orbit"]
    if o["n"] < 1 or o["count"] < 1:
        chk.fail("orbit.n", "orbit length and count must be positive")
    w = cfg.sections["wmeasure"]
    if w["depth"] < 0 or not 0 < w["eps_seed"]:
        chk.fail("wmeasure.depth", "depth must be >= 0 and eps_seed > 0")


def parse_config(data, text: Optional[str] = None, base_dir: Optional[Path] = None) -> ExperimentConfig:
    chk = _Checker(text)
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - TOP_LEVEL)
    if unknown:
        chk.fail(unknown[0], "unknown key")
    if "version" not in data:
        chk.fail("version", "missing required key")
    if data["version"] != CONFIG_VERSION:
        chk.fail("version", f"unsupported version {data['version']!r} (expected {CONFIG_VERSION})")
    if "map" not in data:
        chk.fail("map", "missing required key")
    fmap = _load_map(chk, data["map"], base_dir)
    seed = chk.number("seed", data.get("seed", 0), integer=True)
    precision = chk.value("precision", "str:double|extended", data.get("precision", "double"))
    name = data.get("name", "experiment")
    if not isinstance(name, str):
        chk.fail("name", "expected a string")
    sections = {k: chk.section(k, data.get(k, {}), sub) for k, sub in SCHEMA.items()}
    cfg = ExperimentConfig(fmap, seed, precision, name, sections)
    _check_bounds(chk, cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: JSON error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    cfg = parse_config(data, text, path.parent)
    cfg.source = path
    return cfg


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package (``z2``, ``chebyshev``, ``cantor6``)."""
    p = Path(__file__).parent / "configs" / f"{name}.json"
    if not p.exists():
        raise ConfigError(f"no bundled config named {name!r}")
    return p
