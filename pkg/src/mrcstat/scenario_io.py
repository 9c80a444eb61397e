"""JSON scenario files: parsing with path-specific errors and round-tripping.

Angles are degrees in files and radians internally.  Example::

    {
      "wavelength_m": 1.0,
      "array": {"type": "ula", "count": 32, "spacing_m": 0.5,
                "pattern": {"type": "isotropic"}},
      "taps": [{"S": 1.0, "K": 4,
                "deterministic": {"azimuth_deg": 70},
                "diffuse": {"type": "von_mises", "center_deg": 70, "kappa": 5}}],
      "seed": 0
    }
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import MrcStatError, ScenarioError
from .geometry import (
    AntennaElement,
    ArrayLayout,
    Direction,
    ElementPattern,
    build_half_circle,
    build_ula,
)
from .spectra import DiffusePas, Scenario, TapProfile, scenario_violations

_TOP = {"wavelength_m", "array", "taps", "seed"}
_ARRAY = {
    "ula": {"type", "count", "spacing_m", "axis", "pattern", "local_areas"},
    "half_circle": {"type", "count", "radius_m", "pattern", "local_areas"},
    "explicit": {"type", "elements"},
}
_ELEMENT = {"position_m", "pattern", "local_area"}
_PATTERN = {"type", "zeta", "boresight_deg", "efficiency"}
_TAP = {"S", "K", "deterministic", "diffuse"}
_DIRECTION = {"azimuth_deg", "polar_deg"}
_DIFFUSE = {
    "omni": {"type"},
    "sector": {"type", "center_deg", "opening_deg"},
    "von_mises": {"type", "center_deg", "kappa"},
}


class _Collector:
    def __init__(self):
        self.violations: list[tuple[str, str]] = []

    def add(self, path: str, message: str):
        self.violations.append((path, message))

    def keys(self, obj, allowed: set[str], path: str) -> bool:
        if not isinstance(obj, dict):
            self.add(path, "expected an object")
            return False
        for key in sorted(set(obj) - allowed):
            self.add(f"{path}.{key}", "unknown key")
        return True

    def number(self, obj: dict, key: str, path: str, default=None, positive=False, integer=False):
        if key not in obj:
            if default is None:
                self.add(f"{path}.{key}", "required")
            return default
        value = obj[key]
        ok = isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)
        if ok and integer and not (isinstance(value, int) or float(value).is_integer()):
            ok = False
        if not ok:
            self.add(f"{path}.{key}", "expected an integer" if integer else "expected a finite number")
            return default
        if positive and not value > 0:
            self.add(f"{path}.{key}", "must be positive")
            return default
        return int(value) if integer else float(value)


def _pattern(c: _Collector, obj, path: str, radial: bool = False) -> dict | None:
    if obj is None:
        obj = {"type": "isotropic"}
    if not c.keys(obj, _PATTERN, path):
        return None
    kind = obj.get("type", "isotropic")
    if kind not in ("isotropic", "cos_power"):
        c.add(f"{path}.type", f"unknown pattern type {kind!r}")
        return None
    out: dict[str, Any] = {"type": kind}
    eff = c.number(obj, "efficiency", path, default=1.0)
    if not 0 < eff <= 1:
        c.add(f"{path}.efficiency", "must lie in (0, 1]")
    out["efficiency"] = eff
    if kind == "cos_power":
        zeta = c.number(obj, "zeta", path)
        if zeta is not None and zeta < 0:
            c.add(f"{path}.zeta", "must be >= 0")
        out["zeta"] = zeta
        if radial:
            if "boresight_deg" in obj:
                c.add(f"{path}.boresight_deg", "half-circle elements point radially; boresight not allowed")
        else:
            out["boresight_deg"] = c.number(obj, "boresight_deg", path, default=0.0)
    else:
        for key in ("zeta", "boresight_deg"):
            if key in obj:
                c.add(f"{path}.{key}", "only valid for cos_power patterns")
    return out


def _local_areas(c: _Collector, value, count, path: str):
    if value in ("shared", "per_element"):
        return value
    if isinstance(value, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        if isinstance(count, int) and len(value) != count:
            c.add(path, f"expected {count} local-area ids")
        return list(value)
    c.add(path, "expected 'shared', 'per_element' or a list of integers")
    return "shared"


def _array(c: _Collector, obj, path: str) -> dict | None:
    if not isinstance(obj, dict):
        c.add(path, "expected an object")
        return None
    kind = obj.get("type")
    if kind not in _ARRAY:
        c.add(f"{path}.type", f"expected one of {sorted(_ARRAY)}")
        return None
    c.keys(obj, _ARRAY[kind], path)
    out: dict[str, Any] = {"type": kind}
    if kind == "explicit":
        elements = obj.get("elements")
        if not isinstance(elements, list) or not elements:
            c.add(f"{path}.elements", "expected a non-empty list")
            return out
        out["elements"] = []
        for i, e in enumerate(elements):
            ep = f"{path}.elements[{i}]"
            if not c.keys(e, _ELEMENT, ep):
                continue
            pos = e.get("position_m")
            if not (isinstance(pos, list) and len(pos) in (2, 3)
                    and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pos)):
                c.add(f"{ep}.position_m", "expected 2 or 3 numbers")
                pos = [0.0, 0.0, 0.0]
            pos = [float(v) for v in pos] + [0.0] * (3 - len(pos))
            area = e.get("local_area", 0)
            if not isinstance(area, int) or isinstance(area, bool):
                c.add(f"{ep}.local_area", "expected an integer")
                area = 0
            out["elements"].append(
                {"position_m": pos, "pattern": _pattern(c, e.get("pattern"), f"{ep}.pattern"), "local_area": area}
            )
        return out
    count = c.number(obj, "count", path, integer=True)
    if count is not None and count < (2 if kind == "half_circle" else 1):
        c.add(f"{path}.count", "too few elements")
    out["count"] = count
    if kind == "ula":
        out["spacing_m"] = c.number(obj, "spacing_m", path, positive=True)
        axis = obj.get("axis", [1.0, 0.0, 0.0])
        if not (isinstance(axis, list) and len(axis) == 3
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in axis)
                and any(v != 0 for v in axis)):
            c.add(f"{path}.axis", "expected a nonzero 3-vector")
            axis = [1.0, 0.0, 0.0]
        out["axis"] = [float(v) for v in axis]
        out["pattern"] = _pattern(c, obj.get("pattern"), f"{path}.pattern")
    else:
        out["radius_m"] = c.number(obj, "radius_m", path, positive=True)
        pat = obj.get("pattern")
        if not isinstance(pat, dict) or pat.get("type") != "cos_power":
            c.add(f"{path}.pattern", "half-circle arrays need a cos_power pattern")
        else:
            out["pattern"] = _pattern(c, pat, f"{path}.pattern", radial=True)
    out["local_areas"] = _local_areas(c, obj.get("local_areas", "shared"), count, f"{path}.local_areas")
    return out


def _tap(c: _Collector, obj, path: str) -> dict | None:
    if not c.keys(obj, _TAP, path):
        return None
    out: dict[str, Any] = {"S": c.number(obj, "S", path, positive=True)}
    K = obj.get("K", 0.0)
    if K == "inf":
        out["K"] = "inf"
    elif isinstance(K, (int, float)) and not isinstance(K, bool) and math.isfinite(K) and K >= 0:
        out["K"] = float(K)
    else:
        c.add(f"{path}.K", "expected a number >= 0 or \"inf\"")
        out["K"] = 0.0
    det = obj.get("deterministic")
    if det is not None:
        dp = f"{path}.deterministic"
        if c.keys(det, _DIRECTION, dp):
            out["deterministic"] = {
                "azimuth_deg": c.number(det, "azimuth_deg", dp),
                "polar_deg": c.number(det, "polar_deg", dp, default=90.0),
            }
    elif out["K"] != 0.0:
        c.add(f"{path}.deterministic", "required when K > 0")
    dif = obj.get("diffuse")
    if dif is not None:
        fp = f"{path}.diffuse"
        kind = dif.get("type") if isinstance(dif, dict) else None
        if kind not in _DIFFUSE:
            c.add(f"{fp}.type", f"expected one of {sorted(_DIFFUSE)}")
        elif c.keys(dif, _DIFFUSE[kind], fp):
            d: dict[str, Any] = {"type": kind}
            if kind == "sector":
                d["center_deg"] = c.number(dif, "center_deg", fp)
                d["opening_deg"] = c.number(dif, "opening_deg", fp, positive=True)
            elif kind == "von_mises":
                d["center_deg"] = c.number(dif, "center_deg", fp)
                kappa = c.number(dif, "kappa", fp)
                if kappa is not None and kappa < 0:
                    c.add(f"{fp}.kappa", "must be >= 0")
                d["kappa"] = kappa
            out["diffuse"] = d
    elif out["K"] != "inf":
        out["diffuse"] = {"type": "omni"}
    return out


def normalize(doc: Any) -> dict:
    """Check a raw document and fill defaults; raises :class:`ScenarioError`."""
    c = _Collector()
    if not c.keys(doc, _TOP, "$"):
        raise ScenarioError(c.violations)
    out: dict[str, Any] = {"wavelength_m": c.number(doc, "wavelength_m", "$", positive=True)}
    out["array"] = _array(c, doc.get("array"), "$.array") if "array" in doc else c.add("$.array", "required")
    taps = doc.get("taps")
    if not isinstance(taps, list) or not taps:
        c.add("$.taps", "expected a non-empty list")
        taps = []
    out["taps"] = [_tap(c, t, f"$.taps[{i}]") for i, t in enumerate(taps)]
    seed = doc.get("seed", 0)
    if not (isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed < 2**64):
        c.add("$.seed", "expected an integer in [0, 2**64)")
        seed = 0
    out["seed"] = seed
    if c.violations:
        raise ScenarioError(c.violations)
    return out


def _build_pattern(p: dict) -> ElementPattern:
    if p["type"] == "isotropic":
        return ElementPattern.isotropic(p["efficiency"])
    return ElementPattern.cos_power(p["zeta"], math.radians(p["boresight_deg"]), p["efficiency"])


def _build_layout(a: dict) -> ArrayLayout:
    if a["type"] == "ula":
        return build_ula(a["count"], a["spacing_m"], a["axis"], _build_pattern(a["pattern"]), a["local_areas"])
    if a["type"] == "half_circle":
        p = a["pattern"]
        return build_half_circle(a["count"], a["radius_m"], p["zeta"], p["efficiency"], a["local_areas"])
    return ArrayLayout(tuple(
        AntennaElement(tuple(e["position_m"]), _build_pattern(e["pattern"]), e["local_area"])
        for e in a["elements"]
    ))


def _build_tap(t: dict) -> TapProfile:
    K = math.inf if t["K"] == "inf" else t["K"]
    det = t.get("deterministic")
    direction = None if det is None else Direction.from_degrees(det["azimuth_deg"], det["polar_deg"])
    dif = t.get("diffuse")
    pas = None
    if dif is not None:
        if dif["type"] == "omni":
            pas = DiffusePas.omni()
        elif dif["type"] == "sector":
            pas = DiffusePas.sector(math.radians(dif["center_deg"]), math.radians(dif["opening_deg"]))
        else:
            pas = DiffusePas.von_mises(math.radians(dif["center_deg"]), dif["kappa"])
    return TapProfile(t["S"], K, direction, pas)


def build(doc: dict) -> Scenario:
    """Scenario from a normalized document; model-level checks included."""
    try:
        s = Scenario(doc["wavelength_m"], _build_layout(doc["array"]),
                     tuple(_build_tap(t) for t in doc["taps"]), doc["seed"])
    except ScenarioError:
        raise
    except MrcStatError as exc:
        raise ScenarioError([("$", str(exc))]) from exc
    violations = scenario_violations(s)
    if violations:
        raise ScenarioError([(f"$.{p}", m) for p, m in violations])
    return s


@dataclass(frozen=True)
class ScenarioFile:
    document: dict
    scenario: Scenario

    def to_json(self) -> str:
        return dumps(self.document)


def parse(doc: Any) -> ScenarioFile:
    norm = normalize(doc)
    return ScenarioFile(norm, build(norm))


def loads(text: str) -> ScenarioFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([(f"$ (line {exc.lineno}, column {exc.colno})", f"malformed JSON: {exc.msg}")]) from exc
    return parse(doc)


def load(path: str | Path) -> ScenarioFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError([(str(path), f"cannot read file: {exc.strerror}")]) from exc
    return loads(text)


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def to_document(s: Scenario) -> dict:
    """Explicit-array document describing ``s`` (same digest after parsing)."""

    def pattern(p: ElementPattern) -> dict:
        if p.kind == "isotropic":
            return {"type": "isotropic", "efficiency": p.efficiency}
        return {"type": "cos_power", "zeta": p.zeta, "boresight_deg": math.degrees(p.boresight),
                "efficiency": p.efficiency}

    taps = []
    for t in s.taps:
        entry: dict[str, Any] = {"S": t.S, "K": "inf" if math.isinf(t.K) else t.K}
        if t.deterministic is not None:
            entry["deterministic"] = {"azimuth_deg": math.degrees(t.deterministic.azimuth),
                                      "polar_deg": math.degrees(t.deterministic.polar)}
        if t.diffuse is not None and not math.isinf(t.K):
            entry["diffuse"] = t.diffuse.to_degrees_dict()
        taps.append(entry)
    return {
        "wavelength_m": s.wavelength,
        "array": {"type": "explicit", "elements": [
            {"position_m": list(e.position), "pattern": pattern(e.pattern), "local_area": e.local_area}
            for e in s.layout.elements
        ]},
        "taps": taps,
        "seed": s.seed,
    }


def bundled_names() -> list[str]:
    root = resources.files("mrcstat") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_path(name: str) -> Path:
    """Path of a bundled scenario by stem (``"verify_ula32_omni"``)."""
    path = Path(str(resources.files("mrcstat") / "scenarios" / f"{name.removesuffix('.json')}.json"))
    if not path.exists():
        raise ScenarioError([(name, "no bundled scenario with this name")])
    return path


def load_bundled(name: str) -> ScenarioFile:
    return load(bundled_path(name))


def replace(doc: dict, **changes) -> dict:
    """Deep copy of a document with top-level keys replaced."""
    out = copy.deepcopy(doc)
    out.update(changes)
    return out
