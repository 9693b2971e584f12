"""Channel configuration documents (YAML, schema version 1).

A config declares a frequency grid and the ordered channel stages:

    version: 1
    grid: {start_hz: 10.0e6, stop_hz: 70.0e9, points: 7000, spacing: linear}
    segments:
      - {kind: LC, t_l_ps: 0.5}
      - {kind: SC, delta_tau_ps: 33.4, t_s_ps: 3.0}
      - {kind: SC, delta_tau_ps: 66.2, t_s_ps: 6.0,
         physical: {l_h_per_m: [[..],[..]], c_f_per_m: [[..],[..]],
                    length_m: 1.0, t_l_prepend_ps: 0.0}}

Time-valued keys accept either a picosecond form (t_l_ps) or a seconds form
(t_l_s), never both. The dumper emits the seconds form so that a dump/load
round trip reproduces every float bit-exactly (ps scaling would re-round).
Unknown keys anywhere are rejected (strict mode): silent typos in ps-scale
numbers are the main user hazard this format guards against.

Fit templates use the same shape with ``null`` marking unknown scalars plus a
``fit: {delta_tau_hint_ps: ...}`` section.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import yaml

from .core import FrequencyGrid, LcMatrices, PhysicalLine, SegmentSpec, make_grid, validate_segment
from .errors import ConfigError
from .ispg import IspgGraph, TemplateNode

__all__ = [
    "ChannelConfig",
    "load_config",
    "dump_config",
    "load_template",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ChannelConfig:
    grid: Optional[FrequencyGrid]
    graph: IspgGraph


def _require_mapping(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(obj).__name__}")
    return obj


def _reject_unknown(d: dict, allowed: set, where: str):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}; "
                          f"allowed: {sorted(allowed)}")


def _number(d: dict, key: str, where: str, required: bool = True,
            default: float = 0.0) -> float:
    if key not in d:
        if required:
            raise ConfigError(f"{where}: missing key {key!r}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: {key} must be a number, got {v!r}")
    return float(v)


def _time_value(d: dict, base: str, where: str, required: bool = False,
                allow_none: bool = False):
    """Read <base>_s or <base>_ps (exclusive). Returns seconds, None, or raises."""
    k_s, k_ps = f"{base}_s", f"{base}_ps"
    if k_s in d and k_ps in d:
        raise ConfigError(f"{where}: give {k_s} or {k_ps}, not both")
    key = k_s if k_s in d else (k_ps if k_ps in d else None)
    if key is None:
        if required:
            raise ConfigError(f"{where}: missing {k_s} or {k_ps}")
        return None
    v = d[key]
    if v is None:
        if allow_none:
            return None
        raise ConfigError(f"{where}: {key} must be a number, got null")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: {key} must be a number, got {v!r}")
    return float(v) if key == k_s else float(v) * 1e-12


def _matrix(d: dict, key: str, where: str):
    v = d.get(key)
    ok = (isinstance(v, list) and len(v) == 2
          and all(isinstance(r, list) and len(r) == 2
                  and all(isinstance(x, (int, float)) and not isinstance(x, bool)
                          for x in r) for r in v))
    if not ok:
        raise ConfigError(f"{where}: {key} must be a 2x2 matrix of numbers")
    return [[float(x) for x in row] for row in v]


_GRID_KEYS = {"start_hz", "stop_hz", "points", "spacing"}
_SEG_KEYS = {"kind", "t_l_s", "t_l_ps", "delta_tau_s", "delta_tau_ps",
             "t_s_s", "t_s_ps", "physical"}
_PHYS_KEYS = {"l_h_per_m", "c_f_per_m", "length_m", "t_l_prepend_s",
              "t_l_prepend_ps"}


def _parse_grid(d, where: str) -> FrequencyGrid:
    d = _require_mapping(d, where)
    _reject_unknown(d, _GRID_KEYS, where)
    start = _number(d, "start_hz", where)
    stop = _number(d, "stop_hz", where)
    points = d.get("points")
    if not isinstance(points, int) or isinstance(points, bool):
        raise ConfigError(f"{where}: points must be an integer")
    spacing = d.get("spacing", "linear")
    if spacing not in ("linear", "log"):
        raise ConfigError(f"{where}: spacing must be 'linear' or 'log'")
    return make_grid(start, stop, points, spacing)


def _parse_physical(d, where: str) -> PhysicalLine:
    d = _require_mapping(d, where)
    _reject_unknown(d, _PHYS_KEYS, where)
    lc = LcMatrices(_matrix(d, "l_h_per_m", where), _matrix(d, "c_f_per_m", where))
    length = _number(d, "length_m", where)
    prepend = _time_value(d, "t_l_prepend", where) or 0.0
    return PhysicalLine(lc=lc, length=length, t_l_prepend=prepend)


def _parse_segment(d, where: str, template: bool = False):
    d = _require_mapping(d, where)
    _reject_unknown(d, _SEG_KEYS, where)
    kind = d.get("kind")
    if kind not in ("LC", "SC"):
        raise ConfigError(f"{where}: kind must be 'LC' or 'SC', got {kind!r}")
    if kind == "LC":
        t_l = _time_value(d, "t_l", where, required=True, allow_none=template)
        for bad in ("delta_tau_s", "delta_tau_ps", "t_s_s", "t_s_ps", "physical"):
            if bad in d:
                raise ConfigError(f"{where}: {bad} is not valid on an LC segment")
        if template:
            return TemplateNode(kind="LC", t_l=t_l)
        return SegmentSpec.lc(t_l)
    delta_tau = _time_value(d, "delta_tau", where, required=True,
                            allow_none=template)
    t_s = _time_value(d, "t_s", where, required=not template,
                      allow_none=template)
    if template:
        if "physical" in d:
            raise ConfigError(f"{where}: physical segments cannot be fitted")
        return TemplateNode(kind="SC", delta_tau=delta_tau, t_s=t_s)
    physical = _parse_physical(d["physical"], f"{where}.physical") \
        if "physical" in d else None
    seg = SegmentSpec.sc(delta_tau=delta_tau, t_s=t_s or 0.0, physical=physical)
    return validate_segment(seg)


def load_config(text: str) -> ChannelConfig:
    """Parse and validate a channel config document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"not valid YAML: {e}") from None
    doc = _require_mapping(doc, "config")
    _reject_unknown(doc, {"version", "grid", "segments"}, "config")
    if doc.get("version") != SCHEMA_VERSION:
        raise ConfigError(f"config: version must be {SCHEMA_VERSION}, "
                          f"got {doc.get('version')!r}")
    segments = doc.get("segments")
    if not isinstance(segments, list) or not segments:
        raise ConfigError("config: segments must be a non-empty list")
    nodes = [_parse_segment(s, f"segments[{i}]") for i, s in enumerate(segments)]
    grid = _parse_grid(doc["grid"], "grid") if "grid" in doc else None
    return ChannelConfig(grid=grid, graph=IspgGraph(tuple(nodes)))


def dump_config(cfg: ChannelConfig) -> str:
    """Serialize a config; seconds-denominated keys for exact round trips."""
    doc: dict = {"version": SCHEMA_VERSION}
    if cfg.grid is not None:
        pts = cfg.grid.points
        spacing = "linear"
        # log grids have constant ratio, linear grids constant difference
        if len(pts) >= 3 and abs(pts[1] - pts[0] - (pts[2] - pts[1])) > 1e-6 * pts[1]:
            spacing = "log"
        doc["grid"] = {"start_hz": float(pts[0]), "stop_hz": float(pts[-1]),
                       "points": int(len(pts)), "spacing": spacing}
    segs = []
    for n in cfg.graph.nodes:
        if n.kind == "LC":
            segs.append({"kind": "LC", "t_l_s": n.t_l})
        else:
            d = {"kind": "SC", "delta_tau_s": n.delta_tau, "t_s_s": n.t_s}
            if n.physical is not None:
                d["physical"] = {
                    "l_h_per_m": n.physical.lc.L.tolist(),
                    "c_f_per_m": n.physical.lc.C.tolist(),
                    "length_m": n.physical.length,
                    "t_l_prepend_s": n.physical.t_l_prepend,
                }
            segs.append(d)
    doc["segments"] = segs
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def load_template(text: str):
    """Parse a fit-template config.

    Returns (template_nodes, delta_tau_hint_seconds, grid_or_none). Unknown
    scalars are written as null; the hint lives in a ``fit`` section, or
    defaults to the template's sole declared delta_tau.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"not valid YAML: {e}") from None
    doc = _require_mapping(doc, "template")
    _reject_unknown(doc, {"version", "grid", "segments", "fit"}, "template")
    if doc.get("version") != SCHEMA_VERSION:
        raise ConfigError(f"template: version must be {SCHEMA_VERSION}, "
                          f"got {doc.get('version')!r}")
    segments = doc.get("segments")
    if not isinstance(segments, list) or not segments:
        raise ConfigError("template: segments must be a non-empty list")
    nodes = [_parse_segment(s, f"segments[{i}]", template=True)
             for i, s in enumerate(segments)]
    hint = None
    if "fit" in doc:
        fit = _require_mapping(doc["fit"], "fit")
        _reject_unknown(fit, {"delta_tau_hint_s", "delta_tau_hint_ps"}, "fit")
        hint = _time_value(fit, "delta_tau_hint", "fit")
    if hint is None:
        declared = [n.delta_tau for n in nodes
                    if n.kind == "SC" and n.delta_tau is not None]
        if len(declared) == 1:
            hint = declared[0]
        else:
            raise ConfigError("template: provide fit.delta_tau_hint_s/_ps")
    grid = _parse_grid(doc["grid"], "grid") if "grid" in doc else None
    return nodes, hint, grid
