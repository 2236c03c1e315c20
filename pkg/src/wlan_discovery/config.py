"""YAML configuration: loading, dotted overrides, schema checks and conversion to :class:`SimConfig`.

The packaged ``default.yaml`` doubles as the schema: a user file may only
use keys that appear there, and values must have the same kind (number,
string, flag, list or mapping). A handful of keys default to ``null`` and
accept the kinds listed in ``OPTIONAL``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

import yaml

from .deployment import BaseStation, Region, base_station_grid, grid_graph_spec
from .errors import ConfigError, ParameterError
from .mobility import DEFAULT_CALIBRATION, CalibrationParams
from .radio import PathLossModel
from .schemes import SchemeConfig, normalize_scheme
from .sim import SimConfig

CONFIG_DIR_ENV = "WLAN_DISCOVERY_CONFIG_DIR"

OPTIONAL = {
    "deployment.densities": dict,
    "mobility_graph.nodes": (dict, list),
    "mobility_graph.edges": list,
    "mobility_graph.hotspots": list,
    "mobility_estimation.phi0_db": float,
    "mobility_estimation.sigma0_db": float,
    "mobility_estimation.calibration_file": str,
}


class ConfigFileNotFound(ConfigError):
    pass


class SchemaError(ConfigError):
    pass


def default_config_text() -> str:
    return resources.files("wlan_discovery").joinpath("data/default.yaml").read_text()


def default_config() -> dict:
    return yaml.safe_load(default_config_text())


def resolve_config_path(name: str | os.PathLike) -> Path | None:
    """Map ``--config`` to a file; ``None`` means the packaged default.

    A path that exists is used as is. Otherwise the name (with or without a
    ``.yaml`` suffix) is looked up in ``$WLAN_DISCOVERY_CONFIG_DIR``; the
    name ``default`` falls back to the packaged file.
    """
    p = Path(name)
    if p.is_file():
        return p
    base = os.environ.get(CONFIG_DIR_ENV)
    if base:
        for cand in (Path(base) / p, Path(base) / f"{p}.yaml"):
            if cand.is_file():
                return cand
    if str(name) == "default":
        return None
    raise ConfigFileNotFound(f"config file not found: {name}")


def _kind_ok(value, expected) -> bool:
    if isinstance(expected, tuple):
        return any(_kind_ok(value, e) for e in expected)
    if expected is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if expected is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, expected)


def _expected_kind(default) -> type:
    if isinstance(default, bool):
        return bool
    if isinstance(default, (int, float)):
        return float
    return type(default)


def _coerce(value, expected):
    # YAML 1.1 reads "1e-4" as a string; accept it where a number is due.
    if expected is float and isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    if expected is float and isinstance(value, list):
        return [_coerce(v, float) for v in value]
    return value


def check_schema(cfg: Mapping, schema: Mapping | None = None, prefix: str = "") -> dict:
    """Return a copy of ``cfg`` with numeric strings coerced; raise on unknown keys or wrong kinds."""
    schema = default_config() if schema is None else schema
    if not isinstance(cfg, Mapping):
        raise SchemaError(f"{prefix or 'config'}: expected a mapping, got {type(cfg).__name__}")
    out = {}
    for key, value in cfg.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise SchemaError(f"{path}: unknown key")
        ref = schema[key]
        if value is None:
            if ref is not None and path not in OPTIONAL:
                raise SchemaError(f"{path}: value is required")
            out[key] = None
            continue
        if ref is None:
            expected = OPTIONAL[path]
            value = _coerce(value, expected)
            if not _kind_ok(value, expected):
                raise SchemaError(f"{path}: wrong type {type(value).__name__}")
            out[key] = value
            continue
        if isinstance(ref, Mapping):
            out[key] = check_schema(value, ref, path + ".")
            continue
        expected = _expected_kind(ref)
        if isinstance(ref, list) and ref and isinstance(ref[0], (int, float)) and not isinstance(ref[0], bool):
            value = _coerce(value, float)
            if not isinstance(value, list) or not all(_kind_ok(v, float) for v in value):
                raise SchemaError(f"{path}: expected a list of numbers")
        else:
            value = _coerce(value, expected)
            if not _kind_ok(value, expected):
                raise SchemaError(f"{path}: expected {expected.__name__}, got {type(value).__name__}")
        out[key] = value
    return out


def deep_merge(base: Mapping, top: Mapping) -> dict:
    out = copy.deepcopy(dict(base))
    for k, v in top.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_override(item: str) -> tuple[list[str], Any]:
    if "=" not in item:
        raise SchemaError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise SchemaError(f"override {item!r} has an empty key")
    return key.split("."), yaml.safe_load(raw) if raw.strip() else None


def apply_overrides(cfg: Mapping, overrides: Sequence[str]) -> dict:
    out = copy.deepcopy(dict(cfg))
    for item in overrides:
        keys, value = parse_override(item)
        node = out
        for k in keys[:-1]:
            nxt = node.get(k)
            if not isinstance(nxt, dict):
                raise SchemaError(f"{'.'.join(keys)}: unknown key")
            node = nxt
        if keys[-1] not in node:
            raise SchemaError(f"{'.'.join(keys)}: unknown key")
        node[keys[-1]] = value
    return out


def load_config(path=None, overrides: Sequence[str] = ()) -> dict:
    """Packaged defaults, then the file at ``path``, then dotted overrides; schema-checked."""
    base = default_config()
    merged = base
    if path is not None:
        with open(path) as fh:
            try:
                user = yaml.safe_load(fh) or {}
            except yaml.YAMLError as exc:
                raise SchemaError(f"{path}: not valid YAML ({exc.__class__.__name__})") from None
        merged = deep_merge(base, check_schema(user, base))
    merged = apply_overrides(merged, overrides)
    return check_schema(merged, base)


def config_hash(cfg: Mapping) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _path_loss(d: Mapping, fading: bool, diversity: int) -> PathLossModel:
    return PathLossModel(reference_loss=d["reference_loss_db"], exponent=d["exponent"],
                         shadowing_sigma=d["shadowing_sigma_db"], shadowing_decorrelation=d["decorrelation_m"],
                         fading=fading, fading_diversity=diversity)


def _calibration(m: Mapping) -> CalibrationParams:
    if m.get("calibration_file"):
        try:
            return CalibrationParams.load(m["calibration_file"])
        except OSError as exc:
            raise ConfigError(f"mobility_estimation.calibration_file: {exc.strerror}: {m['calibration_file']}")
    if m.get("phi0_db") is not None or m.get("sigma0_db") is not None:
        return CalibrationParams(m.get("phi0_db") or DEFAULT_CALIBRATION.phi0,
                                 m.get("sigma0_db") or DEFAULT_CALIBRATION.sigma0)
    return DEFAULT_CALIBRATION


def build_sim_config(cfg: Mapping) -> SimConfig:
    """Turn a schema-checked mapping into a validated :class:`SimConfig` (raises :class:`ConfigError`)."""
    try:
        return _build(cfg)
    except ConfigError:
        raise
    except (ParameterError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from None


def _build(cfg: Mapping) -> SimConfig:
    reg = cfg["region"]
    region = Region(reg["width_m"], reg["height_m"], reg["periodic"])
    channels = tuple(int(c) for c in cfg["channels"])
    if len(set(channels)) != len(channels):
        raise ConfigError("channels: duplicate channel numbers")
    th = cfg["thresholds"]
    scheme = SchemeConfig(normalize_scheme(cfg["scheme"]), th["d_r"], th["s_high"], th["d1"], th["d2"],
                          th["s_enter"], th["t_s"], channels, th["strict_distance"])
    dep = cfg["deployment"]
    if dep["densities"] is not None:
        dens = {int(k): float(v) for k, v in dep["densities"].items()}
        unknown = sorted(set(dens) - set(channels))
        if unknown:
            raise ConfigError(f"deployment.densities: channels {unknown} are not supported channels")
        if any(v < 0 for v in dens.values()):
            raise ConfigError("deployment.densities: densities must be non-negative")
    else:
        if dep["total_density"] < 0:
            raise ConfigError("deployment.total_density must be non-negative")
        dens = {f: dep["total_density"] / len(channels) for f in channels}
    mg = cfg["mobility_graph"]
    if mg["nodes"] is not None:
        graph_spec = {"nodes": mg["nodes"], "edges": mg["edges"] or [], "hotspots": mg["hotspots"] or []}
    else:
        graph_spec = grid_graph_spec(region, mg["grid_cols"], mg["grid_rows"], mg["hotspot_fraction"],
                                     mg["hotspot_seed"])
    bs = cfg["base_stations"]
    if not bs["spacing_m"] > 0:
        raise ConfigError("base_stations.spacing_m must be positive")
    stations = tuple(base_station_grid(region, bs["spacing_m"], bs["tx_power_dbm"]))
    fad = cfg["fading"]
    pl = cfg["path_loss"]
    div = int(fad["diversity"])
    me = cfg["mobility_estimation"]
    if not me["sample_period_s"] > 0:
        raise ConfigError("mobility_estimation.sample_period_s must be positive")
    if not me["v_ref_mps"] > 0:
        raise ConfigError("mobility_estimation.v_ref_mps must be positive")
    if cfg["gps"]["error_sigma_m"] < 0:
        raise ConfigError("gps.error_sigma_m must be non-negative")
    sim = SimConfig(
        region=region, graph_spec=graph_spec, densities=dens, scheme=scheme,
        wlan_model=_path_loss(pl["wlan"], fad["enable"] and fad["wlan"], div),
        cellular_model=_path_loss(pl["cellular"], fad["enable"], div),
        wlan_floor=cfg["sensitivity_dbm"]["wlan"], cellular_floor=cfg["sensitivity_dbm"]["cellular"],
        wap_tx_power=dep["wap_tx_power_dbm"], stations=stations,
        a=cfg["power"]["a_mws"], b=cfg["power"]["b_mw"], p_gps=cfg["power"]["gps_mw"],
        speed=mg["speed_mps"], calibration=_calibration(me), v_ref=me["v_ref_mps"],
        sample_period=me["sample_period_s"], oracle_mobility=me["oracle_mobility"],
        gps_error_sigma=cfg["gps"]["error_sigma_m"], serving_cell=cfg["serving_cell"],
        duration=cfg["duration_s"], seed=int(cfg["seed"]), replications=int(cfg["replications"]),
        warmup_scans=int(cfg["warmup_scans"]))
    if min(sim.a, sim.b, sim.p_gps) < 0:
        raise ConfigError("power constants must be non-negative")
    if sim.warmup_scans < 0 or sim.warmup_scans >= sim.n_scans:
        raise ConfigError("warmup_scans must be non-negative and shorter than the run")
    sim.graph  # surfaces graph errors now rather than mid-run
    return sim


def sweep_settings(cfg: Mapping) -> tuple[list[float], list[str]]:
    lambdas = [float(x) for x in cfg["sweep"]["lambdas"]]
    if any(not lam > 0 for lam in lambdas):
        raise ConfigError("sweep.lambdas must be positive")
    return lambdas, [normalize_scheme(s) for s in cfg["sweep"]["schemes"]]
