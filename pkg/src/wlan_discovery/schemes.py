"""Channel selection for the five discovery schemes and the scan itself.

The WLAN-aware pipeline runs three steps before every scan:

1. position update from the strongest WAP found in the previous scan,
2. initial channel selection of WAPs near the estimated position,
3. channel elimination driven by per-channel RSSI history and distance walked.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .deployment import DEFAULT_CHANNELS, WapSet
from .errors import ConfigError
from .radio import PathLossModel, ShadowingField, distance_from_rssi, rssi_sample

SCHEMES = ("conventional", "3gpp_assisted", "gps_assisted", "wlan_aware", "wlan_aware_gps")
GPS_SCHEMES = frozenset({"gps_assisted", "wlan_aware_gps"})


def normalize_scheme(name: str) -> str:
    key = str(name).strip().lower().replace("-", "_")
    if key not in SCHEMES:
        raise ConfigError(f"unknown scheme {name!r}; choose from {', '.join(SCHEMES)}")
    return key


@dataclass(frozen=True)
class SchemeConfig:
    """Thresholds default to the field-experiment values (T_s = 10 s, S_enter = -75 dBm, ...).

    ``strict_distance`` selects ``D[f] > D1`` instead of ``D[f] >= D1`` (same
    for D2) in channel elimination. The inclusive form rescans a weak channel
    once every ``D1`` meters, which is the rate the closed-form model assumes
    when ``v * T_s`` is an exact multiple of ``D1``.
    """

    scheme: str = "wlan_aware"
    d_r: float = 100.0
    s_high: float = -85.0
    d1: float = 10.0
    d2: float = 20.0
    s_enter: float = -75.0
    t_s: float = 10.0
    channels: tuple = DEFAULT_CHANNELS
    strict_distance: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", normalize_scheme(self.scheme))
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        if not self.d2 > self.d1:
            raise ConfigError(f"D2 must exceed D1 (got d1={self.d1}, d2={self.d2})")
        if not self.t_s > 0:
            raise ConfigError(f"scan interval must be positive, got {self.t_s}")
        if not self.channels:
            raise ConfigError("at least one supported channel is required")

    @property
    def uses_gps(self) -> bool:
        return self.scheme in GPS_SCHEMES


@dataclass(frozen=True)
class UePositionEstimate:
    """Estimated UE position and error radius; ``error = inf`` means no fix yet."""

    position: tuple | None = None
    error: float = math.inf

    @property
    def known(self) -> bool:
        return self.position is not None and math.isfinite(self.error)


UNKNOWN_POSITION = UePositionEstimate()


@dataclass
class ChannelStateTable:
    """Last-scan maximum RSSI ``rssi[f]`` (NaN when nothing was heard) and distance ``dist[f]`` since ``f`` was scanned."""

    rssi: dict
    dist: dict

    @classmethod
    def initial(cls, channels: Sequence[int], d2: float) -> "ChannelStateTable":
        # D2 + 1 m makes every channel eligible on the first opportunity.
        return cls({f: math.nan for f in channels}, {f: d2 + 1.0 for f in channels})

    def copy(self) -> "ChannelStateTable":
        return ChannelStateTable(dict(self.rssi), dict(self.dist))

    def record(self, result: "ScanResult") -> None:
        best = result.max_rssi_by_channel()
        for f in result.channels:
            if f in self.rssi:
                self.rssi[f] = best.get(f, math.nan)


@dataclass(frozen=True, eq=False)
class ScanResult:
    channels: tuple
    wap_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    wap_channels: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    rssi: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __len__(self) -> int:
        return len(self.wap_ids)

    def max_rssi_by_channel(self) -> dict:
        out = {}
        for ch, v in zip(self.wap_channels.tolist(), self.rssi.tolist()):
            if ch not in out or v > out[ch]:
                out[ch] = v
        return out

    def strongest(self, among=None) -> int | None:
        """Row of the highest RSSI (smallest WAP id on ties), optionally restricted to ``among`` rows."""
        rows = np.arange(len(self)) if among is None else np.asarray(among, dtype=int)
        if rows.size == 0:
            return None
        order = np.lexsort((self.wap_ids[rows], -self.rssi[rows]))
        return int(rows[order[0]])

    def count_above(self, threshold: float) -> int:
        return int(np.count_nonzero(self.rssi > threshold))


def position_update(prev: UePositionEstimate, disc_prev: ScanResult | None, d_n: float, wap_db: WapSet,
                    model: PathLossModel) -> UePositionEstimate:
    """Snap to the strongest previously discovered WAP when it is closer than the current error radius."""
    if d_n < 0:
        raise ValueError(f"distance travelled must be non-negative, got {d_n}")
    if disc_prev is not None and len(disc_prev):
        known = [k for k, i in enumerate(disc_prev.wap_ids) if wap_db.row_of(i) is not None]
        k = disc_prev.strongest(known)
        if k is not None:
            row = wap_db.row_of(disc_prev.wap_ids[k])
            d_wap = distance_from_rssi(model, float(wap_db.tx_power[row]), float(disc_prev.rssi[k]))
            if prev.error > d_wap:
                return UePositionEstimate(tuple(map(float, wap_db.positions[row])), d_wap + d_n)
    return UePositionEstimate(prev.position, prev.error + d_n)


def initial_channel_selection(estimate: UePositionEstimate, serving_set: WapSet, cfg: SchemeConfig) -> list[int]:
    if len(serving_set) == 0:
        return []
    if not estimate.known:
        return serving_set.channel_set()
    near = serving_set.distances_from(estimate.position) < cfg.d_r + estimate.error
    return sorted({int(c) for c in serving_set.channels[near]})


def channel_elimination(init: Sequence[int], table: ChannelStateTable, d_n: float,
                        cfg: SchemeConfig) -> tuple[list[int], ChannelStateTable]:
    table = table.copy()
    for f in table.dist:
        table.dist[f] += d_n
    scan_set = []
    beyond = operator.gt if cfg.strict_distance else operator.ge
    for f in init:
        s, d = table.rssi[f], table.dist[f]
        if s >= cfg.s_high:
            scan_set.append(f)
        elif s < cfg.s_high and beyond(d, cfg.d1):
            scan_set.append(f)
        elif math.isnan(s) and beyond(d, cfg.d2):
            scan_set.append(f)
    for f in scan_set:
        table.dist[f] = 0.0
    return scan_set, table


@dataclass
class SchemeState:
    """Per-replication memory of a discovery scheme."""

    cfg: SchemeConfig
    table: ChannelStateTable
    estimate: UePositionEstimate = UNKNOWN_POSITION
    last_result: ScanResult | None = None
    last_init: tuple = ()

    @classmethod
    def initial(cls, cfg: SchemeConfig) -> "SchemeState":
        return cls(cfg, ChannelStateTable.initial(cfg.channels, cfg.d2))


def select_channels(state: SchemeState, serving_set: WapSet, wap_db: WapSet, true_position, d_n: float,
                    model: PathLossModel, gps_position=None, gps_error: float = 0.0) -> list[int]:
    """Channels to scan now. Updates ``state`` in place for the WLAN-aware schemes.

    ``serving_set`` holds the WAPs of the serving cell, ``wap_db`` the
    operator database used to look up discovered WAPs. ``gps_position``
    defaults to the true position.
    """
    cfg = state.cfg
    if gps_position is None:
        gps_position = true_position
    if cfg.scheme == "conventional":
        return list(cfg.channels)
    if cfg.scheme == "3gpp_assisted":
        return [f for f in serving_set.channel_set() if f in cfg.channels]
    if cfg.scheme == "gps_assisted":
        est = UePositionEstimate(tuple(gps_position), 0.0)
        return [f for f in initial_channel_selection(est, serving_set, cfg) if f in cfg.channels]
    if cfg.scheme == "wlan_aware":
        state.estimate = position_update(state.estimate, state.last_result, d_n, wap_db, model)
    else:
        state.estimate = UePositionEstimate(tuple(map(float, gps_position)), gps_error)
    init = [f for f in initial_channel_selection(state.estimate, serving_set, cfg) if f in cfg.channels]
    scan_set, state.table = channel_elimination(init, state.table, d_n, cfg)
    state.last_init = tuple(init)
    return scan_set


def perform_scan(channels: Sequence[int], ue_pos, waps: WapSet, model: PathLossModel, rng: np.random.Generator,
                 floor: float = -90.0, shadowing: ShadowingField | None = None,
                 table: ChannelStateTable | None = None) -> ScanResult:
    """Detect every WAP on the scanned channels whose sampled RSSI reaches ``floor``."""
    channels = tuple(channels)
    rows = np.concatenate([waps.rows_on(f) for f in channels]) if channels else np.empty(0, dtype=int)
    rows = rows.astype(int)
    if rows.size:
        d = np.maximum(waps.distances_from(ue_pos, rows), 1.0)
        shadow = shadowing.sample(rows, ue_pos) if shadowing is not None else None
        rssi = np.atleast_1d(rssi_sample(model, waps.tx_power[rows], d, rng, shadow))
        hit = rssi >= floor
        result = ScanResult(channels, waps.ids[rows][hit], waps.channels[rows][hit], rssi[hit])
    else:
        result = ScanResult(channels)
    if table is not None:
        table.record(result)
    return result


def offload_check(result: ScanResult, s_enter: float) -> int | None:
    """Strongest detected WAP if it is strictly above ``s_enter``."""
    k = result.strongest()
    if k is None or not result.rssi[k] > s_enter:
        return None
    return int(result.wap_ids[k])


def with_scheme(cfg: SchemeConfig, scheme: str) -> SchemeConfig:
    return replace(cfg, scheme=scheme)
