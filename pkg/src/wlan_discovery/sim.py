"""Scan-loop simulation, replications, density sweeps and the analytic cross-check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import power
from .deployment import (MobilityGraph, Region, Trajectory, WapSet, base_station_grid,
                         build_mobility_graph, generate_ppp_waps, grid_graph_spec, split_density)
from .errors import ConfigError, MobilityEstimationError
from .mobility import (DEFAULT_CALIBRATION, CalibrationParams, MobilityEstimator, MobilityState, calibrate,
                       window_stats)
from .radio import CELLULAR_MODEL, WLAN_MODEL, PathLossModel, RsrpTrace, ShadowingField, d_h_threshold, rsrp_trace
from .schemes import SchemeConfig, SchemeState, offload_check, perform_scan, select_channels

ANALYTIC_SCHEMES = ("wlan_aware", "gps_assisted")


@dataclass(frozen=True, eq=False)
class SimConfig:
    region: Region = Region()
    graph_spec: Mapping | None = None
    densities: Mapping[int, float] | None = None
    scheme: SchemeConfig = SchemeConfig()
    wlan_model: PathLossModel = WLAN_MODEL
    cellular_model: PathLossModel = CELLULAR_MODEL
    wlan_floor: float = -90.0
    cellular_floor: float = -120.0
    wap_tx_power: float = 20.0
    stations: tuple | None = None
    a: float = 145.0
    b: float = 10.0
    p_gps: float = 140.0
    speed: float = 1.0
    calibration: CalibrationParams = DEFAULT_CALIBRATION
    v_ref: float = 1.0
    sample_period: float = 0.5
    oracle_mobility: bool = False
    gps_error_sigma: float = 0.0
    serving_cell: str = "all"
    duration: float = 3600.0
    seed: int = 1
    replications: int = 5
    warmup_scans: int = 5

    def __post_init__(self):
        if self.graph_spec is None:
            object.__setattr__(self, "graph_spec", grid_graph_spec(self.region))
        if self.densities is None:
            object.__setattr__(self, "densities", split_density(1e-4, self.scheme.channels))
        if self.stations is None:
            object.__setattr__(self, "stations", tuple(base_station_grid(self.region)))
        if self.duration < 10 * self.scheme.t_s:
            raise ConfigError(f"duration must cover at least 10 scan intervals ({10 * self.scheme.t_s} s)")
        if self.replications < 1:
            raise ConfigError("replication count must be at least 1")
        if not self.speed > 0:
            raise ConfigError("pedestrian speed must be positive")
        if self.serving_cell not in ("all", "grid"):
            raise ConfigError(f"serving_cell must be 'all' or 'grid', got {self.serving_cell!r}")
        if self.d_h > self.scheme.d_r:
            raise ConfigError(f"D_h ({self.d_h:.1f} m) derived from S_high exceeds D_r ({self.scheme.d_r} m)")

    @cached_property
    def graph(self) -> MobilityGraph:
        return build_mobility_graph(self.graph_spec)

    @property
    def d_h(self) -> float:
        return d_h_threshold(self.wlan_model, self.wap_tx_power, self.scheme.s_high)

    @property
    def total_density(self) -> float:
        return float(sum(self.densities.values()))

    @property
    def n_scans(self) -> int:
        return int(round(self.duration / self.scheme.t_s))

    def with_density(self, total: float) -> "SimConfig":
        return replace(self, densities=split_density(total, self.scheme.channels))

    def with_scheme(self, scheme: str) -> "SimConfig":
        return replace(self, scheme=replace(self.scheme, scheme=scheme))

    def power_params(self) -> power.PowerModelParams:
        s = self.scheme
        return power.PowerModelParams(
            densities=tuple(self.densities.get(f, 0.0) for f in s.channels), a=self.a, b=self.b,
            p_gps=self.p_gps, t_s=s.t_s, v=self.speed, d_r=s.d_r, d_h=self.d_h, d1=s.d1, d2=s.d2)


@dataclass(frozen=True)
class ScanRecord:
    scan_index: int
    time_s: float
    n_channels: int
    discoveries: int
    max_rssi_dbm: float
    power_mw: float
    position_error_m: float
    estimated_state: str
    true_state: str
    offload_wap: int | None = None


RECORD_FIELDS = tuple(ScanRecord.__dataclass_fields__)


def _serving_set(cfg: SimConfig, waps: WapSet, pos) -> WapSet:
    """All WAPs, or in grid mode those within half the inter-site distance of the UE's nearest station."""
    if cfg.serving_cell == "all" or len(waps) == 0:
        return waps
    sta = np.array([s.position for s in cfg.stations], dtype=float)
    serving = sta[int(np.argmin(np.hypot(*(sta - pos).T)))]
    if len(sta) > 1:
        gaps = np.hypot(*(sta[:, None, :] - sta[None, :, :]).transpose(2, 0, 1))
        reach = 0.5 * gaps[gaps > 0].min()
    else:
        reach = math.inf
    return waps.subset(np.flatnonzero(np.hypot(*(waps.positions - serving).T) <= reach))


def run_replication(cfg: SimConfig, seed: int) -> list[ScanRecord]:
    """Walk the UE for ``cfg.duration`` seconds and scan every ``T_s`` seconds.

    Independent random streams drive deployment, mobility, cellular traces,
    WLAN scans and GPS noise, so two schemes run with the same seed see the
    same world and the same walk.
    """
    s = cfg.scheme
    deploy_ss, walk_ss, cell_ss, wlan_ss, gps_ss = np.random.SeedSequence(seed).spawn(5)
    waps = generate_ppp_waps(cfg.region, cfg.densities, deploy_ss, cfg.wap_tx_power)
    traj = Trajectory.random_walk(cfg.graph, cfg.speed, np.random.default_rng(walk_ss))
    cell_rng = np.random.default_rng(cell_ss)
    wlan_rng = np.random.default_rng(wlan_ss)
    gps_rng = np.random.default_rng(gps_ss)
    cell_shadow = ShadowingField.for_model(cfg.cellular_model, len(cfg.stations), cell_rng)
    wlan_shadow = ShadowingField.for_model(cfg.wlan_model, len(waps), wlan_rng)
    estimator = MobilityEstimator(cfg.calibration, cfg.v_ref)
    state = SchemeState.initial(s)
    pp = cfg.power_params()
    need_estimator = s.scheme == "wlan_aware" and not cfg.oracle_mobility

    records = []
    for n in range(1, cfg.n_scans + 1):
        t_prev, t_now = (n - 1) * s.t_s, n * s.t_s
        true_d = traj.distance_travelled(t_prev, t_now)
        true_state = MobilityState.MOBILE if true_d > 0 else MobilityState.STATIC
        if need_estimator:
            trace = rsrp_trace(cfg.stations, traj, t_prev, t_now, cfg.sample_period, cell_rng,
                               cfg.cellular_model, cfg.cellular_floor, cell_shadow)
            try:
                stats = window_stats(trace, (t_prev, t_now))
            except MobilityEstimationError:
                stats = None
            decision = estimator.update(stats, s.t_s)
            d_n, est_state = decision.distance, decision.state
        else:
            d_n, est_state = true_d, true_state
        pos = traj.position_at(t_now)
        gps_pos = pos + gps_rng.normal(0.0, cfg.gps_error_sigma, 2) if cfg.gps_error_sigma > 0 else pos
        serving = _serving_set(cfg, waps, pos)
        channels = select_channels(state, serving, waps, pos, d_n, cfg.wlan_model, gps_pos, cfg.gps_error_sigma)
        table = state.table if s.scheme in ("wlan_aware", "wlan_aware_gps") else None
        result = perform_scan(channels, pos, waps, cfg.wlan_model, wlan_rng, cfg.wlan_floor, wlan_shadow, table)
        state.last_result = result
        if s.scheme in ("wlan_aware", "wlan_aware_gps"):
            err = state.estimate.error
        elif s.scheme == "gps_assisted":
            err = cfg.gps_error_sigma
        else:
            err = math.nan
        records.append(ScanRecord(
            scan_index=n, time_s=t_now, n_channels=len(channels), discoveries=result.count_above(s.s_enter),
            max_rssi_dbm=float(result.rssi.max()) if len(result) else math.nan,
            power_mw=power.per_scan_power(len(channels), pp, s.uses_gps),
            position_error_m=err, estimated_state=est_state.value, true_state=true_state.value,
            offload_wap=offload_check(result, s.s_enter)))
    return records


def steady(records: Sequence[ScanRecord], warmup: int) -> list[ScanRecord]:
    return list(records[warmup:])


@dataclass(frozen=True)
class SweepRow:
    lam: float
    scheme: str
    replications: int
    scans: int
    mean_channels: float
    se_channels: float
    mean_discoveries: float
    se_discoveries: float
    mean_power: float
    se_power: float
    analytic_channels: float | None = None
    analytic_power: float | None = None


SWEEP_FIELDS = tuple(SweepRow.__dataclass_fields__)


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)

    def row(self, lam: float, scheme: str) -> SweepRow:
        for r in self.rows:
            if r.scheme == scheme and math.isclose(r.lam, lam, rel_tol=1e-12):
                return r
        raise KeyError((lam, scheme))

    def __len__(self) -> int:
        return len(self.rows)


def replication_seed(base: int, lam_index: int, rep: int) -> int:
    """Schemes share seeds at a given density so they are compared on identical worlds."""
    return base + 10_000 * lam_index + rep


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else math.nan
    return float(v.mean()), se


def analytic_channels(cfg: SimConfig) -> float | None:
    pp = cfg.power_params()
    if cfg.scheme.scheme == "gps_assisted":
        return power.expected_channels_gps(pp)
    if cfg.scheme.scheme == "wlan_aware" and pp.rho > 0:
        return power.expected_channels_wlan_aware(pp)
    return None


def summarize(cfg: SimConfig, lam: float, runs: Sequence[Sequence[ScanRecord]]) -> SweepRow:
    """Aggregate replications; means pool every post-warm-up scan, standard errors use replication means."""
    kept = [steady(r, cfg.warmup_scans) for r in runs]
    pooled = [rec for r in kept for rec in r]

    def stat(attr):
        mean = float(np.mean([getattr(x, attr) for x in pooled]))
        _, se = _mean_se([np.mean([getattr(x, attr) for x in r]) for r in kept])
        return mean, se

    ch, ch_se = stat("n_channels")
    di, di_se = stat("discoveries")
    pw, pw_se = stat("power_mw")
    ana = analytic_channels(cfg)
    ana_p = power.expected_power(ana, cfg.power_params(), cfg.scheme.uses_gps) if ana is not None else None
    return SweepRow(lam, cfg.scheme.scheme, len(runs), len(pooled), ch, ch_se, di, di_se, pw, pw_se, ana, ana_p)


def run_sweep(cfg: SimConfig, lambdas: Sequence[float], schemes: Sequence[str],
              replications: int | None = None) -> SweepReport:
    if any(not lam > 0 for lam in lambdas):
        raise ConfigError("densities in a sweep must be positive")
    reps = cfg.replications if replications is None else replications
    report = SweepReport()
    for li, lam in enumerate(lambdas):
        for scheme in schemes:
            c = cfg.with_density(lam).with_scheme(scheme)
            runs = [run_replication(c, replication_seed(cfg.seed, li, r)) for r in range(reps)]
            report.rows.append(summarize(c, lam, runs))
    return report


@dataclass(frozen=True)
class Verdict:
    lam: float
    scheme: str
    simulated: float
    analytic: float
    deviation: float
    passed: bool


def compare_analytical(report: SweepReport, tolerance: float) -> list[Verdict]:
    out = []
    for r in report.rows:
        if r.analytic_channels is None or r.scheme not in ANALYTIC_SCHEMES:
            continue
        dev = abs(r.mean_channels - r.analytic_channels) / r.analytic_channels if r.analytic_channels else math.inf
        out.append(Verdict(r.lam, r.scheme, r.mean_channels, r.analytic_channels, dev, dev <= tolerance))
    return out


# -- synthetic cellular traces for the mobility estimator ---------------------------

def synthetic_traces(cfg: SimConfig, mobile: bool, n_pairs: int, seed: int,
                     windows_per_trace: int = 11, window: float | None = None) -> list[RsrpTrace]:
    """Labelled RSRP traces yielding at least ``n_pairs`` consecutive window pairs.

    Static traces sit at uniform random points of the region; mobile traces
    follow a random walk on the mobility graph at ``cfg.speed``.
    """
    window = cfg.scheme.t_s if window is None else window
    rng = np.random.default_rng(seed)
    per_trace = windows_per_trace - 1
    traces = []
    for _ in range(-(-n_pairs // per_trace)):
        if mobile:
            traj = Trajectory.random_walk(cfg.graph, cfg.speed, rng)
        else:
            traj = Trajectory.static(rng.uniform((0.0, 0.0), (cfg.region.width, cfg.region.height)))
        traces.append(rsrp_trace(cfg.stations, traj, 0.0, windows_per_trace * window, cfg.sample_period, rng,
                                 cfg.cellular_model, cfg.cellular_floor))
    return traces


def calibrate_default(cfg: SimConfig, n_windows: int = 500, seed: int = 2024) -> CalibrationParams:
    """Calibrate the estimator on synthetic static and 1 m/s traces of the configured cellular layout."""
    static = synthetic_traces(cfg, False, n_windows, seed)
    mobile = synthetic_traces(cfg, True, n_windows, seed + 1)
    return calibrate(static, mobile, cfg.scheme.t_s, min_windows=n_windows)
