"""Static/mobile classification from cellular signal-strength windows.

For every base station seen in two consecutive windows, the shift of the
window mean and the spread inside the current window are each mapped
through a decaying exponential and averaged into a score in (0, 1]. Scores
above one half mean the UE is standing still.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import MobilityEstimationError, ParameterError
from .radio import RsrpTrace

# 1 / ln 2 rounded as in the calibration rule: exp(-x / (1.44 x50)) ~= 1/2 at x = x50.
CALIBRATION_FACTOR = 1.44


class MobilityState(str, enum.Enum):
    STATIC = "static"
    MOBILE = "mobile"


@dataclass(frozen=True)
class StationStats:
    mean: float
    std: float
    count: int


WindowStats = Mapping[object, StationStats]


@dataclass(frozen=True)
class CalibrationParams:
    phi0: float
    sigma0: float
    phi50: float | None = None
    sigma50: float | None = None
    degenerate: bool = False

    def __post_init__(self):
        if not (self.phi0 > 0 and self.sigma0 > 0):
            raise ParameterError(f"calibration constants must be positive, got {self.phi0}, {self.sigma0}")

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "CalibrationParams":
        with open(path) as fh:
            return cls(**json.load(fh))


# Frozen output of sim.calibrate_default() with the default configuration
# (six-station grid, seed 2024, 500 window pairs per class, 10 s windows).
# Regenerate with the calibrate-mobility subcommand.
DEFAULT_CALIBRATION = CalibrationParams(phi0=2.0840885781362375, sigma0=3.7320512135283743,
                                        phi50=1.4472837348168317, sigma50=2.5917022316169267)


@dataclass(frozen=True)
class MobilityDecision:
    delta: float
    state: MobilityState
    distance: float


def window_stats(trace: RsrpTrace, window: tuple[float, float]) -> dict:
    """Mean and population standard deviation per station over ``t0 <= t < t1``.

    Stations with fewer than two finite samples in the window are left out.
    """
    t0, t1 = window
    sel = (trace.times >= t0) & (trace.times < t1)
    block = trace.rssi[sel]
    out = {}
    for j, sid in enumerate(trace.station_ids):
        col = block[:, j]
        col = col[np.isfinite(col)]
        if len(col) >= 2:
            out[sid] = StationStats(float(col.mean()), float(col.std()), len(col))
    if not out:
        raise MobilityEstimationError(f"no station has two samples in window [{t0}, {t1})")
    return out


def delta_metric(stats_n: WindowStats, stats_prev: WindowStats, cal: CalibrationParams) -> float:
    common = sorted(set(stats_n) & set(stats_prev), key=str)
    if not common:
        raise MobilityEstimationError("no base station is common to both windows")
    total = 0.0
    for sid in common:
        phi = abs(stats_n[sid].mean - stats_prev[sid].mean)
        total += math.exp(-phi / cal.phi0) + math.exp(-stats_n[sid].std / cal.sigma0)
    return total / (2 * len(common))


def classify(delta: float, v_ref: float, window_length: float) -> MobilityDecision:
    if not window_length > 0:
        raise ParameterError(f"window length must be positive, got {window_length}")
    if delta > 0.5:
        return MobilityDecision(delta, MobilityState.STATIC, 0.0)
    return MobilityDecision(delta, MobilityState.MOBILE, v_ref * window_length)


class MobilityEstimator:
    """Feeds consecutive windows through :func:`delta_metric` and :func:`classify`.

    When a window cannot be compared with its predecessor (first window,
    no shared station) the UE is assumed to be moving so that scans are not
    suppressed.
    """

    def __init__(self, cal: CalibrationParams, v_ref: float = 1.0):
        self.cal = cal
        self.v_ref = v_ref
        self.prev: WindowStats | None = None

    def update(self, stats: WindowStats | None, window_length: float) -> MobilityDecision:
        prev, self.prev = self.prev, stats
        try:
            if stats is None or prev is None:
                raise MobilityEstimationError("nothing to compare")
            return classify(delta_metric(stats, prev, self.cal), self.v_ref, window_length)
        except MobilityEstimationError:
            return MobilityDecision(math.nan, MobilityState.MOBILE, self.v_ref * window_length)


# -- calibration ------------------------------------------------------------------

def window_pairs(trace: RsrpTrace, window: float):
    """Yield ``(previous, current)`` stats for consecutive windows that both have data."""
    if not len(trace.times):
        return
    t_start = float(trace.times[0])
    n_win = int(math.floor((trace.times[-1] - t_start) / window + 1e-9)) + 1
    prev = None
    for k in range(n_win):
        try:
            cur = window_stats(trace, (t_start + k * window, t_start + (k + 1) * window))
        except MobilityEstimationError:
            cur = None
        if prev is not None and cur is not None:
            yield prev, cur
        prev = cur


def window_features(trace: RsrpTrace, window: float) -> tuple[np.ndarray, np.ndarray, int]:
    """Per-station mean shifts and spreads over consecutive windows, plus the number of window pairs."""
    phis, sigmas, n = [], [], 0
    for prev, cur in window_pairs(trace, window):
        n += 1
        for sid in set(cur) & set(prev):
            phis.append(abs(cur[sid].mean - prev[sid].mean))
            sigmas.append(cur[sid].std)
    return np.array(phis), np.array(sigmas), n


def posterior_crossing(static: np.ndarray, mobile: np.ndarray) -> tuple[float, bool]:
    """Value where P(static | x) falls through one half, with equal priors.

    Class densities are histograms on shared Freedman-Diaconis bins; the
    crossing is linearly interpolated between bin centers. When the
    posterior crosses several times, the crossing that best separates the
    two empirical distributions wins. Returns ``(x, degenerate)``.
    """
    static = np.asarray(static, dtype=float)
    mobile = np.asarray(mobile, dtype=float)
    if static.max() < mobile.min():
        warnings.warn("class supports do not overlap; using the midpoint between them")
        return float(0.5 * (static.max() + mobile.min())), True
    pooled = np.concatenate([static, mobile])
    edges = np.histogram_bin_edges(pooled, bins="fd")
    fs, _ = np.histogram(static, edges, density=True)
    fm, _ = np.histogram(mobile, edges, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    keep = (fs + fm) > 0
    post = fs[keep] / (fs[keep] + fm[keep])
    c = centers[keep]
    best, best_score = None, -np.inf
    for i in range(len(c) - 1):
        if post[i] >= 0.5 > post[i + 1]:
            x = c[i] + (post[i] - 0.5) / (post[i] - post[i + 1]) * (c[i + 1] - c[i])
            score = np.mean(static <= x) - np.mean(mobile <= x)
            if score > best_score:
                best, best_score = x, score
    if best is None or best_score <= 0:
        warnings.warn("static and mobile samples are not separable; calibration is degenerate")
        return float(np.median(pooled)), True
    return float(best), False


def calibrate(static_traces: Sequence[RsrpTrace], mobile_traces: Sequence[RsrpTrace], window: float,
              min_windows: int = 100) -> CalibrationParams:
    feats = {}
    for name, traces in (("static", static_traces), ("mobile", mobile_traces)):
        parts = [window_features(t, window) for t in traces]
        n = sum(p[2] for p in parts)
        if n < min_windows:
            raise ParameterError(f"{name} class has {n} comparable windows, need {min_windows}")
        feats[name] = (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))
    phi50, bad_phi = posterior_crossing(feats["static"][0], feats["mobile"][0])
    sigma50, bad_sigma = posterior_crossing(feats["static"][1], feats["mobile"][1])
    tiny = 1e-6
    return CalibrationParams(max(CALIBRATION_FACTOR * phi50, tiny), max(CALIBRATION_FACTOR * sigma50, tiny),
                             phi50, sigma50, bad_phi or bad_sigma)


def classify_trace(trace: RsrpTrace, cal: CalibrationParams, window: float,
                   v_ref: float = 1.0) -> list[MobilityDecision]:
    """Decisions for every window that has a comparable predecessor."""
    out = []
    for prev, cur in window_pairs(trace, window):
        try:
            out.append(classify(delta_metric(cur, prev, cal), v_ref, window))
        except MobilityEstimationError:
            pass
    return out


# -- labelled trace files ----------------------------------------------------------

def write_labelled_traces(path, traces: Mapping[str, Sequence[RsrpTrace]], window: float = 10.0) -> None:
    """CSV with ``time_s,station_id,rssi_dbm,label``.

    Traces sharing a label are laid end to end, each starting on a window
    boundary after one empty window, so no window pair spans two traces.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "station_id", "rssi_dbm", "label"])
        for label, group in traces.items():
            offset = 0.0
            for tr in group:
                base = float(tr.times[0])
                for t, sid, v in tr.to_rows():
                    w.writerow([repr(t - base + offset), sid, repr(v), label])
                end = offset + float(tr.times[-1] - base) + tr.period
                offset = math.ceil(end / window - 1e-9) * window + window


def read_labelled_traces(path, period: float | None = None) -> dict[str, RsrpTrace]:
    rows: dict[str, list] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            label = row["label"].strip().lower()
            if label not in ("static", "mobile"):
                raise ParameterError(f"unknown label {row['label']!r}; expected static or mobile")
            rows.setdefault(label, []).append((float(row["time_s"]), row["station_id"], float(row["rssi_dbm"])))
    out = {}
    for label, items in rows.items():
        times = sorted({t for t, _, _ in items})
        stations = sorted({s for _, s, _ in items})
        ti = {t: k for k, t in enumerate(times)}
        si = {s: k for k, s in enumerate(stations)}
        mat = np.full((len(times), len(stations)), np.nan)
        for t, s, v in items:
            mat[ti[t], si[s]] = v
        step = period if period is not None else float(np.median(np.diff(times))) if len(times) > 1 else 1.0
        out[label] = RsrpTrace(np.array(times), tuple(stations), mat, step)
    return out
