"""Log-distance path loss, correlated shadowing, Rayleigh fading and RSRP traces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import digamma

from .deployment import BaseStation, Trajectory
from .errors import ParameterError

DB_PER_NEPER = 10.0 / math.log(10.0)


@dataclass(frozen=True)
class PathLossModel:
    """Median loss ``reference_loss + 10 * exponent * log10(d)`` with ``d`` in meters (d0 = 1 m).

    Fading, when enabled, is Rayleigh per resource element: the received
    power gain is the mean of ``fading_diversity`` independent unit
    exponentials, reported in dB. ``fading_diversity=1`` is a single Rayleigh
    envelope.
    """

    reference_loss: float = 40.0
    exponent: float = 3.5
    shadowing_sigma: float = 4.0
    shadowing_decorrelation: float = 20.0
    fading: bool = False
    fading_diversity: int = 1

    def __post_init__(self):
        if not self.exponent > 0:
            raise ParameterError(f"path loss exponent must be positive, got {self.exponent}")
        if self.shadowing_sigma < 0:
            raise ParameterError(f"shadowing sigma must be non-negative, got {self.shadowing_sigma}")
        if not self.shadowing_decorrelation > 0:
            raise ParameterError("shadowing decorrelation distance must be positive")
        if int(self.fading_diversity) < 1:
            raise ParameterError("fading_diversity must be at least 1")


WLAN_MODEL = PathLossModel()
# 3GPP TR 36.942 urban macro: 128.1 + 37.6 log10(R[km]) rewritten for d0 = 1 m.
CELLULAR_MODEL = PathLossModel(reference_loss=15.3, exponent=3.76, shadowing_sigma=6.0,
                               shadowing_decorrelation=20.0, fading=True, fading_diversity=4)


def median_rssi(model: PathLossModel, tx_power: float, d):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ParameterError("distance must be positive")
    out = np.asarray(tx_power, dtype=float) - model.reference_loss - 10.0 * model.exponent * np.log10(d)
    return float(out) if out.ndim == 0 else out


def distance_from_rssi(model: PathLossModel, tx_power: float, rssi):
    """Invert the median path loss (fading and shadowing are ignored)."""
    out = 10.0 ** ((tx_power - model.reference_loss - np.asarray(rssi, dtype=float)) / (10.0 * model.exponent))
    return float(out) if np.ndim(out) == 0 else out


def d_h_threshold(model: PathLossModel, tx_power: float, s_high: float) -> float:
    """Distance at which the median RSSI equals ``s_high``."""
    return distance_from_rssi(model, tx_power, s_high)


def fading_mean_db(model: PathLossModel) -> float:
    """Mean of the fading term in dB (about -2.51 dB for a single Rayleigh envelope)."""
    if not model.fading:
        return 0.0
    m = int(model.fading_diversity)
    return DB_PER_NEPER * (digamma(m) - math.log(m))


def fading_db(model: PathLossModel, rng: np.random.Generator, size=None):
    m = int(model.fading_diversity)
    return DB_PER_NEPER * np.log(rng.gamma(m, 1.0 / m, size=size))


def rssi_sample(model: PathLossModel, tx_power: float, d, rng: np.random.Generator, shadowing_db=None):
    """One received-power draw: median + shadowing + small-scale fading.

    ``shadowing_db`` supplies a spatially correlated value from a
    :class:`ShadowingField`; when omitted an independent Gaussian draw is used.
    """
    med = np.asarray(median_rssi(model, tx_power, d))
    if shadowing_db is None:
        shadowing_db = rng.normal(0.0, model.shadowing_sigma, size=med.shape) if model.shadowing_sigma > 0 else 0.0
    out = med + shadowing_db
    if model.fading:
        out = out + fading_db(model, rng, size=med.shape)
    return float(out) if np.ndim(out) == 0 else out


class ShadowingField:
    """Gudmundson log-normal shadowing tracked per link along the UE path.

    Each link keeps its last value and the UE position where it was drawn.
    Moving the UE by ``s`` meters correlates the next value with coefficient
    ``exp(-s / decorrelation)``; a UE that has not moved sees the same value.
    """

    def __init__(self, sigma: float, decorrelation: float, n_links: int, rng: np.random.Generator):
        self.sigma = float(sigma)
        self.decorrelation = float(decorrelation)
        self.rng = rng
        self.values = np.full(n_links, np.nan)
        self.where = np.zeros((n_links, 2))

    @classmethod
    def for_model(cls, model: PathLossModel, n_links: int, rng: np.random.Generator) -> "ShadowingField":
        return cls(model.shadowing_sigma, model.shadowing_decorrelation, n_links, rng)

    def sample(self, links, position) -> np.ndarray:
        links = np.asarray(links, dtype=int)
        pos = np.asarray(position, dtype=float)
        if self.sigma == 0 or links.size == 0:
            return np.zeros(links.shape)
        old = self.values[links]
        moved = np.hypot(*(pos - self.where[links]).T)
        r = np.exp(-moved / self.decorrelation)
        z = self.rng.standard_normal(links.shape)
        new = np.where(np.isnan(old), self.sigma * z,
                       r * np.nan_to_num(old) + np.sqrt(1.0 - r * r) * self.sigma * z)
        self.values[links] = new
        self.where[links] = pos
        return new


@dataclass(frozen=True, eq=False)
class RsrpTrace:
    """Per-station RSRP samples; ``rssi[k, j]`` is station ``station_ids[j]`` at ``times[k]``.

    Samples below the detection floor are NaN.
    """

    times: np.ndarray
    station_ids: tuple
    rssi: np.ndarray
    period: float

    def to_rows(self, label: str | None = None):
        for k, t in enumerate(self.times):
            for j, sid in enumerate(self.station_ids):
                v = self.rssi[k, j]
                if np.isfinite(v):
                    yield (float(t), sid, float(v)) if label is None else (float(t), sid, float(v), label)


def rsrp_trace(stations: Sequence[BaseStation], trajectory: Trajectory, t0: float, t1: float,
               period: float, rng: np.random.Generator, model: PathLossModel = CELLULAR_MODEL,
               floor: float = -120.0, shadowing: ShadowingField | None = None) -> RsrpTrace:
    """Sample every station at ``t0, t0 + period, ...`` strictly before ``t1``.

    Pass a persistent ``shadowing`` field to keep shadowing continuous across
    consecutive calls on the same trajectory.
    """
    if not stations:
        raise ParameterError("rsrp_trace needs at least one base station")
    if not (t1 > t0 and period > 0):
        raise ParameterError(f"invalid sampling window [{t0}, {t1}) with period {period}")
    n = int(math.ceil((t1 - t0) / period - 1e-9))
    times = t0 + period * np.arange(n)
    sta_pos = np.array([s.position for s in stations], dtype=float)
    tx = np.array([s.tx_power for s in stations], dtype=float)
    if shadowing is None:
        shadowing = ShadowingField.for_model(model, len(stations), rng)
    links = np.arange(len(stations))
    out = np.empty((n, len(stations)))
    for k, t in enumerate(times):
        pos = trajectory.position_at(float(t))
        d = np.maximum(np.hypot(*(sta_pos - pos).T), 1.0)
        out[k] = rssi_sample(model, tx, d, rng, shadowing.sample(links, pos))
    out[out < floor] = np.nan
    return RsrpTrace(times, tuple(s.id for s in stations), out, float(period))
