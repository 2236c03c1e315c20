"""Closed-form scan power and expected channel counts.

Average power is ``a * E[N_ch] / T_s + b`` (plus the GPS module when a
scheme keeps it on). The WLAN-aware channel count splits every channel into
three regimes by the distance to its nearest WAP: inside ``D_h`` (rescanned
every interval), between ``D_h`` and ``D_r`` (rescanned every ``D_1`` meters)
and beyond ``D_r`` but inside ``D_r`` plus the position error (rescanned
every ``D_2`` meters).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import ParameterError

RESIDUAL_MASS = 1e-6
MAX_ATOMS = 5_000_000
QUAD_RTOL = 1e-6


@dataclass(frozen=True)
class PowerModelParams:
    """Inputs of the analytic model; ``densities`` holds one WAP density per channel (WAPs/m^2)."""

    densities: tuple
    a: float = 145.0
    b: float = 10.0
    p_gps: float = 140.0
    t_s: float = 10.0
    v: float = 1.0
    d_r: float = 100.0
    d_h: float = 71.97
    d1: float = 10.0
    d2: float = 20.0

    def __post_init__(self):
        object.__setattr__(self, "densities", tuple(float(r) for r in self.densities))
        if min((self.a, self.b, self.p_gps)) < 0:
            raise ParameterError("power constants must be non-negative")
        if not self.t_s > 0:
            raise ParameterError("scan interval must be positive")
        if any(r < 0 for r in self.densities):
            raise ParameterError("densities must be non-negative")
        if self.v < 0:
            raise ParameterError("speed must be non-negative")
        if self.d_h > self.d_r:
            raise ParameterError(f"D_h ({self.d_h:.3g} m) exceeds D_r ({self.d_r:.3g} m)")
        if not (self.d1 > 0 and self.d2 > 0):
            raise ParameterError("distance thresholds must be positive")
        if self.v == 0:
            warnings.warn("speed is zero: the UE never leaves the out-of-range state")

    @property
    def rho(self) -> float:
        return float(sum(self.densities))


def expected_power(e_n_ch: float, params: PowerModelParams, uses_gps: bool = False) -> float:
    if e_n_ch < 0:
        raise ParameterError("channel count must be non-negative")
    return params.a * e_n_ch / params.t_s + params.b + (params.p_gps if uses_gps else 0.0)


def per_scan_power(n_ch: int, params: PowerModelParams, uses_gps: bool = False) -> float:
    return expected_power(n_ch, params, uses_gps)


def p_out_n(n, params: PowerModelParams):
    """Probability of staying out of range for ``n`` whole scan intervals (geometric)."""
    n = np.asarray(n)
    if np.any(n < 0):
        raise ParameterError("n must be non-negative")
    rate = 2.0 * params.d_r * params.v * params.rho * params.t_s
    out = np.exp(-rate * n) * -np.expm1(-rate)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class PositionErrorPdf:
    """Position-error law: a density on ``[0, D_r]`` plus atoms at ``D_r + k v T_s``.

    ``raw_masses`` are the unnormalized atom weights; ``masses`` are rescaled
    so that atoms carry exactly the out-of-range probability.
    """

    rho: float
    d_r: float
    atoms: np.ndarray
    raw_masses: np.ndarray
    masses: np.ndarray
    truncation: int

    def density(self, r):
        r = np.asarray(r, dtype=float)
        return np.where((r >= 0) & (r <= self.d_r),
                        2.0 * self.rho * math.pi * r * np.exp(-self.rho * math.pi * r * r), 0.0)

    @property
    def continuous_mass(self) -> float:
        return -math.expm1(-self.rho * math.pi * self.d_r ** 2)

    @property
    def total_mass(self) -> float:
        return self.continuous_mass + float(self.masses.sum())

    def expect(self, g) -> float:
        """E[g(error)] with the continuous part done by adaptive quadrature."""
        cont, _ = integrate.quad(lambda r: float(self.density(r)) * g(r), 0.0, self.d_r,
                                 epsrel=QUAD_RTOL, epsabs=0.0, limit=200)
        return cont + float(np.dot(self.masses, g(self.atoms)))


def truncation_index(params: PowerModelParams) -> int:
    """Smallest K >= 1 with ``sum_{n <= K} P_o(n) >= 1 - 1e-6``; this also bounds the discarded atom mass."""
    rate = 2.0 * params.d_r * params.v * params.rho * params.t_s
    if rate <= 0:
        return 1
    return max(1, math.ceil(-math.log(RESIDUAL_MASS) / rate) - 1)


def position_error_pdf(params: PowerModelParams) -> PositionErrorPdf:
    rho = params.rho
    if not rho > 0:
        raise ParameterError("total WAP density must be positive")
    out_range = math.exp(-rho * math.pi * params.d_r ** 2)
    step = params.v * params.t_s
    if step == 0:
        atoms = np.array([params.d_r])
        return PositionErrorPdf(rho, params.d_r, atoms, np.zeros(1), np.array([out_range]), 1)
    k_max = truncation_index(params)
    if k_max > MAX_ATOMS:
        raise ParameterError(f"density {rho:.3g} needs {k_max} position-error atoms (limit {MAX_ATOMS})")
    i = np.arange(1, k_max + 1)
    tail = np.cumsum((p_out_n(i, params) / i)[::-1])[::-1]   # sum_{i >= k} P_o(i) / i
    raw = out_range * tail
    masses = raw * (out_range / raw.sum()) if raw.sum() > 0 else raw
    return PositionErrorPdf(rho, params.d_r, params.d_r + i * step, raw, masses, k_max)


def _rates(params: PowerModelParams) -> tuple[float, float]:
    # a channel is scanned at most once per scan operation
    vt = params.v * params.t_s
    return min(1.0, vt / params.d1), min(1.0, vt / params.d2)


def channel_regimes(params: PowerModelParams, pdf: PositionErrorPdf | None = None) -> tuple[float, float, float]:
    """(N1, N2, N3): expected channels whose nearest WAP is within D_h, in (D_h, D_r), and beyond D_r but within reach."""
    dens = [r for r in params.densities if r > 0]
    if not dens:
        return 0.0, 0.0, 0.0
    if pdf is None:
        pdf = position_error_pdf(params)
    n1 = n2 = n3 = 0.0
    for rho_f in dens:
        in_h = math.exp(-rho_f * math.pi * params.d_h ** 2)
        in_r = math.exp(-rho_f * math.pi * params.d_r ** 2)
        n1 += 1.0 - in_h
        n2 += -math.expm1(-rho_f * math.pi * (params.d_r ** 2 - params.d_h ** 2)) * in_h

        def reach(delta, rho_f=rho_f):
            delta = np.asarray(delta, dtype=float)
            return -np.expm1(-rho_f * math.pi * ((params.d_r + delta) ** 2 - params.d_r ** 2))

        n3 += pdf.expect(reach) * in_r
    return n1, n2, n3


def expected_channels_wlan_aware(params: PowerModelParams) -> float:
    n1, n2, n3 = channel_regimes(params)
    r1, r2 = _rates(params)
    return n1 + n2 * r1 + n3 * r2


def expected_channels_gps(params: PowerModelParams) -> float:
    return float(sum(-math.expm1(-r * math.pi * params.d_r ** 2) for r in params.densities))


def even_params(total_density: float, n_channels: int = 20, **kw) -> PowerModelParams:
    return PowerModelParams(densities=(total_density / n_channels,) * n_channels, **kw)


def analytic_curves(lambdas: Sequence[float], speeds: Sequence[float], n_channels: int = 20, **kw) -> list[dict]:
    """Rows of closed-form channel counts and powers for a grid of total densities and speeds."""
    rows = []
    for v in speeds:
        for lam in lambdas:
            p = even_params(lam, n_channels, v=v, **kw)
            n_w = expected_channels_wlan_aware(p) if lam > 0 else 0.0
            n_g = expected_channels_gps(p)
            rows.append({
                "lambda": lam, "v": v, "e_n_wlan": n_w, "e_n_gps": n_g,
                "e_p_wlan": expected_power(n_w, p), "e_p_gps": expected_power(n_g, p, True),
                "e_p_conventional": expected_power(n_channels, p),
            })
    return rows
