"""Qubit behavior under sinusoidal flux modulation.

Harmonic (Fourier) coefficients of the modulated transition frequency and
their flux derivatives, time-averaged frequency and anharmonicity, the
erf-edged flux pulse, and location of AC sweet spots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BracketError, DomainError
from .specialfn import SeriesTolerance, bessel_j_array, erf
from .transmon import TWO_PI, StaticCoeffs, TransmonParams, anharmonicity, frequency

__all__ = [
    "ModulationSpec",
    "FourierSeries",
    "fourier_series",
    "average_frequency",
    "average_anharmonicity",
    "flux_waveform",
    "instantaneous_frequency",
    "find_ac_sweet_spot",
]

DEFAULT_K = 10


@dataclass(frozen=True)
class ModulationSpec:
    """Flux drive: parking flux, modulation amplitude/frequency/phase, pulse edges.

    Fluxes in flux quanta, f_m in Hz, times in seconds.  The erf edge width
    is derived as sigma = t_ramp / (4 sqrt(2 ln 2)).
    """

    phi_dc: float
    phi_ac: float
    f_m: float
    theta_m: float = 0.0
    t_ramp: float = 0.0
    t_f: float = math.inf

    def __post_init__(self):
        if self.phi_ac < 0:
            raise DomainError(f"phi_ac must be non-negative, got {self.phi_ac}")
        if not self.f_m > 0:
            raise DomainError(f"f_m must be positive, got {self.f_m}")
        if self.t_ramp < 0 or 2.0 * self.t_ramp > self.t_f:
            raise DomainError(
                f"need 0 <= 2 t_ramp <= t_f, got t_ramp={self.t_ramp}, t_f={self.t_f}"
            )

    @property
    def omega_m(self) -> float:
        return TWO_PI * self.f_m

    @property
    def sigma(self) -> float:
        return self.t_ramp / (4.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class FourierSeries:
    """Harmonics of the modulated qubit frequency and their flux derivatives.

    omega[k] is the coefficient of cos(k(omega_m t + theta_m)) in rad/s;
    d_dc[k] and d_ac[k] are its derivatives with respect to the parking
    flux and the modulation amplitude, in rad/s per flux quantum.
    """

    omega: tuple[float, ...]
    d_dc: tuple[float, ...]
    d_ac: tuple[float, ...]
    K: int
    phi_dc: float = 0.0
    phi_ac: float = 0.0


def fourier_series(
    coeffs: StaticCoeffs,
    phi_dc: float,
    phi_ac: float,
    K: int = DEFAULT_K,
    tol: SeriesTolerance | None = None,
) -> FourierSeries:
    """Expand the modulated band in harmonics of the modulation tone.

    omega_k = (2 - delta_k) sum_n s_n cos(n phase_dc + k pi/2) J_k(n phase_ac)
    with phases in radians; the derivative series follow from the n sin
    factor (dc) and the Bessel derivative (ac), then convert to per flux
    quantum with a factor 2 pi.
    """
    if K > 32:
        raise DomainError(f"harmonic truncation K={K} above supported 32")
    th_dc = TWO_PI * phi_dc
    th_ac = TWO_PI * phi_ac
    s = coeffs.s
    omega = [0.0] * (K + 1)
    d_dc = [0.0] * (K + 1)
    d_ac = [0.0] * (K + 1)
    for n, s_n in enumerate(s):
        jn = bessel_j_array(K + 1, n * th_ac)
        jm1 = [-jn[1]] + jn[:-1]  # J_{k-1}, using J_{-1} = -J_1
        for k in range(K + 1):
            pref = 2.0 - (1.0 if k == 0 else 0.0)
            c = math.cos(n * th_dc + 0.5 * math.pi * k)
            sn_ = math.sin(n * th_dc + 0.5 * math.pi * k)
            omega[k] += pref * s_n * c * jn[k]
            d_dc[k] += -pref * n * s_n * sn_ * jn[k]
            d_ac[k] += -pref * n * s_n * c * 0.5 * (jn[k + 1] - jm1[k])
    d_dc = [TWO_PI * v for v in d_dc]
    d_ac = [TWO_PI * v for v in d_ac]
    return FourierSeries(
        omega=tuple(omega), d_dc=tuple(d_dc), d_ac=tuple(d_ac), K=K,
        phi_dc=phi_dc, phi_ac=phi_ac,
    )


def average_frequency(series: FourierSeries) -> float:
    """Time-averaged qubit frequency under modulation, the k = 0 harmonic."""
    return series.omega[0]


_QUAD_POINTS = 64


def average_anharmonicity(params: TransmonParams, phi_dc: float, phi_ac: float) -> float:
    """Anharmonicity averaged over one modulation period.

    Periodic trapezoid quadrature (spectrally accurate for this smooth
    integrand); raises DomainError if the flux excursion leaves the
    perturbative validity region.
    """
    theta = np.linspace(0.0, 2.0 * math.pi, _QUAD_POINTS, endpoint=False)
    return float(np.mean(anharmonicity(params, phi_dc + phi_ac * np.cos(theta))))


def _envelope(spec: ModulationSpec, t):
    if spec.t_ramp == 0.0:
        return np.ones_like(np.asarray(t, dtype=float))
    sig = spec.sigma
    t = np.asarray(t, dtype=float)
    e = np.vectorize(erf)
    return 0.5 * (e((t - spec.t_ramp) / sig) - e((t + spec.t_ramp - spec.t_f) / sig))


def flux_waveform(spec: ModulationSpec, t):
    """Flux bias at time t: parking plus erf-windowed modulation tone."""
    t_arr = np.asarray(t, dtype=float)
    out = spec.phi_dc + spec.phi_ac * _envelope(spec, t_arr) * np.cos(
        spec.omega_m * t_arr + spec.theta_m
    )
    return float(out) if np.ndim(t) == 0 else out


def instantaneous_frequency(params: TransmonParams, spec: ModulationSpec, t):
    """Qubit frequency (rad/s) along the pulse; t must lie in [0, t_f]."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > spec.t_f):
        raise DomainError("time outside the pulse window [0, t_f]")
    return frequency(params, flux_waveform(spec, t))


def _k0_derivatives(coeffs: StaticCoeffs, phi_dc: float, phi_ac: float) -> tuple[float, float]:
    # (d omega_0 / d Phi_dc, d omega_0 / d Phi_ac) without the full series.
    th_dc = TWO_PI * phi_dc
    th_ac = TWO_PI * phi_ac
    ddc = 0.0
    dac = 0.0
    for n, s_n in enumerate(coeffs.s):
        if n == 0:
            continue
        j = bessel_j_array(1, n * th_ac)
        ddc -= n * s_n * math.sin(n * th_dc) * j[0]
        dac -= n * s_n * math.cos(n * th_dc) * j[1]
    return TWO_PI * ddc, TWO_PI * dac


def find_ac_sweet_spot(
    coeffs: StaticCoeffs,
    phi_dc: float,
    bracket: tuple[float, float],
    tol: float = 1e-6,
) -> float:
    """Modulation amplitude giving first-order insensitivity to 1/f flux noise.

    At a symmetric parking point (all dc-derivatives vanish identically)
    this is the root of d(average frequency)/d(Phi_ac): bisection to 1e-4
    then secant polish.  At generic parking both k = 0 flux sensitivities
    matter, so the minimum of their quadrature sum is located instead; the
    1/f dephasing rate is proportional to that sensitivity for equal noise
    amplitudes.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not hi > lo:
        raise DomainError(f"bad bracket {bracket}")
    probe = np.linspace(lo, hi, 17)
    scale = max(abs(v) for v in coeffs.s[1:]) * TWO_PI
    dc_vals = [_k0_derivatives(coeffs, phi_dc, x)[0] for x in probe]
    symmetric_parking = max(abs(v) for v in dc_vals) < 1e-9 * scale

    if symmetric_parking:
        f = lambda x: _k0_derivatives(coeffs, phi_dc, x)[1]
        fa, fb = f(lo), f(hi)
        if fa == 0.0:
            return lo
        if fb == 0.0:
            return hi
        if fa * fb > 0:
            raise BracketError(
                f"derivative does not change sign on [{lo}, {hi}] at phi_dc={phi_dc}"
            )
        a, b = lo, hi
        while b - a > 1e-4:
            mid = 0.5 * (a + b)
            fm = f(mid)
            if fm == 0.0:
                a = b = mid
                break
            if fa * fm < 0:
                b, fb = mid, fm
            else:
                a, fa = mid, fm
        x0, x1 = a, b
        f0, f1 = f(x0), f(x1)
        for _ in range(60):
            if f1 == f0:
                break
            x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
            x2 = min(max(x2, lo), hi)
            x0, f0, x1, f1 = x1, f1, x2, f(x2)
            if abs(x1 - x0) < tol:
                break
        root = x1
        # second-derivative check: the average frequency has an extremum here
        h = 1e-4
        curv = (f(root + h) - f(root - h)) / (2 * h)
        if abs(curv) * h < 1e-12 * scale:
            raise BracketError("flat derivative at candidate sweet spot; no extremum")
        return root

    def sensitivity_sq(x):
        ddc, dac = _k0_derivatives(coeffs, phi_dc, x)
        return ddc * ddc + dac * dac

    res = minimize_scalar(sensitivity_sq, bounds=(lo, hi), method="bounded",
                          options={"xatol": tol * 0.1})
    x_star = float(res.x)
    if min(x_star - lo, hi - x_star) < 10 * tol:
        raise BracketError(
            f"sensitivity minimum at bracket edge on [{lo}, {hi}]; widen the bracket"
        )
    return x_star
