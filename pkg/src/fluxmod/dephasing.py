"""Dephasing under flux modulation: analytic rates and the Monte-Carlo
Ramsey protocol.

Analytic side: the 1/f rate from the k = 0 flux sensitivities with the
slowly-varying log factor lambda, the white rate as the harmonic sum with
(1 + delta_k)/4 weights, its k_uv = 1 (lowpass-filtered) variant, and the
bounded oscillation amplitudes b_k.

Monte-Carlo side: windows of synthesized flux noise are pushed through the
full nonlinear flux-to-frequency transduction, the accumulated random phase
is averaged over windows, and the decay of |<e^{i phase}>| is fit to
extract a rate and stretch exponent.

Two sampling regimes: when white noise is present the time step must
resolve the modulation (20 samples per period; the discrete variance sum
then captures every harmonic product that matters).  Slow 1/f noise is
instead transduced through the period-averaged frequency, which is exact
for noise far below the modulation frequency and permits the coarse
50 ns budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, FitQualityError
from .modulation import FourierSeries, ModulationSpec, fourier_series
from .noise import NoiseSpec, derived_rng, synth_pink
from .transmon import TWO_PI, TransmonParams, frequency, static_coeffs

__all__ = [
    "EULER_GAMMA",
    "DephasingRates",
    "DecayFit",
    "CoherenceCurve",
    "lambda_factor",
    "lambda_self_consistent",
    "analytic_rates",
    "ramsey_mc",
    "fit_decay",
    "sweep_dephasing",
    "white_mc_window",
    "SweepRow",
    "write_sweep_csv",
    "PINK_MC_DEFAULTS",
    "WHITE_MC_DEFAULTS",
]

EULER_GAMMA = 0.5772156649015329

# measurement-run-style budgets; window counts are routinely reduced for CI
PINK_MC_DEFAULTS = {"dt": 50e-9, "window_len": 250e-6, "n_windows": 4000}
WHITE_MC_DEFAULTS = {"window_len": 20e-6, "n_windows": 2000}

T_PHI_CLAMP = 10.0  # seconds; tabulated stand-in for diverging times


@dataclass(frozen=True)
class DephasingRates:
    """Analytic dephasing rates at one operating point.

    gamma_pink enters a Gaussian decay exp(-(gamma_pink t)^2); the white
    rates enter exponentially.  b_k are the dimensionless amplitudes of the
    bounded gamma(t) oscillations at harmonics of the modulation.
    """

    gamma_pink: float
    gamma_white: float
    gamma_white_filtered: float
    b_k: tuple[float, ...]
    lambda_used: float
    k_uv: int


@dataclass(frozen=True)
class DecayFit:
    gamma: float
    beta: float
    residual: float
    model: str
    censored: bool = False
    gamma_white: float = 0.0
    gamma_pink: float = 0.0


@dataclass(frozen=True)
class CoherenceCurve:
    """Window-averaged Ramsey coherence |<rho01>|/rho01(0)."""

    t: np.ndarray
    magnitude: np.ndarray
    n_windows: int

    def __post_init__(self):
        if len(self.magnitude) and abs(self.magnitude[0] - 1.0) > 1e-9:
            raise DomainError("coherence curve must start at 1")
        bound = 1.0 + 3.0 / math.sqrt(max(self.n_windows, 1))
        if len(self.magnitude) and (np.min(self.magnitude) < 0 or np.max(self.magnitude) > bound):
            raise DomainError("coherence magnitude outside [0, 1 + 3/sqrt(n)]")


def lambda_factor(f_ir: float, t: float) -> float:
    """Log factor of the 1/f dephasing rate, sqrt(3/2 - gamma_E - ln(w_ir t)).

    Valid deep in the w_ir t << 1 regime (enforced at w_ir t < 0.1).
    """
    w_ir_t = TWO_PI * f_ir * t
    if not 0 < w_ir_t < 0.1:
        raise DomainError(f"lambda factor needs 0 < w_ir*t < 0.1, got {w_ir_t}")
    return math.sqrt(1.5 - EULER_GAMMA - math.log(w_ir_t))


def lambda_self_consistent(f_ir: float, sensitivity: float, t_max: float = 1.0) -> float:
    """Lambda evaluated at the decay's own 1/e time.

    sensitivity is the rate prefactor sqrt(sum (d omega_0/d flux)^2 A^2),
    so the Gaussian 1/e time is 1/(lambda * sensitivity); a couple of
    fixed-point passes pin the slowly-varying log factor there (typically
    lambda ~ 3).
    """
    if sensitivity <= 0:
        return lambda_factor(f_ir, min(t_max, 0.01 / (TWO_PI * f_ir)))
    lam = 3.0
    for _ in range(4):
        t_e = min(1.0 / (lam * sensitivity), t_max, 0.099 / (TWO_PI * f_ir))
        lam = lambda_factor(f_ir, t_e)
    return lam


def _white_harmonic_sum(series: FourierSeries, spec: NoiseSpec, k_uv: int) -> float:
    total = 0.0
    for k in range(min(k_uv, series.K) + 1):
        w = 0.5 if k == 0 else 0.25
        total += w * (
            series.d_dc[k] ** 2 * spec.a_dc_white**2
            + series.d_ac[k] ** 2 * spec.a_ac_white**2
        )
    return total


def analytic_rates(series: FourierSeries, spec: NoiseSpec, f_m: float, lam: float) -> DephasingRates:
    """All analytic rates at the operating point described by `series`.

    The unfiltered white sum runs to k_uv = floor(f_uv / f_m) clamped to
    the series truncation; the filtered variant keeps k <= 1 only.  Pink
    analytics require the alpha = 1 spectral exponent.
    """
    if (spec.a_dc_pink > 0 or spec.a_ac_pink > 0) and spec.alpha != 1.0:
        raise DomainError("analytic 1/f rates are only defined for alpha = 1")
    k_uv = min(int(spec.f_uv / f_m), series.K)
    gamma_pink = lam * math.sqrt(
        series.d_dc[0] ** 2 * spec.a_dc_pink**2
        + series.d_ac[0] ** 2 * spec.a_ac_pink**2
    )
    gamma_white = _white_harmonic_sum(series, spec, k_uv)
    gamma_white_filtered = _white_harmonic_sum(series, spec, 1)

    w_m = TWO_PI * f_m
    b_k = []
    K = series.K
    for k in range(1, K + 1):
        conv_dc = sum(series.d_dc[k - l] * series.d_dc[l] for l in range(k + 1))
        conv_ac = sum(series.d_ac[k - l] * series.d_ac[l] for l in range(k + 1))
        corr_dc = sum(series.d_dc[k + l] * series.d_dc[l] for l in range(K - k + 1))
        corr_ac = sum(series.d_ac[k + l] * series.d_ac[l] for l in range(K - k + 1))
        b = spec.a_dc_white**2 / (4 * k * w_m) * (conv_dc + 2 * corr_dc)
        b += spec.a_ac_white**2 / (4 * k * w_m) * (conv_ac + 2 * corr_ac)
        b_k.append(b)
    return DephasingRates(
        gamma_pink=gamma_pink,
        gamma_white=gamma_white,
        gamma_white_filtered=gamma_white_filtered,
        b_k=tuple(b_k),
        lambda_used=lam,
        k_uv=k_uv,
    )


def _describe_validity_error(params: TransmonParams, phi: np.ndarray):
    from .transmon import xi_parameter

    xi = xi_parameter(params, phi)
    worst = float(np.asarray(phi).ravel()[int(np.argmax(xi))])
    raise DomainError(
        f"flux excursion to {worst:+.4f} Phi0 leaves the perturbative validity region"
    )


def _freq_checked(params: TransmonParams, phi: np.ndarray) -> np.ndarray:
    try:
        return frequency(params, phi)
    except DomainError:
        _describe_validity_error(params, phi)


def _brickwall_rows(x: np.ndarray, dt: float, cutoff: float) -> np.ndarray:
    spec = np.fft.rfft(x, axis=-1)
    f = np.fft.rfftfreq(x.shape[-1], dt)
    spec[..., f > cutoff] = 0.0
    return np.fft.irfft(spec, x.shape[-1], axis=-1)


def _pink_long_trace(amplitude: float, alpha: float, dt: float, n_needed: int,
                     seed: int, tag: str) -> np.ndarray:
    n = 1 << max(10, (n_needed - 1).bit_length())
    return synth_pink(amplitude, alpha, dt, n, seed, tag=tag).samples


_MC_QUAD = 32  # period-quadrature nodes for the slow-noise transduction


def ramsey_mc(
    params: TransmonParams,
    mod: ModulationSpec,
    spec: NoiseSpec,
    n_windows: int,
    window_len: float,
    dt: float,
    seed: int,
    store_points: int = 1500,
    shared_filter: bool = False,
) -> CoherenceCurve:
    """Monte-Carlo Ramsey decay under continuous flux modulation.

    Per window the random phase integral of the frequency deviation is
    accumulated with the full nonlinear transduction and the off-diagonal
    coherence is averaged over windows.  Deterministic given the seed and
    independent of chunked evaluation order.

    With shared_filter=True the lowpass acts once on the total flux signal
    (after the carrier multiplies the multiplicative noise) instead of on
    the dc and ac channels independently.
    """
    if n_windows < 1:
        raise DomainError("need at least one window")
    m = int(round(window_len / dt))
    if m < 16:
        raise DomainError("window too short for the requested dt")
    has_white = spec.a_dc_white > 0 or spec.a_ac_white > 0
    has_pink = spec.a_dc_pink > 0 or spec.a_ac_pink > 0
    if has_white and dt > 1.0 / (20.0 * mod.f_m) * (1 + 1e-9):
        raise DomainError(
            "white-noise runs must resolve the modulation: dt <= 1/(20 f_m)"
        )
    slow_path = not has_white
    stride = max(1, m // store_points)
    keep = np.arange(0, m + 1, stride)
    if keep[-1] != m:
        keep = np.append(keep, m)
    t_out = keep * dt

    w_m = mod.omega_m
    th = mod.theta_m
    t_grid = np.arange(m) * dt

    # deterministic reference
    if slow_path:
        theta_q = np.linspace(0.0, 2.0 * math.pi, _MC_QUAD, endpoint=False)
        cos_q = np.cos(theta_q)
        w_det = float(
            np.mean(_freq_checked(params, mod.phi_dc + mod.phi_ac * cos_q))
        )
    else:
        carrier = np.cos(w_m * t_grid + th)
        phi_det = mod.phi_dc + mod.phi_ac * carrier
        w_det = _freq_checked(params, phi_det)

    # pink noise: one long trace per channel, sliced into windows, so the
    # windows share the low-frequency wander exactly as in a measurement run
    dt_pink = dt if slow_path else max(dt, 25e-9)
    hold = int(round(dt_pink / dt)) if not slow_path else 1
    n_coarse = -(-m // hold)
    pink_dc = pink_ac = None
    if spec.a_dc_pink > 0:
        pink_dc = _pink_long_trace(spec.a_dc_pink, spec.alpha, dt_pink,
                                   n_windows * n_coarse, seed, "mc-pink-dc")
    if spec.a_ac_pink > 0:
        pink_ac = _pink_long_trace(spec.a_ac_pink, spec.alpha, dt_pink,
                                   n_windows * n_coarse, seed, "mc-pink-ac")
    if spec.lowpass_cutoff is not None and spec.lowpass_cutoff < 0.5 / dt_pink:
        if pink_dc is not None:
            pink_dc = _brickwall_rows(pink_dc, dt_pink, spec.lowpass_cutoff)
        if pink_ac is not None:
            pink_ac = _brickwall_rows(pink_ac, dt_pink, spec.lowpass_cutoff)

    if shared_filter and (slow_path or spec.lowpass_cutoff is None):
        raise DomainError("shared_filter needs white noise and a lowpass cutoff")
    white_sigma_dc = spec.a_dc_white / math.sqrt(dt)
    white_sigma_ac = spec.a_ac_white / math.sqrt(dt)
    nyq = 0.5 / dt
    white_cut = None
    if has_white:
        per_channel = None if shared_filter else spec.lowpass_cutoff
        cuts = [c for c in (per_channel, spec.f_uv) if c is not None and c < nyq]
        white_cut = min(cuts) if cuts else None

    chunk = max(1, min(n_windows, int(4e6 // m) or 1))
    acc = np.zeros(len(keep), dtype=complex)
    n_done = 0
    chunk_idx = 0
    while n_done < n_windows:
        nw = min(chunk, n_windows - n_done)
        d_dc = np.zeros((nw, m))
        d_ac = np.zeros((nw, m))
        if pink_dc is not None:
            rows = pink_dc[n_done * n_coarse : (n_done + nw) * n_coarse].reshape(nw, n_coarse)
            d_dc += np.repeat(rows, hold, axis=1)[:, :m]
        if pink_ac is not None:
            rows = pink_ac[n_done * n_coarse : (n_done + nw) * n_coarse].reshape(nw, n_coarse)
            d_ac += np.repeat(rows, hold, axis=1)[:, :m]
        if spec.a_dc_white > 0:
            w = derived_rng(seed, "mc-white-dc", chunk_idx).standard_normal((nw, m)) * white_sigma_dc
            if white_cut is not None:
                w = _brickwall_rows(w, dt, white_cut)
            d_dc += w
        if spec.a_ac_white > 0:
            w = derived_rng(seed, "mc-white-ac", chunk_idx).standard_normal((nw, m)) * white_sigma_ac
            if white_cut is not None:
                w = _brickwall_rows(w, dt, white_cut)
            d_ac += w

        if slow_path:
            # slow noise only samples the period-averaged band
            acc_w = np.zeros((nw, m))
            base_dc = mod.phi_dc + d_dc
            base_ac = mod.phi_ac + d_ac
            for cq in cos_q:
                acc_w += _freq_checked(params, base_dc + base_ac * cq)
            d_omega = acc_w / _MC_QUAD - w_det
        else:
            d_phi = d_dc + d_ac * carrier[None, :]
            if shared_filter:
                d_phi = _brickwall_rows(d_phi, dt, spec.lowpass_cutoff)
            d_omega = _freq_checked(params, phi_det[None, :] + d_phi) - w_det[None, :]

        phase = np.cumsum(d_omega, axis=1) * dt
        phase = np.concatenate([np.zeros((nw, 1)), phase], axis=1)
        acc += np.exp(1j * phase[:, keep]).sum(axis=0)
        n_done += nw
        chunk_idx += 1

    mag = np.abs(acc) / n_windows
    return CoherenceCurve(t=t_out, magnitude=mag, n_windows=n_windows)


_FIT_GAMMA_LO = 0.05
_FIT_GAMMA_HI = 2.5


def fit_decay(curve: CoherenceCurve, model: str = "stretched") -> DecayFit:
    """Fit the coherence decay to exp(-(Gamma t)^beta) or to the combined
    linear-plus-quadratic dephasing exponent.

    The stretched model is a linear least-squares fit of ln(-ln m) against
    ln t over the window where the decay is resolved; the combined model
    fits gamma(t) = a t + b t^2 and reports Gamma_white = a,
    Gamma_pink = sqrt(b).
    """
    if model not in ("stretched", "combined"):
        raise DomainError(f"unknown decay model {model!r}")
    mag = np.asarray(curve.magnitude)
    t = np.asarray(curve.t)
    good = (mag > 0) & (t > 0)
    g = -np.log(mag[good])
    tg = t[good]
    # fit only the initial decay: stop at the first crossing of the upper
    # threshold, itself capped by the window-averaging statistical floor
    floor = 2.0 / math.sqrt(max(curve.n_windows, 1))
    hi = min(_FIT_GAMMA_HI, -math.log(min(floor, 0.5)))
    crossing = np.nonzero(g >= hi)[0]
    stop = crossing[0] + 1 if len(crossing) else len(g)
    g, tg = g[:stop], tg[:stop]
    censored = not np.any(g >= 1.0)
    sel = g >= _FIT_GAMMA_LO
    if np.count_nonzero(sel) < 8:
        raise FitQualityError("too few resolved points in the decay window")
    g, tg = g[sel], tg[sel]
    noise_frac = np.mean(np.diff(g) < 0)
    if noise_frac > 0.45:
        raise FitQualityError(
            "decay is non-monotone beyond threshold", residual=float(noise_frac)
        )

    if model == "stretched":
        A = np.vstack([np.log(tg), np.ones_like(tg)]).T
        coef, *_ = np.linalg.lstsq(A, np.log(g), rcond=None)
        beta = float(coef[0])
        if not 0.5 <= beta <= 2.5:
            raise FitQualityError(
                f"stretch exponent {beta:.2f} outside the physical window [0.5, 2.5]"
            )
        gamma = float(math.exp(coef[1] / beta))
        model_mag = np.exp(-((gamma * tg) ** beta))
        residual = float(np.sqrt(np.mean((model_mag - np.exp(-g)) ** 2)))
        return DecayFit(gamma=gamma, beta=beta, residual=residual,
                        model=model, censored=censored)

    A = np.vstack([tg, tg * tg]).T
    coef, *_ = np.linalg.lstsq(A, g, rcond=None)
    a, b = float(coef[0]), float(coef[1])
    if a < 0:  # degenerate: pure quadratic refit
        b = float(np.sum(g * tg**2) / np.sum(tg**4))
        a = 0.0
    if b < 0:
        a = float(np.sum(g * tg) / np.sum(tg * tg))
        b = 0.0
    gamma_white, gamma_pink = a, math.sqrt(b)
    # effective single rate and exponent at the 1/e time
    t_e = (2.0 / (a + math.sqrt(a * a + 4 * b))) if (a > 0 or b > 0) else math.inf
    beta_eff = (a * t_e + 2 * b * t_e**2) / (a * t_e + b * t_e**2) if t_e < math.inf else 1.0
    model_g = a * tg + b * tg * tg
    residual = float(np.sqrt(np.mean((np.exp(-model_g) - np.exp(-g)) ** 2)))
    return DecayFit(gamma=1.0 / t_e if t_e < math.inf else 0.0, beta=float(beta_eff),
                    residual=residual, model=model, censored=censored,
                    gamma_white=gamma_white, gamma_pink=gamma_pink)


@dataclass(frozen=True)
class SweepRow:
    phi_ac: float
    t_phi_pink: float
    t_phi_white: float
    t_phi_white_lp: float
    beta: float
    mode: str
    clamped: bool = False


def _clamp_time(rate: float) -> tuple[float, bool]:
    if rate <= 1.0 / T_PHI_CLAMP:
        return T_PHI_CLAMP, True
    return 1.0 / rate, False


def sweep_dephasing(
    params: TransmonParams,
    spec: NoiseSpec,
    f_m: float,
    phi_ac_grid,
    mode: str = "analytic",
    phi_dc: float = 0.0,
    seed: int = 1,
    n_windows: Optional[int] = None,
    theta_m: float = 0.0,
) -> list[SweepRow]:
    """Dephasing times versus modulation amplitude (analytic or Monte-Carlo).

    Analytic mode evaluates the closed-form rates per grid point; MC mode
    runs the Ramsey protocol separately for the pink, white and filtered
    white channels that have nonzero amplitude in `spec`.  Diverging times
    are clamped at 10 s and flagged.
    """
    if mode not in ("analytic", "mc"):
        raise DomainError(f"unknown sweep mode {mode!r}")
    rows = []
    coeffs = static_coeffs(params)
    has_pink = spec.a_dc_pink > 0 or spec.a_ac_pink > 0
    has_white = spec.a_dc_white > 0 or spec.a_ac_white > 0
    for phi_ac in phi_ac_grid:
        if mode == "analytic":
            series = fourier_series(coeffs, phi_dc, phi_ac)
            sens = math.sqrt(
                series.d_dc[0] ** 2 * spec.a_dc_pink**2
                + series.d_ac[0] ** 2 * spec.a_ac_pink**2
            )
            lam = lambda_self_consistent(spec.f_ir, sens)
            rates = analytic_rates(series, spec, f_m, lam)
            tp, c1 = _clamp_time(rates.gamma_pink)
            tw, c2 = _clamp_time(rates.gamma_white)
            tl, c3 = _clamp_time(rates.gamma_white_filtered)
            beta = 2.0 if has_pink else 1.0
            rows.append(SweepRow(phi_ac, tp, tw, tl, beta, "analytic", c1 or c2 or c3))
            continue

        nw_pink = n_windows or PINK_MC_DEFAULTS["n_windows"]
        nw_white = n_windows or WHITE_MC_DEFAULTS["n_windows"]
        series = fourier_series(coeffs, phi_dc, phi_ac)
        guide = analytic_rates(series, spec, f_m, 3.0)
        tp = tw = tl = T_PHI_CLAMP
        beta = 0.0
        clamped = False
        if has_pink:
            mod_spec = ModulationSpec(phi_dc, phi_ac, f_m, theta_m)
            pink_only = NoiseSpec(
                a_dc_pink=spec.a_dc_pink, a_ac_pink=spec.a_ac_pink,
                alpha=spec.alpha, f_ir=spec.f_ir, f_uv=spec.f_uv,
            )
            curve = ramsey_mc(params, mod_spec, pink_only, nw_pink,
                              PINK_MC_DEFAULTS["window_len"], PINK_MC_DEFAULTS["dt"], seed)
            fit = fit_decay(curve, "stretched")
            tp = T_PHI_CLAMP if fit.censored else 1.0 / fit.gamma
            clamped |= fit.censored
            beta = fit.beta
        if has_white:
            mod_spec = ModulationSpec(phi_dc, phi_ac, f_m, theta_m)
            white_only = NoiseSpec(
                a_dc_white=spec.a_dc_white, a_ac_white=spec.a_ac_white,
                f_ir=spec.f_ir, f_uv=spec.f_uv,
            )
            dt = 1.0 / (20.0 * f_m)
            wl = white_mc_window(guide.gamma_white)
            curve = ramsey_mc(params, mod_spec, white_only, nw_white, wl, dt, seed)
            fit = fit_decay(curve, "stretched")
            tw = T_PHI_CLAMP if fit.censored else 1.0 / fit.gamma
            clamped |= fit.censored
            if not has_pink:
                beta = fit.beta
            filt = NoiseSpec(
                a_dc_white=spec.a_dc_white, a_ac_white=spec.a_ac_white,
                f_ir=spec.f_ir, f_uv=spec.f_uv,
                lowpass_cutoff=spec.lowpass_cutoff or 1.5 * f_m,
            )
            wl = white_mc_window(guide.gamma_white_filtered)
            curve = ramsey_mc(params, mod_spec, filt, nw_white, wl, dt, seed)
            fit = fit_decay(curve, "stretched")
            tl = T_PHI_CLAMP if fit.censored else 1.0 / fit.gamma
            clamped |= fit.censored
        rows.append(SweepRow(phi_ac, tp, tw, tl, beta, "mc", clamped))
    return rows


def white_mc_window(expected_rate: float, cap: float = 400e-6) -> float:
    """Window long enough that the fit window resolves the decay (~2.5/rate),
    kept between the 20 us default and a runtime cap."""
    if expected_rate <= 0:
        return cap
    return float(min(max(WHITE_MC_DEFAULTS["window_len"], 2.5 / expected_rate), cap))


def write_sweep_csv(path, rows: list[SweepRow]) -> None:
    with open(path, "w") as fh:
        fh.write("phi_ac_phi0,tphi_pink_s,tphi_white_s,tphi_white_lp_s,beta,mode\n")
        for r in rows:
            fh.write(
                f"{r.phi_ac:.10g},{r.t_phi_pink:.10g},{r.t_phi_white:.10g},"
                f"{r.t_phi_white_lp:.10g},{r.beta:.10g},{r.mode}\n"
            )
