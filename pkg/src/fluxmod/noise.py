"""Synthesis of white and 1/f^alpha flux-noise traces and PSD estimation.

Spectral conventions used throughout the package: the two-sided power
spectral density in frequency f, so a white amplitude A_w (Phi0/sqrt(Hz))
gives S(f) = A_w^2 and a pink amplitude A (Phi0) gives S(f) = A^2/|f|^alpha,
which pins A to the amplitude at 1 Hz.  Sample variance of white noise is
A_w^2/dt, the discrete form of delta correlation.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError

__all__ = [
    "NoiseSpec",
    "NoiseTrace",
    "derived_rng",
    "synth_white",
    "synth_pink",
    "lowpass",
    "estimate_psd",
    "write_trace_csv",
    "write_psd_csv",
]


@dataclass(frozen=True)
class NoiseSpec:
    """Amplitudes and cutoffs of the flux-noise model.

    Pink amplitudes in Phi0 (PSD value at 1 Hz), white amplitudes in
    Phi0/sqrt(Hz); dc quantities ride on the parking flux (additive noise)
    and ac quantities on the modulation amplitude (multiplicative noise).
    """

    a_dc_pink: float = 0.0
    a_ac_pink: float = 0.0
    a_dc_white: float = 0.0
    a_ac_white: float = 0.0
    alpha: float = 1.0
    f_ir: float = 1.0
    f_uv: float = 1e10
    lowpass_cutoff: Optional[float] = None

    def __post_init__(self):
        for name in ("a_dc_pink", "a_ac_pink", "a_dc_white", "a_ac_white"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")
        if not (0 < self.f_ir < self.f_uv):
            raise DomainError(f"need 0 < f_ir < f_uv, got {self.f_ir}, {self.f_uv}")
        if not (0.5 <= self.alpha <= 1.5):
            raise DomainError(f"alpha must be in [0.5, 1.5], got {self.alpha}")
        if self.lowpass_cutoff is not None and self.lowpass_cutoff <= 0:
            raise DomainError("lowpass_cutoff must be positive when set")


@dataclass(frozen=True)
class NoiseTrace:
    """A sampled flux-noise realization (samples in Phi0)."""

    dt: float
    samples: np.ndarray
    kind: str
    seed: int

    def __post_init__(self):
        if len(self.samples) < 2:
            raise DomainError("trace needs at least 2 samples")
        if not np.all(np.isfinite(self.samples)):
            raise DomainError("trace contains non-finite samples")

    @property
    def nyquist(self) -> float:
        return 0.5 / self.dt


def derived_rng(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Deterministic per-purpose stream: (master seed, crc32(tag), index)."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(tag.encode()), int(index)])
    return np.random.default_rng(ss)


def synth_white(amplitude: float, dt: float, n: int, seed: int, tag: str = "white") -> NoiseTrace:
    """i.i.d. Gaussian trace with per-sample variance amplitude^2/dt."""
    if n < 2:
        raise DomainError(f"need n >= 2 samples, got {n}")
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    rng = derived_rng(seed, tag)
    samples = rng.standard_normal(n) * (amplitude / np.sqrt(dt))
    return NoiseTrace(dt=dt, samples=samples, kind="white", seed=seed)


def synth_pink(amplitude: float, alpha: float, dt: float, n: int, seed: int,
               tag: str = "pink") -> NoiseTrace:
    """Gaussian trace with two-sided PSD amplitude^2/|f|^alpha.

    Spectral shaping: draw Hermitian complex Gaussian bins with variance
    proportional to the target PSD and inverse transform.  The DC bin is
    zeroed, an implicit infrared cutoff at 1/(n dt).
    """
    if n < 1024 or (n & (n - 1)) != 0:
        raise DomainError(f"n must be a power of two >= 1024, got {n}")
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    rng = derived_rng(seed, tag)
    half = n // 2
    f = np.fft.rfftfreq(n, dt)
    # bin magnitude: <|X_j|^2> = n S(f_j) / dt reproduces the target density;
    # the amplitude multiplies at the end so scaling is exact bit-for-bit
    mag = np.zeros(half + 1)
    mag[1:] = np.sqrt(n / np.abs(f[1:]) ** alpha / dt)
    re = rng.standard_normal(half + 1)
    im = rng.standard_normal(half + 1)
    spec = mag * (re + 1j * im) / np.sqrt(2.0)
    spec[0] = 0.0
    spec[half] = mag[half] * re[half]  # Nyquist bin is real
    samples = amplitude * np.fft.irfft(spec, n)
    return NoiseTrace(dt=dt, samples=samples, kind="pink", seed=seed)


def lowpass(trace: NoiseTrace, cutoff: float, order: Optional[int] = None) -> NoiseTrace:
    """Spectrally filtered copy of the trace.

    Brick wall by default (bins above cutoff zeroed); pass order = 4 for a
    smooth Butterworth-magnitude rolloff instead.
    """
    if cutoff > trace.nyquist:
        raise DomainError(
            f"cutoff {cutoff} Hz above Nyquist {trace.nyquist} Hz"
        )
    spec = np.fft.rfft(trace.samples)
    f = np.fft.rfftfreq(len(trace.samples), trace.dt)
    if order is None:
        spec[f > cutoff] = 0.0
    else:
        spec *= 1.0 / np.sqrt(1.0 + (f / cutoff) ** (2 * order))
    samples = np.fft.irfft(spec, len(trace.samples))
    return NoiseTrace(dt=trace.dt, samples=samples, kind="filtered", seed=trace.seed)


def estimate_psd(trace: NoiseTrace, n_segments: int) -> tuple[np.ndarray, np.ndarray]:
    """Segment-averaged periodogram, two-sided-in-f values on the f >= 0 grid.

    Hann window with power correction; no detrending, so the estimate
    integrates back to the trace variance.
    """
    if n_segments < 4:
        raise DomainError(f"need at least 4 segments, got {n_segments}")
    m = len(trace.samples) // n_segments
    if m < 8:
        raise DomainError("trace too short for the requested segment count")
    w = np.hanning(m)
    u = np.mean(w * w)
    acc = np.zeros(m // 2 + 1)
    for i in range(n_segments):
        seg = trace.samples[i * m : (i + 1) * m]
        acc += np.abs(np.fft.rfft(w * seg)) ** 2
    s = acc * trace.dt / (m * u * n_segments)
    f = np.fft.rfftfreq(m, trace.dt)
    return f, s


def write_trace_csv(path, trace: NoiseTrace) -> None:
    t = np.arange(len(trace.samples)) * trace.dt
    with open(path, "w") as fh:
        fh.write("t_s,dphi_phi0\n")
        for ti, xi in zip(t, trace.samples):
            fh.write(f"{ti:.12g},{xi:.12g}\n")


def write_psd_csv(path, f: np.ndarray, s: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("f_hz,psd_phi0sq_per_hz\n")
        for fi, si in zip(f, s):
            fh.write(f"{fi:.12g},{si:.12g}\n")
