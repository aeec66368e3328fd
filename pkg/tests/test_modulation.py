import math

import numpy as np
import pytest

from fluxmod.errors import BracketError, DomainError
from fluxmod.modulation import (
    ModulationSpec,
    average_anharmonicity,
    average_frequency,
    find_ac_sweet_spot,
    flux_waveform,
    fourier_series,
    instantaneous_frequency,
)
from fluxmod.transmon import anharmonicity, frequency

TWO_PI = 2 * math.pi


def quad_harmonic(params, phi_dc, phi_ac, k, n=4096):
    """Independent oracle: periodic quadrature of the modulated band."""
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    w = frequency(params, phi_dc + phi_ac * np.cos(th))
    return (2.0 - (k == 0)) * float(np.mean(w * np.cos(k * th)))


class TestFourierSeries:
    def test_no_modulation(self, dev4, coeffs4):
        fs = fourier_series(coeffs4, 0.12, 0.0, K=6)
        assert fs.omega[0] == pytest.approx(frequency(dev4, 0.12), rel=1e-10)
        assert all(abs(w) < 1e-8 for w in fs.omega[1:])

    def test_parity_at_symmetric_parking(self, coeffs4):
        fs = fourier_series(coeffs4, 0.0, 0.3, K=8)
        scale = abs(fs.omega[0])
        d_scale = max(abs(v) for v in fs.d_ac) + max(abs(v) for v in fs.d_dc)
        for k in (1, 3, 5, 7):
            assert abs(fs.omega[k]) < 1e-10 * scale
            assert abs(fs.d_ac[k]) < 1e-10 * d_scale
        for k in (0, 2, 4, 6):
            assert abs(fs.d_dc[k]) < 1e-10 * d_scale

    def test_against_quadrature(self, dev4, coeffs4):
        rng = np.random.default_rng(7)
        for _ in range(20):
            pdc = float(rng.uniform(-0.4, 0.4))
            pac = float(rng.uniform(0.02, 0.7))
            fs = fourier_series(coeffs4, pdc, pac, K=8)
            for k in range(7):
                oracle = quad_harmonic(dev4, pdc, pac, k)
                if abs(oracle) > 1e-4 * abs(fs.omega[0]):
                    assert fs.omega[k] == pytest.approx(oracle, rel=1e-7)

    def test_dc_ac_identity(self, coeffs4):
        rng = np.random.default_rng(8)
        for _ in range(50):
            pdc = float(rng.uniform(-0.5, 0.5))
            pac = float(rng.uniform(0.0, 0.75))
            fs = fourier_series(coeffs4, pdc, pac, K=4)
            scale = max(abs(fs.d_dc[1]), abs(fs.d_ac[0]), 1e-12 * abs(fs.omega[0]))
            assert abs(fs.d_dc[1] - 2.0 * fs.d_ac[0]) < 1e-8 * scale

    def test_derivatives_match_finite_differences(self, coeffs4):
        pdc, pac = 0.13, 0.37
        h = 1e-5
        fs = fourier_series(coeffs4, pdc, pac, K=6)
        up = fourier_series(coeffs4, pdc + h, pac, K=6)
        dn = fourier_series(coeffs4, pdc - h, pac, K=6)
        for k in range(7):
            fd = (up.omega[k] - dn.omega[k]) / (2 * h)
            if abs(fd) > 1e-6 * abs(fs.omega[0]):
                assert fs.d_dc[k] == pytest.approx(fd, rel=1e-4)
        up = fourier_series(coeffs4, pdc, pac + h, K=6)
        dn = fourier_series(coeffs4, pdc, pac - h, K=6)
        for k in range(7):
            fd = (up.omega[k] - dn.omega[k]) / (2 * h)
            if abs(fd) > 1e-6 * abs(fs.omega[0]):
                assert fs.d_ac[k] == pytest.approx(fd, rel=1e-4)

    def test_even_harmonics_quadratic_in_parking_offset(self, coeffs4):
        base = fourier_series(coeffs4, 0.0, 0.35, K=4)
        for eps in (1e-3, 2e-3):
            fs = fourier_series(coeffs4, eps, 0.35, K=4)
            for k in (0, 2, 4):
                delta = abs(fs.omega[k] - base.omega[k])
                # first-order term absent: difference scales as eps^2
                assert delta < 50.0 * abs(base.omega[0]) * eps**2

    def test_truncation_guard(self, coeffs4):
        with pytest.raises(DomainError):
            fourier_series(coeffs4, 0.0, 0.3, K=40)


class TestAverages:
    def test_average_frequency_unmodulated(self, dev4, coeffs4):
        fs = fourier_series(coeffs4, 0.0, 0.0, K=2)
        assert average_frequency(fs) == pytest.approx(TWO_PI * 5.1e9, rel=1e-6)

    def test_average_frequency_minimum_near_sweet_spot(self, coeffs4):
        grid = np.linspace(0.0, 0.8, 81)
        avg = [fourier_series(coeffs4, 0.0, float(p), K=2).omega[0] for p in grid]
        assert grid[int(np.argmin(avg))] == pytest.approx(0.6, abs=0.02)

    def test_average_frequency_matches_time_average(self, dev4, coeffs4):
        rng = np.random.default_rng(9)
        for _ in range(5):
            pdc = float(rng.uniform(-0.3, 0.3))
            pac = float(rng.uniform(0.05, 0.6))
            fs = fourier_series(coeffs4, pdc, pac, K=2)
            assert average_frequency(fs) == pytest.approx(
                quad_harmonic(dev4, pdc, pac, 0), rel=1e-8
            )

    def test_average_anharmonicity(self, dev4):
        assert average_anharmonicity(dev4, 0.2, 0.0) == pytest.approx(
            anharmonicity(dev4, 0.2), rel=1e-12
        )
        val = average_anharmonicity(dev4, 0.0, 0.3)
        lo = anharmonicity(dev4, 0.0)
        hi = anharmonicity(dev4, 0.5)
        assert min(lo, hi) <= val <= max(lo, hi)
        assert average_anharmonicity(dev4, -0.15, 0.3) == pytest.approx(
            average_anharmonicity(dev4, 0.15, 0.3), rel=1e-12
        )


class TestPulse:
    def test_edges(self, dev4):
        spec = ModulationSpec(0.1, 0.3, 3e8, t_ramp=10e-9, t_f=200e-9)
        w0 = instantaneous_frequency(dev4, spec, 0.0)
        assert w0 == pytest.approx(frequency(dev4, 0.1), rel=1e-5)
        # mid-pulse envelope saturates to phi_ac: check at a carrier maximum
        t_peak = round(3e8 * 100e-9) / 3e8
        assert flux_waveform(spec, t_peak) == pytest.approx(0.1 + 0.3, abs=1e-6 * 0.3)

    def test_square_pulse_limit(self, dev4):
        spec0 = ModulationSpec(0.0, 0.25, 3e8, t_ramp=0.0, t_f=100e-9)
        ts = np.linspace(0, 100e-9, 50)
        expected = 0.25 * np.cos(TWO_PI * 3e8 * ts)
        assert np.allclose(flux_waveform(spec0, ts), expected, atol=1e-15)

    def test_window_guard(self, dev4):
        spec = ModulationSpec(0.0, 0.2, 3e8, t_ramp=5e-9, t_f=100e-9)
        with pytest.raises(DomainError):
            instantaneous_frequency(dev4, spec, 150e-9)

    def test_spec_validation(self):
        with pytest.raises(DomainError):
            ModulationSpec(0.0, -0.1, 3e8)
        with pytest.raises(DomainError):
            ModulationSpec(0.0, 0.1, 3e8, t_ramp=60e-9, t_f=100e-9)
        spec = ModulationSpec(0.0, 0.1, 3e8, t_ramp=10e-9, t_f=100e-9)
        assert spec.sigma == pytest.approx(10e-9 / (4 * math.sqrt(2 * math.log(2))))


class TestSweetSpot:
    def test_primary(self, coeffs4):
        star = find_ac_sweet_spot(coeffs4, 0.0, (0.4, 0.8))
        assert 0.58 <= star <= 0.64
        assert star == pytest.approx(0.61, abs=0.02)
        # the k=1 dc-derivative vanishes with it, via the identity
        fs = fourier_series(coeffs4, 0.0, star, K=2)
        scale = max(abs(v) for v in fs.d_ac) + abs(fs.d_dc[1])
        assert abs(fs.d_dc[1]) < 1e-5 * scale

    def test_secondary_parking(self, coeffs4):
        star = find_ac_sweet_spot(coeffs4, 0.25, (0.2, 0.6))
        assert 0.36 <= star <= 0.42

    def test_bracket_error(self, coeffs4):
        with pytest.raises(BracketError):
            find_ac_sweet_spot(coeffs4, 0.0, (0.05, 0.3))
