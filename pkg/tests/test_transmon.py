import math

import numpy as np
import pytest

from fluxmod.errors import CalibrationError, DomainError
from fluxmod.transmon import (
    PERTURBATION_TABLE,
    QubitBand,
    TransmonParams,
    anharmonicity,
    calibrate,
    effective_ej,
    frequency,
    static_coeffs,
    xi_parameter,
)

TWO_PI = 2 * math.pi


class TestEffectiveEj:
    def test_extremes(self, dev4):
        assert effective_ej(dev4, 0.0) == pytest.approx(dev4.e_j1 + dev4.e_j2, rel=1e-14)
        assert effective_ej(dev4, 0.5) == pytest.approx(dev4.e_j1 - dev4.e_j2, rel=1e-12)
        assert effective_ej(dev4, 0.25) == pytest.approx(
            math.hypot(dev4.e_j1, dev4.e_j2), rel=1e-14
        )

    def test_periodic_and_even(self, dev4):
        rng = np.random.default_rng(0)
        phis = rng.uniform(-2, 2, 50)
        assert np.allclose(effective_ej(dev4, phis), effective_ej(dev4, -phis))
        assert np.allclose(effective_ej(dev4, phis), effective_ej(dev4, phis + 1.0))


class TestFrequency:
    def test_calibrated_band_edges(self, dev4):
        assert frequency(dev4, 0.0) == pytest.approx(TWO_PI * 5.1e9, rel=1e-6)
        assert frequency(dev4, 0.5) == pytest.approx(TWO_PI * 4.1e9, rel=1e-6)

    def test_even_periodic(self, dev4):
        rng = np.random.default_rng(1)
        phis = rng.uniform(-1, 1, 40)
        assert np.allclose(frequency(dev4, phis), frequency(dev4, -phis), rtol=1e-12)
        assert np.allclose(frequency(dev4, phis), frequency(dev4, phis + 1.0), rtol=1e-12)

    def test_leading_order(self, dev4):
        # sqrt(8 E_C E_Jeff) - E_C with O(xi) corrections
        w = frequency(dev4, 0.0)
        lead = math.sqrt(8 * dev4.e_c * effective_ej(dev4, 0.0)) - dev4.e_c
        xi = xi_parameter(dev4, 0.0)
        assert abs(w - lead) / w < xi

    def test_validity_guard(self):
        with pytest.raises(DomainError):
            TransmonParams(TWO_PI * 0.4e9, TWO_PI * 10e9, TWO_PI * 9.9e9)


class TestAnharmonicity:
    def test_calibrated_value(self, dev4):
        assert anharmonicity(dev4, 0.0) == pytest.approx(TWO_PI * 0.2e9, rel=0.02)

    def test_derivative_relation(self, dev4):
        # (eta'/omega') / (-(9/4)(eta/omega)^2) -> 1, finite differences
        h = 1e-6
        for phi in (0.1, 0.3, 0.45):
            etap = (anharmonicity(dev4, phi + h) - anharmonicity(dev4, phi - h)) / (2 * h)
            omp = (frequency(dev4, phi + h) - frequency(dev4, phi - h)) / (2 * h)
            target = -(9.0 / 4.0) * (anharmonicity(dev4, phi) / frequency(dev4, phi)) ** 2
            assert (etap / omp) / target == pytest.approx(1.0, abs=0.05)

    def test_even(self, dev4):
        rng = np.random.default_rng(2)
        phis = rng.uniform(-0.6, 0.6, 20)
        assert np.allclose(anharmonicity(dev4, phis), anharmonicity(dev4, -phis), rtol=1e-12)


class TestCalibrate:
    @pytest.mark.parametrize("band", [(5.1e9, 4.1e9, 0.2e9), (5.1e9, 4.5e9, 0.2e9)])
    def test_round_trip(self, band):
        qb = QubitBand(*band)
        params = calibrate(qb)
        assert frequency(params, 0.0) == pytest.approx(TWO_PI * qb.f_max, rel=1e-6)
        assert frequency(params, 0.5) == pytest.approx(TWO_PI * qb.f_min, rel=1e-6)
        assert anharmonicity(params, 0.0) == pytest.approx(TWO_PI * qb.eta0, rel=1e-6)

    def test_asymmetry_monotone_in_band_floor(self):
        # sweep oracle: raising f_min squeezes the junction asymmetry
        ratios = []
        for f_min in np.linspace(4.1e9, 5.0e9, 8):
            p = calibrate(QubitBand(5.1e9, float(f_min), 0.2e9))
            ratios.append(p.e_j2 / p.e_j1)
        assert all(a > b for a, b in zip(ratios, ratios[1:]))

    def test_unreachable_band(self):
        # band floor so deep that xi leaves the perturbative region
        with pytest.raises((CalibrationError, DomainError)):
            calibrate(QubitBand(5.1e9, 1.0e9, 0.2e9))

    def test_band_validation(self):
        with pytest.raises(DomainError):
            QubitBand(4.0e9, 5.0e9, 0.2e9)
        with pytest.raises(DomainError):
            QubitBand(5.0e9, 4.0e9, 0.0)


class TestPerturbationTable:
    def test_exact_rationals(self):
        assert PERTURBATION_TABLE[-1] == 4.0
        assert PERTURBATION_TABLE[0] == -1.0
        assert PERTURBATION_TABLE[1] == -1.0 / 4.0
        assert PERTURBATION_TABLE[2] == -21.0 / 2**7
        assert PERTURBATION_TABLE[3] == -19.0 / 2**7
        assert PERTURBATION_TABLE[4] == -5319.0 / 2**15
        assert PERTURBATION_TABLE[5] == -6649.0 / 2**15
        assert PERTURBATION_TABLE[6] == -1180581.0 / 2**22
        assert PERTURBATION_TABLE[7] == -446287.0 / 2**20
        assert PERTURBATION_TABLE[8] == -1489138635.0 / 2**31


class TestStaticCoeffs:
    def test_reconstruction(self, dev4, coeffs4):
        phis = np.linspace(-0.75, 0.75, 32)
        rec = coeffs4.evaluate(phis)
        ref = frequency(dev4, phis)
        assert np.max(np.abs(rec - ref) / ref) < 1e-8

    def test_endpoint_sums(self, dev4, coeffs4):
        assert sum(coeffs4.s) == pytest.approx(frequency(dev4, 0.0), rel=1e-8)
        alt = sum((-1) ** n * s for n, s in enumerate(coeffs4.s))
        assert alt == pytest.approx(frequency(dev4, 0.5), rel=1e-8)

    def test_coefficient_decay(self, coeffs4):
        s = coeffs4.s
        for n in range(2, len(s) - 1):
            assert abs(s[n + 1]) < abs(s[n])

    def test_table_carried(self, coeffs4):
        assert coeffs4.perturbation_table[-1] == 4.0
        assert coeffs4.perturbation_table[0] == -1.0
