"""Static model of the flux-tunable transmon.

The qubit frequency is evaluated from the charging energy and the two
junction energies through a 10th-order expansion in the small parameter
xi = sqrt(2 E_C / E_Jeff), and equivalently as a cosine series in the
flux phase whose coefficients feed the modulation harmonics.  All internal
energies are angular (rad/s); Hz and flux quanta appear only at the API
boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, ConvergenceError, DomainError
from .specialfn import SeriesTolerance, hyp2f1, rising_factorial

__all__ = [
    "PERTURBATION_TABLE",
    "TransmonParams",
    "QubitBand",
    "StaticCoeffs",
    "effective_ej",
    "xi_parameter",
    "frequency",
    "anharmonicity",
    "calibrate",
    "static_coeffs",
]

TWO_PI = 2.0 * math.pi

# Rational expansion coefficients of the transition frequency in xi,
# omega_T = E_C * sum_p c_p xi^p for p = -1 .. 8.  The leading pair
# reproduces sqrt(8 E_C E_J) - E_C.
PERTURBATION_TABLE: dict[int, float] = {
    -1: 4.0,
    0: -1.0,
    1: -1.0 / 2**2,
    2: -21.0 / 2**7,
    3: -19.0 / 2**7,
    4: -5319.0 / 2**15,
    5: -6649.0 / 2**15,
    6: -1180581.0 / 2**22,
    7: -446287.0 / 2**20,
    8: -1489138635.0 / 2**31,
}

_XI_MAX = 0.5


@dataclass(frozen=True)
class TransmonParams:
    """Circuit energies of the tunable transmon, angular units (rad/s)."""

    e_c: float
    e_j1: float
    e_j2: float

    def __post_init__(self):
        if not (self.e_c > 0):
            raise DomainError(f"E_C must be positive, got {self.e_c}")
        if not (self.e_j1 >= self.e_j2 > 0):
            raise DomainError(
                f"junction energies must satisfy E_J1 >= E_J2 > 0, got {self.e_j1}, {self.e_j2}"
            )
        xi_half = math.sqrt(2.0 * self.e_c / (self.e_j1 - self.e_j2)) if self.e_j1 > self.e_j2 else math.inf
        if xi_half >= _XI_MAX:
            raise DomainError(
                f"xi at half flux quantum is {xi_half:.3f}, outside the perturbative regime (< {_XI_MAX})"
            )

    @property
    def xi_bar(self) -> float:
        """4 E_C^2 / (E_J1^2 + E_J2^2), the quartic expansion scale."""
        return 4.0 * self.e_c**2 / (self.e_j1**2 + self.e_j2**2)

    @property
    def chi(self) -> float:
        """2 E_J1 E_J2 / (E_J1^2 + E_J2^2), the junction-asymmetry mixer."""
        return 2.0 * self.e_j1 * self.e_j2 / (self.e_j1**2 + self.e_j2**2)


@dataclass(frozen=True)
class QubitBand:
    """Measured band edges in Hz: top of band, bottom of band, anharmonicity at the top."""

    f_max: float
    f_min: float
    eta0: float

    def __post_init__(self):
        if not (self.f_max > self.f_min > 0):
            raise DomainError(f"band requires f_max > f_min > 0, got {self.f_max}, {self.f_min}")
        if not (0 < self.eta0 < self.f_min):
            raise DomainError(f"anharmonicity must be in (0, f_min), got {self.eta0}")


def effective_ej(params: TransmonParams, phi):
    """Effective Josephson energy at flux phi (units of the flux quantum)."""
    c = np.cos(TWO_PI * np.asarray(phi, dtype=float))
    ej2 = params.e_j1**2 + params.e_j2**2 + 2.0 * params.e_j1 * params.e_j2 * c
    out = np.sqrt(ej2)
    return float(out) if np.isscalar(phi) or np.ndim(phi) == 0 else out


def xi_parameter(params: TransmonParams, phi):
    """Expansion parameter xi(phi) = sqrt(2 E_C / E_Jeff(phi))."""
    return np.sqrt(2.0 * params.e_c / effective_ej(params, phi))


def _check_xi(xi) -> None:
    bad = np.max(xi)
    if bad >= _XI_MAX:
        raise DomainError(
            f"xi = {bad:.4f} violates the perturbative validity bound {_XI_MAX}"
        )


def _freq_from_xi(e_c: float, xi):
    acc = np.zeros_like(xi) + PERTURBATION_TABLE[8]
    for p in range(7, -1, -1):
        acc = acc * xi + PERTURBATION_TABLE[p]
    return e_c * (PERTURBATION_TABLE[-1] / xi + acc)


def frequency(params: TransmonParams, phi):
    """Qubit transition frequency (rad/s) at flux phi (flux quanta).

    Even and periodic in phi; raises DomainError outside the perturbative
    validity region xi < 0.5.
    """
    xi = xi_parameter(params, phi)
    _check_xi(xi)
    out = _freq_from_xi(params.e_c, xi)
    return float(out) if np.ndim(out) == 0 else out


def anharmonicity(params: TransmonParams, phi):
    """Transmon anharmonicity (rad/s) at flux phi.

    eta = E_C / (1 - (9/4) E_C / omega), the unique model that reduces to
    E_C (1 + 9 xi / 16) at leading order while satisfying
    eta'/omega' = -(9/4)(eta/omega)^2 identically in flux.
    """
    w = frequency(params, phi)
    out = params.e_c / (1.0 - 2.25 * params.e_c / w)
    return float(out) if np.ndim(out) == 0 else out


def _band_residual(e_c: float, e_j1: float, e_j2: float, band: QubitBand) -> np.ndarray:
    p = TransmonParams(e_c, e_j1, e_j2)
    return np.array(
        [
            frequency(p, 0.0) / (TWO_PI * band.f_max) - 1.0,
            frequency(p, 0.5) / (TWO_PI * band.f_min) - 1.0,
            anharmonicity(p, 0.0) / (TWO_PI * band.eta0) - 1.0,
        ]
    )


def calibrate(band: QubitBand, rel_tol: float = 1e-10, max_iter: int = 100) -> TransmonParams:
    """Invert the forward model onto measured band edges.

    Damped Newton on (E_C, E_J1, E_J2) with an asymptotic starting guess;
    raises CalibrationError with the residual if no physical solution is
    reached.
    """
    w_max = TWO_PI * band.f_max
    w_min = TWO_PI * band.f_min
    e_c = TWO_PI * band.eta0
    ej_top = (w_max + e_c) ** 2 / (8.0 * e_c)
    ej_bot = (w_min + e_c) ** 2 / (8.0 * e_c)
    x = np.array([e_c, 0.5 * (ej_top + ej_bot), 0.5 * (ej_top - ej_bot)])

    def residual_of(vec):
        return _band_residual(vec[0], vec[1], vec[2], band)

    try:
        res = residual_of(x)
    except DomainError as exc:
        raise CalibrationError(f"starting guess outside physical region: {exc}") from exc
    for _ in range(max_iter):
        norm = float(np.max(np.abs(res)))
        if norm < rel_tol:
            return TransmonParams(*x)
        jac = np.empty((3, 3))
        for j in range(3):
            h = 1e-7 * abs(x[j])
            xp = x.copy()
            xp[j] += h
            jac[:, j] = (residual_of(xp) - res) / h
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise CalibrationError("singular Jacobian during calibration", residual=norm) from exc
        scale = 1.0
        for _ in range(40):
            trial = x + scale * step
            if trial[0] > 0 and trial[1] > trial[2] > 0:
                try:
                    trial_res = residual_of(trial)
                except DomainError:
                    trial_res = None
                if trial_res is not None and np.max(np.abs(trial_res)) < norm:
                    x, res = trial, trial_res
                    break
            scale *= 0.5
        else:
            raise CalibrationError(
                "calibration stalled; band may be unreachable", residual=norm
            )
    raise CalibrationError(
        f"calibration did not converge in {max_iter} iterations",
        iterations=max_iter,
        residual=float(np.max(np.abs(res))),
    )


@dataclass(frozen=True)
class StaticCoeffs:
    """Cosine-series coefficients of the static band.

    frequency(phi) = sum_n s[n] cos(n * 2 pi phi) with s in rad/s; the
    series is truncated once the terms fall below rel_tol of s[0].
    """

    s: tuple[float, ...]
    n_max: int
    perturbation_table: dict[int, float] = field(default_factory=lambda: dict(PERTURBATION_TABLE))

    def evaluate(self, phi):
        """Reconstruct the band at flux phi (flux quanta) from the series."""
        theta = TWO_PI * np.asarray(phi, dtype=float)
        n = np.arange(len(self.s))
        out = np.cos(np.multiply.outer(theta, n)) @ np.asarray(self.s)
        return float(out) if np.ndim(phi) == 0 else out


_N_MAX_CAP = 40


def static_coeffs(params: TransmonParams, tol: SeriesTolerance | None = None) -> StaticCoeffs:
    """Cosine-series coefficients s_n of the static band.

    Each coefficient combines the perturbation table with rising-factorial
    and hypergeometric factors of the asymmetry parameter; truncation stops
    at the first n >= 2 with |s_n| < rel_tol |s_0|.
    """
    if tol is None:
        tol = SeriesTolerance()
    chi = params.chi
    xb = params.xi_bar
    if not chi * chi < 1.0:
        raise DomainError("junction asymmetry parameter must satisfy chi^2 < 1")
    coeffs = []
    prefactor = 1.0  # (1/n!) (-chi/2)^n accumulated iteratively
    for n in range(_N_MAX_CAP + 1):
        if n > 0:
            prefactor *= -0.5 * chi / n
        total = 0.0
        for p, c_p in PERTURBATION_TABLE.items():
            r = rising_factorial(p / 4.0, n)
            if r == 0.0:
                continue
            f = hyp2f1(0.5 * n + p / 8.0, 0.5 * (n + 1) + p / 8.0, n + 1.0, chi * chi, tol)
            total += c_p * xb ** (p / 4.0) * r * f
        s_n = prefactor * (2.0 if n > 0 else 1.0) * params.e_c * total
        coeffs.append(s_n)
        if n >= 2 and abs(s_n) < tol.rel_tol * abs(coeffs[0]):
            return StaticCoeffs(s=tuple(coeffs), n_max=n)
    raise ConvergenceError(
        f"cosine series not converged to {tol.rel_tol} within {_N_MAX_CAP} terms",
        iterations=_N_MAX_CAP,
        residual=abs(coeffs[-1] / coeffs[0]),
    )
