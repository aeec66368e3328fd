"""Self-contained special-function kernel.

Integer-order Bessel J, rising factorial, the Gauss hypergeometric series
and the error function, implemented with elementary operations only.  These
are the primitives behind the cosine-series coefficients of the tunable
band and their harmonic expansion under modulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError

__all__ = [
    "SeriesTolerance",
    "bessel_j",
    "bessel_j_array",
    "rising_factorial",
    "hyp2f1",
    "erf",
]

_MAX_BESSEL_ORDER = 64
_MAX_BESSEL_ARG = 1e4


@dataclass(frozen=True)
class SeriesTolerance:
    """Truncation control for the infinite sums in this package.

    rel_tol: relative truncation tolerance, in (0, 1e-6].
    max_terms: hard cap on summed terms, at least 32.
    """

    rel_tol: float = 1e-12
    max_terms: int = 512

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-6):
            raise DomainError(f"rel_tol must be in (0, 1e-6], got {self.rel_tol}")
        if self.max_terms < 32:
            raise DomainError(f"max_terms must be >= 32, got {self.max_terms}")


def _bessel_ascending(k: int, x: float) -> float:
    # Power series around 0; safe when the alternating terms never grow,
    # i.e. small x or order dominating the argument.
    half = 0.5 * x
    term = 1.0
    for m in range(1, k + 1):
        term *= half / m
    total = term
    m = 1
    x2 = -(half * half)
    while True:
        term *= x2 / (m * (m + k))
        total += term
        if abs(term) <= 1e-17 * abs(total) + 1e-300:
            return total
        m += 1
        if m > 1000:  # unreachable for the guarded domain
            raise ConvergenceError("Bessel series did not converge", iterations=m)


def _bessel_miller(kmax: int, x: float) -> list[float]:
    # Downward recurrence J_{m-1} = (2m/x) J_m - J_{m+1}, normalized with
    # J_0 + 2 sum J_{2m} = 1.  Stable for every order at once.  The start
    # order must sit far enough above the x turning point that the wanted
    # solution dominates by ~1e17; the Airy-regime decay sets the x^(1/3)
    # margin.
    start = int(max(kmax, x) + 11.0 * max(x, 1.0) ** (1.0 / 3.0) + 30) | 1
    jp, j = 0.0, 1e-30
    out = [0.0] * (kmax + 1)
    norm = 0.0
    for m in range(start, 0, -1):
        jm = (2.0 * m / x) * j - jp
        jp, j = j, jm
        if abs(j) > 1e250:  # rescale to avoid overflow
            j *= 1e-250
            jp *= 1e-250
            norm *= 1e-250
            for i in range(kmax + 1):
                out[i] *= 1e-250
        if m - 1 <= kmax:
            out[m - 1] = j
        if (m - 1) % 2 == 0:
            norm += j if m == 1 else 2.0 * j
    # at loop end j = J_0 candidate; norm accumulated J_0 + 2*sum(J_even)
    return [v / norm for v in out]


def bessel_j_array(kmax: int, x: float) -> list[float]:
    """All of J_0(x) .. J_kmax(x) in one pass."""
    if kmax < 0:
        raise DomainError(f"kmax must be non-negative, got {kmax}")
    if kmax > _MAX_BESSEL_ORDER:
        raise DomainError(f"Bessel order {kmax} above supported {_MAX_BESSEL_ORDER}")
    if abs(x) >= _MAX_BESSEL_ARG:
        raise DomainError(f"Bessel argument {x} above supported {_MAX_BESSEL_ARG}")
    flip = x < 0
    if flip:
        x = -x
    if x == 0.0:
        return [1.0] + [0.0] * kmax
    if x <= 8.0:
        vals = [_bessel_ascending(k, x) for k in range(kmax + 1)]
    else:
        vals = _bessel_miller(kmax, x)
    if flip:
        vals = [v if k % 2 == 0 else -v for k, v in enumerate(vals)]
    return vals


def bessel_j(k: int, x: float) -> float:
    """Bessel function of the first kind, integer order.

    Negative orders resolve through J_{-k}(x) = (-1)^k J_k(x); negative
    arguments through J_k(-x) = (-1)^k J_k(x).
    """
    if k != int(k):
        raise DomainError(f"order must be an integer, got {k}")
    k = int(k)
    parity = 1.0
    if k < 0:
        k = -k
        parity *= -1.0 if k % 2 else 1.0
    if x < 0:
        x = -x
        parity *= -1.0 if k % 2 else 1.0
    if k > _MAX_BESSEL_ORDER:
        raise DomainError(f"Bessel order {k} above supported {_MAX_BESSEL_ORDER}")
    if x >= _MAX_BESSEL_ARG:
        raise DomainError(f"Bessel argument {x} above supported {_MAX_BESSEL_ARG}")
    if x == 0.0:
        return parity if k == 0 else 0.0
    # The alternating series is cancellation-free when the first term is
    # also the largest; otherwise fall back to the normalized recurrence.
    if x <= 8.0 or 0.25 * x * x < k + 1:
        return parity * _bessel_ascending(k, x)
    return parity * _bessel_miller(k, x)[k]


def rising_factorial(a: float, n: int) -> float:
    """Pochhammer symbol a (a+1) ... (a+n-1); the empty product is 1.

    Pole-free replacement for Gamma(a+n)/Gamma(a): a = 0 with n > 0
    gives exactly 0, as the coefficient table requires.
    """
    if n < 0 or n != int(n):
        raise DomainError(f"n must be a non-negative integer, got {n}")
    if n > 64:
        raise DomainError(f"n = {n} above supported 64")
    out = 1.0
    for i in range(int(n)):
        out *= a + i
    return out


def hyp2f1(a: float, b: float, c: float, z: float, tol: SeriesTolerance | None = None) -> float:
    """Gauss hypergeometric series 2F1(a, b; c; z) for 0 <= z < 1."""
    if tol is None:
        tol = SeriesTolerance()
    if not (0.0 <= z < 1.0):
        raise DomainError(f"hyp2f1 argument must be in [0, 1), got {z}")
    if c <= 0.0 and c == int(c):
        raise DomainError(f"c must not be a non-positive integer, got {c}")
    if z == 0.0:
        return 1.0
    term = 1.0
    total = 1.0
    for m in range(tol.max_terms):
        term *= (a + m) * (b + m) / ((c + m) * (m + 1)) * z
        total += term
        if abs(term) <= tol.rel_tol * abs(total):
            return total
    raise ConvergenceError(
        f"hyp2f1 series not converged to {tol.rel_tol} within {tol.max_terms} terms",
        iterations=tol.max_terms,
        residual=abs(term / total),
    )


_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def _erf_series(x: float) -> float:
    # erf(x) = (2/sqrt(pi)) x e^{-x^2} sum (2x^2)^m / (1*3*...*(2m+1)),
    # all terms positive, so no cancellation.
    x2 = 2.0 * x * x
    term = 1.0
    total = 1.0
    m = 1
    while True:
        term *= x2 / (2 * m + 1)
        total += term
        if term <= 1e-17 * total:
            return _TWO_OVER_SQRT_PI * x * math.exp(-x * x) * total
        m += 1


def _erfc_cf(x: float) -> float:
    # Continued fraction erfc(x) = e^{-x^2}/sqrt(pi) / (x + 1/2/(x + 1/(x + 3/2/(x + ...))))
    # evaluated with the modified Lentz scheme; accurate for x >= 3.
    tiny = 1e-300
    f = x if x != 0 else tiny
    C = f
    D = 0.0
    for m in range(1, 200):
        an = 0.5 * m
        D = x + an * D
        if D == 0.0:
            D = tiny
        C = x + an / C
        if C == 0.0:
            C = tiny
        D = 1.0 / D
        delta = C * D
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x * x) / (f * math.sqrt(math.pi))


def erf(x: float) -> float:
    """Error function, odd, accurate to well below 1e-10 absolute."""
    if x == 0.0:
        return 0.0
    ax = abs(x)
    if ax <= 3.0:
        val = _erf_series(ax)
    elif ax >= 6.5:
        val = 1.0
    else:
        val = 1.0 - _erfc_cf(ax)
    return val if x > 0 else -val
