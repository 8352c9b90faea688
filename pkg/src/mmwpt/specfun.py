"""Special functions needed by the coverage expressions.

Only the parameter slots that actually occur are covered: the Gauss
hypergeometric function 2F1(1/2, m; 1; -x) with x >= 0, a 3F2 series used as
a small-argument cross-check for the macro-tier integral, the exponentially
scaled Bessel function I0 and the harmonic normaliser of the generalized
exponential surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .exceptions import ConvergenceError, DomainError

# Largest integer shape for which the terminating polynomial is used; beyond
# this the alternating terms lose too many digits near z = 1.
_MAX_POLY_SHAPE = 20


@dataclass(frozen=True)
class FunctionAccuracy:
    abs_tol: float = 1e-10
    max_terms: int = 500

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_ACCURACY = FunctionAccuracy()


def harmonic_normalizer(L: int) -> float:
    """Return psi(L+1) - psi(1), i.e. the L-th harmonic number."""
    if int(L) != L or L < 1:
        raise DomainError(f"order L must be a positive integer, got {L!r}")
    return math.fsum(1.0 / k for k in range(1, int(L) + 1))


def bessel_i0_scaled(x):
    """exp(-x) * I0(x) for x >= 0, finite for arbitrarily large x."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("bessel_i0_scaled requires x >= 0")
    out = special.i0e(x)
    return out if out.ndim else float(out)


def _is_integer_shape(m: float) -> bool:
    return float(m).is_integer() and 1 <= m <= _MAX_POLY_SHAPE


def hyp2f1_half(m: float, x):
    """Evaluate 2F1(1/2, m; 1; -x) for x >= 0.

    Uses the Pfaff transform 2F1(1/2, m; 1; -x) = (1+x)^(-1/2) 2F1(1/2, 1-m; 1; z)
    with z = x/(1+x) in [0, 1).  For integer m the transformed series
    terminates after m terms and is summed directly; otherwise it is handed
    to scipy, which is well conditioned on [0, 1).

    Args:
        m: Nakagami shape (>= 0.5).
        x: scalar or array of non-negative arguments.

    Returns:
        Values in (0, 1], same shape as ``x``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("hyp2f1_half requires x >= 0")
    if not m > 0:
        raise DomainError(f"shape m must be positive, got {m}")
    z = x / (1.0 + x)
    if _is_integer_shape(m):
        n = int(m)
        # coefficients (1/2)_k (1-m)_k / (k!)^2, Horner in z
        coef = np.empty(n)
        c = 1.0
        for k in range(n):
            coef[k] = c
            c *= (0.5 + k) * (1.0 - m + k) / ((k + 1.0) ** 2)
        poly = np.full_like(z, coef[-1])
        for k in range(n - 2, -1, -1):
            poly = poly * z + coef[k]
        out = poly / np.sqrt(1.0 + x)
    else:
        out = special.hyp2f1(0.5, 1.0 - m, 1.0, z) / np.sqrt(1.0 + x)
    return out if out.ndim else float(out)


def hyp2f1_oracle(m: float, x: float) -> float:
    """(1/pi) * int_0^pi (1 + x cos^2 t)^(-m) dt by adaptive quadrature.

    Independent of :func:`hyp2f1_half`; equals 2F1(1/2, m; 1; -x).
    """
    if x < 0:
        raise DomainError("hyp2f1_oracle requires x >= 0")
    # symmetric about pi/2; the peak sits at t = pi/2 for large x
    val, _ = integrate.quad(
        lambda t: (1.0 + x * math.cos(t) ** 2) ** (-m),
        0.0, math.pi / 2, epsabs=1e-15, epsrel=1e-13, limit=500,
    )
    return 2.0 * val / math.pi


def hyp3f2_xi_series(m: float, alpha: float, y: float,
                     accuracy: FunctionAccuracy = DEFAULT_ACCURACY) -> float:
    """Power series for 3F2(1/2, m, -2/alpha; 1, 1-2/alpha; -y), |y| < 1.

    Raises:
        ConvergenceError: if |y| >= 1 or the series does not settle within
            ``accuracy.max_terms`` terms.
        DomainError: if 2/alpha is a positive integer (the lower parameter
            1 - 2/alpha hits a non-positive integer).
    """
    if abs(y) >= 1:
        raise ConvergenceError(f"3F2 series diverges for |y| >= 1 (y={y})")
    b = -2.0 / alpha
    ratio = 2.0 / alpha
    if abs(ratio - round(ratio)) < 1e-12 and round(ratio) >= 1:
        raise DomainError(f"alpha={alpha} makes the lower parameter 1-2/alpha a pole")
    term = 1.0
    terms = [term]
    for k in range(accuracy.max_terms):
        term *= (0.5 + k) * (m + k) * (b + k) / ((1.0 + k) * (b + 1.0 + k) * (k + 1.0)) * (-y)
        terms.append(term)
        if abs(term) < accuracy.abs_tol:
            return math.fsum(terms)
    raise ConvergenceError(f"3F2 series not converged after {accuracy.max_terms} terms")
