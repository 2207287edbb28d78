"""Special functions needed by the divergence calculations.

Only the narrow slice actually used downstream is covered: generalized
Laguerre polynomials, Pochhammer-type Gamma ratios, a series 2F1, the
regularized lower incomplete Gamma function for integer order and the
inverse error function.
"""
import math

import numpy as np
from scipy import optimize, special

from .errors import ConvergenceError, DomainError

__all__ = [
    "laguerre",
    "gamma_ratio",
    "hyp2f1",
    "reg_gamma_p",
    "inv_reg_gamma_p",
    "erf",
    "erf_inv",
]

_SERIES_RTOL = 1e-14
_SERIES_MAX_TERMS = 1_000_000
# |x| within this of 1 is treated as the unit point
_UNIT_SNAP = 1e-14
_INV_GAMMA_TOL = 1e-12
_BRACKET_CAP = 200


def laguerre(n, alpha, x):
    """Generalized Laguerre polynomial L_n^(alpha)(x).

    Uses the three-term recurrence, which is stable in the forward
    direction. ``x`` may be a scalar or a numpy array.
    """
    if n < 0:
        raise DomainError(f"laguerre degree must be >= 0, got {n}")
    prev = 1.0 + 0.0 * x
    if n == 0:
        return prev
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur


def gamma_ratio(n, p):
    """Gamma(n - p/2) / Gamma(-p/2) as the finite product prod_{k<n} (k - p/2)."""
    if n < 0:
        raise DomainError(f"gamma_ratio needs n >= 0, got {n}")
    half = complex(p) / 2.0
    out = 1.0 + 0.0j
    for k in range(n):
        out *= k - half
    return out


def _nonpositive_integer(z):
    z = complex(z)
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


def hyp2f1(a, b, c, x):
    """Gauss hypergeometric function 2F1(a, b; c; x) for real ``x``.

    Summed as a power series. Terminating series are exact for any ``x``.
    A non-terminating series requires ``|x| < 1``; at ``x = 1`` the value
    comes from Gauss's summation theorem when ``Re(c - a - b) > 0``.

    Raises:
        DomainError: ``c`` is a nonpositive integer, or ``x`` lies outside
            the region where the series converges.
        ConvergenceError: the series needed more than a million terms.
    """
    a, b, c = complex(a), complex(b), complex(c)
    x = float(x)
    if _nonpositive_integer(c):
        raise DomainError(f"2F1 undefined for c = {c}")
    terminating = _nonpositive_integer(a) or _nonpositive_integer(b)
    if not terminating:
        if abs(abs(x) - 1.0) <= _UNIT_SNAP:
            if x > 0 and (c - a - b).real > 0:
                return _gauss_sum(a, b, c)
            raise DomainError(
                f"2F1 series diverges at x = {x} with Re(c-a-b) = {(c - a - b).real}"
            )
        if abs(x) > 1.0:
            raise DomainError(f"non-terminating 2F1 requires |x| < 1, got x = {x}")

    # geometric tail estimate once the term ratio settles near x
    tail_factor = 1.0 if terminating else 1.0 / (1.0 - abs(x))
    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    small = 0
    for k in range(_SERIES_MAX_TERMS):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * x
        if term == 0:
            return total
        total += term
        if abs(term) * tail_factor <= _SERIES_RTOL * abs(total):
            small += 1
            if small >= 2:
                return total
        else:
            small = 0
    raise ConvergenceError(f"2F1({a}, {b}; {c}; {x}) did not converge")


def _gauss_sum(a, b, c):
    # 2F1(a,b;c;1) = G(c) G(c-a-b) / (G(c-a) G(c-b)); rgamma vanishes at poles
    val = (
        special.gamma(c)
        * special.gamma(c - a - b)
        * special.rgamma(c - a)
        * special.rgamma(c - b)
    )
    return complex(val)


def reg_gamma_p(m, x):
    """Regularized lower incomplete Gamma P(m, x) for integer ``m >= 1``."""
    if m < 1:
        raise DomainError(f"reg_gamma_p needs integer m >= 1, got {m}")
    if x < 0:
        raise DomainError(f"reg_gamma_p needs x >= 0, got {x}")
    if x == 0:
        return 0.0
    logx = math.log(x)
    if x < m:
        # P = e^{-x} x^m / m! * sum_k x^k / ((m+1)...(m+k)); all terms positive
        lead = math.exp(m * logx - x - math.lgamma(m + 1))
        total, term, k = 1.0, 1.0, 0
        while term > 1e-17 * total:
            k += 1
            term *= x / (m + k)
            total += term
        return lead * total
    q = 0.0
    for k in range(m):
        q += math.exp(k * logx - x - math.lgamma(k + 1))
    return 1.0 - q


def _reg_gamma_p_density(m, x):
    if x == 0:
        return 1.0 if m == 1 else 0.0
    return math.exp((m - 1) * math.log(x) - x - math.lgamma(m))


def inv_reg_gamma_p(m, e0):
    """Solve P(m, T) = e0 for T.

    A bracket grown geometrically from ``T = max(1, m)`` is handed to
    Brent's method, then polished with Newton steps.
    """
    if not 0.0 < e0 < 1.0:
        raise DomainError(f"energy fraction must lie in (0, 1), got {e0}")
    lo, hi = 0.0, float(max(1, m))
    for _ in range(_BRACKET_CAP):
        if reg_gamma_p(m, hi) >= e0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceError(f"could not bracket P({m}, T) = {e0}")
    t = optimize.brentq(lambda s: reg_gamma_p(m, s) - e0, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    for _ in range(3):
        resid = reg_gamma_p(m, t) - e0
        if abs(resid) < 1e-15:
            break
        dens = _reg_gamma_p_density(m, t)
        if dens <= 0:
            break
        step = resid / dens
        if not lo <= t - step <= hi:
            break
        t -= step
    if abs(reg_gamma_p(m, t) - e0) >= _INV_GAMMA_TOL:
        raise ConvergenceError(f"inverse P({m}, .) at {e0} missed tolerance")
    return t


erf = math.erf


def erf_inv(y):
    """Inverse error function on (-1, 1).

    Seeded with Winitzki's closed-form approximation and polished by
    Newton's method, switching to erfc residuals in the tails.
    """
    y = float(y)
    if not -1.0 < y < 1.0:
        raise DomainError(f"erf_inv needs |y| < 1, got {y}")
    if y == 0.0:
        return 0.0
    sign = 1.0 if y > 0 else -1.0
    ay = abs(y)
    a = 0.147
    ln = math.log1p(-ay * ay)
    first = 2.0 / (math.pi * a) + ln / 2.0
    t = math.sqrt(math.sqrt(first * first - ln / a) - first)
    tail = 1.0 - ay
    for _ in range(50):
        if ay > 0.5:
            resid = tail - math.erfc(t)
        else:
            resid = math.erf(t) - ay
        step = resid / (2.0 / math.sqrt(math.pi) * math.exp(-t * t))
        t -= step
        if abs(step) <= 1e-16 * max(1.0, t):
            break
    return sign * t
