"""Circular beams: LG coefficients and closed-form rms beam quality.

A circular beam with shape parameter xi, radial index p and charge l0
lives on the single OAM value l0, with radial coefficients

    psi_n ∝ xi^n Gamma(n - p/2)/Gamma(-p/2) sqrt(|l0|! / (n! (|l0|+n)!)).

The normalization and the moments of this sequence are Gauss
hypergeometric functions of |xi|^2, which gives M^2_rms in closed form.
"""
import csv
import math
from dataclasses import dataclass, field

from .errors import DomainError, TruncationError, VortexDivError
from .spectrum import ModeSpectrum, _radicand, m2_rms
from .specfun import hyp2f1

__all__ = [
    "CiBParams",
    "SweepRow",
    "cib_coefficients",
    "cib_moments",
    "cib_m2_rms",
    "cib_m2_unit_xi",
    "cib_sweep",
    "write_sweep_csv",
]

N_MAX_DEFAULT = 200
MIN_CAPTURED_NORM = 0.999
_BOUND_SLACK = 1e-9
# |xi| this close to 1 is treated as the unit circle
_UNIT_TOL = 1e-14


@dataclass(frozen=True)
class CiBParams:
    """Circular-beam parameters.

    ``q0`` sets the physical scale of the beam; none of the quantities
    here depend on it.
    """

    xi: complex
    p: complex
    ell0: int
    q0: complex = 1j


def _terminates(p):
    half = complex(p) / 2.0
    return half.imag == 0.0 and half.real >= 0.0 and half.real == math.floor(half.real)


def _check_domain(xi, p, ell0):
    """Raise unless the coefficient series and its second moments converge."""
    if _terminates(p):
        return
    r = abs(xi)
    if r < 1.0 - _UNIT_TOL:
        return
    if r <= 1.0 + _UNIT_TOL:
        if complex(p).real > -abs(ell0):
            return
        raise DomainError(
            f"at |xi| = 1 the rms quantities need Re(p) > -|l0|, got p={p}, l0={ell0}"
        )
    raise DomainError(f"|xi| = {r} > 1 needs p/2 to be a nonnegative integer, got p={p}")


def cib_coefficients(c, n_max=N_MAX_DEFAULT):
    """Normalized LG spectrum of a circular beam, truncated at n <= n_max.

    Raises:
        TruncationError: the kept terms carry less than 0.999 of the norm.
    """
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    _check_domain(c.xi, c.p, c.ell0)
    xi, half, m = complex(c.xi), complex(c.p) / 2.0, abs(c.ell0)
    norm = hyp2f1(-half, -half.conjugate(), 1 + m, abs(xi) ** 2).real
    coeffs = {}
    term = 1.0 + 0.0j
    captured = 0.0
    for n in range(n_max + 1):
        if term == 0:
            break
        coeffs[(n, c.ell0)] = term
        captured += abs(term) ** 2
        term *= xi * (n - half) / math.sqrt((n + 1.0) * (m + n + 1.0))
    achieved = captured / norm
    if achieved < MIN_CAPTURED_NORM:
        raise TruncationError(
            f"n <= {n_max} captures only {achieved:.6f} of the norm "
            f"(xi={c.xi}, p={c.p}, l0={c.ell0})",
            achieved,
        )
    return ModeSpectrum(coeffs)


def cib_moments(c):
    """Closed-form ``(N, Phi, beta)`` of a circular beam."""
    _check_domain(c.xi, c.p, c.ell0)
    xi, p, m = complex(c.xi), complex(c.p), abs(c.ell0)
    x = abs(xi) ** 2
    half = p / 2.0
    norm = hyp2f1(-half, -half.conjugate(), 1 + m, x).real
    if x == 0.0 or p == 0:
        phi = 0.0
    else:
        upper = hyp2f1(1 - half, 1 - half.conjugate(), 2 + m, x).real
        phi = abs(p) ** 2 * x / (2.0 + 2.0 * m) * upper / norm
    return norm, phi, xi * (phi - p)


def cib_m2_rms(c):
    """M^2_rms of a circular beam from its hypergeometric moments."""
    _, phi, _ = cib_moments(c)
    m = abs(c.ell0)
    alpha = 1.0 + m + phi
    # |beta| = |xi| |Phi - p| keeps the result exactly phase-independent in xi
    beta_abs = abs(complex(c.xi)) * abs(phi - complex(c.p))
    out = math.sqrt(_radicand(alpha, beta_abs))
    if out < 1.0 + m - _BOUND_SLACK:
        raise VortexDivError(f"M^2 = {out} fell below 1 + |l0| for {c}")
    return out


def cib_m2_unit_xi(p, ell0):
    """M^2_rms on the unit circle |xi| = 1: sqrt((1+|l0|)^2 + |p|^2/(Re p + |l0|))."""
    p = complex(p)
    m = abs(ell0)
    if p == 0:
        return 1.0 + m
    if p.real <= -m:
        raise DomainError(
            f"rms divergence at |xi| = 1 needs Re(p) > -|l0|, got p={p}, l0={ell0}"
        )
    return math.sqrt((1.0 + m) ** 2 + abs(p) ** 2 / (p.real + m))


@dataclass(frozen=True)
class SweepRow:
    xi_abs: float
    p: complex
    ell0: int
    m2_rms: float | None
    m2_series: float | None = None
    error: str | None = field(default=None)


def cib_sweep(p, ell0, xi_magnitudes, n_max=N_MAX_DEFAULT):
    """M^2_rms against |xi| for fixed (p, l0).

    Each row carries the closed form and, as a cross-check, M^2 of the
    truncated coefficient series. A row whose parameters are out of
    domain records the error message and the sweep carries on.
    """
    rows = []
    for r in xi_magnitudes:
        c = CiBParams(xi=complex(r), p=complex(p), ell0=int(ell0))
        try:
            closed = cib_m2_rms(c)
        except VortexDivError as exc:
            rows.append(SweepRow(float(r), complex(p), int(ell0), None, None, str(exc)))
            continue
        try:
            series = m2_rms(cib_coefficients(c, n_max))
        except TruncationError:
            series = None
        rows.append(SweepRow(float(r), complex(p), int(ell0), closed, series))
    return rows


def write_sweep_csv(rows, fh):
    """CSV ``xi_abs,p_re,p_im,l0,m2_rms``; failed rows carry ``nan``."""
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["xi_abs", "p_re", "p_im", "l0", "m2_rms"])
    for row in rows:
        val = repr(row.m2_rms) if row.m2_rms is not None else "nan"
        out.writerow([repr(row.xi_abs), repr(row.p.real), repr(row.p.imag), row.ell0, val])
