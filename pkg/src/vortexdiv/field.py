"""Real-space LG fields and brute-force quadrature of beam moments.

The quadratures here deliberately avoid the closed forms in
:mod:`vortexdiv.spectrum` and the kernels in :mod:`vortexdiv.ee`; they
integrate |Psi|^2 over the transverse plane directly, so they can serve
as independent checks of both.

Radial integrals run in t = 2 r^2 / w(z)^2, where r dr = w^2/4 dt.
"""
import cmath
import csv
import math

import numpy as np
from scipy import integrate, optimize

from .errors import ConvergenceError, DomainError, QuadratureFailure
from .specfun import laguerre

__all__ = [
    "lg_amplitude",
    "superposition_intensity",
    "quad_power",
    "quad_sigma_r_squared",
    "quad_encircled_radius",
    "intensity_profile",
    "write_profile_csv",
]

N_PHI = 256
QUAD_RTOL = 1e-10
TAIL_TOL = 1e-12
_T_CAP_LIMIT = 1e5
_QUAD_LIMIT = 200


def _check_r(r):
    if r < 0:
        raise DomainError(f"r must be >= 0, got {r}")


def lg_amplitude(n, ell, r, phi, z, g):
    """Complex amplitude of the normalized mode LG_{n,l} at (r, phi, z).

    The complex beam parameter is q = z + i z0, which makes
    |exp(-i k r^2 / 2q)|^2 = exp(-2 r^2 / w^2). Units are 1/length so that
    the transverse integral of |LG|^2 is 1.
    """
    _check_r(r)
    m = abs(ell)
    w = g.beam_size(z)
    q = complex(z, g.z0)
    x = math.sqrt(2.0) * r / w
    norm = math.sqrt(2.0 / math.pi) * math.exp(
        0.5 * (math.lgamma(n + 1) - math.lgamma(n + m + 1))
    )
    radial = x**m * laguerre(n, m, x * x) if (m or r) else 1.0
    phase = cmath.exp(-1j * g.k * r * r / (2.0 * q) + 1j * ell * phi
                      + 1j * (2 * n + m + 1) * g.gouy(z))
    return norm / w * radial * phase


def superposition_intensity(s, r, phi, z, g):
    """|sum psi_{n,l} LG_{n,l}|^2 at one point."""
    total = sum(v * lg_amplitude(k.n, k.ell, r, phi, z, g) for k, v in s)
    return abs(total) ** 2


class _Profile:
    """Vectorized |Psi|^2 in the variable t, with the phi integral done.

    ``density(t)`` is the phi-integrated intensity times w^2/4, i.e. the
    power per unit t. A single-OAM spectrum has a phi-independent
    intensity, so the integral is 2 pi times the value at phi = 0;
    otherwise a uniform trapezoid over ``N_PHI`` angles is used.
    """

    def __init__(self, s, z, g):
        self.modes = [(k.n, k.ell, v) for k, v in s]
        self.gouy = g.gouy(z)
        ells = {ell for _, ell, _ in self.modes}
        self.single_ell = len(ells) == 1
        span = max(ells) - min(ells)
        n_phi = max(N_PHI, 2 * span + 2)
        self.phis = np.zeros(1) if self.single_ell else 2.0 * math.pi * np.arange(n_phi) / n_phi
        self.tmax_hint = max(2 * n + abs(ell) + 1 for n, ell, _ in self.modes)

    def density(self, t):
        # common factor exp(-i k r^2/2q) has modulus e^{-t/2} and drops out of |.|^2
        acc = np.zeros(self.phis.shape, dtype=complex)
        for n, ell, v in self.modes:
            m = abs(ell)
            if t == 0.0:
                radial = 1.0 if m == 0 else 0.0
            else:
                radial = math.exp(0.5 * (math.lgamma(n + 1) - math.lgamma(n + m + 1)
                                         + m * math.log(t) - t)) * laguerre(n, m, t)
            acc += v * radial * np.exp(1j * (ell * self.phis + (2 * n + m) * self.gouy))
        # I = 2/(pi w^2) |acc|^2 and r dr dphi = (w^2/4) dt dphi
        return float(np.mean(np.abs(acc) ** 2))


def _integrate(fun, a, b):
    val, err, *rest = integrate.quad(
        fun, a, b, epsabs=TAIL_TOL, epsrel=QUAD_RTOL, limit=_QUAD_LIMIT, full_output=1
    )
    if len(rest) > 1 and "limit" in str(rest[1]):
        raise QuadratureFailure(f"radial quadrature hit its subdivision cap on [{a}, {b}]")
    return val


def _pieces(fun, T, width):
    # the integrand oscillates with ~tmax zeros; short pieces keep quad well-behaved
    edges = np.arange(0.0, T, width).tolist() + [T]
    return sum(_integrate(fun, a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a)


def _full_integral(fun, hint):
    """Integral over [0, inf), extending the cap until the last piece is negligible."""
    width = 4.0
    cap = 2.0 * hint + 40.0
    total = _pieces(fun, cap, width)
    while True:
        tail = _pieces(lambda t: fun(t + cap), cap, width)
        total += tail
        cap *= 2.0
        if abs(tail) < TAIL_TOL:
            return total
        if cap > _T_CAP_LIMIT:
            raise QuadratureFailure("radial tail did not decay below tolerance")


def quad_power(s, z, g):
    """Total transverse power by direct quadrature (1 for a normalized spectrum)."""
    prof = _Profile(s, z, g)
    return _full_integral(prof.density, prof.tmax_hint)


def quad_sigma_r_squared(s, z, g):
    """Second-moment radius squared: integral of r^2 |Psi|^2 over the plane."""
    prof = _Profile(s, z, g)
    w2 = g.beam_size(z) ** 2
    return w2 / 2.0 * _full_integral(lambda t: t * prof.density(t), prof.tmax_hint)


def quad_encircled_radius(s, z, e0, g):
    """Radius R at plane z whose disc holds a fraction ``e0`` of the power."""
    if not 0.0 < e0 < 1.0:
        raise DomainError(f"energy fraction must lie in (0, 1), got {e0}")
    prof = _Profile(s, z, g)
    w = g.beam_size(z)

    def power(T):
        return _pieces(prof.density, T, 4.0)

    hi = 1.0
    while power(hi) < e0:
        hi *= 2.0
        if hi > _T_CAP_LIMIT:
            raise ConvergenceError(f"could not bracket encircled radius for e0={e0}")
    T = optimize.brentq(lambda T: power(T) - e0, 0.0, hi, xtol=1e-15, rtol=1e-15)
    if abs(power(T) - e0) >= 1e-9:
        raise ConvergenceError(f"encircled-power residual above 1e-9 at e0={e0}")
    return w * math.sqrt(T / 2.0)


def intensity_profile(s, g, rs, zs, phi=0.0):
    """Rows ``(r, z, intensity)`` over the grid rs x zs at angle ``phi``."""
    return [(float(r), float(z), float(superposition_intensity(s, float(r), phi, float(z), g)))
            for z in zs for r in rs]


def write_profile_csv(rows, fh):
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["r", "z", "intensity"])
    for r, z, inten in rows:
        out.writerow([repr(r), repr(z), repr(inten)])
