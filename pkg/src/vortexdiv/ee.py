"""Encircled-energy divergence of a beam from its LG spectrum.

With Z = z/z0 and t = 2r^2/w(z)^2, the power inside radius R at plane Z
is the integral over [0, T] of sum_l |U_l(t, Z)|^2, where
T = 2 R^2 / (w0^2 (1 + Z^2)). For a target fraction e0 the root T(Z)
gives the encircled radius, its far-field limit T_inf gives the
divergence, and

    M^2_EE = sqrt(T_inf * min_Z (1 + Z^2) T(Z)).

The integrals and root solves run through :mod:`vortexdiv.kernels`.
"""
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import kernels
from .errors import ConvergenceError, DomainError
from .specfun import erf_inv, inv_reg_gamma_p, laguerre

__all__ = [
    "E0_DEFAULT",
    "EEResult",
    "u_ell",
    "cumulative_energy",
    "solve_T",
    "t_infinity",
    "m2_ee",
    "m2_ee_lg",
    "asymptotic_lg0",
    "objective_trace",
    "layout_for",
]

E0_DEFAULT = 1.0 - math.exp(-1.0)
SOLVE_TOL = 1e-9
Z_MAX = 10.0
Z_MAX_CAP = 80.0
N_SCAN = 201
Z_TOL = 1e-6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class EEResult:
    """Encircled-energy figures for one spectrum at one energy fraction."""

    e0: float
    t_infinity: float
    z_star: float
    t_at_zstar: float
    m2_ee: float


def _check_e0(e0):
    if not 0.0 < e0 < 1.0:
        raise DomainError(f"energy fraction must lie in (0, 1), got {e0}")


@functools.lru_cache(maxsize=256)
def layout_for(s):
    """Kernel layout of a spectrum, one block per OAM value."""
    return kernels.Layout.from_blocks([(abs(ell), s.radial_block(ell)) for ell in s.ells()])


def _t_lower_bound(s, e0):
    """A Z-independent lower bound on T(Z).

    |U_l| <= sum_n |psi_n| |phi_n| for every Z, so the energy of that
    majorant reaches e0 no later than the true cumulative does. Its prefix
    integrals are tabulated on a fine grid; the last grid point where the
    majorant is still below e0 bounds T(Z) from below.
    """
    q = 0.0
    for ell in s.ells():
        a = np.abs(np.asarray(s.radial_block(ell)))
        q = q + np.einsum("jnk,n,k->j", kernels.abs_gram_table(abs(ell), len(a)), a, a)
    # small slack absorbs rounding in the table
    j = int(np.searchsorted(q, e0 - 1e-12))
    return j * kernels.BOUND_STEP - kernels.BOUND_STEP if j > 0 else 0.0


def u_ell(s, ell, t, Z):
    """U_l(t, Z) summed directly from the spectrum."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    m = abs(ell)
    rot = (1 + 1j * Z) / (1 - 1j * Z)
    out = 0j
    for k, v in s:
        if k.ell != ell:
            continue
        n = k.n
        logw = -t + math.lgamma(n + 1) - math.lgamma(m + n + 1)
        if m:
            if t == 0:
                continue
            logw += m * math.log(t)
        out += math.exp(0.5 * logw) * v * rot**n * laguerre(n, m, t)
    return out


def cumulative_energy(s, T, Z):
    """Fraction of power inside normalized radius T at plane Z."""
    if T < 0:
        raise DomainError(f"T must be >= 0, got {T}")
    if T == 0:
        return 0.0
    return kernels.cumulative(layout_for(s), float(Z), float(T))


def _solve(s, Z, e0, guess=1.0):
    t = kernels.solve_t(layout_for(s), Z, e0, guess)
    if t < 0:
        raise ConvergenceError(f"no encircled-energy root at Z={Z}, e0={e0}")
    return t


def solve_T(s, Z, e0=E0_DEFAULT):
    """Normalized squared encircled radius T(Z) holding fraction ``e0``."""
    _check_e0(e0)
    t = _solve(s, float(Z), e0)
    if abs(kernels.cumulative(layout_for(s), float(Z), t) - e0) >= SOLVE_TOL:
        raise ConvergenceError(f"T(Z={Z}) residual above {SOLVE_TOL}")
    return t


def t_infinity(s, e0=E0_DEFAULT):
    """Far-field limit of T(Z), using the exact (-1)^n weights."""
    _check_e0(e0)
    return _solve(s, math.inf, e0)


def objective_trace(s, e0=E0_DEFAULT, zs=None):
    """Rows ``(Z, T(Z), (1+Z^2) T(Z))`` over a grid, without pruning."""
    _check_e0(e0)
    if zs is None:
        zs = np.linspace(-Z_MAX, Z_MAX, N_SCAN)
    f, t = kernels.objective_scan(layout_for(s), e0, zs, 0.0)
    if np.any(t < 0):
        raise ConvergenceError("encircled-energy solve failed on the trace grid")
    return [(float(z), float(tt), float(ff)) for z, tt, ff in zip(zs, t, f)]


def _golden(fun, a, b, tol):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while abs(b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)


def m2_ee(s, e0=E0_DEFAULT, z_max=Z_MAX, n_scan=N_SCAN, z_tol=Z_TOL):
    """Encircled-energy beam quality factor of a spectrum.

    (1+Z^2) T(Z) is scanned on ``n_scan`` points over [-z_max, z_max]; the
    window doubles (up to 80) while the scan minimum sits on its edge. The
    best scan point is then refined by golden-section search to ``z_tol``.
    Scan points whose value provably exceeds the running best are skipped.
    """
    _check_e0(e0)
    lay = layout_for(s)
    t_inf = _solve(s, math.inf, e0)
    t_lb = _t_lower_bound(s, e0)
    while True:
        zs = np.linspace(-z_max, z_max, n_scan)
        f, tv = kernels.objective_scan(lay, e0, zs, t_lb, t_inf)
        if np.any(tv < 0):
            raise ConvergenceError(f"encircled-energy solve failed during Z scan (e0={e0})")
        i = int(np.argmin(f))
        if i in (0, n_scan - 1) and z_max < Z_MAX_CAP:
            z_max = min(2.0 * z_max, Z_MAX_CAP)
            continue
        break

    guess = float(tv[i])

    def objective(z):
        return (1.0 + z * z) * _solve(s, z, e0, guess)

    lo, hi = zs[max(i - 1, 0)], zs[min(i + 1, n_scan - 1)]
    z_star, f_star = _golden(objective, float(lo), float(hi), z_tol)
    if f[i] < f_star:
        z_star, f_star = float(zs[i]), float(f[i])
    t_star = f_star / (1.0 + z_star * z_star)
    return EEResult(
        e0=e0,
        t_infinity=t_inf,
        z_star=z_star,
        t_at_zstar=t_star,
        m2_ee=math.sqrt(t_inf * f_star),
    )


def m2_ee_lg(n, ell, e0=E0_DEFAULT):
    """M^2_EE of the single mode LG_{n,l}, which equals its constant T.

    For n = 0 this is the inverse regularized incomplete Gamma function.
    Otherwise the single-mode energy integral is root-solved directly with
    adaptive quadrature, independently of the spectrum kernels.
    """
    _check_e0(e0)
    m = abs(ell)
    if n == 0:
        return inv_reg_gamma_p(m + 1, e0)
    lognorm = math.lgamma(n + 1) - math.lgamma(m + n + 1)

    def dens(t):
        if t <= 0:
            return 0.0 if m else math.exp(lognorm) * laguerre(n, m, 0.0) ** 2
        return math.exp(lognorm - t + m * math.log(t)) * laguerre(n, m, t) ** 2

    def energy(T):
        # split at the Laguerre zeros' natural scale so quad sees smooth pieces
        edges = np.linspace(0.0, T, 9)
        return sum(
            integrate.quad(dens, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
            for a, b in zip(edges[:-1], edges[1:])
        )

    hi = float(m + 2 * n + 1)
    while energy(hi) < e0:
        hi *= 2.0
        if hi > 1e4:
            raise ConvergenceError(f"could not bracket LG_{n},{ell} root")
    return optimize.brentq(lambda T: energy(T) - e0, 0.0, hi, xtol=1e-14, rtol=1e-15)


def asymptotic_lg0(ell, e0=E0_DEFAULT):
    """Large-|l| approximation |l| + t sqrt(2|l|) with t = erfinv(2 e0 - 1)."""
    _check_e0(e0)
    m = abs(ell)
    return m + erf_inv(2.0 * e0 - 1.0) * math.sqrt(2.0 * m)
