"""Pure-Python reference for the encircled-energy hot loops.

Mirrors the compiled ``_kernels`` extension function for function.

A spectrum enters as a *layout* of flat arrays:

``ms``
    |l| of each OAM block.
``offs``
    block offsets into ``cre``/``cim``, which hold the dense radial
    coefficients psi_0..psi_{N-1} of each block.
``goffs``, ``gram``, ``jmax``
    per-block prefix Gram tables: ``gram[goffs[b] + (j*N + n)*N + n']`` is
    the integral over [0, 2j] of phi_n phi_n' for j = 0..jmax, where phi_n
    are the normalized Laguerre functions of that block.

``(ure, uim)`` is the unit complex number (1+iZ)/(1-iZ) whose n-th power
multiplies psi_n.
"""
import math

import numpy as np

PANEL_WIDTH = 2.0
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_GL = list(zip(GL_NODES.tolist(), GL_WEIGHTS.tolist()))
_MAX_ITER = 200
_FTOL = 1e-15

BACKEND = "python"


def _rotated(offs, cre, cim, ure, uim):
    rre, rim = [], []
    for b in range(len(offs) - 1):
        pre, pim = 1.0, 0.0
        for i in range(offs[b], offs[b + 1]):
            rre.append(cre[i] * pre - cim[i] * pim)
            rim.append(cre[i] * pim + cim[i] * pre)
            pre, pim = pre * ure - pim * uim, pre * uim + pim * ure
    return rre, rim


def _density_rot(ms, offs, rre, rim, t):
    total = 0.0
    logt = math.log(t) if t > 0 else 0.0
    for b in range(len(ms)):
        m = int(ms[b])
        if t == 0.0:
            phi = 1.0 if m == 0 else 0.0
        else:
            phi = math.exp(0.5 * (m * logt - t - math.lgamma(m + 1)))
        prev = 0.0
        sre = sim = 0.0
        for n, i in enumerate(range(offs[b], offs[b + 1])):
            sre += phi * rre[i]
            sim += phi * rim[i]
            # normalized Laguerre function recurrence in n
            nxt = (
                (2 * n + 1 + m - t) * phi * math.sqrt((n + 1.0) / (n + m + 1.0))
                - math.sqrt(n * (n + 1.0) * (n + m) / (n + m + 1.0)) * prev
            ) / (n + 1.0)
            prev, phi = phi, nxt
        total += sre * sre + sim * sim
    return total


def _panel(ms, offs, rre, rim, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    acc = 0.0
    for x, w in _GL:
        acc += w * _density_rot(ms, offs, rre, rim, mid + half * x)
    return acc * half


def _tabulated(offs, goffs, gram, rre, rim, j):
    acc = 0.0
    for b in range(len(offs) - 1):
        lo = offs[b]
        nb = offs[b + 1] - lo
        base = goffs[b] + j * nb * nb
        for n in range(nb):
            row = base + n * nb
            an, bn = rre[lo + n], rim[lo + n]
            acc += gram[row + n] * (an * an + bn * bn)
            cross = 0.0
            for k in range(n + 1, nb):
                cross += gram[row + k] * (an * rre[lo + k] + bn * rim[lo + k])
            acc += 2.0 * cross
    return acc


def _cumulative_rot(ms, offs, goffs, gram, jmax, rre, rim, T):
    full = int(T // PANEL_WIDTH)
    j = min(full, jmax)
    acc = _tabulated(offs, goffs, gram, rre, rim, j) if j > 0 else 0.0
    for jj in range(j, full):
        acc += _panel(ms, offs, rre, rim, jj * PANEL_WIDTH, (jj + 1) * PANEL_WIDTH)
    start = full * PANEL_WIDTH
    if T > start:
        acc += _panel(ms, offs, rre, rim, start, T)
    return acc


def density(ms, offs, cre, cim, ure, uim, t):
    """Sum over blocks of |U_l(t)|^2."""
    rre, rim = _rotated(offs, cre, cim, ure, uim)
    return _density_rot(ms, offs, rre, rim, t)


def cumulative(ms, offs, cre, cim, goffs, gram, jmax, ure, uim, T):
    """Integral of the density over [0, T]."""
    rre, rim = _rotated(offs, cre, cim, ure, uim)
    return _cumulative_rot(ms, offs, goffs, gram, jmax, rre, rim, T)


def _solve_rot(ms, offs, goffs, gram, jmax, rre, rim, e0, guess):
    # Newton on the monotone cumulative, safeguarded by a bracket that
    # expands geometrically until the root is enclosed
    lo, hi = 0.0, math.inf
    x = guess if guess > 0 else 1.0
    for _ in range(_MAX_ITER):
        fx = _cumulative_rot(ms, offs, goffs, gram, jmax, rre, rim, x) - e0
        if abs(fx) <= _FTOL:
            return x
        if fx > 0:
            hi = x
        else:
            lo = x
        if hi < math.inf and hi - lo <= 4e-16 * hi:
            return x
        d = _density_rot(ms, offs, rre, rim, x)
        cand = x - fx / d if d > 0 else -1.0
        # near a zero of the density Newton can leap far past the root
        if hi == math.inf and cand > 2.0 * x:
            cand = 2.0 * x
        if not lo < cand < hi:
            cand = 2.0 * x if hi == math.inf else 0.5 * (lo + hi)
        elif abs(cand - x) <= 1e-15 * x:
            return cand
        x = cand
    return -1.0


def solve_t(ms, offs, cre, cim, goffs, gram, jmax, ure, uim, e0, guess):
    """Root of cumulative(T) = e0; -1.0 on failure."""
    rre, rim = _rotated(offs, cre, cim, ure, uim)
    return _solve_rot(ms, offs, goffs, gram, jmax, rre, rim, e0, guess)


def objective_scan(ms, offs, cre, cim, goffs, gram, jmax, e0, zs, t_lb, t_guess):
    """(1+Z^2) T(Z) at each Z, visiting Z in order of increasing |Z|.

    A point is skipped (left at +inf) when (1+Z^2) t_lb already reaches the
    best value seen, t_lb being a Z-independent lower bound on T(Z).
    Returns ``(f, T)`` arrays; a failed solve stores T = -1.
    """
    nz = len(zs)
    f = np.full(nz, np.inf)
    tv = np.full(nz, np.nan)
    order = sorted(range(nz), key=lambda i: (abs(zs[i]), i))
    best = math.inf
    # warm starts extrapolated along each side of Z = 0 separately
    hist = {True: [t_guess, t_guess], False: [t_guess, t_guess]}
    for i in order:
        z = float(zs[i])
        scale = 1.0 + z * z
        if scale * t_lb >= best:
            continue
        side = hist[z >= 0.0]
        guess = 2.0 * side[1] - side[0]
        if not guess > 0.0:
            guess = side[1]
        rre, rim = _rotated(offs, cre, cim, (1.0 - z * z) / scale, 2.0 * z / scale)
        t = _solve_rot(ms, offs, goffs, gram, jmax, rre, rim, e0, guess)
        tv[i] = t
        if t < 0:
            continue
        if z == 0.0:
            hist[True] = [t, t]
            hist[False] = [t, t]
        else:
            side[0], side[1] = side[1], t
        f[i] = scale * t
        best = min(best, f[i])
    return f, tv
