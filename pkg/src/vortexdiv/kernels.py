"""Backend selection and data layout for the encircled-energy hot loops.

The compiled extension is used when it imports cleanly; setting
``VORTEXDIV_PURE_PYTHON=1`` forces the pure-Python reference. Both
backends consume the same flat :class:`Layout`.
"""
import functools
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import _kernels_py

if os.environ.get("VORTEXDIV_PURE_PYTHON", "") not in ("", "0"):
    backend = _kernels_py
else:
    try:
        from . import _kernels as backend
    except ImportError:  # extension not built
        backend = _kernels_py

BACKEND = backend.BACKEND
PANEL_WIDTH = _kernels_py.PANEL_WIDTH
_MAX_PANELS = 64
_GRAM_BUDGET = 1 << 22
BOUND_STEP = 0.125
BOUND_TMAX = 64.0


def laguerre_functions(m, nmax, t):
    """Normalized Laguerre functions phi_n(t), n = 0..nmax-1, on an array ``t``.

    phi_n(t) = sqrt(e^-t t^m n! / (m+n)!) L_n^(m)(t); shape ``(nmax,) + t.shape``.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty((nmax,) + t.shape)
    with np.errstate(divide="ignore"):
        logt = np.where(t > 0, np.log(np.where(t > 0, t, 1.0)), 0.0)
    phi = np.exp(0.5 * (m * logt - t - math.lgamma(m + 1)))
    if m > 0:
        phi = np.where(t > 0, phi, 0.0)
    prev = np.zeros_like(t)
    for n in range(nmax):
        out[n] = phi
        nxt = (
            (2 * n + 1 + m - t) * phi * math.sqrt((n + 1.0) / (n + m + 1.0))
            - math.sqrt(n * (n + 1.0) * (n + m) / (n + m + 1.0)) * prev
        ) / (n + 1.0)
        prev, phi = phi, nxt
    return out


@functools.lru_cache(maxsize=256)
def _gram_table(m, nmax, jmax):
    # prefix integrals over [0, 2j] of phi_n phi_n', same 16-point panels as the kernels
    x, w = _kernels_py.GL_NODES, _kernels_py.GL_WEIGHTS
    half = PANEL_WIDTH / 2.0
    t = (np.arange(jmax)[:, None] * PANEL_WIDTH + half) + half * x[None, :]
    phi = laguerre_functions(m, nmax, t)  # (n, j, k)
    panels = np.einsum("njk,mjk,k->jnm", phi, phi, w) * half
    table = np.zeros((jmax + 1, nmax, nmax))
    np.cumsum(panels, axis=0, out=table[1:])
    table.setflags(write=False)
    return table


@functools.lru_cache(maxsize=256)
def abs_gram_table(m, nmax):
    """Prefix integrals of |phi_n phi_n'| on the grid t_j = j * BOUND_STEP.

    Shape ``(J+1, nmax, nmax)`` with t_J = BOUND_TMAX. Every zero of
    phi_0..phi_{nmax-1} is a breakpoint, so each Gauss-Legendre piece sees
    a smooth integrand and the table is accurate to rounding.
    """
    n_cells = int(round(BOUND_TMAX / BOUND_STEP))
    grid = np.arange(n_cells + 1) * BOUND_STEP
    zeros = [special.roots_genlaguerre(n, m)[0] for n in range(1, nmax)]
    cuts = np.unique(np.concatenate([grid] + zeros))
    cuts = cuts[cuts <= BOUND_TMAX]
    x, w = _kernels_py.GL_NODES, _kernels_py.GL_WEIGHTS
    half = 0.5 * np.diff(cuts)
    t = (cuts[:-1] + half)[:, None] + half[:, None] * x[None, :]
    phi = np.abs(laguerre_functions(m, nmax, t))  # (n, piece, node)
    pieces = np.einsum("npk,qpk,k,p->pnq", phi, phi, w, half)
    cell = np.searchsorted(grid, cuts[:-1], side="right") - 1
    per_cell = np.zeros((n_cells, nmax, nmax))
    np.add.at(per_cell, cell, pieces)
    table = np.zeros((n_cells + 1, nmax, nmax))
    np.cumsum(per_cell, axis=0, out=table[1:])
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class Layout:
    """Flat-array view of a set of OAM blocks, ready for the kernels."""

    ms: np.ndarray
    offs: np.ndarray
    cre: np.ndarray
    cim: np.ndarray
    goffs: np.ndarray
    gram: np.ndarray
    jmax: int

    @classmethod
    def from_blocks(cls, blocks):
        """Build from ``[(abs_ell, [psi_0, psi_1, ...]), ...]``."""
        ms, offs, coeffs, tables, goffs = [], [0], [], [], [0]
        widest = max(len(c) for _, c in blocks)
        jmax = int(max(1, min(_MAX_PANELS, _GRAM_BUDGET // (widest * widest * len(blocks)))))
        for m, block in blocks:
            ms.append(int(m))
            coeffs.extend(complex(c) for c in block)
            offs.append(len(coeffs))
            tab = _gram_table(int(m), len(block), jmax)
            tables.append(tab.ravel())
            goffs.append(goffs[-1] + tab.size)
        arr = np.asarray(coeffs, dtype=complex)
        return cls(
            ms=np.asarray(ms, dtype=np.int_),
            offs=np.asarray(offs, dtype=np.int_),
            cre=np.ascontiguousarray(arr.real),
            cim=np.ascontiguousarray(arr.imag),
            goffs=np.asarray(goffs[:-1], dtype=np.int_),
            gram=np.concatenate(tables),
            jmax=jmax,
        )

    @property
    def _tables(self):
        return self.goffs, self.gram, self.jmax


def _unit(z):
    if math.isinf(z):
        return -1.0, 0.0
    scale = 1.0 + z * z
    return (1.0 - z * z) / scale, 2.0 * z / scale


def density(lay, z, t, impl=None):
    """Sum_l |U_l(t, Z)|^2; ``z = inf`` selects the far-field (-1)^n weights."""
    impl = impl or backend
    return impl.density(lay.ms, lay.offs, lay.cre, lay.cim, *_unit(z), t)


def cumulative(lay, z, T, impl=None):
    impl = impl or backend
    return impl.cumulative(lay.ms, lay.offs, lay.cre, lay.cim, *lay._tables, *_unit(z), T)


def solve_t(lay, z, e0, guess=1.0, impl=None):
    """T with cumulative(T) = e0, or -1.0 if the solver failed."""
    impl = impl or backend
    return impl.solve_t(lay.ms, lay.offs, lay.cre, lay.cim, *lay._tables, *_unit(z), e0, guess)


def objective_scan(lay, e0, zs, t_lb, t_guess=1.0, impl=None):
    impl = impl or backend
    return impl.objective_scan(
        lay.ms, lay.offs, lay.cre, lay.cim, *lay._tables, e0,
        np.ascontiguousarray(zs, dtype=float), t_lb, t_guess,
    )
