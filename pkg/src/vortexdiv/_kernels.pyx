# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled encircled-energy hot loops.

Same contract as ``_kernels_py``; see that module for the layout format.
All loops run without the GIL so restarts can share a thread pool.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, lgamma, sqrt, fabs, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

PANEL_WIDTH = 2.0
BACKEND = "cython"

cdef enum:
    NGL = 16
cdef double C_PANEL = 2.0
cdef double GLX[NGL]
cdef double GLW[NGL]
cdef int _MAX_ITER = 200
cdef double _FTOL = 1e-15

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(NGL)
for _i in range(NGL):
    GLX[_i] = GL_NODES[_i]
    GLW[_i] = GL_WEIGHTS[_i]


cdef struct Work:
    int nb
    const long *ms
    const long *offs
    const long *goffs
    const double *gram
    int jmax
    double *rre      # rotated coefficients
    double *rim
    double *ca       # recurrence weight on phi_n
    double *cb       # recurrence weight on phi_{n-1}
    double *lg       # lgamma(m+1) per block


cdef class _Scratch:
    cdef Work w
    cdef object keep

    def __cinit__(self, const long[::1] ms, const long[::1] offs, Py_ssize_t ncoef,
                  const long[::1] goffs, const double[::1] gram, int jmax):
        cdef Py_ssize_t nb = ms.shape[0]
        cdef Py_ssize_t b, i, k
        cdef long m
        self.keep = (ms, offs, goffs, gram)
        self.w.nb = nb
        self.w.ms = &ms[0]
        self.w.offs = &offs[0]
        self.w.goffs = &goffs[0]
        self.w.gram = &gram[0]
        self.w.jmax = jmax
        self.w.rre = <double *>malloc(max(ncoef, 1) * sizeof(double))
        self.w.rim = <double *>malloc(max(ncoef, 1) * sizeof(double))
        self.w.ca = <double *>malloc(max(ncoef, 1) * sizeof(double))
        self.w.cb = <double *>malloc(max(ncoef, 1) * sizeof(double))
        self.w.lg = <double *>malloc(max(nb, 1) * sizeof(double))
        if (self.w.rre == NULL or self.w.rim == NULL or self.w.ca == NULL
                or self.w.cb == NULL or self.w.lg == NULL):
            raise MemoryError()
        for b in range(nb):
            m = ms[b]
            self.w.lg[b] = lgamma(m + 1.0)
            k = 0
            for i in range(offs[b], offs[b + 1]):
                self.w.ca[i] = sqrt((k + 1.0) / (k + m + 1.0)) / (k + 1.0)
                self.w.cb[i] = sqrt(k * (k + 1.0) * (k + m) / (k + m + 1.0)) / (k + 1.0)
                k += 1

    def __dealloc__(self):
        free(self.w.rre)
        free(self.w.rim)
        free(self.w.ca)
        free(self.w.cb)
        free(self.w.lg)


cdef void _rotate(Work *w, const double *cre, const double *cim,
                  double ure, double uim) noexcept nogil:
    cdef int b
    cdef long i
    cdef double pre, pim, tmp
    for b in range(w.nb):
        pre = 1.0
        pim = 0.0
        for i in range(w.offs[b], w.offs[b + 1]):
            w.rre[i] = cre[i] * pre - cim[i] * pim
            w.rim[i] = cre[i] * pim + cim[i] * pre
            tmp = pre * ure - pim * uim
            pim = pre * uim + pim * ure
            pre = tmp


cdef double _density(Work *w, double t) noexcept nogil:
    cdef double total = 0.0, phi, prev, nxt, sre, sim
    cdef double logt = log(t) if t > 0.0 else 0.0
    cdef int b, n
    cdef long i, m
    for b in range(w.nb):
        m = w.ms[b]
        if t == 0.0:
            phi = 1.0 if m == 0 else 0.0
        else:
            phi = exp(0.5 * (m * logt - t - w.lg[b]))
        prev = 0.0
        sre = 0.0
        sim = 0.0
        n = 0
        for i in range(w.offs[b], w.offs[b + 1]):
            sre += phi * w.rre[i]
            sim += phi * w.rim[i]
            # normalized Laguerre function recurrence in n
            nxt = (2 * n + 1 + m - t) * phi * w.ca[i] - w.cb[i] * prev
            prev = phi
            phi = nxt
            n += 1
        total += sre * sre + sim * sim
    return total


cdef double _panel(Work *w, double a, double b) noexcept nogil:
    cdef double half = 0.5 * (b - a), mid = 0.5 * (a + b), acc = 0.0
    cdef int k
    for k in range(NGL):
        acc += GLW[k] * _density(w, mid + half * GLX[k])
    return acc * half


cdef double _tabulated(Work *w, int j) noexcept nogil:
    cdef double acc = 0.0, cross, an, bn
    cdef long lo, nn, base, row, n, k
    cdef int b
    for b in range(w.nb):
        lo = w.offs[b]
        nn = w.offs[b + 1] - lo
        base = w.goffs[b] + j * nn * nn
        for n in range(nn):
            row = base + n * nn
            an = w.rre[lo + n]
            bn = w.rim[lo + n]
            acc += w.gram[row + n] * (an * an + bn * bn)
            cross = 0.0
            for k in range(n + 1, nn):
                cross += w.gram[row + k] * (an * w.rre[lo + k] + bn * w.rim[lo + k])
            acc += 2.0 * cross
    return acc


cdef double _cumulative(Work *w, double T) noexcept nogil:
    cdef int full = <int>(T // C_PANEL), j, jj
    cdef double acc = 0.0, start
    j = full if full < w.jmax else w.jmax
    if j > 0:
        acc = _tabulated(w, j)
    for jj in range(j, full):
        acc += _panel(w, jj * C_PANEL, (jj + 1) * C_PANEL)
    start = full * C_PANEL
    if T > start:
        acc += _panel(w, start, T)
    return acc


cdef double _solve(Work *w, double e0, double guess) noexcept nogil:
    # Newton on the monotone cumulative, safeguarded by a bracket that
    # expands geometrically until the root is enclosed
    cdef double lo = 0.0, hi = INFINITY, x, fx, d, cand
    cdef int it
    x = guess if guess > 0.0 else 1.0
    for it in range(_MAX_ITER):
        fx = _cumulative(w, x) - e0
        if fabs(fx) <= _FTOL:
            return x
        if fx > 0.0:
            hi = x
        else:
            lo = x
        if hi < INFINITY and hi - lo <= 4e-16 * hi:
            return x
        d = _density(w, x)
        cand = x - fx / d if d > 0.0 else -1.0
        # near a zero of the density Newton can leap far past the root
        if hi == INFINITY and cand > 2.0 * x:
            cand = 2.0 * x
        if not (lo < cand < hi):
            cand = 2.0 * x if hi == INFINITY else 0.5 * (lo + hi)
        elif fabs(cand - x) <= 1e-15 * x:
            return cand
        x = cand
    return -1.0


_NO_TABLE = (np.zeros(1, dtype=np.int_), np.zeros(1))


def density(const long[::1] ms, const long[::1] offs, const double[::1] cre,
            const double[::1] cim, double ure, double uim, double t):
    """Sum over blocks of |U_l(t)|^2."""
    cdef _Scratch s = _Scratch(ms, offs, cre.shape[0], _NO_TABLE[0], _NO_TABLE[1], 0)
    cdef double out
    with nogil:
        _rotate(&s.w, &cre[0], &cim[0], ure, uim)
        out = _density(&s.w, t)
    return out


def cumulative(const long[::1] ms, const long[::1] offs, const double[::1] cre,
               const double[::1] cim, const long[::1] goffs, const double[::1] gram,
               int jmax, double ure, double uim, double T):
    """Integral of the density over [0, T]."""
    cdef _Scratch s = _Scratch(ms, offs, cre.shape[0], goffs, gram, jmax)
    cdef double out
    with nogil:
        _rotate(&s.w, &cre[0], &cim[0], ure, uim)
        out = _cumulative(&s.w, T)
    return out


def solve_t(const long[::1] ms, const long[::1] offs, const double[::1] cre,
            const double[::1] cim, const long[::1] goffs, const double[::1] gram,
            int jmax, double ure, double uim, double e0, double guess):
    """Root of cumulative(T) = e0; -1.0 on failure."""
    cdef _Scratch s = _Scratch(ms, offs, cre.shape[0], goffs, gram, jmax)
    cdef double out
    with nogil:
        _rotate(&s.w, &cre[0], &cim[0], ure, uim)
        out = _solve(&s.w, e0, guess)
    return out


def objective_scan(const long[::1] ms, const long[::1] offs, const double[::1] cre,
                   const double[::1] cim, const long[::1] goffs, const double[::1] gram,
                   int jmax, double e0, zs_in, double t_lb, double t_guess):
    """(1+Z^2) T(Z) at each Z with lower-bound pruning; see ``_kernels_py``."""
    cdef double[::1] zs = np.ascontiguousarray(zs_in, dtype=np.float64)
    cdef Py_ssize_t nz = zs.shape[0]
    f_arr = np.full(nz, np.inf)
    t_arr = np.full(nz, np.nan)
    cdef double[::1] f = f_arr
    cdef double[::1] tv = t_arr
    cdef long[::1] order = np.asarray(
        sorted(range(nz), key=lambda i: (abs(zs[i]), i)), dtype=np.int_)
    cdef _Scratch s = _Scratch(ms, offs, cre.shape[0], goffs, gram, jmax)
    cdef double best = INFINITY, z, scale, t, guess
    # warm starts extrapolated along each side of Z = 0 separately
    cdef double p0 = t_guess, p1 = t_guess, n0 = t_guess, n1 = t_guess
    cdef Py_ssize_t j, i
    with nogil:
        for j in range(nz):
            i = order[j]
            z = zs[i]
            scale = 1.0 + z * z
            if scale * t_lb >= best:
                continue
            if z >= 0.0:
                guess = 2.0 * p1 - p0
                if not guess > 0.0:
                    guess = p1
            else:
                guess = 2.0 * n1 - n0
                if not guess > 0.0:
                    guess = n1
            _rotate(&s.w, &cre[0], &cim[0], (1.0 - z * z) / scale, 2.0 * z / scale)
            t = _solve(&s.w, e0, guess)
            tv[i] = t
            if t < 0.0:
                continue
            if z == 0.0:
                p0 = t
                p1 = t
                n0 = t
                n1 = t
            elif z > 0.0:
                p0 = p1
                p1 = t
            else:
                n0 = n1
                n1 = t
            f[i] = scale * t
            if f[i] < best:
                best = f[i]
    return f_arr, t_arr
