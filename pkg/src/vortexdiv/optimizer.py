"""Nelder-Mead search for low-divergence beams on the unit hypersphere.

A beam with fixed OAM l and N radial modes is encoded by a real vector
v of length 2N-1: psi_0 = v[0] is real (fixing the global phase) and
psi_j = v[2j-1] + i v[2j]. Every point the simplex touches is projected
onto |v| = 1 before the objective sees it, which makes the objective
scale-invariant.
"""
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import ee
from .errors import DegenerateVector, DomainError
from .spectrum import ModeSpectrum

__all__ = [
    "SearchConfig",
    "SearchResult",
    "params_to_spectrum",
    "spectrum_to_params",
    "project",
    "nelder_mead",
    "minimize",
    "minimize_m2_ee",
    "bound_sweep",
    "result_to_dict",
    "dumps_result",
    "REFERENCE_C0",
]

MIN_NORM = 1e-12
TRACE_POINTS = 1000
# (E0, c0) pairs of the empirical bound M^2_EE >= c0 + |l|
REFERENCE_C0 = ((1.0 - math.exp(-1.0), 0.5), (1.0 - math.exp(-2.0), 1.8), (0.98, 3.0))

_REFLECT, _EXPAND, _CONTRACT, _SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass(frozen=True)
class SearchConfig:
    """Settings for one minimization.

    ``simplex_step`` is the offset of the initial simplex vertices from
    the starting point along each coordinate, before projection.
    """

    ell: int
    e0: float = ee.E0_DEFAULT
    n_modes: int = 10
    restarts: int = 8
    max_iters: int = 5000
    seed: int = 0
    ftol: float = 1e-8
    xtol: float = 1e-8
    simplex_step: float = 0.25

    def __post_init__(self):
        if self.n_modes < 1:
            raise DomainError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.restarts < 1:
            raise DomainError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0.0 < self.e0 < 1.0:
            raise DomainError(f"e0 must lie in (0, 1), got {self.e0}")
        if self.seed < 0:
            raise DomainError(f"seed must be nonnegative, got {self.seed}")

    @property
    def dim(self):
        return 2 * self.n_modes - 1


@dataclass
class SearchResult:
    best_value: float
    best_spectrum: ModeSpectrum
    iteration_trace: list
    per_restart_bests: list
    best_restart: int = 0
    evaluations: int = 0
    min_evaluated: float = math.inf
    config: SearchConfig | None = field(default=None, repr=False)


def project(v):
    """``v / |v|``; raises DegenerateVector for |v| <= 1e-12."""
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if not norm > MIN_NORM:
        raise DegenerateVector(f"cannot project a vector of norm {norm} onto the sphere")
    return v / norm


def params_to_spectrum(v, ell):
    """Spectrum on modes (j, ell), j < N, from a real vector of length 2N-1."""
    v = project(v)
    if len(v) % 2 != 1:
        raise DomainError(f"parameter vector must have odd length 2N-1, got {len(v)}")
    coeffs = {(0, ell): complex(v[0])}
    for j in range(1, (len(v) + 1) // 2):
        coeffs[(j, ell)] = complex(v[2 * j - 1], v[2 * j])
    return ModeSpectrum(coeffs)


def spectrum_to_params(s, ell, n_modes):
    """Inverse of :func:`params_to_spectrum` for a spectrum with real psi_0."""
    v = np.zeros(2 * n_modes - 1)
    v[0] = s[(0, ell)].real
    for j in range(1, n_modes):
        c = s[(j, ell)]
        v[2 * j - 1], v[2 * j] = c.real, c.imag
    return v


def _safe(objective, x):
    try:
        return float(objective(x))
    except DegenerateVector:
        return math.inf


def nelder_mead(objective, x0, cfg):
    """Minimize ``objective`` over the unit sphere starting from ``x0``.

    Returns ``(x_best, f_best, trace)`` where ``trace`` holds
    ``(iteration, best simplex value)`` after every iteration.
    """
    n = len(x0)
    x0 = project(x0)
    simplex = [x0]
    for i in range(n):
        y = x0.copy()
        y[i] += cfg.simplex_step
        simplex.append(project(y))
    values = [_safe(objective, x) for x in simplex]
    trace = []

    def trial(x):
        try:
            x = project(x)
        except DegenerateVector:
            return x, math.inf
        return x, _safe(objective, x)

    for it in range(1, cfg.max_iters + 1):
        order = sorted(range(n + 1), key=lambda i: values[i])
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        spread = values[-1] - values[0]
        size = max(float(np.linalg.norm(x - simplex[0])) for x in simplex[1:])
        if spread <= cfg.ftol or size <= cfg.xtol:
            break

        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        xr, fr = trial(centroid + _REFLECT * (centroid - worst))
        if fr < values[0]:
            xe, fe = trial(centroid + _EXPAND * (centroid - worst))
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc, fc = trial(centroid + _CONTRACT * (xr - centroid))
                accept = fc <= fr
            else:
                xc, fc = trial(centroid + _CONTRACT * (worst - centroid))
                accept = fc < values[-1]
            if accept:
                simplex[-1], values[-1] = xc, fc
            else:
                best = simplex[0]
                for i in range(1, n + 1):
                    simplex[i], values[i] = trial(best + _SHRINK * (simplex[i] - best))
        trace.append((it, min(values)))

    i = int(np.argmin(values))
    return simplex[i], values[i], trace


def _threads():
    raw = os.environ.get("VORTEXDIV_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _start(cfg, restart):
    if restart == 0:
        x = np.zeros(cfg.dim)
        x[0] = 1.0
        return x
    rng = np.random.default_rng([cfg.seed, restart])
    return rng.standard_normal(cfg.dim)


def minimize(value_of, cfg):
    """Run all restarts of a search minimizing ``value_of(spectrum)``.

    Restart 0 starts at LG_{0,l}; the others start from seeded normal
    draws. Restarts may run on a thread pool; the merge is by restart
    index, so the result never depends on scheduling.
    """
    def run(restart):
        low, count = [math.inf], [0]

        def objective(x):
            val = value_of(params_to_spectrum(x, cfg.ell))
            low[0] = min(low[0], val)
            count[0] += 1
            return val

        out = nelder_mead(objective, _start(cfg, restart), cfg)
        return out + (count[0], low[0])

    workers = min(_threads(), cfg.restarts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, range(cfg.restarts)))
    else:
        runs = [run(r) for r in range(cfg.restarts)]

    bests = [r[1] for r in runs]
    winner = min(range(cfg.restarts), key=lambda r: (bests[r], r))
    x, f, trace, _, _ = runs[winner]
    return SearchResult(
        best_value=f,
        best_spectrum=params_to_spectrum(x, cfg.ell),
        iteration_trace=trace,
        per_restart_bests=bests,
        best_restart=winner,
        evaluations=sum(r[3] for r in runs),
        min_evaluated=min(r[4] for r in runs),
        config=cfg,
    )


def minimize_m2_ee(cfg):
    """Lowest M^2_EE found over N-mode beams of fixed OAM."""
    return minimize(lambda s: ee.m2_ee(s, cfg.e0).m2_ee, cfg)


def bound_sweep(ells, e0, template):
    """Rows ``(l, best M^2_EE, T_{0,l}, T_{1,l}, c0 + l)`` for each l.

    ``c0 + l`` is None when ``e0`` is not one of the reference fractions.
    """
    c0 = next((c for e, c in REFERENCE_C0 if abs(e - e0) < 1e-9), None)
    rows = []
    for ell in ells:
        if ell < 0:
            raise DomainError(f"bound sweep needs l >= 0, got {ell}")
        cfg = SearchConfig(**{**asdict(template), "ell": int(ell), "e0": e0})
        res = minimize_m2_ee(cfg)
        rows.append((
            int(ell),
            res.best_value,
            ee.m2_ee_lg(0, ell, e0),
            ee.m2_ee_lg(1, ell, e0),
            None if c0 is None else c0 + ell,
        ))
    return rows


def _decimate(trace, limit=TRACE_POINTS):
    if len(trace) <= limit:
        return list(trace)
    idx = np.unique(np.linspace(0, len(trace) - 1, limit).round().astype(int))
    return [trace[i] for i in idx]


def result_to_dict(res):
    """JSON-ready form: config, best value and spectrum, restarts, trace."""
    return {
        "config": asdict(res.config) if res.config is not None else None,
        "best_value": res.best_value,
        "best_restart": res.best_restart,
        "best_spectrum": res.best_spectrum.to_dict(),
        "per_restart_bests": list(res.per_restart_bests),
        "evaluations": res.evaluations,
        "min_evaluated": res.min_evaluated,
        "trace": [[int(i), float(v)] for i, v in _decimate(res.iteration_trace)],
    }


def dumps_result(res):
    return json.dumps(result_to_dict(res), indent=2, sort_keys=True)
