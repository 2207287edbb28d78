"""Command-line front end.

Physical lengths are SI (metres) at this boundary only. Every file the
tool writes gets a sibling ``<stem>.manifest.json`` recording how it was
produced; ``vortexdiv replay MANIFEST`` re-runs the recorded command.
"""
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np

from . import __version__, cib, ee, field, optimizer
from .errors import TruncationError, VortexDivError
from .spectrum import (
    ModeSpectrum,
    alpha_beta_phi,
    load_spectrum,
    m2_rms,
    mean_abs_oam,
    rms_geometry,
    sigma_r_squared,
)

EXIT_OK, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2
DEFAULT_W0 = 1e-3
DEFAULT_LAMBDA = 633e-9
ORACLE_RTOL = 1e-3
VERIFY_TOL = 1e-8


class InputError(click.ClickException):
    exit_code = EXIT_INPUT


class VerificationFailed(click.ClickException):
    exit_code = EXIT_VERIFY


def _complex(ctx, param, value):
    """Parse ``RE`` or ``RE,IM`` (possibly repeated) into complex numbers."""
    if value is None:
        return None

    def one(text):
        parts = text.split(",")
        try:
            if len(parts) == 1:
                return complex(float(parts[0]), 0.0)
            if len(parts) == 2:
                return complex(float(parts[0]), float(parts[1]))
        except ValueError:
            pass
        raise click.BadParameter(f"expected RE or RE,IM, got {text!r}")

    if isinstance(value, tuple):
        return tuple(one(v) for v in value)
    return one(value)


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest_path(out):
    out = Path(out)
    return out.with_name(out.stem + ".manifest.json")


class _Run:
    """Collects what a subcommand did and writes outputs with manifests."""

    def __init__(self, name, params):
        self.name = name
        self.params = {k: _jsonable(v) for k, v in params.items()}
        self.argv = list(click.get_current_context().meta.get("vortexdiv.argv", sys.argv[1:]))
        self.start = time.perf_counter()
        self.notes = []

    def emit(self, path, text, inputs=()):
        _atomic_write(path, text)
        manifest = {
            "subcommand": self.name,
            "inputs": [str(p) for p in inputs if p],
            "output": str(path),
            "parameters": self.params,
            "seed": self.params.get("seed"),
            "argv": self.argv,
            "tool_version": __version__,
            "duration_s": time.perf_counter() - self.start,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "notes": self.notes,
        }
        _atomic_write(manifest_path(path), json.dumps(manifest, indent=2) + "\n")


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    return v


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load(path):
    try:
        return load_spectrum(path)
    except OSError as exc:
        raise InputError(f"cannot read spectrum file: {exc}") from None
    except VortexDivError as exc:
        raise InputError(f"{path}: {exc}") from None


def _wavenumber(lam):
    if not lam > 0:
        raise InputError(f"--lambda must be positive, got {lam}")
    return 2.0 * math.pi / lam


def _geometry(s, w0, lam):
    if not w0 > 0:
        raise InputError(f"--w0 must be positive, got {w0}")
    try:
        return rms_geometry(s, w0, _wavenumber(lam))
    except VortexDivError as exc:
        raise InputError(str(exc)) from None


class _Group(click.Group):
    """Remembers the raw argument list for manifests; maps library errors to exit 2."""

    def parse_args(self, ctx, args):
        ctx.meta["vortexdiv.argv"] = list(args)
        return super().parse_args(ctx, args)

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except VortexDivError as exc:
            raise InputError(f"{type(exc).__name__}: {exc}") from None


@click.group(cls=_Group, context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="vortexdiv")
def main():
    """Beam-quality and divergence figures of OAM beams from LG spectra.

    Spectrum files are JSON: {"modes": [{"n": 0, "l": 1, "re": 1.0, "im": 0.0}, ...]}.
    Exit codes: 0 ok, 1 verification failure, 2 usage or input error.
    Set VORTEXDIV_THREADS to cap parallelism.
    """


@main.command("rms")
@click.option("--spectrum", "spectrum_path", required=True, type=click.Path(dir_okay=False),
              help="Spectrum JSON file.")
@click.option("--w0", type=float, default=None, help="LG waist parameter w0 [m].")
@click.option("--lambda", "lam", type=float, default=None, help="Vacuum wavelength [m].")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the JSON report here as well as to stdout.")
def cmd_rms(spectrum_path, w0, lam, out):
    """rms moments and M^2 (dimensionless); waist [m], divergence [rad], waist position [m]
    when both --w0 and --lambda are given."""
    run = _Run("rms", {"w0": w0, "lambda": lam})
    s = _load(spectrum_path)
    alpha, beta, phi = alpha_beta_phi(s)
    m2 = m2_rms(s)
    oam = mean_abs_oam(s)
    report = {
        "mean_abs_l": oam,
        "phi": phi,
        "alpha": alpha,
        "beta": [beta.real, beta.imag],
        "m2_rms": m2,
        "bound_margin": m2 - (1.0 + oam),
    }
    if (w0 is None) != (lam is None):
        raise InputError("--w0 and --lambda must be given together")
    if w0 is not None:
        g = _geometry(s, w0, lam)
        report.update(sigma_m_m=g.sigma_m, theta_rms_rad=g.theta_rms, z_m_m=g.z_m,
                      rayleigh_range_m=g.z0)
    text = _dump(report)
    click.echo(text, nl=False)
    if out:
        run.emit(out, text, [spectrum_path])


@main.command("cib-sweep")
@click.option("--p", "ps", multiple=True, callback=_complex,
              help="CiB radial index p as RE[,IM]; repeatable. Default: 2 and 4.")
@click.option("--l", "ls", multiple=True, type=int,
              help="OAM l0 (integer); repeatable. Default: 0 1 2 3.")
@click.option("--xi", "xis", multiple=True, callback=_complex,
              help="|xi| grid values (dimensionless, RE[,IM] accepted, modulus used); "
                   "repeatable. Default: 41 points on [0, 1].")
@click.option("--n-max", type=int, default=cib.N_MAX_DEFAULT, show_default=True,
              help="Highest radial index kept for the series cross-check.")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Output CSV: xi_abs,p_re,p_im,l0,m2_rms.")
@click.option("--verify", is_flag=True,
              help="Check |xi|=1 rows against the unit-circle closed form and every row "
                   "against the truncated series; exit 1 on mismatch.")
def cmd_cib_sweep(ps, ls, xis, n_max, out, verify):
    """M^2_rms (dimensionless) of circular beams against |xi|."""
    ps = ps or (2 + 0j, 4 + 0j)
    ls = ls or (0, 1, 2, 3)
    grid = [abs(x) for x in xis] if xis else np.linspace(0.0, 1.0, 41).tolist()
    run = _Run("cib-sweep", {"p": ps, "l": ls, "xi": grid, "n_max": n_max, "verify": verify})
    rows, mismatches = [], []
    for p in ps:
        for ell0 in ls:
            for row in cib.cib_sweep(p, ell0, grid, n_max):
                rows.append(row)
                if row.error:
                    run.notes.append(f"|xi|={row.xi_abs} p={p} l0={ell0}: {row.error}")
                    continue
                if not verify:
                    continue
                if abs(row.xi_abs - 1.0) < 1e-14:
                    ref = cib.cib_m2_unit_xi(p, ell0)
                    if abs(ref - row.m2_rms) > VERIFY_TOL:
                        mismatches.append((row, ref))
                if row.m2_series is not None and abs(row.m2_series - row.m2_rms) > 1e-7:
                    mismatches.append((row, row.m2_series))
    if rows and all(r.error for r in rows):
        raise InputError("every sweep row failed: " + rows[0].error)
    buf = io.StringIO()
    cib.write_sweep_csv(rows, buf)
    run.emit(out, buf.getvalue())
    click.echo(f"wrote {len(rows)} rows to {out} ({sum(1 for r in rows if r.error)} failed)")
    if mismatches:
        for row, ref in mismatches:
            click.echo(f"mismatch at |xi|={row.xi_abs} p={row.p} l0={row.ell0}: "
                       f"{row.m2_rms} vs {ref}", err=True)
        raise VerificationFailed(f"{len(mismatches)} verification mismatches")


def _spectrum_or_cib(spectrum_path, p, xi, ell, n_max):
    if spectrum_path:
        return _load(spectrum_path)
    if p is None or xi is None or ell is None:
        raise InputError("give --spectrum, or all of --p, --xi and --l for a circular beam")
    try:
        return cib.cib_coefficients(cib.CiBParams(xi=xi, p=p, ell0=ell), n_max)
    except TruncationError as exc:
        raise InputError(f"{exc}; raise --n-max") from None
    except VortexDivError as exc:
        raise InputError(str(exc)) from None


@main.command("ee")
@click.option("--spectrum", "spectrum_path", type=click.Path(dir_okay=False), default=None,
              help="Spectrum JSON file.")
@click.option("--p", callback=_complex, default=None,
              help="Circular beam instead of a file: radial index p, RE[,IM].")
@click.option("--xi", callback=_complex, default=None,
              help="Circular beam shape parameter xi, RE[,IM] (dimensionless).")
@click.option("--l", "ell", type=int, default=None, help="Circular beam OAM l0 (integer).")
@click.option("--n-max", type=int, default=cib.N_MAX_DEFAULT, show_default=True,
              help="Circular beam truncation.")
@click.option("--e0", type=float, default=ee.E0_DEFAULT, show_default=True,
              help="Encircled energy fraction in (0, 1).")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the JSON result here.")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), default=None,
              help="Write the CSV trace Z,T,objective (Z in Rayleigh ranges).")
def cmd_ee(spectrum_path, p, xi, ell, n_max, e0, out, trace_path):
    """Encircled-energy beam quality M^2_EE (dimensionless)."""
    run = _Run("ee", {"p": p, "xi": xi, "l": ell, "n_max": n_max, "e0": e0})
    s = _spectrum_or_cib(spectrum_path, p, xi, ell, n_max)
    try:
        res = ee.m2_ee(s, e0)
        trace = ee.objective_trace(s, e0) if trace_path else None
    except VortexDivError as exc:
        raise InputError(f"encircled-energy solve failed: {exc}") from None
    text = _dump({
        "e0": res.e0,
        "t_infinity": res.t_infinity,
        "z_star": res.z_star,
        "t_at_zstar": res.t_at_zstar,
        "m2_ee": res.m2_ee,
    })
    click.echo(text, nl=False)
    if out:
        run.emit(out, text, [spectrum_path])
    if trace_path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["Z", "T", "objective"])
        w.writerows([repr(z), repr(t), repr(f)] for z, t, f in trace)
        run.emit(trace_path, buf.getvalue(), [spectrum_path])


def _reference_c0(e0):
    return next((c for e, c in optimizer.REFERENCE_C0 if abs(e - e0) < 1e-3), None)


@main.command("minimize")
@click.option("--l", "ells", multiple=True, type=int, required=True,
              help="OAM l (integer); repeat for a batch, which writes a CSV table.")
@click.option("--e0", type=float, default=ee.E0_DEFAULT, show_default=True,
              help="Encircled energy fraction in (0, 1).")
@click.option("--n-modes", type=int, default=10, show_default=True,
              help="Number of radial modes N (dimensionless).")
@click.option("--restarts", type=int, default=8, show_default=True,
              help="Nelder-Mead restarts; the first starts at LG_{0,l}.")
@click.option("--max-iters", type=int, default=5000, show_default=True,
              help="Iteration cap per restart.")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True,
              help="Seed for the random restarts.")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="JSON result (single l) or CSV table l,best,lg0,lg1,c0_plus_l (batch).")
def cmd_minimize(ells, e0, n_modes, restarts, max_iters, seed, out):
    """Minimize M^2_EE (dimensionless) over N-mode beams of fixed OAM."""
    run = _Run("minimize", {"l": ells, "e0": e0, "n_modes": n_modes, "restarts": restarts,
                            "max_iters": max_iters, "seed": seed})
    try:
        cfgs = [optimizer.SearchConfig(ell=ell, e0=e0, n_modes=n_modes, restarts=restarts,
                                       max_iters=max_iters, seed=seed) for ell in ells]
    except VortexDivError as exc:
        raise InputError(str(exc)) from None
    c0 = _reference_c0(e0)
    results = []
    for cfg in cfgs:
        res = optimizer.minimize_m2_ee(cfg)
        results.append(res)
        line = f"l={cfg.ell}: best M2_EE = {res.best_value:.10f}"
        if c0 is not None:
            line += f", margin over c0+l = {res.best_value - (c0 + cfg.ell):+.6f} (c0={c0})"
        click.echo(line)
    if len(cfgs) == 1:
        text = optimizer.dumps_result(results[0]) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "best", "lg0", "lg1", "c0_plus_l"])
        for cfg, res in zip(cfgs, results):
            w.writerow([cfg.ell, repr(res.best_value), repr(ee.m2_ee_lg(0, cfg.ell, e0)),
                        repr(ee.m2_ee_lg(1, cfg.ell, e0)),
                        "" if c0 is None else repr(c0 + abs(cfg.ell))])
        text = buf.getvalue()
    run.emit(out, text)


@main.command("oracle-check")
@click.option("--spectrum", "spectrum_path", required=True, type=click.Path(dir_okay=False),
              help="Spectrum JSON file.")
@click.option("--z", "zs", multiple=True, type=float,
              help="Propagation distance z [m]; repeatable. Default: 0, z0/2, z0, 2 z0.")
@click.option("--e0", type=float, default=ee.E0_DEFAULT, show_default=True,
              help="Encircled energy fraction in (0, 1).")
@click.option("--w0", type=float, default=DEFAULT_W0, show_default=True,
              help="LG waist parameter w0 [m].")
@click.option("--lambda", "lam", type=float, default=DEFAULT_LAMBDA, show_default=True,
              help="Vacuum wavelength [m].")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the comparison table as JSON.")
def cmd_oracle_check(spectrum_path, zs, e0, w0, lam, out):
    """Compare closed forms with direct quadrature; sigma_r^2 in m^2, radii in m.

    Exits 1 if any relative error exceeds 1e-3.
    """
    run = _Run("oracle-check", {"z": zs, "e0": e0, "w0": w0, "lambda": lam})
    s = _load(spectrum_path)
    if not 0.0 < e0 < 1.0:
        raise InputError(f"--e0 must lie in (0, 1), got {e0}")
    g = _geometry(s, w0, lam)
    zs = zs or (0.0, 0.5 * g.z0, g.z0, 2.0 * g.z0)
    rows, worst = [], 0.0
    try:
        for z in zs:
            closed = sigma_r_squared(g, s, z)
            quad = field.quad_sigma_r_squared(s, z, g)
            r_ee = g.beam_size(z) * math.sqrt(ee.solve_T(s, z / g.z0, e0) / 2.0)
            r_quad = field.quad_encircled_radius(s, z, e0, g)
            err_s = abs(quad - closed) / abs(closed)
            err_r = abs(r_quad - r_ee) / abs(r_ee)
            worst = max(worst, err_s, err_r)
            rows.append({"z_m": z, "sigma2_closed_m2": closed, "sigma2_quad_m2": quad,
                         "sigma2_rel_err": err_s, "r_ee_closed_m": r_ee, "r_ee_quad_m": r_quad,
                         "r_ee_rel_err": err_r})
    except VortexDivError as exc:
        raise InputError(f"oracle evaluation failed: {exc}") from None
    click.echo(f"{'z [m]':>13} {'sigma2 rel err':>15} {'R_EE rel err':>13}")
    for r in rows:
        click.echo(f"{r['z_m']:13.6g} {r['sigma2_rel_err']:15.3e} {r['r_ee_rel_err']:13.3e}")
    if out:
        run.emit(out, _dump({"rows": rows, "max_rel_err": worst}), [spectrum_path])
    if worst > ORACLE_RTOL:
        raise VerificationFailed(f"max relative error {worst:.3e} exceeds {ORACLE_RTOL}")


@main.command("profile")
@click.option("--spectrum", "spectrum_path", required=True, type=click.Path(dir_okay=False),
              help="Spectrum JSON file.")
@click.option("--z", "zs", multiple=True, type=float,
              help="Propagation distance z [m]; repeatable. Default: 0.")
@click.option("--r-max", type=float, default=None,
              help="Largest radius [m]. Default: 3 w(z) at the farthest plane.")
@click.option("--points", type=click.IntRange(min=2), default=201, show_default=True,
              help="Radial samples per plane.")
@click.option("--phi", type=float, default=0.0, show_default=True,
              help="Azimuth of the radial cut [rad].")
@click.option("--w0", type=float, default=DEFAULT_W0, show_default=True,
              help="LG waist parameter w0 [m].")
@click.option("--lambda", "lam", type=float, default=DEFAULT_LAMBDA, show_default=True,
              help="Vacuum wavelength [m].")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Output CSV r,z,intensity (r, z in m; intensity in 1/m^2).")
def cmd_profile(spectrum_path, zs, r_max, points, phi, w0, lam, out):
    """Radial intensity cuts of a beam, normalized to unit total power."""
    run = _Run("profile", {"z": zs, "r_max": r_max, "points": points, "phi": phi,
                           "w0": w0, "lambda": lam})
    s = _load(spectrum_path)
    g = _geometry(s, w0, lam)
    zs = zs or (0.0,)
    if r_max is None:
        r_max = 3.0 * max(g.beam_size(z) for z in zs)
    if not r_max > 0:
        raise InputError(f"--r-max must be positive, got {r_max}")
    rows = field.intensity_profile(s, g, np.linspace(0.0, r_max, points), zs, phi)
    buf = io.StringIO()
    field.write_profile_csv(rows, buf)
    run.emit(out, buf.getvalue(), [spectrum_path])
    click.echo(f"wrote {len(rows)} samples to {out}")


@main.command("replay")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
def cmd_replay(manifest):
    """Re-run the command recorded in a manifest file."""
    try:
        with open(manifest) as fh:
            argv = json.load(fh)["argv"]
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"unreadable manifest: {exc}") from None
    if argv and argv[0] == "replay":
        raise InputError("manifest records a replay; refusing to recurse")
    main.main(args=argv, prog_name="vortexdiv", standalone_mode=True)


if __name__ == "__main__":
    main()
