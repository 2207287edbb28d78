"""Laguerre-Gauss mode spectra and their closed-form rms propagation figures.

A beam is represented by its expansion coefficients over LG_{n,l} modes.
Everything here is unit-free except :class:`BeamGeometry`, which attaches
a waist ``w0`` and wavenumber ``k`` to a spectrum.
"""
import cmath
import json
import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple

from .errors import DegenerateBeam, DomainError, InternalError

__all__ = [
    "ModeIndex",
    "ModeSpectrum",
    "BeamGeometry",
    "mean_abs_oam",
    "alpha_beta_phi",
    "m2_rms",
    "rms_geometry",
    "sigma_r_squared",
    "incoherent_m2",
    "uncertainty_products",
    "load_spectrum",
    "dump_spectrum",
]

_MIN_RAW_NORM = 1e-12
_RADICAND_FLOOR = 1e-12


class ModeIndex(NamedTuple):
    n: int
    ell: int


class ModeSpectrum:
    """Normalized, immutable map from :class:`ModeIndex` to complex amplitude.

    The constructor rescales the input to unit norm. Zero coefficients are
    dropped, so the stored support is exactly the set of nonzero modes.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping):
        items = {}
        for key, val in dict(coeffs).items():
            n, ell = key
            if int(n) != n or int(ell) != ell:
                raise DomainError(f"mode indices must be integers, got {key!r}")
            n, ell = int(n), int(ell)
            if n < 0:
                raise DomainError(f"radial index must be >= 0, got n={n}")
            val = complex(val)
            if not (math.isfinite(val.real) and math.isfinite(val.imag)):
                raise DomainError(f"non-finite coefficient for mode ({n}, {ell})")
            if val != 0:
                items[ModeIndex(n, ell)] = val
        norm = math.sqrt(sum(abs(v) ** 2 for v in items.values()))
        if norm <= _MIN_RAW_NORM:
            raise DomainError("spectrum has (near) zero norm")
        self._coeffs = {k: items[k] / norm for k in sorted(items)}

    @classmethod
    def single(cls, n, ell):
        """The pure mode LG_{n,ell}."""
        return cls({(n, ell): 1.0})

    @classmethod
    def gaussian(cls):
        return cls.single(0, 0)

    @property
    def coeffs(self):
        return dict(self._coeffs)

    def __getitem__(self, key):
        return self._coeffs.get(ModeIndex(*key), 0j)

    def __iter__(self):
        return iter(self._coeffs.items())

    def __len__(self):
        return len(self._coeffs)

    def __eq__(self, other):
        if not isinstance(other, ModeSpectrum):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self):
        return hash(tuple(self._coeffs.items()))

    def __repr__(self):
        body = ", ".join(f"({k.n},{k.ell}): {v:.6g}" for k, v in self._coeffs.items())
        return f"ModeSpectrum({{{body}}})"

    def ells(self):
        """Sorted distinct OAM values in the support."""
        return sorted({k.ell for k in self._coeffs})

    def radial_block(self, ell):
        """Dense coefficient list ``[psi_0, ..., psi_nmax]`` for one OAM value."""
        ns = [k.n for k in self._coeffs if k.ell == ell]
        if not ns:
            return []
        block = [0j] * (max(ns) + 1)
        for k, v in self._coeffs.items():
            if k.ell == ell:
                block[k.n] = v
        return block

    def with_phase(self, phase):
        """Same beam multiplied by the global factor exp(i*phase)."""
        rot = cmath.exp(1j * phase)
        return ModeSpectrum({k: v * rot for k, v in self._coeffs.items()})

    def to_dict(self):
        return {
            "modes": [
                {"n": k.n, "l": k.ell, "re": v.real, "im": v.imag}
                for k, v in self._coeffs.items()
            ]
        }

    @classmethod
    def from_dict(cls, data):
        """Parse the ``{"modes": [{"n", "l", "re", "im"}, ...]}`` layout."""
        if not isinstance(data, dict) or not isinstance(data.get("modes"), list):
            raise DomainError('spectrum JSON must be an object with a "modes" list')
        coeffs = {}
        for i, entry in enumerate(data["modes"]):
            where = f"mode entry #{i} ({entry!r})"
            if not isinstance(entry, dict):
                raise DomainError(f"{where}: expected an object")
            missing = [f for f in ("n", "l", "re") if f not in entry]
            if missing:
                raise DomainError(f"{where}: missing field(s) {', '.join(missing)}")
            try:
                n, ell = entry["n"], entry["l"]
                if isinstance(n, bool) or isinstance(ell, bool) or int(n) != n or int(ell) != ell:
                    raise ValueError
                n, ell = int(n), int(ell)
                val = complex(float(entry["re"]), float(entry.get("im", 0.0)))
            except (TypeError, ValueError):
                raise DomainError(f"{where}: n, l must be integers and re, im numbers") from None
            if n < 0:
                raise DomainError(f"{where}: n must be >= 0")
            if (n, ell) in coeffs:
                raise DomainError(f"{where}: duplicate mode (n={n}, l={ell})")
            coeffs[(n, ell)] = val
        return cls(coeffs)


def load_spectrum(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"{path}: invalid JSON ({exc})") from None
    return ModeSpectrum.from_dict(data)


def dump_spectrum(spectrum, path=None):
    text = json.dumps(spectrum.to_dict())
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


@dataclass(frozen=True)
class BeamGeometry:
    """Physical scale of a beam together with its rms caustic parameters.

    Attributes:
        w0: LG waist parameter [m].
        k: wavenumber [rad/m].
        sigma_m: minimum rms radius [m].
        theta_rms: far-field rms divergence [rad].
        z_m: location of the rms waist [m].
    """

    w0: float
    k: float
    sigma_m: float
    theta_rms: float
    z_m: float

    @property
    def z0(self):
        """Rayleigh range k w0^2 / 2."""
        return self.k * self.w0**2 / 2.0

    def beam_size(self, z):
        """LG beam size w(z) = w0 sqrt(1 + (z/z0)^2)."""
        return self.w0 * math.sqrt(1.0 + (z / self.z0) ** 2)

    def gouy(self, z):
        """Gouy phase zeta(z) = arg(z0 + i z)."""
        return math.atan2(z, self.z0)


def mean_abs_oam(s):
    """Mean absolute OAM sum |l| |psi_{n,l}|^2."""
    return sum(abs(k.ell) * abs(v) ** 2 for k, v in s)


def alpha_beta_phi(s):
    """The coefficient moments entering M^2.

    Returns:
        ``(alpha, beta, phi)`` with phi = sum 2n|psi|^2,
        alpha = 1 + <|l|> + phi and
        beta = sum 2 sqrt(n(|l|+n)) psi_{n,l} conj(psi_{n-1,l}).
    """
    phi = 0.0
    beta = 0j
    for k, v in s:
        phi += 2 * k.n * abs(v) ** 2
        if k.n > 0:
            below = s[(k.n - 1, k.ell)]
            if below:
                beta += 2.0 * math.sqrt(k.n * (abs(k.ell) + k.n)) * v * below.conjugate()
    alpha = 1.0 + mean_abs_oam(s) + phi
    return alpha, beta, phi


def _radicand(alpha, beta):
    rad = alpha * alpha - abs(beta) ** 2
    if rad < 0:
        if rad < -_RADICAND_FLOOR * max(1.0, alpha * alpha):
            raise InternalError(f"alpha^2 - |beta|^2 = {rad} is negative")
        rad = 0.0
    return rad


def m2_rms(s):
    """Beam quality factor sqrt(alpha^2 - |beta|^2) of a coherent spectrum."""
    alpha, beta, _ = alpha_beta_phi(s)
    return math.sqrt(_radicand(alpha, beta))


def rms_geometry(s, w0, k):
    """rms waist, divergence and waist position for a spectrum at scale (w0, k)."""
    if not (w0 > 0 and k > 0):
        raise DomainError(f"w0 and k must be positive, got w0={w0}, k={k}")
    alpha, beta, _ = alpha_beta_phi(s)
    re_sum = (alpha + beta).real
    if re_sum <= 0:
        raise DegenerateBeam(f"Re(alpha + beta) = {re_sum} <= 0")
    z0 = k * w0**2 / 2.0
    sigma_m = w0 / math.sqrt(2.0) * math.sqrt(_radicand(alpha, beta) / re_sum)
    theta = w0 / (math.sqrt(2.0) * z0) * math.sqrt(re_sum)
    z_m = -beta.imag / (k * theta**2) + 0.0  # no signed zero
    return BeamGeometry(w0=w0, k=k, sigma_m=sigma_m, theta_rms=theta, z_m=z_m)


def sigma_r_squared(g, s, z):
    """Second-moment radius squared sigma_m^2 + theta_rms^2 (z - z_m)^2.

    ``s`` is accepted for symmetry with the quadrature route; the parabola
    only needs the geometry derived from it.
    """
    return g.sigma_m**2 + g.theta_rms**2 * (z - g.z_m) ** 2


def incoherent_m2(weights):
    """M^2 of an incoherent mixture: sum (2n + |l| + 1) w_{n,l}."""
    total = sum(weights.values())
    if abs(total - 1.0) > 1e-9:
        raise DomainError(f"incoherent weights must sum to 1, got {total}")
    out = 0.0
    for (n, ell), w in weights.items():
        if w < 0:
            raise DomainError(f"negative weight {w} for mode ({n}, {ell})")
        out += (2 * n + abs(ell) + 1) * w
    return out


@dataclass(frozen=True)
class UncertaintyProducts:
    sigma_k_sigma_r: float
    focal_product: float | None
    quantum_product: float | None


def uncertainty_products(s, g, focal_length=None, hbar=None):
    """Waist-wavevector product and its focal-plane and 2D free-particle forms.

    ``sigma_k = k theta_rms`` so that ``sigma_k sigma_m`` equals M^2_rms.
    The focal product ``sigma_source sigma_focus`` needs a lens focal
    length; the quantum product ``sigma_r sigma_p`` needs hbar.
    """
    sigma_k = g.k * g.theta_rms
    prod = sigma_k * g.sigma_m
    focal = None
    if focal_length is not None:
        wavelength = 2.0 * math.pi / g.k
        focal = focal_length * wavelength / (2.0 * math.pi) * prod
    quantum = hbar * prod if hbar is not None else None
    return UncertaintyProducts(prod, focal, quantum)
