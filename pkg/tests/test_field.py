import math

import numpy as np
import pytest
from scipy import integrate

from vortexdiv import ee
from vortexdiv.errors import DomainError
from vortexdiv.field import (
    intensity_profile,
    lg_amplitude,
    quad_encircled_radius,
    quad_power,
    quad_sigma_r_squared,
    superposition_intensity,
    write_profile_csv,
)
from vortexdiv.specfun import inv_reg_gamma_p
from vortexdiv.spectrum import ModeSpectrum, rms_geometry, sigma_r_squared

from conftest import E0, random_spectrum

W0 = 1e-3
K = 2 * math.pi / 800e-9


def geom(s=None):
    return rms_geometry(s or ModeSpectrum.gaussian(), W0, K)


class TestAmplitude:
    def test_gaussian_peak(self):
        assert abs(lg_amplitude(0, 0, 0.0, 0.0, 0.0, geom())) == pytest.approx(
            math.sqrt(2 / math.pi) / W0, rel=1e-15)

    @pytest.mark.parametrize("ell", [1, -2, 5])
    def test_vortex_on_axis(self, ell):
        g = geom()
        assert lg_amplitude(0, ell, 0.0, 0.7, 0.3 * g.z0, g) == 0

    def test_gaussian_envelope(self):
        g = geom()
        for z in (0.0, g.z0, -2.5 * g.z0):
            w = g.beam_size(z)
            for r in (0.3 * w, w, 2 * w):
                peak = abs(lg_amplitude(0, 0, 0.0, 0.0, z, g)) ** 2
                val = abs(lg_amplitude(0, 0, r, 0.0, z, g)) ** 2
                assert val / peak == pytest.approx(math.exp(-2 * r * r / w / w), rel=1e-12)

    def test_normalization_by_plain_quadrature(self):
        # integrate |LG_{2,3}|^2 over the plane in r directly, not in t
        g = geom()
        z = 0.7 * g.z0
        w = g.beam_size(z)
        val, _ = integrate.quad(lambda r: abs(lg_amplitude(2, 3, r, 0.0, z, g)) ** 2 * r,
                                0, 10 * w, epsabs=1e-13, limit=200)
        assert 2 * math.pi * val == pytest.approx(1.0, abs=1e-9)

    def test_negative_radius(self):
        with pytest.raises(DomainError):
            lg_amplitude(0, 0, -1.0, 0.0, 0.0, geom())

    def test_modes_orthogonal_in_angle_and_radius(self):
        g = geom()
        z = 0.4 * g.z0
        w = g.beam_size(z)

        def overlap(a, b):
            def f(r, phi):
                return (lg_amplitude(*a, r, phi, z, g) * lg_amplitude(*b, r, phi, z, g).conjugate()).real * r
            val, _ = integrate.dblquad(f, 0, 2 * math.pi, 0, 8 * w, epsabs=1e-10)
            return val

        assert overlap((1, 2), (0, 2)) == pytest.approx(0.0, abs=1e-8)
        assert overlap((1, 2), (1, -2)) == pytest.approx(0.0, abs=1e-8)


class TestIntensity:
    def test_single_mode(self):
        s = ModeSpectrum.single(1, 2)
        g = geom(s)
        amp = lg_amplitude(1, 2, 0.4e-3, 1.0, 0.2, g)
        assert superposition_intensity(s, 0.4e-3, 1.0, 0.2, g) == pytest.approx(abs(amp) ** 2)

    def test_dipole_node(self):
        s = ModeSpectrum({(0, 1): 1.0, (0, -1): 1.0})
        g = geom(s)
        assert superposition_intensity(s, 0.5e-3, math.pi / 2, 0.0, g) < 1e-20
        assert superposition_intensity(s, 0.5e-3, 0.0, 0.0, g) > 1e3

    def test_power_is_one(self, rng):
        for _ in range(5):
            s = random_spectrum(rng, 5, n_max=5, ell_max=4)
            g = geom(s)
            for z in (0.0, 2 * g.z0):
                assert quad_power(s, z, g) == pytest.approx(1.0, abs=1e-8)

    def test_power_single_ell_uses_same_density(self):
        # single-OAM beams skip the angular trapezoid; compare against the multi-ell path
        s = ModeSpectrum({(0, 2): 1.0, (3, 2): 0.5 - 0.2j})
        g = geom(s)
        assert quad_power(s, 0.3 * g.z0, g) == pytest.approx(1.0, abs=1e-10)


class TestSecondMoment:
    def test_gaussian(self):
        assert quad_sigma_r_squared(ModeSpectrum.gaussian(), 0.0, geom()) == pytest.approx(
            W0**2 / 2, rel=1e-9)

    def test_lg01(self):
        s = ModeSpectrum.single(0, 1)
        assert quad_sigma_r_squared(s, 0.0, geom(s)) == pytest.approx(W0**2, rel=1e-9)

    def test_against_parabola(self, rng):
        for _ in range(4):
            s = random_spectrum(rng, 3, n_max=4, ell_max=3)
            g = geom(s)
            for z in (0.0, 0.5 * g.z0, g.z0, 3 * g.z0):
                assert quad_sigma_r_squared(s, z, g) == pytest.approx(sigma_r_squared(g, s, z), rel=1e-8)


class TestEncircledRadius:
    def test_gaussian_examples(self):
        g = geom()
        assert quad_encircled_radius(ModeSpectrum.gaussian(), 0.0, 1 - math.exp(-2), g) == \
            pytest.approx(W0, rel=1e-10)
        assert quad_encircled_radius(ModeSpectrum.gaussian(), 0.0, 0.5, g) == \
            pytest.approx(W0 * math.sqrt(math.log(2) / 2), rel=1e-10)

    def test_lg01(self):
        s = ModeSpectrum.single(0, 1)
        want = W0 * math.sqrt(inv_reg_gamma_p(2, E0) / 2)
        assert quad_encircled_radius(s, 0.0, E0, geom(s)) == pytest.approx(want, rel=1e-10)

    def test_monotone_in_e0(self, rng):
        s = random_spectrum(rng, 4, n_max=3, ell_max=2)
        g = geom(s)
        radii = [quad_encircled_radius(s, 0.5 * g.z0, e, g) for e in (0.2, 0.5, 0.63, 0.86, 0.98)]
        assert all(b > a for a, b in zip(radii, radii[1:]))

    def test_substitution_identity(self, rng):
        for _ in range(3):
            s = random_spectrum(rng, 4, n_max=4, ell_max=3)
            g = geom(s)
            for Z in (0.0, 0.5, 2.0):
                z = Z * g.z0
                want = g.beam_size(z) * math.sqrt(ee.solve_T(s, Z, E0) / 2)
                assert quad_encircled_radius(s, z, E0, g) == pytest.approx(want, rel=1e-9)

    @pytest.mark.parametrize("e0", [0.0, 1.0])
    def test_domain(self, e0):
        with pytest.raises(DomainError):
            quad_encircled_radius(ModeSpectrum.gaussian(), 0.0, e0, geom())


def test_profile_csv():
    import io
    s = ModeSpectrum.single(0, 1)
    g = geom(s)
    rows = intensity_profile(s, g, np.linspace(0, 2e-3, 3), [0.0, g.z0])
    buf = io.StringIO()
    write_profile_csv(rows, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "r,z,intensity"
    assert len(lines) == 7
    assert float(lines[1].split(",")[2]) == 0.0
