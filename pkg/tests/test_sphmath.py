"""Special-function kernels checked against closed forms, sympy and
numerical quadrature oracles."""

import numpy as np
import pytest

from shpsd.sphmath import (
    SphericalDirection,
    mode_indices,
    mode_strength,
    num_modes,
    sph_bessel_j,
    sph_bessel_y,
    sph_hankel_h,
    sph_harmonic,
    triple_harmonic_integral,
    wigner3j,
)


def quadrature_grid(n_theta=60, n_phi=121):
    """Gauss-Legendre x uniform product grid; exact for high SH orders."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x)
    phi = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    ww = np.broadcast_to(w[:, None], tt.shape) * (2 * np.pi / n_phi)
    return tt.ravel(), pp.ravel(), ww.ravel()


def sh_on_grid(n, m, tt, pp):
    return np.array(
        [sph_harmonic((n, m), SphericalDirection(t, p)) for t, p in zip(tt, pp)]
    )


class TestSphericalDirection:
    def test_from_degrees(self):
        d = SphericalDirection.from_degrees(90.0, 180.0)
        assert d.theta == pytest.approx(np.pi / 2)
        assert d.phi == pytest.approx(np.pi)

    def test_phi_normalized(self):
        d = SphericalDirection.from_degrees(45.0, -90.0)
        assert 0.0 <= d.phi < 2 * np.pi
        assert d.phi == pytest.approx(3 * np.pi / 2)

    def test_theta_range_enforced(self):
        with pytest.raises(ValueError):
            SphericalDirection(-0.1, 0.0)

    def test_to_cartesian_unit(self):
        d = SphericalDirection.from_degrees(70.0, 10.0)
        assert np.linalg.norm(d.to_cartesian()) == pytest.approx(1.0)


class TestSphHarmonic:
    def test_zeroth_constant(self):
        for theta, phi in [(0.1, 0.3), (1.5, 4.0), (3.0, 6.0)]:
            val = sph_harmonic((0, 0), SphericalDirection(theta, phi))
            assert val == pytest.approx(1.0 / np.sqrt(4 * np.pi), abs=1e-12)

    def test_polar_axis_n1(self):
        val = sph_harmonic((1, 0), SphericalDirection(0.0, 0.0))
        assert val == pytest.approx(np.sqrt(3.0 / (4 * np.pi)), abs=1e-12)

    def test_equator_n1_m1(self):
        # closed form: Y_11 = -sqrt(3/8pi) sin(theta) e^{i phi}
        val = sph_harmonic((1, 1), SphericalDirection(np.pi / 2, 0.0))
        assert np.real(val) == pytest.approx(-0.34549, abs=1e-5)
        assert np.imag(val) == pytest.approx(0.0, abs=1e-12)

    def test_conjugation_symmetry(self, rng):
        for _ in range(20):
            n = int(rng.integers(0, 6))
            m = int(rng.integers(0, n + 1))
            d = SphericalDirection(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
            lhs = sph_harmonic((n, -m), d)
            rhs = (-1) ** m * np.conj(sph_harmonic((n, m), d))
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_invalid_index(self):
        with pytest.raises(ValueError):
            sph_harmonic((1, 2), SphericalDirection(0.5, 0.5))

    def test_orthonormality(self):
        tt, pp, ww = quadrature_grid()
        modes = mode_indices(6)
        vals = {nm: sh_on_grid(*nm, tt, pp) for nm in modes}
        for i, a in enumerate(modes):
            for b in modes[i:]:
                inner = np.sum(ww * vals[a] * np.conj(vals[b]))
                expected = 1.0 if a == b else 0.0
                assert inner == pytest.approx(expected, abs=1e-10)

    def test_addition_theorem(self, rng):
        for n in range(7):
            d = SphericalDirection(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
            total = sum(abs(sph_harmonic((n, m), d)) ** 2 for m in range(-n, n + 1))
            assert total == pytest.approx((2 * n + 1) / (4 * np.pi), abs=1e-12)


class TestBesselHankel:
    def test_j0_limits(self):
        assert sph_bessel_j(0, 0.0) == pytest.approx(1.0)
        assert sph_bessel_j(2, 0.0) == pytest.approx(0.0)
        assert sph_bessel_j(0, 1.0) == pytest.approx(np.sin(1.0), abs=1e-12)

    def test_h0_closed_form(self):
        h = sph_hankel_h(0, 1.0)
        assert np.real(h) == pytest.approx(np.sin(1.0), abs=1e-12)
        assert np.imag(h) == pytest.approx(-np.cos(1.0), abs=1e-12)

    def test_h0_quarter_period(self):
        assert np.imag(sph_hankel_h(0, np.pi / 2)) == pytest.approx(0.0, abs=1e-12)

    def test_h1_consistency(self):
        h = sph_hankel_h(1, 1.0)
        assert h == pytest.approx(sph_bessel_j(1, 1.0) + 1j * sph_bessel_y(1, 1.0))

    def test_wronskian(self):
        # j_n y'_n - j'_n y_n = 1/x^2
        eps = 1e-6
        for n in range(5):
            for x in np.linspace(0.1, 50.0, 40):
                jp = (sph_bessel_j(n, x + eps) - sph_bessel_j(n, x - eps)) / (2 * eps)
                yp = (sph_bessel_y(n, x + eps) - sph_bessel_y(n, x - eps)) / (2 * eps)
                w = sph_bessel_j(n, x) * yp - jp * sph_bessel_y(n, x)
                assert w == pytest.approx(1.0 / x**2, rel=1e-7)


class TestModeStrength:
    def test_open_equals_bessel(self):
        assert mode_strength(0, 1.0, "open") == pytest.approx(
            sph_bessel_j(0, 1.0), abs=1e-12
        )

    def test_rigid_has_no_bessel_null(self):
        # j_0(pi) = 0 but the scattering term keeps b_0 away from zero
        assert abs(sph_bessel_j(0, np.pi)) < 1e-12
        assert abs(mode_strength(0, np.pi, "rigid")) > 1e-2

    def test_open_high_order_origin(self):
        assert mode_strength(3, 0.0, "open") == pytest.approx(0.0)

    def test_rigid_zero_rejected(self):
        with pytest.raises(ValueError):
            mode_strength(0, 0.0, "rigid")


class TestWigner3j:
    def test_trivial_values(self):
        assert wigner3j(0, 0, 0, 0, 0, 0) == pytest.approx(1.0)
        assert wigner3j(1, 1, 0, 0, 0, 0) == pytest.approx(-1.0 / np.sqrt(3.0))
        assert wigner3j(1, 2, 4, 0, 0, 0) == 0.0

    def test_m_sum_rule(self):
        assert wigner3j(2, 2, 2, 1, 1, 1) == 0.0

    def test_against_sympy(self, rng):
        sympy_wigner = pytest.importorskip("sympy.physics.wigner")
        for _ in range(60):
            j1, j2 = int(rng.integers(0, 7)), int(rng.integers(0, 7))
            j3 = int(rng.integers(abs(j1 - j2), j1 + j2 + 1))
            m1 = int(rng.integers(-j1, j1 + 1))
            m2 = int(rng.integers(-j2, j2 + 1))
            m3 = -m1 - m2
            if abs(m3) > j3:
                continue
            ref = float(sympy_wigner.wigner_3j(j1, j2, j3, m1, m2, m3))
            assert wigner3j(j1, j2, j3, m1, m2, m3) == pytest.approx(ref, abs=1e-12)

    def test_column_permutation_symmetry(self):
        val = wigner3j(2, 3, 4, 1, -2, 1)
        # even permutation leaves the value unchanged
        assert wigner3j(3, 4, 2, -2, 1, 1) == pytest.approx(val, abs=1e-14)
        # odd permutation multiplies by (-1)^(j1+j2+j3)
        sign = (-1) ** (2 + 3 + 4)
        assert wigner3j(3, 2, 4, -2, 1, 1) == pytest.approx(sign * val, abs=1e-14)


class TestTripleHarmonicIntegral:
    def test_constant_case(self):
        val = triple_harmonic_integral(0, 0, 0, 0, 0, 0)
        assert val == pytest.approx(1.0 / np.sqrt(4 * np.pi), abs=1e-12)

    def test_parity_rule(self):
        assert triple_harmonic_integral(1, 1, 1, 0, 0, 0) == 0.0
        assert triple_harmonic_integral(2, 1, 2, 0, 0, 0) == 0.0

    def test_against_quadrature(self):
        tt, pp, ww = quadrature_grid()
        cases = [(2, 1, 1, 0, 0, 0), (2, 2, 2, 1, 1, 0), (3, 2, 1, -1, 0, -1),
                 (4, 2, 2, 2, 1, -1)]
        for v, n, n_p, u, m, m_p in cases:
            integrand = (
                sh_on_grid(v, u, tt, pp)
                * np.conj(sh_on_grid(n, m, tt, pp))
                * sh_on_grid(n_p, m_p, tt, pp)
            )
            ref = np.sum(ww * integrand)
            got = triple_harmonic_integral(v, n, n_p, u, m, m_p)
            assert got == pytest.approx(ref, abs=1e-10)


def test_mode_index_layout():
    modes = mode_indices(2)
    assert modes == [(0, 0), (1, -1), (1, 0), (1, 1), (2, -2), (2, -1), (2, 0),
                     (2, 1), (2, 2)]
    assert num_modes(4) == 25
