"""Special-function kernels for spherical-harmonic sound field processing.

Conventions
-----------
Spherical harmonics are orthonormal and complex, with the Condon-Shortley
phase included (the scipy convention).  Angles are (theta, phi) with theta
the colatitude in [0, pi] and phi the azimuth in [0, 2*pi).  Under this
convention the conjugation symmetry Y_{n,-m} = (-1)^m conj(Y_{n,m}) and the
addition theorem sum_m |Y_nm|^2 = (2n+1)/(4*pi) hold as written.
"""

from dataclasses import dataclass
from math import lgamma, pi, sqrt

import numpy as np
import scipy.special as special

TWO_PI = 2.0 * pi


@dataclass(frozen=True)
class SphericalDirection:
    """A direction on the unit sphere: colatitude theta, azimuth phi (radians)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)

    @classmethod
    def from_degrees(cls, theta_deg, phi_deg):
        return cls(np.deg2rad(theta_deg), np.deg2rad(phi_deg))

    def to_cartesian(self):
        """Unit vector (x, y, z)."""
        st = np.sin(self.theta)
        return np.array(
            [st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)]
        )


@dataclass(frozen=True)
class ModeIndex:
    """Spherical harmonic order n >= 0 and degree m with |m| <= n."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 0 or abs(self.m) > self.n:
            raise ValueError(f"invalid mode index (n={self.n}, m={self.m})")


def mode_indices(order):
    """All (n, m) pairs up to `order` in mode-major layout: (0,0), (1,-1), (1,0), ..."""
    return [(n, m) for n in range(order + 1) for m in range(-n, n + 1)]


def num_modes(order):
    return (order + 1) ** 2


def sph_harmonic(idx, direction):
    """Orthonormal complex spherical harmonic Y_nm(theta, phi)."""
    if isinstance(idx, tuple):
        idx = ModeIndex(*idx)
    return complex(special.sph_harm_y(idx.n, idx.m, direction.theta, direction.phi))


def sh_matrix(order, directions):
    """Matrix of Y_nm over directions: shape (len(directions), (order+1)^2).

    Columns follow the mode-major layout of `mode_indices`.
    """
    thetas = np.array([d.theta for d in directions])
    phis = np.array([d.phi for d in directions])
    cols = [
        special.sph_harm_y(n, m, thetas, phis) for n, m in mode_indices(order)
    ]
    return np.stack(cols, axis=-1)


def sph_bessel_j(n, x):
    """Spherical Bessel function of the first kind j_n(x)."""
    if np.any(np.asarray(x) < 0):
        raise ValueError("sph_bessel_j requires x >= 0")
    return special.spherical_jn(n, x)


def sph_bessel_y(n, x):
    """Spherical Bessel function of the second kind y_n(x); singular at x = 0."""
    return special.spherical_yn(n, x)


def sph_hankel_h(n, x):
    """Spherical Hankel function of the first kind h_n(x) = j_n(x) + i y_n(x)."""
    if np.any(np.asarray(x) <= 0):
        raise ValueError("sph_hankel_h is singular at x = 0")
    return special.spherical_jn(n, x) + 1j * special.spherical_yn(n, x)


def _sph_hankel_h_prime(n, x):
    return special.spherical_jn(n, x, derivative=True) + 1j * special.spherical_yn(
        n, x, derivative=True
    )


def mode_strength(n, kr, array_kind):
    """Modal frequency response b_n(kr) for an open or rigid spherical array.

    Open:  b_n = j_n(kr).
    Rigid: b_n = j_n(kr) - j'_n(kr)/h'_n(kr) * h_n(kr), which stays bounded
    away from zero at the open-array Bessel nulls.
    """
    kr = np.asarray(kr, dtype=float)
    if array_kind == "open":
        if np.any(kr < 0):
            raise ValueError("open array requires kr >= 0")
        return special.spherical_jn(n, kr).astype(complex)
    if array_kind == "rigid":
        if np.any(kr <= 0):
            raise ValueError("rigid array requires kr > 0")
        jn = special.spherical_jn(n, kr)
        jnp = special.spherical_jn(n, kr, derivative=True)
        hn = sph_hankel_h(n, kr)
        hnp = _sph_hankel_h_prime(n, kr)
        return jn - jnp / hnp * hn
    raise ValueError(f"unknown array kind {array_kind!r}")


def _lnfact(n):
    return lgamma(n + 1)


def _triangle_ok(j1, j2, j3):
    return abs(j1 - j2) <= j3 <= j1 + j2


def wigner3j(j1, j2, j3, m1, m2, m3):
    """Wigner 3j symbol via the Racah sum with log-factorial arithmetic.

    Selection-rule violations (triangle inequality, m1+m2+m3 != 0, |m| > j)
    return 0 rather than raising.  Accurate to ~1e-12 for j <= 20, which
    covers all orders used here.
    """
    if min(j1, j2, j3) < 0:
        raise ValueError("wigner3j requires nonnegative j")
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    if m1 + m2 + m3 != 0 or not _triangle_ok(j1, j2, j3):
        return 0.0

    # prefactor: sqrt of Delta(j1 j2 j3) times the m-dependent factorials
    ln_pref = 0.5 * (
        _lnfact(j1 + j2 - j3)
        + _lnfact(j1 - j2 + j3)
        + _lnfact(-j1 + j2 + j3)
        - _lnfact(j1 + j2 + j3 + 1)
        + _lnfact(j1 + m1)
        + _lnfact(j1 - m1)
        + _lnfact(j2 + m2)
        + _lnfact(j2 - m2)
        + _lnfact(j3 + m3)
        + _lnfact(j3 - m3)
    )

    t_min = max(0, j2 - j3 - m1, j1 - j3 + m2)
    t_max = min(j1 + j2 - j3, j1 - m1, j2 + m2)
    total = 0.0
    for t in range(t_min, t_max + 1):
        ln_den = (
            _lnfact(t)
            + _lnfact(j3 - j2 + m1 + t)
            + _lnfact(j3 - j1 - m2 + t)
            + _lnfact(j1 + j2 - j3 - t)
            + _lnfact(j1 - m1 - t)
            + _lnfact(j2 + m2 - t)
        )
        total += (-1) ** t * np.exp(ln_pref - ln_den)
    return (-1) ** (j1 - j2 - m3) * total


def triple_harmonic_integral(v, n, n_prime, u, m, m_prime):
    """Integral of Y_vu * conj(Y_nm) * Y_n'm' over the unit sphere.

    Evaluates to (-1)^m sqrt((2v+1)(2n+1)(2n'+1)/(4 pi)) times the product
    of the parity 3j symbol (v n n'; 0 0 0) and (v n n'; u -m m').
    """
    w12 = wigner3j(v, n, n_prime, 0, 0, 0) * wigner3j(v, n, n_prime, u, -m, m_prime)
    if w12 == 0.0:
        return 0.0
    scale = sqrt((2 * v + 1) * (2 * n + 1) * (2 * n_prime + 1) / (4.0 * pi))
    return (-1) ** m * scale * w12
