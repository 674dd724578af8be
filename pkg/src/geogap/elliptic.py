"""Weierstrass elliptic functions on real rectangular lattices.

The lattice is ``{2m*omega1 + 2n*omega2}`` with ``omega1 > 0`` real and
``omega2 = 1j*omega2_imag``.  Evaluation reduces the argument to the
fundamental cell centred at the origin, halves it until the Laurent series
about 0 converges quickly, sums the series and climbs back with the
duplication formulas.  Quasi-periodicity carries zeta and sigma back out of
the cell.

All functions accept scalars or arrays, real or complex.  Real input gives
real output (the lattice is closed under conjugation).
"""

from __future__ import annotations

from functools import cached_property
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ellipk

from .errors import DegenerateLattice, NearPole, NonRectangular

N_TERMS = 40
DEFAULT_POLE_CUTOFF = 1e-6

__all__ = [
    "LatticeInvariants",
    "EllipticValue",
    "lattice_from_invariants",
    "laurent_coefficients",
    "weierstrass",
    "weierstrass_series",
    "wp",
    "wp_prime",
    "wzeta",
    "wsigma",
    "wp_hat",
    "wp_hat_prime",
    "wzeta_hat",
    "wsigma_hat",
]


def laurent_coefficients(g2: float, g3: float, n: int = N_TERMS) -> np.ndarray:
    """Coefficients c_k of wp(z) = z**-2 + sum_{k>=2} c_k z**(2k-2).

    ``c[0]`` and ``c[1]`` are unused and left at zero.
    """
    c = np.zeros(n + 1)
    c[2] = g2 / 20.0
    if n >= 3:
        c[3] = g3 / 28.0
    for k in range(4, n + 1):
        acc = sum(c[m] * c[k - m] for m in range(2, k - 1))
        c[k] = 3.0 * acc / ((2 * k + 1) * (k - 3))
    return c


@dataclass(frozen=True)
class _Series:
    """Horner tables in t = w**2 derived from the Laurent coefficients."""

    wp: np.ndarray
    wp_prime: np.ndarray
    zeta: np.ndarray
    log_sigma: np.ndarray

    @cached_property
    def stacked(self) -> np.ndarray:
        n = len(self.log_sigma)
        out = np.zeros((n, 4))
        for j, col in enumerate((self.wp, self.wp_prime, self.zeta, self.log_sigma)):
            out[: len(col), j] = col
        return out

    @classmethod
    def from_coefficients(cls, c: np.ndarray) -> "_Series":
        n = len(c) - 1
        wp = np.zeros(n)
        wpp = np.zeros(n)
        zt = np.zeros(n)
        ls = np.zeros(n + 1)
        for kk in range(2, n + 1):
            wp[kk - 1] = c[kk]                      # t**(k-1)
            wpp[kk - 2] = (2 * kk - 2) * c[kk]      # w * t**(k-2)
            zt[kk - 1] = c[kk] / (2 * kk - 1)       # w * t**(k-1)
            ls[kk] = c[kk] / ((2 * kk - 1) * 2 * kk)  # t**k
        return cls(wp, wpp, zt, ls)


def _core(w: np.ndarray, ser: _Series):
    """Laurent sums at small |w| (w != 0)."""
    t = w * w
    # one table of powers of t serves all four sums
    powers = t[..., None] ** np.arange(ser.stacked.shape[0])
    s_wp, s_wpp, s_zt, s_ls = np.moveaxis(powers @ ser.stacked, -1, 0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        p = 1.0 / t + s_wp
        dp = -2.0 / (t * w) + w * s_wpp
        zt = 1.0 / w - w * s_zt
    sg = w * np.exp(-s_ls)
    return p, dp, zt, sg


def _halve_and_double(z: np.ndarray, radius: float, g2: float, ser: _Series):
    """Evaluate (wp, wp', zeta, sigma) at z by halving into the series disc."""
    az = np.abs(z)
    with np.errstate(divide="ignore"):
        nd = np.where(az > radius, np.ceil(np.log2(np.maximum(az, radius) / radius)), 0)
    nd = nd.astype(int)
    w = z / np.ldexp(1.0, nd)
    p, dp, zt, sg = _core(w, ser)
    for j in range(int(nd.max(initial=0))):
        m = nd > j
        pj, dpj = p[m], dp[m]
        pp = 6.0 * pj * pj - 0.5 * g2
        q = pp / (2.0 * dpj)
        p_new = q * q - 2.0 * pj
        dp_new = -dpj + q * (12.0 * pj * dpj * dpj - pp * pp) / (2.0 * dpj * dpj)
        zt[m] = 2.0 * zt[m] + q
        sg[m] = -dpj * sg[m] ** 4
        p[m] = p_new
        dp[m] = dp_new
    return p, dp, zt, sg


@dataclass(frozen=True)
class LatticeInvariants:
    """Invariants, half-periods and quasi-periods of a rectangular lattice.

    ``omega2_imag`` is the imaginary part of the purely imaginary half-period;
    ``eta2 = zeta(omega2)`` is purely imaginary and stored as a complex number.
    ``pole_cutoff`` is measured in units of the cell diagonal ``2|omega1+omega2|``.
    """

    g2: float
    g3: float
    omega1: float
    omega2_imag: float
    eta1: float
    eta2: complex
    roots: tuple[float, float, float]
    pole_cutoff: float = DEFAULT_POLE_CUTOFF
    _series: _Series = field(repr=False, compare=False, default=None)

    @property
    def omega2(self) -> complex:
        return 1j * self.omega2_imag

    @property
    def e1(self) -> float:
        return self.roots[0]

    @property
    def discriminant(self) -> float:
        return self.g2 ** 3 - 27.0 * self.g3 ** 2

    @property
    def diameter(self) -> float:
        return 2.0 * abs(self.omega1 + self.omega2)

    @property
    def cutoff_distance(self) -> float:
        return self.pole_cutoff * self.diameter

    @property
    def series_radius(self) -> float:
        return 0.5 * min(self.omega1, self.omega2_imag)

    def legendre_residual(self) -> float:
        """|eta1*omega2 - eta2*omega1 - i*pi/2|."""
        return abs(self.eta1 * self.omega2 - self.eta2 * self.omega1 - 0.5j * np.pi)

    def reduce(self, z):
        """Split z = zr + 2m*omega1 + 2n*omega2 with zr in the fundamental cell."""
        z = np.asarray(z, dtype=complex)
        m = np.round(z.real / (2.0 * self.omega1))
        n = np.round(z.imag / (2.0 * self.omega2_imag))
        zr = z - 2.0 * m * self.omega1 - 2.0j * n * self.omega2_imag
        return zr, m, n


def _real_cubic_roots(g2: float, g3: float) -> tuple[float, float, float]:
    r = np.roots([4.0, 0.0, -g2, -g3])
    r = np.sort(r.real)[::-1]
    polished = []
    for t in r:
        for _ in range(3):
            f = 4 * t ** 3 - g2 * t - g3
            df = 12 * t ** 2 - g2
            if df == 0:
                break
            t = t - f / df
        polished.append(float(t))
    return tuple(polished)


def lattice_from_invariants(g2: float, g3: float,
                            pole_cutoff: float = DEFAULT_POLE_CUTOFF) -> LatticeInvariants:
    """Build the rectangular lattice whose wp satisfies (wp')^2 = 4wp^3 - g2 wp - g3."""
    g2 = float(g2)
    g3 = float(g3)
    disc = g2 ** 3 - 27.0 * g3 ** 2
    scale = max(abs(g2) ** 3, 27.0 * g3 ** 2)
    if scale == 0.0 or abs(disc) <= 1e-14 * scale:
        raise DegenerateLattice(f"zero discriminant for g2={g2}, g3={g3}")
    if disc < 0:
        raise NonRectangular(f"complex branch points for g2={g2}, g3={g3}")
    e1, e2, e3 = _real_cubic_roots(g2, g3)
    span = e1 - e3
    m = (e2 - e3) / span
    omega1 = float(ellipk(m) / np.sqrt(span))
    omega2_imag = float(ellipk(1.0 - m) / np.sqrt(span))
    ser = _Series.from_coefficients(laurent_coefficients(g2, g3))
    radius = 0.5 * min(omega1, omega2_imag)
    pts = np.array([omega1, 1j * omega2_imag])
    _, _, zt, _ = _halve_and_double(pts, radius, g2, ser)
    return LatticeInvariants(
        g2=g2, g3=g3, omega1=omega1, omega2_imag=omega2_imag,
        eta1=float(zt[0].real), eta2=complex(0.0, zt[1].imag),
        roots=(e1, e2, e3), pole_cutoff=pole_cutoff, _series=ser,
    )


@dataclass(frozen=True)
class EllipticValue:
    """Values of wp, wp', zeta, sigma at one argument (or an array of them).

    Entries of wp, wp_prime and zeta are NaN where ``pole_distance`` falls
    below the lattice cutoff; sigma is entire and always finite.
    """

    wp: np.ndarray
    wp_prime: np.ndarray
    zeta: np.ndarray
    sigma: np.ndarray
    pole_distance: np.ndarray

    @property
    def near_pole(self) -> np.ndarray:
        return ~np.isfinite(self.wp)


def _finish(arr, real: bool):
    arr = arr.real if real else arr
    return arr[()] if arr.ndim == 0 else arr


def weierstrass(z, L: LatticeInvariants) -> EllipticValue:
    """All four Weierstrass functions at z, with pole distance bookkeeping."""
    real = np.isrealobj(z)
    zr, m, n = L.reduce(z)
    shape = zr.shape
    zr = np.atleast_1d(zr)
    m = np.atleast_1d(m)
    n = np.atleast_1d(n)
    dist = np.abs(zr)
    p, dp, zt, sg = _halve_and_double(zr.copy(), L.series_radius, L.g2, L._series)
    eta_w = 2.0 * m * L.eta1 + 2.0 * n * L.eta2
    zt = zt + eta_w
    mi = m.astype(int)
    ni = n.astype(int)
    sign = np.where((mi + ni + mi * ni) % 2 == 0, 1.0, -1.0)
    sg = sg * sign * np.exp(eta_w * (zr + m * L.omega1 + n * L.omega2))
    bad = dist < L.cutoff_distance
    if bad.any():
        p = np.where(bad, np.nan, p)
        dp = np.where(bad, np.nan, dp)
        zt = np.where(bad, np.nan, zt)
        sg = np.where(dist == 0.0, 0.0, sg)
    return EllipticValue(
        wp=_finish(p.reshape(shape), real),
        wp_prime=_finish(dp.reshape(shape), real),
        zeta=_finish(zt.reshape(shape), real),
        sigma=_finish(sg.reshape(shape), real),
        pole_distance=_finish(dist.reshape(shape), True),
    )


def weierstrass_series(z, g2: float, g3: float) -> EllipticValue:
    """Period-free evaluation from the invariants alone.

    Valid for any real invariants (including negative discriminant) as long
    as |z| is smaller than the shortest nonzero period.  Used for limits
    g2, g3 -> 0 where no rectangular lattice exists.
    """
    real = np.isrealobj(z)
    za = np.atleast_1d(np.asarray(z, dtype=complex))
    scale = max(abs(g2) ** 0.25, abs(g3) ** (1.0 / 6.0))
    radius = np.inf if scale == 0.0 else 0.25 / scale
    ser = _Series.from_coefficients(laurent_coefficients(g2, g3))
    if np.isinf(radius):
        radius = float(np.max(np.abs(za), initial=1.0)) + 1.0
    if np.any(za == 0):
        raise NearPole("z = 0")
    p, dp, zt, sg = _halve_and_double(za.copy(), radius, g2, ser)
    shape = np.shape(z)
    return EllipticValue(
        wp=_finish(p.reshape(shape), real),
        wp_prime=_finish(dp.reshape(shape), real),
        zeta=_finish(zt.reshape(shape), real),
        sigma=_finish(sg.reshape(shape), real),
        pole_distance=_finish(np.abs(za).reshape(shape), True),
    )


def _checked(z, L: LatticeInvariants) -> EllipticValue:
    val = weierstrass(z, L)
    if np.any(val.near_pole):
        raise NearPole(
            f"argument within {L.cutoff_distance:.3g} of a lattice point "
            f"(min distance {np.min(val.pole_distance):.3g})"
        )
    return val


def wp(z, L: LatticeInvariants):
    return _checked(z, L).wp


def wp_prime(z, L: LatticeInvariants):
    return _checked(z, L).wp_prime


def wzeta(z, L: LatticeInvariants):
    return _checked(z, L).zeta


def wsigma(z, L: LatticeInvariants):
    return weierstrass(z, L).sigma


def wsigma_prime(z, L: LatticeInvariants):
    """sigma'(z), finite at the lattice points where zeta is not.

    Near a lattice point 2W with quasi-period H, sigma(2W + t) = F sigma(t)
    and so sigma' = F (H sigma(t) + sigma'(t)), with the small-t series
    sigma(t) = t exp(-S(t^2)) and sigma'(t) = exp(-S)(1 - t^2 Z(t^2)).
    """
    val = weierstrass(z, L)
    real = np.isrealobj(z)
    with np.errstate(invalid="ignore"):
        out = np.atleast_1d(np.asarray(val.sigma * val.zeta, dtype=complex))
    near = np.atleast_1d(val.near_pole)
    if near.any():
        zr, m, n = (np.atleast_1d(a)[near] for a in L.reduce(z))
        eta_w = 2.0 * m * L.eta1 + 2.0 * n * L.eta2
        sign = np.where((m.astype(int) + n.astype(int) + (m * n).astype(int)) % 2 == 0, 1.0, -1.0)
        F = sign * np.exp(eta_w * (zr + m * L.omega1 + n * L.omega2))
        t2 = zr * zr
        powers = t2[:, None] ** np.arange(L._series.stacked.shape[0])
        _, _, s_zt, s_ls = np.moveaxis(powers @ L._series.stacked, -1, 0)
        e = np.exp(-s_ls)
        out[near] = F * (eta_w * zr * e + e * (1.0 - t2 * s_zt))
    return _finish(out.reshape(np.shape(z)), real)


# rational (g2 = g3 = 0) degeneration

def _nonzero(x, cutoff: float):
    x = np.asarray(x)
    if np.any(np.abs(x) <= cutoff):
        raise NearPole("rational degeneration has its pole at 0")
    return x


def wp_hat(x, cutoff: float = 0.0):
    x = _nonzero(x, cutoff)
    return (1.0 / x ** 2)[()]


def wp_hat_prime(x, cutoff: float = 0.0):
    x = _nonzero(x, cutoff)
    return (-2.0 / x ** 3)[()]


def wzeta_hat(x, cutoff: float = 0.0):
    x = _nonzero(x, cutoff)
    return (1.0 / x)[()]


def wsigma_hat(x):
    return np.asarray(x)[()]
