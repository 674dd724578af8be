"""The Q-polynomial of the Lame operator and the algebra around it.

For u = g(g+1) wp(x + shift) the polynomial

    Q = B_g P^g + B_{g-1}(z) P^{g-1} + ... + B_0(z),   P = wp(x + shift),

solves Q''' - 4(u + Z) Q' - 2 u' Q = 0, and

    w^2 = (4(u + Z) Q^2 + Q'^2 - 2 Q Q'') / 4

does not depend on x.  The B_s come from a top-down recurrence in a formal
variable z; it matches the eigenvalue Z of y'' = (u + Z) y through z = -Z.
All public numeric entry points take the affine eigenvalue Z.

The B table is built in exact rational arithmetic (sympy) and only turned
into floats at evaluation time.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import sympy as sp

from . import elliptic as ell
from .elliptic import LatticeInvariants
from .errors import ConfigError, NotXIndependent, OffCurve, ZeroOfQ

Z_SYM, G2_SYM, G3_SYM = sp.symbols("z g2 g3")
MAX_G = 8
ZERO_Q_TOL = 1e-12


def recurrence_table(g: int, Bg=1) -> list:
    """Exact B_0..B_g as polynomials in (z, g2, g3) over the rationals."""
    if not isinstance(g, (int, np.integer)) or g < 1:
        raise ConfigError(f"g must be a positive integer, got {g!r}")
    z, g2, g3 = Z_SYM, G2_SYM, G3_SYM
    B = {g: sp.nsimplify(Bg)}
    get = lambda m: B.get(m, sp.Integer(0))  # noqa: E731
    for s in range(g - 1, -1, -1):
        num = (s + 1) * (8 * get(s + 1) * z - get(s + 2) * g2 * (s + 2) * (2 * s + 3)
                         - 2 * get(s + 3) * g3 * (s + 2) * (s + 3))
        den = 4 * (2 * s + 1) * (g * g + g - s * (s + 1))
        B[s] = sp.expand(sp.Rational(1, den) * num)
    return [B[s] for s in range(g + 1)]


@dataclass(frozen=True)
class QPolynomial:
    """Q(x, Z) for the index-g Lame potential g(g+1) wp(x + shift).

    ``lattice=None`` means the rational degeneration wp -> 1/x^2 (g2 = g3 = 0).
    """

    g: int
    g2: float
    g3: float
    Bg: float = 1.0
    lattice: LatticeInvariants | None = None
    shift: complex = 0.0

    @cached_property
    def B(self) -> list:
        return recurrence_table(self.g, self.Bg)

    def b_table(self) -> dict:
        return {f"B{s}": str(b) for s, b in enumerate(self.B)}

    def b_exact(self) -> list:
        """B_s with g2, g3 substituted exactly, as polynomials in z."""
        sub = {G2_SYM: sp.nsimplify(self.g2), G3_SYM: sp.nsimplify(self.g3)}
        return [sp.Poly(sp.expand(b.subs(sub)), Z_SYM) for b in self.B]

    @cached_property
    def _b_numeric(self) -> list:
        sub = {G2_SYM: self.g2, G3_SYM: self.g3}
        return [np.array([float(c) for c in sp.Poly(b.subs(sub), Z_SYM).all_coeffs()])
                for b in self.B]

    def p_coefficients(self, z_affine) -> np.ndarray:
        """Coefficients c_s with Q = sum_s c_s P^s, lowest power first."""
        zr = -np.asarray(z_affine, dtype=float)
        return np.array([np.polyval(c, zr) for c in self._b_numeric])

    def z_polynomial(self, P: float) -> np.ndarray:
        """Coefficients of Q as a polynomial in Z at fixed P, highest first."""
        g = self.g
        out = np.zeros(g + 1)
        for s, c in enumerate(self._b_numeric):
            # c(z) with z = -Z: flip the sign of odd powers
            deg = len(c) - 1
            cz = c * (-1.0) ** np.arange(deg, -1, -1)
            out[g - deg:] += cz * P ** s
        return out

    def wp_values(self, x):
        """P, P', P'', P''' at x + shift."""
        x = np.asarray(x, dtype=float)
        if self.lattice is None:
            t = x + float(np.real(self.shift))
            if np.any(np.abs(t) < 1e-8):
                from .errors import NearPole
                raise NearPole("x + shift at the pole of 1/x^2")
            P, dP = ell.wp_hat(t), ell.wp_hat_prime(t)
        else:
            ev = ell._checked(x + self.shift, self.lattice)
            P, dP = np.real(ev.wp), np.real(ev.wp_prime)
        d2P = 6.0 * P * P - 0.5 * self.g2
        d3P = 12.0 * P * dP
        return P, dP, d2P, d3P

    def potential(self, x):
        """(u, u') with u = g(g+1) P."""
        P, dP, _, _ = self.wp_values(x)
        k = self.g * (self.g + 1)
        return k * P, k * dP

    def __call__(self, x, z_affine):
        """Q, Q_x, Q_xx, Q_xxx at (x, Z)."""
        P, dP, d2P, d3P = self.wp_values(x)
        c = self.p_coefficients(z_affine)
        poly = np.polynomial.Polynomial(c)
        d1, d2, d3 = poly.deriv(1), poly.deriv(2), poly.deriv(3)
        Q = poly(P)
        Qx = d1(P) * dP
        Qxx = d2(P) * dP ** 2 + d1(P) * d2P
        Qxxx = d3(P) * dP ** 3 + 3.0 * d2(P) * dP * d2P + d1(P) * d3P
        return Q, Qx, Qxx, Qxxx

    def curve_value(self, x, z_affine):
        """R(x, Z) = (4(u+Z)Q^2 + Q_x^2 - 2 Q Q_xx) / 4."""
        Q, Qx, Qxx, _ = self(x, z_affine)
        u, _ = self.potential(x)
        return (4.0 * (u + z_affine) * Q * Q + Qx * Qx - 2.0 * Q * Qxx) / 4.0

    def roots(self, x) -> np.ndarray:
        """Zeros Z_j(x) of Q(x, .), in the affine eigenvalue."""
        P = float(self.wp_values(x)[0])
        return np.roots(self.z_polynomial(P))


def q_coefficients(g: int, g2: float, g3: float, Bg: float = 1.0,
                   shift: complex | None = None, lattice: LatticeInvariants | None = None
                   ) -> QPolynomial:
    """Build Q for index g; the default shift is the imaginary half-period."""
    if not isinstance(g, (int, np.integer)) or not 1 <= g <= MAX_G:
        raise ConfigError(f"g must be an integer in [1, {MAX_G}], got {g!r}")
    if lattice is None and (g2 != 0 or g3 != 0):
        lattice = ell.lattice_from_invariants(g2, g3)
    if shift is None:
        shift = lattice.omega2 if lattice is not None else 0.0
    return QPolynomial(int(g), float(g2), float(g3), float(Bg), lattice, shift)


def q_ode_residual(Q: QPolynomial, x, z_affine):
    """|Q''' - 4(Z + u) Q' - 2 u' Q|."""
    q, qx, _, qxxx = Q(x, z_affine)
    u, du = Q.potential(x)
    return np.abs(qxxx - 4.0 * (z_affine + u) * qx - 2.0 * du * q)


@dataclass(frozen=True)
class SpectralCurveG:
    """w^2 = sum_k coeffs[k] Z^k (lowest first), in the affine eigenvalue."""

    g: int
    coeffs: np.ndarray
    spread: float

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def monic(self) -> np.ndarray:
        return self.coeffs / self.coeffs[-1]

    def __call__(self, z_affine):
        return np.polynomial.polynomial.polyval(z_affine, self.coeffs)

    def branch_points(self) -> np.ndarray:
        return np.sort_complex(np.polynomial.polynomial.polyroots(self.coeffs))


def _sample_x(Q: QPolynomial, n: int) -> np.ndarray:
    if Q.lattice is None:
        return 0.7 + 0.35 * np.arange(n)
    return Q.lattice.omega1 * (0.05 + 1.8 * np.arange(n) / n)


def spectral_curve(Q: QPolynomial, xs=None, rel_tol: float = 1e-8) -> SpectralCurveG:
    """Fit w^2 as a polynomial of degree 2g+1 in Z from R(x, Z).

    Raises :class:`NotXIndependent` when R varies with x by more than
    ``rel_tol`` relative to its size.
    """
    xs = _sample_x(Q, 8) if xs is None else np.asarray(xs, dtype=float)
    deg = 2 * Q.g + 1
    scale = max(1.0, abs(Q.g2) ** 0.5, abs(Q.g3) ** (1.0 / 3.0))
    nodes = scale * np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
    vals = np.array([[Q.curve_value(x, zk) for zk in nodes] for x in xs])
    mean = vals.mean(axis=0)
    spread = float(np.max(np.abs(vals - mean)) / max(np.max(np.abs(mean)), 1e-300))
    if spread > rel_tol:
        raise NotXIndependent(f"R(x, Z) varies with x: relative spread {spread:.3e}")
    # exact interpolation on deg+1 Chebyshev nodes, in the scaled variable
    c_scaled = np.polynomial.polynomial.polyfit(nodes / scale, mean, deg)
    coeffs = c_scaled / scale ** np.arange(deg + 1)
    return SpectralCurveG(Q.g, coeffs, spread)


def curve_closed_form(B0, B1, B2, g2, g3, z):
    """(1/4)(4 B0^2 z - B0 (4 B2 g3 + B1 g2) + B1^2 g3) in the recurrence variable z."""
    return 0.25 * (4 * B0 ** 2 * z - B0 * (4 * B2 * g3 + B1 * g2) + B1 ** 2 * g3)


def closed_form_g1(g2: float, g3: float, Bg: float = 1.0) -> np.ndarray:
    """The g = 1 closed-form curve mapped to the affine eigenvalue, lowest power first.

    In the recurrence variable it reads (4 z^3 - g2 z + g3)/4 for B_1 = 1.
    With z = -Z the identity R(Z) = -W(-Z) holds.
    """
    z = sp.Symbol("z")
    B1 = sp.nsimplify(Bg)
    B0 = B1 * z
    W = curve_closed_form(B0, B1, 0, sp.nsimplify(g2), sp.nsimplify(g3), z)
    R = sp.expand(-W.subs(z, -Z_SYM))
    return np.array([float(c) for c in reversed(sp.Poly(R, Z_SYM).all_coeffs())])


def curve_exact(Q: QPolynomial) -> sp.Poly:
    """R(Z) computed symbolically: P'^2 is eliminated with wp'^2 = 4P^3 - g2 P - g3."""
    P, dP, Zs = sp.symbols("P dP Z")
    g2, g3 = sp.nsimplify(Q.g2), sp.nsimplify(Q.g3)
    q = sum(b.as_expr().subs(Z_SYM, -Zs) * P ** s for s, b in enumerate(Q.b_exact()))
    qP = sp.diff(q, P)
    qPP = sp.diff(q, P, 2)
    qx = qP * dP
    qxx = qPP * dP ** 2 + qP * (6 * P ** 2 - g2 / 2)
    u = Q.g * (Q.g + 1) * P
    R = sp.expand((4 * (u + Zs) * q ** 2 + qx ** 2 - 2 * q * qxx) / 4)
    R = sp.expand(R.subs(dP ** 2, 4 * P ** 3 - g2 * P - g3))
    poly = sp.Poly(R, P, Zs)
    if any(m[0] > 0 for m in poly.monoms()):
        raise NotXIndependent("symbolic R keeps a P dependence")
    return sp.Poly(R, Zs)


def chi0(x, z_affine, w, Q: QPolynomial, curve: SpectralCurveG | None = None,
         curve_tol: float = 1e-8):
    """chi0 = Q_x / (2Q) + w / Q, the logarithmic derivative of the BA function.

    ``curve`` defaults to the fitted curve of ``Q``; (Z, w) must satisfy
    w^2 = R(Z) to ``curve_tol`` relative.
    """
    curve = spectral_curve(Q) if curve is None else curve
    r = curve(z_affine)
    if abs(w * w - r) > curve_tol * max(1.0, abs(r)):
        raise OffCurve(f"w^2 = {w * w!r} but R(Z) = {r!r}")
    q, qx, _, _ = Q(x, z_affine)
    if np.any(np.abs(q) < ZERO_Q_TOL):
        raise ZeroOfQ("Q(x, Z) vanishes")
    return qx / (2.0 * q) + w / q


def chi0_derivative(x, z_affine, w, Q: QPolynomial):
    q, qx, qxx, _ = Q(x, z_affine)
    return qxx / (2.0 * q) - qx * qx / (2.0 * q * q) - w * qx / (q * q)


def factorization_residual(x, z_affine, w, Q: QPolynomial, f=None,
                           curve: SpectralCurveG | None = None):
    """|(L - Z) f - (d + chi0)(d - chi0) f| for L = d^2 - u.

    With f'' cancelling, this is |chi0' + chi0^2 - (u + Z)| |f|; ``f`` is a
    callable returning (f, f', f'') and defaults to a generic exponential.
    """
    x = np.asarray(x, dtype=float)
    c = chi0(x, z_affine, w, Q, curve)
    dc = chi0_derivative(x, z_affine, w, Q)
    u, _ = Q.potential(x)
    if f is None:
        fv, fp, fpp = np.exp(0.3 * x), 0.3 * np.exp(0.3 * x), 0.09 * np.exp(0.3 * x)
    else:
        fv, fp, fpp = f(x)
    lhs = fpp - (u + z_affine) * fv
    rhs = fpp - dc * fv - c * c * fv
    return np.abs(lhs - rhs)


def l3_ratio(ba, x):
    """(L3 psi) / psi with L3 = d^3 - 3 wp(x+gamma) d - (3/2) wp'(x+gamma)."""
    psi, d1, _, d3 = ba.derivatives(x)
    x = np.asarray(x, dtype=float)
    ev = ell._checked(x + ba.gamma, ba.lattice)
    P, dP = np.real(ev.wp), np.real(ev.wp_prime)
    return (d3 - 3.0 * P * d1 - 1.5 * dP * psi) / psi


def relative_spread(v) -> float:
    v = np.asarray(v)
    m = np.mean(v)
    return float(np.max(np.abs(v - m)) / abs(m))
