"""Potentials, solutions of y'' = (u + z) y, and the genus-one Baker-Akhiezer function.

Two spectral coordinates are kept apart throughout:

* ``z_affine`` is the eigenvalue in ``y'' - u y = z_affine y``;
* ``z_unif`` is the point of the uniformizing plane, with
  ``z_affine = wp(z_unif)`` for the Lame potential and
  ``z_affine = 1 / z_unif**2`` for its rational degeneration.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import elliptic as ell
from .elliptic import LatticeInvariants
from .errors import (BranchPoint, DegenerateParameters, NearPole, OutOfDomain,
                     SingularityInSpan)
from .ode import DEFAULT_ATOL, DEFAULT_RTOL, OdeResult, integrate

BRANCH_TOL = 1e-6


# potentials

def real_array(a) -> np.ndarray:
    """float64 array, except that long double input keeps its precision."""
    a = np.asarray(a)
    return a if a.dtype == np.longdouble else a.astype(float)


@dataclass(frozen=True)
class LameG1:
    """u(x) = 2 wp(x + gamma)."""

    lattice: LatticeInvariants
    gamma: float = 0.0

    kind = "lame-g1"

    def __call__(self, x):
        val = ell.weierstrass(np.asarray(x, dtype=float) + self.gamma, self.lattice)
        if np.any(val.near_pole):
            raise NearPole(f"x + gamma too close to a lattice point (x={x})")
        p, dp = val.wp, val.wp_prime
        return 2.0 * p, 2.0 * dp, 2.0 * (6.0 * p * p - 0.5 * self.lattice.g2)

    def singularities(self, a: float, b: float) -> list[float]:
        lo, hi = min(a, b), max(a, b)
        period = 2.0 * self.lattice.omega1
        m0 = np.ceil((lo + self.gamma) / period)
        m1 = np.floor((hi + self.gamma) / period)
        return [float(m * period - self.gamma) for m in np.arange(m0, m1 + 1)]

    def describe(self) -> dict:
        return {"kind": self.kind, "g2": self.lattice.g2, "g3": self.lattice.g3,
                "gamma": self.gamma}


@dataclass(frozen=True)
class RationalCusp:
    """u(x) = 2 / (x + gamma)**2, the g2 = g3 = 0 limit of the Lame potential."""

    gamma: float = 0.0

    kind = "rational"

    def __call__(self, x):
        xg = real_array(x) + self.gamma
        if np.any(xg == 0.0):
            raise NearPole("x = -gamma is the pole of the rational potential")
        return 2.0 / xg ** 2, -4.0 / xg ** 3, 12.0 / xg ** 4

    def singularities(self, a: float, b: float) -> list[float]:
        p = -self.gamma
        return [p] if min(a, b) <= p <= max(a, b) else []

    def describe(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma}


@dataclass(frozen=True)
class Tabulated:
    """Potential sampled on a grid, interpolated by monotone cubic splines.

    Without explicit ``du``/``d2u`` columns the derivatives come from the
    spline itself; ``accurate_derivatives`` is then False.
    """

    x: np.ndarray
    u: np.ndarray
    du: np.ndarray | None = None
    d2u: np.ndarray | None = None
    _interp: tuple = field(init=False, repr=False, compare=False)

    kind = "tabulated"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or len(x) < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("tabulated abscissae must be strictly increasing")
        fu = PchipInterpolator(x, np.asarray(self.u, dtype=float))
        fdu = PchipInterpolator(x, np.asarray(self.du, dtype=float)) if self.du is not None else fu.derivative()
        if self.d2u is not None:
            fd2u = PchipInterpolator(x, np.asarray(self.d2u, dtype=float))
        else:
            fd2u = fdu.derivative()
        object.__setattr__(self, "_interp", (fu, fdu, fd2u))

    @property
    def accurate_derivatives(self) -> bool:
        return self.du is not None and self.d2u is not None

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if np.any(xa < lo) or np.any(xa > hi):
            raise OutOfDomain(f"x outside tabulated range [{lo}, {hi}]")
        fu, fdu, fd2u = self._interp
        return fu(xa)[()], fdu(xa)[()], fd2u(xa)[()]

    def singularities(self, a: float, b: float) -> list[float]:
        lo, hi = self.domain
        if min(a, b) < lo or max(a, b) > hi:
            raise OutOfDomain(f"span [{a}, {b}] leaves tabulated range [{lo}, {hi}]")
        return []

    def describe(self) -> dict:
        return {"kind": self.kind, "n": len(self.x), "domain": list(self.domain),
                "accurate_derivatives": self.accurate_derivatives}

    @classmethod
    def from_csv(cls, path) -> "Tabulated":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        cols = rows[0].keys() if rows else ()
        get = lambda name: np.array([float(r[name]) for r in rows]) if name in cols else None
        return cls(get("x"), get("u"), get("du"), get("d2u"))


Potential = Union[LameG1, RationalCusp, Tabulated]


def potential_eval(u: Potential, x):
    """(u, u', u'') at x."""
    return u(x)


def check_span(u: Potential, a: float, b: float) -> None:
    poles = u.singularities(a, b)
    if poles:
        raise SingularityInSpan(f"potential singular at x={poles[0]:.6g} inside [{a}, {b}]")


# integration of y'' = (u + z) y

@dataclass
class SchrodingerTrace:
    x: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    z_affine: float
    potential: Potential
    ode: OdeResult

    def __call__(self, x):
        """Dense output (y, y') at x."""
        out = self.ode.sol(np.asarray(x, dtype=float))
        return out[0], out[1]

    def metadata(self) -> dict:
        return {"z_affine": self.z_affine, "potential": self.potential.describe(),
                "integrator": self.ode.metadata()}

    def to_csv(self, path) -> None:
        write_csv(path, ["x", "y", "dy"], [self.x, self.y, self.dy])

    def to_json(self, path) -> None:
        doc = {"metadata": self.metadata(),
               "x": self.x.tolist(), "y": self.y.tolist(), "dy": self.dy.tolist()}
        Path(path).write_text(json.dumps(doc, indent=2))


def solve_schrodinger(u: Potential, z: float, x0: float, y0: float, dy0: float,
                      x_end: float, rtol: float = DEFAULT_RTOL,
                      atol: float = DEFAULT_ATOL) -> SchrodingerTrace:
    """Adaptive solution of y'' = (u(x) + z) y from x0 to x_end."""
    check_span(u, x0, x_end)

    def rhs(x, state):
        uu = u(x)[0]
        return [state[1], (uu + z) * state[0]]

    res = integrate(rhs, x0, [y0, dy0], x_end, rtol=rtol, atol=atol)
    return SchrodingerTrace(res.t, res.y[0], res.y[1], z, u, res)


# Baker-Akhiezer function, genus one and rational limit

@dataclass(frozen=True)
class BAFunction:
    """psi(x) = exp(-x zeta(z)) sigma(z+x+gamma) sigma(gamma) / (sigma(z+gamma) sigma(x+gamma)).

    ``lattice=None`` selects the rational degeneration
    psi = exp(-x/z) (x+z+gamma) gamma / ((x+gamma)(z+gamma)).
    """

    z_unif: complex
    gamma: float
    lattice: LatticeInvariants | None = None

    @property
    def degenerate(self) -> bool:
        return self.lattice is None

    @property
    def z_affine(self):
        if self.degenerate:
            return 1.0 / self.z_unif ** 2
        return ell.wp(self.z_unif, self.lattice)

    def log_derivative(self, x):
        """(phi, phi', phi'') with phi = psi'/psi."""
        z, g = self.z_unif, self.gamma
        x = np.asarray(x)
        if self.degenerate:
            a = x + z + g
            b = x + g
            phi = -1.0 / z + 1.0 / a - 1.0 / b
            return phi, -1.0 / a ** 2 + 1.0 / b ** 2, 2.0 / a ** 3 - 2.0 / b ** 3
        L = self.lattice
        za = ell._checked(z, L)
        va = ell._checked(x + z + g, L)
        vb = ell._checked(x + g, L)
        phi = -za.zeta + va.zeta - vb.zeta
        return phi, -va.wp + vb.wp, -va.wp_prime + vb.wp_prime

    def __call__(self, x):
        """(psi, psi') at x."""
        z, g = self.z_unif, self.gamma
        x = np.asarray(x)
        if self.degenerate:
            if z == 0 or z + g == 0:
                raise DegenerateParameters("z and z + gamma must be nonzero")
            if np.any(x + g == 0):
                raise NearPole("x = -gamma")
            b = x + g
            psi = np.exp(-x / z) * (x + z + g) * g / (b * (z + g))
            dpsi = np.exp(-x / z) * g / (z + g) * (-(1.0 + z / b) / z - z / b ** 2)
            return psi[()], dpsi[()]
        L = self.lattice
        zeta_z = ell._checked(z, L).zeta
        # sigma is entire: the zeros of psi at x + z + gamma on the lattice are regular points
        sa = ell.wsigma(x + z + g, L)
        dsa = ell.wsigma_prime(x + z + g, L)
        vb = ell._checked(x + g, L)
        s_g = ell.wsigma(g, L)
        s_zg = ell.wsigma(z + g, L)
        if abs(s_g) == 0.0 or abs(s_zg) == 0.0:
            raise NearPole("gamma and z + gamma must be off the lattice")
        c = np.exp(-x * zeta_z) * s_g / (s_zg * vb.sigma)
        psi = c * sa
        dpsi = c * (dsa - sa * (zeta_z + vb.zeta))
        return psi[()], dpsi[()]

    def derivatives(self, x):
        """(psi, psi', psi'', psi''') from the log-derivative chain."""
        psi, _ = self(x)
        phi, dphi, d2phi = self.log_derivative(x)
        return (psi, psi * phi, psi * (dphi + phi ** 2),
                psi * (d2phi + 3.0 * phi * dphi + phi ** 3))

    def potential(self) -> Potential:
        if self.degenerate:
            return RationalCusp(self.gamma)
        return LameG1(self.lattice, self.gamma)


def baker_akhiezer_g1(x, z_unif, gamma: float, L: LatticeInvariants):
    """(psi, psi') of the genus-one Baker-Akhiezer function."""
    return BAFunction(z_unif, gamma, L)(x)


def baker_akhiezer_rational(x, z_unif, gamma: float):
    """(psi, psi') of the rational (cuspidal) Baker-Akhiezer function."""
    return BAFunction(z_unif, gamma, None)(x)


# solution bases and the l-space

@dataclass(frozen=True)
class SolutionBasis:
    """Two independent solutions of s'' = (u + z_affine) s.

    ``evaluator(x)`` returns ``(s1, s1', s2, s2')``.
    """

    potential: Potential
    z_affine: float
    evaluator: Callable
    z_unif: float | None = None
    x_ref: float = 1.0
    label: str = ""

    def __call__(self, x):
        return self.evaluator(x)

    def s1(self, x):
        return self.evaluator(x)[0]

    def s2(self, x):
        return self.evaluator(x)[2]

    def wronskian(self, x=None):
        s1, d1, s2, d2 = self.evaluator(self.x_ref if x is None else x)
        return s1 * d2 - d1 * s2

    def wronskian_spread(self, xs) -> float:
        """max|W - mean W| / |mean W| over sample points."""
        w = np.asarray(self.wronskian(np.asarray(xs, dtype=float)))
        mean = np.mean(w)
        return float(np.max(np.abs(w - mean)) / abs(mean))

    def eq_residual(self, x, h: float = 1e-3):
        """Scaled residual |s_i'' - (u+z) s_i| / (1 + |(u+z) s_i|).

        s_i'' comes from 4th-order central differences of s_i'.
        """
        x = np.asarray(x, dtype=float)
        d = [self.evaluator(x + k * h) for k in (-2, -1, 1, 2)]
        U = self.potential(x)[0] + self.z_affine
        s1, _, s2, _ = self.evaluator(x)
        out = []
        for idx, s in ((1, s1), (3, s2)):
            dd = (d[0][idx] - 8 * d[1][idx] + 8 * d[2][idx] - d[3][idx]) / (12 * h)
            out.append(np.abs(dd - U * s) / (1.0 + np.abs(U * s)))
        return out[0], out[1]

    def describe(self) -> dict:
        return {"label": self.label, "z_affine": float(np.real(self.z_affine)),
                "z_unif": None if self.z_unif is None else float(np.real(self.z_unif)),
                "potential": self.potential.describe()}


def rational_basis(gamma: float, z_unif: float) -> SolutionBasis:
    """s1 = e^{-x/z}(x+z+g)/((x+g)(z+g)),  s2 = e^{x/z}(x-z+g)/((x+g)(g-z))."""
    z, g = float(z_unif), float(gamma)
    if z == 0.0 or z + g == 0.0 or g - z == 0.0:
        raise DegenerateParameters(f"rational basis undefined for gamma={g}, z={z}")

    def ev(x):
        x = real_array(x)
        b = x + g
        if np.any(b == 0.0):
            raise NearPole("x = -gamma")
        e_m = np.exp(-x / z)
        e_p = np.exp(x / z)
        f = 1.0 + z / b
        h = 1.0 - z / b
        s1 = e_m * f / (z + g)
        d1 = e_m * (-f / z - z / b ** 2) / (z + g)
        s2 = e_p * h / (g - z)
        d2 = e_p * (h / z + z / b ** 2) / (g - z)
        return s1[()], d1[()], s2[()], d2[()]

    x_ref = 1.0 if g + 1.0 != 0.0 else 2.0
    return SolutionBasis(RationalCusp(g), 1.0 / z ** 2, ev, z, x_ref, "rational")


def lame_basis(gamma: float, L: LatticeInvariants, z_unif: float) -> SolutionBasis:
    """s1 = psi(x, z), s2 = psi(x, -z): the two sheets w and -w of the curve."""
    val = ell._checked(z_unif, L)
    if abs(val.wp_prime) <= BRANCH_TOL * (1.0 + abs(val.wp)) ** 1.5:
        raise BranchPoint(f"z_unif={z_unif} is a branch point (wp'(z) ~ 0)")
    plus = BAFunction(z_unif, gamma, L)
    minus = BAFunction(-z_unif, gamma, L)

    def ev(x):
        s1, d1 = plus(x)
        s2, d2 = minus(x)
        return s1, d1, s2, d2

    return SolutionBasis(LameG1(L, gamma), float(np.real(val.wp)), ev, z_unif,
                         0.5 * L.omega1, "lame-g1")


def numerical_basis(u: Potential, z: float, x0: float, x_end: float,
                    rtol: float = 1e-12, atol: float = 1e-14) -> SolutionBasis:
    """Basis normalised by (s1, s1') = (1, 0), (s2, s2') = (0, 1) at x0."""
    t1 = solve_schrodinger(u, z, x0, 1.0, 0.0, x_end, rtol, atol)
    t2 = solve_schrodinger(u, z, x0, 0.0, 1.0, x_end, rtol, atol)

    def ev(x):
        a, da = t1(x)
        b, db = t2(x)
        return a[()], da[()], b[()], db[()]

    return SolutionBasis(u, z, ev, None, x0, "numerical")


@dataclass(frozen=True)
class LFunction:
    """l = b1 s1^2 + b2 s1 s2 + b3 s2^2, a solution of l''' = 4(u+z) l' + 2 u' l."""

    basis: SolutionBasis
    b1: float
    b2: float
    b3: float

    def __call__(self, x):
        """(l, l', l'') using s'' = (u + z) s."""
        s1, d1, s2, d2 = self.basis(x)
        U = self.basis.potential(x)[0] + self.basis.z_affine
        b1, b2, b3 = self.b1, self.b2, self.b3
        l = b1 * s1 * s1 + b2 * s1 * s2 + b3 * s2 * s2
        dl = 2 * b1 * s1 * d1 + b2 * (d1 * s2 + s1 * d2) + 2 * b3 * s2 * d2
        d2l = (2 * b1 * (d1 * d1 + U * s1 * s1) + 2 * b2 * (d1 * d2 + U * s1 * s2)
               + 2 * b3 * (d2 * d2 + U * s2 * s2))
        return l, dl, d2l

    def third(self, x):
        """l''' by the reduction 4(u+z) l' + 2 u' l."""
        l, dl, _ = self(x)
        uu, du, _ = self.basis.potential(x)
        return 4.0 * (uu + self.basis.z_affine) * dl + 2.0 * du * l

    def third_product_rule(self, x):
        """l''' differentiated term by term, using only s'' = (u + z) s."""
        s1, d1, s2, d2 = self.basis(x)
        uu, du, _ = self.basis.potential(x)
        U = uu + self.basis.z_affine
        b1, b2, b3 = self.b1, self.b2, self.b3
        # d/dx (s_i' s_j' + U s_i s_j) = U (s_i s_j)' + U (s_i s_j)' + u' s_i s_j
        t11 = 4 * U * s1 * d1 + du * s1 * s1
        t12 = 2 * U * (d1 * s2 + s1 * d2) + du * s1 * s2
        t22 = 4 * U * s2 * d2 + du * s2 * s2
        return 2 * b1 * t11 + 2 * b2 * t12 + 2 * b3 * t22

    def eq_residual(self, x, h: float = 1e-3):
        """Scaled residual of l''' = 4(u+z)l' + 2u'l.

        l''' comes from 4th-order central differences of l''; the residual is
        divided by 1 + |4(u+z)l'| + |2u'l|.
        """
        x = np.asarray(x, dtype=float)
        f = lambda t: self(t)[2]
        d3 = (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)
        l, dl, _ = self(x)
        uu, du, _ = self.basis.potential(x)
        a = 4.0 * (uu + self.basis.z_affine) * dl
        b = 2.0 * du * l
        return np.abs(d3 - a - b) / (1.0 + np.abs(a) + np.abs(b))


def make_l(basis: SolutionBasis, b1: float, b2: float, b3: float) -> LFunction:
    return LFunction(basis, float(b1), float(b2), float(b3))


def write_csv(path, header, columns) -> None:
    """Comma-separated, header row, LF endings, 17 significant digits."""
    cols = [np.atleast_1d(np.asarray(c)) for c in columns]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])


def _fmt(v) -> str:
    if v is None or (isinstance(v, str) and v == ""):
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    v = float(np.real(v))
    if np.isnan(v):
        return "nan"
    return f"{v:.17g}"
