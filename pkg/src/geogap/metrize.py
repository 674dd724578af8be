"""The metric whose geodesics y(x) solve y'' = (u + z) y.

With s = a1 s1 + a2 s2 solving the Schrodinger equation and
l = b1 s1^2 + b2 s1 s2 + b3 s2^2, the fields

    psi3 = l,  psi2 = s - y l'/2,  psi1 = r0 + y (y l'' - 4 s' - 2 y l (u+z)) / 2

solve the linear metrisability system for A0 = (u+z) y, A1 = A2 = A3 = 0, and
the metric is g = (psi1 dx^2 + 2 psi2 dx dy + psi3 dy^2) / Delta^2 with
Delta = psi1 psi3 - psi2^2.

Every x-derivative of s and l is reduced with s'' = (u+z) s and
l''' = 4(u+z) l' + 2 u' l, so only u and u' are ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateDelta, DegenerateParameters
from .schrodinger import SolutionBasis, real_array

DELTA_MIN = 1e-8
DET_MIN = 1e-14
STEP_FRACTION = 0.01
FD_DELTA_MARGIN = 1e-2


@dataclass(frozen=True)
class MetricParams:
    """The six constants (r0, a1, a2, b1, b2, b3) over a fixed solution basis."""

    basis: SolutionBasis
    r0: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    b3: float = 0.0

    def __post_init__(self):
        if not any((self.r0, self.a1, self.a2, self.b1, self.b2, self.b3)):
            raise DegenerateParameters("all six metric parameters are zero")

    @property
    def z_affine(self) -> float:
        return self.basis.z_affine

    @property
    def potential(self):
        return self.basis.potential

    @property
    def flat(self) -> bool:
        return self.r0 == 0 and self.a1 == 0 and self.a2 == 0

    def values(self) -> dict:
        return {k: getattr(self, k) for k in ("r0", "a1", "a2", "b1", "b2", "b3")}

    def profile(self, x) -> "Profile":
        """s, s', l, l', l'', u, u' at x."""
        s1, d1, s2, d2 = self.basis(x)
        uu, du, _ = self.basis.potential(x)
        U = uu + self.basis.z_affine
        b1, b2, b3 = self.b1, self.b2, self.b3
        l = b1 * s1 * s1 + b2 * s1 * s2 + b3 * s2 * s2
        dl = 2 * b1 * s1 * d1 + b2 * (d1 * s2 + s1 * d2) + 2 * b3 * s2 * d2
        d2l = (2 * b1 * (d1 * d1 + U * s1 * s1) + 2 * b2 * (d1 * d2 + U * s1 * s2)
               + 2 * b3 * (d2 * d2 + U * s2 * s2))
        s = self.a1 * s1 + self.a2 * s2
        ds = self.a1 * d1 + self.a2 * d2
        return Profile(s, ds, l, dl, d2l, uu, du, U, s1 * d2 - d1 * s2)


class Profile(NamedTuple):
    s: np.ndarray
    ds: np.ndarray
    l: np.ndarray
    dl: np.ndarray
    d2l: np.ndarray
    u: np.ndarray
    du: np.ndarray
    U: np.ndarray
    W: np.ndarray

    @property
    def d3l(self):
        return 4.0 * self.U * self.dl + 2.0 * self.du * self.l

    @property
    def d2s(self):
        return self.U * self.s


@dataclass(frozen=True)
class PsiTriple:
    psi1: np.ndarray
    psi2: np.ndarray
    psi3: np.ndarray
    psi1_x: np.ndarray
    psi1_y: np.ndarray
    psi2_x: np.ndarray
    psi2_y: np.ndarray
    psi3_x: np.ndarray
    psi3_y: np.ndarray
    # (Delta, Delta_x, Delta_y) from the expansion in y, when known
    expansion: tuple | None = None

    @property
    def delta(self):
        if self.expansion is not None:
            return self.expansion[0]
        return self.psi1 * self.psi3 - self.psi2 ** 2

    @property
    def delta_x(self):
        if self.expansion is not None:
            return self.expansion[1]
        return self.psi1_x * self.psi3 + self.psi1 * self.psi3_x - 2.0 * self.psi2 * self.psi2_x

    @property
    def delta_y(self):
        if self.expansion is not None:
            return self.expansion[2]
        return self.psi1_y * self.psi3 + self.psi1 * self.psi3_y - 2.0 * self.psi2 * self.psi2_y

    def shifted(self, d1=0.0, d2=0.0, d3=0.0) -> "PsiTriple":
        """Add constants to the fields (partials unchanged)."""
        return PsiTriple(self.psi1 + d1, self.psi2 + d2, self.psi3 + d3,
                         self.psi1_x, self.psi1_y, self.psi2_x, self.psi2_y,
                         self.psi3_x, self.psi3_y)


def psi_triple(params: MetricParams, x, y) -> PsiTriple:
    x = real_array(x)
    y = real_array(y)
    p = params.profile(x)
    psi3 = p.l + 0.0 * y
    psi2 = p.s - 0.5 * y * p.dl
    psi1 = params.r0 + 0.5 * y * (y * p.d2l - 4.0 * p.ds - 2.0 * y * p.l * p.U)
    psi1_x = 0.5 * y * y * p.d3l - 2.0 * y * p.d2s - y * y * (p.dl * p.U + p.l * p.du)
    psi1_y = y * p.d2l - 2.0 * p.ds - 2.0 * y * p.l * p.U
    psi2_x = p.ds - 0.5 * y * p.d2l
    psi2_y = -0.5 * p.dl + 0.0 * y
    psi3_x = p.dl + 0.0 * y
    psi3_y = 0.0 * psi3
    # Delta = c0 + c1 y + c2 y^2 with c2 = (b1 b3 - b2^2/4) W^2 constant; summing
    # the expansion avoids the cancellation in psi1 psi3 - psi2^2
    c0 = params.r0 * p.l - p.s ** 2
    c1 = p.s * p.dl - 2.0 * p.l * p.ds
    c2 = (params.b1 * params.b3 - 0.25 * params.b2 ** 2) * p.W ** 2
    c0_x = params.r0 * p.dl - 2.0 * p.s * p.ds
    c1_x = p.s * p.d2l - p.ds * p.dl - 2.0 * p.U * p.l * p.s
    exp = (c0 + y * (c1 + y * c2), c0_x + y * c1_x, c1 + 2.0 * y * c2 + 0.0 * x)
    return PsiTriple(psi1, psi2, psi3, psi1_x, psi1_y, psi2_x, psi2_y, psi3_x, psi3_y, exp)


class Christoffels(NamedTuple):
    """Gamma^k_ij with 1 = x, 2 = y."""

    g1_11: np.ndarray
    g1_12: np.ndarray
    g1_22: np.ndarray
    g2_11: np.ndarray
    g2_12: np.ndarray
    g2_22: np.ndarray

    def as_array(self) -> np.ndarray:
        """Array G[k, i, j] of shape (2, 2, 2, ...)."""
        return np.array([[[self.g1_11, self.g1_12], [self.g1_12, self.g1_22]],
                         [[self.g2_11, self.g2_12], [self.g2_12, self.g2_22]]])


@dataclass(frozen=True)
class MetricPoint:
    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray
    delta: np.ndarray
    lam: np.ndarray
    christoffels: Christoffels
    K: np.ndarray
    dg: np.ndarray          # dg[k, i, j] = d_k g_ij
    mask: np.ndarray        # True where |delta| > delta_min

    @property
    def det(self):
        return self.g11 * self.g22 - self.g12 ** 2

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])

    @property
    def inverse(self) -> np.ndarray:
        d = self.det
        return np.array([[self.g22 / d, -self.g12 / d], [-self.g12 / d, self.g11 / d]])

    @property
    def signature(self) -> str:
        d = np.asarray(self.det)
        if d.ndim:
            raise ValueError("signature is defined pointwise")
        if d < 0:
            return "lorentzian"
        return "riemannian" if self.g11 > 0 else "negative-definite"


def metric_from_psi(psi: PsiTriple):
    """(g11, g12, g22) = (psi1, psi2, psi3) / Delta^2."""
    d2 = psi.delta ** 2
    return psi.psi1 / d2, psi.psi2 / d2, psi.psi3 / d2


def curvature_closed_form(params: MetricParams, x, y=None):
    """4K = 2(r0 l - s^2) l'' - r0 l'^2 + 4 s l' s' - 4 l s'^2 + 4 l (s^2 - r0 l)(u+z).

    Independent of y.
    """
    p = params.profile(np.asarray(x, dtype=float))
    r0 = params.r0
    k4 = (2.0 * (r0 * p.l - p.s ** 2) * p.d2l - r0 * p.dl ** 2 + 4.0 * p.s * p.dl * p.ds
          - 4.0 * p.l * p.ds ** 2 + 4.0 * p.l * (p.s ** 2 - r0 * p.l) * p.U)
    K = 0.25 * k4
    if y is not None:
        K = K + 0.0 * np.asarray(y, dtype=float)
    return K


def christoffels_from(g: np.ndarray, dg: np.ndarray) -> Christoffels:
    """Gamma^k_ij = 1/2 g^{km} (d_j g_mi + d_i g_mj - d_m g_ij).

    ``g`` has shape (2, 2, ...), ``dg[k, i, j] = d_k g_ij``.
    """
    det = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    if np.any(np.abs(det) <= DET_MIN):
        raise DegenerateDelta("metric determinant below guard")
    ginv = np.array([[g[1, 1], -g[0, 1]], [-g[0, 1], g[0, 0]]]) / det
    return _christoffels(ginv, dg)


def _christoffels(ginv: np.ndarray, dg: np.ndarray) -> Christoffels:
    low = 0.5 * (np.einsum("jmi...->mij...", dg) + np.einsum("imj...->mij...", dg) - dg)
    G = np.einsum("km...,mij...->kij...", ginv, low)
    return Christoffels(G[0, 0, 0], G[0, 0, 1], G[0, 1, 1], G[1, 0, 0], G[1, 0, 1], G[1, 1, 1])


def _christoffels_psi(psi: PsiTriple, delta, ok) -> Christoffels:
    """Christoffels of psi / Delta^2 with adj(psi) psi = Delta I used exactly.

    g^{mn} d_k g_nj = (adj(psi) d_k psi)^m_j / Delta - 2 (d_k Delta / Delta) delta^m_j,
    so no product psi adj(psi) is ever formed numerically.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(ok, 1.0 / np.where(ok, delta, 1.0), np.nan)
        P = np.array([[psi.psi1, psi.psi2], [psi.psi2, psi.psi3]])
        adj = np.array([[psi.psi3, -psi.psi2], [-psi.psi2, psi.psi1]])
        dP = np.array([[[psi.psi1_x, psi.psi2_x], [psi.psi2_x, psi.psi3_x]],
                       [[psi.psi1_y, psi.psi2_y], [psi.psi2_y, psi.psi3_y]]])
        dD = np.array([psi.delta_x, psi.delta_y]) * inv
        # M[k, m, j] = g^{mn} d_k g_nj
        M = np.einsum("mn...,knj...->kmj...", adj, dP) * inv
        eye = np.eye(2).reshape((2, 2) + (1,) * np.ndim(delta))
        M = M - 2.0 * dD[:, None, None] * eye
        # R[m, i, j] = g^{mn} d_n g_ij
        R = (np.einsum("mn...,nij...->mij...", adj, dP)
             - 2.0 * np.einsum("mn...,n...->m...", adj, dD)[:, None, None] * P) * inv
        G = 0.5 * (np.einsum("imj...->mij...", M) + np.einsum("jmi...->mij...", M) - R)
    return Christoffels(G[0, 0, 0], G[0, 0, 1], G[0, 1, 1], G[1, 0, 0], G[1, 0, 1], G[1, 1, 1])


def metric_at(params: MetricParams, x, y, delta_min: float = DELTA_MIN,
              strict: bool = True) -> MetricPoint:
    """Metric, Christoffel symbols and closed-form curvature at (x, y).

    With ``strict`` a point where |Delta| <= delta_min raises
    :class:`DegenerateDelta`; otherwise such points come back as NaN with
    ``mask`` False.
    """
    x, y = np.broadcast_arrays(real_array(x), real_array(y))
    psi = psi_triple(params, x, y)
    delta = psi.delta
    mask = np.abs(delta) > delta_min
    if strict and not np.all(mask):
        raise DegenerateDelta(f"|Delta| <= {delta_min} at some requested point")
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(mask, 1.0 / np.where(mask, delta, 1.0) ** 2, np.nan)
        d_x, d_y = psi.delta_x, psi.delta_y
        inv3 = np.where(mask, 1.0 / np.where(mask, delta, 1.0) ** 3, np.nan)
        fields = (psi.psi1, psi.psi2, psi.psi3)
        g11, g12, g22 = (lam * f for f in fields)
        dgx = [lam * fx - 2.0 * f * d_x * inv3 for f, fx in zip(fields, (psi.psi1_x, psi.psi2_x, psi.psi3_x))]
        dgy = [lam * fy - 2.0 * f * d_y * inv3 for f, fy in zip(fields, (psi.psi1_y, psi.psi2_y, psi.psi3_y))]
    g = np.array([[g11, g12], [g12, g22]])
    dg = np.array([[[dgx[0], dgx[1]], [dgx[1], dgx[2]]],
                   [[dgy[0], dgy[1]], [dgy[1], dgy[2]]]])
    # det g = 1 / Delta^3 and g^{-1} = Delta adj(psi), both without cancellation
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        det = np.where(mask, lam / np.where(mask, delta, 1.0), np.nan)
    ok = mask & (np.abs(np.nan_to_num(det)) > DET_MIN)
    if strict and not np.all(ok):
        raise DegenerateDelta("metric determinant below guard")
    ch = _christoffels_psi(psi, delta, ok)
    K = np.where(mask, curvature_closed_form(params, x, y), np.nan)
    return MetricPoint(g11[()], g12[()], g22[()], delta[()], lam[()],
                       Christoffels(*(c[()] for c in ch)), K[()], dg, mask[()])


def projective_coeffs(point: MetricPoint):
    """(A0, A1, A2, A3) of y'' = A3 y'^3 + A2 y'^2 + A1 y' + A0."""
    c = point.christoffels
    A3 = c.g1_22
    A2 = 2.0 * c.g1_12 - c.g2_22
    A1 = c.g1_11 - 2.0 * c.g2_12
    A0 = -c.g2_11
    return A0, A1, A2, A3


def metrisability_residuals(params: MetricParams, x, y, psi: PsiTriple | None = None):
    """Left-minus-right residuals of the four linear equations on (psi1, psi2, psi3).

    The coefficients are A0 = (u+z) y, A1 = A2 = A3 = 0.  ``psi`` defaults to
    the triple built from ``params``; pass a modified one to probe sensitivity.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if psi is None:
        psi = psi_triple(params, x, y)
    uu = params.potential(x)[0]
    A0 = (uu + params.z_affine) * y
    A1 = A2 = A3 = 0.0
    p1, p2, p3 = psi.psi1, psi.psi2, psi.psi3
    r1 = psi.psi1_x - (2.0 / 3.0 * A1 * p1 - 2.0 * A0 * p2)
    r2 = psi.psi3_y - (2.0 * A3 * p2 - 2.0 / 3.0 * A2 * p3)
    r3 = psi.psi1_y + 2.0 * psi.psi2_x - (4.0 / 3.0 * A2 * p1 - 2.0 / 3.0 * A1 * p2 - 2.0 * A0 * p3)
    r4 = psi.psi3_x + 2.0 * psi.psi2_y - (2.0 * A3 * p1 - 4.0 / 3.0 * A1 * p3 + 2.0 / 3.0 * A2 * p2)
    return r1, r2, r3, r4


_D1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0
_OFF = np.arange(-3, 4)


def local_length(params: MetricParams, x, y):
    """|Delta| / |grad Delta|: distance scale to the singular curve Delta = 0."""
    psi = psi_triple(params, x, y)
    with np.errstate(divide="ignore"):
        return np.abs(psi.delta) / np.hypot(psi.delta_x, psi.delta_y)


def conditioning(params: MetricParams, x, y):
    """(|psi1 psi3| + psi2^2) / |Delta|, the cancellation factor in Delta.

    Finite-difference curvature loses roughly this factor squared in accuracy.
    """
    psi = psi_triple(params, x, y)
    with np.errstate(divide="ignore"):
        return (np.abs(psi.psi1 * psi.psi3) + psi.psi2 ** 2) / np.abs(psi.delta)


def gauss_curvature_numeric(params: MetricParams, x, y, h: float = 2e-3,
                            delta_min: float = DELTA_MIN, adaptive: bool = True):
    """Brioschi curvature from central differences of g11, g12, g22 only.

    Uses 6th-order stencils on a 7x7 grid (two Richardson levels above plain
    central differences).  With ``adaptive`` the step at each point is capped
    at STEP_FRACTION of |Delta|/|grad Delta| so the stencil never straddles the singular
    curve of the metric.
    """
    x, y = np.broadcast_arrays(real_array(x), real_array(y))
    hh = np.full(x.shape, float(h))
    if adaptive:
        hh = np.minimum(hh, STEP_FRACTION * local_length(params, x, y))
    X = x[..., None, None] + (hh[..., None, None] * _OFF[:, None])
    Y = y[..., None, None] + (hh[..., None, None] * _OFF[None, :])
    psi = psi_triple(params, X, Y)
    if np.any(np.abs(psi.delta) <= delta_min):
        raise DegenerateDelta("|Delta| below threshold inside the difference stencil")
    E, F, G = metric_from_psi(psi)
    c = (Ellipsis, 3, 3)
    h1 = hh
    h2 = hh * hh

    def dx(f):
        return np.einsum("...ij,i->...j", f, _D1)[..., 3] / h1

    def dy(f):
        return np.einsum("...ij,j->...i", f, _D1)[..., 3] / h1

    def dxx(f):
        return np.einsum("...ij,i->...j", f, _D2)[..., 3] / h2

    def dyy(f):
        return np.einsum("...ij,j->...i", f, _D2)[..., 3] / h2

    def dxy(f):
        return np.einsum("...ij,i,j->...", f, _D1, _D1) / h2

    e, f, g = E[c], F[c], G[c]
    Ex, Ey, Fx, Fy, Gx, Gy = dx(E), dy(E), dx(F), dy(F), dx(G), dy(G)
    Eyy, Fxy, Gxx = dyy(E), dxy(F), dxx(G)
    a11 = -0.5 * Eyy + Fxy - 0.5 * Gxx
    det1 = (a11 * (e * g - f * f) - 0.5 * Ex * ((Fy - 0.5 * Gx) * g - f * 0.5 * Gy)
            + (Fx - 0.5 * Ey) * ((Fy - 0.5 * Gx) * f - e * 0.5 * Gy))
    det2 = (-0.5 * Ey * (0.5 * Ey * g - f * 0.5 * Gx)
            + 0.5 * Gx * (0.5 * Ey * f - e * 0.5 * Gx))
    K = (det1 - det2) / (e * g - f * f) ** 2
    return K[()]
