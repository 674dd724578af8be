"""Self-contained verification suites with a machine-readable report.

Each check returns the largest residual it saw and compares it with a
tolerance.  A suite passes when every check does.  Every check draws its random
samples from its own generator, derived from the suite seed and the check
name, so a check's outcome does not depend on which checks ran before it.
"""

from __future__ import annotations

import platform
import time
import zlib
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
import scipy
import sympy

from . import elliptic as ell
from . import geodesic as geo
from . import lame
from .errors import ConfigError, GeogapError
from .metrize import (FD_DELTA_MARGIN, MetricParams, conditioning, gauss_curvature_numeric,
                      metric_at, metrisability_residuals, projective_coeffs)
from .scenario import Scenario, resolve_seed
from .schrodinger import BAFunction, make_l

SUITES = ("rational", "lame-g1")


@dataclass
class CheckResult:
    name: str
    anchor: str
    residual: float
    tolerance: float
    passed: bool
    seconds: float
    detail: dict = field(default_factory=dict)


@dataclass
class VerifyReport:
    suite: str
    seed: int
    checks: list
    environment: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "seed": self.seed, "passed": self.passed,
                "checks": [asdict(c) for c in self.checks],
                "environment": self.environment}


def environment() -> dict:
    return {"python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "sympy": sympy.__version__,
            "platform": platform.platform()}


class _Runner:
    def __init__(self, seed: int, tol_override: float | None):
        self.seed = seed
        self.tol_override = tol_override
        self.results: list[CheckResult] = []
        self.rng = np.random.default_rng(seed)

    def run(self, name: str, anchor: str, tol: float, fn: Callable[[], tuple]):
        tol = self.tol_override if self.tol_override is not None else tol
        self.rng = np.random.default_rng([self.seed, zlib.crc32(name.encode())])
        t0 = time.perf_counter()
        try:
            out = fn()
            residual, detail = (out if isinstance(out, tuple) else (out, {}))
            residual = float(residual)
            passed = bool(np.isfinite(residual) and residual < tol)
        except GeogapError as exc:
            residual, detail, passed = float("nan"), {"error": f"{type(exc).__name__}: {exc}"}, False
        self.results.append(CheckResult(name, anchor, residual, tol, passed,
                                        time.perf_counter() - t0, detail))


# sampling helpers

def admissible_points(params: MetricParams, box, n: int, rng, delta_min: float = 1e-8,
                      margin: float | None = None):
    """n uniform points of the box with |Delta| above ``margin`` (default delta_min)."""
    (x0, x1), (y0, y1) = box
    need = margin if margin is not None else delta_min
    xs, ys = [], []
    for _ in range(50):
        x = rng.uniform(x0, x1, 4 * n)
        y = rng.uniform(y0, y1, 4 * n)
        m = metric_at(params, x, y, strict=False)
        ok = m.mask & (np.abs(np.nan_to_num(m.delta)) > need)
        xs.extend(x[ok])
        ys.extend(y[ok])
        if len(xs) >= n:
            break
    if len(xs) < n:
        raise ConfigError("could not find enough admissible sample points")
    return np.array(xs[:n]), np.array(ys[:n])


def random_params(basis, rng, flat: bool = False) -> MetricParams:
    v = rng.uniform(-1.0, 1.0, 6)
    if flat:
        v[:3] = 0.0
    return MetricParams(basis, *v)


# shared check bodies

def closure_residual(params_list, x, y):
    """max over parameter tuples of |A1|, |A2|, |A3|, relative A0 error, and the spread across tuples.

    Points go in as long double: the closed-form rational basis keeps that
    precision, which matters where psi1 psi3 and psi2^2 nearly cancel.
    """
    x = np.asarray(x, dtype=np.longdouble)
    y = np.asarray(y, dtype=np.longdouble)
    worst, coeffs = 0.0, []
    for p in params_list:
        m = metric_at(p, x, y)
        A0, A1, A2, A3 = projective_coeffs(m)
        target = (p.potential(x)[0] + p.z_affine) * y
        worst = max(worst, np.max(np.abs(A1)), np.max(np.abs(A2)), np.max(np.abs(A3)),
                    np.max(np.abs(A0 - target) / (1.0 + np.abs(A0))))
        coeffs.append(np.array([A0, A1, A2, A3]))
    spread = max(float(np.max(np.abs(c - coeffs[0]) / (1.0 + np.abs(coeffs[0])))) for c in coeffs)
    return float(max(worst, spread))


def lemma_residual(params, X, Y):
    return max(float(np.max(np.abs(r))) for r in metrisability_residuals(params, X, Y))


def fd_curvature_error(params, X, Y, relative: bool = False, max_conditioning: float | None = None):
    """max |K_closed - K_numeric| over points whose stencil stays clear of Delta = 0."""
    m = metric_at(params, X, Y, strict=False)
    ok = m.mask & (np.abs(np.nan_to_num(m.delta)) >= FD_DELTA_MARGIN)
    if max_conditioning is not None:
        ok &= conditioning(params, X, Y) < max_conditioning
    if not np.any(ok):
        raise ConfigError("no point of the grid is far enough from Delta = 0")
    Kc = m.K[ok]
    Kn = gauss_curvature_numeric(params, X[ok], Y[ok])
    err = np.abs(Kn - Kc)
    if relative:
        err = err / (1.0 + np.abs(Kc))
    return float(np.max(err)), int(ok.sum())


def geodesic_bundle(sc: Scenario):
    """The same geodesic integrated three ways from the scenario's initial data."""
    P = sc.params()
    gd = sc.data["geodesic"]
    tol = sc.tol
    A = geo.integrate_affine(P, gd["x0"], gd["y0"], gd["dx0"], gd["dy0"], gd["t_end"],
                             rtol=tol["rtol"], atol=tol["atol"])
    S = geo.HamiltonianState.from_velocity(P, gd["x0"], gd["y0"], A.dx[0], A.dy[0])
    H = geo.hamiltonian_flow(P, S, gd["t_end"], rtol=tol["rtol"], atol=tol["atol"])
    G = geo.integrate_graph(P.potential, P.z_affine, gd["x0"], gd["y0"], A.dy[0] / A.dx[0],
                            float(np.max(A.x)) if A.dx[0] > 0 else float(np.min(A.x)),
                            rtol=tol["rtol"], atol=tol["atol"], params=P)
    return P, A, H, G


def figure_traces(sc: Scenario, betas=((1.0, -1.0), (1.0, 0.0), (1.0, 2.0)),
                  x0: float = 0.5, x_end: float = 3.0):
    """Graph geodesics y = b1 s1 + b2 s2 started at x0."""
    b = sc.basis
    out = []
    for b1, b2 in betas:
        s1, d1, s2, d2 = b(x0)
        tr = geo.integrate_graph(b.potential, b.z_affine, x0, b1 * s1 + b2 * s2,
                                 b1 * d1 + b2 * d2, x_end, rtol=sc.tol["rtol"],
                                 atol=sc.tol["atol"])
        out.append(((b1, b2), tr))
    return out


# suites

def _rational_suite(sc: Scenario, R: _Runner):
    b = sc.basis
    box = (tuple(sc.data["grid"]["x"]), tuple(sc.data["grid"]["y"]))
    X, Y = sc.grid()
    X10, Y10 = sc.grid(10, 10)

    def degeneration():
        worst = 0.0
        for eps in (1e-2, 1e-4):
            v = ell.weierstrass_series(1.0, eps, eps)
            d = max(abs(v.wp - 1.0), abs(v.zeta - 1.0), abs(v.sigma - 1.0))
            worst = max(worst, d / eps)
        return worst, {"note": "max |f - f_hat| / eps at x = 1"}
    R.run("elliptic.degeneration", "rational limit wp -> 1/x^2, zeta -> 1/x, sigma -> x", 0.1,
          degeneration)

    R.run("basis.wronskian", "closed-form basis, W = -2", 1e-12,
          lambda: abs(b.wronskian(1.7) + 2.0) / 2.0)
    xs = np.linspace(0.5, 3.0, 7)
    R.run("basis.wronskian_spread", "Wronskian constancy", 1e-9,
          lambda: b.wronskian_spread(xs))
    R.run("basis.equation", "s'' = (u + z) s", 1e-8,
          lambda: max(float(np.max(r)) for r in b.eq_residual(xs)))

    def l_space():
        w = 0.0
        for _ in range(20):
            lf = make_l(b, *R.rng.uniform(-1, 1, 3))
            w = max(w, float(np.max(lf.eq_residual(xs))))
        return w
    R.run("l.equation", "l''' = 4(u+z) l' + 2 u' l over random l", 1e-8, l_space)

    R.run("metrize.lemma", "linear metrisability system", 1e-10,
          lambda: max(lemma_residual(random_params(b, R.rng), X10, Y10) for _ in range(3)))

    def closure():
        params = [random_params(b, R.rng) for _ in range(3)]
        pts = [admissible_points(p, box, 300, R.rng) for p in params]
        mask = np.ones(300, bool)
        x, y = pts[0]
        for p in params[1:]:
            m = metric_at(p, x, y, strict=False)
            mask &= m.mask
        return closure_residual(params, x[mask][:100], y[mask][:100])
    R.run("metrize.closure", "A1 = A2 = A3 = 0, A0 = (u+z) y, same for every parameter tuple",
          1e-10, closure)

    def k_closed():
        w = 0.0
        for r0 in (-1.0, 0.5, 1.0):
            m = metric_at(sc.params(r0=r0), X, Y, strict=False)
            w = max(w, float(np.nanmax(np.abs(m.K + r0))))
        return w
    R.run("curvature.closed_form", "constant curvature -r0", 1e-10, k_closed)

    def k_numeric():
        w, n = 0.0, 0
        for r0 in (-1.0, 0.5, 1.0):
            e, k = fd_curvature_error(sc.params(r0=r0), X, Y)
            w, n = max(w, e), n + k
        return w, {"points": n, "delta_margin": FD_DELTA_MARGIN}
    R.run("curvature.numeric", "Brioschi finite differences vs -r0", 1e-6, k_numeric)

    def flat():
        w = 0.0
        for _ in range(3):
            p = random_params(b, R.rng, flat=True)
            x, y = admissible_points(p, box, 20, R.rng, margin=FD_DELTA_MARGIN)
            w = max(w, float(np.max(np.abs(metric_at(p, x, y).K))),
                    float(np.max(np.abs(gauss_curvature_numeric(p, x, y)))))
        return w
    R.run("curvature.flat", "K = 0 when r0 = a1 = a2 = 0", 1e-6, flat)

    _geodesic_checks(sc, R)

    def phi_match():
        x0 = 0.5
        s1, d1, _, _ = b(x0)
        tr = geo.integrate_graph(b.potential, b.z_affine, x0, s1, d1, 3.0)
        xx = np.linspace(0.5, 3.0, 101)
        phi = np.exp(-xx) * (1 + xx) / xx
        return float(np.max(np.abs(tr.ode.sol(xx)[0] - phi)))
    R.run("geodesic.phi", "graph geodesic y = exp(-x)(1+x)/x", 1e-8, phi_match)

    def figures():
        # node residual of the graph ODE, plus the distance to b1 s1 + b2 s2
        node, closed = 0.0, 0.0
        for (b1, b2), tr in figure_traces(sc):
            s1, _, s2, _ = b(tr.x)
            node = max(node, geo.graph_residual(tr, b.potential, b.z_affine))
            closed = max(closed, float(np.max(np.abs(tr.y - (b1 * s1 + b2 * s2)))))
        return max(node, closed), {"node_residual": node, "closed_form_error": closed}
    R.run("geodesic.figures", "graph traces for beta = (1,-1), (1,0), (1,2)", 1e-8, figures)


def _geodesic_checks(sc: Scenario, R: _Runner):
    P, A, H, G = geodesic_bundle(sc)
    pot, z = P.potential, P.z_affine
    R.run("geodesic.affine_vs_graph", "affine geodesic re-read as a graph", 1e-6,
          lambda: geo.compare_to_graph(A, G))
    R.run("geodesic.hamiltonian_vs_affine", "Legendre transform consistency", 1e-6,
          lambda: geo.compare_traces(H, A))
    R.run("geodesic.energy", "H is a first integral", 1e-8, lambda: geo.energy_drift(H))
    R.run("geodesic.graph_residual", "affine trace satisfies y'' = (u+z) y", 1e-6,
          lambda: geo.graph_residual(A, pot, z, refine=3))
    R.run("geodesic.speed", "metric speed conserved", 1e-8,
          lambda: float(np.max(np.abs(A.speed() - A.speed()[0])) / abs(A.speed()[0])))

    def reversal():
        B = geo.reverse(A)
        return float(np.hypot(B.x[-1] - A.x[0], B.y[-1] - A.y[0]))
    R.run("geodesic.time_reversal", "backward integration returns to the start", 1e-7, reversal)

    def vertical():
        gd = sc.data["geodesic"]
        V = geo.integrate_affine(P, gd["x0"], gd["y0"], 0.0, 1.0, min(gd["t_end"], 1.0))
        return float(np.max(np.abs(V.x - gd["x0"])))
    R.run("geodesic.vertical", "x = const lines are geodesics", 1e-10, vertical)


def _lame_suite(sc: Scenario, R: _Runner):
    L = sc.lattice
    b = sc.basis
    gamma = float(sc.data["potential"]["gamma"])
    zu = float(sc.data["spectral"]["z_unif"])
    w1 = L.omega1
    X, Y = sc.grid()
    X10, Y10 = sc.grid(10, 10)
    box = (tuple(sc.data["grid"]["x"]), tuple(sc.data["grid"]["y"]))

    def wp_eq():
        z = np.array([0.3 * w1, 0.7 * w1 + 0.4 * L.omega2, 0.5 * w1 + 0.9 * L.omega2,
                      1.3 * w1, 0.2 + 0.1j])
        v = ell.weierstrass(z, L)
        return float(np.max(np.abs(v.wp_prime ** 2 - (4 * v.wp ** 3 - L.g2 * v.wp - L.g3))))
    R.run("elliptic.wp_equation", "wp'^2 = 4 wp^3 - g2 wp - g3", 1e-10, wp_eq)
    R.run("elliptic.legendre", "eta1 omega2 - eta2 omega1 = i pi / 2", 1e-12,
          L.legendre_residual)

    def chains():
        x = np.linspace(0.15, 1.85, 9) * w1
        h = 1e-4
        f = lambda t: ell.weierstrass(t, L)  # noqa: E731
        d = [f(x + k * h) for k in (-2, -1, 1, 2)]
        v = f(x)
        dz = (d[0].zeta - 8 * d[1].zeta + 8 * d[2].zeta - d[3].zeta) / (12 * h)
        ds = (d[0].sigma - 8 * d[1].sigma + 8 * d[2].sigma - d[3].sigma) / (12 * h)
        return max(float(np.max(np.abs(dz + v.wp))), float(np.max(np.abs(ds / v.sigma - v.zeta))))
    R.run("elliptic.derivative_chains", "zeta' = -wp, sigma'/sigma = zeta", 1e-9, chains)

    def periodic():
        x = np.linspace(0.1, 0.9, 5) * w1
        return float(np.max(np.abs(ell.wp(x + 2 * w1, L) - ell.wp(x, L))))
    R.run("elliptic.periodicity", "wp(x + 2 omega1) = wp(x)", 1e-10, periodic)

    xs = np.linspace(0.2, 1.4, 9) * w1

    def ba_eq():
        ba = BAFunction(zu, gamma, L)
        psi, _, d2, _ = ba.derivatives(xs)
        P = ell.wp(xs + gamma, L)
        return float(np.max(np.abs(d2 - (2 * P + ell.wp(zu, L)) * psi)))
    R.run("ba.lame_equation", "psi'' = (2 wp(x+gamma) + wp(z)) psi", 1e-8, ba_eq)

    xb = np.linspace(0.3, 1.2, 7)
    R.run("basis.wronskian_spread", "Wronskian constancy", 1e-9, lambda: b.wronskian_spread(xb))
    R.run("basis.equation", "s'' = (u + z) s", 1e-8,
          lambda: max(float(np.max(r)) for r in b.eq_residual(xb)))

    def l_space():
        w = 0.0
        for _ in range(20):
            lf = make_l(b, *R.rng.uniform(-1, 1, 3))
            w = max(w, float(np.max(lf.eq_residual(xb))))
        return w
    R.run("l.equation", "l''' = 4(u+z) l' + 2 u' l over random l", 1e-8, l_space)

    def l_example():
        # wp(z) - wp(x + gamma) equals (wp(z) - wp(gamma)) s1 s2
        lf = make_l(b, 0.0, float(ell.wp(zu, L) - ell.wp(gamma, L)), 0.0)
        direct = ell.wp(zu, L) - ell.wp(xb + gamma, L)
        return max(float(np.max(np.abs(lf(xb)[0] - direct))), float(np.max(lf.eq_residual(xb))))
    R.run("l.lame_example", "l = wp(z) - wp(x + gamma) solves the l-equation", 1e-8, l_example)

    R.run("metrize.lemma", "linear metrisability system", 1e-10,
          lambda: max(lemma_residual(random_params(b, R.rng), X10, Y10) for _ in range(3)))

    def closure():
        params = [random_params(b, R.rng) for _ in range(3)]
        x, y = admissible_points(params[0], box, 300, R.rng)
        mask = np.ones(len(x), bool)
        for p in params[1:]:
            mask &= metric_at(p, x, y, strict=False).mask
        return closure_residual(params, x[mask][:100], y[mask][:100])
    R.run("metrize.closure", "A1 = A2 = A3 = 0, A0 = (u+z) y, same for every parameter tuple",
          1e-10, closure)

    def k_cross():
        w, n = 0.0, 0
        for p in [sc.params()] + [random_params(b, R.rng) for _ in range(2)]:
            e, k = fd_curvature_error(p, X, Y, relative=True, max_conditioning=10.0)
            w, n = max(w, e), n + k
        return w, {"points": n, "measure": "|dK| / (1 + |K|)", "max_conditioning": 10.0}
    R.run("curvature.cross_check", "closed-form curvature vs finite differences", 1e-5, k_cross)

    _geodesic_checks(sc, R)

    # spectral layer
    def b_exact():
        z, g2 = lame.Z_SYM, lame.G2_SYM
        B1 = lame.recurrence_table(1)
        B2 = lame.recurrence_table(2)
        ok = (sympy.expand(B1[0] - z) == 0 and sympy.expand(B2[1] - z / 3) == 0
              and sympy.expand(B2[0] - (z ** 2 / 9 - g2 / 4)) == 0)
        return 0.0 if ok else 1.0
    R.run("lame.recurrence_exact", "B0 = z (g=1); B1 = z/3, B0 = z^2/9 - g2/4 (g=2)", 0.5, b_exact)

    def q_ode():
        w = 0.0
        for g, tol_scale in ((1, 1.0), (2, 10.0)):
            Q = lame.q_coefficients(g, L.g2, L.g3, lattice=L)
            xs_ = R.rng.uniform(0.0, 2 * w1, 10)
            zs_ = R.rng.uniform(-2.0, 2.0, 10)
            r = max(float(lame.q_ode_residual(Q, x, z)) for x, z in zip(xs_, zs_))
            w = max(w, r / tol_scale)
        return w, {"note": "g=2 residual divided by 10 (its tolerance is 1e-7)"}
    R.run("lame.q_equation", "Q''' - 4(Z+u) Q' - 2 u' Q = 0", 1e-8, q_ode)

    def x_indep():
        return max(lame.spectral_curve(lame.q_coefficients(g, L.g2, L.g3, lattice=L),
                                       rel_tol=np.inf).spread for g in (1, 2, 3))
    R.run("lame.curve_x_independence", "4(Z+u)Q^2 + Q'^2 - 2QQ'' is x-independent", 1e-8, x_indep)

    def curve_g1():
        c = lame.spectral_curve(lame.q_coefficients(1, L.g2, L.g3, lattice=L))
        return float(np.max(np.abs(c.coeffs - lame.closed_form_g1(L.g2, L.g3))))
    R.run("lame.curve_closed_form", "g=1 curve (4z^3 - g2 z + g3)/4", 1e-9, curve_g1)

    Qg = lame.q_coefficients(1, L.g2, L.g3, shift=gamma, lattice=L)
    Zs = float(ell.wp(zu, L))
    wv = -0.5 * float(ell.wp_prime(zu, L))
    xq = np.linspace(0.2, 1.4, 9) * w1
    R.run("lame.factorization", "L - Z = (d + chi0)(d - chi0)", 1e-7,
          lambda: float(np.max(lame.factorization_residual(xq, Zs, wv, Qg))))
    R.run("lame.l3_eigenvalue", "(L3 psi) / psi constant in x", 1e-6,
          lambda: lame.relative_spread(lame.l3_ratio(BAFunction(zu, gamma, L), xq)))

    def branch():
        # sample away from the double zero of Q(x, e1) at x + gamma = omega1
        xr = np.linspace(0.05, 0.45, 7) * w1
        psi = BAFunction(w1, gamma, L)(xr)[0]
        return lame.relative_spread(Qg(xr, L.e1)[0] / psi ** 2)
    R.run("lame.branch_point", "Q(x, z_j) / psi^2 constant in x", 1e-7, branch)

    def roots():
        Q2 = lame.q_coefficients(2, L.g2, L.g3, lattice=L)
        w = 0.0
        for x in (0.3, 0.7, 1.1):
            zp = Q2.z_polynomial(Q2.wp_values(x)[0])
            w = max(w, float(np.max(np.abs(np.real(np.poly(Q2.roots(x))) - zp / zp[0]))))
        return w
    R.run("lame.roots", "monic product of the zeros of Q reproduces Q", 1e-8, roots)


def run_suite(suite: str | Scenario, seed: int | None = None,
              tol_override: float | None = None) -> VerifyReport:
    sc = Scenario.builtin(suite) if isinstance(suite, str) else suite
    seed = resolve_seed(seed)
    R = _Runner(seed, tol_override)
    if sc.kind == "rational":
        _rational_suite(sc, R)
    elif sc.kind == "lame-g1":
        _lame_suite(sc, R)
    else:
        raise ConfigError(f"no verification suite for potential kind {sc.kind!r}")
    env = environment()
    env["scenario"] = sc.manifest()["scenario"]
    return VerifyReport(sc.name, seed, R.results, env)
