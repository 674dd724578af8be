"""Geodesics of the constructed metrics, integrated three ways.

* ``affine``: the second-order system  u''^k + Gamma^k_ij u'^i u'^j = 0;
* ``hamiltonian``: Hamilton's equations for H = g^{ij} p_i p_j / 2;
* ``graph``: y(x) solving y'' = (u + z) y directly.

All three share the adaptive Runge-Kutta core in :mod:`geogap.ode`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateDelta, NearPole, VerticalSegment
from .metrize import DELTA_MIN, MetricParams, metric_at, psi_triple
from .ode import DEFAULT_ATOL, DEFAULT_RTOL, OdeResult, dense_derivative, integrate
from .schrodinger import Potential, solve_schrodinger, write_csv

CHART_MARGIN = 1e-6
_NAN4 = np.full(4, np.nan)


@dataclass(frozen=True)
class HamiltonianState:
    x: float
    y: float
    p1: float
    p2: float

    def energy(self, params: MetricParams) -> float:
        m = metric_at(params, self.x, self.y)
        gi = m.inverse
        p = np.array([self.p1, self.p2])
        return float(0.5 * p @ gi @ p)

    @classmethod
    def from_velocity(cls, params: MetricParams, x, y, dx, dy) -> "HamiltonianState":
        """Legendre transform p = g u'."""
        g = metric_at(params, x, y).matrix
        p = g @ np.array([dx, dy], dtype=float)
        return cls(float(x), float(y), float(p[0]), float(p[1]))


@dataclass
class GeodesicTrace:
    """Samples of a geodesic in chart coordinates.

    ``t`` is the affine parameter for affine and Hamiltonian traces and the
    abscissa x itself for graph traces (then dx = 1, ddx = 0).  ``ddx``,
    ``ddy`` are the accelerations delivered by the equations of motion at
    each sample.
    """

    parameterization: str
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    ddx: np.ndarray
    ddy: np.ndarray
    ode: OdeResult
    params: MetricParams | None = None
    H: np.ndarray | None = None
    p: np.ndarray | None = None
    termination: str = "completed"
    initial: dict = field(default_factory=dict)
    _dense: object = None

    def __len__(self):
        return len(self.t)

    @property
    def partial(self) -> bool:
        return self.termination != "completed"

    def state(self, t):
        """Dense (x, y, dx, dy, ddx, ddy) at parameter values t."""
        return self._dense(np.atleast_1d(np.asarray(t, dtype=float)))

    def speed(self) -> np.ndarray | None:
        """g_ij u'^i u'^j at the samples, if a metric is attached."""
        if self.params is None:
            return None
        m = metric_at(self.params, self.x, self.y, strict=False)
        return m.g11 * self.dx ** 2 + 2 * m.g12 * self.dx * self.dy + m.g22 * self.dy ** 2

    def metadata(self) -> dict:
        meta = {
            "parameterization": self.parameterization,
            "samples": len(self),
            "termination": self.termination,
            "initial": self.initial,
            "integrator": self.ode.metadata(),
        }
        if self.params is not None:
            meta["metric_parameters"] = self.params.values()
            meta["z_affine"] = float(self.params.z_affine)
            meta["potential"] = self.params.potential.describe()
        return meta

    def to_csv(self, path) -> None:
        speed = self.speed()
        blank = [""] * len(self)
        write_csv(path, ["t", "x", "y", "dx", "dy", "speed", "H"],
                  [self.t, self.x, self.y, self.dx, self.dy,
                   blank if speed is None else speed,
                   blank if self.H is None else self.H])

    def to_json(self, path, extra: dict | None = None) -> None:
        doc = self.metadata()
        if extra:
            doc.update(extra)
        Path(path).write_text(json.dumps(doc, indent=2, default=float))


# affine parameterization

def _metric_data(params: MetricParams, x, y):
    m = metric_at(params, x, y, strict=False)
    return m


def _acceleration(params: MetricParams, x, y, dx, dy):
    m = _metric_data(params, x, y)
    c = m.christoffels
    ddx = -(c.g1_11 * dx * dx + 2.0 * c.g1_12 * dx * dy + c.g1_22 * dy * dy)
    ddy = -(c.g2_11 * dx * dx + 2.0 * c.g2_12 * dx * dy + c.g2_22 * dy * dy)
    return ddx, ddy


def _chart_event(params: MetricParams, margin: float):
    def event(t, s):
        try:
            return abs(psi_triple(params, s[0], s[1]).delta) - margin
        except NearPole:
            return -margin
    event.terminal = True
    event.direction = -1
    return event


def _check_start(params: MetricParams, x0, y0, delta_min):
    m = metric_at(params, x0, y0, strict=False)
    if not m.mask or abs(m.delta) <= delta_min:
        raise DegenerateDelta(f"start point ({x0}, {y0}) is outside the chart")
    return m


def normalize_velocity(params: MetricParams, x0, y0, dx0, dy0):
    """Scale (dx0, dy0) so that g(u', u') = +-1; null vectors are left alone."""
    m = metric_at(params, x0, y0)
    q = m.g11 * dx0 ** 2 + 2 * m.g12 * dx0 * dy0 + m.g22 * dy0 ** 2
    if abs(q) < 1e-14:
        return dx0, dy0
    k = 1.0 / np.sqrt(abs(q))
    return dx0 * k, dy0 * k


def integrate_affine(params: MetricParams, x0: float, y0: float, dx0: float, dy0: float,
                     t_span, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                     normalize: bool = True, chart_margin: float = CHART_MARGIN,
                     delta_min: float = DELTA_MIN) -> GeodesicTrace:
    """Solve u''^k + Gamma^k_ij u'^i u'^j = 0 from (x0, y0) with velocity (dx0, dy0).

    The run stops early, flagged in ``termination``, when |Delta| falls to
    ``chart_margin``.
    """
    if dx0 == 0 and dy0 == 0:
        raise ValueError("initial velocity must be nonzero")
    _check_start(params, x0, y0, max(delta_min, chart_margin))
    if normalize:
        dx0, dy0 = normalize_velocity(params, x0, y0, dx0, dy0)
    t0, t1 = (0.0, float(t_span)) if np.isscalar(t_span) else map(float, t_span)

    def rhs(t, s):
        if not np.all(np.isfinite(s)):
            return _NAN4
        try:
            ddx, ddy = _acceleration(params, s[0], s[1], s[2], s[3])
        except NearPole:
            return _NAN4
        return [s[2], s[3], ddx, ddy]

    res = integrate(rhs, t0, [x0, y0, dx0, dy0], t1, rtol=rtol, atol=atol,
                    events=[_chart_event(params, chart_margin)])
    x, y, dx, dy = res.y
    ddx, ddy = _acceleration(params, x, y, dx, dy)

    def dense(t):
        s = res.sol(t)
        d = dense_derivative(res.sol, t)
        return s[0], s[1], s[2], s[3], d[2], d[3]

    return GeodesicTrace(
        "affine", res.t, x, y, dx, dy, np.asarray(ddx), np.asarray(ddy), res, params,
        termination="chart_boundary" if res.terminated_by_event else "completed",
        initial={"x0": x0, "y0": y0, "dx0": float(dx0), "dy0": float(dy0),
                 "t_span": [t0, t1], "normalized": normalize},
        _dense=dense)


# Hamiltonian form

def _hamilton(params: MetricParams, x, y, p1, p2):
    """Velocity, momentum rate and energy from H = g^{ij} p_i p_j / 2."""
    m = _metric_data(params, x, y)
    gi = m.inverse
    p = np.array([p1, p2])
    v = np.einsum("ij...,j...->i...", gi, p)
    # dp_k/dt = -1/2 d_k g^{ij} p_i p_j = 1/2 v^i d_k g_ij v^j
    pdot = 0.5 * np.einsum("i...,kij...,j...->k...", v, m.dg, v)
    H = 0.5 * np.einsum("i...,i...->...", p, v)
    return m, v, pdot, H


def hamiltonian_flow(params: MetricParams, state0: HamiltonianState, t_span,
                     rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                     chart_margin: float = CHART_MARGIN) -> GeodesicTrace:
    """Integrate x' = g^{-1} p, p' = -dH/dx and report H along the flow."""
    m0 = _check_start(params, state0.x, state0.y, chart_margin)
    if abs(m0.det) <= 1e-14:
        raise DegenerateDelta("metric determinant below guard at start")
    t0, t1 = (0.0, float(t_span)) if np.isscalar(t_span) else map(float, t_span)

    def rhs(t, s):
        # trial stages that leave the chart come back as NaN and the step is rejected
        if not np.all(np.isfinite(s)):
            return _NAN4
        try:
            _, v, pdot, _ = _hamilton(params, s[0], s[1], s[2], s[3])
        except NearPole:
            return _NAN4
        return [v[0], v[1], pdot[0], pdot[1]]

    res = integrate(rhs, t0, [state0.x, state0.y, state0.p1, state0.p2], t1,
                    rtol=rtol, atol=atol, events=[_chart_event(params, chart_margin)])

    def kinematics(x, y, p1, p2):
        m, v, pdot, H = _hamilton(params, x, y, p1, p2)
        # d/dt (g^{-1} p) = g^{-1} (p' - (d_k g x'^k) v)
        gdot = np.einsum("kij...,k...->ij...", m.dg, v)
        rhs_v = pdot - np.einsum("ij...,j...->i...", gdot, v)
        a = np.einsum("ij...,j...->i...", m.inverse, rhs_v)
        return v, a, H

    x, y, p1, p2 = res.y
    v, a, H = kinematics(x, y, p1, p2)

    def dense(t):
        s = res.sol(t)
        vv, aa, _ = kinematics(*s)
        return s[0], s[1], vv[0], vv[1], aa[0], aa[1]

    return GeodesicTrace(
        "hamiltonian", res.t, x, y, v[0], v[1], a[0], a[1], res, params,
        H=H, p=np.array([p1, p2]),
        termination="chart_boundary" if res.terminated_by_event else "completed",
        initial={"x0": state0.x, "y0": state0.y, "p1": state0.p1, "p2": state0.p2,
                 "t_span": [t0, t1]},
        _dense=dense)


def energy_drift(trace: GeodesicTrace) -> float:
    """max |H(t) - H(0)| / |H(0)|."""
    if trace.H is None:
        raise ValueError("trace carries no Hamiltonian")
    return float(np.max(np.abs(trace.H - trace.H[0])) / abs(trace.H[0]))


# graph form

def integrate_graph(potential: Potential, z_affine: float, x0: float, y0: float, dy0: float,
                    x_end: float, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                    params: MetricParams | None = None) -> GeodesicTrace:
    """y(x) with y'' = (u + z) y; the geodesic written as a graph over x.

    ``params`` is optional and only used to report the metric speed.
    """
    tr = solve_schrodinger(potential, z_affine, x0, y0, dy0, x_end, rtol=rtol, atol=atol)
    x = tr.x
    uu = potential(x)[0]
    ones = np.ones_like(x)
    res = tr.ode

    def dense(t):
        s = res.sol(t)
        d = dense_derivative(res.sol, t)
        return t, s[0], np.ones_like(t), s[1], np.zeros_like(t), d[1]

    return GeodesicTrace(
        "graph", x.copy(), x.copy(), tr.y, ones, tr.dy, np.zeros_like(x),
        (uu + z_affine) * tr.y, res, params,
        initial={"x0": x0, "y0": y0, "dy0": dy0, "x_end": x_end},
        _dense=dense)


def graph_residual(trace: GeodesicTrace, potential: Potential, z_affine: float,
                   refine: int = 0) -> float:
    """max |y''(x) - (u + z) y| along a trace re-read as a graph y(x).

    y'' = (y.. x. - y. x..) / x.^3 by the chain rule.  With ``refine > 0``
    the check also runs at that many interior points per step, where
    velocities and accelerations come from the dense interpolant.
    """
    t = trace.t
    if refine > 0:
        frac = np.arange(1, refine + 1) / (refine + 1)
        mids = (t[:-1, None] + np.diff(t)[:, None] * frac).ravel()
        x, y, dx, dy, ddx, ddy = trace.state(np.concatenate([t, mids]))
    else:
        x, y, dx, dy, ddx, ddy = trace.x, trace.y, trace.dx, trace.dy, trace.ddx, trace.ddy
    if np.any(np.abs(dx) < 1e-12) or np.any(np.sign(dx) != np.sign(dx[0])):
        raise VerticalSegment("dx vanishes along the trace; not a graph over x")
    ypp = (ddy * dx - dy * ddx) / dx ** 3
    return float(np.max(np.abs(ypp - (potential(x)[0] + z_affine) * y)))


def geodesic_residual(trace: GeodesicTrace, refine: int = 0) -> float:
    """max |u''^k + Gamma^k_ij u'^i u'^j| along a trace carrying a metric.

    With ``refine`` the accelerations come from the dense interpolant.
    """
    if trace.params is None:
        raise ValueError("trace carries no metric")
    t = trace.t
    if refine > 0:
        frac = np.arange(1, refine + 1) / (refine + 1)
        t = np.concatenate([t, (t[:-1, None] + np.diff(t)[:, None] * frac).ravel()])
        x, y, dx, dy, ddx, ddy = trace.state(t)
    else:
        x, y, dx, dy, ddx, ddy = trace.x, trace.y, trace.dx, trace.dy, trace.ddx, trace.ddy
    ax, ay = _acceleration(trace.params, x, y, dx, dy)
    return float(max(np.max(np.abs(ddx - ax)), np.max(np.abs(ddy - ay))))


def compare_to_graph(trace: GeodesicTrace, graph: GeodesicTrace) -> float:
    """max |y_trace - y_graph(x_trace)| over samples inside the graph's x-range."""
    lo, hi = sorted((graph.t[0], graph.t[-1]))
    sel = (trace.x >= lo) & (trace.x <= hi)
    if not np.any(sel):
        raise ValueError("traces do not overlap in x")
    yg = graph.ode.sol(trace.x[sel])[0]
    return float(np.max(np.abs(trace.y[sel] - yg)))


def compare_traces(a: GeodesicTrace, b: GeodesicTrace) -> float:
    """max position gap at the samples of ``a`` inside the parameter range of ``b``."""
    lo, hi = sorted((b.t[0], b.t[-1]))
    sel = (a.t >= lo) & (a.t <= hi)
    xb, yb = b.state(a.t[sel])[:2]
    return float(max(np.max(np.abs(a.x[sel] - xb)), np.max(np.abs(a.y[sel] - yb))))


def reverse(trace: GeodesicTrace, rtol: float = DEFAULT_RTOL,
            atol: float = DEFAULT_ATOL) -> GeodesicTrace:
    """Integrate an affine trace backwards from its endpoint over the same span."""
    if trace.parameterization != "affine":
        raise ValueError("time reversal is implemented for affine traces")
    duration = trace.t[-1] - trace.t[0]
    return integrate_affine(trace.params, trace.x[-1], trace.y[-1], -trace.dx[-1],
                            -trace.dy[-1], (0.0, duration), rtol=rtol, atol=atol,
                            normalize=False)
