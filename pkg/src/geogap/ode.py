"""Thin driver around scipy's Dormand-Prince 5(4) integrator.

Every trajectory in the package (Schrodinger solutions, graph geodesics,
affine and Hamiltonian geodesics) goes through :func:`integrate` so that
tolerances, dense output and step bookkeeping are uniform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import StepSizeUnderflow

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


@dataclass
class OdeResult:
    t: np.ndarray
    y: np.ndarray
    sol: Callable[[np.ndarray], np.ndarray]
    nfev: int
    steps: int
    rejected: int | None
    rtol: float
    atol: float
    method: str
    terminated_by_event: bool = False
    event_t: float | None = None
    meta: dict = field(default_factory=dict)

    def metadata(self) -> dict:
        return {
            "method": self.method,
            "rtol": self.rtol,
            "atol": self.atol,
            "steps": self.steps,
            "rejected_steps": self.rejected,
            "nfev": self.nfev,
            "terminated_by_event": self.terminated_by_event,
            "event_t": self.event_t,
        }


def _rejected_steps(method: str, nfev: int, steps: int) -> int | None:
    # RK45: one evaluation for f(t0), one for the initial step guess, six per attempt (FSAL).
    if method != "RK45":
        return None
    attempts = (nfev - 2) // 6
    return max(attempts - steps, 0)


def integrate(fun: Callable, t0: float, y0: Sequence[float], t_end: float,
              rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
              events: Sequence[Callable] | None = None, method: str = "RK45",
              max_step: float = np.inf) -> OdeResult:
    """Integrate y' = fun(t, y) from t0 to t_end with dense output.

    Terminal events stop the run early; the result is flagged rather than
    raised.  A failed step-size control raises :class:`StepSizeUnderflow`.
    """
    res = solve_ivp(fun, (t0, t_end), np.asarray(y0, dtype=float), method=method,
                    rtol=rtol, atol=atol, dense_output=True, events=events,
                    max_step=max_step)
    if res.status == -1:
        raise StepSizeUnderflow(res.message)
    steps = len(res.t) - 1
    event_t = None
    if res.status == 1:
        hits = [te for te in res.t_events if len(te)]
        event_t = float(hits[0][0]) if hits else float(res.t[-1])
    return OdeResult(
        t=res.t, y=res.y, sol=res.sol, nfev=res.nfev, steps=steps,
        rejected=_rejected_steps(method, res.nfev, steps), rtol=rtol, atol=atol,
        method=method, terminated_by_event=res.status == 1, event_t=event_t,
    )


def dense_derivative(sol, t) -> np.ndarray:
    """Exact t-derivative of scipy's Runge-Kutta dense interpolant.

    At step nodes this reproduces the right-hand side; between nodes it is
    an independent estimate, which is what residual checks need.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    seg = np.searchsorted(sol.ts_sorted, t, side=sol.side) - 1
    seg = np.clip(seg, 0, sol.n_segments - 1)
    if not sol.ascending:
        seg = sol.n_segments - 1 - seg
    out = np.empty((sol.interpolants[0].Q.shape[0], t.size))
    for j, (tj, k) in enumerate(zip(t, seg)):
        it = sol.interpolants[k]
        x = (tj - it.t_old) / it.h
        n = it.Q.shape[1]
        dp = np.arange(1, n + 1) * x ** np.arange(n)
        out[:, j] = it.Q @ dp
    return out
