"""Command-line entry point: ``geogap <subcommand> [options]``.

Exit codes: 0 success, 1 verification failure (or an all-masked grid),
2 usage or configuration error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import geodesic as geo
from . import lame
from .errors import ConfigError, GeogapError, NumericalError
from .metrize import (FD_DELTA_MARGIN, conditioning, gauss_curvature_numeric, metric_at)
from .scenario import BUILTINS, Scenario, resolve_seed
from .schrodinger import write_csv
from .verify import SUITES, figure_traces, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

GRID_COLUMNS = {
    "g11": "psi1 / Delta^2", "g12": "psi2 / Delta^2", "g22": "psi3 / Delta^2",
    "delta": "Delta = psi1 psi3 - psi2^2",
    "K_closed": "closed-form Gaussian curvature",
    "K_numeric": "Brioschi finite differences (blank-as-nan closer than |Delta| < 1e-2)",
    "mask": "1 where |Delta| > delta_min",
}
TRACE_COLUMNS = {
    "t": "affine parameter (graph mode: x)", "x": "chart x", "y": "chart y",
    "dx": "dx/dt", "dy": "dy/dt", "speed": "g(u', u')", "H": "g^{ij} p_i p_j / 2",
}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


class _Warn(Exception):
    """Completed with output, but the exit code must signal a problem."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# scenario assembly

def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--config", type=Path, help="scenario JSON file")
    g.add_argument("--scenario", choices=sorted(BUILTINS),
                   help="builtin scenario (or base for --config)")
    g.add_argument("--out", type=Path, default=None, help="output directory")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--gamma", type=float)
    g.add_argument("--g2", type=float)
    g.add_argument("--g3", type=float)
    g.add_argument("--z-unif", type=float)
    g.add_argument("--z-affine", type=float)
    for k in ("r0", "a1", "a2", "b1", "b2", "b3"):
        g.add_argument(f"--{k}", type=float)
    g.add_argument("--rtol", type=float)
    g.add_argument("--atol", type=float)
    g.add_argument("--delta-min", type=float)


def load_scenario(args) -> Scenario:
    if args.config is not None:
        sc = Scenario.load(args.config, base=args.scenario)
    else:
        sc = Scenario.builtin(args.scenario or "rational")
    over = {
        "potential": {"gamma": args.gamma, "g2": args.g2, "g3": args.g3},
        "spectral": {"z_unif": args.z_unif, "z_affine": args.z_affine},
        "metric": {k: getattr(args, k) for k in ("r0", "a1", "a2", "b1", "b2", "b3")},
        "tolerances": {"rtol": args.rtol, "atol": args.atol, "delta_min": args.delta_min},
        "seed": args.seed,
    }
    if args.out is not None:
        over["output"] = {"dir": str(args.out)}
    for section, keys in (("grid", ("nx", "ny")), ("geodesic", ("x0", "y0", "dx0", "dy0", "t_end", "x_end"))):
        vals = {k: getattr(args, k, None) for k in keys}
        if section == "grid":
            if getattr(args, "x_range", None):
                vals["x"] = list(args.x_range)
            if getattr(args, "y_range", None):
                vals["y"] = list(args.y_range)
        over[section] = vals
    return sc.with_overrides(over)


def _outdir(sc: Scenario) -> Path:
    d = Path(sc.data.get("output", {}).get("dir", "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _manifest(sc: Scenario, command: str, columns: dict, **extra) -> dict:
    doc = {"command": command, "version": _version(), "columns": columns,
           "seed": resolve_seed(sc.data.get("seed")), **sc.manifest()}
    doc.update(extra)
    return doc


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    return str(o)


# subcommands

def cmd_metric_grid(args) -> int:
    sc = load_scenario(args)
    X, Y = sc.grid()
    P = sc.params()
    dmin = sc.tol["delta_min"]
    m = metric_at(P, X, Y, delta_min=dmin, strict=False)
    Kn = np.full(X.shape, np.nan)
    fd = m.mask & (np.abs(np.nan_to_num(m.delta)) >= FD_DELTA_MARGIN)
    if np.any(fd):
        Kn[fd] = gauss_curvature_numeric(P, X[fd], Y[fd], delta_min=dmin)
    out = _outdir(sc)
    csv_path = out / (args.output or "metric_grid.csv")
    cols = [X, Y, m.g11, m.g12, m.g22, m.delta, m.K, Kn, m.mask]
    write_csv(csv_path, ["x", "y", *GRID_COLUMNS], [np.ravel(c) for c in cols])
    n_ok = int(np.sum(m.mask))
    _write_json(csv_path.with_suffix(".json"),
                _manifest(sc, "metric-grid", {"x": "chart x", "y": "chart y", **GRID_COLUMNS},
                          points=int(X.size), admissible=n_ok, fd_points=int(np.sum(fd))))
    print(f"wrote {csv_path} ({n_ok}/{X.size} admissible points)")
    if n_ok == 0:
        raise _Warn(EXIT_FAIL, "no grid point satisfies |Delta| > delta_min; all rows masked")
    return EXIT_OK


def _write_trace(tr: geo.GeodesicTrace, path: Path, sc: Scenario, samples: int | None,
                 extra: dict) -> geo.GeodesicTrace:
    if samples:
        tr = _resampled(tr, samples)
    tr.to_csv(path)
    doc = _manifest(sc, "geodesic", TRACE_COLUMNS, trace=tr.metadata(), **extra)
    _write_json(path.with_suffix(".json"), doc)
    return tr


def _resampled(tr: geo.GeodesicTrace, n: int) -> geo.GeodesicTrace:
    t = np.linspace(tr.t[0], tr.t[-1], n)
    x, y, dx, dy, ddx, ddy = tr.state(t)
    out = geo.GeodesicTrace(tr.parameterization, t, x, y, dx, dy, ddx, ddy, tr.ode,
                            tr.params, None, None, tr.termination, tr.initial, tr._dense)
    if tr.H is not None:
        # under the Legendre transform H is half the metric speed
        out.H = 0.5 * out.speed()
    return out


def cmd_geodesic(args) -> int:
    sc = load_scenario(args)
    P = sc.params()
    tol = sc.tol
    gd = sc.data["geodesic"]
    out = _outdir(sc)
    b = sc.basis
    if args.figures:
        if args.mode != "graph":
            raise ConfigError("--figures draws graph geodesics; use --mode graph")
        x0 = args.x0 if args.x0 is not None else 0.5
        x_end = args.x_end if args.x_end is not None else 3.0
        for (b1, b2), tr in figure_traces(sc, x0=x0, x_end=x_end):
            tr.params = P
            path = out / f"figure_beta_{b1:g}_{b2:g}.csv"
            _write_trace(tr, path, sc, args.samples, {"beta": [b1, b2]})
            print(f"wrote {path}")
        return EXIT_OK

    x0, y0 = gd["x0"], gd["y0"]
    beta = args.beta
    if args.mode == "graph":
        if beta is not None:
            s1, d1, s2, d2 = b(x0)
            y0, dy0 = beta[0] * s1 + beta[1] * s2, beta[0] * d1 + beta[1] * d2
        else:
            if gd["dx0"] == 0:
                raise ConfigError("graph mode needs dx0 != 0 (vertical geodesics are x = const)")
            dy0 = gd["dy0"] / gd["dx0"]
        tr = geo.integrate_graph(P.potential, P.z_affine, x0, y0, dy0, gd["x_end"],
                                 rtol=tol["rtol"], atol=tol["atol"], params=P)
    elif args.mode == "affine":
        tr = geo.integrate_affine(P, x0, y0, gd["dx0"], gd["dy0"], gd["t_end"],
                                  rtol=tol["rtol"], atol=tol["atol"], delta_min=tol["delta_min"])
    else:
        dx0, dy0 = geo.normalize_velocity(P, x0, y0, gd["dx0"], gd["dy0"])
        state = geo.HamiltonianState.from_velocity(P, x0, y0, dx0, dy0)
        tr = geo.hamiltonian_flow(P, state, gd["t_end"], rtol=tol["rtol"], atol=tol["atol"])
    path = out / (args.output or f"geodesic_{args.mode}.csv")
    written = _write_trace(tr, path, sc, args.samples, {"beta": beta})
    print(f"wrote {path} ({len(written)} samples, {tr.termination})")
    if tr.partial and not args.allow_partial:
        raise _Warn(EXIT_NUMERIC, f"integration stopped early ({tr.termination}); "
                                  "pass --allow-partial to accept the partial trace")
    return EXIT_OK


def cmd_curvature(args) -> int:
    sc = load_scenario(args)
    X, Y = sc.grid()
    P = sc.params()
    m = metric_at(P, X, Y, delta_min=sc.tol["delta_min"], strict=False)
    ok = m.mask & (np.abs(np.nan_to_num(m.delta)) >= FD_DELTA_MARGIN)
    Kn = np.full(X.shape, np.nan)
    if np.any(ok):
        Kn[ok] = gauss_curvature_numeric(P, X[ok], Y[ok])
    kappa = conditioning(P, X, Y)
    out = _outdir(sc)
    path = out / (args.output or "curvature.csv")
    write_csv(path, ["x", "y", "delta", "conditioning", "K_closed", "K_numeric"],
              [np.ravel(c) for c in (X, Y, m.delta, kappa, m.K, Kn)])
    err = np.abs(Kn - m.K)[ok]
    summary = {"fd_points": int(ok.sum()),
               "max_abs_difference": float(np.max(err)) if err.size else None,
               "K_closed_range": [float(np.nanmin(m.K)), float(np.nanmax(m.K))]
               if np.any(m.mask) else None}
    _write_json(path.with_suffix(".json"),
                _manifest(sc, "curvature", {"K_closed": GRID_COLUMNS["K_closed"],
                                            "K_numeric": GRID_COLUMNS["K_numeric"]}, **summary))
    print(json.dumps(summary))
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.config is not None:
        target = load_scenario(args)
        if target.kind not in SUITES:
            raise ConfigError(f"no verification suite for potential kind {target.kind!r}")
    else:
        target = args.suite or args.scenario or "rational"
    seed = resolve_seed(args.seed)
    t0 = time.perf_counter()
    rep = run_suite(target, seed=seed, tol_override=args.tolerance)
    for c in rep.checks:
        flag = "PASS" if c.passed else "FAIL"
        print(f"{flag}  {c.name:<36s} residual={c.residual:.3e}  tol={c.tolerance:.1e}")
    doc = rep.to_dict()
    doc["seconds"] = time.perf_counter() - t0
    doc["version"] = _version()
    if args.report:
        Path(args.report).parent.mkdir(parents=True, exist_ok=True)
        _write_json(Path(args.report), doc)
    n_ok = sum(c.passed for c in rep.checks)
    print(f"{rep.suite}: {n_ok}/{len(rep.checks)} checks passed in {doc['seconds']:.2f} s")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_lame_q(args) -> int:
    g2 = args.g2 if args.g2 is not None else 4.0
    g3 = args.g3 if args.g3 is not None else -1.0
    Q = lame.q_coefficients(args.g, g2, g3)
    curve = lame.spectral_curve(Q, rel_tol=args.rel_tol)
    rng = np.random.default_rng(resolve_seed(args.seed))
    xs = lame._sample_x(Q, 10)
    zs = rng.uniform(-2.0, 2.0, 10)
    res = float(max(lame.q_ode_residual(Q, x, z) for x, z in zip(xs, zs)))
    doc = {
        "g": Q.g, "g2": g2, "g3": g3,
        "B": Q.b_table(),
        "B_substituted": [str(p.as_expr()) for p in Q.b_exact()],
        "curve_coefficients": curve.coeffs.tolist(),
        "curve_variable": "affine eigenvalue Z, lowest power first",
        "curve_x_spread": curve.spread,
        "branch_points": [[float(r.real), float(r.imag)] for r in curve.branch_points()],
        "q_equation_residual": res,
    }
    if Q.g == 1:
        closed = lame.closed_form_g1(g2, g3)
        doc["closed_form_g1"] = closed.tolist()
        doc["closed_form_difference"] = float(np.max(np.abs(curve.coeffs - closed)))
    text = json.dumps(doc, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n")
        print(f"wrote {args.output}")
    else:
        print(text)
    return EXIT_OK


def cmd_basis(args) -> int:
    sc = load_scenario(args)
    b = sc.basis
    lo, hi = args.x_range or sc.data["grid"]["x"]
    x = np.linspace(lo, hi, args.n)
    s1, d1, s2, d2 = b(x)
    u = b.potential(x)[0]
    out = _outdir(sc)
    path = out / (args.output or "basis.csv")
    write_csv(path, ["x", "s1", "ds1", "s2", "ds2", "wronskian", "u"],
              [x, s1, d1, s2, d2, s1 * d2 - d1 * s2, u])
    _write_json(path.with_suffix(".json"),
                _manifest(sc, "basis", {"s1": "first basis solution", "s2": "second basis solution",
                                        "wronskian": "s1 s2' - s1' s2", "u": "potential"},
                          wronskian_spread=b.wronskian_spread(x)))
    print(f"wrote {path}")
    return EXIT_OK


# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geogap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = p.add_subparsers(dest="command", required=True)

    def grid_opts(q):
        q.add_argument("--nx", type=int)
        q.add_argument("--ny", type=int)
        q.add_argument("--x-range", type=float, nargs=2, metavar=("LO", "HI"))
        q.add_argument("--y-range", type=float, nargs=2, metavar=("LO", "HI"))
        q.add_argument("--output", help="file name inside the output directory")

    q = sub.add_parser("metric-grid", help="metric, Delta and curvature on a grid (CSV)")
    _common(q)
    grid_opts(q)
    q.set_defaults(func=cmd_metric_grid)

    q = sub.add_parser("geodesic", help="integrate a geodesic (CSV trace)")
    _common(q)
    q.add_argument("--mode", choices=("affine", "hamiltonian", "graph"), default="affine")
    for k in ("x0", "y0", "dx0", "dy0"):
        q.add_argument(f"--{k}", type=float)
    q.add_argument("--t-end", type=float)
    q.add_argument("--x-end", type=float)
    q.add_argument("--beta", type=float, nargs=2, metavar=("B1", "B2"),
                   help="graph mode: start on y = B1 s1 + B2 s2")
    q.add_argument("--figures", action="store_true",
                   help="graph traces for beta = (1,-1), (1,0), (1,2)")
    q.add_argument("--samples", type=int, help="resample uniformly in t with N points")
    q.add_argument("--allow-partial", action="store_true")
    q.add_argument("--output")
    q.set_defaults(func=cmd_geodesic)

    q = sub.add_parser("curvature", help="closed-form vs finite-difference curvature")
    _common(q)
    grid_opts(q)
    q.set_defaults(func=cmd_curvature)

    q = sub.add_parser("verify", help="run a verification suite")
    _common(q)
    q.add_argument("--suite", choices=SUITES)
    q.add_argument("--tolerance", type=float, help="override every check's tolerance")
    q.add_argument("--report", type=Path, help="JSON report path")
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("lame-q", help="Q recurrence and spectral curve for index g")
    q.add_argument("--g", type=int, required=True)
    q.add_argument("--g2", type=float)
    q.add_argument("--g3", type=float)
    q.add_argument("--rel-tol", type=float, default=1e-8)
    q.add_argument("--seed", type=int)
    q.add_argument("--output")
    q.set_defaults(func=cmd_lame_q)

    q = sub.add_parser("basis", help="solution basis s1, s2 on an interval (CSV)")
    _common(q)
    q.add_argument("--x-range", type=float, nargs=2, metavar=("LO", "HI"))
    q.add_argument("--n", type=int, default=101)
    q.add_argument("--output")
    q.set_defaults(func=cmd_basis)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Warn as w:
        print(f"warning: {w}", file=sys.stderr)
        return w.code
    except NumericalError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (GeogapError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
