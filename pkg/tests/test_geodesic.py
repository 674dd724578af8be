import json

import numpy as np
import pytest

from geogap import geodesic as geo
from geogap.errors import DegenerateDelta, VerticalSegment


@pytest.fixture(scope="module")
def setup(rational):
    g = rational.data["geodesic"]
    return rational.params(), g


@pytest.fixture(scope="module")
def affine(setup):
    params, g = setup
    return geo.integrate_affine(params, g["x0"], g["y0"], g["dx0"], g["dy0"], (0.0, 2.0))


def test_affine_trace_solves_graph_equation(setup, affine):
    params, _ = setup
    assert affine.termination == "completed"
    assert geo.geodesic_residual(affine) < 1e-8
    assert geo.graph_residual(affine, params.potential, params.z_affine) < 1e-6


def test_affine_agrees_with_graph_form(setup, affine):
    params, g = setup
    graph = geo.integrate_graph(params.potential, params.z_affine, g["x0"], g["y0"], g["dy0"],
                                float(affine.x[-1]))
    assert geo.graph_residual(graph, params.potential, params.z_affine) < 1e-8
    assert geo.compare_to_graph(affine, graph) < 1e-6


def test_hamiltonian_conserves_energy(setup, affine):
    params, g = setup
    dx, dy = geo.normalize_velocity(params, g["x0"], g["y0"], g["dx0"], g["dy0"])
    s0 = geo.HamiltonianState.from_velocity(params, g["x0"], g["y0"], dx, dy)
    ham = geo.hamiltonian_flow(params, s0, (0.0, 2.0))
    assert geo.energy_drift(ham) < 1e-8
    assert geo.compare_traces(ham, affine) < 1e-6
    speed = affine.speed()
    assert np.max(np.abs(speed - speed[0])) < 1e-8


def test_time_reversal_returns_to_start(setup, affine):
    back = geo.reverse(affine)
    assert back.x[-1] == pytest.approx(affine.x[0], abs=1e-7)
    assert back.y[-1] == pytest.approx(affine.y[0], abs=1e-7)


def test_vertical_lines_are_geodesics(setup):
    params, _ = setup
    tr = geo.integrate_affine(params, 2.0, -0.5, 0.0, 1.0, (0.0, 0.5))
    assert np.max(np.abs(tr.x - 2.0)) < 1e-12
    with pytest.raises(VerticalSegment):
        geo.graph_residual(tr, params.potential, params.z_affine)


def test_start_outside_chart_is_rejected(setup):
    params, _ = setup
    with pytest.raises(DegenerateDelta):
        geo.integrate_affine(params, 1.0, 0.0, 1.0, 0.0, (0.0, 1.0))
    with pytest.raises(ValueError):
        geo.integrate_affine(params, 2.0, 0.0, 0.0, 0.0, (0.0, 1.0))


def test_chart_boundary_stops_the_run(setup):
    params, _ = setup
    # heading left towards x = 1, where l and hence Delta vanish
    tr = geo.integrate_affine(params, 2.0, 0.0, -1.0, 0.0, (0.0, 50.0))
    assert tr.partial
    assert tr.termination != "completed"
    assert tr.x[-1] > 1.0


def test_trace_files(setup, affine, tmp_path):
    affine.to_csv(tmp_path / "t.csv")
    affine.to_json(tmp_path / "t.json", {"note": "x"})
    rows = (tmp_path / "t.csv").read_text().splitlines()
    assert rows[0] == "t,x,y,dx,dy,speed,H"
    assert len(rows) == len(affine) + 1
    meta = json.loads((tmp_path / "t.json").read_text())
    assert meta["parameterization"] == "affine"
    assert meta["samples"] == len(affine)
    assert meta["note"] == "x"
    assert meta["metric_parameters"] == setup[0].values()
