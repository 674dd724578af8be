import numpy as np
import pytest
import sympy as sp

from geogap import elliptic as ell
from geogap.errors import (BranchPoint, DegenerateParameters, NearPole,
                           OutOfDomain, SingularityInSpan)
from geogap.schrodinger import (BAFunction, LameG1, RationalCusp, Tabulated,
                                lame_basis, make_l, numerical_basis,
                                rational_basis, solve_schrodinger)

XS = np.array([0.5, 1.0, 2.0])


def test_rational_basis_solves_equation():
    b = rational_basis(0.0, 1.0)
    # a 2e-4 step keeps the stencil's truncation error well below the bound at x = 0.5
    r1, r2 = b.eq_residual(XS, h=2e-4)
    assert np.max(r1) < 1e-10 and np.max(r2) < 1e-10
    assert b.wronskian_spread(np.linspace(0.3, 3.0, 20)) < 1e-13


def test_rational_basis_exact_substitution():
    x = sp.Symbol("x")
    b = rational_basis(0.0, 1.0)
    vals = b(XS)
    for k, expr in enumerate((sp.exp(-x) * (x + 1) / x, -sp.exp(x) * (x - 1) / x)):
        assert sp.simplify(sp.diff(expr, x, 2) - (2 / x ** 2 + 1) * expr) == 0
        f = sp.lambdify(x, expr)
        df = sp.lambdify(x, sp.diff(expr, x))
        assert np.allclose(vals[2 * k], f(XS), rtol=1e-14)
        assert np.allclose(vals[2 * k + 1], df(XS), rtol=1e-14)


def test_rational_basis_rejects_degenerate_input():
    for g, z in [(0.0, 0.0), (-1.0, 1.0), (1.0, 1.0)]:
        with pytest.raises(DegenerateParameters):
            rational_basis(g, z)
    with pytest.raises(NearPole):
        rational_basis(0.5, 1.0)(-0.5)


def test_rational_ba_matches_basis():
    z, g = 0.8, 0.2
    ba = BAFunction(z, g)
    basis = rational_basis(g, z)
    psi, dpsi = ba(XS)
    s1, d1, _, _ = basis(XS)
    # psi carries the extra factor gamma
    assert np.allclose(psi, g * s1, rtol=1e-14)
    assert np.allclose(dpsi, g * d1, rtol=1e-14)
    assert ba.z_affine == pytest.approx(1 / z ** 2)


def test_lame_basis_solves_equation(lame_g1):
    b = lame_g1.basis
    xs = np.linspace(0.5, 1.3, 7)
    r1, r2 = b.eq_residual(xs)
    assert np.max(r1) < 1e-8 and np.max(r2) < 1e-8
    assert b.wronskian_spread(xs) < 1e-12


def test_ba_log_derivative_consistency(lame_g1):
    L = lame_g1.lattice
    ba = BAFunction(0.6, 0.3, L)
    x = np.linspace(0.5, 1.2, 5)
    psi, dpsi = ba(x)
    phi, _, _ = ba.log_derivative(x)
    assert np.allclose(dpsi / psi, phi, rtol=1e-11)


def test_ba_regular_at_its_zero():
    L = ell.lattice_from_invariants(4.0, -1.0)
    z, g = 0.6, 0.3
    minus = BAFunction(-z, g, L)
    # psi(x, -z) vanishes where x - z + gamma = 0
    x0 = z - g
    psi, dpsi = minus(np.array([x0 - 1e-3, x0, x0 + 1e-3]))
    assert abs(psi[1]) < 1e-14
    assert np.all(np.isfinite(dpsi))
    assert np.sign(psi[0]) != np.sign(psi[2])
    assert dpsi[1] == pytest.approx((psi[2] - psi[0]) / 2e-3, rel=1e-5)


def test_lame_basis_rejects_branch_point():
    L = ell.lattice_from_invariants(4.0, -1.0)
    with pytest.raises(BranchPoint):
        lame_basis(0.3, L, L.omega1)


def test_lame_potential_singularities():
    L = ell.lattice_from_invariants(4.0, -1.0)
    u = LameG1(L, 0.3)
    sing = u.singularities(-1.0, 3 * L.omega1)
    assert sing == pytest.approx([-0.3, 2 * L.omega1 - 0.3])
    with pytest.raises(NearPole):
        u(-0.3)


def test_numerical_basis_agrees_with_closed_form():
    exact = rational_basis(0.0, 1.0)
    num = numerical_basis(RationalCusp(0.0), 1.0, 1.0, 3.0)
    x = np.array([1.5, 2.5, 3.0])
    s1, d1, s2, d2 = exact(1.0)
    w = s1 * d2 - d1 * s2
    a, _, b, _ = num(x)
    e1, _, e2, _ = exact(x)
    # express the exact pair in the (1,0), (0,1) normalised basis at x0 = 1
    t1 = (d2 * e1 - d1 * e2) / w
    t2 = (-s2 * e1 + s1 * e2) / w
    assert np.max(np.abs(a - t1)) < 1e-9
    assert np.max(np.abs(b - t2)) < 1e-9


def test_solver_refuses_singular_span():
    with pytest.raises(SingularityInSpan):
        solve_schrodinger(RationalCusp(0.0), 1.0, 1.0, 1.0, 0.0, -1.0)


def test_tabulated_potential(tmp_path):
    x = np.linspace(1.0, 3.0, 201)
    path = tmp_path / "u.csv"
    rows = ["x,u,du,d2u"] + [f"{a:.17g},{2 / a**2:.17g},{-4 / a**3:.17g},{12 / a**4:.17g}" for a in x]
    path.write_text("\n".join(rows) + "\n")
    tab = Tabulated.from_csv(path)
    assert tab.accurate_derivatives
    assert tab.domain == (1.0, 3.0)
    u, du, d2u = tab(np.array([1.5, 2.2]))
    assert np.allclose(u, 2 / np.array([1.5, 2.2]) ** 2, rtol=1e-6)
    with pytest.raises(OutOfDomain):
        tab(3.5)
    with pytest.raises(OutOfDomain):
        tab.singularities(0.5, 2.0)
    with pytest.raises(ValueError):
        Tabulated(np.array([1.0, 1.0]), np.array([0.0, 0.0]))
    spline_only = Tabulated(x, 2 / x ** 2)
    assert not spline_only.accurate_derivatives


@pytest.mark.parametrize("which", ["rational", "lame"])
def test_l_function_third_derivative(which, rational, lame_g1):
    basis = (rational if which == "rational" else lame_g1).basis
    x = np.linspace(1.3, 2.5, 5) if which == "rational" else np.linspace(0.5, 1.2, 5)
    lf = make_l(basis, 0.4, 1.0, -0.3)
    a = lf.third(x)
    b = lf.third_product_rule(x)
    assert np.max(np.abs(a - b) / (1 + np.abs(a))) < 1e-12
    assert np.max(lf.eq_residual(x)) < 1e-8
