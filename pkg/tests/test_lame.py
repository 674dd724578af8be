import numpy as np
import pytest
import sympy as sp

from geogap import elliptic as ell
from geogap import lame
from geogap.errors import ConfigError, OffCurve, ZeroOfQ
from geogap.lame import G2_SYM, Z_SYM


def test_recurrence_low_index():
    B = lame.recurrence_table(1)
    assert B[1] == 1 and sp.expand(B[0] - Z_SYM) == 0
    B = lame.recurrence_table(2)
    assert sp.expand(B[1] - Z_SYM / 3) == 0
    assert sp.expand(B[0] - (Z_SYM ** 2 / 9 - G2_SYM / 4)) == 0


@pytest.mark.parametrize("g", [0, -1, 9, 1.5])
def test_index_out_of_range(g):
    with pytest.raises(ConfigError):
        lame.q_coefficients(g, 4.0, -1.0)


@pytest.mark.parametrize("g, tol", [(1, 1e-8), (2, 1e-7)])
def test_q_solves_third_order_equation(g, tol, rng):
    Q = lame.q_coefficients(g, 4.0, -1.0)
    w1 = Q.lattice.omega1
    x = rng.uniform(0.1, 1.9, 10) * w1
    z = rng.uniform(-2.0, 2.0, 10)
    res = np.array([lame.q_ode_residual(Q, xi, zi) for xi, zi in zip(x, z)])
    scale = np.array([1 + abs(Q(xi, zi)[3]) for xi, zi in zip(x, z)])
    assert np.max(res / scale) < tol


def test_residual_is_linear_in_q():
    x, z = 0.8, 0.4
    one = lame.q_coefficients(2, 4.0, -1.0)
    two = lame.q_coefficients(2, 4.0, -1.0, Bg=2.0)
    q1, q2 = one(x, z), two(x, z)
    assert np.allclose(np.array(q2), 2 * np.array(q1), rtol=1e-14)
    # the (rounding-level) residual scales with Q as well
    r1 = lame.q_ode_residual(one, x, z)
    assert lame.q_ode_residual(two, x, z) == pytest.approx(2 * r1, rel=1e-6, abs=1e-12)


def test_g1_closed_form_shape():
    Q = lame.q_coefficients(1, 4.0, -1.0)
    x, z = 0.7, 0.25
    P = np.real(ell.wp(x + Q.lattice.omega2, Q.lattice))
    # Q = wp(x + omega2) - Z
    assert Q(x, z)[0] == pytest.approx(P - z, rel=1e-13)


@pytest.mark.parametrize("g", [1, 2, 3])
def test_fitted_curve_matches_symbolic(g):
    Q = lame.q_coefficients(g, 4.0, -1.0)
    curve = lame.spectral_curve(Q)
    assert curve.degree == 2 * g + 1
    exact = [float(c) for c in reversed(lame.curve_exact(Q).all_coeffs())]
    assert np.allclose(curve.coeffs, exact, rtol=1e-8, atol=1e-8)


def test_g1_curve_against_closed_form():
    Q = lame.q_coefficients(1, 4.0, -1.0)
    curve = lame.spectral_curve(Q)
    assert np.max(np.abs(curve.coeffs - lame.closed_form_g1(4.0, -1.0))) < 1e-9
    # branch points sit at Z = wp(half-period) = e_i
    e = np.sort(np.array(Q.lattice.roots))
    assert np.allclose(np.sort(curve.branch_points().real), e, atol=1e-10)


def test_rational_degeneration():
    Q = lame.q_coefficients(2, 0.0, 0.0)
    assert Q.lattice is None
    x = np.array([0.7, 1.3])
    assert np.max(lame.q_ode_residual(Q, x, 0.5)) < 1e-10


def test_chi0_factorises_the_operator():
    Q = lame.q_coefficients(1, 4.0, -1.0)
    L = Q.lattice
    zu = 0.6
    val = ell.weierstrass(zu, L)
    Z, w = float(val.wp), -0.5 * float(val.wp_prime)
    x = np.linspace(0.2, 1.2, 6) * L.omega1
    assert np.max(lame.factorization_residual(x, Z, w, Q)) < 1e-7


def test_chi0_errors():
    Q = lame.q_coefficients(1, 4.0, -1.0)
    curve = lame.spectral_curve(Q)
    with pytest.raises(OffCurve):
        lame.chi0(0.5, 0.3, 10.0, Q, curve)
    # Q = P - Z vanishes where wp(x + omega2) = Z
    x = 0.5
    Z = float(np.real(ell.wp(x + Q.lattice.omega2, Q.lattice)))
    w = np.sqrt(complex(curve(Z)))
    w = w.real if abs(w.imag) < 1e-12 else w
    with pytest.raises(ZeroOfQ):
        lame.chi0(x, Z, w, Q, curve)


def test_relative_spread():
    assert lame.relative_spread([2.0, 2.0, 2.0]) == 0.0
    assert lame.relative_spread([1.0, 3.0]) == pytest.approx(0.5)
