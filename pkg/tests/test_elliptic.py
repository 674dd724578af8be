import mpmath as mp
import numpy as np
import pytest

from geogap import elliptic as ell
from geogap.errors import DegenerateLattice, NearPole, NonRectangular

mp.mp.dps = 30


def _theta_reference(z, L):
    """wp, zeta, sigma from Jacobi theta functions at 30 digits."""
    w1 = mp.mpf(L.omega1)
    w3 = mp.mpc(0, L.omega2_imag)
    q = mp.exp(1j * mp.pi * w3 / w1)
    th = lambda v, d=0: mp.jtheta(1, v, q, d)  # noqa: E731
    eta1 = -mp.pi ** 2 * th(0, 3) / (12 * w1 * th(0, 1))
    v = mp.pi * z / (2 * w1)
    c = mp.pi / (2 * w1)
    zeta = eta1 * z / w1 + c * th(v, 1) / th(v)
    sig = (2 * w1 / mp.pi) * mp.exp(eta1 * z ** 2 / (2 * w1)) * th(v) / th(0, 1)
    wp = -eta1 / w1 + c ** 2 * ((th(v, 1) / th(v)) ** 2 - th(v, 2) / th(v))
    return complex(wp), complex(zeta), complex(sig), float(eta1.real)


@pytest.fixture(scope="module", params=[(4.0, -1.0), (4.0, 0.0), (10.0, 3.0)])
def lattice(request):
    return ell.lattice_from_invariants(*request.param)


def test_matches_theta_reference(lattice):
    L = lattice
    pts = [0.3 * L.omega1, 0.7 * L.omega1 + 0.4 * L.omega2, L.omega1,
           2.7 * L.omega1 - 1.3 * L.omega2, 0.05]
    for z in pts:
        val = ell.weierstrass(complex(z), L)
        wp, zeta, sig, eta1 = _theta_reference(mp.mpc(z), L)
        assert abs(val.wp - wp) <= 1e-11 * abs(wp)
        assert abs(val.zeta - zeta) <= 1e-11 * abs(zeta)
        assert abs(val.sigma - sig) <= 1e-11 * abs(sig)
    assert abs(L.eta1 - eta1) <= 1e-12 * abs(eta1)


def test_differential_equation_and_legendre(lattice):
    L = lattice
    z = np.array([0.2, 0.9 * L.omega1, 0.4 * L.omega1 + 0.6 * L.omega2])
    v = ell.weierstrass(z, L)
    lhs = v.wp_prime ** 2
    rhs = 4 * v.wp ** 3 - L.g2 * v.wp - L.g3
    assert np.max(np.abs(lhs - rhs) / (1 + np.abs(rhs))) < 1e-11
    assert L.legendre_residual() < 1e-12


def test_periodicity_and_quasi_periodicity():
    L = ell.lattice_from_invariants(4.0, -1.0)
    z = 0.37 + 0.21j
    a = ell.weierstrass(z, L)
    b = ell.weierstrass(z + 2 * L.omega1, L)
    c = ell.weierstrass(z + 2 * L.omega2, L)
    assert abs(a.wp - b.wp) < 1e-12 * abs(a.wp)
    assert abs(a.wp - c.wp) < 1e-12 * abs(a.wp)
    assert abs(b.zeta - a.zeta - 2 * L.eta1) < 1e-12
    ratio = b.sigma / a.sigma
    expected = -np.exp(2 * L.eta1 * (z + L.omega1))
    assert abs(ratio - expected) < 1e-11 * abs(expected)


def test_real_input_gives_real_output():
    L = ell.lattice_from_invariants(4.0, -1.0)
    x = np.linspace(0.2, 1.0, 5)
    assert np.isrealobj(ell.wp(x, L))
    assert np.isrealobj(ell.wsigma(x, L))


@pytest.mark.parametrize("z0", [0.0, None])
def test_sigma_prime_against_differences(z0):
    L = ell.lattice_from_invariants(4.0, -1.0)
    # None stands for the lattice point 2*omega1, where sigma vanishes
    base = 2 * L.omega1 if z0 is None else z0
    z = base + np.array([0.0, 0.013, 0.4, 0.1 + 0.2j])
    h = 1e-4
    f = lambda t: ell.wsigma(t, L)  # noqa: E731
    fd = (f(z - 2 * h) - 8 * f(z - h) + 8 * f(z + h) - f(z + 2 * h)) / (12 * h)
    got = ell.wsigma_prime(z, L)
    assert np.max(np.abs(got - fd)) < 1e-9


def test_sigma_prime_at_lattice_points():
    L = ell.lattice_from_invariants(4.0, -1.0)
    assert abs(ell.wsigma_prime(0.0, L) - 1.0) < 1e-14
    # sigma'(2 omega1) = -exp(2 eta1 omega1)
    assert abs(ell.wsigma_prime(2 * L.omega1, L) + np.exp(2 * L.eta1 * L.omega1)) < 1e-11


def test_near_pole_is_masked_and_raised():
    L = ell.lattice_from_invariants(4.0, -1.0)
    v = ell.weierstrass(np.array([0.5, 2 * L.omega1]), L)
    assert list(v.near_pole) == [False, True]
    assert np.isfinite(v.sigma).all()
    with pytest.raises(NearPole):
        ell.wp(2 * L.omega1, L)


def test_lattice_rejections():
    with pytest.raises(DegenerateLattice):
        ell.lattice_from_invariants(0.0, 0.0)
    with pytest.raises(DegenerateLattice):
        ell.lattice_from_invariants(3.0, 1.0)
    with pytest.raises(NonRectangular):
        ell.lattice_from_invariants(1.0, 1.0)


def test_series_reaches_rational_limit():
    x = np.array([0.3, 0.7, 1.1])
    for eps in (1e-3, 1e-4):
        v = ell.weierstrass_series(x, eps, 0.0)
        assert np.max(np.abs(v.wp - ell.wp_hat(x))) < eps
        assert np.max(np.abs(v.zeta - ell.wzeta_hat(x))) < eps
        assert np.max(np.abs(v.sigma - ell.wsigma_hat(x))) < eps


def test_rational_hats():
    x = np.array([0.5, 2.0])
    assert np.allclose(ell.wp_hat(x), [4.0, 0.25])
    assert np.allclose(ell.wp_hat_prime(x), [-16.0, -0.25])
    assert np.allclose(ell.wzeta_hat(x), [2.0, 0.5])
    with pytest.raises(NearPole):
        ell.wp_hat(np.array([0.0, 1.0]))


def test_laurent_coefficients_leading_terms():
    c = ell.laurent_coefficients(4.0, -1.0, 4)[2:]
    # wp = 1/z^2 + g2/20 z^2 + g3/28 z^4 + ...
    assert c[0] == pytest.approx(4.0 / 20)
    assert c[1] == pytest.approx(-1.0 / 28)
