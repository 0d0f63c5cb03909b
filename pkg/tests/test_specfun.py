import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.special import betainc, hyp2f1

from radialsle import specfun as sf
from radialsle.errors import ConvergenceError, DomainError

# ---------------------------------------------------------------------------
# oracles


def phi_right_oracle(kappa, r, u, dps=40):
    """High-precision Frobenius-branch solution, normalized at u = 1.

    Built directly from mpmath's hypergeometric function with (possibly
    complex) upper parameters, entirely independent of the package's series.
    """
    with mpmath.workdps(dps):
        kappa = mpmath.mpf(kappa)
        c = (3 * kappa - 8) / (2 * kappa)
        rsum = (2 * kappa - 8) / kappa
        disc = rsum ** 2 + 32 * mpmath.mpf(r) / kappa
        root = mpmath.sqrt(mpmath.mpc(disc, 0))
        a1 = (rsum + root) / 2 + 1 - c
        b1 = (rsum - root) / 2 + 1 - c

        def y(x):
            return mpmath.power(x, 1 - c) * mpmath.hyp2f1(a1, b1, 2 - c, x)

        return float(mpmath.re(y(u) / y(1)))


def fd_residual(kappa, r, u, side, h=1e-3):
    """Hypergeometric ODE residual from five-point finite differences."""

    def f(x):
        return sf.phi_cr_moment(kappa, r, x, side)

    d1 = (-f(u + 2 * h) + 8 * f(u + h) - 8 * f(u - h) + f(u - 2 * h)) / (12 * h)
    d2 = (-f(u + 2 * h) + 16 * f(u + h) - 30 * f(u) + 16 * f(u - h)
          - f(u - 2 * h)) / (12 * h * h)
    c = (3 * kappa - 8) / (2 * kappa)
    return u * (1 - u) * d2 + c * (1 - 2 * u) * d1 + (8 * r / kappa) * f(u)


# ---------------------------------------------------------------------------
# exponents and kernels


def test_exponents_frozen_values():
    p = sf.sle_exponents(16 / 3)
    assert p.h == pytest.approx(1 / 16)
    assert p.h_tilde == pytest.approx(5 / 96)
    assert p.r1 == pytest.approx(1 / 8)
    assert p.r_max == pytest.approx(1 / 3)
    p = sf.sle_exponents(6.0)
    assert p.h == 0.0
    assert p.h_tilde == 0.0
    assert p.r1 == pytest.approx(5 / 48)
    assert p.r_max == pytest.approx(1 / 4)
    p = sf.sle_exponents(2.0)
    assert p.h == pytest.approx(1.0)
    assert p.h_tilde == 0.0
    assert p.r1 == pytest.approx(-3 / 16)
    assert sf.sle_exponents(8 / 3).r1 == pytest.approx(0.0)


@given(st.floats(0.05, 7.95))
def test_r1_is_strictly_below_r_max(kappa):
    p = sf.sle_exponents(kappa)
    assert p.r_max - p.r1 == pytest.approx((64 - kappa ** 2) / (32 * kappa))
    assert p.r1 < p.r_max


def test_kappa_range_enforced():
    for bad in (0.0, -1.0, 8.0, 9.5):
        with pytest.raises(DomainError):
            sf.sle_exponents(bad)


def test_poisson_kernels():
    assert sf.poisson_kernel("half_plane", 1.0, 3.0) == pytest.approx(0.25)
    assert sf.poisson_kernel("half_plane", 3.0, 1.0) == pytest.approx(0.25)
    # antipodal angles: chord length 2
    assert sf.poisson_kernel("disc", 0.0, math.pi) == pytest.approx(0.25)
    th1, th2 = 0.3, 1.7
    chord = abs(cmath.exp(1j * th2) - cmath.exp(1j * th1))
    assert sf.poisson_kernel("disc", th1, th2) == pytest.approx(chord ** -2)
    with pytest.raises(DomainError):
        sf.poisson_kernel("half_plane", 2.0, 2.0)
    with pytest.raises(DomainError):
        sf.poisson_kernel("disc", 0.7, 0.7)
    with pytest.raises(DomainError):
        sf.poisson_kernel("strip", 0.0, 1.0)


# ---------------------------------------------------------------------------
# Gauss 2F1


@pytest.mark.parametrize(
    "a,b,c",
    [(0.3, 0.7, 1.1), (-0.5, 2.2, 0.4), (1.5, 1.5, 3.2), (-3.0, 0.9, 1.3)],
)
@pytest.mark.parametrize("x", [-0.9, -0.3, 0.0, 0.25, 0.6, 0.95])
def test_2f1_against_scipy_and_mpmath(a, b, c, x):
    got = sf.gauss_2f1(a, b, c, x)
    assert got == pytest.approx(float(hyp2f1(a, b, c, x)), rel=1e-10)
    assert got == pytest.approx(float(mpmath.hyp2f1(a, b, c, x)), rel=1e-10)


def test_2f1_closed_forms():
    # 2F1(a, b; b; x) = (1 - x)^(-a), any b not a non-positive integer
    assert sf.gauss_2f1(0.7, 2.5, 2.5, 0.4) == pytest.approx(0.6 ** -0.7, rel=1e-11)
    # 2F1(1, 1; 2; x) = -log(1 - x)/x
    x = 0.35
    assert sf.gauss_2f1(1, 1, 2, x) == pytest.approx(-math.log1p(-x) / x, rel=1e-11)


def test_2f1_polynomial_termination():
    # a = -2 truncates after three terms even at x close to 1
    a, b, c, x = -2.0, 1.7, 0.9, 0.99
    exact = 1 + a * b / c * x + a * (a + 1) * b * (b + 1) / (c * (c + 1)) / 2 * x ** 2
    assert sf.gauss_2f1(a, b, c, x) == pytest.approx(exact, rel=1e-12)


def test_2f1_domain_errors():
    with pytest.raises(DomainError):
        sf.gauss_2f1(0.3, 0.7, 0.0, 0.5)
    with pytest.raises(DomainError):
        sf.gauss_2f1(0.3, 0.7, -2.0, 0.5)
    with pytest.raises(DomainError):
        sf.gauss_2f1(0.3, 0.7, 1.1, 1.0)
    with pytest.raises(DomainError):
        sf.gauss_2f1(0.3, 0.7, 1.1, -1.2)


def test_2f1_convergence_cap():
    with pytest.raises(ConvergenceError):
        sf.gauss_2f1(0.3, 0.7, 1.1, 0.9999999)


# ---------------------------------------------------------------------------
# the side-resolved moment function


def test_phi_closed_form_at_r1():
    for kappa in (3.0, 4.0, 16 / 3, 6.0, 2.5):
        r1 = sf.sle_exponents(kappa).r1
        e = 4 / kappa - 0.5
        for u in (0.05, 0.3, 0.5, 0.8, 0.97):
            assert sf.phi_cr_moment(kappa, r1, u, "right") == pytest.approx(
                u ** e, rel=1e-9)
            assert sf.phi_cr_moment(kappa, r1, u, "left") == pytest.approx(
                (1 - u) ** e, rel=1e-9)


def test_phi_left_closed_form_quarter_power():
    # kappa = 16/3 puts the one-arm exponent at 1/4
    assert sf.phi_cr_moment(16 / 3, 1 / 8, 0.36, "left") == pytest.approx(
        0.64 ** 0.25, rel=1e-10)


def test_phi_total_is_one_at_r_zero():
    for kappa in (3.0, 4.0, 16 / 3, 6.0):
        for u in (0.1, 0.5, 0.9):
            assert sf.phi_cr_moment(kappa, 0.0, u, "total") == pytest.approx(
                1.0, abs=1e-9)


def test_phi_right_at_r_zero_is_incomplete_beta():
    # the r = 0 branch is the symmetric regularized incomplete beta function
    for kappa in (3.0, 16 / 3, 6.0):
        p = 4 / kappa - 0.5
        for u in (0.15, 0.5, 0.85):
            assert sf.phi_cr_moment(kappa, 0.0, u, "right") == pytest.approx(
                float(betainc(p, p, u)), rel=1e-9)


@pytest.mark.parametrize("kappa", [3.0, 4.0, 16 / 3, 6.0])
@pytest.mark.parametrize("rfrac", [0.0, 0.45, 0.9])
def test_phi_matches_mpmath_oracle_real_roots(kappa, rfrac):
    r = rfrac * sf.sle_exponents(kappa).r_max
    for u in (0.1, 0.4, 0.7, 0.95):
        assert sf.phi_cr_moment(kappa, r, u, "right") == pytest.approx(
            phi_right_oracle(kappa, r, u), rel=1e-9)


@pytest.mark.parametrize("kappa,r", [(2.0, -0.5), (3.0, -1.0), (16 / 3, -2.0),
                                     (6.0, -0.7)])
def test_phi_matches_mpmath_oracle_complex_roots(kappa, r):
    # negative moment orders push the indicial roots into a conjugate pair
    rsum = (2 * kappa - 8) / kappa
    assert rsum ** 2 + 32 * r / kappa < 0
    for u in (0.2, 0.5, 0.9):
        assert sf.phi_cr_moment(kappa, r, u, "right") == pytest.approx(
            phi_right_oracle(kappa, r, u), rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(
    kappa=st.floats(0.6, 7.9),
    rfrac=st.floats(-3.0, 0.93),
    u=st.floats(0.02, 0.98),
)
def test_phi_reflection_symmetry(kappa, rfrac, u):
    r = rfrac * sf.sle_exponents(kappa).r_max
    right = sf.phi_cr_moment(kappa, r, u, "right")
    left = sf.phi_cr_moment(kappa, r, 1 - u, "left")
    total = sf.phi_cr_moment(kappa, r, u, "total")
    assert right == pytest.approx(left, rel=1e-12)
    assert total == pytest.approx(
        right + sf.phi_cr_moment(kappa, r, u, "left"), rel=1e-12)


def test_phi_boundary_normalization():
    # RIGHT -> 1 at u -> 1 with gap ~ (1-u)^p, p = (8-kappa)/(2*kappa),
    # and RIGHT -> 0 at u -> 0
    for kappa in (3.0, 6.0):
        p = (8 - kappa) / (2 * kappa)
        d1 = 1 - sf.phi_cr_moment(kappa, 0.05, 1 - 1e-6, "right")
        d2 = 1 - sf.phi_cr_moment(kappa, 0.05, 1 - 2.5e-7, "right")
        assert 0 < d2 < d1
        # next-order corrections sit only delta^(1-p) below leading, so a
        # generous band is the honest check
        assert d1 / d2 == pytest.approx(4 ** p, rel=0.2)
        # at u -> 0 the branch vanishes like u^(1-c), 1 - c = p
        v1 = sf.phi_cr_moment(kappa, 0.05, 4e-9, "right")
        v2 = sf.phi_cr_moment(kappa, 0.05, 1e-9, "right")
        assert 0 < v2 < v1 < 0.1
        assert v1 / v2 == pytest.approx(4 ** p, rel=0.02)


@pytest.mark.parametrize("kappa", [3.0, 4.0, 16 / 3, 6.0])
def test_phi_ode_residual_spotcheck(kappa):
    r_max = sf.sle_exponents(kappa).r_max
    for r in (0.0, -0.8, 0.9 * r_max):
        for u in (0.25, 0.6):
            assert abs(fd_residual(kappa, r, u, "right")) < 1e-6
            assert abs(fd_residual(kappa, r, u, "total")) < 1e-6


def test_phi_divergence_refused_at_r_max():
    for kappa in (3.0, 16 / 3, 6.0):
        r_max = sf.sle_exponents(kappa).r_max
        for r in (r_max, r_max + 0.2):
            with pytest.raises(DomainError):
                sf.phi_cr_moment(kappa, r, 0.5)


def test_phi_argument_validation():
    with pytest.raises(DomainError):
        sf.phi_cr_moment(3.0, 0.1, 0.0)
    with pytest.raises(DomainError):
        sf.phi_cr_moment(3.0, 0.1, 1.0)
    with pytest.raises(DomainError):
        sf.phi_cr_moment(3.0, 0.1, 0.5, "middle")
    assert sf.PhiSide.parse("RIGHT") is sf.PhiSide.RIGHT
    assert sf.PhiSide.parse(sf.PhiSide.TOTAL) is sf.PhiSide.TOTAL


def test_phi_array_matches_scalar():
    # the vectorized branch must agree with the scalar recursion on both
    # sides of its u = 1/2 split, including very endpoint-heavy arguments
    u = np.array([1e-10, 0.01, 0.3, 0.5, 0.50001, 0.7, 0.95, 1 - 1e-7])
    for kappa in (3.0, 4.0, 16 / 3, 6.0, 7.5):
        for rfrac in (0.0, 0.5, 0.9, -3.0):
            r = rfrac * sf.sle_exponents(kappa).r_max
            for side in ("right", "left", "total"):
                got = sf.phi_cr_moment(kappa, r, u, side)
                want = [sf.phi_cr_moment(kappa, r, x, side) for x in u]
                assert np.allclose(got, want, rtol=5e-11)


def test_phi_array_closed_forms():
    u = np.linspace(0.02, 0.98, 17)
    r1 = sf.sle_exponents(16 / 3).r1
    assert np.allclose(sf.phi_cr_moment(16 / 3, r1, u, "right"), u ** 0.25,
                       rtol=1e-10)
    p = 4 / 6.0 - 0.5
    assert np.allclose(sf.phi_cr_moment(6.0, 0.0, u, "right"),
                       betainc(p, p, u), rtol=1e-9)
    total = sf.phi_cr_moment(16 / 3, 0.0, u, "total")
    assert np.allclose(total, 1.0, atol=1e-10)


def test_phi_array_degenerate_exponent_falls_back():
    # kappa = 8/3 makes the endpoint exponents differ by an integer; the
    # array path must hand those u past 1/2 to the scalar continuation
    u = np.array([0.2, 0.6, 0.9, 0.99])
    got = sf.phi_cr_moment(8 / 3, 0.1, u, "right")
    want = [sf.phi_cr_moment(8 / 3, 0.1, x, "right") for x in u]
    assert np.allclose(got, want, rtol=1e-10)


def test_phi_array_validation():
    with pytest.raises(DomainError):
        sf.phi_cr_moment(3.0, 0.1, np.array([0.5, 1.0]))
    with pytest.raises(DomainError):
        sf.phi_cr_moment(3.0, 0.1, np.array([0.0, 0.5]))


# ---------------------------------------------------------------------------
# one-arm formulas and small partition functions


@pytest.mark.parametrize("kappa", [3.0, 16 / 3, 6.0])
@pytest.mark.parametrize("theta", [0.4, math.pi / 2, math.pi, 3 * math.pi / 2])
def test_onearm_formulas_match_phi_at_r1(kappa, theta):
    right, left, total = sf.onearm_cr_formulas(kappa, theta)
    r1 = sf.sle_exponents(kappa).r1
    u = math.sin(theta / 4) ** 2
    assert right == pytest.approx(sf.phi_cr_moment(kappa, r1, u, "right"), rel=1e-9)
    assert left == pytest.approx(sf.phi_cr_moment(kappa, r1, u, "left"), rel=1e-9)
    assert total == pytest.approx(right + left)


def test_onearm_frozen_value():
    # kappa = 16/3, theta = pi: sin(pi/4)^(1/2) = 2^(-1/4)
    right, left, total = sf.onearm_cr_formulas(16 / 3, math.pi)
    assert right == pytest.approx(2 ** -0.25)
    assert left == pytest.approx(2 ** -0.25)
    assert total == pytest.approx(2 ** 0.75)


def test_z_link_values():
    h = sf.sle_exponents(16 / 3).h
    th1, th2 = 0.2, 2.1
    expect = (2 * math.sin((th2 - th1) / 2)) ** (-2 * h)
    assert sf.z_link(16 / 3, th1, th2) == pytest.approx(expect)
    # kappa = 6 has h = 0, so the two-point function is constant
    assert sf.z_link(6.0, 0.1, 2.9) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        sf.z_link(3.0, 1.0, 1.0)


def test_g_onearm_n1_factorizes():
    for kappa in (3.0, 16 / 3, 6.0):
        h = sf.sle_exponents(kappa).h
        r1 = sf.sle_exponents(kappa).r1
        for th1, th2 in ((0.0, math.pi), (0.3, 1.9), (-1.0, 2.0)):
            theta = th2 - th1
            u = math.sin(theta / 4) ** 2
            expect = (2 ** (2 * h) * sf.z_link(kappa, th1, th2)
                      * sf.phi_cr_moment(kappa, r1, u, "right"))
            assert sf.g_onearm_n1(kappa, th1, th2) == pytest.approx(expect, rel=1e-9)


def test_g_onearm_n1_rotation_invariant():
    for s in (0.0, 0.7, -2.0):
        assert sf.g_onearm_n1(16 / 3, 0.3 + s, 2.4 + s) == pytest.approx(
            sf.g_onearm_n1(16 / 3, 0.3, 2.4))


def test_g_onearm_frozen_at_antipodal():
    assert sf.g_onearm_n1(16 / 3, 0.0, math.pi) == pytest.approx(2 ** -0.25)


# ---------------------------------------------------------------------------
# angle tuples, spirals, FK-Ising


def test_validate_angle_tuple():
    assert sf.validate_angle_tuple([0.1, 0.2, 0.3, 0.4]) == (0.1, 0.2, 0.3, 0.4)
    for bad in ([], [0.1], [0.1, 0.2, 0.3], [0.2, 0.1], [0.0, 7.0]):
        with pytest.raises(DomainError):
            sf.validate_angle_tuple(bad)


def test_spiral_partition_mu_zero_is_sine_product():
    kappa = 4.0
    ts = (0.1, 0.9, 2.0, 2.5)
    expect = 1.0
    for i in range(4):
        for j in range(i + 1, 4):
            expect *= math.sin((ts[j] - ts[i]) / 2) ** (2 / kappa)
    assert sf.spiral_partition(0.0, kappa, ts) == pytest.approx(expect, rel=1e-12)


def test_spiral_partition_rotation_covariance():
    mu, kappa = 1.5, 16 / 3
    ts = (0.2, 1.0, 1.7, 2.9)
    s = 0.4
    shifted = tuple(t + s for t in ts)
    factor = math.exp(mu * len(ts) * s / kappa)
    assert sf.spiral_partition(mu, kappa, shifted) == pytest.approx(
        sf.spiral_partition(mu, kappa, ts) * factor, rel=1e-12)


def test_spiral_partition_frozen_value():
    # N = 1, mu = 2, kappa = 4, angles (0, pi):
    # sin(pi/2)^(1/2) * exp(2 * pi / 4) = e^(pi/2)
    assert sf.spiral_partition(2.0, 4.0, (0.0, math.pi)) == pytest.approx(
        math.exp(math.pi / 2), rel=1e-12)


def test_chi_is_modulus_of_chordal_cross_ratio():
    ts = (0.3, 1.1, 2.6, 4.0)
    z = [cmath.exp(1j * t) for t in ts]
    cr = abs((z[1] - z[0]) * (z[3] - z[2]) / ((z[2] - z[0]) * (z[3] - z[1])))
    assert sf.chi(*ts) == pytest.approx(cr, rel=1e-12)


def test_chi_lies_in_unit_interval_for_cyclic_order():
    for ts in ((0.0, 0.5, 1.5, 3.0), (1.0, 2.0, 4.0, 6.0)):
        x = sf.chi(*ts)
        assert 0 < x < 1


def test_chi_pair_swap_symmetries():
    t = (0.3, 1.1, 2.6, 4.0)
    assert sf.chi(t[1], t[0], t[3], t[2]) == pytest.approx(sf.chi(*t))
    assert sf.chi(t[2], t[3], t[0], t[1]) == pytest.approx(sf.chi(*t))


def test_chi_vanishes_with_first_gap_and_rejects_degenerate_denominator():
    assert sf.chi(1.0, 1.0, 2.0, 3.0) == 0.0
    small = sf.chi(1.0, 1.0 + 1e-8, 2.0, 3.0)
    assert 0 < small < 1e-7
    with pytest.raises(DomainError):
        sf.chi(1.0, 2.0, 1.0, 3.0)
    with pytest.raises(DomainError):
        sf.chi(1.0, 2.0, 3.0, 2.0)


def test_f_ising_single_interval():
    th1, th2 = 0.2, 1.1
    expect = math.sqrt(2) * math.sin((th2 - th1) / 2) ** (-1 / 8)
    assert sf.f_ising((th1, th2)) == pytest.approx(expect, rel=1e-12)


def test_f_ising_two_intervals_direct_formula():
    ts = (0.1, 0.8, 2.0, 3.1)
    x = sf.chi(ts[0], ts[2], ts[3], ts[1])
    pref = (math.sin((ts[1] - ts[0]) / 2) ** (-1 / 8)
            * math.sin((ts[3] - ts[2]) / 2) ** (-1 / 8))
    expect = pref * math.sqrt(2 * (x ** 0.25 + x ** -0.25))
    assert sf.f_ising(ts) == pytest.approx(expect, rel=1e-12)


def test_f_ising_rotation_invariant():
    ts = (0.1, 0.8, 2.0, 3.1, 4.0, 4.6)
    for s in (0.5, -1.1):
        shifted = tuple(t + s for t in ts)
        assert sf.f_ising(shifted) == pytest.approx(sf.f_ising(ts), rel=1e-11)


def test_f_ising_needs_valid_angle_tuple():
    with pytest.raises(DomainError):
        sf.f_ising((0.5, 0.1))
