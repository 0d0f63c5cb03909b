import math

import pytest
from hypothesis import given, settings, strategies as st

from radialsle import bpz, specfun as sf
from radialsle.errors import DomainError, GeometryError


def onearm_field(kappa):
    return lambda ts: sf.g_onearm_n1(kappa, ts[0], ts[1])


def spiral_field(mu, kappa):
    return lambda ts: sf.spiral_partition(mu, kappa, ts)


def zlink_field(kappa):
    return lambda ts: sf.z_link(kappa, ts[0], ts[1])


# ---------------------------------------------------------------------------
# scheme plumbing


def test_scheme_validation():
    with pytest.raises(DomainError):
        bpz.FdScheme(step=0.0)
    with pytest.raises(DomainError):
        bpz.FdScheme(order=3)
    assert bpz.FdScheme(order=2).reach == pytest.approx(1e-3)
    assert bpz.FdScheme(order=4).reach == pytest.approx(2e-3)


def test_stencil_collision_raises_geometry_error():
    with pytest.raises(GeometryError):
        bpz.radial_bpz_lhs(onearm_field(3.0), (0.0, 0.0015), 1, 3.0)
    with pytest.raises(GeometryError):
        bpz.radial_bpz_lhs(onearm_field(3.0), (0.0, 6.2828), 2, 3.0)
    with pytest.raises(GeometryError):
        bpz.chordal_bpz_lhs(lambda xs: 1.0, (0.0, 0.001), 1, 6.0)


def test_nonpositive_field_rejected():
    with pytest.raises(DomainError):
        bpz.radial_bpz_lhs(lambda ts: -1.0, (0.3, 2.1), 1, 3.0)
    # positive at the center but not across the whole stencil
    shy = lambda ts: ts[1] - ts[0] - 2.0994
    with pytest.raises(DomainError):
        bpz.radial_bpz_lhs(shy, (0.3, 2.4), 2, 3.0)


def test_j_out_of_range():
    with pytest.raises(DomainError):
        bpz.radial_bpz_lhs(onearm_field(3.0), (0.3, 2.1), 3, 3.0)
    with pytest.raises(DomainError):
        bpz.radial_bpz_lhs(onearm_field(3.0), (0.3, 2.1), 0, 3.0)


# ---------------------------------------------------------------------------
# radial system on known solutions


def test_onearm_constant_is_minus_7_over_96():
    kappa = 16 / 3
    field = onearm_field(kappa)
    for j in (1, 2):
        lhs = bpz.radial_bpz_lhs(field, (0.3, 2.1), j, kappa)
        assert lhs == pytest.approx(-7 / 96, abs=1e-6)
    per_j, aleph, spread = bpz.radial_bpz_residuals(field, (0.3, 2.1), kappa)
    assert len(per_j) == 2
    assert aleph == pytest.approx(-7 / 96, abs=1e-6)
    assert spread < 1e-6


def test_onearm_constant_general_kappa():
    # (16 - kappa^2)/(32 kappa) for the N = 1 one-arm solution
    for kappa in (3.0, 4.0, 6.0):
        field = onearm_field(kappa)
        _, aleph, spread = bpz.radial_bpz_residuals(field, (0.5, 2.8), kappa)
        assert aleph == pytest.approx((16 - kappa ** 2) / (32 * kappa), abs=1e-6)
        assert spread < 1e-6


@pytest.mark.parametrize("mu", [0.0, 1.0, 2.0])
@pytest.mark.parametrize("kappa", [4.0, 16 / 3])
@pytest.mark.parametrize("ts", [(0.3, 2.1), (0.4, 1.5, 3.0, 4.2)])
def test_spiral_constant_depends_on_arity(mu, kappa, ts):
    # on 2N angles the spiral family solves the system with constant
    # (mu^2 - (4N^2 - 1))/(2 kappa); the familiar (mu^2 - 3)/(2 kappa)
    # is the N = 1 case.  Derivation: the cotangent triple identity makes
    # every unordered pair beyond j contribute -1/kappa.
    n = len(ts)
    field = spiral_field(mu, kappa)
    _, aleph, spread = bpz.radial_bpz_residuals(field, ts, kappa)
    assert aleph == pytest.approx((mu ** 2 - (n * n - 1)) / (2 * kappa), abs=1e-6)
    assert spread < 1e-6


def test_spiral_frozen_examples():
    _, aleph, _ = bpz.radial_bpz_residuals(
        spiral_field(0.0, 16 / 3), (0.4, 1.5, 3.0, 4.2), 16 / 3)
    assert aleph == pytest.approx(-45 / 32, abs=1e-6)
    _, aleph, _ = bpz.radial_bpz_residuals(
        spiral_field(2.0, 16 / 3), (0.3, 1.2, 2.6, 4.0), 16 / 3)
    assert aleph == pytest.approx(-33 / 32, abs=1e-6)
    _, aleph, _ = bpz.radial_bpz_residuals(spiral_field(2.0, 4.0), (0.3, 2.1), 4.0)
    assert aleph == pytest.approx(0.125, abs=1e-6)


@pytest.mark.parametrize("kappa", [3.0, 4.0, 16 / 3, 6.0])
def test_zlink_reduces_to_chordal_constant(kappa):
    # at moment order zero the radial system reproduces the chordal one,
    # with constant (6-kappa)(kappa-2)/(8 kappa)
    field = zlink_field(kappa)
    _, aleph, spread = bpz.radial_bpz_residuals(field, (0.2, 2.5), kappa)
    assert aleph == pytest.approx((6 - kappa) * (kappa - 2) / (8 * kappa), abs=1e-6)
    assert spread < 1e-6


def test_mismatched_pairing_is_not_a_solution():
    kappa = 16 / 3
    field = lambda ts: sf.z_link(kappa, ts[0], ts[2]) * sf.z_link(kappa, ts[1], ts[3])
    _, _, spread = bpz.radial_bpz_residuals(field, (0.3, 1.0, 2.0, 3.1), kappa)
    assert spread > 1e-2


@settings(max_examples=20, deadline=None)
@given(st.floats(0.35, 2.6), st.floats(2.8, 5.9))
def test_onearm_spread_stays_small_on_random_tuples(t1, t2):
    per_j, _, spread = bpz.radial_bpz_residuals(onearm_field(16 / 3), (t1, t2), 16 / 3)
    assert spread < 1e-5


# ---------------------------------------------------------------------------
# chordal system


def test_chordal_two_point_solution():
    kappa = 16 / 3
    h = sf.sle_exponents(kappa).h
    field = lambda xs: (xs[1] - xs[0]) ** (-2 * h)
    for j in (1, 2):
        assert abs(bpz.chordal_bpz_lhs(field, (0.0, 1.7), j, kappa)) < 1e-7


def test_chordal_constant_field_at_kappa_six():
    field = lambda xs: 1.0
    for j in (1, 2):
        assert bpz.chordal_bpz_lhs(field, (-1.0, 2.0), j, 6.0) == 0.0


def test_chordal_translation_covariance():
    kappa = 3.0
    h = sf.sle_exponents(kappa).h
    field = lambda xs: (xs[1] - xs[0]) ** (-2 * h)
    a = bpz.chordal_bpz_lhs(field, (0.0, 1.7), 1, kappa)
    b = bpz.chordal_bpz_lhs(field, (1.0, 2.7), 1, kappa)
    # equal up to the finite-difference noise floor
    assert b == pytest.approx(a, abs=1e-8)


def test_chordal_input_validation():
    with pytest.raises(DomainError):
        bpz.chordal_bpz_lhs(lambda xs: 1.0, (2.0, 1.0), 1, 3.0)
    with pytest.raises(DomainError):
        bpz.chordal_bpz_lhs(lambda xs: 1.0, (1.0, 2.0), 5, 3.0)


# ---------------------------------------------------------------------------
# convergence order and log-space variant


def test_fitted_convergence_orders():
    kappa, ts = 3.0, (0.4, 2.3)
    field = onearm_field(kappa)
    ref = bpz.radial_bpz_lhs(field, ts, 1, kappa, bpz.FdScheme(step=2e-4, order=4))

    def err(step, order):
        return bpz.radial_bpz_lhs(field, ts, 1, kappa,
                                  bpz.FdScheme(step=step, order=order)) - ref

    fit2 = math.log2(abs(err(0.02, 2) / err(0.01, 2)))
    assert fit2 == pytest.approx(2.0, abs=0.3)
    # larger steps for order 4, where smaller errors approach the noise floor
    fit4 = math.log2(abs(err(0.2, 4) / err(0.1, 4)))
    assert fit4 == pytest.approx(4.0, abs=0.3)


def test_log_space_matches_linear_space():
    kappa = 16 / 3
    ts = (0.3, 1.2, 2.6, 4.0)
    field = spiral_field(2.0, kappa)
    lin = bpz.radial_bpz_lhs(field, ts, 2, kappa)
    log = bpz.radial_bpz_lhs(field, ts, 2, kappa, bpz.FdScheme(log_space=True))
    assert log == pytest.approx(lin, abs=1e-8)
    # huge constant prefactors are harmless in log space (up to rounding of
    # the large log values, amplified by the 1/h^2 stencil)
    big = lambda t: 1e120 * field(t)
    assert bpz.radial_bpz_lhs(big, ts, 2, kappa, bpz.FdScheme(log_space=True)) \
        == pytest.approx(log, abs=1e-6)


# ---------------------------------------------------------------------------
# rotation invariance


def test_rotation_invariance_of_onearm():
    field = onearm_field(16 / 3)
    assert bpz.rotation_invariance_check(field, (0.3, 2.1), 1.1) < 1e-12
    assert bpz.rotation_invariance_check(field, (0.3, 2.1), 0.0) == 0.0


def test_spiral_breaks_rotation_invariance_by_known_factor():
    mu, kappa = 1.0, 16 / 3
    ts = (0.3, 2.1)
    shift = 1.0
    got = bpz.rotation_invariance_check(spiral_field(mu, kappa), ts, shift)
    assert got == pytest.approx(math.exp(mu * len(ts) * shift / kappa) - 1, rel=1e-9)
