"""Closed-form and series special functions.

SLE exponent bookkeeping, Poisson kernels, the hypergeometric moment function
``phi_cr_moment`` giving side-resolved conformal-radius moments, and the
explicit partition functions used throughout (chordal two-point, one-arm
N=1, spiral family, FK-Ising F).
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import gamma as _gamma

from .errors import ConvergenceError, DomainError

SERIES_RTOL = 1e-15
SERIES_CAP = 100_000
SERIES_U_MAX = 0.985  # beyond this, continue the ODE instead of summing


class PhiSide(enum.Enum):
    RIGHT = "right"
    LEFT = "left"
    TOTAL = "total"

    @staticmethod
    def parse(text) -> "PhiSide":
        if isinstance(text, PhiSide):
            return text
        try:
            return PhiSide(str(text).lower())
        except ValueError:
            raise DomainError(f"unknown side {text!r}; use right/left/total")


@dataclass(frozen=True)
class SleParams:
    kappa: float
    h: float
    h_tilde: float
    r1: float
    r_max: float


def sle_exponents(kappa: float) -> SleParams:
    """Derived exponents h, h-tilde, the one-arm moment order r1, and r_max."""
    _check_kappa(kappa)
    h = (6 - kappa) / (2 * kappa)
    h_tilde = (6 - kappa) * (kappa - 2) / (8 * kappa)
    r1 = (3 * kappa - 8) * (8 - kappa) / (32 * kappa)
    r_max = 1 - kappa / 8
    return SleParams(kappa=kappa, h=h, h_tilde=h_tilde, r1=r1, r_max=r_max)


def _check_kappa(kappa):
    if not 0 < kappa < 8:
        raise DomainError(f"kappa={kappa} outside (0, 8)")


def poisson_kernel_halfplane(x: float, y: float) -> float:
    if x == y:
        raise DomainError("coincident boundary points")
    return abs(y - x) ** -2


def poisson_kernel_disc(theta1: float, theta2: float) -> float:
    s = math.sin((theta2 - theta1) / 2)
    if s == 0:
        raise DomainError("coincident boundary angles")
    return (2 * abs(s)) ** -2


def poisson_kernel(domain: str, a: float, b: float) -> float:
    """Boundary Poisson kernel; domain is 'half_plane' (x, y) or 'disc' (angles)."""
    key = domain.lower()
    if key in ("half_plane", "halfplane", "h"):
        return poisson_kernel_halfplane(a, b)
    if key in ("disc", "disk", "u"):
        return poisson_kernel_disc(a, b)
    raise DomainError(f"unknown domain {domain!r}")


def gauss_2f1(a: float, b: float, c: float, x: float) -> float:
    """Gauss hypergeometric series on |x| < 1.

    Plain forward summation; terminates early when a or b is a non-positive
    integer (the series truncates to a polynomial).
    """
    if abs(c - round(c)) < 1e-8 and round(c) <= 0:
        raise DomainError(f"c={c} is (near) a non-positive integer pole")
    if not abs(x) < 1:
        raise DomainError(f"|x|={abs(x)} outside series disc")
    total = term = 1.0
    for k in range(SERIES_CAP):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * x
        total += term
        if abs(term) <= SERIES_RTOL * max(abs(total), 1e-300):
            return total
    raise ConvergenceError("2F1 series did not converge within term cap")


def _series_sym(s1: float, s2: float, c: float, x: float):
    """Sum of the 2F1-type series with (a)_k (b)_k given via a+b, a*b.

    Works when the upper parameters are a complex-conjugate pair, since
    (a+k)(b+k) = k^2 + s1*k + s2 stays real.  Returns (sum, d/dx sum).
    """
    total = term = 1.0
    deriv = 0.0
    for k in range(SERIES_CAP):
        term *= (k * k + s1 * k + s2) / ((c + k) * (k + 1)) * x
        total += term
        deriv += term * (k + 1) / x if x != 0 else 0.0
        if abs(term) <= SERIES_RTOL * max(abs(total), 1e-300):
            return total, deriv
    raise ConvergenceError("hypergeometric series did not converge within cap")


def _series_sym_vec(s1, s2, c, x):
    """Array version of _series_sym, value only; callers keep |x| <= 1/2."""
    x = np.asarray(x, dtype=float)
    total = np.ones_like(x)
    term = np.ones_like(x)
    for k in range(SERIES_CAP):
        term = term * ((k * k + s1 * k + s2) / ((c + k) * (k + 1))) * x
        total = total + term
        if np.abs(term).max() <= SERIES_RTOL * max(np.abs(total).max(), 1e-300):
            return total
    raise ConvergenceError("hypergeometric series did not converge within cap")


def _phi_params(kappa: float, r: float):
    """ODE data: indicial sum/product of the upper parameters and lower c."""
    c = (3 * kappa - 8) / (2 * kappa)
    rsum = (2 * kappa - 8) / kappa          # a + b
    rprod = -8 * r / kappa                  # a * b
    return c, rsum, rprod


def _vanishing_solution(kappa: float, r: float, u: float):
    """The ODE solution ~ u^(1-c) near 0 (value and derivative), unnormalized."""
    c, rsum, rprod = _phi_params(kappa, r)
    # shift upper parameters by 1-c for the u^(1-c) Frobenius branch
    s1 = rsum + 2 * (1 - c)
    s2 = rprod + (1 - c) * rsum + (1 - c) ** 2
    if u > SERIES_U_MAX:
        # the series converges too slowly this close to u = 1: continue the
        # ODE from mid-interval data instead, in the variable s = -log(1-x)
        # with state (y, y'*(1-x)) so nothing blows up at the endpoint
        v0, d0 = _vanishing_solution(kappa, r, 0.5)

        def rhs(s, state):
            val, q = state
            x = 1 - math.exp(-s)
            dq = -q - c * (1 - 2 * x) * q / x - (8 * r / kappa) * (1 - x) * val / x
            return [q, dq]

        out = solve_ivp(rhs, (math.log(2.0), -math.log1p(-u)), [v0, d0 * 0.5],
                        rtol=1e-12, atol=1e-14, method="RK45")
        if not out.success:
            raise ConvergenceError("ODE continuation failed: " + out.message)
        return out.y[0][-1], out.y[1][-1] / (1 - u)
    f, fp = _series_sym(s1, s2, 2 - c, u)
    val = u ** (1 - c) * f
    dval = (1 - c) * u ** (-c) * f + u ** (1 - c) * fp
    return val, dval


@lru_cache(maxsize=4096)
def _vanishing_at_one(kappa: float, r: float) -> float:
    """Normalization y(1) of the vanishing solution, by Gauss summation.

    The gamma arguments 1-a and 1-b stay off the poles for every admissible
    (kappa, r): real indicial roots satisfy a, b < 1 whenever r < r_max, and
    complex roots come in conjugate pairs, so the product of the two gamma
    factors is a positive real number.
    """
    c, rsum, rprod = _phi_params(kappa, r)
    disc = rsum * rsum - 4 * rprod
    p = (8 - kappa) / (2 * kappa)  # = c - a - b, positive on (0,8)
    root = cmath.sqrt(complex(disc, 0.0))
    a = (rsum + root) / 2
    b = (rsum - root) / 2
    denom = complex(_gamma(1 - a)) * complex(_gamma(1 - b))
    val = _gamma(2 - c) * _gamma(p) / denom
    if abs(val.imag) > 1e-10 * abs(val.real):
        raise ConvergenceError("normalization at u=1 came out non-real")
    out = float(val.real)
    if not math.isfinite(out) or abs(out) < 1e-250:
        raise ConvergenceError("degenerate normalization at u=1")
    return out


@lru_cache(maxsize=4096)
def _regular_at_one_coef(kappa: float, r: float):
    """Coefficient B of the (1-u)^(1-c) branch in the RIGHT solution near u=1.

    The ODE is symmetric under u -> 1-u, so around u=1 the RIGHT branch is
    F_reg(d) + B d^(1-c) F_sing(d) in d = 1-u, with F_reg(0) = Phi(1) = 1
    fixing the regular coefficient.  B comes from one matched evaluation at
    d = 0.3, where both Frobenius series and the mid-interval solution are
    accurate.  Returns None for nonpositive-integer c, where the regular
    series hits a pole (the log-degenerate case).
    """
    c, rsum, rprod = _phi_params(kappa, r)
    if abs(c - round(c)) < 1e-8 and round(c) <= 0:
        return None
    p = 1.0 - c
    d = 0.3
    anchor = _vanishing_solution(kappa, r, 1.0 - d)[0] / _vanishing_at_one(kappa, r)
    f_reg = _series_sym(rsum, rprod, c, d)[0]
    f_sing = _series_sym(rsum + 2 * p, rprod + p * rsum + p * p, 2 - c, d)[0]
    return (anchor - f_reg) / (d ** p * f_sing)


def _phi_right_array(kappa, r, u):
    """RIGHT branch of the moment ODE on an array of interior u values."""
    norm = _vanishing_at_one(kappa, r)
    c, rsum, rprod = _phi_params(kappa, r)
    p = 1.0 - c
    s1 = rsum + 2 * p
    s2 = rprod + p * rsum + p * p
    out = np.empty_like(u)
    lo = u <= 0.5
    if lo.any():
        ul = u[lo]
        out[lo] = ul ** p * _series_sym_vec(s1, s2, 2 - c, ul) / norm
    if (~lo).any():
        d = 1.0 - u[~lo]
        coef = _regular_at_one_coef(kappa, r)
        if coef is None:
            # log-degenerate exponents: fall back to the scalar path per element
            out[~lo] = [_vanishing_solution(kappa, r, x)[0] / norm
                        for x in u[~lo]]
        else:
            out[~lo] = (_series_sym_vec(rsum, rprod, c, d)
                        + coef * d ** p * _series_sym_vec(s1, s2, 2 - c, d))
    return out


def phi_cr_moment(kappa: float, r: float, u, side=PhiSide.TOTAL):
    """Side-resolved moment function Phi(kappa, r; u).

    Solves u(1-u)Phi'' + ((3k-8)/(2k))(1-2u)Phi' + (8r/k)Phi = 0 with the
    probabilistic boundary data: the RIGHT branch vanishes at u=0 and is 1 at
    u=1, the LEFT branch is its reflection u -> 1-u, TOTAL is their sum.
    Accepts a scalar u (returns float) or an array (returns an array, for
    weighting whole batches of stopped paths at once).
    """
    _check_kappa(kappa)
    side = PhiSide.parse(side)
    if r >= 1 - kappa / 8:
        raise DomainError(
            f"moment order r={r} at kappa={kappa} exceeds r_max={1 - kappa / 8}: "
            "the conformal-radius moment diverges")
    arr = np.asarray(u, dtype=float)
    if arr.ndim > 0:
        if arr.size and not ((arr > 0) & (arr < 1)).all():
            raise DomainError("u values must lie strictly inside (0, 1)")
        if side is PhiSide.RIGHT:
            return _phi_right_array(kappa, r, arr)
        if side is PhiSide.LEFT:
            return _phi_right_array(kappa, r, 1.0 - arr)
        return (_phi_right_array(kappa, r, arr)
                + _phi_right_array(kappa, r, 1.0 - arr))
    if not 0 < u < 1:
        raise DomainError(f"u={u} outside (0, 1)")
    norm = _vanishing_at_one(kappa, r)
    if side is PhiSide.RIGHT:
        return _vanishing_solution(kappa, r, u)[0] / norm
    if side is PhiSide.LEFT:
        return _vanishing_solution(kappa, r, 1 - u)[0] / norm
    right = _vanishing_solution(kappa, r, u)[0]
    left = _vanishing_solution(kappa, r, 1 - u)[0]
    return (right + left) / norm


def onearm_cr_formulas(kappa: float, theta: float):
    """Closed-form (right, left, total) one-arm CR moments at r = r1(kappa)."""
    _check_kappa(kappa)
    if not 0 < theta < 2 * math.pi:
        raise DomainError(f"theta={theta} outside (0, 2*pi)")
    expo = 8 / kappa - 1
    right = math.sin(theta / 4) ** expo
    left = math.cos(theta / 4) ** expo
    return right, left, right + left


def z_link(kappa: float, theta1: float, theta2: float) -> float:
    """Two-point chordal partition function in the disc."""
    _check_kappa(kappa)
    _check_ordered_pair(theta1, theta2)
    h = sle_exponents(kappa).h
    return (2 * math.sin((theta2 - theta1) / 2)) ** (-2 * h)


def g_onearm_n1(kappa: float, theta1: float, theta2: float) -> float:
    """Explicit N=1 one-arm partition function; rotation invariant."""
    _check_kappa(kappa)
    _check_ordered_pair(theta1, theta2)
    theta = theta2 - theta1
    return (math.sin(theta / 2) ** (1 - 6 / kappa)
            * math.sin(theta / 4) ** (8 / kappa - 1))


def _check_ordered_pair(theta1, theta2):
    if not theta1 < theta2 < theta1 + 2 * math.pi:
        raise DomainError("need theta1 < theta2 < theta1 + 2*pi")


def validate_angle_tuple(thetas) -> tuple:
    """Check membership in the configuration space X_{2N} and return a tuple."""
    ts = tuple(float(t) for t in thetas)
    if len(ts) < 2 or len(ts) % 2:
        raise DomainError("angle tuple must have even length 2N >= 2")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise DomainError("angles must be strictly increasing")
    if ts[-1] - ts[0] >= 2 * math.pi:
        raise DomainError("angles must fit within one period")
    return ts


def spiral_partition(mu: float, kappa: float, thetas) -> float:
    """Spiral family: pairwise sine product times the spiraling exponential."""
    _check_kappa(kappa)
    ts = validate_angle_tuple(thetas)
    log_val = (mu / kappa) * sum(ts)
    for i in range(len(ts)):
        for j in range(i + 1, len(ts)):
            log_val += (2 / kappa) * math.log(math.sin((ts[j] - ts[i]) / 2))
    return math.exp(log_val)


def chi(t1: float, t2: float, t3: float, t4: float) -> float:
    """Sine cross-ratio of four boundary angles.

    Absolute values make the sign of the half-angle sines irrelevant, so no
    ordering normalization is needed; only the denominator pairs (t1,t3) and
    (t2,t4) may not coincide on the circle.
    """
    num = math.sin((t2 - t1) / 2) * math.sin((t4 - t3) / 2)
    den = math.sin((t3 - t1) / 2) * math.sin((t4 - t2) / 2)
    if den == 0:
        raise DomainError("degenerate chi arguments: denominator angles coincide")
    return abs(num / den)


def f_ising(thetas) -> float:
    """FK-Ising boundary function F: sine prefactor times the mu-sum square root."""
    ts = validate_angle_tuple(thetas)
    n = len(ts) // 2
    pref = 1.0
    for s in range(n):
        pref *= math.sin((ts[2 * s + 1] - ts[2 * s]) / 2) ** (-1 / 8)
    total = 0.0
    for bits in range(1 << n):
        mu = [1 if bits >> s & 1 else -1 for s in range(n)]
        term = 1.0
        for s in range(n):
            for t in range(s + 1, n):
                x = chi(ts[2 * s], ts[2 * t], ts[2 * t + 1], ts[2 * s + 1])
                term *= x ** (mu[s] * mu[t] / 4)
        total += term
    return pref * math.sqrt(total)
