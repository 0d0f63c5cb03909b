"""Finite-difference residuals for the radial and chordal null-field systems.

A candidate partition function is passed in as a plain callable on angle (or
half-plane coordinate) tuples.  Derivatives are replaced by central
differences, so a true solution shows a residual at the size of the stencil
truncation error, and the same constant across all variable indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import fmean
from typing import Callable, Sequence

from .errors import DomainError, GeometryError
from .specfun import sle_exponents, validate_angle_tuple

Field = Callable[[Sequence[float]], float]


@dataclass(frozen=True)
class FdScheme:
    """Central-difference scheme: step in radians, order 2 or 4.

    With log_space set, log F is differenced instead and dF/F, d2F/F are
    reconstructed; better conditioned when F spans many orders of magnitude.
    """

    step: float = 1e-3
    order: int = 4
    log_space: bool = False

    def __post_init__(self):
        if self.step <= 0:
            raise DomainError("step must be positive")
        if self.order not in (2, 4):
            raise DomainError("order must be 2 or 4")

    @property
    def reach(self) -> float:
        return self.step * (2 if self.order == 4 else 1)


def _eval_positive(field: Field, point) -> float:
    val = field(point)
    if not val > 0:
        raise DomainError(f"field must be positive on the stencil, got {val}")
    return val


def _stencil_values(field: Field, point, j0: int, scheme: FdScheme):
    """Field values at offsets -2h..2h in coordinate j0 (order 2 skips +-2h)."""

    def at(offset):
        shifted = list(point)
        shifted[j0] += offset
        return _eval_positive(field, tuple(shifted))

    h = scheme.step
    if scheme.order == 2:
        return at(-h), at(0.0), at(h)
    return at(-2 * h), at(-h), at(0.0), at(h), at(2 * h)


def _d1_d2_over_f(field: Field, point, j0: int, scheme: FdScheme):
    """(dF/F, d2F/F) in coordinate j0 by central differences."""
    h = scheme.step
    vals = _stencil_values(field, point, j0, scheme)
    if scheme.log_space:
        vals = tuple(math.log(v) for v in vals)
    if scheme.order == 2:
        fm, f0, fp = vals
        d1 = (fp - fm) / (2 * h)
        d2 = (fp - 2 * f0 + fm) / (h * h)
    else:
        fm2, fm, f0, fp, fp2 = vals
        d1 = (-fp2 + 8 * fp - 8 * fm + fm2) / (12 * h)
        d2 = (-fp2 + 16 * fp - 30 * f0 + 16 * fm - fm2) / (12 * h * h)
    if scheme.log_space:
        # F = exp(L): F'/F = L', F''/F = L'' + L'^2
        return d1, d2 + d1 * d1
    return d1 / f0, d2 / f0


def _check_radial_stencil(ts, j0: int, scheme: FdScheme):
    lo = ts[j0] - scheme.reach
    hi = ts[j0] + scheme.reach
    if j0 > 0 and lo <= ts[j0 - 1]:
        raise GeometryError("stencil collides with the previous angle")
    if j0 + 1 < len(ts) and hi >= ts[j0 + 1]:
        raise GeometryError("stencil collides with the next angle")
    if (ts[-1] + (scheme.reach if j0 == len(ts) - 1 else 0)
            - (ts[0] - (scheme.reach if j0 == 0 else 0))) >= 2 * math.pi:
        raise GeometryError("stencil leaves the fundamental rotation domain")


def radial_bpz_lhs(field: Field, thetas, j: int, kappa: float,
                   scheme: FdScheme = FdScheme()) -> float:
    """Left side of the j-th radial null-field equation, j counted from 1.

    For a genuine solution this is the same constant for every j.
    """
    ts = validate_angle_tuple(thetas)
    if not 1 <= j <= len(ts):
        raise DomainError(f"j={j} out of range 1..{len(ts)}")
    j0 = j - 1
    _check_radial_stencil(ts, j0, scheme)
    _eval_positive(field, ts)
    _, d2 = _d1_d2_over_f(field, ts, j0, scheme)
    out = kappa / 2 * d2
    coef = (6 - kappa) / (4 * kappa)
    for i0 in range(len(ts)):
        if i0 == j0:
            continue
        d1_i, _ = _d1_d2_over_f(field, ts, i0, scheme)
        half = (ts[i0] - ts[j0]) / 2
        out += d1_i / math.tan(half) - coef / math.sin(half) ** 2
    return out


def radial_bpz_residuals(field: Field, thetas, kappa: float,
                         scheme: FdScheme = FdScheme()):
    """Per-j left sides plus their mean and max-min spread.

    The spread is the pass/fail statistic: a solution solves all 2N
    equations with one shared constant.
    """
    ts = validate_angle_tuple(thetas)
    per_j = [radial_bpz_lhs(field, ts, j, kappa, scheme)
             for j in range(1, len(ts) + 1)]
    return per_j, fmean(per_j), max(per_j) - min(per_j)


def chordal_bpz_lhs(field: Field, xs, j: int, kappa: float,
                    scheme: FdScheme = FdScheme()) -> float:
    """Left side of the j-th chordal null-field equation on the real line."""
    pts = tuple(float(x) for x in xs)
    if len(pts) < 2 or any(b <= a for a, b in zip(pts, pts[1:])):
        raise DomainError("need strictly increasing coordinates")
    if not 1 <= j <= len(pts):
        raise DomainError(f"j={j} out of range 1..{len(pts)}")
    j0 = j - 1
    reach = scheme.reach
    if j0 > 0 and pts[j0] - reach <= pts[j0 - 1]:
        raise GeometryError("stencil collides with the previous point")
    if j0 + 1 < len(pts) and pts[j0] + reach >= pts[j0 + 1]:
        raise GeometryError("stencil collides with the next point")
    _eval_positive(field, pts)
    h = sle_exponents(kappa).h
    _, d2 = _d1_d2_over_f(field, pts, j0, scheme)
    out = kappa / 2 * d2
    for i0 in range(len(pts)):
        if i0 == j0:
            continue
        d1_i, _ = _d1_d2_over_f(field, pts, i0, scheme)
        gap = pts[i0] - pts[j0]
        out += 2 / gap * d1_i - 2 * h / gap ** 2
    return out


def rotation_invariance_check(field: Field, thetas, shift: float) -> float:
    """Relative change of the field under rotating every angle by shift."""
    ts = validate_angle_tuple(thetas)
    shifted = tuple(t + shift for t in ts)
    base = _eval_positive(field, ts)
    return abs(field(shifted) - base) / base
