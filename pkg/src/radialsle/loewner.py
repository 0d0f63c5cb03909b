"""Deterministic radial Loewner machinery.

Covering-map evolution of marked boundary angles, curve tracing by reverse
flow, capacity/conformal-radius accounting, and Koebe sanity bounds.  Time is
always capacity time: the derivative of the uniformizing map at the origin is
e^t, so the conformal radius of the unexplored domain is e^{-t} for free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConvergenceError, DomainError, GeometryError
from .rng import RandomStream

EPS_HIT = 1e-5          # covering gap below this counts as disconnection
DELTA_LIFT = 1e-6       # radial lift off the driving singularity for tracing
MAX_SUBSTEPS = 4096


@dataclass(frozen=True)
class DrivingPath:
    """Sampled driving function: xi at strictly increasing times from 0."""

    times: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        xi = np.asarray(self.xi, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "xi", xi)
        if times.ndim != 1 or times.shape != xi.shape or len(times) == 0:
            raise DomainError("times and xi must be equal-length 1-d arrays")
        if times[0] != 0.0:
            raise DomainError("driving path must start at time 0")
        dt = np.diff(times)
        if len(dt) and dt.min() <= 0:
            raise DomainError("times must be strictly increasing")
        if len(dt):
            cap = 2.0 + 10.0 * np.sqrt(dt)
            if (np.abs(np.diff(xi)) > cap).any():
                raise DomainError("driving increment exceeds the sanity cap")

    @property
    def duration(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class HullTrace:
    """Curve points in the closed disc, one per emitted capacity."""

    points: np.ndarray
    capacities: np.ndarray
    t_disconnect: Optional[float] = None

    def __post_init__(self):
        if len(self.points) != len(self.capacities):
            raise DomainError("points and capacities must align")
        if (np.abs(self.points) > 1 + 1e-9).any():
            raise DomainError("trace left the closed unit disc")


@dataclass(frozen=True)
class CoveringPath:
    """Marked-angle images phi and log phi' along a driving path."""

    times: np.ndarray
    phi: np.ndarray        # shape (n_times, n_marked)
    log_dphi: np.ndarray   # same shape
    disconnected: bool = False
    t_disconnect: Optional[float] = None


def _check_marked(thetas, xi0: float):
    ts = tuple(float(t) for t in thetas)
    if not ts:
        raise DomainError("need at least one marked angle")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise DomainError("marked angles must be strictly increasing")
    for t in ts:
        gap = (t - xi0) % (2 * math.pi)
        if gap < EPS_HIT or gap > 2 * math.pi - EPS_HIT:
            raise GeometryError("marked angle starts on the driving point")
    return ts


def evolve_covering(thetas, driving: DrivingPath) -> CoveringPath:
    """Integrate the marked-angle flow d(phi)/dt = cot((phi - xi)/2).

    log phi' follows d(log phi')/dt = -csc^2((phi - xi)/2)/2.  Both use
    classical RK4 with xi interpolated linearly inside each driving step.
    A marked gap collapsing onto the driving point is a disconnection
    signal: integration stops there and the path is returned truncated.
    """
    ts = _check_marked(thetas, float(driving.xi[0]))
    times = driving.times
    m = len(ts)
    phi = np.empty((len(times), m))
    ldp = np.empty((len(times), m))
    # work with gaps relative to xi_0 lifted into (0, 2pi)
    phi[0] = [(t - driving.xi[0]) % (2 * math.pi) + driving.xi[0] for t in ts]
    ldp[0] = 0.0

    def rhs(p, xival):
        half = (p - xival) / 2
        s = np.sin(half)
        return np.cos(half) / s, -0.5 / (s * s)

    def collapsed(gaps):
        return (gaps < EPS_HIT).any() or (gaps > 2 * math.pi - EPS_HIT).any()

    for k in range(1, len(times)):
        h = times[k] - times[k - 1]
        x0, x1 = driving.xi[k - 1], driving.xi[k]
        # driving landing on a marked image is already a collision
        if collapsed((phi[k - 1] - x1) % (2 * math.pi)):
            return CoveringPath(times[:k], phi[:k], ldp[:k],
                                disconnected=True, t_disconnect=float(times[k]))
        xm = 0.5 * (x0 + x1)
        p = phi[k - 1].copy()
        l = ldp[k - 1].copy()
        k1p, k1l = rhs(p, x0)
        k2p, k2l = rhs(p + h / 2 * k1p, xm)
        k3p, k3l = rhs(p + h / 2 * k2p, xm)
        k4p, k4l = rhs(p + h * k3p, x1)
        phi[k] = p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        ldp[k] = l + h / 6 * (k1l + 2 * k2l + 2 * k3l + k4l)
        # a step moving phi by over a radian, or wiping ten decades off
        # phi', means the grid failed to resolve a near-collision
        wild = (np.abs(phi[k] - p) > 1.0).any() \
            or (ldp[k] - l < -23.0).any()
        if wild or not np.isfinite(phi[k]).all() \
                or collapsed((phi[k] - driving.xi[k]) % (2 * math.pi)):
            return CoveringPath(times[:k], phi[:k], ldp[:k],
                                disconnected=True, t_disconnect=float(times[k]))
    return CoveringPath(times, phi, ldp)


def _reverse_rhs(w, xival):
    e = np.exp(1j * xival)
    return w * (e + w) / (e - w)


def _rk4_span(w, sa, sb, s0, s1, x0, x1):
    """One RK4 step from sa to sb; xi linear on [s1, s0] (s decreasing)."""
    span = s1 - s0

    def xi_at(s):
        return x0 + (x1 - x0) * ((s - s0) / span) if span else x0

    h = sb - sa  # negative
    k1 = _reverse_rhs(w, xi_at(sa))
    k2 = _reverse_rhs(w + h / 2 * k1, xi_at(sa + h / 2))
    k3 = _reverse_rhs(w + h / 2 * k2, xi_at(sa + h / 2))
    k4 = _reverse_rhs(w + h * k3, xi_at(sb))
    return w + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_fixed(w, s0, s1, x0, x1, nsub):
    """nsub equal RK4 steps from s0 down to s1 (vectorized over w)."""
    grid = np.linspace(s0, s1, nsub + 1)
    for sa, sb in zip(grid[:-1], grid[1:]):
        w = _rk4_span(w, sa, sb, s0, s1, x0, x1)
    return w


def _rk4_geometric(w, s0, s1, x0, x1):
    """Gap-proportional steps for a single point near the singularity.

    The backward flow repels the point off e^{i xi}, so step sizes grow
    geometrically and the interval finishes in O(log) steps.
    """
    s = s0
    span = s0 - s1
    for _ in range(MAX_SUBSTEPS):
        if s <= s1 + 1e-18 * max(1.0, abs(s1)):
            return w
        frac = (s - s0) / (s1 - s0) if s1 != s0 else 0.0
        gap = abs(w - np.exp(1j * (x0 + (x1 - x0) * frac)))
        h = min(s - s1, max(gap * gap / 8, span * 1e-12))
        w = _rk4_span(w, s, s - h, s0, s1, x0, x1)
        s -= h
    raise ConvergenceError("reverse flow stalled near the driving singularity")


GAP_FAR = 0.02
MAX_FIXED_SUB = 64


def _advance_interval(active, s0, s1, x0, x1):
    """March the whole active vector down one driving interval."""
    h = s0 - s1
    gap = np.abs(active - np.exp(1j * x0))
    with np.errstate(divide="ignore", over="ignore"):
        raw = np.ceil(8.0 * h / np.maximum(gap * gap, 1e-300))
    out = np.empty_like(active)
    near = (gap < GAP_FAR) | ~(raw <= MAX_FIXED_SUB)
    for i in np.nonzero(near)[0]:
        out[i] = _rk4_geometric(complex(active[i]), s0, s1, x0, x1)
    need = np.clip(raw, 1, MAX_FIXED_SUB).astype(int)
    need[near] = 0
    for count in np.unique(need[~near]) if (~near).any() else []:
        mask = need == count
        out[mask] = _rk4_fixed(active[mask], s0, s1, x0, x1, int(count))
    return out


def trace_curve(driving: DrivingPath, dt: float) -> HullTrace:
    """Trace the curve by reverse-flow evaluation at capacity multiples of dt.

    Each emitted time t_k contributes the backward solution started at the
    lifted point (1 - DELTA_LIFT) e^{i xi(t_k)}; all started points march
    down together, so the total cost is one sweep over the driving grid with
    a growing active vector.  Per-interval substeps scale with the inverse
    squared distance to the driving singularity.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    times = driving.times
    # emit at the first grid time reaching each multiple of dt, plus t=0
    emit: list[int] = [0]
    next_t = dt
    for k in range(1, len(times)):
        if times[k] >= next_t - 1e-12:
            emit.append(k)
            next_t = times[k] + dt
    emit_set = set(emit)

    active = np.zeros(0, dtype=complex)
    order: list[int] = []  # emit indices in activation order (descending k)
    done: dict[int, complex] = {}
    for k in range(len(times) - 1, 0, -1):
        if k in emit_set:
            active = np.append(active,
                               (1 - DELTA_LIFT) * np.exp(1j * driving.xi[k]))
            order.append(k)
        if len(active) == 0:
            continue
        s0, s1 = times[k], times[k - 1]
        x0, x1 = driving.xi[k], driving.xi[k - 1]
        out = _advance_interval(active, s0, s1, x0, x1)
        if not np.isfinite(out).all() or (np.abs(out) > 1 + 1e-6).any():
            raise ConvergenceError(
                f"reverse flow blew up integrating {times[k]:.6g} -> "
                f"{times[k-1]:.6g}")
        active = out
    for idx, k in enumerate(order):
        done[k] = active[idx]
    done[0] = np.exp(1j * driving.xi[0])

    caps = np.array([times[k] for k in emit])
    pts = np.array([done[k] for k in emit])
    pts = np.where(np.abs(pts) > 1.0, pts / np.abs(pts), pts)
    return HullTrace(points=pts, capacities=caps)


def conformal_radius_component(trace: HullTrace, t: float) -> float:
    """Conformal radius of the origin component at capacity t: e^{-t}."""
    if t < 0 or t > trace.capacities[-1] + 1e-12:
        raise DomainError("t outside the computed capacity range")
    if trace.t_disconnect is not None and t >= trace.t_disconnect:
        raise DomainError("origin already disconnected at this capacity")
    return math.exp(-t)


def koebe_check(trace: HullTrace, t: float, tol: float = 0.05):
    """Distance-to-origin vs conformal radius: dist <= cr <= 4 dist.

    dist0 is measured to the traced points up to capacity t and to the unit
    circle; tol loosens both ends for discretization.
    """
    cr = conformal_radius_component(trace, t)
    mask = trace.capacities <= t + 1e-12
    dist0 = 1.0
    if mask.any():
        dist0 = min(1.0, float(np.abs(trace.points[mask]).min()))
    ok = dist0 * (1 - tol) <= cr <= 4 * dist0 * (1 + tol)
    return dist0, cr, ok


def sample_radial_sle(kappa: float, theta0: float, T: float, dt: float,
                      stream: RandomStream) -> DrivingPath:
    """Brownian driving path xi_t = theta0 + sqrt(kappa) B_t on a dt grid."""
    if not 0 <= kappa < 8:
        raise DomainError(f"kappa={kappa} outside [0, 8)")
    if T <= 0 or dt <= 0:
        raise DomainError("T and dt must be positive")
    nsteps = max(1, int(round(T / dt)))
    times = np.linspace(0.0, T, nsteps + 1)
    h = times[1] - times[0]
    draws = stream.generator().standard_normal(nsteps)
    xi = np.empty(nsteps + 1)
    xi[0] = theta0
    xi[1:] = theta0 + np.cumsum(math.sqrt(kappa * h) * draws)
    return DrivingPath(times=times, xi=xi)
