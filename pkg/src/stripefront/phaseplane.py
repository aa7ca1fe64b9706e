"""Phase-plane flow of the inner equation V'' + f(V) = 0.

Shooting works in the (V, V') plane: trajectories are launched on the
line w = +sqrt(alpha) v, transported by the flow over the stripe width
2R, and compared against the target line w = -sqrt(alpha) v.  The flow
is Hamiltonian with invariant w^2/2 + potential(v), which the tests use
as a conservation oracle.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .model import Params, Regime, reaction, reaction_potential

__all__ = [
    "PhasePoint",
    "CurveSample",
    "Trajectory",
    "BlowUpError",
    "BLOWUP_SENTINEL",
    "flow",
    "flow_dense",
    "hamiltonian",
    "launch_point",
    "line_residual",
    "sample_image_of_line",
    "homoclinic_crossing",
    "write_curve_csv",
]

# Residual value reported for trajectories that left the region of
# interest; always accompanied by an explicit blew_up flag.
BLOWUP_SENTINEL = 1.0e6

_RTOL = 1e-10
_ATOL = 1e-12


class PhasePoint(NamedTuple):
    v: float
    w: float


@dataclass(frozen=True)
class Trajectory:
    """Densely sampled flow trajectory."""

    y: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @property
    def endpoint(self) -> PhasePoint:
        return PhasePoint(float(self.v[-1]), float(self.w[-1]))


@dataclass(frozen=True)
class CurveSample:
    """One point of the transported launch line.

    s is the shooting parameter (launch abscissa), endpoint the state
    after flowing over the stripe width, residual the signed distance
    marker w + sqrt(alpha) v at the endpoint.
    """

    s: float
    endpoint: PhasePoint
    residual: float
    blew_up: bool


class BlowUpError(RuntimeError):
    """Trajectory left |v|, |w| <= bound before the requested length."""

    def __init__(self, y: float, state: PhasePoint, bound: float):
        super().__init__(f"trajectory escaped |v|,|w| <= {bound} at y={y:.6g}")
        self.y = y
        self.state = state
        self.bound = bound


def hamiltonian(pt: PhasePoint, p: Params) -> float:
    """Conserved quantity w^2/2 + potential(v) of the inner flow."""
    v, w = pt
    return 0.5 * w * w + reaction_potential(v, p)


def launch_point(s: float, p: Params) -> PhasePoint:
    """Point of the launch line w = sqrt(alpha) v at abscissa s."""
    return PhasePoint(float(s), p.sqrt_alpha * float(s))


def _integrate(start, length, p, bound, reverse, rtol, atol, dense):
    sgn = -1.0 if reverse else 1.0

    def rhs(y, z):
        return (sgn * z[1], -sgn * reaction(z[0], p))

    def escape(y, z):
        return max(abs(z[0]), abs(z[1])) - bound

    escape.terminal = True
    escape.direction = 1.0
    sol = solve_ivp(rhs, (0.0, length), [start[0], start[1]], method="DOP853",
                    rtol=rtol, atol=atol, events=escape, dense_output=dense)
    if sol.status == 1:
        y_stop = float(sol.t_events[0][0])
        z = sol.y_events[0][0]
        raise BlowUpError(y_stop, PhasePoint(float(z[0]), float(z[1])), bound)
    if sol.status != 0:
        raise RuntimeError(f"flow integration failed: {sol.message}")
    return sol


def flow(start: PhasePoint, length: float, p: Params, *, bound: float = 10.0,
         reverse: bool = False, rtol: float = _RTOL, atol: float = _ATOL) -> PhasePoint:
    """Transport a phase point by the inner flow over the given length.

    With reverse=True the time-reversed field is integrated instead,
    which undoes a forward flow of the same length.  Raises BlowUpError
    if the trajectory leaves |v|, |w| <= bound.
    """
    if length < 0:
        raise ValueError("length must be >= 0 (use reverse=True to go back)")
    if length == 0.0:
        return PhasePoint(float(start[0]), float(start[1]))
    sol = _integrate(start, length, p, bound, reverse, rtol, atol, dense=False)
    return PhasePoint(float(sol.y[0, -1]), float(sol.y[1, -1]))


def flow_dense(start: PhasePoint, length: float, p: Params, n: int = 513, *,
               bound: float = 10.0, reverse: bool = False,
               rtol: float = _RTOL, atol: float = _ATOL) -> Trajectory:
    """Like :func:`flow` but returns the whole trajectory on n points."""
    if length < 0:
        raise ValueError("length must be >= 0")
    ys = np.linspace(0.0, length, n)
    if length == 0.0:
        return Trajectory(ys, np.full(n, float(start[0])), np.full(n, float(start[1])))
    sol = _integrate(start, length, p, bound, reverse, rtol, atol, dense=True)
    z = sol.sol(ys)
    return Trajectory(ys, z[0], z[1])


def line_residual(s: float, p: Params, *, bound: float = 10.0,
                  rtol: float = _RTOL, atol: float = _ATOL) -> CurveSample:
    """Flow the launch point at abscissa s over 2R and measure the residual.

    If the trajectory escapes, the residual is +-BLOWUP_SENTINEL with the
    sign of the residual at escape and the sample is flagged.
    """
    start = launch_point(s, p)
    if s == 0.0:
        return CurveSample(0.0, PhasePoint(0.0, 0.0), 0.0, False)
    try:
        end = flow(start, 2.0 * p.R, p, bound=bound, rtol=rtol, atol=atol)
    except BlowUpError as err:
        r = err.state.w + p.sqrt_alpha * err.state.v
        return CurveSample(float(s), err.state, math.copysign(BLOWUP_SENTINEL, r), True)
    return CurveSample(float(s), end, end.w + p.sqrt_alpha * end.v, False)


def _endpoint_gap(a: CurveSample, b: CurveSample) -> float:
    return math.hypot(a.endpoint.v - b.endpoint.v, a.endpoint.w - b.endpoint.w)


def sample_image_of_line(p: Params, s_max: float = 2.0, n: int = 64, *,
                         bound: float = 10.0, fold_gap: float = 0.05,
                         max_depth: int = 20) -> list[CurveSample]:
    """Sample the transported launch line for shooting abscissas in [0, s_max].

    Starts from a graded grid (quadratic towards 0, where roots pile up
    for thick stripes) and refines dyadically wherever the residual
    changes sign or adjacent endpoints are further apart than fold_gap,
    so that folds of the transported curve cannot hide a sign change.
    Escaped samples are flagged, never dropped.
    """
    if s_max <= 0:
        raise ValueError("s_max must be > 0")
    if n < 2:
        raise ValueError("n must be >= 2")

    grid = s_max * (np.arange(n) / (n - 1)) ** 2
    samples = {float(s): line_residual(float(s), p, bound=bound) for s in grid}

    sign_floor = s_max * 2.0 ** -12  # sign-change brackets this tight suffice for polishing
    fold_floor = s_max * 2.0 ** -float(max_depth)
    # (s_lo, s_hi, depth) intervals still subject to refinement
    stack = [(float(grid[i]), float(grid[i + 1]), 0) for i in range(n - 1)]
    while stack:
        lo, hi, depth = stack.pop()
        if depth >= max_depth:
            continue
        a, b = samples[lo], samples[hi]
        gap = hi - lo
        split = False
        if np.sign(a.residual) * np.sign(b.residual) < 0 and gap > sign_floor:
            split = True
        elif _endpoint_gap(a, b) > fold_gap and gap > fold_floor:
            if a.blew_up and b.blew_up and depth >= 6:
                split = False  # same-sign escape plateau, nothing to resolve
            else:
                split = True
        if not split:
            continue
        mid = 0.5 * (lo + hi)
        if mid not in samples:
            samples[mid] = line_residual(mid, p, bound=bound)
        stack.append((lo, mid, depth + 1))
        stack.append((mid, hi, depth + 1))

    return [samples[s] for s in sorted(samples)]


def homoclinic_crossing(p: Params) -> Regime:
    """Whether the launch line enters the homoclinic loop of the inner flow.

    The loop's tangent at the origin is the eigenvector (1, sqrt(a*lam))
    of the linearised flow, so the launch line w = sqrt(alpha) v starts
    inside exactly when alpha < a*lam.  Equality is assigned to the
    outside (False), matching the ">=" branch of the profile count
    dichotomy.
    """
    return Regime(supercritical_line=bool(p.alpha < p.a * p.lam))


def write_curve_csv(samples: list[CurveSample], path) -> None:
    """Write samples as CSV with columns s, v_end, w_end, residual, flag."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "v_end", "w_end", "residual", "flag"])
        for smp in samples:
            writer.writerow([repr(smp.s), repr(smp.endpoint.v), repr(smp.endpoint.w),
                             repr(smp.residual), int(smp.blew_up)])
