"""Evolution on the 2D strip and front-speed measurement.

The field diffuses on [0, Lx] x [-Ly, Ly], reacts inside the stripe
|y| <= R and is absorbed outside it.  A supra-threshold slab against the
left wall ("standard bump") is the canonical stimulation; depending on
the stripe half-thickness the excited region collapses, shrinks behind a
retreating front, or spreads behind an advancing one.  The front is
tracked as the half-level crossing of the midline trace u(x, 0, t).

Time stepping is ADI (Peaceman-Rachford) for diffusion with the
reaction split into explicit half-steps, or fully explicit on request;
both respect the reaction monotonicity bound of the 1D scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_banded

from .model import Params, reaction
from .sim1d import dt_max

__all__ = [
    "Field2D",
    "Trajectory2D",
    "FrontMeasurement",
    "RegimeLabel",
    "NoInterface",
    "AmbiguousRegime",
    "COLLAPSE",
    "SHRINKING",
    "SPREADING",
    "standard_bump",
    "run2d",
    "front_speed",
    "level_width",
    "classify_regime",
]

RegimeLabel = str
COLLAPSE: RegimeLabel = "collapse"
SHRINKING: RegimeLabel = "shrinking"
SPREADING: RegimeLabel = "spreading"

LEVEL = 0.5
BUMP_LENGTH = 10.0


class NoInterface(RuntimeError):
    """The midline trace never crosses the tracking level."""


class AmbiguousRegime(RuntimeError):
    """R sits within 2% of a critical thickness; classification refused."""


@dataclass(frozen=True)
class Field2D:
    """Discretised state on the truncated strip."""

    p: Params
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray  # shape (ny, nx)
    t: float = 0.0

    def __post_init__(self):
        if self.u.shape != (len(self.y), len(self.x)):
            raise ValueError("u must have shape (len(y), len(x))")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("field values must be finite")
        tail_room = self.p.R + 6.0 / self.p.sqrt_alpha
        if self.y[-1] <= tail_room:
            raise ValueError(f"need Ly > R + 6/sqrt(alpha) = {tail_room:.3g}, got {self.y[-1]:.3g}")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])

    @property
    def midline(self) -> np.ndarray:
        return self.u[np.argmin(np.abs(self.y)), :]


class FrontMeasurement(NamedTuple):
    c: float
    fit_window: tuple[float, float]
    fit_residual: float


@dataclass(frozen=True)
class Trajectory2D:
    """Recorded strip evolution: midline traces plus sparse full fields."""

    times: np.ndarray
    midlines: np.ndarray          # (n_records, nx)
    widths: np.ndarray            # half-level width of the midline
    masses: np.ndarray            # grid integral of u
    x: np.ndarray
    snapshot_times: tuple[float, ...]
    snapshots: tuple[np.ndarray, ...]
    final: Field2D


def standard_bump(p: Params, *, nx: int = 400, ny: int = 200, Lx: float = 80.0,
                  Ly: float | None = None) -> Field2D:
    """Canonical stimulation: u = 1 on {x < 10, |y| < R}, one diffusion
    step of smoothing."""
    if Ly is None:
        Ly = p.R + 8.0 / p.sqrt_alpha
    x = np.linspace(0.0, Lx, nx)
    y = np.linspace(-Ly, Ly, ny)
    u = np.zeros((ny, nx))
    u[np.ix_(np.abs(y) < p.R, x < BUMP_LENGTH)] = 1.0
    field = Field2D(p=p, x=x, y=y, u=u, t=0.0)
    dt0 = min(field.dx, field.dy) ** 2 / 4.0
    u = u + dt0 * _laplacian(field, u)
    u[0, :] = 0.0
    u[-1, :] = 0.0
    return Field2D(p=p, x=x, y=y, u=u, t=0.0)


def _laplacian(field: Field2D, u: np.ndarray) -> np.ndarray:
    dx2, dy2 = field.dx ** 2, field.dy ** 2
    out = np.zeros_like(u)
    out[:, 1:-1] += (u[:, 2:] - 2.0 * u[:, 1:-1] + u[:, :-2]) / dx2
    out[:, 0] += 2.0 * (u[:, 1] - u[:, 0]) / dx2      # Neumann walls in x
    out[:, -1] += 2.0 * (u[:, -2] - u[:, -1]) / dx2
    out[1:-1, :] += (u[2:, :] - 2.0 * u[1:-1, :] + u[:-2, :]) / dy2
    return out


def _reaction_term(field: Field2D, u: np.ndarray, inside: np.ndarray) -> np.ndarray:
    return np.where(inside[:, None], reaction(u, field.p), -field.p.alpha * u)


def _adi_matrices(field: Field2D, dt: float) -> tuple[np.ndarray, np.ndarray]:
    nx, ny = len(field.x), len(field.y)
    rx = dt / (2.0 * field.dx ** 2)
    ry = dt / (2.0 * field.dy ** 2)
    ab_x = np.zeros((3, nx))
    ab_x[1, :] = 1.0 + 2.0 * rx
    ab_x[0, 1:] = -rx
    ab_x[2, :-1] = -rx
    ab_x[0, 1] = -2.0 * rx   # Neumann closures
    ab_x[2, -2] = -2.0 * rx
    ab_y = np.zeros((3, ny))
    ab_y[1, :] = 1.0 + 2.0 * ry
    ab_y[0, 1:] = -ry
    ab_y[2, :-1] = -ry
    ab_y[1, 0] = 1.0         # Dirichlet rows at |y| = Ly
    ab_y[0, 1] = 0.0
    ab_y[1, -1] = 1.0
    ab_y[2, -2] = 0.0
    return ab_x, ab_y


def run2d(u0: Field2D, T: float, dt: float, *, variant: str = "adi",
          record_every: int = 20, snapshot_every: int = 10) -> Trajectory2D:
    """Evolve the strip to time T.

    variant "adi" (default) is unconditionally stable in the diffusion
    part and only limited by the reaction bound; "explicit" additionally
    requires dt <= min(dx, dy)^2 / 4 and is rejected otherwise.
    """
    p = u0.p
    limit = dt_max(p)
    if dt > limit:
        raise ValueError(f"dt={dt} exceeds the reaction monotonicity bound {limit:.6g}")
    if variant not in ("adi", "explicit"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "explicit":
        cfl = min(u0.dx, u0.dy) ** 2 / 4.0
        if dt > cfl:
            raise ValueError(f"dt={dt} violates the explicit CFL bound {cfl:.6g}")

    inside = np.abs(u0.y) <= p.R
    dx2, dy2 = u0.dx ** 2, u0.dy ** 2
    ab_x, ab_y = _adi_matrices(u0, dt)
    u = u0.u.copy()
    t = u0.t
    n_steps = int(math.ceil(T / dt))

    times = [t]
    midrow = int(np.argmin(np.abs(u0.y)))
    midlines = [u[midrow, :].copy()]
    widths = [level_width(u0.x, u[midrow, :])]
    masses = [float(np.sum(u)) * u0.dx * u0.dy]
    snap_times = [t]
    snaps = [u.copy()]

    for i in range(1, n_steps + 1):
        if variant == "explicit":
            field = Field2D(p=p, x=u0.x, y=u0.y, u=u, t=t)
            u = u + dt * (_laplacian(field, u) + _reaction_term(field, u, inside))
            u[0, :] = 0.0
            u[-1, :] = 0.0
        else:
            u = u + 0.5 * dt * np.where(inside[:, None], reaction(u, p), -p.alpha * u)
            uyy = np.zeros_like(u)
            uyy[1:-1, :] = (u[2:, :] - 2.0 * u[1:-1, :] + u[:-2, :]) / dy2
            u1 = solve_banded((1, 1), ab_x, (u + 0.5 * dt * uyy).T).T
            uxx = np.empty_like(u1)
            uxx[:, 1:-1] = (u1[:, 2:] - 2.0 * u1[:, 1:-1] + u1[:, :-2]) / dx2
            uxx[:, 0] = 2.0 * (u1[:, 1] - u1[:, 0]) / dx2
            uxx[:, -1] = 2.0 * (u1[:, -2] - u1[:, -1]) / dx2
            rhs = u1 + 0.5 * dt * uxx
            rhs[0, :] = 0.0
            rhs[-1, :] = 0.0
            u = solve_banded((1, 1), ab_y, rhs)
            u = u + 0.5 * dt * np.where(inside[:, None], reaction(u, p), -p.alpha * u)
        t = u0.t + i * dt
        if i % record_every == 0 or i == n_steps:
            times.append(t)
            midlines.append(u[midrow, :].copy())
            widths.append(level_width(u0.x, u[midrow, :]))
            masses.append(float(np.sum(u)) * u0.dx * u0.dy)
            if (i // record_every) % snapshot_every == 0 or i == n_steps:
                snap_times.append(t)
                snaps.append(u.copy())

    final = Field2D(p=p, x=u0.x, y=u0.y, u=u, t=t)
    return Trajectory2D(times=np.array(times), midlines=np.array(midlines),
                        widths=np.array(widths), masses=np.array(masses),
                        x=u0.x, snapshot_times=tuple(snap_times),
                        snapshots=tuple(snaps), final=final)


def _rightmost_crossing(x: np.ndarray, row: np.ndarray, level: float) -> float:
    above = row >= level
    if not above.any():
        return math.nan
    idx = np.nonzero(above)[0]
    i = idx[-1]
    if i == len(row) - 1:
        return float(x[-1])
    return float(x[i] + (x[i + 1] - x[i]) * (row[i] - level) / (row[i] - row[i + 1]))


def level_width(x: np.ndarray, row: np.ndarray, level: float = LEVEL) -> float:
    """Length of {x : row >= level} with linearly interpolated edges."""
    above = row >= level
    if not above.any():
        return 0.0
    idx = np.nonzero(above)[0]
    right = _rightmost_crossing(x, row, level)
    i = idx[0]
    if i == 0:
        left = float(x[0])
    else:
        left = float(x[i] - (x[i] - x[i - 1]) * (row[i] - level) / (row[i] - row[i - 1]))
    return max(right - left, 0.0)


def front_speed(traj: Trajectory2D, *, level: float = LEVEL,
                fit_fraction: float = 0.6) -> FrontMeasurement:
    """Speed of the tracked interface from the midline level crossings.

    Fits a line to the rightmost crossing x*(t) over the trailing
    fit_fraction of valid measurements; the residual is the RMS misfit
    relative to the travelled distance (floored by one grid cell for
    near-stationary fronts).
    """
    xs = np.array([_rightmost_crossing(traj.x, row, level) for row in traj.midlines])
    valid = np.isfinite(xs) & (xs < traj.x[-1] - 2.0 * (traj.x[1] - traj.x[0]))
    if valid.sum() < 4:
        raise NoInterface("midline trace crosses the level in fewer than 4 records")
    tt, xx = traj.times[valid], xs[valid]
    n0 = int((1.0 - fit_fraction) * len(tt))
    tt, xx = tt[n0:], xx[n0:]
    slope, intercept = np.polyfit(tt, xx, 1)
    resid = xx - (slope * tt + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    travel = abs(slope) * (tt[-1] - tt[0])
    scale = max(travel, float(traj.x[1] - traj.x[0]))
    return FrontMeasurement(c=float(slope), fit_window=(float(tt[0]), float(tt[-1])),
                            fit_residual=rms / scale)


def classify_regime(p: Params, r0: float, r1: float, *, T: float = 150.0,
                    dt: float = 0.2, nx: int = 400, ny: int = 200,
                    Lx: float = 80.0, guard: float = 0.02) -> RegimeLabel:
    """Label the response to the standard bump: collapse, shrinking or
    spreading.

    Refuses to classify within `guard` (relative) of either critical
    thickness.  Collapse means the midline falls uniformly below the
    reaction threshold by half-time; otherwise the sign of the
    half-level width trend over the trailing part of the run decides.
    """
    for name, rc in (("r0", r0), ("r1", r1)):
        if abs(p.R - rc) < guard * rc:
            raise AmbiguousRegime(f"R={p.R} is within {guard:.0%} of {name}={rc}")
    traj = run2d(standard_bump(p, nx=nx, ny=ny, Lx=Lx), T, dt)
    half_idx = int(np.argmin(np.abs(traj.times - (traj.times[0] + traj.times[-1]) / 2.0)))
    if float(np.max(traj.midlines[half_idx])) < p.a:
        return COLLAPSE
    n0 = int(0.4 * len(traj.times))
    slope = np.polyfit(traj.times[n0:], traj.widths[n0:], 1)[0]
    return SPREADING if slope > 0 else SHRINKING
