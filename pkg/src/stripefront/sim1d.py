"""Parabolic evolution on the stripe cross-section (-R, R).

The scheme is semi-implicit: diffusion is taken implicitly with
second-order differences and the mixed boundary conditions closed by
second-order ghost nodes, the reaction explicitly.  With the time step
below 1/sup|f'| the update map is monotone (discrete comparison
principle) and dissipates the discrete energy

    E_h(u) = sum (u_{i+1}-u_i)^2 / (2 dy) - dy sum w_i F(u_i)
             + sqrt(alpha)/2 (u_0^2 + u_N^2)

with trapezoidal weights w_i, because the ghost-node closure is exactly
the gradient of E_h in the w-weighted inner product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .model import Params, reaction, reaction_deriv, reaction_potential
from .profiles import Profile, ProfileSet, find_profiles

__all__ = [
    "Field1D",
    "Trajectory1D",
    "NonConvergence",
    "dt_max",
    "step1d",
    "discrete_energy",
    "run1d",
    "comparison_check",
    "unstable_manifold_runs",
]

MIN_NODES = 64
OMEGA_TOL = 1e-3  # sup-norm radius for terminal-state classification


class NonConvergence(RuntimeError):
    """Terminal state matched no known profile while energy still fell."""

    def __init__(self, message: str, field: "Field1D"):
        super().__init__(message)
        self.field = field


@dataclass(frozen=True)
class Field1D:
    """Discretised evolution state on the stripe cross-section."""

    p: Params
    y: np.ndarray
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if len(self.y) < MIN_NODES:
            raise ValueError(f"need at least {MIN_NODES} nodes, got {len(self.y)}")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("field values must be finite")

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])

    @classmethod
    def from_profile(cls, profile: Profile, t: float = 0.0) -> "Field1D":
        return cls(p=profile.p, y=profile.y, u=profile.v.copy(), t=t)

    @classmethod
    def from_values(cls, p: Params, u: np.ndarray, t: float = 0.0) -> "Field1D":
        u = np.asarray(u, dtype=float)
        return cls(p=p, y=np.linspace(-p.R, p.R, len(u)), u=u, t=t)


def dt_max(p: Params) -> float:
    """Largest step keeping the update monotone: 1 / sup |f'| on [-0.1, 1.1]."""
    vertex = (1.0 + p.a) / 3.0
    candidates = [abs(reaction_deriv(u, p)) for u in (-0.1, 1.1, vertex)]
    return 1.0 / max(candidates)


def _banded_matrix(field: Field1D, dt: float) -> np.ndarray:
    n = len(field.y)
    h = field.dy
    sa = field.p.sqrt_alpha
    r = dt / (h * h)
    ab = np.zeros((3, n))
    ab[1, :] = 1.0 + 2.0 * r
    ab[0, 1:] = -r
    ab[2, :-1] = -r
    # ghost closure: u'(-R) = sqrt(a) u(-R) and u'(R) = -sqrt(a) u(R)
    ab[1, 0] = 1.0 + 2.0 * r * (1.0 + h * sa)
    ab[0, 1] = -2.0 * r
    ab[1, -1] = 1.0 + 2.0 * r * (1.0 + h * sa)
    ab[2, -2] = -2.0 * r
    return ab


def step1d(field: Field1D, dt: float) -> Field1D:
    """One semi-implicit step; rejects steps violating the monotone bound."""
    limit = dt_max(field.p)
    if dt > limit:
        raise ValueError(f"dt={dt} exceeds the monotone bound {limit:.6g}")
    ab = _banded_matrix(field, dt)
    rhs = field.u + dt * reaction(field.u, field.p)
    u_new = solve_banded((1, 1), ab, rhs)
    return Field1D(p=field.p, y=field.y, u=u_new, t=field.t + dt)


def discrete_energy(field: Field1D) -> float:
    """The Lyapunov functional of the scheme (see module docstring)."""
    u, h = field.u, field.dy
    weights = np.ones(len(u))
    weights[0] = weights[-1] = 0.5
    grad = float(np.sum((u[1:] - u[:-1]) ** 2)) / (2.0 * h)
    bulk = h * float(np.sum(weights * reaction_potential(u, field.p)))
    sa = field.p.sqrt_alpha
    return grad - bulk + 0.5 * sa * (u[0] ** 2 + u[-1] ** 2)


@dataclass(frozen=True)
class Trajectory1D:
    """Recorded evolution: snapshots, energy series and terminal match.

    omega is the index of the matched profile in the reference set
    (None only transiently; run1d raises NonConvergence instead of
    returning an unmatched trajectory).
    """

    times: np.ndarray
    snapshots: np.ndarray  # (n_records, n_nodes)
    energies: np.ndarray
    final: Field1D
    omega: int | None
    profiles: ProfileSet

    @property
    def omega_profile(self) -> Profile:
        if self.omega is None:
            raise ValueError("trajectory did not converge to a known profile")
        return self.profiles.profiles[self.omega]


def _nearest_profile(u: np.ndarray, pset: ProfileSet) -> tuple[int, float]:
    dists = [float(np.max(np.abs(u - prof.v))) for prof in pset.profiles]
    idx = int(np.argmin(dists))
    return idx, dists[idx]


def run1d(u0: Field1D, T: float, dt: float, *, profiles: ProfileSet | None = None,
          record_every: int = 20, settle_tol: float = 1e-9) -> Trajectory1D:
    """Evolve to time T, recording energies, and classify the endpoint.

    The terminal state is matched against the known profiles at the same
    parameters (sup-norm radius 1e-3).  If nothing matches while the
    energy is still decreasing, the run is reported as NonConvergence
    rather than being force-classified.  Stops early once the state
    settles onto a profile and stays there.
    """
    if profiles is None:
        profiles = find_profiles(u0.p)
    if len(profiles.profiles[0].v) != len(u0.u):
        raise ValueError("field and profile grids disagree; build the field on the profile grid")
    field = u0
    times = [field.t]
    snaps = [field.u.copy()]
    energies = [discrete_energy(field)]
    n_steps = int(math.ceil(T / dt))
    for i in range(1, n_steps + 1):
        prev = field.u
        field = step1d(field, dt)
        if i % record_every == 0 or i == n_steps:
            times.append(field.t)
            snaps.append(field.u.copy())
            energies.append(discrete_energy(field))
            idx, dist = _nearest_profile(field.u, profiles)
            moving = float(np.max(np.abs(field.u - prev))) / dt
            if dist < 0.1 * OMEGA_TOL and moving < settle_tol:
                break
    idx, dist = _nearest_profile(field.u, profiles)
    omega = idx if dist <= OMEGA_TOL else None
    if omega is None:
        rate = abs(energies[-1] - energies[-2]) / (times[-1] - times[-2])
        raise NonConvergence(
            f"state at t={field.t:.4g} is {dist:.3e} from every profile "
            f"(energy still moving at {rate:.3e})", field)
    return Trajectory1D(times=np.array(times), snapshots=np.array(snaps),
                        energies=np.array(energies), final=field,
                        omega=omega, profiles=profiles)


def comparison_check(u0: Field1D, v0: Field1D, T: float, dt: float, *,
                     record_every: int = 10, slack: float = 1e-12) -> bool:
    """Evolve an ordered pair and report whether order is preserved.

    Requires u0 <= v0 nodewise.  Under the dt guard the scheme is
    monotone, so this should always return True; it exists as a
    checkable property, not a run-time assertion.
    """
    if not np.all(u0.u <= v0.u):
        raise ValueError("comparison_check needs ordered initial data u0 <= v0")
    lo, hi = u0, v0
    n_steps = int(math.ceil(T / dt))
    for i in range(1, n_steps + 1):
        lo = step1d(lo, dt)
        hi = step1d(hi, dt)
        if i % record_every == 0 or i == n_steps:
            if np.any(lo.u > hi.u + slack):
                return False
    return True


def unstable_manifold_runs(profile: Profile, eps: float, T: float, dt: float, *,
                           profiles: ProfileSet | None = None,
                           eigenfunction: np.ndarray | None = None,
                           record_every: int = 20) -> tuple[Trajectory1D, Trajectory1D]:
    """Track both branches of the unstable manifold of an unstable profile.

    Starts from V -+ eps * phi with phi the principal eigenfunction and
    returns the (minus, plus) trajectories; their omega labels are the
    ends the branches connect to (expected: trivial and largest).
    """
    if not (1e-4 <= eps <= 1e-2):
        raise ValueError("eps must lie in [1e-4, 1e-2]")
    if eigenfunction is None:
        from .stability import eigenvalues_nonneg, principal_eigenfunction

        mus = eigenvalues_nonneg(profile)
        if not mus or mus[0] <= 0.0:
            raise ValueError("profile has no positive eigenvalue; nothing to track")
        eigenfunction = principal_eigenfunction(profile, mus[0]).phi
    if profiles is None:
        profiles = find_profiles(profile.p)
    out = []
    for sign in (-1.0, +1.0):
        start = Field1D(p=profile.p, y=profile.y,
                        u=profile.v + sign * eps * eigenfunction, t=0.0)
        out.append(run1d(start, T, dt, profiles=profiles, record_every=record_every))
    return out[0], out[1]
