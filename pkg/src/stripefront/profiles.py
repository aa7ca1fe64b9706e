"""Enumeration of stationary profiles by shooting.

A profile is a nonnegative solution of V'' + f(V) = 0 on (-R, R) with
the mixed boundary conditions V'(-R) = sqrt(alpha) V(-R) and
V'(R) = -sqrt(alpha) V(R); it extends to the whole line by decaying
exponential tails.  Profiles are exactly the zeros of the shooting
residual s -> w(R) + sqrt(alpha) v(R), which this module brackets on an
adaptively refined grid and polishes by bisection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import minimize_scalar

from .model import Params, reaction
from .phaseplane import (
    CurveSample,
    launch_point,
    line_residual,
    sample_image_of_line,
)

__all__ = [
    "Profile",
    "ProfileSet",
    "TangencyWarning",
    "NoNontrivialProfile",
    "residual",
    "find_profiles",
    "largest_profile",
    "extend_to_line",
]

GRID_POINTS = 2049  # odd so that y = 0 is a node; 2048 uniform intervals

RESIDUAL_TOL = 1e-10
EVENNESS_TOL = 1e-7

# roots are polished and rebuilt at this tighter tolerance so the
# re-integrated boundary defect agrees with the accepted residual
POLISH_RTOL = 1e-12
POLISH_ATOL = 1e-14


class TangencyWarning(UserWarning):
    """Two shooting roots are about to merge (near a fold in R)."""


class NoNontrivialProfile(RuntimeError):
    """Raised when the stripe is too thin to carry a nonzero profile."""


@dataclass(frozen=True)
class Profile:
    """One solution of the profile boundary-value problem.

    s is the shooting parameter V(-R); y, v, w sample (V, V') on a
    uniform grid over [-R, R]; residual_slope is the derivative of the
    shooting residual at the root (the transversality margin, reported
    rather than assumed).
    """

    p: Params
    s: float
    y: np.ndarray
    v: np.ndarray
    w: np.ndarray
    kind: str  # "trivial" | "nontrivial"
    residual_slope: float

    @property
    def center_value(self) -> float:
        """V(0); the grid has odd length so the centre is a node."""
        return float(self.v[(len(self.v) - 1) // 2])

    @property
    def tail_coeff(self) -> float:
        """Coefficient c of the decaying tail V(y) = c exp(-sqrt(alpha) y), y > R."""
        return float(self.v[-1]) * math.exp(self.p.sqrt_alpha * self.p.R)

    @property
    def parity_defect(self) -> float:
        return float(np.max(np.abs(self.v - self.v[::-1])))

    @property
    def is_even(self) -> bool:
        return self.parity_defect <= EVENNESS_TOL

    @property
    def is_trivial(self) -> bool:
        return self.kind == "trivial"

    @cached_property
    def interpolant(self) -> CubicHermiteSpline:
        """C^1 interpolant of V built from the stored values and slopes."""
        return CubicHermiteSpline(self.y, self.v, self.w)

    @cached_property
    def deriv_interpolant(self) -> CubicHermiteSpline:
        """C^1 interpolant of V' (its slope -f(V) is known exactly)."""
        return CubicHermiteSpline(self.y, self.w, -reaction(self.v, self.p))

    def boundary_defects(self) -> tuple[float, float]:
        """|V'(-R) - sqrt(a)V(-R)| and |V'(R) + sqrt(a)V(R)|."""
        sa = self.p.sqrt_alpha
        return (abs(float(self.w[0]) - sa * float(self.v[0])),
                abs(float(self.w[-1]) + sa * float(self.v[-1])))


@dataclass(frozen=True)
class ProfileSet:
    """All profiles at one parameter set, ordered by shooting parameter."""

    p: Params
    profiles: tuple[Profile, ...]
    largest: int
    curve: tuple[CurveSample, ...]

    @property
    def nontrivial(self) -> tuple[Profile, ...]:
        return tuple(pr for pr in self.profiles if not pr.is_trivial)

    @property
    def largest_profile(self) -> Profile:
        return self.profiles[self.largest]


def residual(s: float, p: Params, *, bound: float = 10.0,
             rtol: float | None = None, atol: float | None = None) -> float:
    """Shooting residual w(R) + sqrt(alpha) v(R) for launch abscissa s.

    Escaped trajectories yield +-BLOWUP_SENTINEL (see phaseplane); use
    :func:`stripefront.phaseplane.line_residual` for the explicit flag.
    """
    if s < 0:
        raise ValueError("only s >= 0 is scanned; profiles are nonnegative")
    kw = {}
    if rtol is not None:
        kw["rtol"] = rtol
    if atol is not None:
        kw["atol"] = atol
    return line_residual(s, p, bound=bound, **kw).residual


def _tight_residual(s: float, p: Params, bound: float = 10.0) -> float:
    """Residual at the root-polishing tolerance (matches profile builds)."""
    return residual(s, p, bound=bound, rtol=POLISH_RTOL, atol=POLISH_ATOL)


def _polish_root(s_lo: float, s_hi: float, p: Params) -> float:
    """Bisection to width 1e-12 in s, then one guarded secant step."""
    r_lo = _tight_residual(s_lo, p)
    r_hi = _tight_residual(s_hi, p)
    if r_lo == 0.0:
        return s_lo
    if r_hi == 0.0:
        return s_hi
    if math.copysign(1.0, r_lo) == math.copysign(1.0, r_hi):
        raise ValueError("root polish called without a sign change")
    while s_hi - s_lo > 1e-12:
        mid = 0.5 * (s_lo + s_hi)
        if mid == s_lo or mid == s_hi:
            break
        r_mid = _tight_residual(mid, p)
        if r_mid == 0.0:
            return mid
        if math.copysign(1.0, r_mid) == math.copysign(1.0, r_lo):
            s_lo, r_lo = mid, r_mid
        else:
            s_hi, r_hi = mid, r_mid
    if r_hi != r_lo:
        s_sec = s_lo - r_lo * (s_hi - s_lo) / (r_hi - r_lo)
        if s_lo <= s_sec <= s_hi:
            return s_sec
    return 0.5 * (s_lo + s_hi)


def _integrate_profile(s: float, p: Params, grid_points: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ys = np.linspace(-p.R, p.R, grid_points)
    if s == 0.0:
        return ys, np.zeros(grid_points), np.zeros(grid_points)
    start = launch_point(s, p)

    def rhs(y, z):
        return (z[1], -reaction(z[0], p))

    sol = solve_ivp(rhs, (-p.R, p.R), [start.v, start.w], method="DOP853",
                    rtol=1e-12, atol=1e-14, dense_output=True)
    if sol.status != 0:
        raise RuntimeError(f"profile integration failed at s={s}: {sol.message}")
    z = sol.sol(ys)
    return ys, z[0], z[1]


def _residual_slope(s: float, p: Params, delta: float = 1e-6) -> float:
    if s < delta:
        return (residual(s + delta, p) - residual(s, p)) / delta
    return (residual(s + delta, p) - residual(s - delta, p)) / (2.0 * delta)


def _build_profile(s: float, p: Params, grid_points: int) -> Profile | None:
    """Integrate the root into a Profile; None for sign-changing solutions
    (those solve the boundary problem but are out of scope)."""
    ys, v, w = _integrate_profile(s, p, grid_points)
    kind = "trivial" if s == 0.0 else "nontrivial"
    if kind == "nontrivial":
        if float(np.min(v)) < -1e-9:
            return None
        defect = abs(float(w[-1]) + p.sqrt_alpha * float(v[-1]))
        if defect > 1e-8:
            raise RuntimeError(f"profile at s={s} misses the boundary condition by {defect:.2e}")
    return Profile(p=p, s=float(s), y=ys, v=v, w=w, kind=kind,
                   residual_slope=_residual_slope(s, p))


def find_profiles(p: Params, *, s_max: float = 2.0, n: int = 64,
                  grid_points: int = GRID_POINTS, bound: float = 10.0) -> ProfileSet:
    """Enumerate all profiles at the given parameters.

    Every sign change of the shooting residual on the refined sample
    grid is polished to a root with |residual| <= 1e-10.  The trivial
    profile is always included.  A TangencyWarning is emitted when two
    roots nearly coincide or the residual grazes zero without crossing
    (the saddle-node fingerprint); callers decide how to proceed.
    """
    samples = sample_image_of_line(p, s_max, n, bound=bound)
    res = np.array([smp.residual for smp in samples])
    svals = np.array([smp.s for smp in samples])

    roots: list[float] = []
    bracketed = np.zeros(len(samples), dtype=bool)
    for i in range(len(samples) - 1):
        if np.sign(res[i]) * np.sign(res[i + 1]) < 0:
            roots.append(_polish_root(float(svals[i]), float(svals[i + 1]), p))
            bracketed[i] = bracketed[i + 1] = True

    # Near a fold the residual crosses zero over a window narrower than
    # the sample spacing and no sampled sign change exists.  Polish every
    # same-sign interior extremum towards zero: a polished value on the
    # other side of zero splits into two bracketed roots, one within the
    # tangency tolerance of zero is a grazing fold.
    flagged = np.array([smp.blew_up for smp in samples])
    for i in range(1, len(samples) - 1):
        r = res[i]
        if r == 0.0 or bracketed[i] or flagged[i - 1:i + 2].any():
            continue
        if np.sign(res[i - 1]) != np.sign(r) or np.sign(res[i + 1]) != np.sign(r):
            continue
        sgn = np.sign(r)
        if not (sgn * r < sgn * res[i - 1] and sgn * r < sgn * res[i + 1]):
            continue
        out = minimize_scalar(lambda s: sgn * _tight_residual(float(s), p, bound),
                              bounds=(float(svals[i - 1]), float(svals[i + 1])),
                              method="bounded", options={"xatol": 1e-12})
        extremum = sgn * float(out.fun)
        s_ext = float(out.x)
        if sgn * extremum < 0.0:  # the dip crosses zero after all
            roots.append(_polish_root(float(svals[i - 1]), s_ext, p))
            roots.append(_polish_root(s_ext, float(svals[i + 1]), p))
        elif abs(extremum) <= 1e-8:
            warnings.warn(TangencyWarning(
                f"residual grazes zero near s={s_ext:.8g} "
                f"(extremum {extremum:.2e}) without crossing"))

    roots.sort()
    for s_a, s_b in zip(roots, roots[1:]):
        if s_b - s_a < 1e-6:
            warnings.warn(TangencyWarning(
                f"shooting roots {s_a:.8g} and {s_b:.8g} are within 1e-6 (near a fold)"))

    profiles = [_build_profile(0.0, p, grid_points)]
    for s in roots:
        prof = _build_profile(s, p, grid_points)
        if prof is None:
            continue
        check = abs(_tight_residual(prof.s, p))
        if check > RESIDUAL_TOL:
            raise RuntimeError(f"polished root s={s} has residual {check:.2e} > {RESIDUAL_TOL}")
        profiles.append(prof)

    return ProfileSet(p=p, profiles=tuple(profiles),
                      largest=len(profiles) - 1, curve=tuple(samples))


def largest_profile(p: Params, pset: ProfileSet | None = None) -> Profile:
    """The pointwise-largest profile (maximal shooting parameter).

    Checks that it is even (parity defect <= 1e-7) and stays below 1.
    Raises NoNontrivialProfile below the fold thickness.
    """
    if pset is None:
        pset = find_profiles(p)
    prof = pset.largest_profile
    if prof.is_trivial:
        raise NoNontrivialProfile(f"no nontrivial profile at R={p.R}")
    if prof.parity_defect > EVENNESS_TOL:
        raise RuntimeError(f"largest profile parity defect {prof.parity_defect:.2e} > {EVENNESS_TOL}")
    if not (prof.center_value < 1.0):
        raise RuntimeError(f"largest profile centre {prof.center_value} >= 1")
    return prof


def extend_to_line(profile: Profile, y_max: float, n: int = 4097) -> tuple[np.ndarray, np.ndarray]:
    """Sample the profile on [-y_max, y_max] with its exponential tails.

    Inside [-R, R] the stored interpolant is used; outside, the decaying
    tails V(+-R) exp(-sqrt(alpha)(|y| - R)).  The boundary conditions
    make the junction C^1.
    """
    p = profile.p
    if y_max <= p.R:
        raise ValueError(f"y_max must exceed R={p.R}")
    ys = np.linspace(-y_max, y_max, n)
    vals = np.empty(n)
    inside = np.abs(ys) <= p.R
    vals[inside] = profile.interpolant(ys[inside])
    sa = p.sqrt_alpha
    left, right = ~inside & (ys < 0), ~inside & (ys > 0)
    vals[left] = profile.v[0] * np.exp(sa * (ys[left] + p.R))
    vals[right] = profile.v[-1] * np.exp(-sa * (ys[right] - p.R))
    return ys, vals
