"""Profile energies, the thickness derivative identity, and critical radii.

The gradient-flow energy on the stripe is

    E(V) = int_{-R}^{R} |V'|^2/2 - potential(V) dy
           + sqrt(alpha)/2 (V(R)^2 + V(-R)^2),

and for profiles it coincides with the full-line energy because the
exponential tails integrate exactly to the boundary terms.  Three
critical half-thicknesses organise the dynamics: r0 where nontrivial
profiles appear (a fold), r1 where the largest profile's energy changes
sign (the front speed changes sign with it), and r2 where that energy
peaks, which is where the centre value crosses the potential's zero.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import minimize_scalar

from .model import Params, potential_root, reaction_potential
from .profiles import (
    Profile,
    ProfileSet,
    TangencyWarning,
    find_profiles,
    largest_profile,
)
from .stability import spectral_report

__all__ = [
    "EnergyReport",
    "Thresholds",
    "BifurcationRow",
    "ProfileSummary",
    "FoldTooClose",
    "BracketFailure",
    "SignPatternViolation",
    "energy_interval",
    "energy_line",
    "energy_report",
    "energy_slope_identity",
    "find_fold_thickness",
    "find_zero_energy_thickness",
    "find_peak_energy_thickness",
    "compute_thresholds",
    "bifurcation_sweep",
]

BISECTION_WIDTH = 1e-6
FOLD_OFFSET = 1e-3   # stay this far above r0 before differentiating in R
SLOPE_MARGIN = 1e-2  # minimum |d residual/ds| at the largest root


class FoldTooClose(RuntimeError):
    """The largest profile is too close to the fold to differentiate in R."""


class BracketFailure(RuntimeError):
    """No transition found inside the (expanded) bracketing range."""


class SignPatternViolation(RuntimeError):
    """The energy of the largest profile is not positive just above the fold."""


@dataclass(frozen=True)
class EnergyReport:
    """Interval and full-line energies with a quadrature error estimate."""

    e_line: float
    e_interval: float
    quadrature_error_estimate: float

    def as_dict(self) -> dict:
        return {"e_line": self.e_line, "e_interval": self.e_interval,
                "quadrature_error_estimate": self.quadrature_error_estimate}


class PeakWindow(NamedTuple):
    r2: float
    empty_window: bool


@dataclass(frozen=True)
class Thresholds:
    """Critical half-thicknesses at fixed (lambda, a, alpha)."""

    r0: float
    r1: float
    r2: float
    r2_empty_window: bool
    width: float  # bisection width achieved for each threshold

    def as_dict(self) -> dict:
        return {"r0": self.r0, "r1": self.r1, "r2": self.r2,
                "flags": {"r2_empty_window": self.r2_empty_window},
                "tolerances": {"bisection_width": self.width}}


class ProfileSummary(NamedTuple):
    s: float
    energy: float
    k: int


@dataclass(frozen=True)
class BifurcationRow:
    """One sweep record: everything the suite knows at a single R."""

    R: float
    profile_count: int
    V_M_center: float
    E_of_VM: float
    entries: tuple[ProfileSummary, ...]
    warnings: tuple[str, ...]


def _interval_quadrature(profile: Profile) -> tuple[float, float]:
    """Composite-Simpson interior integral and its Richardson estimate."""
    dens = 0.5 * profile.w ** 2 - reaction_potential(profile.v, profile.p)
    fine = float(simpson(dens, x=profile.y))
    coarse = float(simpson(dens[::2], x=profile.y[::2]))
    return fine, abs(fine - coarse) / 15.0


def _boundary_term(profile: Profile) -> float:
    sa = profile.p.sqrt_alpha
    return 0.5 * sa * (float(profile.v[0]) ** 2 + float(profile.v[-1]) ** 2)


def energy_interval(profile: Profile) -> float:
    """Stripe energy: Simpson quadrature of |V'|^2/2 - potential(V) plus
    the sqrt(alpha)/2 boundary terms."""
    interior, _ = _interval_quadrature(profile)
    return interior + _boundary_term(profile)


def energy_line(profile: Profile) -> float:
    """Full-line energy: interior quadrature plus tail integrals.

    Each decaying tail contributes sqrt(alpha)/2 V(+-R)^2 in closed
    form, so this agrees with :func:`energy_interval` up to roundoff.
    """
    interior, _ = _interval_quadrature(profile)
    sa = profile.p.sqrt_alpha
    cl, cr = float(profile.v[0]), float(profile.v[-1])
    # int_R^inf V'^2/2 + alpha V^2/2 dy for V = c exp(-sqrt(alpha)(y-R))
    tails = 0.5 * sa * cl * cl + 0.5 * sa * cr * cr
    return interior + tails


def energy_report(profile: Profile) -> EnergyReport:
    interior, err = _interval_quadrature(profile)
    return EnergyReport(e_line=energy_line(profile),
                        e_interval=interior + _boundary_term(profile),
                        quadrature_error_estimate=err)


def _largest_at(p: Params, R: float) -> Profile:
    return largest_profile(p.replace(R=R))


def energy_slope_identity(p: Params, *, dR: float = 1e-3,
                          slope_margin: float = SLOPE_MARGIN) -> tuple[float, float]:
    """Analytic and finite-difference thickness derivatives of E(V_M).

    The analytic value is -2 potential(V_M(0)); the finite difference is
    a central difference with step dR.  Raises FoldTooClose when the
    residual slope at the largest root is below slope_margin (the
    derivative degenerates at the fold).
    """
    vm = largest_profile(p)
    if abs(vm.residual_slope) < slope_margin:
        raise FoldTooClose(
            f"transversality margin {abs(vm.residual_slope):.2e} < {slope_margin}")
    analytic = -2.0 * reaction_potential(vm.center_value, p)
    e_plus = energy_interval(_largest_at(p, p.R + dR))
    e_minus = energy_interval(_largest_at(p, p.R - dR))
    return analytic, (e_plus - e_minus) / (2.0 * dR)


def _has_nontrivial(p: Params, R: float, *, s_max: float = 2.0, n: int = 48) -> bool:
    """Fold-robust existence predicate: does the residual dip below zero?

    Sign changes on the refined sample grid decide immediately; otherwise
    each sampled local minimum is polished by bounded minimisation, so a
    barely-negative dip near the fold is still detected.
    """
    from .phaseplane import sample_image_of_line
    from .profiles import residual as shoot_residual

    pr = p.replace(R=R)
    samples = sample_image_of_line(pr, s_max, n)
    res = np.array([smp.residual for smp in samples])
    sv = np.array([smp.s for smp in samples])
    if np.any(res[1:] < 0.0):
        return True
    interior = np.arange(1, len(res) - 1)
    dips = interior[(res[interior] <= res[interior - 1]) & (res[interior] <= res[interior + 1])]
    for i in dips:
        out = minimize_scalar(lambda s: shoot_residual(float(s), pr),
                              bounds=(float(sv[i - 1]), float(sv[i + 1])),
                              method="bounded",
                              options={"xatol": 1e-10})
        if out.fun < 0.0:
            return True
    return False


def _default_r_hi(p: Params) -> float:
    return 10.0 * max(1.0, 1.0 / math.sqrt(p.a * p.lam))


def find_fold_thickness(p: Params, bracket: tuple[float, float] | None = None, *,
                        width: float = BISECTION_WIDTH) -> float:
    """Smallest half-thickness carrying a nontrivial profile (r0).

    Bisects the existence predicate; the bracket is expanded
    geometrically if it does not straddle the transition.  p.R is
    ignored.
    """
    if bracket is None:
        hi = _default_r_hi(p)
        bracket = (hi / 100.0, hi)
    lo, hi = bracket
    for _ in range(12):
        if not _has_nontrivial(p, lo):
            break
        lo /= 2.0
    else:
        raise BracketFailure(f"profiles persist down to R={lo}")
    for _ in range(12):
        if _has_nontrivial(p, hi):
            break
        hi *= 2.0
    else:
        raise BracketFailure(f"no profile up to R={hi}")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if _has_nontrivial(p, mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def find_zero_energy_thickness(p: Params, r0: float | None = None, *,
                               width: float = BISECTION_WIDTH,
                               r_hi: float | None = None) -> float:
    """Half-thickness where E(V_M) changes sign (r1).

    Validates the sign pattern first: the energy must be positive just
    above the fold (SignPatternViolation otherwise), and an upper
    bracket with negative energy is found by geometric expansion.
    """
    if r0 is None:
        r0 = find_fold_thickness(p)
    lo = r0 + FOLD_OFFSET
    e_lo = energy_interval(_largest_at(p, lo))
    if e_lo <= 0.0:
        raise SignPatternViolation(
            f"E(V_M) = {e_lo:.3e} <= 0 just above the fold at R={lo}")
    hi = r_hi if r_hi is not None else max(2.0 * r0, r0 + 1.0)
    for _ in range(12):
        if energy_interval(_largest_at(p, hi)) < 0.0:
            break
        hi *= 1.5
    else:
        raise BracketFailure(f"E(V_M) stays positive up to R={hi}")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if energy_interval(_largest_at(p, mid)) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_peak_energy_thickness(p: Params, r0: float | None = None, *,
                               width: float = BISECTION_WIDTH,
                               r_hi: float | None = None) -> PeakWindow:
    """Half-thickness where V_M(0) crosses the potential's zero (r2).

    E(V_M) increases on (r0, r2) and decreases beyond; when V_M(0)
    already exceeds the potential root at the fold (every supercritical
    absorption case, and in practice every cubic case tested) the window
    is empty and (r0, True) is returned.
    """
    if r0 is None:
        r0 = find_fold_thickness(p)
    beta = potential_root(p)
    lo = r0 + FOLD_OFFSET
    if _largest_at(p, lo).center_value >= beta:
        return PeakWindow(r0, True)
    hi = r_hi if r_hi is not None else max(2.0 * r0, r0 + 1.0)
    for _ in range(12):
        if _largest_at(p, hi).center_value > beta:
            break
        hi *= 1.5
    else:
        raise BracketFailure(f"V_M(0) stays below the potential root up to R={hi}")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if _largest_at(p, mid).center_value < beta:
            lo = mid
        else:
            hi = mid
    return PeakWindow(0.5 * (lo + hi), False)


def compute_thresholds(p: Params, *, width: float = BISECTION_WIDTH) -> Thresholds:
    """All three critical half-thicknesses.  p.R is ignored."""
    r0 = find_fold_thickness(p, width=width)
    r1 = find_zero_energy_thickness(p, r0, width=width)
    r2, empty = find_peak_energy_thickness(p, r0, width=width)
    return Thresholds(r0=r0, r1=r1, r2=r2, r2_empty_window=empty, width=width)


def _sweep_row(p: Params, R: float) -> BifurcationRow:
    pr = p.replace(R=R)
    notes: list[str] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TangencyWarning)
        pset = find_profiles(pr)
        notes.extend(str(w.message) for w in caught if issubclass(w.category, TangencyWarning))
    entries = []
    for prof in pset.profiles:
        rep = spectral_report(prof)
        entries.append(ProfileSummary(s=prof.s, energy=energy_interval(prof), k=rep.k))
    vm = pset.largest_profile
    row = BifurcationRow(
        R=R,
        profile_count=len(pset.profiles),
        V_M_center=vm.center_value,
        E_of_VM=entries[pset.largest].energy,
        entries=tuple(entries),
        warnings=tuple(notes),
    )
    _validate_row(row, pset)
    return row


def _validate_row(row: BifurcationRow, pset: ProfileSet) -> None:
    vm = pset.largest_profile
    if not vm.is_trivial:
        stable = [e for e in row.entries if e.k == 0 and e.s > 0.0]
        if len(stable) != 1:
            raise RuntimeError(
                f"R={row.R}: expected exactly one stable nontrivial profile, got {len(stable)}")
        for e in row.entries:
            if e.k >= 1 and not (e.energy > max(0.0, row.E_of_VM)):
                raise RuntimeError(
                    f"R={row.R}: unstable profile at s={e.s} violates the energy ordering")


def bifurcation_sweep(p: Params, r_grid, *, jobs: int = 1) -> list[BifurcationRow]:
    """Profile counts, energies and stability indices along an R grid.

    Rows are independent; with jobs > 1 they are computed concurrently,
    with output identical to the sequential order.
    """
    r_grid = [float(R) for R in r_grid]
    if any(b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise ValueError("r_grid must be strictly ascending")
    if jobs <= 1:
        return [_sweep_row(p, R) for R in r_grid]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda R: _sweep_row(p, R), r_grid))
