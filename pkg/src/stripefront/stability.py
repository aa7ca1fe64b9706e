"""Spectral stability of profiles via the Prüfer angle.

The linearisation around a profile V is the Schrödinger-type operator
phi -> phi'' + (f'(V) inside, -alpha outside) phi on the line.  Writing
(phi, phi') = rho (cos th, sin th) reduces the eigenvalue problem with
spectral parameter mu to a scalar angle equation on (-R, R):

    th' = -sin^2 th + (mu - f'(V(y))) cos^2 th,
    th(-R) = arctan sqrt(mu + alpha),

and mu is an eigenvalue exactly when the total phase

    h(mu) = th(R) + arctan sqrt(mu + alpha)

is an integer multiple of pi.  h is strictly increasing in mu and lands
in (0, pi) for mu above the potential's range, so h(0) alone counts the
nonnegative eigenvalues: there are k of them iff h(0) in (-k pi, (1-k) pi].
The angle th(0,.) is also the argument of the tangent vector to the
transported launch line along the profile, so the same count equals the
signed number of times that tangent crosses the target line's direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .model import reaction_deriv
from .profiles import Profile

__all__ = [
    "ThetaTrace",
    "SpectralReport",
    "EigenFunction",
    "PositivityViolation",
    "theta_solve",
    "prufer_phase",
    "count_nonneg",
    "eigenvalues_nonneg",
    "spectral_report",
    "principal_eigenfunction",
    "tangent_crossing_count",
    "potential_bound",
]

MARGINAL_TOL = 1e-8

_RTOL = 1e-10
_ATOL = 1e-12


@dataclass(frozen=True)
class ThetaTrace:
    """Prüfer angle along the stripe for one spectral parameter."""

    mu: float
    y: np.ndarray
    theta: np.ndarray

    @property
    def theta_end(self) -> float:
        return float(self.theta[-1])


@dataclass(frozen=True)
class SpectralReport:
    """Nonnegative-eigenvalue count of the linearisation around a profile.

    k counts nonnegative eigenvalues, h0 is the total Prüfer phase at
    mu = 0, and marginal flags h0 within tolerance of a multiple of pi
    (a zero eigenvalue sits on the counting boundary near a fold).
    """

    k: int
    h0: float
    eigenvalues: tuple[float, ...]
    marginal: bool

    def as_dict(self) -> dict:
        return {"k": self.k, "h0": self.h0,
                "eigenvalues": list(self.eigenvalues), "marginal": self.marginal}


@dataclass(frozen=True)
class EigenFunction:
    """Eigenfunction samples on [-R, R] plus its tail decay rate."""

    mu: float
    y: np.ndarray
    phi: np.ndarray
    rho: np.ndarray
    tail_rate: float


class PositivityViolation(RuntimeError):
    """The reconstructed eigenfunction changed sign (mu was not principal)."""


def potential_bound(profile: Profile) -> float:
    """sup |f'(V)| along the profile, bounding the eigenvalues from above."""
    return float(np.max(np.abs(reaction_deriv(profile.v, profile.p))))


def _theta_rhs(profile: Profile, mu: float):
    spline = profile.interpolant
    p = profile.p

    def rhs(y, z):
        q = mu - reaction_deriv(float(spline(y)), p)
        s, c = math.sin(z[0]), math.cos(z[0])
        return (-s * s + q * c * c,)

    return rhs


def theta_solve(profile: Profile, mu: float, *, n: int | None = None) -> ThetaTrace:
    """Integrate the Prüfer angle across the stripe for parameter mu."""
    p = profile.p
    if mu <= -p.alpha:
        raise ValueError(f"mu must exceed -alpha = {-p.alpha}")
    seed = math.atan(math.sqrt(mu + p.alpha))
    n = len(profile.y) if n is None else n
    ys = np.linspace(-p.R, p.R, n)
    sol = solve_ivp(_theta_rhs(profile, mu), (-p.R, p.R), [seed], method="DOP853",
                    rtol=_RTOL, atol=_ATOL, dense_output=True)
    if sol.status != 0:
        raise RuntimeError(f"theta integration failed: {sol.message}")
    return ThetaTrace(mu=float(mu), y=ys, theta=sol.sol(ys)[0])


def prufer_phase(profile: Profile, mu: float) -> float:
    """Total phase h(mu) = theta(R) + arctan sqrt(mu + alpha).

    Strictly increasing in mu; eigenvalues sit where it is a multiple
    of pi.
    """
    p = profile.p
    if mu <= -p.alpha:
        raise ValueError(f"mu must exceed -alpha = {-p.alpha}")
    seed = math.atan(math.sqrt(mu + p.alpha))
    sol = solve_ivp(_theta_rhs(profile, mu), (-p.R, p.R), [seed], method="DOP853",
                    rtol=_RTOL, atol=_ATOL)
    if sol.status != 0:
        raise RuntimeError(f"theta integration failed: {sol.message}")
    return float(sol.y[0, -1]) + seed


def count_nonneg(profile: Profile, *, marginal_tol: float = MARGINAL_TOL) -> SpectralReport:
    """Count nonnegative eigenvalues from the phase at mu = 0 (count only)."""
    h0 = prufer_phase(profile, 0.0)
    k = 1 - math.ceil(h0 / math.pi)
    k = max(k, 0)
    dist = abs(h0 / math.pi - round(h0 / math.pi)) * math.pi
    return SpectralReport(k=k, h0=h0, eigenvalues=(), marginal=dist < marginal_tol)


def eigenvalues_nonneg(profile: Profile, report: SpectralReport | None = None, *,
                       tol: float = 1e-10) -> tuple[float, ...]:
    """All nonnegative eigenvalues, largest first, each located to tol.

    The j-th solves h(mu) = (1-j) pi; monotonicity of h makes plain
    bisection on [0, sup|f'(V)| + 1] safe.  A root pinned at mu = 0 (the
    counting boundary) is returned as 0.0 rather than dropped; the
    report's marginal flag identifies that situation.
    """
    if report is None:
        report = count_nonneg(profile)
    if report.k < 1:
        return ()
    mu_hi = potential_bound(profile) + 1.0
    h_lo_all = report.h0
    out = []
    for j in range(1, report.k + 1):
        target = (1 - j) * math.pi
        if h_lo_all >= target:
            # root sits at (or numerically below) mu = 0: boundary case
            out.append(0.0)
            continue
        lo, hi = 0.0, mu_hi
        g_lo = h_lo_all - target
        g_hi = prufer_phase(profile, hi) - target
        if g_hi <= 0:
            raise RuntimeError("phase failed to exceed target at the upper bound")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            g_mid = prufer_phase(profile, mid) - target
            if g_mid == 0.0:
                lo = hi = mid
                break
            if math.copysign(1.0, g_mid) == math.copysign(1.0, g_lo):
                lo, g_lo = mid, g_mid
            else:
                hi, g_hi = mid, g_mid
        out.append(0.5 * (lo + hi))
    return tuple(out)


def spectral_report(profile: Profile) -> SpectralReport:
    """Count plus located eigenvalues in one report."""
    report = count_nonneg(profile)
    if report.k == 0:
        return report
    return replace(report, eigenvalues=eigenvalues_nonneg(profile, report))


def principal_eigenfunction(profile: Profile, mu1: float, *,
                            rtol: float = 1e-12, atol: float = 1e-14) -> EigenFunction:
    """Reconstruct the positive eigenfunction of the largest eigenvalue.

    Integrates the log-amplitude alongside the angle,
    (log rho)' = sin th cos th (1 + mu - f'(V)), sets phi = rho cos th
    and normalises sup phi = 1.  Raises PositivityViolation if phi is
    not strictly positive on [-R, R] (mu1 was not the principal
    eigenvalue).
    """
    p = profile.p
    spline = profile.interpolant
    seed = math.atan(math.sqrt(mu1 + p.alpha))

    def rhs(y, z):
        q = reaction_deriv(float(spline(y)), p)
        s, c = math.sin(z[0]), math.cos(z[0])
        return (-s * s + (mu1 - q) * c * c, s * c * (1.0 + mu1 - q))

    sol = solve_ivp(rhs, (-p.R, p.R), [seed, 0.0], method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True)
    if sol.status != 0:
        raise RuntimeError(f"amplitude integration failed: {sol.message}")
    z = sol.sol(profile.y)
    theta, log_rho = z[0], z[1]
    rho = np.exp(log_rho)
    phi = rho * np.cos(theta)
    scale = float(np.max(np.abs(phi)))
    phi = phi / scale
    rho = rho / scale
    if np.any(phi <= 0.0):
        raise PositivityViolation(
            f"eigenfunction for mu={mu1} changes sign; it is not the principal one")
    return EigenFunction(mu=float(mu1), y=profile.y, phi=phi, rho=rho,
                         tail_rate=math.sqrt(mu1 + p.alpha))


def tangent_crossing_count(profile: Profile) -> int:
    """Signed crossings of the mu = 0 angle through the target direction.

    The target line's direction is -arctan sqrt(alpha) mod pi; clockwise
    passages (decreasing angle) count +1, counter-clockwise -1.  By the
    phase identity this equals the nonnegative-eigenvalue count away
    from marginal cases.
    """
    trace = theta_solve(profile, 0.0)
    base = -math.atan(profile.p.sqrt_alpha)
    # index of the highest grid level <= theta; net descent = total count
    levels = np.floor((trace.theta - base) / math.pi).astype(int)
    per_step = levels[:-1] - levels[1:]  # +1 per downward level crossing
    return int(np.sum(per_step))
