"""Independent brute-force verifiers backing the test suite.

Everything here deliberately avoids the production code paths: the
spectrum check discretises the full-line operator on a large truncated
interval (no spectral-parameter-dependent boundary rows), the shooting
scan uses its own fixed-step RK4 integrator, and the energy check uses
Gauss-Legendre cells instead of Simpson.  Oracles trade speed for
independence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .model import Params, reaction, reaction_deriv
from .profiles import Profile

__all__ = [
    "DenseOperatorSpec",
    "dense_spectrum",
    "refined_top_eigenvalue",
    "brute_profile_scan",
    "quadrature_energy",
    "sturm_count_below",
]

EDGE_TOL = 1e-6


@dataclass(frozen=True)
class DenseOperatorSpec:
    """Truncation of the full-line linearised operator.

    half_width is the truncation half-width (Dirichlet walls at both
    ends), n the number of interior nodes.
    """

    half_width: float
    n: int
    boundary: str = "dirichlet"

    def validate(self, p: Params) -> None:
        if self.boundary != "dirichlet":
            raise ValueError(f"unsupported boundary treatment {self.boundary!r}")
        if self.n < 4000:
            raise ValueError(f"need at least 4000 nodes, got {self.n}")
        min_width = p.R + 12.0 / p.sqrt_alpha
        if self.half_width < min_width:
            raise ValueError(
                f"half_width {self.half_width} < R + 12/sqrt(alpha) = {min_width}")

    @classmethod
    def for_params(cls, p: Params, n: int = 4096, pad: float = 12.0) -> "DenseOperatorSpec":
        return cls(half_width=p.R + pad / p.sqrt_alpha, n=n)


def sturm_count_below(diag: np.ndarray, off: np.ndarray, x: float) -> int:
    """Eigenvalues of the symmetric tridiagonal matrix strictly below x.

    Classic Sturm-sequence count via the LDL^T pivots of T - x I.
    """
    count = 0
    q = diag[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, len(diag)):
        denom = q if q != 0.0 else 1e-300
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom
        if q < 0.0:
            count += 1
    return count


def _dense_operator(profile: Profile, spec: DenseOperatorSpec) -> tuple[np.ndarray, np.ndarray]:
    p = profile.p
    spec.validate(p)
    L, n = spec.half_width, spec.n
    h = 2.0 * L / (n + 1)
    yy = -L + h * np.arange(1, n + 1)
    inside = np.abs(yy) <= p.R
    pot = np.full(n, -p.alpha)
    yin = np.clip(yy[inside], -p.R, p.R)
    pot[inside] = reaction_deriv(profile.interpolant(yin), p)
    diag = -2.0 / h**2 + pot
    off = np.full(n - 1, 1.0 / h**2)
    return diag, off


def dense_spectrum(profile: Profile, spec: DenseOperatorSpec | None = None, *,
                   edge_tol: float = EDGE_TOL, n_top: int = 3) -> tuple[int, np.ndarray]:
    """Count of eigenvalues >= -edge_tol and the top few eigenvalues.

    The count comes from a Sturm-sequence evaluation at -edge_tol; the
    displayed eigenvalues from LAPACK's tridiagonal solver.
    """
    if spec is None:
        spec = DenseOperatorSpec.for_params(profile.p)
    diag, off = _dense_operator(profile, spec)
    k = spec.n - sturm_count_below(diag, off, -edge_tol)
    top = eigh_tridiagonal(diag, off, select="i",
                           select_range=(spec.n - n_top, spec.n - 1),
                           eigvals_only=True)
    return k, top


def refined_top_eigenvalue(profile: Profile, *, n: int = 4096, pad: float = 14.0) -> float:
    """Richardson-extrapolated top eigenvalue of the dense operator.

    The second-difference scheme converges at O(h^2); combining the n
    and 2n discretisations cancels the leading term.
    """
    vals = []
    for nodes in (n, 2 * n + 1):  # spacings in exact 2:1 ratio
        spec = DenseOperatorSpec.for_params(profile.p, n=nodes, pad=pad)
        diag, off = _dense_operator(profile, spec)
        top = eigh_tridiagonal(diag, off, select="i",
                               select_range=(nodes - 1, nodes - 1),
                               eigvals_only=True)
        vals.append(float(top[0]))
    coarse, fine = vals
    return (4.0 * fine - coarse) / 3.0


def _rk4_scan(p: Params, s_values: np.ndarray, steps: int, bound: float) -> np.ndarray:
    """Residuals for all launch abscissas at once, by fixed-step RK4.

    Escaped trajectories are frozen at their escape state; their
    residual keeps the escape sign, which is all bracketing needs.
    """
    h = 2.0 * p.R / steps
    v = s_values.copy()
    w = p.sqrt_alpha * s_values
    alive = np.ones(v.shape, dtype=bool)

    def rhs(vv, ww):
        return ww, -reaction(vv, p)

    for _ in range(steps):
        k1v, k1w = rhs(v, w)
        k2v, k2w = rhs(v + 0.5 * h * k1v, w + 0.5 * h * k1w)
        k3v, k3w = rhs(v + 0.5 * h * k2v, w + 0.5 * h * k2w)
        k4v, k4w = rhs(v + h * k3v, w + h * k3w)
        dv = (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        dw = (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        v = np.where(alive, v + dv, v)
        w = np.where(alive, w + dw, w)
        alive &= (np.abs(v) <= bound) & (np.abs(w) <= bound)
    return w + p.sqrt_alpha * v


def brute_profile_scan(p: Params, n: int = 20001, *, s_max: float = 2.0,
                       steps: int = 4000, bound: float = 10.0) -> list[tuple[float, float]]:
    """All sign-change brackets of the shooting residual on a uniform grid.

    Exhaustive and integrator-independent of the production solver
    (vectorised fixed-step RK4).  Requires n >= 10^4 so no root window
    at the tested thicknesses can slip between grid points.
    """
    if n < 10_000:
        raise ValueError(f"need at least 10^4 scan points, got {n}")
    ss = np.linspace(0.0, s_max, n)
    res = _rk4_scan(p, ss, steps, bound)
    res[0] = 0.0  # trivial launch is exact
    sign = np.sign(res)
    flips = np.nonzero(sign[1:-1] * sign[2:] < 0)[0] + 1
    return [(float(ss[i]), float(ss[i + 1])) for i in flips]


def quadrature_energy(profile: Profile, *, refine: int = 2, order: int = 8) -> float:
    """Stripe energy by composite Gauss-Legendre over refined cells.

    Independent quadrature path: evaluates the C^1 interpolants of V and
    V' on Gauss nodes inside each refined subinterval.  Cells subdivide
    the interpolation intervals, so the rule is exact per piece and the
    result is grid-refinement stable to roundoff.
    """
    from .model import reaction_potential

    p = profile.p
    nodes, weights = np.polynomial.legendre.leggauss(order)
    y_edges = np.linspace(-p.R, p.R, refine * (len(profile.y) - 1) + 1)
    mid = 0.5 * (y_edges[1:] + y_edges[:-1])
    half = 0.5 * (y_edges[1:] - y_edges[:-1])
    yq = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    wq = (half[:, None] * weights[None, :]).ravel()
    vq = profile.interpolant(yq)
    dq = profile.deriv_interpolant(yq)
    interior = float(np.sum(wq * (0.5 * dq**2 - reaction_potential(vq, p))))
    sa = p.sqrt_alpha
    return interior + 0.5 * sa * (float(profile.v[0])**2 + float(profile.v[-1])**2)
