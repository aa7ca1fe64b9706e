"""Model constants and the bistable reaction term.

The medium is a stripe of half-thickness R in which a cubic bistable
reaction acts; outside the stripe the field is linearly absorbed at
rate alpha.  Everything downstream (shooting, spectra, energies,
simulation) is parametrised by the four numbers collected in
:class:`Params`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "Params",
    "Regime",
    "reaction",
    "reaction_deriv",
    "reaction_potential",
    "medium_potential",
    "potential_root",
]


@dataclass(frozen=True)
class Params:
    """Model constants.

    lam    reaction strength (serialised under the key "lambda")
    a      unstable zero of the cubic, must lie in (0, 1/2)
    alpha  absorption rate outside the stripe
    R      half-thickness of the stripe
    """

    lam: float
    a: float
    alpha: float
    R: float

    def __post_init__(self):
        for name, value in (("lambda", self.lam), ("a", self.a),
                            ("alpha", self.alpha), ("R", self.R)):
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ValueError(f"parameter {name!r} must be a finite number, got {value!r}")
        if self.lam <= 0:
            raise ValueError(f"parameter 'lambda' must be > 0, got {self.lam}")
        if not (0.0 < self.a < 0.5):
            raise ValueError(f"parameter 'a' must lie in (0, 1/2), got {self.a}")
        if self.alpha <= 0:
            raise ValueError(f"parameter 'alpha' must be > 0, got {self.alpha}")
        if self.R <= 0:
            raise ValueError(f"parameter 'R' must be > 0, got {self.R}")

    @property
    def sqrt_alpha(self) -> float:
        return math.sqrt(self.alpha)

    def replace(self, **changes) -> "Params":
        """Return a copy with some fields changed (validated again)."""
        mapping = {"lambda": "lam"}
        changes = {mapping.get(k, k): v for k, v in changes.items()}
        return replace(self, **changes)

    # -- serialisation ----------------------------------------------------

    def as_dict(self) -> dict[str, float]:
        return {"lambda": self.lam, "a": self.a, "alpha": self.alpha, "R": self.R}

    @classmethod
    def from_dict(cls, d: dict) -> "Params":
        keys = {"lambda", "a", "alpha", "R"}
        unknown = set(d) - keys
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        missing = keys - set(d)
        if missing:
            raise ValueError(f"missing parameter keys: {sorted(missing)}")
        return cls(lam=float(d["lambda"]), a=float(d["a"]),
                   alpha=float(d["alpha"]), R=float(d["R"]))

    def to_json(self) -> str:
        return json.dumps(self.as_dict())

    @classmethod
    def from_json(cls, text: str) -> "Params":
        return cls.from_dict(json.loads(text))

    def to_config(self) -> str:
        """Flat key=value text, one parameter per line."""
        return "".join(f"{k} = {v!r}\n" for k, v in self.as_dict().items())

    @classmethod
    def from_config(cls, text: str) -> "Params":
        d = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key=value, got {raw!r}")
            key, _, value = line.partition("=")
            d[key.strip()] = float(value.strip())
        return cls.from_dict(d)


@dataclass(frozen=True)
class Regime:
    """Phase-plane regime marker.

    supercritical_line is True exactly when alpha < a*lambda, i.e. when
    the launch line of the shooting problem enters the region bounded by
    the homoclinic loop of the inner flow (and arbitrarily many profiles
    appear for large R).
    """

    supercritical_line: bool


def reaction(u, p: Params):
    """Bistable cubic lam*u*(u-a)*(1-u); zeros at 0, a and 1."""
    return p.lam * u * (u - p.a) * (1.0 - u)


def reaction_deriv(u, p: Params):
    """Exact derivative of the cubic; equals -a*lam at u=0."""
    return p.lam * (-3.0 * u * u + 2.0 * (1.0 + p.a) * u - p.a)


def reaction_potential(u, p: Params):
    """Primitive of the cubic vanishing at 0: lam*(-u^4/4 + (1+a)u^3/3 - a u^2/2)."""
    return p.lam * (-(u ** 4) / 4.0 + (1.0 + p.a) * u ** 3 / 3.0 - p.a * u * u / 2.0)


def medium_potential(y, u, p: Params):
    """Primitive of the full reaction/absorption term at height y.

    Inside the stripe (|y| <= R) this is the cubic's primitive, outside
    it is -alpha*u^2/2.  Accepts array-valued y.
    """
    inside = np.abs(y) <= p.R
    return np.where(inside, reaction_potential(u, p), -p.alpha * np.asarray(u) ** 2 / 2.0)


def potential_root(p: Params) -> float:
    """The unique zero of the cubic's primitive in (a, 1).

    The primitive is negative on (0, root) and positive on (root, 1].
    Solves u^2 - (4/3)(1+a)u + 2a = 0 (smaller branch) and polishes by
    bisection so the defining property holds to machine accuracy.
    """
    b = (2.0 / 3.0) * (1.0 + p.a)
    disc = b * b - 2.0 * p.a
    if disc < 0.0:  # cannot happen for a < 1/2, guard against bad floats
        raise ValueError(f"no root of the potential in (a, 1) for a={p.a}")
    root = b - math.sqrt(disc)
    if not (p.a < root < 1.0):
        raise ValueError(f"potential root {root} escaped (a, 1) for a={p.a}")
    # One bisection pass: the closed form is exact in real arithmetic but
    # loses digits near a -> 1/2 where the discriminant vanishes.
    lo, hi = p.a, 1.0
    if reaction_potential(root, p) < 0.0:
        lo = root
    else:
        hi = root
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if reaction_potential(mid, p) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
