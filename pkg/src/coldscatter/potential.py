"""Model interaction potential V(R, theta) = sum_lambda V_lambda(R) P_lambda(cos theta).

The Legendre expansion is the native representation: radial coefficients are
stored directly and never obtained by quadrature.  Only even lambda terms are
allowed (homonuclear molecule).  Units: Kelvin and bohr.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import eval_legendre

__all__ = [
    "LennardJones",
    "Morse",
    "DispersionTail",
    "PotentialTerm",
    "PotentialModel",
    "default_model",
    "model_from_config",
]


@dataclass(frozen=True)
class LennardJones:
    """C12/R^12 - C6/R^6."""

    c12: float
    c6: float

    def __call__(self, r):
        r6 = np.asarray(r, dtype=float) ** 6
        return self.c12 / r6**2 - self.c6 / r6

    @property
    def tail_c6(self) -> float:
        return self.c6


@dataclass(frozen=True)
class Morse:
    """D_e (exp(-2a(R-R_e)) - 2 exp(-a(R-R_e))), zero at infinity."""

    depth: float
    a: float
    r_e: float

    def __call__(self, r):
        x = np.exp(-self.a * (np.asarray(r, dtype=float) - self.r_e))
        return self.depth * (x * x - 2.0 * x)

    @property
    def tail_c6(self) -> float:
        return 0.0


@dataclass(frozen=True)
class DispersionTail:
    """Exponential wall plus -C6/R^6 dispersion: A exp(-b R) - C6/R^6."""

    c6: float
    wall_a: float
    wall_b: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.wall_a * np.exp(-self.wall_b * r) - self.c6 / r**6

    @property
    def tail_c6(self) -> float:
        return self.c6


RadialForm = Union[LennardJones, Morse, DispersionTail]


@dataclass(frozen=True)
class PotentialTerm:
    lambda_order: int
    radial: RadialForm

    def __post_init__(self):
        if self.lambda_order < 0 or self.lambda_order % 2:
            raise ValueError("only even lambda >= 0 terms are allowed")


@dataclass(frozen=True)
class PotentialModel:
    terms: tuple[PotentialTerm, ...]

    def __post_init__(self):
        if not any(t.lambda_order == 0 for t in self.terms):
            raise ValueError("the isotropic (lambda=0) term is required")

    @property
    def lambda_orders(self) -> tuple[int, ...]:
        return tuple(sorted({t.lambda_order for t in self.terms}))

    def radial_coupling(self, lambda_order: int, r):
        """V_lambda(R); zero for a lambda not present in the model."""
        vals = [t.radial(r) for t in self.terms if t.lambda_order == lambda_order]
        if not vals:
            return np.zeros_like(np.asarray(r, dtype=float)) + 0.0
        return sum(vals)

    def evaluate(self, r, theta):
        """V(R, theta) in Kelvin; R in bohr, theta in radians."""
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("R must be positive")
        x = np.cos(theta)
        total = 0.0
        for lam in self.lambda_orders:
            total = total + self.radial_coupling(lam, r) * eval_legendre(lam, x)
        return total

    @property
    def tail_c6(self) -> float:
        """Total |C6| scale of the long-range tail, for bound estimates."""
        return sum(abs(t.radial.tail_c6) for t in self.terms)

    def long_range_radius(self, energy_K: float, fraction: float = 1e-3) -> float:
        """Radius beyond which the C6 tail bound is below fraction * energy."""
        if energy_K <= 0:
            raise ValueError("energy must be positive")
        c6 = self.tail_c6
        if c6 == 0.0:
            return 30.0
        return max((c6 / (fraction * energy_K)) ** (1.0 / 6.0), 30.0)


def default_model(
    well_depth: float = 28.0, r_min: float = 6.0, anisotropy: float = 0.15
) -> PotentialModel:
    """Default test surface: lambda=0 Lennard-Jones with the given well depth
    and position, plus a lambda=2 term scaled by `anisotropy`."""
    c6 = 2.0 * well_depth * r_min**6
    c12 = 0.5 * c6 * r_min**6
    return PotentialModel(
        (
            PotentialTerm(0, LennardJones(c12, c6)),
            PotentialTerm(2, LennardJones(anisotropy * c12, anisotropy * c6)),
        )
    )


_FORMS = {
    "lennard_jones": (LennardJones, ("c12", "c6")),
    "morse": (Morse, ("depth", "a", "r_e")),
    "dispersion_tail": (DispersionTail, ("c6", "wall_a", "wall_b")),
}


def model_from_config(section: dict) -> PotentialModel:
    """Build a PotentialModel from a parsed `[potential]` config section.

    Schema: {"terms": [{"lambda": int, "form": name, <params...>}, ...]}
    or {"default": true, "well_depth": .., "r_min": .., "anisotropy": ..}.
    """
    if section.get("default"):
        kwargs = {
            k: section[k] for k in ("well_depth", "r_min", "anisotropy") if k in section
        }
        return default_model(**kwargs)
    terms = []
    for spec in section["terms"]:
        lam = spec["lambda"]
        name = spec["form"]
        if name not in _FORMS:
            raise ValueError(f"unknown radial form {name!r}")
        cls, params = _FORMS[name]
        try:
            radial = cls(**{p: float(spec[p]) for p in params})
        except KeyError as exc:
            raise ValueError(f"radial form {name!r} missing parameter {exc}") from exc
        terms.append(PotentialTerm(lam, radial))
    return PotentialModel(tuple(terms))
