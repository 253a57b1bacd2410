"""Single-particle spectra for a particle bound to a torus knot or a ring.

Natural units throughout (hbar = k_B = 1): energies and temperatures in eV,
lengths in 1/eV, masses in eV.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTopologyError, InvalidGeometryError

__all__ = [
    "Statistics",
    "as_chi",
    "TorusGeometry",
    "RingGeometry",
    "make_torus_geometry",
    "topological_factor",
    "torus_level",
    "ring_level",
]


class Statistics(enum.Enum):
    FERMION = 1
    BOSON = -1

    @property
    def chi(self) -> int:
        return self.value

    @property
    def max_occupation(self) -> float:
        return 1.0 if self is Statistics.FERMION else math.inf

    @classmethod
    def parse(cls, name: str) -> "Statistics":
        key = name.strip().lower()
        if key in ("fermion", "fermions", "fermi", "+1", "1"):
            return cls.FERMION
        if key in ("boson", "bosons", "bose", "-1"):
            return cls.BOSON
        raise ValueError(f"unknown statistics {name!r}")


def as_chi(stats) -> int:
    """Normalise a ``Statistics`` member or a bare +/-1 to the integer chi."""
    if isinstance(stats, Statistics):
        return stats.chi
    chi = int(stats)
    if chi not in (1, -1) or chi != stats:
        raise ValueError(f"chi must be +1 (fermions) or -1 (bosons), got {stats!r}")
    return chi


@dataclass(frozen=True)
class TorusGeometry:
    """Torus of outer radius ``R`` and tube radius ``d`` carrying a knot.

    ``p`` is the number of toroidal loops and ``alpha`` the winding number.
    ``eta``, ``a`` and ``circumference`` are derived on construction.
    """

    R: float
    d: float
    p: int
    alpha: int
    M: float
    eta: float = field(init=False)
    a: float = field(init=False)
    circumference: float = field(init=False)

    def __post_init__(self):
        if not (self.d > 0 and self.R > self.d):
            raise InvalidGeometryError(f"need R > d > 0 (arccosh(R/d) undefined), got R={self.R}, d={self.d}")
        if int(self.p) != self.p or self.p < 1:
            raise InvalidGeometryError(f"loop count p must be a positive integer, got {self.p}")
        if int(self.alpha) != self.alpha or self.alpha < 1:
            raise InvalidGeometryError(f"winding number alpha must be a positive integer, got {self.alpha}")
        if not self.M > 0:
            raise InvalidGeometryError(f"mass must be positive, got {self.M}")
        eta = math.acosh(self.R / self.d)
        a = math.sqrt(self.R * self.R - self.d * self.d)
        if not (eta > 0 and a > 0):
            raise InvalidGeometryError("R/d too close to 1: eta or a underflows to zero")
        denom = self.alpha**2 + math.sinh(eta) ** 2 - 1
        if not denom > 0:
            raise DegenerateTopologyError(
                f"alpha^2 + sinh^2(eta) - 1 = {denom:.6g} <= 0: topological factor is singular"
            )
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "circumference", 2 * math.pi * a)

    @property
    def F(self) -> float:
        return topological_factor(self)

    @property
    def energy_scale(self) -> float:
        """Coefficient of n^2 in the level formula."""
        return self.F / (2 * self.M * self.a**2 * self.p**2)

    def level(self, n):
        return torus_level(n, self)

    def literal_prefactor(self, T: float) -> float:
        """p L / (sqrt(F) lambda), the continuum prefactor in closed-form expressions."""
        lam = thermal_wavelength(self.M, T)
        return self.p * self.circumference / (math.sqrt(self.F) * lam)

    def with_alpha(self, alpha: int) -> "TorusGeometry":
        return TorusGeometry(self.R, self.d, self.p, alpha, self.M)

    def equivalent_ring(self) -> "RingGeometry":
        """Ring whose level ladder coincides with this torus (R_ring = a p / sqrt(F))."""
        return RingGeometry(self.a * self.p / math.sqrt(self.F), self.M)


@dataclass(frozen=True)
class RingGeometry:
    R: float
    M: float
    circumference: float = field(init=False)

    def __post_init__(self):
        if not self.R > 0:
            raise InvalidGeometryError(f"ring radius must be positive, got {self.R}")
        if not self.M > 0:
            raise InvalidGeometryError(f"mass must be positive, got {self.M}")
        object.__setattr__(self, "circumference", 2 * math.pi * self.R)

    @property
    def energy_scale(self) -> float:
        return 1.0 / (2 * self.M * self.R**2)

    def level(self, k):
        return ring_level(k, self)

    def literal_prefactor(self, T: float) -> float:
        return self.circumference / thermal_wavelength(self.M, T)


def thermal_wavelength(M: float, T: float) -> float:
    return math.sqrt(2 * math.pi / (M * T))


def make_torus_geometry(R: float, d: float, p: int, alpha: int, M: float) -> TorusGeometry:
    return TorusGeometry(R, d, p, alpha, M)


def topological_factor(geom: TorusGeometry) -> float:
    """F(alpha, eta) = cosh^2(eta) / (alpha^2 + sinh^2(eta) - 1)."""
    c2 = math.cosh(geom.eta) ** 2
    s2 = math.sinh(geom.eta) ** 2
    return c2 / (geom.alpha**2 + s2 - 1)


def _check_index(n):
    arr = np.asarray(n)
    if np.any(arr < 0):
        raise ValueError("level index must be nonnegative")
    return arr


def torus_level(n, geom: TorusGeometry):
    """Energy of level ``n`` (scalar or array); the +n and -n states share it."""
    arr = _check_index(n)
    out = geom.energy_scale * arr.astype(float) ** 2
    return float(out) if out.ndim == 0 else out


def ring_level(k, geom: RingGeometry):
    arr = _check_index(k)
    out = geom.energy_scale * arr.astype(float) ** 2
    return float(out) if out.ndim == 0 else out
