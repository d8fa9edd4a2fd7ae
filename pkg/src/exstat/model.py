"""Shared value types: flux sector, particle configurations, statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BOSON = "boson"
FERMION = "fermion"
ANYON = "anyon"
EXCLUSION = "exclusion"


@dataclass(frozen=True)
class FluxSector:
    """Sphere pierced by ``two_j`` flux quanta; hbar is 1 by convention."""

    two_j: int
    hbar: float = 1.0

    def __post_init__(self):
        if int(self.two_j) != self.two_j or self.two_j < 0:
            raise ValueError(f"two_j must be a non-negative integer, got {self.two_j!r}")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        object.__setattr__(self, "two_j", int(self.two_j))

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def h(self) -> float:
        return 2 * math.pi * self.hbar

    @property
    def lll_dimension(self) -> int:
        return self.two_j + 1


@dataclass(frozen=True)
class ParticleConfig:
    """Ordered stereographic coordinates of N particles."""

    coords: np.ndarray = field()

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.coords, dtype=np.complex128)).copy()
        if z.ndim != 1 or z.size == 0:
            raise ValueError("a configuration needs at least one coordinate")
        if not np.all(np.isfinite(z)):
            raise ValueError("coordinates must be finite (north pole is outside the chart)")
        z.setflags(write=False)
        object.__setattr__(self, "coords", z)

    @property
    def N(self) -> int:
        return self.coords.size

    def __len__(self):
        return self.coords.size


def as_coords(config) -> np.ndarray:
    if isinstance(config, ParticleConfig):
        return config.coords
    return ParticleConfig(config).coords


@dataclass(frozen=True)
class StatisticsKind:
    """Boson, Fermion, Anyon(nu) or ExclusionG(g).

    ``parameter`` is nu for anyons and g for exclusion particles; it is the
    classical statistics parameter alpha measured in units of h.
    """

    variant: str
    parameter: float = 0.0

    def __post_init__(self):
        if self.variant not in (BOSON, FERMION, ANYON, EXCLUSION):
            raise ValueError(f"unknown statistics {self.variant!r}")
        if self.parameter < 0 or not math.isfinite(self.parameter):
            raise ValueError("statistics parameter must be finite and >= 0")
        if self.variant == BOSON:
            object.__setattr__(self, "parameter", 0.0)
        elif self.variant == FERMION:
            object.__setattr__(self, "parameter", 1.0)

    @classmethod
    def boson(cls) -> "StatisticsKind":
        return cls(BOSON)

    @classmethod
    def fermion(cls) -> "StatisticsKind":
        return cls(FERMION)

    @classmethod
    def anyon(cls, nu: float) -> "StatisticsKind":
        return cls(ANYON, float(nu))

    @classmethod
    def exclusion(cls, g: float) -> "StatisticsKind":
        return cls(EXCLUSION, float(g))

    @classmethod
    def parse(cls, name: str, parameter: float | None = None) -> "StatisticsKind":
        name = name.strip().lower()
        if name in (BOSON, FERMION):
            return cls(name)
        if name in (ANYON, EXCLUSION):
            if parameter is None:
                raise ValueError(f"{name} statistics needs a parameter")
            return cls(name, float(parameter))
        raise ValueError(f"unknown statistics {name!r}")

    def alpha(self, h: float = 1.0) -> float:
        """Phase-space volume excluded per additional particle."""
        return self.parameter * h

    def geometric(self) -> str:
        """'boson' or 'fermion' for kinds that have an explicit normalization."""
        if self.variant == BOSON or (self.variant == ANYON and self.parameter == 0.0):
            return BOSON
        if self.variant == FERMION or (self.variant == ANYON and self.parameter == 1.0):
            return FERMION
        raise ValueError(
            f"{self.variant}({self.parameter}) has no explicit normalization; "
            "only closed-form operations support it"
        )

    def __str__(self):
        if self.variant in (BOSON, FERMION):
            return self.variant
        return f"{self.variant}({self.parameter:g})"


Boson = StatisticsKind.boson()
Fermion = StatisticsKind.fermion()
Anyon = StatisticsKind.anyon
ExclusionG = StatisticsKind.exclusion
