"""Classical statistical mechanics of the flat-energy N-particle system.

Areas and the statistics parameter alpha are measured in units of h, so
``rho = N / A`` is a density per h and ``alpha * rho`` is dimensionless.
All energies enter only as ``E_N = N * energy_per_particle``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DensityAboveMax, UnboundedDensity, ZeroVolume
from .model import StatisticsKind
from .volume import closed_form_volume_with_area


@dataclass(frozen=True)
class ThermoInput:
    N: int
    area: float
    alpha: float = 0.0
    beta: float = 1.0
    energy_per_particle: float = 0.0

    def __post_init__(self):
        if self.N < 1 or int(self.N) != self.N:
            raise ValueError("N must be a positive integer")
        if not self.area > 0:
            raise ValueError("area must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @classmethod
    def for_kind(cls, N, area, kind: StatisticsKind, beta=1.0, energy_per_particle=0.0):
        return cls(N, area, kind.alpha(), beta, energy_per_particle)

    @property
    def rho(self) -> float:
        return self.N / self.area

    @property
    def energy(self) -> float:
        return self.N * self.energy_per_particle


def _free_area(inp: ThermoInput) -> float:
    return inp.area - inp.alpha * (inp.N - 1)


def log_partition_function(inp: ThermoInput) -> float:
    """``log Z_N = log(V_N / h^N) - beta E_N``; raises ZeroVolume when saturated."""
    free = _free_area(inp)
    if free <= 0:
        raise ZeroVolume(f"V_N = 0: alpha (N - 1) = {inp.alpha * (inp.N - 1):g} >= A = {inp.area:g}")
    return inp.N * math.log(free) - math.lgamma(inp.N + 1) - inp.beta * inp.energy


def partition_function(inp: ThermoInput) -> float:
    return math.exp(log_partition_function(inp))


def volume(inp: ThermoInput) -> float:
    return closed_form_volume_with_area(inp.N, inp.area, inp.alpha)


def entropy_closed(inp: ThermoInput) -> float:
    """Thermodynamic-limit entropy ``N log(1 - alpha rho) + N log A - N log N + N``.

    Stirling is applied and N - 1 is replaced by N.
    """
    x = inp.alpha * inp.rho
    if x >= 1:
        raise DensityAboveMax(f"alpha * rho = {x:g} >= 1")
    N = inp.N
    return N * math.log1p(-x) + N * math.log(inp.area) - N * math.log(N) + N


def entropy_exact(inp: ThermoInput) -> float:
    """``log(V_N / h^N)`` with the exact volume; no Stirling, no N - 1 -> N."""
    return log_partition_function(inp) + inp.beta * inp.energy


def stirling_gap(inp: ThermoInput) -> float:
    """``entropy_closed + N [log(1 - alpha (N-1)/A) - log(1 - alpha N/A)] - entropy_exact``.

    Equals ``log N! - N log N + N``, which lies in ``[0, 1 + log N]``.
    """
    N, A, a = inp.N, inp.area, inp.alpha
    shift = N * (math.log1p(-a * (N - 1) / A) - math.log1p(-a * N / A))
    return entropy_closed(inp) + shift - entropy_exact(inp)


def free_energy(inp: ThermoInput, exact: bool = False) -> float:
    """``F = E - S / beta`` from either entropy path."""
    S = entropy_exact(inp) if exact else entropy_closed(inp)
    return inp.energy - S / inp.beta


def equation_of_state(rho: float, alpha: float, beta: float) -> float:
    """Pressure ``rho / (beta (1 - alpha rho))``; diverges at ``rho = 1 / alpha``."""
    if rho < 0:
        raise ValueError("rho must be >= 0")
    if not beta > 0:
        raise ValueError("beta must be positive")
    x = alpha * rho
    if x >= 1:
        raise DensityAboveMax(f"alpha * rho = {x:g} >= 1: infinite pressure")
    return rho / (beta * (1.0 - x))


def exact_pressure(inp: ThermoInput) -> float:
    """``-dF/dA`` of the exact free energy: ``N / (beta (A - alpha (N - 1)))``."""
    free = _free_area(inp)
    if free <= 0:
        raise ZeroVolume("no free area left")
    return inp.N / (inp.beta * free)


def pressure_fd(inp: ThermoInput, exact: bool = False, rel_step: float = 1e-3) -> float:
    """``-dF/dA`` at fixed (N, beta) by a 5-point central difference in A."""
    h = rel_step * inp.area

    def F(dA):
        return free_energy(
            ThermoInput(inp.N, inp.area + dA, inp.alpha, inp.beta, inp.energy_per_particle), exact
        )

    dF = (-F(2 * h) + 8 * F(h) - 8 * F(-h) + F(-2 * h)) / (12 * h)
    return -dF


def max_density(alpha: float) -> float:
    """Density ``1 / alpha`` at which the system becomes incompressible."""
    if alpha == 0:
        raise UnboundedDensity("alpha = 0 has no maximal density")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    return 1.0 / alpha
