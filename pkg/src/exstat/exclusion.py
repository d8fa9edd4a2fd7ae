"""Haldane exclusion statistics per energy level and its classical limit.

The entropy of level k with degeneracy D_k and occupation n_k is

    D_k { [1 + (1-g) n] log[1 + (1-g) n] - (1 - g n) log(1 - g n) - n log n }

which reduces to the Bose entropy at g = 0 and the Fermi entropy at g = 1.
The classical limit h -> 0, g -> inf with g h^D -> alpha and n = rho h^D
gives

    D_k h^D [ rho log(1 - alpha rho) - rho log(rho h^D) + rho ].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DensityAboveMax, DomainViolation, NoRoot


def _xlogx(x: float) -> float:
    return 0.0 if x == 0.0 else x * math.log(x)


@dataclass(frozen=True)
class LevelSpec:
    """Levels as parallel sequences of degeneracy, energy and occupation."""

    degeneracies: Sequence[float]
    energies: Sequence[float]
    occupations: Sequence[float]
    g: float
    space_dim: int = 1

    def __post_init__(self):
        if not len(self.degeneracies) == len(self.energies) == len(self.occupations):
            raise ValueError("degeneracies, energies and occupations must have equal length")
        if self.g < 0:
            raise ValueError("g must be >= 0")
        if self.space_dim < 1:
            raise ValueError("space_dim must be >= 1")
        if any(d <= 0 for d in self.degeneracies):
            raise ValueError("degeneracies must be positive")


@dataclass(frozen=True)
class ClassicalLevelSpec:
    degeneracies: Sequence[float]
    energies: Sequence[float]
    densities: Sequence[float]
    alpha: float
    h_value: float = 1.0
    space_dim: int = 1

    def __post_init__(self):
        if not len(self.degeneracies) == len(self.energies) == len(self.densities):
            raise ValueError("degeneracies, energies and densities must have equal length")
        if self.alpha < 0 or not self.h_value > 0:
            raise ValueError("need alpha >= 0 and h_value > 0")


def level_entropy(n: float, g: float) -> float:
    """Exclusion entropy of one state with occupation ``n``."""
    gn = g * n
    a = 1.0 + (1.0 - g) * n
    if not math.isfinite(n) or n < 0 or gn > 1.0 or a < 0:
        raise DomainViolation(f"occupation n={n:g} outside the domain for g={g:g}")
    return _xlogx(a) - _xlogx(1.0 - gn) - _xlogx(n)


def entropy_exclusion(spec: LevelSpec) -> float:
    return math.fsum(D * level_entropy(n, spec.g) for D, n in zip(spec.degeneracies, spec.occupations))


def classical_level_entropy(rho: float, alpha: float, h_value: float, space_dim: int = 1) -> float:
    """Per-state classical-limit entropy ``h^D [rho log(1-alpha rho) - rho log(rho h^D) + rho]``."""
    cell = h_value**space_dim
    x = alpha * rho
    if rho < 0 or x >= 1 or rho * cell >= 1:
        raise DomainViolation(f"rho={rho:g} outside the classical domain (alpha rho={x:g})")
    if rho == 0:
        return 0.0
    return cell * (rho * math.log1p(-x) - rho * math.log(rho * cell) + rho)


def entropy_classical_limit(spec: ClassicalLevelSpec) -> float:
    return math.fsum(
        D * classical_level_entropy(rho, spec.alpha, spec.h_value, spec.space_dim)
        for D, rho in zip(spec.degeneracies, spec.densities)
    )


def degenerate_level_entropy(N: float, area: float, alpha: float, h_value: float = 1.0) -> float:
    """Classical-limit entropy of one fully degenerate level, D = A/h, rho = N/A."""
    spec = ClassicalLevelSpec([area / h_value], [0.0], [N / area], alpha, h_value, 1)
    return entropy_classical_limit(spec)


class LimitPoint(NamedTuple):
    h: float
    relative_gap: float
    exclusion_entropy: float
    classical_entropy: float


def limit_convergence_study(
    rho: float, alpha: float, h_sequence: Sequence[float], space_dim: int = 1
) -> list[LimitPoint]:
    """Gap between the exclusion entropy at (n = rho h^D, g = alpha / h^D) and its classical limit."""
    if alpha * rho >= 1:
        raise DomainViolation(f"alpha * rho = {alpha * rho:g} >= 1")
    out = []
    for h in h_sequence:
        cell = h**space_dim
        s_q = level_entropy(rho * cell, alpha / cell)
        s_c = classical_level_entropy(rho, alpha, h, space_dim)
        out.append(LimitPoint(h, abs(s_q - s_c) / abs(s_c), s_q, s_c))
    return out


def halving_sequence(h0: float, steps: int) -> list[float]:
    return [h0 / 2**k for k in range(steps + 1)]


def entropy_slope(n: float, g: float) -> float:
    """``ds/dn`` of the single-state exclusion entropy."""
    return (1.0 - g) * math.log1p((1.0 - g) * n) + g * math.log1p(-g * n) - math.log(n)


def _brent(f, lo, hi, what):
    f_hi = f(hi)
    if f_hi == 0:
        return hi
    if not (f(lo) > 0 > f_hi):
        raise NoRoot(f"bracket failed for {what}")
    try:
        return brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise NoRoot(str(exc)) from exc


def _occupation(g: float, x: float) -> float:
    """Root of ``ds/dn = x`` on (0, 1/g), or (0, inf) for g = 0."""
    what = f"g={g:g}, beta (eps - mu)={x:g}"
    if g == 0:
        if x <= 0:
            raise NoRoot(f"no Bose occupation for beta (eps - mu) = {x:g} <= 0")
        return _brent(lambda n: entropy_slope(n, 0.0) - x, 1e-300, 1.0 / x, what)

    # ds/dn falls from +inf at n -> 0 to -inf at n -> 1/g. Near the top the
    # root is found in t = 1 - g n, which keeps full relative precision.
    mid = 0.5 / g
    if entropy_slope(mid, g) - x <= 0:
        return _brent(lambda n: entropy_slope(n, g) - x, 1e-300, mid, what)

    def f_t(t):
        n = (1.0 - t) / g
        return (1.0 - g) * math.log1p((1.0 - g) * n) + g * math.log(t) - math.log(n) - x

    t = _brent(lambda t: -f_t(t), 1e-300, 0.5, what)
    return (1.0 - t) / g


def equilibrium_occupation(g: float, beta: float, mu: float, levels) -> np.ndarray:
    """Occupations maximizing ``s(n) - beta (eps - mu) n`` level by level.

    ``levels`` is a sequence of ``(degeneracy, energy)`` pairs; the degeneracy
    scales entropy and energy alike and so does not move the maximum.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if g < 0:
        raise ValueError("g must be >= 0")
    return np.array([_occupation(g, beta * (eps - mu)) for _, eps in levels])


def eos_exclusion_flat(rho: float, alpha: float, beta: float, rel_step: float = 1e-3) -> float:
    """Pressure of one degenerate level from the classical-limit entropy.

    ``beta P = dS/dA`` at fixed N and energy, with the physical volume
    identified with the single-particle area A.
    """
    if alpha * rho >= 1:
        raise DensityAboveMax(f"alpha * rho = {alpha * rho:g} >= 1")
    if not rho > 0:
        return 0.0
    N = 1.0
    A = N / rho
    step = rel_step * A * min(1.0, (1.0 - alpha * rho))
    # dS/dA does not depend on the Planck cell; pick one inside the domain
    cell = min(1.0, 0.25 / rho)

    def S(dA):
        return degenerate_level_entropy(N, A + dA, alpha, h_value=cell)

    dS = (-S(2 * step) + 8 * S(step) - 8 * S(-step) + S(-2 * step)) / (12 * step)
    return dS / beta
