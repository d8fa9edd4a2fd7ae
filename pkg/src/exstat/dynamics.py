"""Poisson-bracket dynamics on the constrained manifold.

Equations of motion in hbar = 1 units:

    dz_i/dt = {z_i, V} = -i sum_j (G^-1)_ij dV/d conj(z_j)

The phase was fixed against single-particle precession under the latitude
potential, dz/dt = -i lambda z / (2j hbar).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ChartExit, SingularMetric, StepFailure
from .geometry import KahlerMetric, metric, min_chordal_distance
from .model import FERMION, FluxSector, StatisticsKind, as_coords

BRACKET_PHASE = -1j
CHART_LIMIT = 1e6
MIN_FERMION_SEPARATION = 1e-3
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class Zero:
    def value(self, z):
        return 0.0

    def grad_bar(self, z):
        return np.zeros_like(np.asarray(z, dtype=np.complex128))


@dataclass(frozen=True)
class Latitude:
    """``V = lam * sum_i |z_i|^2 / (1 + |z_i|^2)``, a height function on the sphere."""

    lam: float

    def value(self, z):
        r2 = np.abs(z) ** 2
        return float(self.lam * np.sum(r2 / (1 + r2)))

    def grad_bar(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return self.lam * z / (1 + np.abs(z) ** 2) ** 2


@dataclass(frozen=True)
class PairwiseRadial:
    """``V = sum_{i<j} f(u_ij)`` of the squared half-chordal distance.

    ``u = |z_i - z_j|^2 / ((1 + |z_i|^2)(1 + |z_j|^2))`` lies in [0, 1].
    Tags: ``"power"`` with ``f(u) = strength * u^exponent`` and
    ``"gaussian"`` with ``f(u) = strength * exp(-u / width)``.
    """

    tag: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in ("power", "gaussian"):
            raise ValueError(f"unknown pairwise potential {self.tag!r}")

    def _f(self, u):
        p = self.params
        if self.tag == "power":
            a, k = p.get("strength", 1.0), p.get("exponent", 1.0)
            return a * u**k, a * k * u ** (k - 1) if k != 1 else a * np.ones_like(u)
        a, w = p.get("strength", 1.0), p.get("width", 1.0)
        e = a * np.exp(-u / w)
        return e, -e / w

    def _pairs(self, z):
        z = np.asarray(z, dtype=np.complex128)
        q = 1 + np.abs(z) ** 2
        diff = z[:, None] - z[None, :]
        u = np.abs(diff) ** 2 / np.outer(q, q)
        return z, q, diff, u

    def value(self, z):
        z, _, _, u = self._pairs(z)
        iu = np.triu_indices(z.size, 1)
        return float(np.sum(self._f(u[iu])[0]))

    def grad_bar(self, z):
        z, q, diff, u = self._pairs(z)
        # d u_ij / d conj(z_i)
        du = diff / np.outer(q, q) - u * (z / q)[:, None]
        _, fp = self._f(u)
        terms = fp * du
        np.fill_diagonal(terms, 0.0)
        return terms.sum(axis=1)


def poisson_bracket(grad_A, grad_B_bar, g: KahlerMetric, grad_A_bar=None, grad_B=None) -> complex:
    """``{A, B}`` with kernel ``-i G^-1`` between dA/dz and dB/dconj(z).

    When ``grad_A_bar`` and ``grad_B`` are supplied the conjugate block
    ``-(dB/dz) K (dA/dconj(z))`` is included, which makes the bracket of two
    real functions real. Omitted gradients are treated as zero.
    """
    Ginv = _inverse(g.g_matrix)
    kern = BRACKET_PHASE * Ginv
    a = np.asarray(grad_A, dtype=np.complex128)
    bb = np.asarray(grad_B_bar, dtype=np.complex128)
    out = a @ kern @ bb
    if grad_A_bar is not None and grad_B is not None:
        out -= np.asarray(grad_B, dtype=np.complex128) @ kern @ np.asarray(grad_A_bar, dtype=np.complex128)
    return complex(out)


def _inverse(G):
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularMetric(f"metric condition number {cond:.3e}")
    return np.linalg.inv(G)


def eom_rhs(config, flux: FluxSector, kind: StatisticsKind, potential) -> np.ndarray:
    z = as_coords(config)
    G = metric(z, flux, kind).g_matrix
    return BRACKET_PHASE * np.linalg.solve(_checked(G), potential.grad_bar(z))


def _checked(G):
    _inverse(G)
    return G


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (T, N) complex
    energies: np.ndarray
    invariant_drift: float
    energy_budget: float


def _to_real(z):
    return np.concatenate([z.real, z.imag])


def _to_complex(u):
    n = u.size // 2
    return u[:n] + 1j * u[n:]


def integrate(
    config0,
    flux: FluxSector,
    kind: StatisticsKind,
    potential,
    t_end: float,
    tolerance: float = 1e-10,
    t_eval=None,
) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) integration in real coordinates.

    Energy budget: ``|V(t) - V(0)| <= 10 tolerance t_end |V(0)| + 1e-12``.
    """
    z0 = as_coords(config0)
    fermion = kind.geometric() == FERMION
    if fermion and min_chordal_distance(z0) <= MIN_FERMION_SEPARATION:
        raise StepFailure("initial fermion separation below the close-approach guard")
    if np.max(np.abs(z0)) > CHART_LIMIT:
        raise ChartExit("initial configuration outside the chart")

    def rhs(t, u):
        return _to_real(eom_rhs(_to_complex(u), flux, kind, potential))

    def chart(t, u):
        return CHART_LIMIT - np.max(np.abs(_to_complex(u)))

    chart.terminal = True
    events = [chart]
    if fermion:

        def approach(t, u):
            return min_chordal_distance(_to_complex(u)) - MIN_FERMION_SEPARATION

        approach.terminal = True
        events.append(approach)

    sol = solve_ivp(
        rhs, (0.0, t_end), _to_real(z0), method="RK45", rtol=tolerance, atol=tolerance,
        t_eval=t_eval, events=events,
    )
    if sol.status == 1:
        if sol.t_events[0].size:
            raise ChartExit(f"|z| exceeded {CHART_LIMIT:g} at t={sol.t_events[0][0]:g}")
        raise StepFailure(f"fermion close approach at t={sol.t_events[1][0]:g}")
    if sol.status != 0:
        raise StepFailure(sol.message)
    states = np.array([_to_complex(u) for u in sol.y.T])
    energies = np.array([potential.value(z) for z in states])
    V0 = potential.value(z0)
    drift = float(np.max(np.abs(energies - V0))) if energies.size else 0.0
    budget = 10 * tolerance * t_end * abs(V0) + 1e-12
    return Trajectory(sol.t, states, energies, drift, budget)


def precession_period(flux: FluxSector, lam: float) -> float:
    """Period of single-particle precession under ``Latitude(lam)``."""
    return 2 * math.pi * flux.two_j * flux.hbar / abs(lam)
