"""N-particle phase-space volumes: closed forms and Monte Carlo checks.

Volumes are reported in units of h^N. The Monte Carlo estimator integrates the
Liouville density ``2^N det G`` over ordered N-tuples, importance-sampled from
the round-sphere density, and divides by N! for identical particles.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NegativeDensity
from .geometry import metric, rotate, single_particle_area
from .model import FERMION, FluxSector, StatisticsKind, as_coords

CHUNK_SIZE = 1 << 15
MIN_SAMPLES = 10_000
NEGATIVE_DENSITY_TOL = 1e-9


@dataclass(frozen=True)
class VolumeEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int
    n_workers: int

    def sigma_deviation(self, reference: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == reference else math.inf
        return (self.mean - reference) / self.std_error


def closed_form_volume_with_area(N: int, area: float, alpha: float) -> float:
    """``(area - alpha (N - 1))^N / N!``; zero once the level is saturated.

    ``area`` and ``alpha`` are in units of h, the result in units of h^N.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    free = area - alpha * (N - 1)
    if free <= 0:
        return 0.0
    try:
        return free**N / math.factorial(N)
    except OverflowError:
        return math.exp(N * math.log(free) - math.lgamma(N + 1))


def closed_form_volume(N: int, flux: FluxSector, kind: StatisticsKind) -> float:
    """Closed-form volume for bosons, fermions, anyons or exclusion-g particles."""
    return closed_form_volume_with_area(N, single_particle_area(flux), kind.alpha())


def liouville_density(config, flux: FluxSector, kind: StatisticsKind) -> float:
    """``2^N det G`` with respect to ``prod_i dx_i dy_i`` (units hbar^N)."""
    G = metric(config, flux, kind).g_matrix
    n = G.shape[0]
    det = float(np.linalg.det(G).real)
    scale = (max(flux.two_j, 1) * flux.hbar) ** n
    if det < -NEGATIVE_DENSITY_TOL * scale:
        raise NegativeDensity(f"det G = {det:.3e}")
    return 2.0**n * max(det, 0.0)


def sphere_samples(rng: np.random.Generator, shape) -> np.ndarray:
    """Stereographic images of uniform points on the unit sphere.

    Density ``1 / (pi (1 + |z|^2)^2)`` per ``dx dy``.
    """
    cos_t = rng.uniform(-1.0, 1.0, size=shape)
    phi = rng.uniform(0.0, 2 * math.pi, size=shape)
    # projection from the north pole; cos_t == 1 has probability zero
    r = np.sqrt((1.0 + cos_t) / np.maximum(1.0 - cos_t, 1e-300))
    return r * np.exp(1j * phi)


def sphere_density(z: np.ndarray) -> np.ndarray:
    return 1.0 / (math.pi * (1.0 + np.abs(z) ** 2) ** 2)


def _chunk_weights(N, flux, fermion, count, seed, chunk, rotation):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))
    z = sphere_samples(rng, (count, N))
    if rotation:
        z = rotate(z, rotation)
    if fermion:
        _, detG = kernels.fermion_liouville_batch(z, flux.two_j)
    else:
        Mt, At, Ct, Dt, _ = kernels.scaled_gram_blocks(z, flux.two_j)
        _, detG = kernels.liouville_batch(Mt, At, Ct, Dt, False)
    scale = max(flux.two_j, 1) ** N
    if np.any(detG < -NEGATIVE_DENSITY_TOL * scale):
        raise NegativeDensity(f"det G = {detG.min():.3e} in chunk {chunk}")
    detG = np.maximum(detG, 0.0)
    # hbar^N from the metric cancels against h^N = (2 pi hbar)^N
    log_p = np.log(sphere_density(z)).sum(axis=1)
    w = np.exp(N * math.log(2.0 / (2 * math.pi)) - math.lgamma(N + 1) - log_p) * detG
    mean = float(w.mean())
    return count, mean, float(np.sum((w - mean) ** 2))


def _merge(a, b):
    na, ma, qa = a
    nb, mb, qb = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, qa + qb + delta * delta * na * nb / n


def _pairwise(parts):
    while len(parts) > 1:
        nxt = [_merge(parts[i], parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def mc_volume(
    N: int,
    flux: FluxSector,
    kind: StatisticsKind,
    samples: int,
    seed: int,
    n_workers: int | None = None,
    rotation: float = 0.0,
) -> VolumeEstimate:
    """Monte Carlo estimate of the N-particle volume (units h^N).

    Samples are drawn in fixed chunks with one RNG substream per chunk, and
    chunk statistics are merged pairwise in chunk order, so the estimate is
    bit-identical for any ``n_workers``. ``rotation`` applies a rigid sphere
    rotation to every sample (used for invariance checks).
    """
    stat = kind.geometric()
    fermion = stat == FERMION
    if samples < MIN_SAMPLES:
        raise ValueError(f"samples must be >= {MIN_SAMPLES}")
    if fermion and N > flux.two_j + 1:
        raise ValueError(f"at most 2j+1 = {flux.two_j + 1} fermions fit in the level")
    if not fermion and N > kernels.PERMANENT_CAP:
        raise ValueError(f"N exceeds the permanent cap {kernels.PERMANENT_CAP}")
    if n_workers is None:
        n_workers = int(os.environ.get("EXSTAT_THREADS", "1"))
    if n_workers < 1:
        raise ValueError("n_workers must be >= 1")

    sizes = [CHUNK_SIZE] * (samples // CHUNK_SIZE)
    if samples % CHUNK_SIZE:
        sizes.append(samples % CHUNK_SIZE)
    jobs = [(N, flux, fermion, c, seed, i, rotation) for i, c in enumerate(sizes)]
    if n_workers == 1:
        parts = [_chunk_weights(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(lambda job: _chunk_weights(*job), jobs))
    n, mean, m2 = _pairwise(parts)
    std_error = math.sqrt(m2 / (n - 1)) / math.sqrt(n)
    return VolumeEstimate(mean, std_error, n, seed, n_workers)


def filled_level_check(flux: FluxSector, n_configs: int = 100, seed: int = 0) -> float:
    """Largest ``|det G|`` over random configurations of N = 2j+1 fermions.

    The filled lowest Landau level is a single state, so the metric must
    vanish identically there.
    """
    N = flux.two_j + 1
    rng = np.random.default_rng(seed)
    worst = 0.0
    kind = StatisticsKind.fermion()
    for _ in range(n_configs):
        z = sphere_samples(rng, N)
        G = metric(as_coords(z), flux, kind).g_matrix
        worst = max(worst, abs(float(np.linalg.det(G).real)))
    return worst
