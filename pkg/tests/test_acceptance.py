"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible with or without
``-s``) before asserting. Run with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time

import numpy as np
import pytest

from exstat import geometry
from exstat.dynamics import Latitude, integrate, precession_period
from exstat.errors import DensityAboveMax
from exstat.exclusion import (
    degenerate_level_entropy,
    equilibrium_occupation,
    halving_sequence,
    limit_convergence_study,
)
from exstat.model import Boson, Fermion, FluxSector
from exstat.thermo import ThermoInput, entropy_closed, equation_of_state, pressure_fd
from exstat.volume import closed_form_volume, filled_level_check, mc_volume, sphere_samples

MC_SAMPLES = 1_000_000
SEED = 42


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail

    return emit


def test_criterion_1_fermion_volume(report):
    lines, ok = [], True
    for N, two_j in ((2, 2), (3, 4)):
        flux = FluxSector(two_j)
        t0 = time.perf_counter()
        est = mc_volume(N, flux, Fermion, MC_SAMPLES, SEED)
        elapsed = time.perf_counter() - t0
        ref = closed_form_volume(N, flux, Fermion)
        dev = est.sigma_deviation(ref)
        ok &= abs(dev) < 3 and elapsed < 60
        lines.append(f"N={N} 2j={two_j} mc={est.mean:.5f}+-{est.std_error:.5f} "
                     f"ref={ref:.5f} ({dev:+.2f} sigma, {elapsed:.1f} s)")
    report(1, ok, "; ".join(lines))


def test_criterion_2_boson_volume(report):
    flux = FluxSector(2)
    est = mc_volume(2, flux, Boson, MC_SAMPLES, SEED)
    dev = est.sigma_deviation(closed_form_volume(2, flux, Boson))
    ok = abs(dev) < 3
    lines = [f"N=2 2j=2 mc={est.mean:.5f}+-{est.std_error:.5f} ({dev:+.2f} sigma)"]
    for two_j in (1, 2, 4, 8):
        est = mc_volume(1, FluxSector(two_j), Boson, MC_SAMPLES, SEED)
        dev = est.sigma_deviation(float(two_j))
        ok &= abs(dev) < 3
        lines.append(f"N=1 2j={two_j} {dev:+.2f} sigma")
    report(2, ok, "; ".join(lines))


def test_criterion_3_filled_level(report):
    worst = {two_j: filled_level_check(FluxSector(two_j), n_configs=100, seed=SEED) for two_j in (1, 2)}
    ok = all(v <= 1e-8 for v in worst.values())
    report(3, ok, ", ".join(f"(N={tj + 1}, 2j={tj}) max|det G|={v:.2e}" for tj, v in worst.items()))


def test_criterion_4_entropy_identity(report):
    worst = 0.0
    for N in (1, 2, 5, 10, 50):
        for A in (60.0, 100.0, 200.0, 500.0, 1000.0):
            for alpha in (0.0, 0.1, 0.25, 0.5, 1.0):
                a = degenerate_level_entropy(N, A, alpha)
                b = entropy_closed(ThermoInput(N, A, alpha))
                worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    report(4, worst <= 1e-12, f"max relative difference {worst:.2e} over 125 grid points")


def test_criterion_5_double_scaling(report):
    rho = 1.0
    pts = limit_convergence_study(rho, 0.5 / rho, halving_sequence(0.1 / rho, 10))
    gaps = [p.relative_gap for p in pts]
    monotone = all(a > b for a, b in zip(gaps, gaps[1:]))
    ok = monotone and gaps[-1] < 0.01 * gaps[0]
    report(5, ok, f"gap {gaps[0]:.3e} -> {gaps[-1]:.3e} (ratio {gaps[-1] / gaps[0]:.2e}), "
                  f"monotone={monotone}")


def test_criterion_6_equation_of_state(report):
    worst, raised, count = 0.0, True, 0
    beta = 1.0
    for alpha in (0.0, 1 / 3, 1.0):
        for N in (2, 5, 10):
            for A in (5.0, 20.0):
                rho = N / A
                if alpha * rho >= 1:
                    try:
                        equation_of_state(rho, alpha, beta)
                        raised = False
                    except DensityAboveMax:
                        pass
                    continue
                p = pressure_fd(ThermoInput(N, A, alpha, beta))
                ref = equation_of_state(rho, alpha, beta)
                worst = max(worst, abs(p - ref) / ref)
                count += 1
    # the boundary itself, and just below it
    for alpha in (1 / 3, 1.0, 2.5):
        try:
            equation_of_state(1 / alpha, alpha, beta)
            raised = False
        except DensityAboveMax:
            pass
        equation_of_state(math.nextafter(1 / alpha, 0) * (1 - 1e-15), alpha, beta)
    ok = worst <= 1e-6 and raised
    report(6, ok, f"max relative error {worst:.2e} on {count} points; error at alpha*rho >= 1: {raised}")


def test_criterion_7_distribution_reductions(report):
    x = np.linspace(-5, 5, 201)
    fd = equilibrium_occupation(1.0, 1.0, 0.0, [(1, e) for e in x])
    err_fd = np.max(np.abs(fd - 1 / (np.exp(x) + 1)) / (1 / (np.exp(x) + 1)))
    xp = x[x > 0]
    be = equilibrium_occupation(0.0, 1.0, 0.0, [(1, e) for e in xp])
    err_be = np.max(np.abs(be - 1 / np.expm1(xp)) * np.expm1(xp))
    ok = err_fd <= 1e-10 and err_be <= 1e-10
    report(7, ok, f"Fermi-Dirac max rel err {err_fd:.1e}; Bose-Einstein max rel err {err_be:.1e}")


def test_criterion_8_geometry_cross_validation(report):
    rng = np.random.default_rng(SEED)
    worst_a = worst_g = 0.0
    done = 0
    while done < 200:
        N = int(rng.integers(1, 5))
        two_j = int(rng.integers(1, 7))
        kind = Fermion if rng.uniform() < 0.5 else Boson
        # non-degenerate: fermions below the filled level, all particles apart
        if kind is Fermion and N > two_j:
            continue
        z = sphere_samples(rng, N)
        if geometry.min_chordal_distance(z) <= 0.1:
            continue
        flux = FluxSector(two_j)
        a1 = geometry.berry_connection(z, flux, kind)
        a2 = geometry.berry_connection_fd(z, flux, kind)
        g1 = geometry.metric(z, flux, kind, geometry.ANALYTIC).g_matrix
        g2 = geometry.metric(z, flux, kind, geometry.FINITE_DIFFERENCE).g_matrix
        worst_a = max(worst_a, np.max(np.abs(a1 - a2)) / np.max(np.abs(a1)))
        worst_g = max(worst_g, np.max(np.abs(g1 - g2)) / np.max(np.abs(g1)))
        done += 1
    ok = worst_a <= 1e-6 and worst_g <= 1e-6
    report(8, ok, f"200 configs: connection max rel err {worst_a:.1e}, metric max rel err {worst_g:.1e}")


def test_criterion_9_precession(report):
    flux, lam = FluxSector(4), 1.7
    z0 = 0.7 - 0.4j
    T = precession_period(flux, lam)
    traj = integrate([z0], flux, Boson, Latitude(lam), T, tolerance=1e-10)
    err = abs(traj.states[-1, 0] - z0)
    ok = err <= 1e-6 and traj.invariant_drift <= traj.energy_budget
    report(9, ok, f"return error {err:.1e}; energy drift {traj.invariant_drift:.1e} "
                  f"(budget {traj.energy_budget:.1e})")
