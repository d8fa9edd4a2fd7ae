import math

import numpy as np
import pytest

from exstat import geometry
from exstat.errors import FermionDegenerate, PermanentOverCap, StepTooSmall
from exstat.geometry import (
    ANALYTIC,
    FINITE_DIFFERENCE,
    berry_connection,
    berry_connection_fd,
    gram_matrix,
    kahler_potential,
    log_norm,
    metric,
)
from exstat.model import Boson, FluxSector, Fermion, ParticleConfig

from conftest import random_config


def test_gram_examples():
    assert np.allclose(gram_matrix([0], FluxSector(2)).to_complex(), [[1]])
    assert np.allclose(gram_matrix([0, 1], FluxSector(2)).to_complex(), [[1, 1], [1, 4]])
    assert np.allclose(gram_matrix([0, 1j], FluxSector(1)).to_complex(), [[1, 1], [1, 2]])


def test_gram_matches_direct_power(rng):
    z = random_config(rng, 5)
    M = gram_matrix(z, FluxSector(7)).to_complex()
    ref = (1 + np.conj(z)[:, None] * z[None, :]) ** 7
    assert np.allclose(M, ref, rtol=1e-12)


def test_gram_rejects_non_finite():
    with pytest.raises(ValueError):
        gram_matrix([0, np.inf], FluxSector(2))
    with pytest.raises(ValueError):
        ParticleConfig([np.nan])


def test_gram_hermitian_psd(rng):
    for _ in range(1000):
        n = rng.integers(1, 7)
        two_j = int(rng.integers(0, 9))
        M = gram_matrix(random_config(rng, n), FluxSector(two_j)).to_complex()
        assert np.allclose(M, M.conj().T, rtol=1e-13, atol=0)
        scale = np.max(np.abs(np.diag(M)))
        assert np.linalg.eigvalsh(M).min() >= -1e-10 * scale


def test_log_norm_coinciding_bosons():
    z = 0.4 - 0.3j
    for two_j in (1, 2, 5):
        got = log_norm(gram_matrix([z, z], FluxSector(two_j)), Boson)
        assert got == pytest.approx(math.log(2) + 2 * two_j * math.log(1 + abs(z) ** 2), rel=1e-13)


def test_log_norm_errors():
    with pytest.raises(FermionDegenerate):
        log_norm(gram_matrix([0.5, 0.5], FluxSector(2)), Fermion)
    with pytest.raises(FermionDegenerate):
        log_norm(gram_matrix([0, 1, 2], FluxSector(1)), Fermion)
    with pytest.raises(PermanentOverCap):
        log_norm(gram_matrix(np.linspace(0, 1, 15), FluxSector(2)), Boson)


def test_kahler_examples():
    assert kahler_potential([0, 1], FluxSector(2), Fermion) == pytest.approx(math.log(3), rel=1e-14)
    z = 0.7 + 0.2j
    for N in (1, 3, 5):
        for two_j in (1, 4):
            ref = math.lgamma(N + 1) + N * two_j * math.log(1 + abs(z) ** 2)
            assert kahler_potential([z] * N, FluxSector(two_j), Boson) == pytest.approx(ref, rel=1e-12)


def test_kahler_scales_with_hbar():
    assert kahler_potential([0.3], FluxSector(2, hbar=0.5), Boson) == pytest.approx(
        0.5 * 2 * math.log(1.09)
    )


def test_kahler_permutation_invariant(rng):
    for kind in (Boson, Fermion):
        z = random_config(rng, 4)
        perm = rng.permutation(4)
        a = kahler_potential(z, FluxSector(5), kind)
        b = kahler_potential(z[perm], FluxSector(5), kind)
        assert a == pytest.approx(b, rel=1e-13, abs=1e-13)


def test_boson_norm_dominates_fermion_norm(rng):
    for _ in range(200):
        n = int(rng.integers(2, 5))
        z = random_config(rng, n)
        flux = FluxSector(int(rng.integers(n - 1, 7)))
        g = gram_matrix(z, flux)
        assert log_norm(g, Boson) >= log_norm(g, Fermion) - 1e-12


def test_berry_connection_single_particle():
    z = 0.3 - 1.1j
    flux = FluxSector(4)
    A = berry_connection([z], flux, Boson)
    assert A[0] == pytest.approx(1j * flux.j * np.conj(z) / (1 + abs(z) ** 2), rel=1e-13)
    assert berry_connection([0], flux, Boson)[0] == 0


def test_berry_connection_matches_finite_difference(rng):
    z = random_config(rng, 2)
    for kind in (Boson, Fermion):
        a = berry_connection(z, FluxSector(2), kind)
        b = berry_connection_fd(z, FluxSector(2), kind)
        assert np.max(np.abs(a - b)) <= 1e-6


@pytest.mark.parametrize("two_j", [1, 2, 6])
def test_single_particle_metric(two_j):
    z = 1.3 + 0.4j
    G = metric([z], FluxSector(two_j), Boson).g_matrix
    assert G[0, 0] == pytest.approx(two_j / (1 + abs(z) ** 2) ** 2, rel=1e-13)


def test_coinciding_bosons_metric_sums_to_n_spheres():
    z = -0.2 + 0.9j
    for N in (2, 3, 4):
        G = metric([z] * N, FluxSector(3), Boson).g_matrix
        assert G.sum().real == pytest.approx(N * 3 / (1 + abs(z) ** 2) ** 2, rel=1e-10)


def test_fermion_example_cross_method():
    a = metric([0, 1], FluxSector(2), Fermion, ANALYTIC).g_matrix
    b = metric([0, 1], FluxSector(2), Fermion, FINITE_DIFFERENCE).g_matrix
    assert np.allclose(a, b, rtol=1e-6, atol=1e-6 * np.max(np.abs(a)))


def test_metric_hermitian_and_positive(rng):
    for _ in range(100):
        n = int(rng.integers(1, 5))
        two_j = int(rng.integers(n, 7))
        for kind in (Boson, Fermion):
            G = metric(random_config(rng, n), FluxSector(two_j), kind).g_matrix
            assert np.array_equal(G, G.conj().T)
            assert np.linalg.eigvalsh(G).min() >= -1e-10 * np.max(np.abs(G))


def test_fermion_metric_smooth_through_near_coincidence():
    flux = FluxSector(3)
    dets = []
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        G = metric([0.2, 0.2 + eps, -0.5j], flux, Fermion).g_matrix
        dets.append(np.linalg.det(G).real)
    assert all(d >= 0 for d in dets)
    # the density vanishes like |eps|^2 at coincidence
    assert dets[-1] < 1e-5 * dets[0]


def test_metric_with_tiny_step_flags_cancellation():
    with pytest.raises(StepTooSmall):
        metric([0.1, 0.5j], FluxSector(2), Boson, FINITE_DIFFERENCE, step=1e-9)


def test_metric_unknown_method():
    with pytest.raises(ValueError):
        metric([0.1], FluxSector(2), Boson, "spectral")


def test_metric_forms():
    g = metric([0.5], FluxSector(2), Boson)
    assert np.allclose(g.field_strength, 1j * g.g_matrix)
    assert np.allclose(g.symplectic_form, -1j * g.g_matrix)
    assert np.allclose(g.line_element, 2 * g.g_matrix)
    assert g.liouville_density() == pytest.approx(2 * g.g_matrix[0, 0].real)


def test_single_particle_area():
    assert geometry.single_particle_area(FluxSector(2)) == 2.0
    assert geometry.single_particle_area(FluxSector(0)) == 0.0
    assert geometry.single_particle_area(FluxSector(4)) == 4.0


def test_single_particle_area_by_quadrature():
    from scipy.integrate import quad

    # radial integral of 2 G over the plane, in units of h = 2 pi
    two_j = 4
    val, _ = quad(lambda r: 2 * two_j / (1 + r * r) ** 2 * 2 * math.pi * r, 0, np.inf)
    assert val / (2 * math.pi) == pytest.approx(geometry.single_particle_area(FluxSector(two_j)), rel=1e-10)


def test_rotation_preserves_chordal_distance(rng):
    z = random_config(rng, 6)
    w = geometry.rotate(z, 0.83)
    d0 = geometry.chordal_distance(z[:, None], z[None, :])
    d1 = geometry.chordal_distance(w[:, None], w[None, :])
    assert np.allclose(d0, d1, atol=1e-13)


def test_metric_is_rotation_covariant(rng):
    # G(z) = J^H G(w) J for a rigid rotation w(z)
    theta = 1.1
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    z = random_config(rng, 3)
    w = geometry.rotate(z, theta)
    jac = 1 / (-z * s + c) ** 2
    for kind in (Boson, Fermion):
        Gz = metric(z, FluxSector(4), kind).g_matrix
        Gw = metric(w, FluxSector(4), kind).g_matrix
        assert np.allclose(Gz, np.conj(jac)[:, None] * Gw * jac[None, :], rtol=1e-9, atol=1e-12)
