import itertools
import math

import numpy as np
import pytest

from exstat import kernels
from exstat.geometry import gram_matrix
from exstat.model import FluxSector

from conftest import random_config


def brute_permanent(a):
    n = a.shape[0]
    return sum(math.prod(a[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_permanent_matches_permutation_sum(rng, use_numba, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    ref = brute_permanent(a)
    got = kernels.permanent(a, use_numba)
    assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


def test_permanent_of_three_boson_gram_matrix(rng, use_numba):
    M = gram_matrix(random_config(rng, 3), FluxSector(2)).to_complex()
    ref = brute_permanent(M)
    assert abs(kernels.permanent(M, use_numba) - ref) <= 1e-12 * abs(ref)


def test_permanent_known_values(use_numba):
    assert kernels.permanent(np.ones((5, 5)), use_numba) == pytest.approx(120.0)
    assert kernels.permanent(np.eye(4), use_numba) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 3, 7])
def test_determinant_matches_numpy(rng, use_numba, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    ref = np.linalg.det(a)
    assert abs(kernels.determinant(a, use_numba) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_scaled_gram_has_unit_diagonal(rng):
    z = random_config(rng, 4, scale=3.0)
    Mt, *_ = kernels.scaled_gram_blocks(z, 6)
    assert np.allclose(np.diag(Mt), 1.0)
    assert np.allclose(Mt, Mt.conj().T)


def test_scaled_gram_handles_zero_flux():
    Mt, *_ = kernels.scaled_gram_blocks(np.array([0.0, 1.0 + 1j]), 0)
    assert np.allclose(Mt, 1.0)


@pytest.mark.parametrize("fermion", [False, True])
@pytest.mark.parametrize("N,two_j", [(2, 2), (3, 4), (4, 6)])
def test_backends_agree_on_liouville_batch(rng, fermion, N, two_j):
    z = random_config(rng, 64 * N).reshape(64, N)
    if fermion:
        a = kernels.fermion_liouville_batch(z, two_j, True)[1]
        b = kernels.fermion_liouville_batch(z, two_j, False)[1]
    else:
        blocks = kernels.scaled_gram_blocks(z, two_j)[:4]
        a = kernels.liouville_batch(*blocks, False, True)[1]
        b = kernels.liouville_batch(*blocks, False, False)[1]
    assert np.allclose(a, b, rtol=1e-9, atol=1e-12 * np.max(np.abs(b)))


def test_fermion_density_agrees_across_backends_far_out():
    # particles near the chart pole: the kernels switch to a rotated chart
    rng = np.random.default_rng(3)
    z = random_config(rng, 4 * 32).reshape(32, 4)
    z[:, 0] = 200.0 * np.exp(2j * np.pi * rng.uniform(size=32))
    a = kernels.fermion_liouville_batch(z, 8, True)[1]
    b = kernels.fermion_liouville_batch(z, 8, False)[1]
    assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(b))


def test_best_chart_keeps_points_inside_bounded_disc(rng):
    z = random_config(rng, 5 * 200, scale=50.0).reshape(200, 5)
    w, jac = kernels.best_chart(z)
    assert np.max(np.abs(w)) < 2.5
    eps = 1e-6
    w2, _ = kernels.best_chart(z + eps)
    assert np.allclose((w2 - w) / eps, jac, rtol=1e-4)


def test_newton_metric_matches_multilinear_formula(rng, use_numba):
    # away from coincidences both fermion formulas are accurate
    z = np.array([0.3 + 0.1j, -0.5 + 0.4j, 0.2 - 0.7j])
    blocks = kernels.scaled_gram_blocks(z, 4)[:4]
    _, _, G_ref = kernels.metric_blocks(*blocks, True, use_numba)
    G = kernels.fermion_metric(z, 4, use_numba)
    assert np.allclose(G, G_ref, rtol=1e-9, atol=1e-12)
