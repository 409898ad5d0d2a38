import numpy as np
import pytest
from scipy import stats

from noisybs.ensembles import (
    RngSeed,
    sample_gaussian_matrix,
    sample_haar_unitary,
    unitarity_residual,
)
from noisybs.errors import ValidationError


def test_single_mode_is_a_phase():
    u = sample_haar_unitary(1, RngSeed(3))
    assert abs(abs(u[0, 0]) - 1.0) < 1e-12


def test_unitarity_residual_across_sizes():
    for n in (2, 5, 16, 64):
        u = sample_haar_unitary(n, RngSeed(n))
        assert unitarity_residual(u) <= 1e-10


def test_same_seed_reproduces_bit_exactly():
    a = sample_haar_unitary(6, RngSeed(9, 4))
    b = sample_haar_unitary(6, RngSeed(9, 4))
    np.testing.assert_array_equal(a, b)


def test_distinct_streams_differ():
    a = sample_haar_unitary(6, RngSeed(9, 0))
    b = sample_haar_unitary(6, RngSeed(9, 1))
    assert not np.allclose(a, b)


def test_haar_second_moment():
    # E|U_00|^2 = 1/N; |U_00|^2 is Beta(1, N-1), Var = (N-1)/(N^2 (N+1))
    n, samples = 8, 10_000
    gen = RngSeed(1234).generator()
    vals = np.array([abs(sample_haar_unitary(n, gen)[0, 0]) ** 2 for _ in range(samples)])
    se = vals.std(ddof=1) / np.sqrt(samples)
    assert abs(vals.mean() - 1.0 / n) <= 3.0 * se


def test_haar_fourth_moment():
    # E|U_00|^4 = 2 / (N (N + 1))
    n, samples = 8, 10_000
    gen = RngSeed(4321).generator()
    vals = np.array([abs(sample_haar_unitary(n, gen)[0, 0]) ** 4 for _ in range(samples)])
    se = vals.std(ddof=1) / np.sqrt(samples)
    assert abs(vals.mean() - 2.0 / (n * (n + 1))) <= 3.0 * se


def test_eigenphases_uniform():
    # Haar invariance shows up as a flat eigenvalue-phase histogram
    n, samples, bins = 8, 10_000, 32
    gen = RngSeed(99).generator()
    counts = np.zeros(bins)
    for _ in range(samples):
        phases = np.angle(np.linalg.eigvals(sample_haar_unitary(n, gen))) % (2 * np.pi)
        h, _ = np.histogram(phases, bins=bins, range=(0.0, 2 * np.pi))
        counts += h
    expected = counts.sum() / bins
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    p = stats.chi2.sf(chi2, bins - 1)
    assert p > 0.001


def test_gaussian_matrix_moments():
    n = 15
    gen = RngSeed(7).generator()
    z = sample_gaussian_matrix(400, 250, 1.0 / n, gen)  # 1e5 entries
    flat = z.ravel()
    mag2 = np.abs(flat) ** 2
    se = mag2.std(ddof=1) / np.sqrt(flat.size)
    assert abs(mag2.mean() - 1.0 / n) <= 3.0 * se

    for part in (flat.real, flat.imag):
        se_mean = part.std(ddof=1) / np.sqrt(part.size)
        assert abs(part.mean()) <= 3.0 * se_mean
        v = part.var(ddof=1)
        se_var = np.sqrt(2.0 / (part.size - 1)) * v
        assert abs(v - 0.5 / n) <= 3.0 * se_var


def test_gaussian_determinism():
    a = sample_gaussian_matrix(3, 4, 0.2, RngSeed(5, 2))
    b = sample_gaussian_matrix(3, 4, 0.2, RngSeed(5, 2))
    np.testing.assert_array_equal(a, b)


def test_validation():
    with pytest.raises(ValidationError):
        sample_haar_unitary(0, RngSeed(1))
    with pytest.raises(ValidationError):
        sample_gaussian_matrix(2, 2, 0.0, RngSeed(1))
    with pytest.raises(ValidationError):
        RngSeed(-1)
