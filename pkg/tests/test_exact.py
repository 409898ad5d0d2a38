import itertools
import math

import numpy as np
import pytest

from noisybs import (
    NoiseModel,
    RngSeed,
    full_distribution_exact,
    ideal_distribution_with_collisions,
    permanent,
    photon_number_weight,
    prob_given_input,
    prob_postselected,
    sample_haar_unitary,
)
from noisybs.errors import (
    CombinatorialBlowupError,
    SizeLimitExceededError,
    ValidationError,
)
from noisybs.exact import overlap_matrix
from noisybs.studies import beamsplitter_5050


BS = beamsplitter_5050()


def test_overlap_matrix_structure():
    s = overlap_matrix(4, 0.3)
    assert np.all(np.diag(s) == 1.0)
    off = s[~np.eye(4, dtype=bool)]
    assert np.all(off == 0.3)
    np.testing.assert_array_equal(s, s.T)


def test_single_photon_probability(haar_u12):
    for q0 in (0, 5, 11):
        got = prob_given_input(haar_u12, (2,), (q0,), x=0.37)
        assert got == pytest.approx(abs(haar_u12[q0, 2]) ** 2, rel=1e-12)


@pytest.mark.parametrize("x", [0.0, 0.25, 0.5, 0.866, 1.0])
def test_hong_ou_mandel_coincidence(x):
    got = prob_given_input(BS, (0, 1), (0, 1), x)
    assert got == pytest.approx((1.0 - x * x) / 2.0, abs=1e-12)


def test_indistinguishable_limit_equals_squared_permanent(rng):
    # x = 1 collapses the permutation sum onto |Perm(M)|^2
    for trial in range(6):
        n = int(rng.integers(6, 10))
        m = int(rng.integers(2, 6))
        u = sample_haar_unitary(n, rng)
        tau = tuple(sorted(rng.choice(n, size=m, replace=False).tolist()))
        q = tuple(sorted(rng.choice(n, size=m, replace=False).tolist()))
        block = u[np.ix_(q, tau)]  # rows by output, columns by input
        assert prob_given_input(u, tau, q, 1.0) == pytest.approx(
            abs(permanent(block)) ** 2, rel=1e-9, abs=1e-13
        )


def test_classical_limit_equals_positive_permanent(rng):
    # x = 0 keeps only the identity permutation: Perm(|M|^2)
    for trial in range(6):
        u = sample_haar_unitary(9, rng)
        tau = tuple(sorted(rng.choice(9, size=4, replace=False).tolist()))
        q = tuple(sorted(rng.choice(9, size=4, replace=False).tolist()))
        block = u[np.ix_(q, tau)]
        expected = permanent(np.abs(block) ** 2).real
        assert prob_given_input(u, tau, q, 0.0) == pytest.approx(expected, rel=1e-10)


def test_prob_given_input_real_and_nonnegative(rng):
    for _ in range(500):
        n = int(rng.integers(4, 9))
        m = int(rng.integers(1, 6))
        if m > n:
            continue
        u = sample_haar_unitary(n, rng)
        tau = tuple(sorted(rng.choice(n, size=m, replace=False).tolist()))
        q = tuple(sorted(rng.choice(n, size=m, replace=False).tolist()))
        x = float(rng.uniform())
        p = prob_given_input(u, tau, q, x)
        assert p >= -1e-12
        assert p <= 1.0 + 1e-9


def test_hom_monotone_in_overlap():
    values = [prob_given_input(BS, (0, 1), (0, 1), x) for x in np.linspace(0, 1, 11)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_prob_given_input_errors(haar_u12):
    with pytest.raises(ValidationError):
        prob_given_input(haar_u12, (0, 1), (0,), 0.5)
    with pytest.raises(ValidationError):
        prob_given_input(haar_u12, (0, 1), (0, 1), 1.5)
    with pytest.raises(SizeLimitExceededError):
        u = sample_haar_unitary(11, RngSeed(0))
        prob_given_input(u, tuple(range(11)), tuple(range(11)), 1.0)


def test_postselected_reduces_to_single_subset(haar_u12):
    noise = NoiseModel(x=0.6, eta=1.0, n=3, m=3)
    q = (1, 5, 9)
    assert prob_postselected(haar_u12, q, noise) == pytest.approx(
        prob_given_input(haar_u12, (0, 1, 2), q, 0.6), rel=1e-12
    )


def test_postselected_two_term_hand_expansion(haar_u12):
    # n = 2, m = 1: average of the two single-photon channels
    noise = NoiseModel(x=1.0, eta=0.5, n=2, m=1)
    for q0 in (0, 7):
        expected = (abs(haar_u12[q0, 0]) ** 2 + abs(haar_u12[q0, 1]) ** 2) / 2.0
        assert prob_postselected(haar_u12, (q0,), noise) == pytest.approx(expected, rel=1e-12)


def test_postselected_mass_bounded():
    u = sample_haar_unitary(15, RngSeed(21))
    noise = NoiseModel(x=1.0, eta=1.0, n=5, m=3)
    total = sum(
        prob_postselected(u, q, noise) for q in itertools.combinations(range(15), 3)
    )
    assert 0.5 <= total <= 1.0 + 1e-9


def test_postselected_blowup_guard():
    u = np.eye(40)
    noise = NoiseModel(x=1.0, eta=1.0, n=40, m=20)
    with pytest.raises(CombinatorialBlowupError):
        prob_postselected(u, tuple(range(20)), noise)


def test_photon_number_weight_values():
    assert photon_number_weight(2, 1, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert photon_number_weight(5, 5, 1.0) == 1.0
    assert photon_number_weight(5, 3, 1.0) == 0.0
    assert photon_number_weight(8, 6, 0.75) == pytest.approx(
        28 * 0.75**6 * 0.25**2, rel=1e-12
    )


def test_photon_number_weight_normalization():
    for n in (1, 8, 33, 64):
        for eta in (0.1, 0.5, 0.93):
            total = math.fsum(photon_number_weight(n, m, eta) for m in range(n + 1))
            assert abs(total - 1.0) <= 1e-12


def test_full_distribution_lossless_matches_postselected(haar_u12):
    noise = NoiseModel(x=0.8, eta=1.0, n=3, m=3)
    qs = list(itertools.combinations(range(12), 3))[:20]
    full = full_distribution_exact(haar_u12, noise, qs)
    for q, v in zip(qs, full):
        assert v == pytest.approx(prob_postselected(haar_u12, q, noise), rel=1e-12)


def test_full_distribution_single_photon(haar_u12):
    noise = NoiseModel(x=1.0, eta=0.7, n=1, m=0)
    qs = [()] + [(l,) for l in range(12)]
    vals = full_distribution_exact(haar_u12, noise, qs)
    assert vals[0] == pytest.approx(0.3, abs=1e-12)  # vacuum
    for l in range(12):
        assert vals[1 + l] == pytest.approx(0.7 * abs(haar_u12[l, 0]) ** 2, rel=1e-12)  # eta |U[l][0]|^2
    assert vals.sum() == pytest.approx(1.0, abs=1e-9)


def test_full_distribution_total_mass_bounded():
    u = sample_haar_unitary(10, RngSeed(77))
    noise = NoiseModel(x=0.5, eta=0.6, n=3, m=3)
    qs = [q for m in range(4) for q in itertools.combinations(range(10), m)]
    total = float(full_distribution_exact(u, noise, qs).sum())
    assert 0.0 < total <= 1.0 + 1e-9


def test_collision_oracle_hom():
    dist = ideal_distribution_with_collisions(BS, 2)
    assert dist[(0, 0)] == pytest.approx(0.5, abs=1e-12)
    assert dist[(1, 1)] == pytest.approx(0.5, abs=1e-12)
    assert dist[(0, 1)] == pytest.approx(0.0, abs=1e-12)


def test_collision_oracle_single_photon(haar_u12):
    dist = ideal_distribution_with_collisions(haar_u12, 1)
    for (l,), p in dist.items():
        assert p == pytest.approx(abs(haar_u12[l, 0]) ** 2, rel=1e-12)  # |U[l][0]|^2
    assert math.fsum(dist.values()) == pytest.approx(1.0, abs=1e-12)


def test_collision_oracle_normalization():
    u = sample_haar_unitary(8, RngSeed(3))
    dist = ideal_distribution_with_collisions(u, 3)
    assert math.fsum(dist.values()) == pytest.approx(1.0, abs=1e-9)


def test_collision_free_plus_collision_mass_is_one():
    u = sample_haar_unitary(10, RngSeed(4))
    n = 4
    dist = ideal_distribution_with_collisions(u, n)
    noise = NoiseModel(x=1.0, eta=1.0, n=n, m=n)
    free = math.fsum(
        prob_postselected(u, q, noise) for q in itertools.combinations(range(10), n)
    )
    free_oracle = math.fsum(p for s, p in dist.items() if len(set(s)) == n)
    collision = math.fsum(p for s, p in dist.items() if len(set(s)) < n)
    assert free == pytest.approx(free_oracle, rel=1e-9)
    assert free + collision == pytest.approx(1.0, abs=1e-9)


def test_collision_oracle_caps():
    with pytest.raises(SizeLimitExceededError):
        ideal_distribution_with_collisions(np.eye(13), 2)
    with pytest.raises(SizeLimitExceededError):
        ideal_distribution_with_collisions(np.eye(10), 6)


def test_noise_model_validation_and_alpha():
    nm = NoiseModel(x=0.5, eta=0.8, n=10, m=6)
    assert nm.alpha_postselected == pytest.approx(0.25 * 0.6)
    assert nm.alpha_transmission == pytest.approx(0.25 * 0.8)
    with pytest.raises(ValidationError):
        NoiseModel(x=1.2, eta=1.0, n=2, m=1)
    with pytest.raises(ValidationError):
        NoiseModel(x=1.0, eta=0.0, n=2, m=1)
    with pytest.raises(ValidationError):
        NoiseModel(x=1.0, eta=1.0, n=2, m=3)
