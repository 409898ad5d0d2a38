import itertools

import numpy as np
import pytest

from noisybs.errors import (
    InvalidPermutationError,
    IndexOutOfBoundsError,
    NonSquareMatrixError,
    ShapeMismatchError,
    SizeLimitExceededError,
    ValidationError,
)
from noisybs.matrices import (
    hadamard_conj_rowperm,
    permanent,
    permanent_batch,
    permanent_glynn,
    permanent_naive,
    permanent_ryser,
    random_complex_matrix,
    submatrix,
)


def perm_reference(m):
    """Textbook permutation-sum permanent, independent of the package kernels."""
    n = len(m)
    total = 0j
    for cols in itertools.permutations(range(n)):
        prod = 1 + 0j
        for i, c in enumerate(cols):
            prod *= m[i][c]
        total += prod
    return total


def test_one_by_one():
    assert permanent([[7]]) == 7
    assert permanent([[7]], "naive") == 7
    assert permanent([[7]], "glynn") == 7


def test_two_by_two_definition():
    m = [[1, 2], [3, 4]]
    assert permanent(m) == 10  # 1*4 + 2*3
    assert permanent(m, "naive") == 10
    assert permanent(m, "glynn") == 10


def test_empty_matrix_is_one():
    e = np.zeros((0, 0))
    for alg in ("naive", "ryser", "glynn"):
        assert permanent(e, alg) == 1


def test_identity_permanent_is_one():
    for n in range(1, 13):
        assert permanent(np.eye(n)) == pytest.approx(1.0, rel=1e-10)
        assert permanent(np.eye(n), "glynn") == pytest.approx(1.0, rel=1e-10)


def test_naive_matches_reference(rng):
    for n in (2, 3, 4):
        m = random_complex_matrix(n, rng)
        assert permanent_naive(m) == pytest.approx(perm_reference(m.tolist()), rel=1e-12)


def test_algorithms_agree_on_random_matrices(rng):
    for _ in range(40):
        n = int(rng.integers(2, 8))
        m = random_complex_matrix(n, rng)
        ref = permanent_naive(m)
        assert permanent_ryser(m) == pytest.approx(ref, rel=1e-10)
        assert permanent_glynn(m) == pytest.approx(ref, rel=1e-10)


def test_row_scaling_multilinearity(rng):
    for _ in range(10):
        m = random_complex_matrix(4, rng)
        c = complex(rng.standard_normal(), rng.standard_normal())
        scaled = m.copy()
        scaled[2] *= c
        assert permanent_ryser(scaled) == pytest.approx(c * permanent_ryser(m), rel=1e-10)


def test_simultaneous_row_col_permutation_invariance(rng):
    for _ in range(10):
        m = random_complex_matrix(4, rng)
        p = rng.permutation(4)
        permuted = m[np.ix_(p, p)]
        assert permanent_ryser(permuted) == pytest.approx(permanent_ryser(m), rel=1e-10)


def test_zero_row_gives_zero_permanent(rng):
    m = random_complex_matrix(5, rng)
    m[3] = 0
    assert abs(permanent_ryser(m)) < 1e-12
    assert abs(permanent_glynn(m)) < 1e-12


def test_batch_matches_single(rng):
    stack = np.stack([random_complex_matrix(4, rng) for _ in range(17)])
    batch = permanent_batch(stack)
    for i in range(17):
        assert batch[i] == pytest.approx(permanent_ryser(stack[i]), rel=1e-10)


def test_batch_empty_size_returns_ones():
    stack = np.zeros((5, 0, 0))
    assert np.all(permanent_batch(stack) == 1)


def test_permanent_errors():
    with pytest.raises(NonSquareMatrixError):
        permanent(np.ones((2, 3)))
    with pytest.raises(SizeLimitExceededError):
        permanent(np.eye(11), "naive")
    with pytest.raises(ValidationError):
        permanent(np.eye(2), "magic")
    with pytest.raises(ValidationError):
        permanent(np.array([[np.nan, 1], [1, 1]]))


def test_submatrix_identity_cases():
    eye = np.eye(3)
    np.testing.assert_array_equal(submatrix(eye, (0, 1), (0, 1)), np.eye(2))
    np.testing.assert_array_equal(submatrix(eye, (0,), (2,)), [[0]])


def test_submatrix_matches_direct_indexing(rng):
    u = random_complex_matrix(4, rng)
    sub = submatrix(u, (1, 3), (0, 2))
    for i, r in enumerate((1, 3)):
        for j, c in enumerate((0, 2)):
            assert sub[i, j] == u[r, c]


def test_submatrix_errors():
    with pytest.raises(IndexOutOfBoundsError):
        submatrix(np.eye(3), (0, 5), (0, 1))
    with pytest.raises(ValidationError):
        submatrix(np.eye(3), (1, 0), (0, 1))  # not increasing


def test_hadamard_identity_and_swap():
    eye = np.eye(2)
    np.testing.assert_allclose(hadamard_conj_rowperm(eye, eye, (0, 1)), np.eye(2))
    np.testing.assert_allclose(hadamard_conj_rowperm(eye, eye, (1, 0)), np.zeros((2, 2)))


def test_hadamard_matches_loop_oracle(rng):
    a = random_complex_matrix(3, rng)
    b = random_complex_matrix(3, rng)
    perm = (2, 0, 1)
    got = hadamard_conj_rowperm(a, b, perm)
    for i in range(3):
        for j in range(3):
            assert got[i, j] == pytest.approx(a[i, j] * np.conj(b[perm[i], j]), rel=1e-14)


def test_hadamard_errors(rng):
    a = random_complex_matrix(3, rng)
    with pytest.raises(ShapeMismatchError):
        hadamard_conj_rowperm(a, random_complex_matrix(2, rng), (0, 1, 2))
    with pytest.raises(InvalidPermutationError):
        hadamard_conj_rowperm(a, a, (0, 0, 2))


def test_midsize_ryser_glynn_agreement(rng):
    m = random_complex_matrix(13, rng, scale=0.5)
    r = permanent_ryser(m)
    g = permanent_glynn(m)
    assert g == pytest.approx(r, rel=1e-9)
