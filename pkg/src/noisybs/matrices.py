"""Complex matrix kernels: permanents (naive / Ryser / Glynn), submatrix
extraction and the conjugated row-permuted Hadamard product.

Matrices are dense numpy arrays in row-major order. The permanent of the
empty (0 x 0) matrix is defined as 1 (empty product convention) so Laplace
expansions degenerate gracefully at the boundary orders.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .errors import (
    InvalidPermutationError,
    IndexOutOfBoundsError,
    NonSquareMatrixError,
    ShapeMismatchError,
    SizeLimitExceededError,
    ValidationError,
)

try:  # optional JIT for the Gray-code kernels
    import numba as _nb
except ModuleNotFoundError:  # pragma: no cover - exercised only without numba
    _nb = None

NAIVE_SIZE_LIMIT = 10

__all__ = [
    "NAIVE_SIZE_LIMIT",
    "as_complex_matrix",
    "permanent",
    "permanent_batch",
    "permanent_naive",
    "permanent_ryser",
    "permanent_glynn",
    "submatrix",
    "hadamard_conj_rowperm",
]


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return `a` as a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.size and not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValidationError(f"{name} contains non-finite entries")
    return m


def _require_square(m: np.ndarray) -> int:
    if m.shape[0] != m.shape[1]:
        raise NonSquareMatrixError(f"permanent needs a square matrix, got {m.shape}")
    return m.shape[0]


def permanent_naive(mat) -> complex:
    """Permanent by direct sum over all n! permutations (n <= 10)."""
    m = as_complex_matrix(mat)
    n = _require_square(m)
    if n > NAIVE_SIZE_LIMIT:
        raise SizeLimitExceededError(
            f"naive permanent limited to size {NAIVE_SIZE_LIMIT}, got {n}"
        )
    if n == 0:
        return 1 + 0j
    total = 0j
    rows = range(n)
    for cols in itertools.permutations(rows):
        prod = 1 + 0j
        for i, j in zip(rows, cols):
            prod *= m[i, j]
        total += prod
    return complex(total)


if _nb is not None:

    @_nb.njit(cache=True)
    def _ryser_gray(m):  # pragma: no cover - compiled
        n = m.shape[0]
        total = 0j
        row_sums = np.zeros(n, dtype=np.complex128)
        sign = 1.0 if n % 2 == 0 else -1.0  # (-1)^(n - |S|) tracked incrementally
        gray = 0
        for i in range(1, 1 << n):
            # bit flipped between consecutive Gray codes is the lowest set bit of i
            bit = i & (-i)
            col = 0
            b = bit
            while b > 1:
                b >>= 1
                col += 1
            new_gray = gray ^ bit
            if new_gray > gray:
                for r in range(n):
                    row_sums[r] += m[r, col]
            else:
                for r in range(n):
                    row_sums[r] -= m[r, col]
            gray = new_gray
            sign = -sign
            prod = 1 + 0j
            for r in range(n):
                prod *= row_sums[r]
            total += sign * prod
        return total

    @_nb.njit(cache=True)
    def _glynn_gray(m):  # pragma: no cover - compiled
        n = m.shape[0]
        # delta = (+1, ..., +1) start; iterate Gray codes over the last n-1 signs
        col_sums = np.zeros(n, dtype=np.complex128)
        for c in range(n):
            for r in range(n):
                col_sums[c] += m[r, c]
        prod = 1 + 0j
        for c in range(n):
            prod *= col_sums[c]
        total = prod
        sign = 1.0
        gray = 0
        for i in range(1, 1 << (n - 1)):
            bit = i & (-i)
            row = 1
            b = bit
            while b > 1:
                b >>= 1
                row += 1
            new_gray = gray ^ bit
            if new_gray > gray:  # delta_row flips +1 -> -1
                for c in range(n):
                    col_sums[c] -= 2.0 * m[row, c]
            else:
                for c in range(n):
                    col_sums[c] += 2.0 * m[row, c]
            gray = new_gray
            sign = -sign
            prod = 1 + 0j
            for c in range(n):
                prod *= col_sums[c]
            total += sign * prod
        return total / 2.0 ** (n - 1)

else:  # pragma: no cover - exercised only without numba
    _ryser_gray = None
    _glynn_gray = None


_SUBSET_CHUNK = 1 << 20


def _ryser_subsets_numpy(m: np.ndarray) -> complex:
    """Ryser formula evaluated over explicit subset blocks (fallback path)."""
    n = m.shape[0]
    total = 0j
    for start in range(1, 1 << n, _SUBSET_CHUNK):
        stop = min(start + _SUBSET_CHUNK, 1 << n)
        subs = np.arange(start, stop, dtype=np.int64)
        masks = ((subs[:, None] >> np.arange(n)) & 1).astype(np.float64)
        signs = (-1.0) ** (n - masks.sum(axis=1))
        row_sums = masks @ m.T  # (chunk, n)
        total += np.prod(row_sums, axis=1) @ signs
    return complex(total)


def _glynn_subsets_numpy(m: np.ndarray) -> complex:
    n = m.shape[0]
    total = 0j
    for start in range(0, 1 << (n - 1), _SUBSET_CHUNK):
        stop = min(start + _SUBSET_CHUNK, 1 << (n - 1))
        subs = np.arange(start, stop, dtype=np.int64)
        bits = (subs[:, None] >> np.arange(n - 1)) & 1
        deltas = np.hstack(
            [np.ones((len(subs), 1)), 1.0 - 2.0 * bits.astype(np.float64)]
        )
        col_sums = deltas @ m  # (chunk, n)
        total += np.prod(col_sums, axis=1) @ np.prod(deltas, axis=1)
    return complex(total) / 2 ** (n - 1)


def permanent_ryser(mat) -> complex:
    """Permanent via Ryser's inclusion-exclusion formula, O(n 2^n)."""
    m = as_complex_matrix(mat)
    n = _require_square(m)
    if n == 0:
        return 1 + 0j
    if n == 1:
        return complex(m[0, 0])
    if _ryser_gray is not None:
        return complex(_ryser_gray(np.ascontiguousarray(m)))
    return _ryser_subsets_numpy(m)


def permanent_glynn(mat) -> complex:
    """Permanent via Glynn's formula with balanced +-1 vectors, O(n 2^n)."""
    m = as_complex_matrix(mat)
    n = _require_square(m)
    if n == 0:
        return 1 + 0j
    if n == 1:
        return complex(m[0, 0])
    if _glynn_gray is not None:
        return complex(_glynn_gray(np.ascontiguousarray(m)))
    return _glynn_subsets_numpy(m)


_ALGORITHMS = {
    "naive": permanent_naive,
    "ryser": permanent_ryser,
    "glynn": permanent_glynn,
}


def permanent(mat, alg: str = "ryser") -> complex:
    """Permanent of a square complex matrix.

    `alg` is one of "naive" (n <= 10 only), "ryser" or "glynn". The empty
    matrix returns 1 under every algorithm.
    """
    try:
        fn = _ALGORITHMS[alg]
    except KeyError:
        raise ValidationError(f"unknown permanent algorithm {alg!r}") from None
    return fn(mat)


_BATCH_MASKS: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _batch_masks(n: int) -> tuple[np.ndarray, np.ndarray]:
    cached = _BATCH_MASKS.get(n)
    if cached is None:
        subs = np.arange(1, 1 << n, dtype=np.int64)
        masks = ((subs[:, None] >> np.arange(n)) & 1).astype(np.float64)
        signs = (-1.0) ** (n - masks.sum(axis=1))
        cached = (np.ascontiguousarray(masks.T), signs)
        _BATCH_MASKS[n] = cached
    return cached


def permanent_batch(stack, max_elems: int = 1 << 24) -> np.ndarray:
    """Permanents of a stack of square matrices, shape (..., n, n) -> (...).

    Vectorized Ryser over all subsets at once; intended for the small sizes
    (n <= ~8) that dominate the interference expansions. Large leading batches
    are processed in chunks bounded by `max_elems` intermediate entries.
    """
    arr = np.asarray(stack, dtype=np.complex128)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise NonSquareMatrixError(f"stack must have square trailing axes, got {arr.shape}")
    n = arr.shape[-1]
    lead = arr.shape[:-2]
    if n == 0:
        return np.ones(lead, dtype=np.complex128)
    flat = arr.reshape(-1, n, n)
    masks_t, signs = _batch_masks(n)
    out = np.empty(flat.shape[0], dtype=np.complex128)
    step = max(1, max_elems // (n * masks_t.shape[1]))
    for lo in range(0, flat.shape[0], step):
        block = flat[lo : lo + step]
        row_sums = block @ masks_t  # (b, n, 2^n - 1)
        out[lo : lo + step] = np.prod(row_sums, axis=1) @ signs
    return out.reshape(lead)


def _check_strictly_increasing(idx: Sequence[int], bound: int, name: str) -> np.ndarray:
    arr = np.asarray(idx, dtype=np.intp)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-D")
    if arr.size and (arr.min() < 0 or arr.max() >= bound):
        raise IndexOutOfBoundsError(f"{name} out of bounds for dimension {bound}: {arr}")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise ValidationError(f"{name} must be strictly increasing, got {arr}")
    return arr


def submatrix(u, row_idx: Sequence[int], col_idx: Sequence[int]) -> np.ndarray:
    """Submatrix U[row_idx, :][:, col_idx] for strictly increasing index lists."""
    m = as_complex_matrix(u, "U")
    rows = _check_strictly_increasing(row_idx, m.shape[0], "row_idx")
    cols = _check_strictly_increasing(col_idx, m.shape[1], "col_idx")
    return m[np.ix_(rows, cols)]


def hadamard_conj_rowperm(a, b, perm: Sequence[int]) -> np.ndarray:
    """Elementwise product A o conj(B with rows permuted by `perm`).

    result[i, j] = A[i, j] * conj(B[perm[i], j]); this is the M_tau o
    M*_sigma(tau) kernel of the distinguishability permutation sum.
    """
    am = as_complex_matrix(a, "A")
    bm = as_complex_matrix(b, "B")
    if am.shape != bm.shape:
        raise ShapeMismatchError(f"shape mismatch {am.shape} vs {bm.shape}")
    p = np.asarray(perm, dtype=np.intp)
    if p.shape != (am.shape[0],) or sorted(p.tolist()) != list(range(am.shape[0])):
        raise InvalidPermutationError(f"perm is not a permutation of rows: {perm}")
    return am * np.conj(bm[p, :])


def random_complex_matrix(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Test helper: n x n matrix with independent standard complex entries."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * z / math.sqrt(2)
