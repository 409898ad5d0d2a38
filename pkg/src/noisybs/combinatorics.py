"""Enumeration and counting for mode configurations and permutations grouped
by their number of non-fixed points.

Conventions, fixed once for the whole package:

* a mode configuration is a strictly increasing tuple of non-negative ints
  (collision-free by construction);
* the derangement order j of a permutation is its number of NON-fixed
  points, so j = 0 is the identity class and j = 1 is empty (no permutation
  moves exactly one element);
* D(m, f) counts permutations of m elements with exactly f fixed points.

Counts use Python integers throughout, so binomials like C(50, 25) are exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import InvalidPermutationError, ValidationError

__all__ = [
    "Permutation",
    "combinations",
    "count_covariant_assignments",
    "count_expansion_terms",
    "derangements",
    "permutations_with_derangement_size",
    "rencontres",
    "subfactorial",
    "validate_mode_configuration",
]


def validate_mode_configuration(indices: Sequence[int], n_modes: int | None = None) -> tuple[int, ...]:
    """Check strict increase (and optionally bounds) and return a tuple."""
    t = tuple(int(i) for i in indices)
    if any(i < 0 for i in t):
        raise ValidationError(f"mode indices must be non-negative: {t}")
    if any(a >= b for a, b in zip(t, t[1:])):
        raise ValidationError(f"mode indices must be strictly increasing: {t}")
    if n_modes is not None and t and t[-1] >= n_modes:
        raise ValidationError(f"mode index {t[-1]} out of range for {n_modes} modes")
    return t


def combinations(n: int, m: int) -> Iterator[tuple[int, ...]]:
    """All m-element mode configurations over {0, ..., n-1}, lexicographic."""
    if not 0 <= m <= n:
        raise ValidationError(f"need 0 <= m <= n, got m={m}, n={n}")
    return itertools.combinations(range(n), m)


@dataclass(frozen=True)
class Permutation:
    """A permutation of {0, ..., len-1} stored as its image array."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise InvalidPermutationError(f"not a bijection: {self.mapping}")

    def __len__(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    @property
    def fixed_points(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.mapping) if v == i)

    @property
    def deranged_positions(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.mapping) if v != i)

    @property
    def derangement_order(self) -> int:
        """Number of non-fixed points (the interference order j)."""
        return len(self.deranged_positions)

    @property
    def deranged_part(self) -> dict[int, int]:
        """The induced derangement, restricted to the non-fixed positions."""
        return {i: self.mapping[i] for i in self.deranged_positions}

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.mapping)
        for i, v in enumerate(self.mapping):
            inv[v] = i
        return Permutation(tuple(inv))

    def apply(self, seq: Sequence) -> tuple:
        """Reorder seq so position i carries seq[mapping[i]]."""
        return tuple(seq[self.mapping[i]] for i in range(len(self.mapping)))


def derangements(elements: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """All fixed-point-free arrangements of `elements` (image tuples).

    Yields tuples t with t[i] != elements[i] for all i, generated by
    backtracking in lexicographic order of the image tuple.
    """
    elems = tuple(elements)
    k = len(elems)
    if k == 0:
        yield ()
        return

    def rec(pos: int, used: list[bool], acc: list[int]) -> Iterator[tuple[int, ...]]:
        if pos == k:
            yield tuple(acc)
            return
        for idx, cand in enumerate(elems):
            if used[idx] or cand == elems[pos]:
                continue
            used[idx] = True
            acc.append(cand)
            yield from rec(pos + 1, used, acc)
            acc.pop()
            used[idx] = False

    yield from rec(0, [False] * k, [])


def permutations_with_derangement_size(m: int, j: int) -> Iterator[Permutation]:
    """Permutations of {0..m-1} with exactly j non-fixed points.

    j = 1 yields nothing (that class is empty), so callers can loop j = 0..m
    without special-casing. Enumerated by (deranged position set, derangement
    of that set), both in lexicographic order.
    """
    if not 0 <= j <= m:
        raise ValidationError(f"need 0 <= j <= m, got j={j}, m={m}")
    if j == 1:
        return
    for deranged in itertools.combinations(range(m), j):
        for images in derangements(deranged):
            mapping = list(range(m))
            for pos, img in zip(deranged, images):
                mapping[pos] = img
            yield Permutation(tuple(mapping))


def subfactorial(j: int) -> int:
    """Number of derangements of j elements (!j)."""
    if j < 0:
        raise ValidationError("subfactorial needs j >= 0")
    d = 1
    for i in range(1, j + 1):
        d = d * i + (-1) ** i
    return d


def rencontres(m: int, f: int) -> int:
    """D(m, f): permutations of m elements with exactly f fixed points."""
    if not 0 <= f <= m:
        raise ValidationError(f"need 0 <= f <= m, got f={f}, m={m}")
    return math.comb(m, f) * subfactorial(m - f)


def _check_jmn(n: int, m: int, j: int) -> None:
    if not 0 <= j <= m <= n:
        raise ValidationError(f"need 0 <= j <= m <= n, got j={j}, m={m}, n={n}")


def count_covariant_assignments(n: int, m: int, j: int) -> int:
    """Ways to place the m-j fixed points of a deranged core into n-j inputs.

    This is the count of R-terms that can share a nonzero covariance with a
    given order-j term: C(n-j, m-j). It is C(n, m) at j = 0 and 1 at j = m.
    """
    _check_jmn(n, m, j)
    return math.comb(n - j, m - j)


def count_expansion_terms(n: int, m: int, j: int) -> int:
    """Number of (tau, sigma_j, rho) summands at interference order j.

    C(n, m) input subsets x C(m, j) deranged-position sets x !j derangements
    x C(m, j) column subsets in the Laplace split.
    """
    _check_jmn(n, m, j)
    return math.comb(n, m) * math.comb(m, j) ** 2 * subfactorial(j)
