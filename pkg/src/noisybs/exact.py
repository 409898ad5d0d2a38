"""Exact output probabilities of a lossy, partially distinguishable linear
interferometer.

The three layers of the model:

* `prob_given_input`: the permutation sum over the uniform-overlap matrix
  S_ij = x + delta_ij (1 - x), weighting each permutation by x^j where j is
  its number of non-fixed points. This is the brute-force m! reference path.
* `prob_postselected`: the uniform mixture over all C(n, m) input subsets
  that can feed m detected photons.
* `photon_number_weight` / `full_distribution_exact`: the binomial layer for
  a random number of detected photons under uniform input loss.

Amplitude convention: U[l, i] feeds output mode l from input mode i, so the
single-photon probability is |U[q0, tau0]|^2 and the m-photon block has rows
indexed by photons (inputs) and entries M[i, j] = U[q_j, tau_i].

Collision outputs are excluded everywhere except in the x = 1 normalization
oracle `ideal_distribution_with_collisions`. The collision-free distribution
at fixed m is deliberately NOT renormalized to 1: the C(n,m)^-1 prefactor is
kept as defined, and the finite-N collision leak stays visible (it is what
the trace-distance studies measure against).
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .combinatorics import validate_mode_configuration
from .errors import CombinatorialBlowupError, SizeLimitExceededError, ValidationError
from .matrices import as_complex_matrix, permanent_batch

__all__ = [
    "BRUTE_FORCE_M_LIMIT",
    "NoiseModel",
    "full_distribution_exact",
    "ideal_distribution_with_collisions",
    "overlap_matrix",
    "photon_number_weight",
    "prob_given_input",
    "prob_postselected",
]

BRUTE_FORCE_M_LIMIT = 10
POSTSELECT_SUBSET_CAP = 10**6
_PERM_CACHE_LIMIT = 7
_PERM_CHUNK = 40320


@dataclass(frozen=True)
class NoiseModel:
    """Uniform imperfection parameters of one experiment.

    x is the pairwise internal-state overlap (1 = indistinguishable,
    0 = classical), eta the per-photon transmission, n the input photon
    count and m the detected photon count for post-selected settings.
    """

    x: float
    eta: float
    n: int
    m: int

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ValidationError(f"overlap x must be in [0, 1], got {self.x}")
        if not 0.0 < self.eta <= 1.0:
            raise ValidationError(f"transmission eta must be in (0, 1], got {self.eta}")
        if not 0 <= self.m <= self.n:
            raise ValidationError(f"need 0 <= m <= n, got m={self.m}, n={self.n}")

    @property
    def alpha_postselected(self) -> float:
        """Figure of merit x^2 m / n (fixed detected-photon convention)."""
        return self.x**2 * self.m / self.n

    @property
    def alpha_transmission(self) -> float:
        """Figure of merit x^2 eta (asymptotic convention)."""
        return self.x**2 * self.eta

    def with_detected(self, m: int) -> "NoiseModel":
        return dataclasses.replace(self, m=m)


def overlap_matrix(m: int, x: float) -> np.ndarray:
    """The m x m overlap matrix S with unit diagonal and x off-diagonal."""
    if m < 1:
        raise ValidationError("need m >= 1")
    return x + (1.0 - x) * np.eye(m)


_PERM_ARRAYS: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _perm_arrays(m: int) -> tuple[np.ndarray, np.ndarray]:
    """(perms (m!, m), non-fixed counts (m!,)) for small m, cached."""
    cached = _PERM_ARRAYS.get(m)
    if cached is None:
        perms = np.array(list(itertools.permutations(range(m))), dtype=np.intp)
        nonfixed = (perms != np.arange(m)).sum(axis=1)
        cached = (perms, nonfixed)
        _PERM_ARRAYS[m] = cached
    return cached


def _perm_chunks(m: int) -> Iterable[tuple[np.ndarray, np.ndarray]]:
    if m <= _PERM_CACHE_LIMIT:
        yield _perm_arrays(m)
        return
    it = itertools.permutations(range(m))
    while True:
        block = list(itertools.islice(it, _PERM_CHUNK))
        if not block:
            return
        perms = np.array(block, dtype=np.intp)
        yield perms, (perms != np.arange(m)).sum(axis=1)


def _distinguishability_sum(m_block: np.ndarray, x: float) -> complex:
    """sum_sigma x^j(sigma) Perm(M o conj(M[sigma rows])) for one m x m block."""
    m = m_block.shape[0]
    conj = np.conj(m_block)
    total = 0j
    for perms, nonfixed in _perm_chunks(m):
        if x == 0.0:
            keep = nonfixed == 0
            perms, nonfixed = perms[keep], nonfixed[keep]
        stack = m_block[None, :, :] * conj[perms, :]
        total += np.sum(permanent_batch(stack) * x ** nonfixed.astype(float))
    return total


def prob_given_input(u, tau: Sequence[int], q: Sequence[int], x: float) -> float:
    """P(q | input subset tau) with uniform pairwise overlap x.

    Brute-force sum over all m! photon permutations; limited to m <= 10.
    The imaginary part cancels in conjugate permutation pairs and is checked
    to stay below 1e-10.
    """
    um = as_complex_matrix(u, "U")
    tau = validate_mode_configuration(tau, um.shape[0])
    q = validate_mode_configuration(q, um.shape[0])
    if len(tau) != len(q):
        raise ValidationError(f"|tau| = {len(tau)} but |q| = {len(q)}")
    if len(tau) == 0:
        return 1.0
    if len(tau) > BRUTE_FORCE_M_LIMIT:
        raise SizeLimitExceededError(
            f"brute-force path limited to m <= {BRUTE_FORCE_M_LIMIT}, got {len(tau)}"
        )
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"overlap x must be in [0, 1], got {x}")
    block = um.T[np.ix_(tau, q)]  # rows = photons, M[i, j] = U[q_j, tau_i]
    value = _distinguishability_sum(block, x)
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise ArithmeticError(f"permutation sum has imaginary residue {value.imag}")
    return float(value.real)


def prob_postselected(u, q: Sequence[int], noise: NoiseModel) -> float:
    """P_m(q): the C(n,m)^-1-weighted sum of P(q|tau) over all input subsets."""
    if len(q) != noise.m:
        raise ValidationError(f"|q| = {len(q)} does not match noise.m = {noise.m}")
    n_subsets = math.comb(noise.n, noise.m)
    if n_subsets > POSTSELECT_SUBSET_CAP:
        raise CombinatorialBlowupError(
            f"C({noise.n},{noise.m}) = {n_subsets} exceeds the exact-path cap"
        )
    if noise.m == 0:
        return 1.0
    total = math.fsum(
        prob_given_input(u, tau, q, noise.x)
        for tau in itertools.combinations(range(noise.n), noise.m)
    )
    return total / n_subsets


def photon_number_weight(n: int, m: int, eta: float) -> float:
    """Binomial probability that m of n input photons survive loss eta."""
    if not 0 <= m <= n:
        raise ValidationError(f"need 0 <= m <= n, got m={m}, n={n}")
    if not 0.0 <= eta <= 1.0:
        raise ValidationError(f"need 0 <= eta <= 1, got {eta}")
    return math.comb(n, m) * eta**m * (1.0 - eta) ** (n - m)


def full_distribution_exact(u, noise: NoiseModel, q_list: Sequence[Sequence[int]]) -> np.ndarray:
    """Unconditional probabilities of the given outputs (any photon numbers).

    Each entry is photon_number_weight(n, |q|, eta) * P_|q|(q); configurations
    of different sizes may be mixed freely.
    """
    out = np.empty(len(q_list))
    for i, q in enumerate(q_list):
        m = len(q)
        weight = photon_number_weight(noise.n, m, noise.eta)
        out[i] = weight * prob_postselected(u, q, noise.with_detected(m))
    return out


def ideal_distribution_with_collisions(u, n: int) -> dict[tuple[int, ...], float]:
    """Exact ideal (x = 1, eta = 1) distribution over ALL output multisets.

    Inputs are single photons in the first n modes. Keys are sorted output
    multisets (with repeats); values use |Perm(U_S)|^2 / prod(s_i!). Serves
    as the normalization oracle: the returned values sum to 1.
    """
    um = as_complex_matrix(u, "U")
    n_modes = um.shape[0]
    if n > 5 or n_modes > 12:
        raise SizeLimitExceededError(
            f"collision oracle limited to n <= 5 and N <= 12, got n={n}, N={n_modes}"
        )
    if n < 1:
        raise ValidationError("need n >= 1")
    rows = list(range(n))
    outputs = list(itertools.combinations_with_replacement(range(n_modes), n))
    stack = np.empty((len(outputs), n, n), dtype=np.complex128)
    for i, s in enumerate(outputs):
        stack[i] = um.T[np.ix_(rows, s)]
    perms = permanent_batch(stack)
    dist: dict[tuple[int, ...], float] = {}
    for s, p in zip(outputs, perms):
        repeat = math.prod(math.factorial(c) for c in Counter(s).values())
        dist[s] = float(abs(p) ** 2) / repeat
    return dist
