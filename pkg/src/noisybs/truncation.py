"""Interference-order expansion of the lossy output probability and its
truncation.

P_m(q) = C(n,m)^-1 * sum_{j=0}^m x^j c_j, where order j collects every
permutation with exactly j non-fixed points. Each c_j is assembled from
Laplace-split terms

    R_{tau,sigma} = sum_rho Perm(M[D, rho] o conj(M[sigma(D), rho]))
                            * Perm(|M[F, rho_bar]|^2)

with D the deranged positions of sigma, F its fixed points, and rho running
over the j-column subsets. The j x j factor carries the quantum interference
of j photons; the positive (m-j) x (m-j) factor is the classical transport of
the rest. Conjugate permutation pairs make every c_j real; the real part is
taken and the imaginary residue is tracked as a diagnostic.

Truncating at order k and clamping to [0, 1] gives the classically cheap
approximation P'_m(q); the closed-form variance bounds quantify the damage.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .combinatorics import (
    Permutation,
    count_expansion_terms,
    derangements,
    validate_mode_configuration,
)
from .ensembles import RngSeed, sample_gaussian_matrix, sample_haar_unitary
from .errors import (
    AlphaOutOfRangeError,
    BudgetExceededError,
    CombinatorialBlowupError,
    SizeLimitExceededError,
    ValidationError,
)
from .exact import NoiseModel
from .matrices import as_complex_matrix, permanent_batch

__all__ = [
    "CjVarianceResult",
    "ExpansionCoefficients",
    "TruncationSpec",
    "all_output_coefficients",
    "expansion_coefficient",
    "expansion_coefficients",
    "monte_carlo_cj_variance",
    "r_term",
    "truncated_prob_given_input",
    "truncated_probability",
    "truncation_variance_bound",
    "variance_bound_cj",
]

DEFAULT_TERM_BUDGET = 10**8
DIRECT_M_LIMIT = 7
_GATHER_CHUNK = 1 << 22


@dataclass(frozen=True)
class TruncationSpec:
    """Keep interference orders j <= k; clamp the result into [0, 1]."""

    k: int
    clamp: bool = True

    def __post_init__(self):
        if self.k < 0:
            raise ValidationError(f"truncation order k must be >= 0, got {self.k}")


@dataclass
class ExpansionCoefficients:
    """Real coefficients (c_0, ..., c_kmax) for one output pattern.

    A full expansion carries kmax = m entries beyond c_0; a truncated
    computation stores only the orders it evaluated.
    """

    q: tuple[int, ...]
    n_inputs: int
    coeffs: np.ndarray
    max_imag_residual: float = 0.0

    @property
    def m(self) -> int:
        return len(self.q)

    @property
    def k_max(self) -> int:
        """Highest interference order available in `coeffs`."""
        return len(self.coeffs) - 1

    def probability(self, x: float, k: int | None = None, clamp: bool = False) -> float:
        """C(n,m)^-1 sum_{j<=k} x^j c_j, optionally clamped into [0, 1].

        x = 0 keeps only the classical j = 0 term (0^0 = 1 convention).
        """
        k = self.k_max if k is None else k
        if not 0 <= k <= self.k_max:
            raise ValidationError(f"need 0 <= k <= {self.k_max}, got k={k}")
        powers = np.ones(k + 1)
        powers[1:] = x ** np.arange(1, k + 1)
        raw = float(self.coeffs[: k + 1] @ powers) / math.comb(self.n_inputs, self.m)
        return min(max(raw, 0.0), 1.0) if clamp else raw


# --------------------------------------------------------------------------
# Laplace-split evaluation plans (depend only on (m, j); cached)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class _LaplacePlan:
    m: int
    j: int
    d_sets: np.ndarray        # (n_D, j) deranged position sets
    dbar_sets: np.ndarray     # (n_D, m-j) fixed position sets
    rho: np.ndarray           # (n_rho, j) column subsets
    rhobar: np.ndarray        # (n_rho, m-j) their complements
    dd_rows: np.ndarray       # (n_dd, j) deranged positions per (D, derangement)
    dd_sig: np.ndarray        # (n_dd, j) their images
    dd_didx: np.ndarray       # (n_dd,) index into d_sets
    half_idx: np.ndarray      # canonical (D, derangement) rows for the paired path
    half_weight: np.ndarray   # 1 for self-inverse derangements, else 2


_PLANS: dict[tuple[int, int], _LaplacePlan] = {}


def _laplace_plan(m: int, j: int) -> _LaplacePlan:
    key = (m, j)
    plan = _PLANS.get(key)
    if plan is not None:
        return plan
    d_sets, dbar_sets, dd_rows, dd_sig, dd_didx = [], [], [], [], []
    half_idx, half_weight = [], []
    for d_i, dset in enumerate(itertools.combinations(range(m), j)):
        d_sets.append(dset)
        dbar_sets.append(tuple(i for i in range(m) if i not in dset))
        for images in derangements(dset):
            row = len(dd_rows)
            dd_rows.append(dset)
            dd_sig.append(images)
            dd_didx.append(d_i)
            # inverse derangement in the same image-tuple representation
            inv = tuple(dset[images.index(p)] for p in dset)
            if images == inv:
                half_idx.append(row)
                half_weight.append(1.0)
            elif images < inv:
                half_idx.append(row)
                half_weight.append(2.0)
    rho_list = list(itertools.combinations(range(m), j))
    rhobar_list = [tuple(c for c in range(m) if c not in r) for r in rho_list]

    def idx(lst, width):
        return np.asarray(lst, dtype=np.intp).reshape(len(lst), width)

    plan = _LaplacePlan(
        m=m,
        j=j,
        d_sets=idx(d_sets, j),
        dbar_sets=idx(dbar_sets, m - j),
        rho=idx(rho_list, j),
        rhobar=idx(rhobar_list, m - j),
        dd_rows=idx(dd_rows, j),
        dd_sig=idx(dd_sig, j),
        dd_didx=np.asarray(dd_didx, dtype=np.intp),
        half_idx=np.asarray(half_idx, dtype=np.intp),
        half_weight=np.asarray(half_weight),
    )
    _PLANS[key] = plan
    return plan


def _r_terms_for_block(block: np.ndarray, plan: _LaplacePlan) -> np.ndarray:
    """All R_{tau,sigma_j} for one m x m block, one value per (D, derangement)."""
    m, j = plan.m, plan.j
    abs2 = (block.real**2 + block.imag**2).astype(np.complex128)
    big = permanent_batch(
        abs2[plan.dbar_sets[:, None, :, None], plan.rhobar[None, :, None, :]]
    )  # (n_D, n_rho)
    conj = np.conj(block)
    n_dd = plan.dd_rows.shape[0]
    n_rho = plan.rho.shape[0]
    out = np.empty(n_dd, dtype=np.complex128)
    step = max(1, _GATHER_CHUNK // max(1, n_rho * j * j))
    for lo in range(0, n_dd, step):
        hi = min(lo + step, n_dd)
        rows = plan.dd_rows[lo:hi, None, :, None]
        sig = plan.dd_sig[lo:hi, None, :, None]
        cols = plan.rho[None, :, None, :]
        small = permanent_batch(block[rows, cols] * conj[sig, cols])  # (chunk, n_rho)
        out[lo:hi] = np.einsum("dr,dr->d", small, big[plan.dd_didx[lo:hi]])
    return out


def _cj_block_laplace(
    block: np.ndarray, j: int, pair_strategy: Literal["full", "half"] = "full"
) -> complex:
    """c_j contribution of one input subset (one m x m block)."""
    plan = _laplace_plan(block.shape[0], j)
    r = _r_terms_for_block(block, plan)
    if pair_strategy == "half":
        return complex(np.sum(r[plan.half_idx].real * plan.half_weight))
    return complex(np.sum(r))


def _cj_block_direct(block: np.ndarray, orders: Sequence[int]) -> np.ndarray:
    """All requested c_j of one block by the grouped full-permanent sum.

    Reference path: evaluates Perm(M o conj(M[sigma rows])) for every sigma
    and bins by non-fixed count. m! permanents; m <= DIRECT_M_LIMIT.
    """
    from .exact import _perm_arrays

    m = block.shape[0]
    if m > DIRECT_M_LIMIT:
        raise SizeLimitExceededError(f"direct path limited to m <= {DIRECT_M_LIMIT}")
    perms, nonfixed = _perm_arrays(m)
    stack = block[None, :, :] * np.conj(block)[perms, :]
    values = permanent_batch(stack)
    out = np.zeros(m + 1, dtype=np.complex128)
    np.add.at(out, nonfixed, values)
    return out[list(orders)]


def _input_blocks(u: np.ndarray, q: Sequence[int], n: int) -> Iterable[np.ndarray]:
    # rows = photons: base[i, j] = U[q_j, input i]
    m = len(q)
    base = u.T[:n, :][:, list(q)]
    for tau in itertools.combinations(range(n), m):
        yield base[list(tau), :]


def _check_budget(n: int, m: int, orders: Sequence[int], budget: int | None) -> None:
    budget = DEFAULT_TERM_BUDGET if budget is None else budget
    total = sum(count_expansion_terms(n, m, j) for j in orders if j != 1)
    if total > budget:
        raise BudgetExceededError(
            f"expansion needs {total} terms, exceeding the budget of {budget}"
        )


def expansion_coefficient(
    u,
    q: Sequence[int],
    n: int,
    j: int,
    *,
    taus: Iterable[Sequence[int]] | None = None,
    pair_strategy: Literal["full", "half"] = "full",
    budget: int | None = None,
) -> float:
    """The single coefficient c_j = sum_tau sum_{sigma_j} Re R_{tau,sigma_j}.

    By default tau runs over all C(n, m) input subsets; pass `taus` to
    restrict the sum. j = 1 returns 0 without any work: no permutation has
    exactly one non-fixed point.
    """
    um = as_complex_matrix(u, "U")
    q = validate_mode_configuration(q, um.shape[1])
    m = len(q)
    if not 0 <= j <= m:
        raise ValidationError(f"need 0 <= j <= m = {m}, got j={j}")
    if not m <= n <= um.shape[0]:
        raise ValidationError(f"need m <= n <= N, got m={m}, n={n}, N={um.shape[0]}")
    if j == 1:
        return 0.0
    _check_budget(n, m, [j], budget)
    if taus is None:
        blocks = _input_blocks(um, q, n)
    else:
        base = um.T[:n, :][:, list(q)]
        blocks = (
            base[list(validate_mode_configuration(tau, n)), :] for tau in taus
        )
    parts = [_cj_block_laplace(block, j, pair_strategy) for block in blocks]
    return math.fsum(p.real for p in parts)


def expansion_coefficients(
    u,
    q: Sequence[int],
    n: int,
    *,
    k: int | None = None,
    method: Literal["laplace", "direct"] = "laplace",
    pair_strategy: Literal["full", "half"] = "full",
    budget: int | None = None,
) -> ExpansionCoefficients:
    """Coefficients c_0 ... c_k for output q (k defaults to m, the full set).

    "laplace" is the production path (cost grows like m^(2j) per order);
    "direct" evaluates all m! full permanents and bins them, and exists as
    the cross-checking reference for small m.
    """
    um = as_complex_matrix(u, "U")
    q = validate_mode_configuration(q, um.shape[1])
    m = len(q)
    if m == 0:
        raise ValidationError("need at least one detected photon")
    if not m <= n <= um.shape[0]:
        raise ValidationError(f"need m <= n <= N, got m={m}, n={n}, N={um.shape[0]}")
    k = m if k is None else k
    if not 0 <= k <= m:
        raise ValidationError(f"need 0 <= k <= m = {m}, got k={k}")
    orders = [j for j in range(k + 1) if j != 1]
    coeffs = np.zeros(k + 1)
    resid = 0.0
    if method == "direct":
        parts = [_cj_block_direct(block, orders) for block in _input_blocks(um, q, n)]
        sums = np.sum(parts, axis=0)
        for j, v in zip(orders, sums):
            coeffs[j] = v.real
            resid = max(resid, abs(v.imag))
    elif method == "laplace":
        _check_budget(n, m, orders, budget)
        for j in orders:
            parts = [_cj_block_laplace(b, j, pair_strategy) for b in _input_blocks(um, q, n)]
            coeffs[j] = math.fsum(p.real for p in parts)
            resid = max(resid, abs(math.fsum(p.imag for p in parts)))
    else:
        raise ValidationError(f"unknown method {method!r}")
    return ExpansionCoefficients(q=q, n_inputs=n, coeffs=coeffs, max_imag_residual=resid)


def truncated_probability(u, q: Sequence[int], noise: NoiseModel, spec: TruncationSpec) -> float:
    """P'_m(q): the order-k truncation of P_m(q), clamped when spec.clamp is set."""
    if len(q) != noise.m:
        raise ValidationError(f"|q| = {len(q)} does not match noise.m = {noise.m}")
    if spec.k > noise.m:
        raise ValidationError(f"truncation order k={spec.k} exceeds m={noise.m}")
    ec = expansion_coefficients(u, q, noise.n, k=spec.k)
    return ec.probability(noise.x, k=spec.k, clamp=spec.clamp)


def truncated_prob_given_input(
    u, tau: Sequence[int], q: Sequence[int], x: float, k: int, clamp: bool = True
) -> float:
    """Per-input-subset truncated value sum_{j<=k} x^j sum_{sigma_j} Re R.

    This is the joint-chain target: the chain walks over (tau, q) pairs and
    needs the contribution of a single tau without the C(n,m)^-1 prefactor
    folded in (only ratios matter to the sampler; clamping keeps it a valid
    probability-scale quantity).
    """
    um = as_complex_matrix(u, "U")
    tau = validate_mode_configuration(tau, um.shape[0])
    q = validate_mode_configuration(q, um.shape[1])
    m = len(q)
    if len(tau) != m:
        raise ValidationError(f"|tau| = {len(tau)} but |q| = {len(q)}")
    if not 0 <= k <= m:
        raise ValidationError(f"need 0 <= k <= m = {m}, got k={k}")
    block = um.T[np.ix_(tau, q)]
    raw = math.fsum(
        x**j * _cj_block_laplace(block, j).real for j in range(k + 1) if j != 1
    )
    return min(max(raw, 0.0), 1.0) if clamp else raw


def r_term(u, q: Sequence[int], tau: Sequence[int], perm: Permutation) -> complex:
    """The complex R_{tau,sigma} for one explicit permutation sigma.

    Exposed for the covariance selection-rule studies; the production sums
    never materialize individual R values across configurations.
    """
    um = as_complex_matrix(u, "U")
    tau = validate_mode_configuration(tau, um.shape[0])
    q = validate_mode_configuration(q, um.shape[1])
    m = len(q)
    if len(perm) != m or len(tau) != m:
        raise ValidationError("permutation and tau must have length m")
    block = um.T[np.ix_(tau, q)]
    d = list(perm.deranged_positions)
    j = len(d)
    sig = [perm(i) for i in d]
    f = [i for i in range(m) if i not in perm.deranged_positions]
    abs2 = (block.real**2 + block.imag**2).astype(np.complex128)
    conj = np.conj(block)
    total = 0j
    for rho in itertools.combinations(range(m), j):
        rhobar = [c for c in range(m) if c not in rho]
        small = permanent_batch((block[np.ix_(d, rho)] * conj[np.ix_(sig, rho)])[None])[0]
        big = permanent_batch(abs2[np.ix_(f, rhobar)][None])[0]
        total += small * big
    return complex(total)


# --------------------------------------------------------------------------
# Whole-output-space evaluation (desk scale)
# --------------------------------------------------------------------------


def all_output_coefficients(
    u, n: int, m: int, *, state_cap: int = 200_000
) -> tuple[np.ndarray, np.ndarray]:
    """(Q, C): every collision-free output pattern and its coefficient row.

    Q has shape (n_q, m) with rows in lexicographic order; C has shape
    (n_q, m + 1) with C[i, j] = c_j(Q[i]). Uses the direct grouped-permanent
    path, vectorized over outputs, so it is limited to m <= DIRECT_M_LIMIT
    and C(N, m) <= state_cap.
    """
    from .exact import _perm_arrays

    um = as_complex_matrix(u, "U")
    n_modes = um.shape[0]
    if m > DIRECT_M_LIMIT:
        raise SizeLimitExceededError(f"all-output path limited to m <= {DIRECT_M_LIMIT}")
    n_q = math.comb(n_modes, m)
    if n_q > state_cap:
        raise CombinatorialBlowupError(f"C({n_modes},{m}) = {n_q} exceeds cap {state_cap}")
    perms, nonfixed = _perm_arrays(m)
    onehot = np.zeros((len(perms), m + 1))
    onehot[np.arange(len(perms)), nonfixed] = 1.0
    qs = np.asarray(list(itertools.combinations(range(n_modes), m)), dtype=np.intp)
    coeffs = np.zeros((n_q, m + 1))
    chunk = max(1, _GATHER_CHUNK // max(1, len(perms) * m * m))
    for tau in itertools.combinations(range(n), m):
        rows = um.T[list(tau), :]  # (m, N): photon i of tau against every output
        for lo in range(0, n_q, chunk):
            sel = qs[lo : lo + chunk]
            blocks = rows[:, sel].transpose(1, 0, 2)  # (chunk, m, m)
            stack = blocks[:, None, :, :] * np.conj(blocks)[:, perms, :]
            vals = permanent_batch(stack)  # (chunk, m!)
            coeffs[lo : lo + chunk] += (vals @ onehot).real
    return qs, coeffs


# --------------------------------------------------------------------------
# Closed-form variance bounds
# --------------------------------------------------------------------------


def _log_mean_probability(m: int, big_n: int) -> float:
    """log(m! / N^m), the log of the Haar-average single-outcome probability."""
    return math.lgamma(m + 1) - m * math.log(big_n)


def variance_bound_cj(n: int, m: int, j: int, big_n: int) -> float:
    """Closed-form bound on Var(c_j): C(n-j, m-j) C(n, m) (m!/N^m)^2.

    Evaluated in log space so desk-scale photon numbers never overflow.
    """
    if not 0 <= j <= m <= n <= big_n:
        raise ValidationError(f"need 0 <= j <= m <= n <= N, got {(j, m, n, big_n)}")
    log_val = (
        math.lgamma(n - j + 1)
        - math.lgamma(m - j + 1)
        - math.lgamma(n - m + 1)
        + math.lgamma(n + 1)
        - math.lgamma(m + 1)
        - math.lgamma(n - m + 1)
        + 2.0 * _log_mean_probability(m, big_n)
    )
    return math.exp(log_val)


def truncation_variance_bound(noise: NoiseModel, k: int, big_n: int) -> float:
    """Bound on Var(P_m(q) - P'_m(q)): (m!/N^m)^2 alpha^(k+1) / (1 - alpha).

    alpha is the post-selected figure of merit x^2 m / n, and must be < 1
    (at x = 1 with m = n the geometric series diverges).
    """
    if k < 0:
        raise ValidationError("k must be >= 0")
    alpha = noise.alpha_postselected
    if not alpha < 1.0:
        raise AlphaOutOfRangeError(f"need alpha = x^2 m/n < 1, got {alpha}")
    log_val = 2.0 * _log_mean_probability(noise.m, big_n)
    if alpha == 0.0:
        return 0.0
    return math.exp(log_val + (k + 1) * math.log(alpha) - math.log(1.0 - alpha))


# --------------------------------------------------------------------------
# Monte Carlo variance of the expansion orders
# --------------------------------------------------------------------------


@dataclass
class CjVarianceResult:
    """Sample statistics of x^j c_j over a random-matrix ensemble."""

    dims: tuple[int, int, int]  # (N, n, m)
    x: float
    ensemble: str
    trials: int
    variance: np.ndarray           # per-j sample variance of x^j c_j
    variance_stderr: np.ndarray
    normalized: np.ndarray         # variance / variance[0]
    normalized_stderr: np.ndarray
    bound_normalized: np.ndarray   # (eta x^2)^j with eta = m/n
    mean: np.ndarray
    covariance: np.ndarray         # full (m+1, m+1) sample covariance
    covariance_stderr: np.ndarray

    @property
    def orders(self) -> np.ndarray:
        return np.arange(len(self.variance))


def _cj_samples_for_trials(
    dims: tuple[int, int, int], x: float, ensemble: str, seed: RngSeed, trials: Sequence[int]
) -> np.ndarray:
    big_n, n, m = dims
    out = np.empty((len(trials), m + 1))
    powers = x ** np.arange(m + 1).astype(float)
    orders = list(range(m + 1))
    for row, t in enumerate(trials):
        gen = seed.with_stream(seed.stream + int(t)).generator()
        if ensemble == "haar":
            u = sample_haar_unitary(big_n, gen)
            block = u.T[:n, :m]
        elif ensemble == "gaussian":
            block = sample_gaussian_matrix(n, m, 1.0 / big_n, gen)
        else:
            raise ValidationError(f"unknown ensemble {ensemble!r}")
        if m <= DIRECT_M_LIMIT:
            per_tau = [
                _cj_block_direct(block[list(tau), :], orders)
                for tau in itertools.combinations(range(n), m)
            ]
        else:
            per_tau = [
                np.array([_cj_block_laplace(block[list(tau), :], j) for j in orders])
                for tau in itertools.combinations(range(n), m)
            ]
        out[row] = np.sum(per_tau, axis=0).real * powers
    return out


def monte_carlo_cj_variance(
    dims: tuple[int, int, int],
    x: float,
    trials: int,
    rng: RngSeed | int,
    *,
    ensemble: Literal["haar", "gaussian"] = "haar",
    workers: int = 1,
) -> CjVarianceResult:
    """Sample variances of x^j c_j over `trials` random interferometers.

    The output pattern is fixed to the first m modes; by the rotation
    invariance of both ensembles every collision-free pattern has the same
    coefficient statistics. Trials are keyed to (seed, trial index) streams,
    so the result is identical for any worker count.
    """
    big_n, n, m = dims
    if not 1 <= m <= n <= big_n:
        raise ValidationError(f"need 1 <= m <= n <= N, got {(big_n, n, m)}")
    if trials < 2:
        raise ValidationError("need at least 2 trials for a variance")
    seed = rng if isinstance(rng, RngSeed) else RngSeed(int(rng))
    indices = list(range(trials))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        chunks = [indices[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    _mc_variance_worker,
                    [(dims, x, ensemble, seed.seed, seed.stream, c) for c in chunks],
                )
            )
        samples = np.empty((trials, m + 1))
        for chunk, part in zip(chunks, parts):
            samples[chunk] = part
    else:
        samples = _cj_samples_for_trials(dims, x, ensemble, seed, indices)

    mean = samples.mean(axis=0)
    centered = samples - mean
    var = samples.var(axis=0, ddof=1)
    fourth = (centered**4).mean(axis=0)
    var_se = np.sqrt(np.maximum(fourth - var**2 * (trials - 3) / (trials - 1), 0.0) / trials)
    normalized = var / var[0]
    # delta-method propagation of the two variance estimates into the ratio
    rel = np.zeros_like(var)
    nonzero = var > 0
    rel[nonzero] = (var_se[nonzero] / var[nonzero]) ** 2
    norm_se = normalized * np.sqrt(rel + rel[0])
    norm_se[0] = 0.0
    eta = m / n
    bound = (eta * x * x) ** np.arange(m + 1).astype(float)
    cov = np.cov(samples, rowvar=False, ddof=1).reshape(m + 1, m + 1)
    mixed4 = np.einsum("ti,tj->ij", centered**2, centered**2) / trials
    cov_se = np.sqrt(np.maximum(mixed4 - cov**2, 0.0) / trials)
    return CjVarianceResult(
        dims=dims,
        x=x,
        ensemble=ensemble,
        trials=trials,
        variance=var,
        variance_stderr=var_se,
        normalized=normalized,
        normalized_stderr=norm_se,
        bound_normalized=bound,
        mean=mean,
        covariance=cov,
        covariance_stderr=cov_se,
    )


def _mc_variance_worker(args) -> np.ndarray:
    dims, x, ensemble, seed, stream, chunk = args
    return _cj_samples_for_trials(dims, x, ensemble, RngSeed(seed, stream), chunk)
