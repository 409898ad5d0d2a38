"""Metropolis sampling from the truncated output distribution.

The chain walks over collision-free output patterns (optionally jointly over
input subsets), accepting a proposed move with probability
min(1, target(new)/target(old)). Only target ratios matter, so the truncated
probabilities need no normalization. Clamped-to-zero states are escaped by
always accepting any proposal out of them, which preserves the stationary law
on the support.

The binomial layer ("full" sampling) draws the detected photon number m per
sample and forwards to a lazily created fixed-m chain, one independent RNG
stream per chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Literal

import numpy as np

from .ensembles import RngSeed, as_generator
from .errors import NonErgodicStartError, ValidationError, WindowExceedsRangeError
from .exact import NoiseModel
from .matrices import as_complex_matrix
from .truncation import (
    TruncationSpec,
    all_output_coefficients,
    expansion_coefficients,
    truncated_prob_given_input,
)

__all__ = [
    "ChainState",
    "SamplerConfig",
    "enumerate_truncated_fixed_m",
    "enumerate_truncated_joint",
    "m_window",
    "metropolis_step",
    "sample_fixed_m",
    "sample_full",
    "sample_joint",
]

DEAD_ITERATION_LIMIT = 10_000


@dataclass(frozen=True)
class SamplerConfig:
    """Chain parameters. The default emits every post-burn-in iterate."""

    burn_in: int = 10_000
    thinning: int = 1
    proposal: Literal["uniform", "swap"] = "uniform"
    chain_count: int = 1

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValidationError("burn_in must be >= 0")
        if self.thinning < 1:
            raise ValidationError("thinning must be >= 1")
        if self.proposal not in ("uniform", "swap"):
            raise ValidationError(f"unknown proposal {self.proposal!r}")
        if self.chain_count < 1:
            raise ValidationError("chain_count must be >= 1")


@dataclass(frozen=True)
class ChainState:
    """Current chain position with its cached target value."""

    q: tuple[int, ...]
    value: float
    tau: tuple[int, ...] | None = None
    step: int = 0


def _propose_uniform_config(n_modes: int, m: int, rng: np.random.Generator) -> tuple[int, ...]:
    return tuple(sorted(rng.choice(n_modes, size=m, replace=False).tolist()))


def _propose_swap_config(q: tuple[int, ...], n_modes: int, rng: np.random.Generator) -> tuple[int, ...]:
    occupied = list(q)
    free = [i for i in range(n_modes) if i not in q]
    if not free or not occupied:
        return q
    out = occupied[int(rng.integers(len(occupied)))]
    into = free[int(rng.integers(len(free)))]
    return tuple(sorted(set(occupied) - {out} | {into}))


def metropolis_step(
    state: ChainState,
    target: Callable[[tuple[int, ...] | None, tuple[int, ...]], float],
    propose: Callable[[ChainState, np.random.Generator], tuple[tuple[int, ...] | None, tuple[int, ...]]],
    rng: np.random.Generator,
) -> ChainState:
    """One Metropolis update: accept with probability min(1, new/old).

    A zero-valued current state accepts any proposal (the escape rule for
    clamped targets); a zero-valued proposal from a positive state is never
    accepted.
    """
    cand_tau, cand_q = propose(state, rng)
    cand_value = target(cand_tau, cand_q)
    if state.value == 0.0:
        accept = True
    elif cand_value >= state.value:
        accept = True
    else:
        accept = rng.random() < cand_value / state.value
    if accept:
        return ChainState(q=cand_q, value=cand_value, tau=cand_tau, step=state.step + 1)
    return replace(state, step=state.step + 1)


def _run_chain(
    init: ChainState,
    target,
    propose,
    cfg: SamplerConfig,
    count: int,
    rng: np.random.Generator,
) -> list[ChainState]:
    state = init
    dead = 0
    emitted: list[ChainState] = []
    total_steps = cfg.burn_in + count * cfg.thinning
    for step in range(total_steps):
        state = metropolis_step(state, target, propose, rng)
        if state.value == 0.0:
            dead += 1
            if dead > DEAD_ITERATION_LIMIT:
                raise NonErgodicStartError(
                    f"chain saw only zero-target states for {dead} consecutive steps"
                )
        else:
            dead = 0
        if step >= cfg.burn_in and (step - cfg.burn_in) % cfg.thinning == cfg.thinning - 1:
            emitted.append(state)
    return emitted


class _MemoTarget:
    """Memoizing wrapper so revisited states never recompute permanents."""

    def __init__(self, fn):
        self._fn = fn
        self._cache: dict = {}

    def __call__(self, tau, q) -> float:
        key = (tau, q)
        val = self._cache.get(key)
        if val is None:
            val = self._fn(tau, q)
            self._cache[key] = val
        return val


def _fixed_m_target(u, noise: NoiseModel, spec: TruncationSpec) -> _MemoTarget:
    def compute(_tau, q):
        ec = expansion_coefficients(u, q, noise.n, k=spec.k)
        return ec.probability(noise.x, k=spec.k, clamp=True)

    return _MemoTarget(compute)


def _joint_target(u, noise: NoiseModel, spec: TruncationSpec) -> _MemoTarget:
    def compute(tau, q):
        return truncated_prob_given_input(u, tau, q, noise.x, spec.k, clamp=True)

    return _MemoTarget(compute)


def sample_fixed_m(
    u,
    noise: NoiseModel,
    spec: TruncationSpec,
    cfg: SamplerConfig,
    count: int,
    rng,
) -> list[tuple[int, ...]]:
    """`count` output patterns from the truncated fixed-m distribution."""
    um = as_complex_matrix(u, "U")
    n_modes = um.shape[0]
    m = noise.m
    if count < 0:
        raise ValidationError("count must be >= 0")
    if m < 1:
        raise ValidationError("fixed-m sampling needs m >= 1")
    gen = as_generator(rng)
    target = _fixed_m_target(um, noise, spec)

    def propose(state: ChainState, g: np.random.Generator):
        if cfg.proposal == "uniform":
            return None, _propose_uniform_config(n_modes, m, g)
        return None, _propose_swap_config(state.q, n_modes, g)

    q0 = _propose_uniform_config(n_modes, m, gen)
    init = ChainState(q=q0, value=target(None, q0))
    states = _run_chain(init, target, propose, cfg, count, gen)
    return [s.q for s in states]


def sample_joint(
    u,
    noise: NoiseModel,
    spec: TruncationSpec,
    cfg: SamplerConfig,
    count: int,
    rng,
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """`count` (tau, q) pairs from the joint input/output chain.

    The target is the per-tau truncated value, clamped per (tau, q), so the
    q-marginal of the stationary law is the tau-sum of those clamped values.
    With n == m the input subset is frozen and the chain reduces to the
    fixed-m sampler in law.
    """
    um = as_complex_matrix(u, "U")
    n_modes = um.shape[0]
    m, n = noise.m, noise.n
    if count < 0:
        raise ValidationError("count must be >= 0")
    if m < 1:
        raise ValidationError("joint sampling needs m >= 1")
    gen = as_generator(rng)
    target = _joint_target(um, noise, spec)

    def propose(state: ChainState, g: np.random.Generator):
        if cfg.proposal == "uniform":
            return (
                _propose_uniform_config(n, m, g),
                _propose_uniform_config(n_modes, m, g),
            )
        # swap one coordinate of one component; symmetric either way
        if g.random() < 0.5 and n > m:
            return _propose_swap_config(state.tau, n, g), state.q
        return state.tau, _propose_swap_config(state.q, n_modes, g)

    tau0 = _propose_uniform_config(n, m, gen)
    q0 = _propose_uniform_config(n_modes, m, gen)
    init = ChainState(q=q0, tau=tau0, value=target(tau0, q0))
    states = _run_chain(init, target, propose, cfg, count, gen)
    return [(s.tau, s.q) for s in states]


def sample_full(
    u,
    noise: NoiseModel,
    spec: TruncationSpec,
    cfg: SamplerConfig,
    count: int,
    rng: RngSeed,
) -> list[tuple[int, tuple[int, ...]]]:
    """`count` (m, pattern) samples with m ~ Binomial(n, eta).

    Fixed-m chains are created lazily the first time their m is drawn (so
    binomially negligible m values never cost anything) and advance by
    `thinning` steps per emitted sample. m = 0 emits the empty pattern.
    """
    um = as_complex_matrix(u, "U")
    if count < 0:
        raise ValidationError("count must be >= 0")
    seed = rng if isinstance(rng, RngSeed) else RngSeed(int(rng))
    main = seed.generator()
    draws = main.binomial(noise.n, noise.eta, size=count)
    chains: dict[int, tuple[_MemoTarget, Callable, ChainState, np.random.Generator]] = {}
    out: list[tuple[int, tuple[int, ...]]] = []
    n_modes = um.shape[0]
    for m in draws:
        m = int(m)
        if m == 0:
            out.append((0, ()))
            continue
        if m not in chains:
            sub_noise = noise.with_detected(m)
            sub_spec = TruncationSpec(k=min(spec.k, m), clamp=spec.clamp)
            target = _fixed_m_target(um, sub_noise, sub_spec)
            gen = seed.with_stream(seed.stream + 1 + m).generator()

            def make_propose(mm):
                def propose(state: ChainState, g: np.random.Generator):
                    if cfg.proposal == "uniform":
                        return None, _propose_uniform_config(n_modes, mm, g)
                    return None, _propose_swap_config(state.q, n_modes, g)

                return propose

            q0 = _propose_uniform_config(n_modes, m, gen)
            state = ChainState(q=q0, value=target(None, q0))
            propose = make_propose(m)
            # burn the freshly created chain in before its first emission
            for _ in range(cfg.burn_in):
                state = metropolis_step(state, target, propose, gen)
            chains[m] = (target, propose, state, gen)
        target, propose, state, gen = chains[m]
        for _ in range(cfg.thinning):
            state = metropolis_step(state, target, propose, gen)
        chains[m] = (target, propose, state, gen)
        out.append((m, state.q))
    return out


def m_window(n: int, eta: float, epsilon: float) -> tuple[int, int, float]:
    """The Hoeffding window of detected photon numbers for variable-photon-number budgets.

    C(epsilon) = sqrt(ln(8/epsilon)/2); the window is n*eta +- C*sqrt(n),
    rounded outward and clipped to [0, n]. Binomial mass outside it is at
    most 4 exp(-2 C^2) = epsilon/2.
    """
    if n < 1:
        raise ValidationError("need n >= 1")
    if not 0.0 < epsilon < 8.0:
        raise ValidationError(f"need 0 < epsilon < 8, got {epsilon}")
    c = math.sqrt(math.log(8.0 / epsilon) / 2.0)
    if not c < math.sqrt(n) * (1.0 - eta):
        raise WindowExceedsRangeError(
            f"C = {c:.4f} must be < sqrt(n)(1 - eta) = {math.sqrt(n) * (1 - eta):.4f}"
        )
    center = n * eta
    half = c * math.sqrt(n)
    low = max(0, math.floor(center - half))
    high = min(n, math.ceil(center + half))
    return low, high, c


# --------------------------------------------------------------------------
# Exhaustive references for desk-scale correctness checks
# --------------------------------------------------------------------------


def enumerate_truncated_fixed_m(
    u, noise: NoiseModel, spec: TruncationSpec
) -> dict[tuple[int, ...], float]:
    """Clamped truncated value of every collision-free pattern (unnormalized)."""
    um = as_complex_matrix(u, "U")
    qs, coeffs = all_output_coefficients(um, noise.n, noise.m)
    k = spec.k
    powers = np.ones(k + 1)
    powers[1:] = noise.x ** np.arange(1, k + 1)
    raw = (coeffs[:, : k + 1] @ powers) / math.comb(noise.n, noise.m)
    if spec.clamp:
        raw = np.clip(raw, 0.0, 1.0)
    return {tuple(int(i) for i in row): float(v) for row, v in zip(qs, raw)}


def enumerate_truncated_joint(
    u, noise: NoiseModel, spec: TruncationSpec
) -> dict[tuple[tuple[int, ...], tuple[int, ...]], float]:
    """Clamped per-(tau, q) target over the whole joint state space."""
    import itertools

    um = as_complex_matrix(u, "U")
    n_modes = um.shape[0]
    out = {}
    for tau in itertools.combinations(range(noise.n), noise.m):
        for q in itertools.combinations(range(n_modes), noise.m):
            out[(tau, q)] = truncated_prob_given_input(
                um, tau, q, noise.x, spec.k, clamp=spec.clamp
            )
    return out
