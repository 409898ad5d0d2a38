"""Closed-form error bounds, truncation-order solvers and advantage
thresholds.

Two conventions for the figure of merit alpha coexist and are never converted
implicitly:

* post-selected: alpha = x^2 m / n (fixed detected photon number);
* asymptotic:    alpha = x^2 eta, or x^2 (eta + C/sqrt(n)) inside the
  Hoeffding-window bound for a random detected photon number.

Every function documents which convention its alpha argument uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (
    AlphaOutOfRangeError,
    EtaOutOfRangeError,
    NoMarginError,
    NoThresholdError,
    ValidationError,
    WindowExceedsRangeError,
)

__all__ = [
    "BoundReport",
    "VariableMDistanceBound",
    "asymptotic_k",
    "expected_distance_bound",
    "k_of_failure_budget",
    "markov_failure_probability",
    "min_transmission_for_size",
    "minimal_k",
    "postselection_margin",
    "variable_m_distance_bound",
]

_MAX_K_SCAN = 10**6


def _check_alpha(alpha: float, allow_zero: bool = True) -> None:
    low_ok = alpha >= 0.0 if allow_zero else alpha > 0.0
    if not (low_ok and alpha < 1.0):
        raise AlphaOutOfRangeError(f"need alpha in [0, 1), got {alpha}")


def expected_distance_bound(alpha: float, k: int) -> float:
    """Bound on the mean L1 error of an order-k truncation:
    sqrt(alpha^(k+1) / (1 - alpha)). alpha in either convention."""
    _check_alpha(alpha)
    if k < 0:
        raise ValidationError("k must be >= 0")
    if alpha == 0.0:
        return 0.0
    return math.sqrt(alpha ** (k + 1) / (1.0 - alpha))


def minimal_k(alpha: float, epsilon: float) -> int:
    """Smallest truncation order whose distance bound reaches epsilon."""
    _check_alpha(alpha)
    if not epsilon > 0.0:
        raise ValidationError("epsilon must be positive")
    for k in range(_MAX_K_SCAN):
        if expected_distance_bound(alpha, k) <= epsilon:
            return k
    raise ArithmeticError("no k found below the scan limit")  # pragma: no cover


def k_of_failure_budget(alpha: float, epsilon: float, delta: float) -> int:
    """Truncation order floor(ln(eps*delta*(1-alpha)/2) / ln(alpha)) - 1.

    This is the order sufficient for error epsilon with failure probability
    delta under the Markov conversion; clipped below at 0.
    """
    _check_alpha(alpha, allow_zero=False)
    arg = epsilon * delta * (1.0 - alpha) / 2.0
    if not 0.0 < arg < 1.0:
        raise ValidationError(f"need 0 < eps*delta*(1-alpha)/2 < 1, got {arg}")
    return max(0, math.floor(math.log(arg) / math.log(alpha)) - 1)


def asymptotic_k(eta: float, epsilon: float, delta: float) -> float:
    """Large-n approximation 2 (ln eps + ln delta + ln(1-eta)) / ln(eta).

    Returned unrounded. Diverges as eta -> 1: the ideal device admits no
    efficient truncation.
    """
    if not 0.0 < eta < 1.0:
        raise EtaOutOfRangeError(f"need 0 < eta < 1, got {eta}")
    if not (epsilon > 0.0 and delta > 0.0):
        raise ValidationError("epsilon and delta must be positive")
    return 2.0 * (math.log(epsilon) + math.log(delta) + math.log(1.0 - eta)) / math.log(eta)


@dataclass(frozen=True)
class VariableMDistanceBound:
    """The two-term distance bound for a binomially random photon number."""

    total: float
    hoeffding_term: float
    truncation_term: float
    alpha: float


def variable_m_distance_bound(x: float, eta: float, n: int, k: int, c: float) -> VariableMDistanceBound:
    """Distance bound 4 exp(-2C^2) + sqrt(alpha^(k+1)/(1-alpha)) with
    alpha = x^2 (eta + C/sqrt(n)); requires 0 < C < sqrt(n)(1 - eta)."""
    if n < 1:
        raise ValidationError("need n >= 1")
    if not 0.0 < c < math.sqrt(n) * (1.0 - eta):
        raise WindowExceedsRangeError(
            f"need 0 < C < sqrt(n)(1-eta) = {math.sqrt(n) * (1 - eta):.4f}, got {c}"
        )
    alpha = x * x * (eta + c / math.sqrt(n))
    if not alpha < 1.0:
        raise AlphaOutOfRangeError(f"window-adjusted alpha = {alpha} is not < 1")
    hoeffding = 4.0 * math.exp(-2.0 * c * c)
    truncation = expected_distance_bound(alpha, k)
    return VariableMDistanceBound(
        total=hoeffding + truncation,
        hoeffding_term=hoeffding,
        truncation_term=truncation,
        alpha=alpha,
    )


def markov_failure_probability(a: float, squared: bool = False) -> float:
    """Probability of exceeding a times the mean distance: min(1, 1/a).

    squared=True gives the variance-form tail min(1, 1/a^2) that applies to
    single-outcome deviations.
    """
    if a < 1.0:
        raise ValidationError("need a >= 1")
    return min(1.0, 1.0 / (a * a)) if squared else min(1.0, 1.0 / a)


def min_transmission_for_size(n_target: int, x: float, epsilon: float) -> float:
    """Smallest transmission at which an n_target-boson device escapes the
    order-n_target truncation at accuracy epsilon (bisection to 1e-4).

    Below the returned eta, expected_distance_bound(x^2 eta, n_target) <=
    epsilon and the device is classically reproducible at that accuracy.
    """
    if n_target < 1:
        raise ValidationError("need n_target >= 1")
    if not (0.0 < x <= 1.0 and epsilon > 0.0):
        raise ValidationError("need 0 < x <= 1 and epsilon > 0")

    def exceeds(eta: float) -> bool:
        alpha = x * x * eta
        if alpha >= 1.0:
            return True
        return expected_distance_bound(alpha, n_target) > epsilon

    if not exceeds(1.0):
        raise NoThresholdError(
            "even unit transmission is simulable at this size and accuracy"
        )
    lo, hi = 0.0, 1.0  # exceeds(lo) is False, exceeds(hi) is True
    while hi - lo > 1e-4:
        mid = 0.5 * (lo + hi)
        if exceeds(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def postselection_margin(n: int, k: int, x_squared: float, epsilon: float) -> float:
    """Largest extra-photon count p keeping an (n+p) -> n post-selected
    experiment above the truncation bound.

    Solves x^(2(k+1)) (n/(n+p))^(k+1) / (1 - x^2 n/(n+p)) >= epsilon^2 for
    the largest real p >= 0 (bisection to 1e-3). The integer photon-loss
    allowance is floor(p). Raises NoMarginError when p = 0 already violates
    the inequality.
    """
    if n < 1 or k < 0:
        raise ValidationError("need n >= 1 and k >= 0")
    if not (0.0 < x_squared <= 1.0 and epsilon > 0.0):
        raise ValidationError("need 0 < x_squared <= 1 and epsilon > 0")

    def lhs(p: float) -> float:
        ratio = x_squared * n / (n + p)
        if ratio >= 1.0:
            return math.inf
        return ratio ** (k + 1) / (1.0 - ratio)

    target = epsilon * epsilon
    if lhs(0.0) < target:
        raise NoMarginError("already simulable without any photon loss margin")
    hi = 1.0
    while lhs(hi) >= target:
        hi *= 2.0
        if hi > 1e9:  # pragma: no cover - defensive
            raise ArithmeticError("postselection margin did not bracket")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if lhs(mid) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class BoundReport:
    """Evaluated bounds for one parameter set, as emitted by the CLI."""

    alpha: float
    alpha_convention: str
    k: int
    expected_distance: float
    minimal_k_for_epsilon: int | None = None
    k_for_failure_budget: int | None = None
    asymptotic_k_value: float | None = None
    variable_m: VariableMDistanceBound | None = None
    markov_failure: dict[float, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)


def evaluate_report(
    *,
    x: float,
    eta: float,
    n: int,
    m: int | None,
    k: int,
    epsilon: float,
    delta: float,
    c: float | None = None,
) -> BoundReport:
    """Collect every applicable bound for one parameter set.

    With m given, alpha follows the post-selected convention x^2 m / n;
    otherwise the asymptotic x^2 eta. Bounds whose preconditions fail are
    skipped with an explanatory note instead of raising.
    """
    if m is not None:
        alpha = x * x * m / n
        convention = "postselected (x^2 m / n)"
    else:
        alpha = x * x * eta
        convention = "asymptotic (x^2 eta)"
    report = BoundReport(
        alpha=alpha,
        alpha_convention=convention,
        k=k,
        expected_distance=expected_distance_bound(alpha, k),
        minimal_k_for_epsilon=minimal_k(alpha, epsilon),
        markov_failure={a: markov_failure_probability(a) for a in (1.0, 2.0, 4.0, 10.0)},
    )
    if 0.0 < alpha < 1.0:
        try:
            report.k_for_failure_budget = k_of_failure_budget(alpha, epsilon, delta)
        except ValidationError as exc:
            report.notes.append(str(exc))
    if 0.0 < eta < 1.0:
        report.asymptotic_k_value = asymptotic_k(eta, epsilon, delta)
    else:
        report.notes.append("asymptotic order undefined at eta = 1")
    if c is not None:
        report.variable_m = variable_m_distance_bound(x, eta, n, k, c)
    return report
