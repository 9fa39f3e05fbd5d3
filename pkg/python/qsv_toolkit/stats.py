"""Hypothesis-testing arithmetic for verification experiments.

Null hypothesis: every state emitted by the source has infidelity at least
epsilon, so each round passes with probability at most 1 - epsilon*nu.
Observing pass frequencies above that threshold rejects the null; all
returned error probabilities are upper bounds on delta.
"""

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp, rel_entr

from qsv_toolkit.errors import CannotRejectError, UnverifiableError


def _check_unit(name: str, value: float, *, open_low: bool = False, open_high: bool = False) -> None:
    low_ok = value > 0 if open_low else value >= 0
    high_ok = value < 1 if open_high else value <= 1
    if not (low_ok and high_ok) or math.isnan(value):
        low = "(0" if open_low else "[0"
        high = "1)" if open_high else "1]"
        raise ValueError(f"{name}={value!r} must lie in {low}, {high}")


def _check_rounds(n: int) -> None:
    if n < 0 or int(n) != n:
        raise ValueError(f"Round count must be a non-negative integer, got {n!r}")


def _log_pmf(n: int, p: float, ks: np.ndarray) -> np.ndarray:
    return (
        gammaln(n + 1)
        - gammaln(ks + 1)
        - gammaln(n - ks + 1)
        + ks * math.log(p)
        + (n - ks) * math.log1p(-p)
    )


def _range_probability(n: int, p: float, low: int, high: int) -> float:
    """P(low <= T <= high) for T ~ Binomial(n, p) with 0 < p < 1."""
    if low > high:
        return 0.0
    ks = np.arange(low, high + 1, dtype=float)
    return float(np.exp(logsumexp(_log_pmf(n, p, ks))))


def binomial_tail(n: int, p: float, t: int) -> float:
    """P(T >= t) for T ~ Binomial(n, p).

    The smaller tail is summed in log space; the other side is its
    complement.

    Raises:
        ValueError: If p is outside [0, 1] or t outside [0, n]
    """
    _check_rounds(n)
    _check_unit("p", p)
    if t < 0 or t > n:
        raise ValueError(f"Threshold t={t} outside 0..{n}")
    if t == 0 or p == 1.0:
        return 1.0
    if p == 0.0:
        return 0.0
    if t > n * p:
        tail = _range_probability(n, p, t, n)
    else:
        tail = 1.0 - _range_probability(n, p, 0, t - 1)
    return min(1.0, max(0.0, tail))


def all_pass_pvalue(n: int, p0: float) -> float:
    """Probability that all n rounds pass when each passes with p0."""
    _check_rounds(n)
    _check_unit("p0", p0)
    return p0**n


def worst_case_pass_prob(eps: float, nu: float) -> float:
    """Largest single-round pass probability for infidelity eps: 1 - eps*nu."""
    _check_unit("eps", eps)
    _check_unit("nu", nu)
    return 1.0 - eps * nu


def _failure_rate(eps: float, nu: float) -> float:
    _check_unit("eps", eps, open_high=True)
    _check_unit("nu", nu)
    rate = eps * nu
    if rate == 0.0:
        raise UnverifiableError(
            f"eps*nu = 0 (eps={eps!r}, nu={nu!r}): no number of rounds can verify"
        )
    return rate


def required_samples(eps: float, delta: float, nu: float) -> int:
    """Smallest N with (1 - eps*nu)^N <= delta.

    Raises:
        UnverifiableError: If eps*nu is zero
        ValueError: If a parameter is out of range
    """
    _check_unit("delta", delta, open_low=True, open_high=True)
    rate = _failure_rate(eps, nu)
    q = 1.0 - rate
    if q == 0.0:
        return 1
    n = max(1, math.ceil(math.log(delta) / math.log1p(-rate)))
    # The logarithm ratio can land one off the exact power criterion.
    while q**n > delta:
        n += 1
    while n > 1 and q ** (n - 1) <= delta:
        n -= 1
    return n


def asymptotic_samples(eps: float, delta: float, nu: float) -> float:
    """High-precision limit ln(1/delta) / (nu*eps)."""
    _check_unit("delta", delta, open_low=True, open_high=True)
    return math.log(1 / delta) / _failure_rate(eps, nu)


def kl_divergence(x: float, y: float) -> float:
    """Binary relative entropy D(x||y) in nats; +inf where y cannot explain x."""
    _check_unit("x", x)
    _check_unit("y", y)
    return float(rel_entr(x, y) + rel_entr(1 - x, 1 - y))


def chernoff_hoeffding_confidence(f: float, threshold: float, n: int) -> float:
    """Upper bound exp(-D(f||threshold) N) on the significance level.

    At f = 1 the bound is threshold^N exactly.

    Raises:
        CannotRejectError: If f does not exceed threshold
    """
    _check_unit("f", f)
    _check_unit("threshold", threshold)
    _check_rounds(n)
    if f <= threshold:
        raise CannotRejectError(
            f"Pass frequency {f!r} does not exceed the threshold {threshold!r}"
        )
    if n == 0:
        return 1.0
    if f == 1.0:
        return threshold**n
    return min(1.0, math.exp(-kl_divergence(f, threshold) * n))


def hoeffding_bound(eps: float, n: int, ranges: Sequence[tuple[float, float]]) -> float:
    """exp(-2 eps^2 N^2 / sum (b_i - a_i)^2), clamped to [0, 1]."""
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps!r}")
    _check_rounds(n)
    if not ranges:
        raise ValueError("Hoeffding bound needs at least one range")
    spread = 0.0
    for a, b in ranges:
        if b < a:
            raise ValueError(f"Range ({a}, {b}) has b < a")
        spread += (b - a) ** 2
    if eps == 0:
        return 1.0
    if spread == 0:
        return 0.0
    return min(1.0, math.exp(-2 * eps * eps * n * n / spread))


def type_one_error(n: int, p0: float, t0: int) -> float:
    """P(T >= t0 | p0): rejecting although the null holds."""
    if t0 == n + 1:
        return 0.0
    return binomial_tail(n, p0, t0)


def type_two_error(n: int, p1: float, t0: int) -> float:
    """P(T < t0 | p1): accepting although the alternative holds."""
    _check_rounds(n)
    _check_unit("p1", p1)
    if t0 < 0 or t0 > n + 1:
        raise ValueError(f"Threshold t0={t0} outside 0..{n + 1}")
    if t0 == 0:
        return 0.0
    if t0 == n + 1 or p1 == 0.0:
        return 1.0
    if p1 == 1.0:
        return 0.0
    if t0 - 1 < n * p1:
        return min(1.0, _range_probability(n, p1, 0, t0 - 1))
    return min(1.0, max(0.0, 1.0 - _range_probability(n, p1, t0, n)))


def decision_threshold(n: int, p0: float, alpha: float) -> int:
    """Smallest t0 whose type-I error is at most alpha (n + 1 if none)."""
    _check_unit("alpha", alpha)
    for t0 in range(n + 2):
        if type_one_error(n, p0, t0) <= alpha:
            return t0
    return n + 1


def fidelity_estimation_samples(f: float, threshold: float, delta: float) -> int:
    """Rounds needed at expected pass frequency f to reject with significance delta."""
    _check_unit("delta", delta, open_low=True, open_high=True)
    if f <= threshold:
        raise CannotRejectError(
            f"Expected frequency {f!r} does not exceed the threshold {threshold!r}"
        )
    return max(1, math.ceil(math.log(1 / delta) / kl_divergence(f, threshold)))


@dataclass
class TestPlan:
    """Rounds required to verify a target with given precision.

    Attributes:
        eps: Infidelity threshold
        delta: Significance level
        nu: Spectral gap of the strategy
        samples: Required rounds N
        asymptotic: High-precision estimate (nu*eps)^-1 ln(1/delta)
    """

    __test__ = False

    eps: float
    delta: float
    nu: float
    samples: int
    asymptotic: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TestResult:
    """Outcome of the fidelity decision for one experiment.

    Attributes:
        rounds: Number of rounds N
        passes: Number of passing rounds t
        frequency: t / N
        rejected: True when the infidelity-eps null is rejected
        threshold: Rejection threshold 1 - eps*nu
        delta: Upper bound on the significance level (1.0 when accepting)
        confidence: 1 - delta
    """

    __test__ = False

    rounds: int
    passes: int
    frequency: float
    rejected: bool
    threshold: float
    delta: float
    confidence: float

    def __post_init__(self):
        if not 0 <= self.passes <= self.rounds:
            raise ValueError(f"passes={self.passes} outside 0..{self.rounds}")

    @property
    def decision(self) -> str:
        return "reject" if self.rejected else "accept"

    def to_dict(self) -> dict:
        result = asdict(self)
        result["decision"] = self.decision
        return result


def plan_verification(eps: float, delta: float, nu: float) -> TestPlan:
    return TestPlan(
        eps=eps,
        delta=delta,
        nu=nu,
        samples=required_samples(eps, delta, nu),
        asymptotic=asymptotic_samples(eps, delta, nu),
    )


def fidelity_decision(f: float, eps: float, nu: float, n: int) -> TestResult:
    """Reject the infidelity-eps null iff f > 1 - eps*nu."""
    _check_unit("f", f)
    _check_rounds(n)
    threshold = worst_case_pass_prob(eps, nu)
    passes = int(round(f * n))
    if f > threshold:
        delta = chernoff_hoeffding_confidence(f, threshold, n)
        return TestResult(n, passes, f, True, threshold, delta, 1.0 - delta)
    return TestResult(n, passes, f, False, threshold, 1.0, 0.0)


def decide(passes: int, rounds: int, eps: float, nu: float) -> TestResult:
    """fidelity_decision from raw pass counts."""
    _check_rounds(rounds)
    if rounds == 0:
        raise ValueError("Need at least one round to decide")
    if not 0 <= passes <= rounds:
        raise ValueError(f"passes={passes} outside 0..{rounds}")
    result = fidelity_decision(passes / rounds, eps, nu, rounds)
    result.passes = passes
    return result
