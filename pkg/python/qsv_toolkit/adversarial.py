"""Sample planning when the source may emit correlated states.

Only the high-precision asymptotics are provided: N ~ h / eps * ln(1/delta)
with overhead h = max{(lambda ln 1/lambda)^-1, (tau ln 1/tau)^-1}, where
lambda and tau are the second-largest and smallest eigenvalues of Omega.
Every plan is flagged as asymptotic.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from qsv_toolkit.errors import DivergentOverheadError
from qsv_toolkit.qmath import Operator, PureState, eigenvalues, spectral_gap
from qsv_toolkit.strategy import Strategy, WeightedTest

# Eigenvalues closer than this count as equal (homogeneous spectrum).
EQUAL_EIGENVALUE_TOL = 1e-12
DEFAULT_MIX_STEP = 1e-3


@dataclass
class AdversarialPlan:
    """Asymptotic adversarial sample plan.

    Attributes:
        eps: Infidelity threshold
        delta: Significance level
        lam: Second-largest eigenvalue of Omega
        tau: Smallest eigenvalue of Omega
        overhead: h = max of the lambda and tau prefactors
        samples: Planned number of tests N
        trivial_mix: Weight q of the added trivial test
        asymptotic: Always True; the plan is valid as eps, delta -> 0
    """

    eps: float
    delta: float
    lam: float
    tau: float
    overhead: float
    samples: int
    trivial_mix: float = 0.0
    asymptotic: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def homogeneous_prefactor(lam: float) -> float:
    """(lambda ln 1/lambda)^-1, minimal (= e) at lambda = 1/e.

    Raises:
        DivergentOverheadError: If lambda is not strictly inside (0, 1)
    """
    if not 0 < lam < 1:
        raise DivergentOverheadError(
            f"Overhead diverges for eigenvalue {lam!r} (need 0 < value < 1)"
        )
    return 1.0 / (lam * math.log(1.0 / lam))


def adversarial_overhead(lam: float, tau: float) -> float:
    """h = max{(lambda ln 1/lambda)^-1, (tau ln 1/tau)^-1}."""
    return max(homogeneous_prefactor(lam), homogeneous_prefactor(tau))


def _check_eps_delta(eps: float, delta: float) -> None:
    for name, value in (("eps", eps), ("delta", delta)):
        if not 0 < value < 1:
            raise ValueError(f"{name}={value!r} must lie in (0, 1)")


def _planned_samples(overhead: float, eps: float, delta: float) -> int:
    return max(1, math.ceil(overhead / eps * math.log(1.0 / delta)))


def homogeneous_strategy(target: PureState, lam: float) -> Strategy:
    """Omega = |psi><psi| + lambda (1 - |psi><psi|).

    Realized as the global test with probability 1 - lambda plus the
    trivial (always passing) test with probability lambda.
    """
    if not 0 <= lam < 1:
        raise ValueError(f"lambda={lam!r} must lie in [0, 1)")
    tests = [WeightedTest(1 - lam, target.projector(), name="global")]
    if lam > 0:
        tests.append(WeightedTest(lam, Operator.identity(target.dims), name="trivial"))
    return Strategy(
        target, tests, "homogeneous", predicted_gap=1 - lam, metadata={"lambda": lam}
    )


def adversarial_samples_homogeneous(eps: float, delta: float, lam: float) -> int:
    """ceil((lambda ln 1/lambda)^-1 eps^-1 ln 1/delta)."""
    _check_eps_delta(eps, delta)
    return _planned_samples(homogeneous_prefactor(lam), eps, delta)


def _extreme_eigenvalues(omega: Operator, target: PureState) -> tuple[float, float]:
    spectral_gap(omega, target)
    values = eigenvalues(omega)
    lam = float(values[1])
    tau = max(0.0, float(values[-1]))
    if abs(lam - tau) <= EQUAL_EIGENVALUE_TOL:
        tau = lam
    return lam, tau


def _plan(eps: float, delta: float, lam: float, tau: float, q: float = 0.0) -> AdversarialPlan:
    overhead = adversarial_overhead(lam, tau)
    return AdversarialPlan(
        eps=eps,
        delta=delta,
        lam=lam,
        tau=tau,
        overhead=overhead,
        samples=_planned_samples(overhead, eps, delta),
        trivial_mix=q,
    )


def adversarial_samples_general(
    eps: float, delta: float, omega: Operator, target: PureState
) -> AdversarialPlan:
    """Plan from the second-largest and smallest eigenvalues of omega.

    Raises:
        InvalidOperatorError: If omega is not a verification operator for target
        DivergentOverheadError: If lambda or tau is 0 (or lambda is 1)
    """
    _check_eps_delta(eps, delta)
    lam, tau = _extreme_eigenvalues(omega, target)
    return _plan(eps, delta, lam, tau)


def trivial_mix(omega: Operator, q: float) -> Operator:
    """(1 - q) Omega + q 1: add the trivial test with probability q."""
    if not 0 <= q < 1:
        raise ValueError(f"Trivial-test weight q={q!r} must lie in [0, 1)")
    return (1 - q) * omega + q * Operator.identity(omega.dims)


def optimize_trivial_mix(
    eps: float,
    delta: float,
    omega: Operator,
    target: PureState,
    grid: np.ndarray | None = None,
) -> AdversarialPlan:
    """Grid search over q for the trivial-test weight minimizing N.

    The mixed spectrum is (1 - q) x + q, so the eigenvalues are computed once.

    Raises:
        DivergentOverheadError: If every q on the grid diverges
    """
    _check_eps_delta(eps, delta)
    lam, tau = _extreme_eigenvalues(omega, target)
    if grid is None:
        grid = np.arange(0.0, 1.0, DEFAULT_MIX_STEP)
    best = None
    for q in grid:
        q = float(q)
        if not 0 <= q < 1:
            raise ValueError(f"Trivial-test weight q={q!r} must lie in [0, 1)")
        try:
            plan = _plan(eps, delta, (1 - q) * lam + q, (1 - q) * tau + q, q)
        except DivergentOverheadError:
            continue
        if best is None or plan.samples < best.samples:
            best = plan
    if best is None:
        raise DivergentOverheadError("Overhead diverges for every trivial-test weight")
    return best


def optimal_homogeneous_lambda(grid: np.ndarray | None = None) -> float:
    """Grid minimizer of the homogeneous prefactor (close to 1/e)."""
    if grid is None:
        grid = np.arange(DEFAULT_MIX_STEP, 1.0, DEFAULT_MIX_STEP)
    grid = np.asarray(grid, dtype=float)
    grid = grid[(grid > 0) & (grid < 1)]
    if grid.size == 0:
        raise ValueError("Grid has no points inside (0, 1)")
    prefactors = 1.0 / (grid * np.log(1.0 / grid))
    return float(grid[np.argmin(prefactors)])
