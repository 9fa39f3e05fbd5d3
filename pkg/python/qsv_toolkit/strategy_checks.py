"""Invariant checks for verification strategies.

Each check yields a CheckResult; a strategy is valid when every check passes.
Checks keep going after a failure so that one report lists every problem.
"""

from dataclasses import asdict, dataclass, field

from qsv_toolkit.errors import InvalidOperatorError
from qsv_toolkit.qmath import DERIVED_TOL
from qsv_toolkit.strategy import (
    Strategy,
    check_one_way_constraints,
    effect_problem,
    probability_problem,
)

# Achieved and closed-form gaps must agree to this tolerance.
GAP_TOL = 1e-6


@dataclass
class CheckResult:
    """Result of a single strategy check."""

    check_name: str
    passed: bool
    message: str
    details: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _check_simplex(s: Strategy) -> CheckResult:
    problem = probability_problem(s)
    if problem:
        return CheckResult("Probability Simplex", False, problem)
    return CheckResult(
        "Probability Simplex", True, f"{len(s.tests)} test probabilities sum to 1"
    )


def _check_effects(s: Strategy) -> tuple[CheckResult, CheckResult]:
    bound_details = []
    fix_details = []
    for index, test in enumerate(s.tests):
        problem = effect_problem(test.effect, s.target)
        label = f"test {index} ({test.name})" if test.name else f"test {index}"
        if problem is None:
            continue
        if "fix the target" in problem:
            fix_details.append(f"  ✗ {label}: {problem}")
        else:
            bound_details.append(f"  ✗ {label}: {problem}")

    bounds = CheckResult(
        "Effect Bounds",
        not bound_details,
        "Every effect is Hermitian with spectrum in [0, 1]"
        if not bound_details
        else f"{len(bound_details)} effect(s) out of bounds",
        bound_details,
    )
    fixing = CheckResult(
        "Target Fixing",
        not fix_details,
        "Every effect accepts the target with certainty"
        if not fix_details
        else f"{len(fix_details)} effect(s) reject the target",
        fix_details,
    )
    return bounds, fixing


def _check_gap(s: Strategy) -> CheckResult:
    try:
        gap = s.gap()
    except InvalidOperatorError as e:
        return CheckResult("Spectral Gap", False, str(e))
    details = [f"  achieved: {gap!r}"]
    if s.predicted_gap is None:
        return CheckResult("Spectral Gap", True, "No closed-form prediction", details)
    details.append(f"  predicted: {s.predicted_gap!r}")
    diff = abs(gap - s.predicted_gap)
    if diff > GAP_TOL:
        return CheckResult(
            "Spectral Gap", False, f"Gap differs from prediction by {diff:.3e}", details
        )
    return CheckResult("Spectral Gap", True, "Gap matches prediction", details)


def _check_one_way(s: Strategy) -> CheckResult:
    report = check_one_way_constraints(s)
    mark = {True: "✓", False: "✗"}
    details = [
        f"  {mark[report.separable]} PPT (min eigenvalue {report.ppt_min_eigenvalue:.3e})",
        f"  {mark[report.trace_b_identity]} Tr_B(Omega) = 1",
        f"  {mark[report.target_accepted]} <psi|Omega|psi> = 1",
    ]
    if not report.separable_exact:
        details.append("  PPT is only necessary for separability at these dimensions")
    return CheckResult(
        "One-Way Constraints",
        report.passed,
        "Omega is PPT with Tr_B(Omega) = 1" if report.passed else "One-way constraints violated",
        details,
    )


def is_semi_optimal(s: Strategy) -> bool:
    """Bipartite one-way decomposition whose Bob effects are all rank-one projectors."""
    if len(s.target.dims) != 2 or not s.has_one_way_decomposition:
        return False
    return all(
        abs(n.trace().real - 1.0) <= DERIVED_TOL for t in s.tests for _, n in t.branches
    )


def check_strategy(s: Strategy, one_way: bool | None = None) -> list[CheckResult]:
    """Run all checks on s.

    Args:
        s: Strategy to check
        one_way: Whether to check the one-way LOCC constraints. None checks
            them for semi-optimal one-way strategies.
    """
    results = [_check_simplex(s)]
    results.extend(_check_effects(s))
    results.append(_check_gap(s))
    if one_way is None:
        one_way = is_semi_optimal(s)
    if one_way:
        results.append(_check_one_way(s))
    return results


def format_summary(results: list[CheckResult], verbose: bool = False) -> list[str]:
    """Human-readable report lines with ✓/✗ markers."""
    lines = ["=" * 70, "STRATEGY CHECK SUMMARY", "=" * 70]
    for result in results:
        status = "✓" if result.passed else "✗"
        lines.append(f"{status} {result.check_name}: {result.message}")
        if verbose or not result.passed:
            lines.extend(result.details)
    failed = sum(1 for r in results if not r.passed)
    lines.append("")
    lines.append(f"Total checks: {len(results)}")
    lines.append(f"Passed: {len(results) - failed}")
    lines.append(f"Failed: {failed}")
    lines.append("")
    lines.append("✓ ALL CHECKS PASSED" if failed == 0 else "✗ CHECKS FAILED")
    return lines
