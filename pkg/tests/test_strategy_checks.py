"""Tests for strategy invariant checks and the summary report."""

import pytest

from qsv_toolkit.local_strategies import bell_strategy, two_qubit_local_optimal
from qsv_toolkit.locc_strategies import one_way_qubit, two_way_qubit
from qsv_toolkit.qmath import Operator, basis_ket
from qsv_toolkit.strategy import Strategy, WeightedTest, global_strategy
from qsv_toolkit.strategy_checks import (
    CheckResult,
    check_strategy,
    format_summary,
    is_semi_optimal,
)


def _names(results: list[CheckResult]) -> list[str]:
    return [r.check_name for r in results]


class TestCheckStrategy:
    def test_bell_passes_all(self):
        results = check_strategy(bell_strategy())
        assert all(r.passed for r in results)
        assert "One-Way Constraints" in _names(results)

    def test_one_way_builder_checked_for_one_way_constraints(self):
        results = check_strategy(one_way_qubit(0.5))
        assert _names(results)[-1] == "One-Way Constraints"
        assert all(r.passed for r in results)

    def test_two_way_skips_one_way_constraints(self):
        results = check_strategy(two_way_qubit(0.5))
        assert "One-Way Constraints" not in _names(results)
        assert all(r.passed for r in results)

    def test_local_trine_strategy_not_semi_optimal(self):
        s = two_qubit_local_optimal(0.5)
        assert not is_semi_optimal(s)
        assert all(r.passed for r in check_strategy(s))

    def test_forced_one_way_check_fails_for_global_projector(self, bell):
        results = check_strategy(global_strategy(bell), one_way=True)
        one_way = results[-1]
        assert one_way.check_name == "One-Way Constraints"
        assert not one_way.passed
        assert any("PPT" in line for line in one_way.details)

    def test_reports_every_problem(self, bell):
        bad = Strategy(
            bell,
            [
                WeightedTest(0.5, basis_ket((2, 2), 0).projector(), name="Z0"),
                WeightedTest(0.4, Operator.identity((2, 2)) * 2.0, name="big"),
            ],
            "bad",
        )
        results = {r.check_name: r for r in check_strategy(bad)}
        assert not results["Probability Simplex"].passed
        assert not results["Effect Bounds"].passed
        assert not results["Target Fixing"].passed
        assert not results["Spectral Gap"].passed
        assert "Z0" in results["Target Fixing"].details[0]

    def test_gap_mismatch(self):
        s = bell_strategy()
        s.predicted_gap = 0.5
        results = {r.check_name: r for r in check_strategy(s)}
        assert not results["Spectral Gap"].passed
        assert "differs" in results["Spectral Gap"].message

    def test_no_prediction(self, bell):
        s = global_strategy(bell)
        s.predicted_gap = None
        results = {r.check_name: r for r in check_strategy(s)}
        assert results["Spectral Gap"].passed
        assert results["Spectral Gap"].message == "No closed-form prediction"


class TestFormatSummary:
    def test_all_passed(self):
        lines = format_summary(check_strategy(bell_strategy()))
        assert lines[1] == "STRATEGY CHECK SUMMARY"
        assert lines[-1] == "✓ ALL CHECKS PASSED"
        assert "Failed: 0" in lines

    def test_failed_shows_details(self, bell):
        results = [CheckResult("Example", False, "broken", ["  ✗ detail"])]
        lines = format_summary(results)
        assert "✗ Example: broken" in lines
        assert "  ✗ detail" in lines
        assert lines[-1] == "✗ CHECKS FAILED"

    def test_verbose_includes_passing_details(self):
        results = [CheckResult("Example", True, "fine", ["  achieved: 1.0"])]
        assert "  achieved: 1.0" not in format_summary(results)
        assert "  achieved: 1.0" in format_summary(results, verbose=True)

    def test_to_dict(self):
        data = CheckResult("Example", True, "fine").to_dict()
        assert data == {"check_name": "Example", "passed": True, "message": "fine", "details": []}
