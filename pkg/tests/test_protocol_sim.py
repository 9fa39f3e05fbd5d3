"""Tests for sources and the seeded protocol simulator."""

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from math import sqrt

import numpy as np
import pytest

from qsv_toolkit.errors import NumericalIntegrityError
from qsv_toolkit.local_strategies import bell_strategy, ghz_optimal
from qsv_toolkit.locc_strategies import one_way_qubit
from qsv_toolkit.protocol_sim import (
    Source,
    Transcript,
    check_density,
    custom_source,
    depolarized_source,
    evaluate_transcript,
    exact_source,
    parse_source_spec,
    round_pass_probabilities,
    run_protocol,
    worst_case_source,
    worst_case_state,
    worst_case_vector,
)
from qsv_toolkit.qmath import Operator, PureState
from qsv_toolkit.serialization import operator_to_dict
from qsv_toolkit.strategy import Strategy, WeightedTest


class TestSources:
    def test_check_density(self):
        check_density(Operator.identity((2,)) * 0.5)
        with pytest.raises(ValueError, match="trace"):
            check_density(Operator.identity((2,)))
        with pytest.raises(ValueError, match="negative eigenvalue"):
            check_density(Operator((2,), np.diag([1.5, -0.5])))

    def test_depolarized_fidelity(self, bell):
        src = depolarized_source(bell, 0.1)
        assert src.fidelity(bell) == pytest.approx(0.925)
        assert src.describe() == "depolarized(p=0.1)"

    def test_depolarized_range(self, bell):
        with pytest.raises(ValueError, match="must lie in"):
            depolarized_source(bell, 1.5)

    def test_worst_case_pass_probability(self):
        s = one_way_qubit(0.4)
        sigma = worst_case_state(s, 0.3)
        omega = s.operator()
        pass_prob = float(np.real(np.trace(omega.matrix @ sigma.matrix)))
        assert pass_prob == pytest.approx(1 - 0.3 * s.gap(), abs=1e-9)

    def test_worst_case_bell_warns_degenerate(self):
        s = bell_strategy()
        with pytest.warns(UserWarning, match="degenerate"):
            src = worst_case_source(s, 0.3)
        assert src.params["degenerate"] is True
        q = round_pass_probabilities(s, src)
        assert float(np.dot([t.probability for t in s.tests], q)) == pytest.approx(0.8)

    def test_worst_case_vector_one_way_is_degenerate(self):
        # X and Y measurements enter symmetrically.
        s = one_way_qubit(0.4)
        perp, degenerate = worst_case_vector(s)
        assert degenerate
        assert perp.fidelity(s.target) == pytest.approx(0.0, abs=1e-12)

    def test_worst_case_vector_nondegenerate(self):
        target = PureState((2, 2), [1, 0, 0, 0])
        effect = Operator((2, 2), np.diag([1.0, 0.5, 0.3, 0.1]))
        s = Strategy(target, [WeightedTest(1.0, effect, name="diag")], "diag")
        perp, degenerate = worst_case_vector(s)
        assert not degenerate
        assert abs(perp.amplitudes[1]) == pytest.approx(1.0)
        assert perp.fidelity(target) == pytest.approx(0.0, abs=1e-12)


class TestParseSourceSpec:
    def test_kinds(self, bell):
        s = bell_strategy()
        assert parse_source_spec("exact", s).kind == "exact"
        assert parse_source_spec("depolarized:0.2", s).kind == "depolarized"
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert parse_source_spec("worst:0.1", s).kind == "worst-case"

    def test_custom(self, tmp_path, bell):
        path = tmp_path / "rho.json"
        path.write_text(json.dumps(operator_to_dict(Operator.identity((2, 2)) * 0.25)))
        src = parse_source_spec(f"custom:{path}", bell_strategy())
        assert src.kind == "custom"
        assert src.fidelity(bell) == pytest.approx(0.25)

    def test_custom_dims_mismatch(self, tmp_path):
        path = tmp_path / "rho.json"
        path.write_text(json.dumps(operator_to_dict(Operator.identity((2,)) * 0.5)))
        with pytest.raises(ValueError, match="do not match"):
            parse_source_spec(f"custom:{path}", bell_strategy())

    def test_invalid(self):
        s = bell_strategy()
        with pytest.raises(ValueError, match="Invalid source spec"):
            parse_source_spec("worst:abc", s)
        with pytest.raises(ValueError, match="Unknown source kind"):
            parse_source_spec("noisy:0.1", s)


class TestRunProtocol:
    def test_exact_source_always_passes(self):
        s = ghz_optimal(3)
        tr = run_protocol(s, exact_source(s.target), 5000, seed=11)
        assert tr.passes == tr.rounds == 5000
        assert tr.frequency == 1.0

    def test_worst_case_frequency(self):
        s = bell_strategy()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            src = worst_case_source(s, 0.3)
        n = 100_000
        tr = run_protocol(s, src, n, seed=1234)
        assert abs(tr.frequency - 0.8) < 4 * sqrt(0.16 / n)

    def test_all_pass_rate_over_repeated_runs(self):
        s = bell_strategy()
        eps, rounds, runs = 0.1, 10, 2000
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            src = worst_case_source(s, eps)
        all_passed = sum(
            run_protocol(s, src, rounds, seed=seed).passes == rounds for seed in range(runs)
        )
        expected = (1 - eps * s.gap()) ** rounds
        assert abs(all_passed / runs - expected) < 4 * sqrt(expected * (1 - expected) / runs)

    def test_tests_drawn_with_their_probabilities(self):
        s = ghz_optimal(3)
        tr = run_protocol(s, exact_source(s.target), 60_000, seed=5)
        share_z = np.mean(tr.tests == 0)
        assert share_z == pytest.approx(1 / 3, abs=0.01)

    def test_identical_across_threads_and_chunks(self):
        s = one_way_qubit(0.3)
        src = depolarized_source(s.target, 0.2)
        sequential = run_protocol(s, src, 20_000, seed=99)
        with ThreadPoolExecutor(max_workers=4) as executor:
            threaded = run_protocol(s, src, 20_000, seed=99, executor=executor, chunk_rounds=777)
        assert np.array_equal(sequential.tests, threaded.tests)
        assert np.array_equal(sequential.passed, threaded.passed)

    def test_prefix_stable(self):
        """The first rounds of a longer run equal a shorter run with the same seed."""
        s = bell_strategy()
        src = depolarized_source(s.target, 0.5)
        short = run_protocol(s, src, 1000, seed=3)
        long = run_protocol(s, src, 3000, seed=3, chunk_rounds=512)
        assert np.array_equal(short.passed, long.passed[:1000])

    def test_seed_changes_outcome(self):
        s = bell_strategy()
        src = depolarized_source(s.target, 0.5)
        a = run_protocol(s, src, 2000, seed=1)
        b = run_protocol(s, src, 2000, seed=2)
        assert not np.array_equal(a.passed, b.passed)

    def test_rejects_zero_rounds(self):
        s = bell_strategy()
        with pytest.raises(ValueError, match="at least one round"):
            run_protocol(s, exact_source(s.target), 0, seed=0)

    def test_integrity_error_on_bad_effect(self, bell):
        bad = Strategy(bell, [WeightedTest(1.0, Operator.identity((2, 2)) * 1.5)], "bad")
        with pytest.raises(NumericalIntegrityError, match="pass probability"):
            round_pass_probabilities(bad, custom_source(bell.projector()))

    def test_fidelity_estimation_demonstration(self):
        """A 0.995-fidelity Bell source is certified above 0.95 within 1000 rounds."""
        s = bell_strategy()
        p = (1 - 0.995) * 4 / 3
        src = depolarized_source(s.target, p)
        assert src.fidelity(s.target) == pytest.approx(0.995)
        confident = 0
        trials = 20
        for seed in range(trials):
            tr = run_protocol(s, src, 1000, seed=seed)
            result = evaluate_transcript(tr, 0.05, s.gap())
            if result.rejected and result.confidence >= 0.95:
                confident += 1
        assert confident >= 0.8 * trials


class TestTranscript:
    def test_counts(self):
        tr = Transcript(0, "x", "exact", [0, 1, 2], [True, False, True])
        assert tr.rounds == 3
        assert tr.passes == 2
        assert tr.frequency == pytest.approx(2 / 3)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="disagree"):
            Transcript(0, "x", "exact", [0, 1], [True])

    def test_source_kind_checked(self):
        with pytest.raises(ValueError, match="trace"):
            Source("custom", Operator.identity((2,)))
