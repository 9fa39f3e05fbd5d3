"""Tests for adversarial sample planning."""

import math

import numpy as np
import pytest

from qsv_toolkit.adversarial import (
    adversarial_overhead,
    adversarial_samples_general,
    adversarial_samples_homogeneous,
    homogeneous_prefactor,
    homogeneous_strategy,
    optimal_homogeneous_lambda,
    optimize_trivial_mix,
    trivial_mix,
)
from qsv_toolkit.errors import DivergentOverheadError
from qsv_toolkit.local_strategies import bell_strategy, ghz_two_setting
from qsv_toolkit.qmath import eigenvalues
from qsv_toolkit.states import bell_state


class TestPrefactor:
    def test_minimum_at_inverse_e(self):
        assert homogeneous_prefactor(1 / math.e) == pytest.approx(math.e)
        assert optimal_homogeneous_lambda() == pytest.approx(1 / math.e, abs=1e-3)

    def test_overhead_takes_max(self):
        assert adversarial_overhead(0.5, 0.1) == pytest.approx(4.343, abs=1e-3)
        assert homogeneous_prefactor(0.5) == pytest.approx(2.885, abs=1e-3)

    def test_homogeneous_third(self):
        assert adversarial_overhead(1 / 3, 1 / 3) == pytest.approx(2.731, abs=1e-3)

    @pytest.mark.parametrize("lam", [0.0, 1.0, -0.1])
    def test_diverges(self, lam):
        with pytest.raises(DivergentOverheadError):
            homogeneous_prefactor(lam)

    def test_empty_grid(self):
        with pytest.raises(ValueError, match="no points"):
            optimal_homogeneous_lambda(np.array([0.0, 1.0]))


class TestSamples:
    def test_homogeneous_oracle(self):
        assert adversarial_samples_homogeneous(0.01, 0.01, 1 / math.e) == 1252

    def test_general_agrees_with_homogeneous(self):
        for lam in (0.2, 1 / math.e, 0.6):
            s = homogeneous_strategy(bell_state(), lam)
            plan = adversarial_samples_general(0.01, 0.05, s.operator(), s.target)
            assert plan.samples == adversarial_samples_homogeneous(0.01, 0.05, lam)
            assert plan.lam == plan.tau
            assert plan.asymptotic is True

    def test_bell_is_homogeneous(self):
        s = bell_strategy()
        plan = adversarial_samples_general(0.1, 0.1, s.operator(), s.target)
        assert plan.lam == pytest.approx(1 / 3)
        assert plan.tau == plan.lam
        assert plan.overhead == pytest.approx(2.731, abs=1e-3)

    def test_zero_smallest_eigenvalue_diverges(self):
        s = ghz_two_setting(3)
        with pytest.raises(DivergentOverheadError):
            adversarial_samples_general(0.1, 0.1, s.operator(), s.target)

    def test_invalid_eps(self):
        with pytest.raises(ValueError, match="eps"):
            adversarial_samples_homogeneous(0.0, 0.1, 0.5)

    def test_plan_to_dict(self):
        s = bell_strategy()
        data = adversarial_samples_general(0.1, 0.1, s.operator(), s.target).to_dict()
        assert set(data) == {
            "eps", "delta", "lam", "tau", "overhead", "samples", "trivial_mix", "asymptotic"
        }


class TestTrivialMix:
    def test_mixing_shifts_spectrum(self):
        omega = bell_strategy().operator()
        mixed = trivial_mix(omega, 0.25)
        assert eigenvalues(mixed)[-1] == pytest.approx(0.75 / 3 + 0.25)

    def test_weight_range(self):
        with pytest.raises(ValueError, match=r"\[0, 1\)"):
            trivial_mix(bell_strategy().operator(), 1.0)

    def test_optimum_moves_bell_to_inverse_e(self):
        s = bell_strategy()
        plan = optimize_trivial_mix(0.01, 0.01, s.operator(), s.target)
        expected_q = (1 / math.e - 1 / 3) / (2 / 3)
        # N is flat near the optimum, so ties spread the chosen weight a little.
        assert plan.trivial_mix == pytest.approx(expected_q, abs=0.02)
        assert plan.overhead == pytest.approx(math.e, abs=1e-3)
        unmixed = adversarial_samples_general(0.01, 0.01, s.operator(), s.target)
        assert plan.samples <= unmixed.samples

    def test_mixing_rescues_divergent_strategy(self):
        s = ghz_two_setting(3)
        plan = optimize_trivial_mix(0.05, 0.05, s.operator(), s.target)
        assert plan.trivial_mix > 0
        assert math.isfinite(plan.overhead)
