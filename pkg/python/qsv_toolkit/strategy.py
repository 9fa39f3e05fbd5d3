"""Verification strategies as weighted sequences of binary tests.

A strategy applies test l with probability p_l; a state sigma passes test l
with probability Tr(Omega_l sigma). The aggregate verification operator is
Omega = sum_l p_l Omega_l and its spectral gap governs sample complexity.

Effects may be supplied lazily through a builder callable so that strategies
with thousands of dense tests (e.g. stabilizer strategies on 12 qubits) do not
hold every effect in memory at once.

Bipartite tests can carry a one-way decomposition: a list of
(Alice effect, Bob effect) branches with sum_a M_a = 1 and
Omega_l = sum_a M_a (x) N_a. Prepare-and-measure conversion consumes these.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from qsv_toolkit.errors import (
    InvalidPOVMError,
    InvalidStrategyError,
    StateNeverOccursError,
)
from qsv_toolkit.qmath import (
    DERIVED_TOL,
    INPUT_TOL,
    Operator,
    PureState,
    eigenvalues,
    hermitian_spectrum,
    kron,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    spectral_gap,
)

Branch = tuple[Operator, Operator]

# Strategies whose simplex, effect and target checks pass within these bounds
# are considered valid.
PROBABILITY_TOL = 1e-12
EFFECT_TOL = DERIVED_TOL
# Largest local dimension product for which PPT is equivalent to separability.
PPT_EXACT_DIMENSION = 6


class WeightedTest:
    """A binary test applied with a given probability."""

    __test__ = False

    def __init__(
        self,
        probability: float,
        effect: Operator | None = None,
        *,
        name: str = "",
        builder: Callable[[], Operator] | None = None,
        branches: Sequence[Branch] | None = None,
    ):
        if (effect is None) == (builder is None):
            raise ValueError("Provide exactly one of effect or builder")
        self.probability = float(probability)
        self.name = name
        self._effect = effect
        self._builder = builder
        self.branches = list(branches) if branches is not None else None

    @property
    def effect(self) -> Operator:
        if self._effect is not None:
            return self._effect
        return self._builder()

    @property
    def is_lazy(self) -> bool:
        return self._effect is None

    def materialized(self) -> "WeightedTest":
        """Copy holding the dense effect."""
        return WeightedTest(
            self.probability, self.effect, name=self.name, branches=self.branches
        )

    def __repr__(self) -> str:
        return f"WeightedTest(p={self.probability!r}, name={self.name!r})"


@dataclass
class Strategy:
    """Target state plus weighted tests.

    Attributes:
        target: The state every test accepts with certainty
        tests: Weighted binary tests
        label: Strategy family tag (e.g. "bell", "oneway-qubit")
        predicted_gap: Closed-form spectral gap, when one is known
        metadata: Free-form builder parameters (JSON-serializable)
    """

    target: PureState
    tests: list[WeightedTest]
    label: str
    predicted_gap: float | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def operator(self) -> Operator:
        """Aggregate Omega = sum_l p_l Omega_l."""
        total = np.zeros((self.target.dim, self.target.dim), dtype=complex)
        for test in self.tests:
            total += test.probability * test.effect.matrix
        return Operator(self.target.dims, total)

    def gap(self) -> float:
        return spectral_gap(self.operator(), self.target)

    def pass_probabilities(self, density: Operator) -> np.ndarray:
        """Tr(Omega_l sigma) for every test."""
        rho_t = density.matrix.T
        return np.array(
            [float(np.real(np.sum(test.effect.matrix * rho_t))) for test in self.tests]
        )

    @property
    def has_one_way_decomposition(self) -> bool:
        return bool(self.tests) and all(t.branches is not None for t in self.tests)

    def validate(self) -> None:
        """Check simplex, effect bounds and target fixing.

        Raises:
            InvalidStrategyError: Naming the first violated invariant
        """
        problem = probability_problem(self)
        if problem:
            raise InvalidStrategyError(problem)
        for index, test in enumerate(self.tests):
            problem = effect_problem(test.effect, self.target)
            if problem:
                raise InvalidStrategyError(f"Test {index} ({test.name}): {problem}")

    def materialized(self) -> "Strategy":
        return Strategy(
            self.target,
            [t.materialized() for t in self.tests],
            self.label,
            self.predicted_gap,
            dict(self.metadata),
        )


def probability_problem(s: Strategy) -> str | None:
    """Describe a probability-simplex violation, or return None."""
    if not s.tests:
        return "Strategy has no tests"
    negative = [t.probability for t in s.tests if t.probability < 0]
    if negative:
        return f"Negative test probabilities: {negative}"
    total = math.fsum(t.probability for t in s.tests)
    if abs(total - 1.0) > PROBABILITY_TOL:
        return f"Test probabilities sum to {total!r}, expected 1"
    return None


def effect_problem(effect: Operator, target: PureState) -> str | None:
    """Describe why an effect is not a valid test for target, or return None."""
    if effect.dims != target.dims:
        return f"effect dims {effect.dims} do not match target dims {target.dims}"
    if not effect.is_hermitian():
        return "effect is not Hermitian"
    values = eigenvalues(effect)
    if values[-1] < -EFFECT_TOL or values[0] > 1 + EFFECT_TOL:
        return f"effect spectrum [{values[-1]:.3e}, {values[0]:.3e}] leaves [0, 1]"
    residual = np.linalg.norm(effect.apply(target) - target.amplitudes)
    if residual > EFFECT_TOL:
        return f"effect does not fix the target (residual {residual:.3e})"
    return None


def _check_povm(povm: Sequence[Operator], party: str) -> None:
    if not povm:
        raise InvalidPOVMError(f"{party} POVM is empty")
    total = sum((m.matrix for m in povm), np.zeros_like(povm[0].matrix))
    if not np.allclose(total, np.eye(total.shape[0]), rtol=0.0, atol=DERIVED_TOL):
        raise InvalidPOVMError(f"{party} effects do not sum to the identity")


def local_test(
    alice_povm: Sequence[Operator], bob_povm: Sequence[Operator], target: PureState
) -> tuple[Operator, list[Branch]]:
    """Effect of the local test plus its one-way branches.

    Outcome pairs (a, b) are accepted when (M_a (x) N_b)|psi> is nonzero
    (norm above 1e-9). Branch a pairs M_a with the sum of Bob effects
    accepted after outcome a.

    Raises:
        InvalidPOVMError: If either side does not sum to the identity
    """
    _check_povm(alice_povm, "Alice")
    _check_povm(bob_povm, "Bob")
    dims = alice_povm[0].dims + bob_povm[0].dims
    if dims != target.dims:
        raise ValueError(f"POVM dims {dims} do not match target dims {target.dims}")
    effect = np.zeros((target.dim, target.dim), dtype=complex)
    branches = []
    for m in alice_povm:
        accepted = np.zeros_like(bob_povm[0].matrix)
        for n in bob_povm:
            product = kron(m, n)
            if np.linalg.norm(product.apply(target)) > DERIVED_TOL:
                effect += product.matrix
                accepted = accepted + n.matrix
        branches.append((m, Operator(bob_povm[0].dims, accepted)))
    return Operator(target.dims, effect), branches


def build_local_test(
    alice_povm: Sequence[Operator], bob_povm: Sequence[Operator], target: PureState
) -> Operator:
    """Omega_l = sum over accepted outcome pairs of M_a (x) N_b."""
    effect, _ = local_test(alice_povm, bob_povm, target)
    return effect


def bob_semi_optimal(alice_effect: Operator, target: PureState) -> Operator:
    """Projector onto Bob's state after Alice observes alice_effect.

    Raises:
        StateNeverOccursError: If the outcome has zero probability on target
        ValueError: If the collapsed state is mixed (alice_effect not rank one)
    """
    if len(target.dims) != 2 or alice_effect.dims != target.dims[:1]:
        raise ValueError(
            f"Alice effect dims {alice_effect.dims} do not fit target dims {target.dims}"
        )
    bob_identity = Operator.identity(target.dims[1:])
    joint = kron(alice_effect, bob_identity) @ target.projector()
    collapsed = partial_trace(joint, [1])
    weight = float(np.real(collapsed.trace()))
    if weight <= INPUT_TOL:
        raise StateNeverOccursError(
            "Alice outcome has zero probability on the target state"
        )
    rho = Operator(collapsed.dims, (collapsed.matrix + collapsed.matrix.conj().T) / (2 * weight))
    values, vectors = hermitian_spectrum(rho)
    if values.shape[0] > 1 and values[1] > DERIVED_TOL:
        raise ValueError(
            "Alice effect leaves Bob in a mixed state; split it into rank-one effects"
        )
    return Operator.from_vector(vectors[:, 0], rho.dims)


@dataclass
class OneWayReport:
    """Outcome of the one-way LOCC feasibility checks.

    Attributes:
        separable: Omega passes the PPT test (min eigenvalue >= -1e-9)
        separable_exact: PPT is equivalent to separability for these dims
        trace_b_identity: Tr_B(Omega) equals the identity within 1e-9
        target_accepted: <psi|Omega|psi> equals one within 1e-9
        ppt_min_eigenvalue: Smallest eigenvalue of the partial transpose
    """

    separable: bool
    separable_exact: bool
    trace_b_identity: bool
    target_accepted: bool
    ppt_min_eigenvalue: float

    @property
    def passed(self) -> bool:
        return self.separable and self.trace_b_identity and self.target_accepted

    def to_dict(self) -> dict[str, Any]:
        return {
            "separable": self.separable,
            "separable_exact": self.separable_exact,
            "trace_b_identity": self.trace_b_identity,
            "target_accepted": self.target_accepted,
            "ppt_min_eigenvalue": self.ppt_min_eigenvalue,
            "passed": self.passed,
        }


def check_one_way_constraints(s: Strategy) -> OneWayReport:
    """Check Omega in SEP (via PPT), Tr_B(Omega) = 1 and <psi|Omega|psi> = 1."""
    if len(s.target.dims) != 2:
        raise ValueError(
            f"One-way constraints need a bipartite target, got dims {s.target.dims}"
        )
    omega = s.operator()
    ppt_min = min_eigenvalue(partial_transpose(omega, 1))
    reduced = partial_trace(omega, [0])
    trace_b_identity = bool(
        np.allclose(reduced.matrix, np.eye(reduced.dim), rtol=0.0, atol=DERIVED_TOL)
    )
    target_accepted = abs(omega.expectation(s.target) - 1.0) <= DERIVED_TOL
    return OneWayReport(
        separable=ppt_min >= -DERIVED_TOL,
        separable_exact=s.target.dims[0] * s.target.dims[1] <= PPT_EXACT_DIMENSION,
        trace_b_identity=trace_b_identity,
        target_accepted=target_accepted,
        ppt_min_eigenvalue=ppt_min,
    )


def global_strategy(target: PureState) -> Strategy:
    """Single test projecting onto the target (gap 1)."""
    return Strategy(
        target,
        [WeightedTest(1.0, target.projector(), name="global")],
        "global",
        predicted_gap=1.0,
    )


def conjugate_strategy(
    s: Strategy, alice_unitary: Operator, bob_unitary: Operator
) -> Strategy:
    """Rotate a bipartite strategy by the local unitary A (x) B.

    The rotated strategy verifies (A (x) B)|psi> with the same spectrum.
    """
    local = kron(alice_unitary, bob_unitary)
    if local.dims != s.target.dims:
        raise ValueError(
            f"Local unitary dims {local.dims} do not match target dims {s.target.dims}"
        )
    u = local.matrix
    target = PureState.normalized(s.target.dims, u @ s.target.amplitudes)

    def rotate(op: Operator, v: np.ndarray) -> Operator:
        return Operator(op.dims, v @ op.matrix @ v.conj().T)

    tests = []
    for test in s.tests:
        branches = None
        if test.branches is not None:
            branches = [
                (rotate(m, alice_unitary.matrix), rotate(n, bob_unitary.matrix))
                for m, n in test.branches
            ]
        tests.append(
            WeightedTest(
                test.probability,
                name=test.name,
                builder=lambda t=test: rotate(t.effect, u),
                branches=branches,
            )
        )
    return Strategy(
        target,
        tests,
        s.label,
        s.predicted_gap,
        {**s.metadata, "conjugated": True},
    )
