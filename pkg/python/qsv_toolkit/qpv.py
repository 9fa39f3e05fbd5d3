"""Quantum process verification.

Channels are represented by their Choi matrix
J(E) = sum_{a,b} |a><b| (x) E(|a><b|) on input (x) output. Verifying a gate U
reduces to verifying its Choi state (1/sqrt d) sum_a |a> (x) U|a>, and any
one-way strategy for that state converts into a prepare-and-measure plan:
prepare rho_l, send it through the device, measure N_l.
"""

from dataclasses import dataclass, field
from math import sqrt
from typing import Sequence

import numpy as np

from qsv_toolkit.errors import InvalidPOVMError, NumericalIntegrityError
from qsv_toolkit.local_strategies import mes_strategy
from qsv_toolkit.protocol_sim import check_density
from qsv_toolkit.qmath import (
    DERIVED_TOL,
    INPUT_TOL,
    Operator,
    PureState,
    eigenvalues,
    hermitian_spectrum,
    is_unitary,
    partial_trace,
    random_unitary,
)
from qsv_toolkit.stats import worst_case_pass_prob
from qsv_toolkit.strategy import Strategy, conjugate_strategy


@dataclass(frozen=True, eq=False)
class ChannelChoi:
    """Choi matrix of a channel from C^d_in to C^d_out.

    Attributes:
        d_in: Input dimension
        d_out: Output dimension
        matrix: J(E) of shape (d_in*d_out, d_in*d_out)
    """

    d_in: int
    d_out: int
    matrix: np.ndarray

    def __post_init__(self):
        operator = Operator((self.d_in, self.d_out), self.matrix)
        if not operator.is_hermitian():
            raise ValueError("Choi matrix is not Hermitian")
        smallest = eigenvalues(operator)[-1]
        if smallest < -DERIVED_TOL:
            raise ValueError(
                f"Choi matrix has negative eigenvalue {smallest!r}; "
                "the map is not completely positive"
            )
        object.__setattr__(self, "matrix", operator.matrix)

    @property
    def operator(self) -> Operator:
        return Operator((self.d_in, self.d_out), self.matrix)

    @property
    def trace_preserving(self) -> bool:
        """Tr_out J = 1 on the input space."""
        reduced = partial_trace(self.operator, [0]).matrix
        return bool(np.allclose(reduced, np.eye(self.d_in), rtol=0.0, atol=DERIVED_TOL))

    def state(self) -> Operator:
        """Normalized Choi state J / Tr J."""
        trace = self.operator.trace().real
        if trace <= INPUT_TOL:
            raise ValueError("Choi matrix has zero trace")
        return self.operator * (1.0 / trace)

    @staticmethod
    def from_kraus(kraus: Sequence[np.ndarray]) -> "ChannelChoi":
        """J = sum_K |K>><<K| with |K>> = sum_a |a> (x) K|a>."""
        kraus = [np.asarray(k, dtype=complex) for k in kraus]
        if not kraus:
            raise ValueError("Need at least one Kraus operator")
        d_out, d_in = kraus[0].shape
        if any(k.shape != (d_out, d_in) for k in kraus):
            raise ValueError("Kraus operators have different shapes")
        matrix = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
        for k in kraus:
            vec = k.T.reshape(-1)
            matrix += np.outer(vec, vec.conj())
        return ChannelChoi(d_in, d_out, matrix)

    @staticmethod
    def from_unitary(u: Operator) -> "ChannelChoi":
        if not is_unitary(u):
            raise ValueError("Gate is not unitary within 1e-9")
        return ChannelChoi.from_kraus([u.matrix])

    @staticmethod
    def identity(d: int) -> "ChannelChoi":
        return ChannelChoi.from_kraus([np.eye(d)])

    @staticmethod
    def depolarizing(d: int, p: float) -> "ChannelChoi":
        """E(rho) = (1 - p) rho + p Tr(rho) 1/d."""
        if not 0 <= p <= 1:
            raise ValueError(f"Depolarizing probability p={p!r} must lie in [0, 1]")
        ident = ChannelChoi.identity(d).matrix
        return ChannelChoi(d, d, (1 - p) * ident + p * np.eye(d * d) / d)

    @staticmethod
    def random(d: int, rng: np.random.Generator, rank: int = 2) -> "ChannelChoi":
        """Channel with `rank` Kraus operators cut from a Haar-random isometry."""
        isometry = random_unitary(d * rank, rng).matrix[:, :d]
        return ChannelChoi.from_kraus([isometry[i * d : (i + 1) * d] for i in range(rank)])


def choi_of_unitary(u: Operator) -> tuple[ChannelChoi, PureState]:
    """Choi matrix of U and the Choi state (1/sqrt d) sum_a |a> (x) U|a>.

    Raises:
        ValueError: If u is not unitary within 1e-9
    """
    choi = ChannelChoi.from_unitary(u)
    d = u.dim
    state = PureState((d, d), u.matrix.T.reshape(-1) / sqrt(d))
    return choi, state


def apply_choi(c: ChannelChoi, rho: Operator) -> Operator:
    """E(rho) = Tr_in[(rho^T (x) 1) J]."""
    if rho.dim != c.d_in:
        raise ValueError(f"State dimension {rho.dim} does not match channel input {c.d_in}")
    product = np.kron(rho.matrix.T, np.eye(c.d_out)) @ c.matrix
    return partial_trace(Operator((c.d_in, c.d_out), product), [1])


def entanglement_gate_fidelity(e: ChannelChoi, u: Operator) -> float:
    """F_e = Tr(rho_E rho_U) with normalized Choi states."""
    if (e.d_in, e.d_out) != (u.dim, u.dim):
        raise ValueError(
            f"Channel dims ({e.d_in}, {e.d_out}) do not match gate dimension {u.dim}"
        )
    _, target = choi_of_unitary(u)
    value = e.state().expectation(target)
    return min(1.0, max(0.0, value))


@dataclass
class PMTest:
    """Prepare rho, send it through the device, accept on effect N."""

    probability: float
    input_state: Operator
    effect: Operator
    name: str = ""


@dataclass
class PMStrategy:
    """Prepare-and-measure plan with Xi = sum_l p_l rho_l^T (x) N_l."""

    tests: list[PMTest]
    label: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.tests:
            raise ValueError("Prepare-and-measure plan has no tests")
        total = sum(t.probability for t in self.tests)
        if abs(total - 1.0) > DERIVED_TOL or any(t.probability < 0 for t in self.tests):
            raise ValueError(f"Test probabilities sum to {total!r}, expected 1")

    @property
    def d_in(self) -> int:
        return self.tests[0].input_state.dim

    @property
    def d_out(self) -> int:
        return self.tests[0].effect.dim

    def xi(self) -> Operator:
        matrix = sum(
            t.probability * np.kron(t.input_state.matrix.T, t.effect.matrix)
            for t in self.tests
        )
        return Operator((self.d_in, self.d_out), matrix)

    def validate(self) -> None:
        """Raises ValueError if an input state or effect is invalid."""
        for index, t in enumerate(self.tests):
            check_density(t.input_state, f"input state of test {index}")
            values = eigenvalues(t.effect)
            if values[-1] < -DERIVED_TOL or values[0] > 1 + DERIVED_TOL:
                raise ValueError(f"Effect of test {index} leaves [0, 1]")


def _rank_one_parts(m: Operator) -> list[Operator]:
    values, vectors = hermitian_spectrum(m)
    if values[-1] < -DERIVED_TOL:
        raise InvalidPOVMError(f"Alice effect has negative eigenvalue {values[-1]!r}")
    return [
        Operator(m.dims, value * np.outer(vectors[:, i], vectors[:, i].conj()))
        for i, value in enumerate(values)
        if value > INPUT_TOL
    ]


def convert_one_way_to_pm(s: Strategy, refine: bool = True) -> PMStrategy:
    """Turn one-way branches (M_a, N_a) into (p, rho, N) triples.

    With refine, Alice effects are first split into rank-one parts. Then
    p = p_l Tr(M)/d, rho = M^T / Tr(M), and N is Bob's effect.

    Raises:
        ValueError: If the strategy has no one-way decomposition
        InvalidPOVMError: If a test's Alice effects do not sum to the identity
    """
    if not s.has_one_way_decomposition:
        raise ValueError(f"Strategy '{s.label}' has no one-way decomposition")
    d = s.target.dims[0]
    tests = []
    for test in s.tests:
        total = sum(m.matrix for m, _ in test.branches)
        if not np.allclose(total, np.eye(d), rtol=0.0, atol=DERIVED_TOL):
            raise InvalidPOVMError(
                f"Alice effects of test '{test.name}' do not sum to the identity"
            )
        for a, (m, n) in enumerate(test.branches):
            for part in _rank_one_parts(m) if refine else [m]:
                weight = part.trace().real
                if weight <= INPUT_TOL:
                    continue
                tests.append(
                    PMTest(
                        probability=test.probability * weight / d,
                        input_state=part.transpose() * (1.0 / weight),
                        effect=n,
                        name=f"{test.name}/{a}",
                    )
                )
    return PMStrategy(tests, label=s.label, metadata={"source_strategy": s.label})


def pm_pass_prob(xi: PMStrategy, e: ChannelChoi) -> float:
    """sum_l p_l Tr[E(rho_l) N_l], cross-checked against Tr[Xi J(E)].

    Raises:
        NumericalIntegrityError: If the two sides differ by more than 1e-9
            or the result leaves [0, 1]
    """
    if (e.d_in, e.d_out) != (xi.d_in, xi.d_out):
        raise ValueError(
            f"Channel dims ({e.d_in}, {e.d_out}) do not match plan dims "
            f"({xi.d_in}, {xi.d_out})"
        )
    operational = sum(
        t.probability * np.real(np.trace(apply_choi(e, t.input_state).matrix @ t.effect.matrix))
        for t in xi.tests
    )
    choi_side = float(np.real(np.trace(xi.xi().matrix @ e.matrix)))
    if abs(operational - choi_side) > DERIVED_TOL:
        raise NumericalIntegrityError(
            f"Operational pass probability {operational!r} disagrees with "
            f"Choi-side value {choi_side!r}"
        )
    if not -DERIVED_TOL <= operational <= 1 + DERIVED_TOL:
        raise NumericalIntegrityError(f"Pass probability {operational!r} leaves [0, 1]")
    return float(min(1.0, max(0.0, operational)))


def gate_strategy(u: Operator) -> Strategy:
    """One-way strategy for the Choi state of u (MES strategy rotated on Bob's side)."""
    if not is_unitary(u):
        raise ValueError("Gate is not unitary within 1e-9")
    d = u.dim
    s = conjugate_strategy(mes_strategy(d), Operator.identity((d,)), Operator((d,), u.matrix))
    s.label = "gate"
    return s


def pm_failure_bound(eps: float, nu: float) -> float:
    """Largest pass probability of a gate with infidelity at least eps."""
    return worst_case_pass_prob(eps, nu)


def plan_is_valid_for_gate(xi: PMStrategy, u: Operator) -> bool:
    """Tr(U rho_l U^dagger N_l) = 1 for every test."""
    for t in xi.tests:
        output = u.matrix @ t.input_state.matrix @ u.matrix.conj().T
        if abs(np.real(np.trace(output @ t.effect.matrix)) - 1.0) > DERIVED_TOL:
            return False
    return True
