"""Constructors for the target state families.

Basis convention: computational basis in lexicographic order with qubit 1 as
the most significant factor, so |q1 q2 ... qn> has index sum(q_i 2^(n-i)).
"""

from dataclasses import dataclass
from itertools import combinations
from math import comb, cos, sin, sqrt
from pathlib import Path

import numpy as np

from qsv_toolkit.errors import SchemaError
from qsv_toolkit.qmath import INPUT_TOL, PureState, check_dims

# Schmidt inputs within this distance of valid are sorted and renormalized.
SCHMIDT_REPAIR_TOL = 1e-9


@dataclass(frozen=True)
class SchmidtVector:
    """Schmidt coefficients lambda_1 >= ... >= lambda_d >= 0 with unit 2-norm."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coefficients = tuple(float(c) for c in self.coefficients)
        if len(coefficients) < 2:
            raise ValueError("Schmidt vector needs at least two coefficients")
        if any(c < 0 for c in coefficients):
            raise ValueError(f"Schmidt coefficients must be non-negative: {coefficients}")
        if any(a < b for a, b in zip(coefficients, coefficients[1:])):
            raise ValueError(f"Schmidt coefficients must be descending: {coefficients}")
        norm_sq = sum(c * c for c in coefficients)
        if abs(norm_sq - 1.0) > INPUT_TOL:
            raise ValueError(
                f"Schmidt coefficients must have unit 2-norm (got {norm_sq!r})"
            )
        object.__setattr__(self, "coefficients", coefficients)

    @staticmethod
    def from_values(values) -> "SchmidtVector":
        """Validate raw coefficients, repairing order and norm if nearly valid.

        Raises:
            ValueError: If a coefficient is negative beyond tolerance or the
                squared norm is more than 1e-9 away from one
        """
        values = [float(v) for v in values]
        if any(v < -SCHMIDT_REPAIR_TOL for v in values):
            raise ValueError(f"Schmidt coefficients must be non-negative: {values}")
        values = [max(v, 0.0) for v in values]
        norm_sq = sum(v * v for v in values)
        if abs(norm_sq - 1.0) > SCHMIDT_REPAIR_TOL:
            raise ValueError(
                f"Schmidt coefficients have squared norm {norm_sq!r}, expected 1"
            )
        norm = sqrt(norm_sq)
        return SchmidtVector(tuple(sorted((v / norm for v in values), reverse=True)))

    @staticmethod
    def uniform(d: int) -> "SchmidtVector":
        return SchmidtVector(tuple([1.0 / sqrt(d)] * d))

    @property
    def d(self) -> int:
        return len(self.coefficients)

    @property
    def squares(self) -> np.ndarray:
        return np.array(self.coefficients) ** 2


def _qubit_index(bits) -> int:
    index = 0
    for bit in bits:
        index = (index << 1) | int(bit)
    return index


def _check_qubits(n: int, minimum: int = 2) -> None:
    if n < minimum:
        raise ValueError(f"Need at least {minimum} qubits, got {n}")
    check_dims([2] * n)


def mes_qudit(d: int) -> PureState:
    """(1/sqrt d) sum_a |aa>."""
    if d < 2:
        raise ValueError(f"Local dimension must be at least 2, got {d}")
    amplitudes = np.zeros(d * d, dtype=complex)
    amplitudes[[a * d + a for a in range(d)]] = 1.0 / sqrt(d)
    return PureState((d, d), amplitudes)


def bell_state() -> PureState:
    return mes_qudit(2)


def ghz(n: int) -> PureState:
    _check_qubits(n)
    amplitudes = np.zeros(2**n, dtype=complex)
    amplitudes[0] = amplitudes[-1] = 1.0 / sqrt(2)
    return PureState((2,) * n, amplitudes)


def schmidt_state(schmidt: SchmidtVector) -> PureState:
    d = schmidt.d
    amplitudes = np.zeros(d * d, dtype=complex)
    for a, coefficient in enumerate(schmidt.coefficients):
        amplitudes[a * d + a] = coefficient
    return PureState((d, d), amplitudes)


def two_qubit_state(theta: float) -> PureState:
    """cos(theta)|00> + sin(theta)|11>."""
    amplitudes = np.array([cos(theta), 0.0, 0.0, sin(theta)], dtype=complex)
    return PureState.normalized((2, 2), amplitudes)


def dicke(n: int, k: int) -> PureState:
    """Uniform superposition of all n-qubit strings with k ones."""
    _check_qubits(n)
    if k < 0 or k > n:
        raise ValueError(f"Excitation count {k} out of range 0..{n}")
    amplitudes = np.zeros(2**n, dtype=complex)
    weight = 1.0 / sqrt(comb(n, k))
    for ones in combinations(range(n), k):
        bits = [1 if q in ones else 0 for q in range(n)]
        amplitudes[_qubit_index(bits)] = weight
    return PureState((2,) * n, amplitudes)


def w_state(n: int) -> PureState:
    return dicke(n, 1)


def permute_qubits(state: PureState, order) -> PureState:
    """Reorder qubit factors: new factor i is old factor order[i]."""
    tensor = state.amplitudes.reshape(state.dims)
    return PureState(
        tuple(state.dims[i] for i in order),
        np.transpose(tensor, axes=list(order)).reshape(-1),
    )


def parse_state_spec(text: str) -> PureState:
    """Build a state from the CLI grammar.

    Accepted forms: "bell", "mes:d", "ghz:n", "w:n", "dicke:n:k",
    "schmidt:l1,l2,...", "graph:FILE", "twoqubit:theta".

    Raises:
        ValueError: For unknown names or malformed parameters
    """
    name, _, rest = text.strip().partition(":")
    name = name.lower()
    try:
        if name == "bell" and not rest:
            return bell_state()
        if name == "mes":
            return mes_qudit(int(rest))
        if name == "ghz":
            return ghz(int(rest))
        if name == "w":
            return w_state(int(rest))
        if name == "dicke":
            n, k = rest.split(":")
            return dicke(int(n), int(k))
        if name == "schmidt":
            values = [float(v) for v in rest.split(",")]
            return schmidt_state(SchmidtVector.from_values(values))
        if name == "twoqubit":
            return two_qubit_state(float(rest))
        if name == "graph":
            from qsv_toolkit.graphs import Graph, graph_state

            return graph_state(Graph.from_file(Path(rest)))
    except SchemaError:
        raise
    except ValueError as e:
        raise ValueError(f"Invalid state spec '{text}': {e}") from e
    raise ValueError(
        f"Unknown state spec '{text}' (expected bell, mes:d, ghz:n, w:n, "
        f"dicke:n:k, schmidt:l1,l2,..., graph:FILE or twoqubit:theta)"
    )
