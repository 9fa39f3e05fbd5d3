"""Dense complex linear algebra over small tensor-product spaces.

Everything in the toolkit is expressed in terms of two value types:

- Operator: a square complex matrix together with the dimensions of the
  tensor factors it acts on (e.g. (2, 2) for a two-qubit operator).
- PureState: a normalized amplitude vector with the same dims signature.

Operators are limited to MAX_DIMENSION rows (12 qubits). All functions here
are pure and safe to call from several threads.
"""

from dataclasses import dataclass
from math import prod
from typing import Iterable, NamedTuple

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

from qsv_toolkit.errors import DimensionCapError, InvalidOperatorError

MAX_DIMENSION = 4096

# Tolerance on caller-supplied inputs (normalization, Hermiticity flag).
INPUT_TOL = 1e-12
# Tolerance on quantities derived by computation.
DERIVED_TOL = 1e-9

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def check_dims(dims: Iterable[int]) -> tuple[int, ...]:
    """Validate a dims signature and return it as a tuple.

    Raises:
        ValueError: If any factor dimension is not a positive integer
        DimensionCapError: If the total dimension exceeds MAX_DIMENSION
    """
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"Factor dimensions must be positive: {dims}")
    total = prod(dims)
    if total > MAX_DIMENSION:
        raise DimensionCapError(
            f"Dimension {total} exceeds the dense cap of {MAX_DIMENSION}"
        )
    return dims


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense operator on a tensor-product space.

    Attributes:
        dims: Tensor factor dimensions; the matrix side is their product
        matrix: Complex matrix of shape (D, D)
        hermitian: When set, the matrix is checked to be Hermitian to 1e-12
    """

    dims: tuple[int, ...]
    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        dims = check_dims(self.dims)
        matrix = np.asarray(self.matrix, dtype=complex)
        side = prod(dims)
        if matrix.shape != (side, side):
            raise ValueError(
                f"Matrix shape {matrix.shape} does not match dims {dims} "
                f"(expected {side}x{side})"
            )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", matrix)
        if self.hermitian:
            asymmetry = _max_asymmetry(matrix)
            if asymmetry > INPUT_TOL:
                raise ValueError(
                    f"Operator flagged Hermitian has asymmetry {asymmetry:.3e}"
                )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @staticmethod
    def identity(dims: Iterable[int]) -> "Operator":
        dims = check_dims(dims)
        return Operator(dims, np.eye(prod(dims), dtype=complex), hermitian=True)

    @staticmethod
    def zeros(dims: Iterable[int]) -> "Operator":
        dims = check_dims(dims)
        side = prod(dims)
        return Operator(dims, np.zeros((side, side), dtype=complex), hermitian=True)

    @staticmethod
    def from_vector(vector: np.ndarray, dims: Iterable[int]) -> "Operator":
        """Build |v><v| for an (unnormalized) vector."""
        vector = np.asarray(vector, dtype=complex)
        return Operator(tuple(dims), np.outer(vector, vector.conj()))

    def dagger(self) -> "Operator":
        return Operator(self.dims, self.matrix.conj().T)

    def transpose(self) -> "Operator":
        return Operator(self.dims, self.matrix.T)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self, tol: float = DERIVED_TOL) -> bool:
        return _max_asymmetry(self.matrix) <= tol

    def expectation(self, state: "PureState") -> float:
        """Real part of <psi|A|psi>."""
        self._check_compatible(state.dims)
        vec = state.amplitudes
        return float(np.real(np.vdot(vec, self.matrix @ vec)))

    def apply(self, state: "PureState") -> np.ndarray:
        """Return A|psi> as a raw amplitude vector."""
        self._check_compatible(state.dims)
        return self.matrix @ state.amplitudes

    def allclose(self, other: "Operator", atol: float = DERIVED_TOL) -> bool:
        return self.dims == other.dims and bool(
            np.allclose(self.matrix, other.matrix, rtol=0.0, atol=atol)
        )

    def _check_compatible(self, dims: tuple[int, ...]) -> None:
        if tuple(dims) != self.dims:
            raise ValueError(f"Dimension mismatch: {self.dims} vs {tuple(dims)}")

    def __add__(self, other: "Operator") -> "Operator":
        self._check_compatible(other.dims)
        return Operator(self.dims, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_compatible(other.dims)
        return Operator(self.dims, self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.dims, self.matrix * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_compatible(other.dims)
        return Operator(self.dims, self.matrix @ other.matrix)

    def __repr__(self) -> str:
        return f"Operator(dims={self.dims}, hermitian={self.hermitian})"


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector on a tensor-product space."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = check_dims(self.dims)
        amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape[0] != prod(dims):
            raise ValueError(
                f"State has {amplitudes.shape[0]} amplitudes, dims {dims} "
                f"require {prod(dims)}"
            )
        norm_sq = float(np.real(np.vdot(amplitudes, amplitudes)))
        if abs(norm_sq - 1.0) > INPUT_TOL:
            raise ValueError(f"State is not normalized (squared norm {norm_sq!r})")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amplitudes)

    @staticmethod
    def normalized(dims: Iterable[int], amplitudes: np.ndarray) -> "PureState":
        """Normalize raw amplitudes and build a state.

        Raises:
            ValueError: If the vector is zero
        """
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amplitudes)
        if norm < INPUT_TOL:
            raise ValueError("Cannot normalize the zero vector")
        return PureState(tuple(dims), amplitudes / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> Operator:
        return Operator(
            self.dims, np.outer(self.amplitudes, self.amplitudes.conj()), hermitian=True
        )

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "PureState") -> float:
        """|<self|other>|^2."""
        if self.dims != other.dims:
            raise ValueError(f"Dimension mismatch: {self.dims} vs {other.dims}")
        return abs(self.overlap(other)) ** 2

    def __repr__(self) -> str:
        return f"PureState(dims={self.dims})"


class Spectrum(NamedTuple):
    """Eigen-decomposition of a Hermitian operator.

    Attributes:
        values: Real eigenvalues, descending
        vectors: Matching eigenvectors as columns
    """

    values: np.ndarray
    vectors: np.ndarray


def _max_asymmetry(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def _require_hermitian(a: Operator, tol: float) -> np.ndarray:
    asymmetry = _max_asymmetry(a.matrix)
    if asymmetry > tol:
        raise ValueError(f"Operator is not Hermitian (asymmetry {asymmetry:.3e})")
    return (a.matrix + a.matrix.conj().T) / 2


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first non-negligible entry is real positive."""
    fixed = vectors.copy()
    for col in range(fixed.shape[1]):
        column = fixed[:, col]
        nonzero = np.flatnonzero(np.abs(column) > INPUT_TOL)
        if nonzero.size:
            pivot = column[nonzero[0]]
            fixed[:, col] = column * (abs(pivot) / pivot)
    return fixed


def kron(a: Operator, b: Operator) -> Operator:
    """Tensor product; dims are concatenated."""
    return Operator(a.dims + b.dims, np.kron(a.matrix, b.matrix))


def kron_all(operators: Iterable[Operator]) -> Operator:
    operators = list(operators)
    if not operators:
        raise ValueError("kron_all needs at least one operator")
    result = operators[0]
    for op in operators[1:]:
        result = kron(result, op)
    return result


def kron_states(a: PureState, b: PureState) -> PureState:
    return PureState(a.dims + b.dims, np.kron(a.amplitudes, b.amplitudes))


def hermitian_spectrum(a: Operator, tol: float = DERIVED_TOL) -> Spectrum:
    """Eigenvalues in descending order with phase-normalized eigenvectors.

    Raises:
        ValueError: If the operator is not Hermitian within tol
    """
    matrix = _require_hermitian(a, tol)
    values, vectors = linalg.eigh(matrix)
    order = np.arange(values.shape[0])[::-1]
    return Spectrum(values[order], _fix_phases(vectors[:, order]))


def eigenvalues(a: Operator, tol: float = DERIVED_TOL) -> np.ndarray:
    """Eigenvalues only, descending."""
    matrix = _require_hermitian(a, tol)
    return linalg.eigvalsh(matrix)[::-1]


def min_eigenvalue(a: Operator, tol: float = DERIVED_TOL) -> float:
    return float(eigenvalues(a, tol)[-1])


def spectral_gap(omega: Operator, target: PureState) -> float:
    """Return nu = 1 - lambda_2 for a verification operator.

    Raises:
        InvalidOperatorError: If omega is not Hermitian, does not accept the
            target with certainty, or has an eigenvalue above one
    """
    if omega.dims != target.dims:
        raise InvalidOperatorError(
            f"Operator dims {omega.dims} do not match target dims {target.dims}"
        )
    if omega.dim < 2:
        raise InvalidOperatorError("Spectral gap needs dimension at least 2")
    if not omega.is_hermitian():
        raise InvalidOperatorError("Verification operator is not Hermitian")
    acceptance = omega.expectation(target)
    if abs(acceptance - 1.0) > DERIVED_TOL:
        raise InvalidOperatorError(
            f"Target passes with probability {acceptance!r}, expected 1"
        )
    values = eigenvalues(omega)
    if abs(values[0] - 1.0) > DERIVED_TOL:
        raise InvalidOperatorError(
            f"Largest eigenvalue is {values[0]!r}, expected 1"
        )
    return float(min(1.0, max(0.0, 1.0 - values[1])))


def partial_trace(a: Operator, keep: Iterable[int]) -> Operator:
    """Trace out every factor not listed in keep.

    Kept factors appear in ascending index order.

    Raises:
        ValueError: If keep names a factor that does not exist
    """
    n = len(a.dims)
    keep = sorted(set(keep))
    if any(i < 0 or i >= n for i in keep):
        raise ValueError(f"Invalid factor indices {keep} for {n} factors")
    tensor = a.matrix.reshape(a.dims + a.dims)
    traced = [i for i in range(n) if i not in keep]
    # Remove higher axes first so lower indices stay valid.
    for count, axis in enumerate(sorted(traced, reverse=True)):
        remaining = n - count
        tensor = np.trace(tensor, axis1=axis, axis2=axis + remaining)
    kept_dims = tuple(a.dims[i] for i in keep)
    side = prod(kept_dims)
    return Operator(kept_dims, tensor.reshape(side, side))


def partial_transpose(a: Operator, factor: int | Iterable[int]) -> Operator:
    """Transpose the listed tensor factor(s) only.

    Raises:
        ValueError: If a factor index is out of range
    """
    n = len(a.dims)
    factors = [factor] if isinstance(factor, (int, np.integer)) else list(factor)
    tensor = a.matrix.reshape(a.dims + a.dims)
    for f in factors:
        if f < 0 or f >= n:
            raise ValueError(f"Invalid factor index {f} for {n} factors")
        tensor = np.swapaxes(tensor, f, f + n)
    return Operator(a.dims, tensor.reshape(a.dim, a.dim))


def swap_operator(d: int) -> Operator:
    """SWAP on C^d (x) C^d: V|ab> = |ba>."""
    if d < 1:
        raise ValueError(f"Dimension must be positive: {d}")
    matrix = np.zeros((d * d, d * d), dtype=complex)
    for alpha in range(d):
        for beta in range(d):
            matrix[beta * d + alpha, alpha * d + beta] = 1.0
    return Operator((d, d), matrix, hermitian=True)


def conjugate(a: Operator, u: Operator) -> Operator:
    """U A U^dagger."""
    return Operator(a.dims, u.matrix @ a.matrix @ u.matrix.conj().T)


def basis_ket(dims: Iterable[int], index: int) -> PureState:
    dims = check_dims(dims)
    amplitudes = np.zeros(prod(dims), dtype=complex)
    amplitudes[index] = 1.0
    return PureState(dims, amplitudes)


def is_unitary(u: Operator, tol: float = DERIVED_TOL) -> bool:
    product = u.matrix @ u.matrix.conj().T
    return bool(np.allclose(product, np.eye(u.dim), rtol=0.0, atol=tol))


def random_unitary(d: int, rng: np.random.Generator) -> Operator:
    """Haar-random d x d unitary."""
    if d == 1:
        phase = np.exp(2j * np.pi * rng.random())
        return Operator((1,), np.array([[phase]]))
    return Operator((d,), unitary_group.rvs(d, random_state=rng))


def random_ket(dims: Iterable[int], rng: np.random.Generator) -> PureState:
    """Haar-random pure state from a normalized complex Gaussian vector."""
    dims = check_dims(dims)
    side = prod(dims)
    raw = rng.standard_normal(side) + 1j * rng.standard_normal(side)
    return PureState.normalized(dims, raw)
