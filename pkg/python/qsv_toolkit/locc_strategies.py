"""Strategies built from adaptive local measurements.

Adaptive protocols are stored at operator level: each test keeps its dense
effect, and one-way tests additionally keep their (Alice, Bob) branches.
Two-qubit builders act on cos(theta)|00> + sin(theta)|11>.
"""

import itertools
from math import cos, isclose, pi, sin, sqrt, tan
from typing import Sequence

import numpy as np

from qsv_toolkit.qmath import Operator, PureState, kron, swap_operator
from qsv_toolkit.states import (
    SchmidtVector,
    dicke,
    schmidt_state,
    two_qubit_state,
    w_state,
)
from qsv_toolkit.strategy import Branch, Strategy, WeightedTest, bob_semi_optimal

QUARTER_PI = pi / 4
# Inputs this close to pi/4 are treated as the maximally entangled endpoint.
ENDPOINT_TOL = 1e-12

# Single-qubit phase gate diag(1, i); its powers generate the qubit phase group.
_PHASE = np.diag([1.0, 1.0j])
_I_POWERS = np.array([1, 1j, -1, -1j], dtype=complex)

# Pair matrices in the |q_i q_j> basis used by the W/Dicke pair tests.
PAIR_00 = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
PAIR_11 = np.diag([0.0, 0.0, 0.0, 1.0]).astype(complex)
PAIR_IDENTITY = np.eye(4, dtype=complex)
PAIR_XX_PLUS = 0.5 * (
    PAIR_IDENTITY + np.kron(np.array([[0, 1], [1, 0]]), np.array([[0, 1], [1, 0]]))
).astype(complex)


def is_maximally_entangled_angle(theta: float) -> bool:
    return isclose(theta, QUARTER_PI, rel_tol=0.0, abs_tol=ENDPOINT_TOL)


def check_theta(theta: float, *, allow_zero: bool, allow_quarter: bool) -> None:
    """Validate a two-qubit angle against the builder's domain.

    Raises:
        ValueError: If theta lies outside the accepted interval
    """
    low_ok = theta >= 0 if allow_zero else theta > 0
    high_ok = (theta <= QUARTER_PI + ENDPOINT_TOL) if allow_quarter else theta < QUARTER_PI
    if not (low_ok and high_ok):
        low = "[0" if allow_zero else "(0"
        high = "pi/4]" if allow_quarter else "pi/4)"
        raise ValueError(f"theta={theta!r} outside the domain {low}, {high}")


def projector_onto(vector: np.ndarray) -> Operator:
    vector = np.asarray(vector, dtype=complex)
    vector = vector / np.linalg.norm(vector)
    return Operator.from_vector(vector, (vector.shape[0],))


def effect_from_branches(branches: Sequence[Branch]) -> Operator:
    """Omega_l = sum_a M_a (x) N_a."""
    total = kron(*branches[0])
    for m, n in branches[1:]:
        total = total + kron(m, n)
    return total


def one_way_branches(alice_vectors: Sequence[np.ndarray], target: PureState) -> list[Branch]:
    """Alice measures the given orthonormal basis; Bob verifies his collapsed state."""
    branches = []
    for vector in alice_vectors:
        m = projector_onto(vector)
        branches.append((m, bob_semi_optimal(m, target)))
    return branches


def one_way_test(
    probability: float, alice_vectors: Sequence[np.ndarray], target: PureState, name: str
) -> WeightedTest:
    branches = one_way_branches(alice_vectors, target)
    return WeightedTest(
        probability,
        name=name,
        builder=lambda: effect_from_branches(branches),
        branches=branches,
    )


def swapped_test(test: WeightedTest, d: int, name: str) -> WeightedTest:
    """The same test with the roles of the two parties exchanged (V Omega V)."""
    v = swap_operator(d).matrix

    def build() -> Operator:
        effect = test.effect
        return Operator(effect.dims, v @ effect.matrix @ v)

    return WeightedTest(test.probability, name=name, builder=build)


def computational_test(probability: float, d: int) -> WeightedTest:
    """P_ZZ = sum_a |aa><aa| with branch (|a><a|, |a><a|) per outcome."""
    branches = []
    for a in range(d):
        basis = np.zeros(d, dtype=complex)
        basis[a] = 1.0
        proj = Operator.from_vector(basis, (d,))
        branches.append((proj, proj))
    return WeightedTest(
        probability, effect_from_branches(branches), name="ZZ", branches=branches
    )


def _fourier_basis(d: int) -> list[np.ndarray]:
    zeta = np.exp(2j * pi / d)
    betas = np.arange(d)
    return [zeta ** (k * betas) / sqrt(d) for k in range(d)]


def _phase_tests(schmidt: SchmidtVector, target: PureState, weight: float) -> list[WeightedTest]:
    """Fourier tests conjugated by every diag(1, i^a1, ..., i^a(d-1))."""
    d = schmidt.d
    fourier = _fourier_basis(d)
    shifts = list(itertools.product(range(4), repeat=d - 1))
    probability = weight / len(shifts)
    tests = []
    for shift in shifts:
        phases = _I_POWERS[list((0,) + shift)]
        vectors = [phases * f for f in fourier]
        label = "".join(str(s) for s in shift)
        tests.append(one_way_test(probability, vectors, target, f"F[{label}]"))
    return tests


def one_way_qudit(schmidt: SchmidtVector) -> Strategy:
    """One-way strategy for sum_a lambda_a |aa> with gap 1/(1 + lambda_1^2)."""
    target = schmidt_state(schmidt)
    top = schmidt.squares[0]
    omega = top / (1 + top)
    tests = [computational_test(omega, schmidt.d)]
    tests += _phase_tests(schmidt, target, 1 - omega)
    return Strategy(
        target,
        tests,
        "oneway-qudit",
        predicted_gap=1 / (1 + top),
        metadata={"schmidt": list(schmidt.coefficients)},
    )


def two_way_qudit(schmidt: SchmidtVector) -> Strategy:
    """Average of the one-way strategy and its party swap.

    Uses omega = l^2/(1 + l^2) with l^2 the mean of the two largest squared
    Schmidt coefficients; the achieved gap is 1/(1 + l^2).
    """
    target = schmidt_state(schmidt)
    mean_top = (schmidt.squares[0] + schmidt.squares[1]) / 2
    omega = mean_top / (1 + mean_top)
    forward = _phase_tests(schmidt, target, (1 - omega) / 2)
    backward = [swapped_test(t, schmidt.d, t.name + "<") for t in forward]
    return Strategy(
        target,
        [computational_test(omega, schmidt.d)] + forward + backward,
        "twoway-qudit",
        predicted_gap=1 / (1 + mean_top),
        metadata={"schmidt": list(schmidt.coefficients)},
    )


def _qubit_vectors(powers: Sequence[int]) -> list[np.ndarray]:
    plus = np.array([1.0, 1.0], dtype=complex) / sqrt(2)
    return [np.linalg.matrix_power(_PHASE, k) @ plus for k in powers]


def _one_way_qubit_tests(target: PureState, weight: float) -> list[WeightedTest]:
    return [
        one_way_test(weight, _qubit_vectors((0, 2)), target, "X>"),
        one_way_test(weight, _qubit_vectors((1, 3)), target, "Y>"),
    ]


def one_way_qubit(theta: float) -> Strategy:
    """Semi-optimal one-way strategy with gap 1/(1 + cos^2 theta).

    theta = 0 is accepted: the target is the product state |00> and the same
    tests still verify it, with gap 1/2. Sweeps start their grids there.
    """
    check_theta(theta, allow_zero=True, allow_quarter=True)
    target = two_qubit_state(theta)
    c2 = cos(theta) ** 2
    tests = [computational_test(c2 / (1 + c2), 2)]
    tests += _one_way_qubit_tests(target, 0.5 / (1 + c2))
    return Strategy(
        target,
        tests,
        "oneway-qubit",
        predicted_gap=1 / (1 + c2),
        metadata={"theta": theta},
    )


def two_way_qubit(theta: float) -> Strategy:
    """One-round two-way strategy with gap 2/3 for every theta.

    Like one_way_qubit(), extends to the product state at theta = 0.
    """
    check_theta(theta, allow_zero=True, allow_quarter=True)
    target = two_qubit_state(theta)
    forward = _one_way_qubit_tests(target, 1 / 6)
    backward = [swapped_test(t, 2, t.name.replace(">", "<")) for t in forward]
    return Strategy(
        target,
        [computational_test(1 / 3, 2)] + forward + backward,
        "twoway-qubit",
        predicted_gap=2 / 3,
        metadata={"theta": theta},
    )


def _many_round_effect(theta: float, bob_basis: Sequence[np.ndarray]) -> Operator:
    """Bob filters with M_0/M_1, then Alice verifies Bob's announced basis outcome.

    M_0 = diag(1 - tan theta, 0) on Alice accepts only |00>; after M_1 the
    pair is verified through Bob's basis b and Alice's projector onto
    sqrt(M_1)|v_b>.
    """
    t = tan(theta)
    eta = 1 - t
    sqrt_m1 = np.diag([sqrt(t), 1.0]).astype(complex)
    psi = np.diag([cos(theta), sin(theta)]).astype(complex)
    zero = np.diag([1.0, 0.0]).astype(complex)
    matrix = np.kron(np.diag([eta, 0.0]), zero)
    for b in bob_basis:
        u = sqrt_m1 @ (psi @ b.conj())
        v = u / np.linalg.norm(u)
        w = sqrt_m1 @ v
        matrix = matrix + np.kron(np.outer(w, w.conj()), np.outer(b, b.conj()))
    return Operator((2, 2), matrix)


def many_round_qubit(theta: float) -> Strategy:
    """Many-round strategy with gap 1/(1 + sin theta cos theta).

    theta = pi/4 returns the Bell strategy.
    """
    if is_maximally_entangled_angle(theta):
        from qsv_toolkit.local_strategies import bell_strategy

        return bell_strategy()
    check_theta(theta, allow_zero=False, allow_quarter=False)
    target = two_qubit_state(theta)
    s, c = sin(theta), cos(theta)
    p = s * s / (1 + s * c)
    x_basis = [np.array([1, 1], dtype=complex) / sqrt(2), np.array([1, -1], dtype=complex) / sqrt(2)]
    y_basis = [np.array([1, 1j], dtype=complex) / sqrt(2), np.array([1, -1j], dtype=complex) / sqrt(2)]
    x_test = WeightedTest((1 - p) / 4, _many_round_effect(theta, x_basis), name="X<>")
    y_test = WeightedTest((1 - p) / 4, _many_round_effect(theta, y_basis), name="Y<>")
    tests = [
        computational_test(p, 2),
        x_test,
        swapped_test(x_test, 2, "X<>'"),
        y_test,
        swapped_test(y_test, 2, "Y<>'"),
    ]
    return Strategy(
        target,
        tests,
        "manyround-qubit",
        predicted_gap=1 / (1 + s * c),
        metadata={"theta": theta},
    )


def pair_conditional_effect(
    n: int, i: int, j: int, rules: dict[int, np.ndarray]
) -> Operator:
    """Z on every qubit except i < j, then a pair test chosen by the Z weight.

    rules maps the number of ones seen on the other n-2 qubits to a 4x4
    effect on qubits (i, j); weights without a rule reject.
    """
    others = [q for q in range(n) if q not in (i, j)]
    side = 2**n
    matrix = np.zeros((side, side), dtype=complex)
    pair_offsets = [
        (bi << (n - 1 - i)) | (bj << (n - 1 - j)) for bi in (0, 1) for bj in (0, 1)
    ]
    for bits in itertools.product((0, 1), repeat=len(others)):
        rule = rules.get(sum(bits))
        if rule is None:
            continue
        base = 0
        for q, bit in zip(others, bits):
            base |= bit << (n - 1 - q)
        indices = [base | offset for offset in pair_offsets]
        matrix[np.ix_(indices, indices)] = rule
    return Operator((2,) * n, matrix)


def _check_w_size(n: int) -> None:
    if not 3 <= n <= 12:
        raise ValueError(f"W and Dicke strategies need 3 <= n <= 12, got {n}")


def _pair_tests(n: int, probability: float, rules: dict[int, np.ndarray]) -> list[WeightedTest]:
    tests = []
    for i, j in itertools.combinations(range(n), 2):
        tests.append(
            WeightedTest(
                probability,
                name=f"pair({i + 1},{j + 1})",
                builder=lambda i=i, j=j: pair_conditional_effect(n, i, j, rules),
            )
        )
    return tests


def w_locc_gap(n: int) -> float:
    return 1 / 3 if n == 3 else 1 / (n - 1)


def w_locc(n: int) -> Strategy:
    """Pair tests: Z on n-2 qubits, then |00> or (XX)^+ on the remaining pair."""
    _check_w_size(n)
    pairs = n * (n - 1) // 2
    rules = {1: PAIR_00, 0: PAIR_XX_PLUS}
    return Strategy(
        w_state(n),
        _pair_tests(n, 1 / pairs, rules),
        "w-locc",
        predicted_gap=w_locc_gap(n),
        metadata={"n": n},
    )


def dicke_locc(n: int, k: int) -> Strategy:
    """W pair tests generalized to k excitations.

    Seeing k ones elsewhere verifies |00> on the pair, k-2 verifies |11> and
    k-1 applies the (XX)^+ test.
    """
    _check_w_size(n)
    if not 1 <= k <= n - 1:
        raise ValueError(f"Dicke excitation count must be in 1..{n - 1}, got {k}")
    pairs = n * (n - 1) // 2
    rules = {k: PAIR_00, k - 1: PAIR_XX_PLUS}
    if k >= 2:
        rules[k - 2] = PAIR_11
    return Strategy(
        dicke(n, k),
        _pair_tests(n, 1 / pairs, rules),
        "dicke-locc",
        predicted_gap=w_locc_gap(n),
        metadata={"n": n, "k": k},
    )


def w_local(n: int) -> Strategy:
    """Nonadaptive W strategy: a Z weight-one test plus pair X tests."""
    _check_w_size(n)
    weights = np.array([bin(x).count("1") for x in range(2**n)])
    z_test = WeightedTest(
        0.5,
        name="Z" * n,
        builder=lambda: Operator((2,) * n, np.diag((weights == 1).astype(complex))),
    )
    rules = {1: PAIR_IDENTITY, 0: PAIR_XX_PLUS}
    return Strategy(
        w_state(n),
        [z_test] + _pair_tests(n, 1 / (n * (n - 1)), rules),
        "w-local",
        predicted_gap=0.25 if n == 3 else 1 / (2 * (n - 1)),
        metadata={"n": n},
    )

