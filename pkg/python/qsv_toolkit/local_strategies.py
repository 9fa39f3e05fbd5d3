"""Strategies built from nonadaptive local Pauli-type measurements."""

import itertools
from math import cos, sin, sqrt

import numpy as np

from qsv_toolkit.graphs import (
    Coloring,
    Graph,
    PauliString,
    generators,
    graph_state,
    pauli_projector,
    stabilizer_group,
)
from qsv_toolkit.locc_strategies import (
    check_theta,
    is_maximally_entangled_angle,
    one_way_qudit,
)
from qsv_toolkit.qmath import PAULI_X, PAULI_Y, PAULI_Z, Operator, check_dims
from qsv_toolkit.states import SchmidtVector, bell_state, ghz, two_qubit_state
from qsv_toolkit.strategy import Strategy, WeightedTest, local_test


def _eigenbasis_povm(pauli: np.ndarray) -> list[Operator]:
    """Projectors onto the +1 and -1 eigenvectors of a single-qubit Pauli."""
    return [Operator((2,), (np.eye(2) + sign * pauli) / 2) for sign in (1, -1)]


def bell_strategy() -> Strategy:
    """XX, YY and ZZ measurements at probability 1/3 each; gap 2/3."""
    target = bell_state()
    tests = []
    for name, pauli in (("XX", PAULI_X), ("YY", PAULI_Y), ("ZZ", PAULI_Z)):
        povm = _eigenbasis_povm(pauli)
        effect, branches = local_test(povm, povm, target)
        tests.append(WeightedTest(1 / 3, effect, name=name, branches=branches))
    return Strategy(target, tests, "bell", predicted_gap=2 / 3)


def mes_strategy(d: int) -> Strategy:
    """Maximally entangled qudit strategy with Omega = (1 + d|psi><psi|)/(d + 1).

    The computational test plus phase-shifted Fourier tests reproduce the
    Haar-averaged strategy exactly.
    """
    if d < 2:
        raise ValueError(f"Local dimension must be at least 2, got {d}")
    s = one_way_qudit(SchmidtVector.uniform(d))
    return Strategy(s.target, s.tests, "mes", predicted_gap=d / (d + 1), metadata={"d": d})


def _z_parity_projector(n: int) -> Operator:
    """P_{Z^n} = |0...0><0...0| + |1...1><1...1|."""
    check_dims([2] * n)
    matrix = np.zeros((2**n, 2**n), dtype=complex)
    matrix[0, 0] = matrix[-1, -1] = 1.0
    return Operator((2,) * n, matrix)


def ghz_two_setting(n: int) -> Strategy:
    """Z^n and X^n settings, probability 1/2 each; gap 1/2."""
    target = ghz(n)
    tests = [
        WeightedTest(0.5, _z_parity_projector(n), name="Z" * n),
        WeightedTest(0.5, pauli_projector(PauliString("X" * n)), name="X" * n),
    ]
    return Strategy(target, tests, "ghz-two-setting", predicted_gap=0.5, metadata={"n": n})


def xy_stabilizers(n: int) -> list[PauliString]:
    """(-1)^k Y on 2k positions and X elsewhere, for every even subset."""
    result = []
    for size in range(0, n + 1, 2):
        for positions in itertools.combinations(range(n), size):
            letters = ["Y" if q in positions else "X" for q in range(n)]
            result.append(PauliString("".join(letters), 2 * (size // 2)))
    return result


def ghz_optimal(n: int) -> Strategy:
    """Z test at 1/3 plus the 2^(n-1) XY stabilizer tests; gap 2/3."""
    target = ghz(n)
    elements = xy_stabilizers(n)
    weight = (2 / 3) / len(elements)
    tests = [WeightedTest(1 / 3, _z_parity_projector(n), name="Z" * n)]
    for g in elements:
        tests.append(
            WeightedTest(weight, name=str(g), builder=lambda g=g: pauli_projector(g))
        )
    return Strategy(target, tests, "ghz-optimal", predicted_gap=2 / 3, metadata={"n": n})


def stabilizer_strategy(g: Graph) -> Strategy:
    """Every non-identity stabilizer element at equal probability."""
    group = stabilizer_group(generators(g))[1:]
    weight = 1 / len(group)
    tests = [
        WeightedTest(weight, name=str(element), builder=lambda e=element: pauli_projector(e))
        for element in group
    ]
    n = g.n
    return Strategy(
        graph_state(g),
        tests,
        "stabilizer",
        predicted_gap=2 ** (n - 1) / (2**n - 1),
        metadata={"graph": g.to_text()},
    )


def _class_projector(gens: list[PauliString], vertices: list[int]) -> Operator:
    """prod over the class of (1 + g_i)/2."""
    result = pauli_projector(gens[vertices[0] - 1])
    for v in vertices[1:]:
        result = result @ pauli_projector(gens[v - 1])
    return result


def coloring_strategy(g: Graph, c: Coloring) -> Strategy:
    """One setting per color class: X on the class, Z elsewhere; gap 1/m.

    Raises:
        ValueError: If the coloring is not proper for g
    """
    c.check_proper(g)
    gens = generators(g)
    classes = c.classes()
    tests = []
    for vertices in classes:
        setting = "".join("X" if v in vertices else "Z" for v in range(1, g.n + 1))
        tests.append(
            WeightedTest(
                1 / len(classes),
                name=setting,
                builder=lambda vs=vertices: _class_projector(gens, vs),
            )
        )
    return Strategy(
        graph_state(g),
        tests,
        "coloring",
        predicted_gap=1 / len(classes),
        metadata={"graph": g.to_text(), "coloring": list(c.colors)},
    )


def local_alpha(theta: float) -> float:
    """Weight of the ZZ test in the optimal nonadaptive two-qubit strategy."""
    s2 = sin(2 * theta)
    return (2 - s2) / (4 + s2)


def _trine_pair(theta: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Product state |u_k>|v_k> orthogonal to cos(theta)|00> + sin(theta)|11>."""
    s, c = sin(theta), cos(theta)
    a, b = sqrt(s / (s + c)), sqrt(c / (s + c))
    phase = np.exp(2j * np.pi * k / 3)
    u = np.array([a, b * phase], dtype=complex)
    v = np.array([a, -b * phase.conjugate()], dtype=complex)
    return u, v


def two_qubit_local_optimal(theta: float) -> Strategy:
    """ZZ test plus three trine tests 1 - |u_k v_k><u_k v_k|.

    theta = pi/4 returns the Bell strategy.
    """
    if is_maximally_entangled_angle(theta):
        return bell_strategy()
    check_theta(theta, allow_zero=False, allow_quarter=False)
    target = two_qubit_state(theta)
    alpha = local_alpha(theta)
    zz = _eigenbasis_povm(PAULI_Z)
    effect, branches = local_test(zz, zz, target)
    tests = [WeightedTest(alpha, effect, name="ZZ", branches=branches)]
    identity = np.eye(2, dtype=complex)
    for k in range(3):
        u, v = _trine_pair(theta, k)
        u_perp = np.array([-u[1].conjugate(), u[0].conjugate()])
        vv = np.outer(v, v.conj())
        effect = Operator((2, 2), np.eye(4) - np.outer(np.kron(u, v), np.kron(u, v).conj()))
        trine_branches = [
            (Operator((2,), np.outer(u, u.conj())), Operator((2,), identity - vv)),
            (Operator((2,), np.outer(u_perp, u_perp.conj())), Operator((2,), identity)),
        ]
        tests.append(
            WeightedTest((1 - alpha) / 3, effect, name=f"trine{k}", branches=trine_branches)
        )
    s, c = sin(theta), cos(theta)
    return Strategy(
        target,
        tests,
        "local-qubit",
        predicted_gap=1 / (2 + s * c),
        metadata={"theta": theta},
    )
