"""Graph states, Pauli-string algebra, stabilizer groups and colorings.

Pauli phases are tracked exactly as an integer exponent k of i (phase i^k,
k mod 4). Qubit q (0-based) is bit n-1-q of a computational basis index.

Graph files are plain text: the first line holds the vertex count n, each
following line one edge "i j" with 1-based vertices. Coloring files hold one
"vertex color" pair per line. Blank lines and lines starting with '#' are
ignored in both.
"""

from dataclasses import dataclass
from pathlib import Path

import networkx as nx
import numpy as np

from qsv_toolkit.errors import NonCommutingError, SchemaError
from qsv_toolkit.qmath import Operator, PureState, check_dims

MAX_GROUP_GENERATORS = 20

_LETTERS = "IXYZ"

# (a, b) -> (phase exponent, letter) with a*b = i^exponent * letter
_PRODUCT = {
    ("X", "Y"): (1, "Z"),
    ("Y", "X"): (3, "Z"),
    ("Y", "Z"): (1, "X"),
    ("Z", "Y"): (3, "X"),
    ("Z", "X"): (1, "Y"),
    ("X", "Z"): (3, "Y"),
}

_PHASE_PREFIX = {0: "+", 1: "+i", 2: "-", 3: "-i"}


def _multiply_letters(a: str, b: str) -> tuple[int, str]:
    if a == "I":
        return 0, b
    if b == "I":
        return 0, a
    if a == b:
        return 0, "I"
    return _PRODUCT[(a, b)]


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis with phase i^phase."""

    letters: str
    phase: int = 0

    def __post_init__(self):
        letters = self.letters.upper()
        if not letters or any(c not in _LETTERS for c in letters):
            raise ValueError(f"Invalid Pauli letters: {self.letters!r}")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "phase", self.phase % 4)

    @staticmethod
    def identity(n: int) -> "PauliString":
        return PauliString("I" * n)

    @staticmethod
    def from_string(text: str) -> "PauliString":
        """Parse strings such as "XZZ", "-YY", "+iXZ" or "-iZ"."""
        text = text.strip()
        phase = 0
        for prefix, exponent in (("+i", 1), ("-i", 3), ("+", 0), ("-", 2)):
            if text.startswith(prefix) and len(text) > len(prefix):
                rest = text[len(prefix) :]
                # lowercase input: "-ix" is -IX, not -i X
                if prefix.endswith("i") and rest[0] not in _LETTERS:
                    continue
                phase, text = exponent, rest
                break
        return PauliString(text, phase)

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return sum(1 for c in self.letters if c != "I")

    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian strings."""
        if not self.is_hermitian():
            raise ValueError(f"Pauli string {self} has an imaginary phase")
        return 1 if self.phase == 0 else -1

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ValueError(f"Length mismatch: {self.n} vs {other.n}")
        phase = self.phase + other.phase
        letters = []
        for a, b in zip(self.letters, other.letters):
            exponent, letter = _multiply_letters(a, b)
            phase += exponent
            letters.append(letter)
        return PauliString("".join(letters), phase)

    def commutes(self, other: "PauliString") -> bool:
        clashes = sum(
            1
            for a, b in zip(self.letters, other.letters)
            if a != "I" and b != "I" and a != b
        )
        return clashes % 2 == 0

    def _masks(self) -> tuple[int, int, int]:
        x_mask = z_mask = 0
        y_count = 0
        for q, c in enumerate(self.letters):
            bit = 1 << (self.n - 1 - q)
            if c in "XY":
                x_mask |= bit
            if c in "ZY":
                z_mask |= bit
            if c == "Y":
                y_count += 1
        return x_mask, z_mask, y_count

    def _action(self) -> tuple[np.ndarray, np.ndarray]:
        """(targets, values) with P|x> = values[x] |targets[x]>."""
        check_dims([2] * self.n)
        x_mask, z_mask, y_count = self._masks()
        indices = np.arange(2**self.n)
        parity = np.zeros_like(indices)
        for shift in range(self.n):
            if (z_mask >> shift) & 1:
                parity ^= (indices >> shift) & 1
        values = (1j ** ((self.phase + y_count) % 4)) * (1 - 2 * parity)
        return indices ^ x_mask, values.astype(complex)

    def to_matrix(self) -> Operator:
        targets, values = self._action()
        side = targets.shape[0]
        matrix = np.zeros((side, side), dtype=complex)
        matrix[targets, np.arange(side)] = values
        return Operator((2,) * self.n, matrix)

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        targets, values = self._action()
        result = np.zeros_like(np.asarray(amplitudes, dtype=complex))
        result[targets] = values * amplitudes
        return result

    def __str__(self) -> str:
        prefix = _PHASE_PREFIX[self.phase]
        return ("" if prefix == "+" else prefix) + self.letters


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 1..n."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Graph needs at least one vertex, got n={self.n}")
        normalized = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"Self-loop at vertex {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"Edge ({i}, {j}) out of range 1..{self.n}")
            normalized.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @staticmethod
    def from_edges(n: int, edges) -> "Graph":
        """Build a graph, rejecting duplicate edges.

        Raises:
            ValueError: On duplicates, self-loops or out-of-range vertices
        """
        seen = set()
        for i, j in edges:
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"Duplicate edge ({i}, {j})")
            seen.add(key)
        return Graph(n, frozenset(seen))

    @staticmethod
    def empty(n: int) -> "Graph":
        return Graph(n, frozenset())

    @staticmethod
    def path(n: int) -> "Graph":
        return Graph.from_edges(n, [(i, i + 1) for i in range(1, n)])

    @staticmethod
    def cycle(n: int) -> "Graph":
        if n < 3:
            raise ValueError(f"Cycle needs at least 3 vertices, got {n}")
        return Graph.from_edges(n, [(i, i % n + 1) for i in range(1, n + 1)])

    @staticmethod
    def star(n: int) -> "Graph":
        return Graph.from_edges(n, [(1, i) for i in range(2, n + 1)])

    @staticmethod
    def complete(n: int) -> "Graph":
        return Graph.from_edges(
            n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        )

    @staticmethod
    def from_networkx(g: nx.Graph) -> "Graph":
        """Relabel nodes of a networkx graph to 1..n in sorted node order."""
        labels = {node: index + 1 for index, node in enumerate(sorted(g.nodes))}
        return Graph.from_edges(
            g.number_of_nodes(), [(labels[a], labels[b]) for a, b in g.edges]
        )

    @staticmethod
    def from_file(path: Path) -> "Graph":
        """Read the text graph format.

        Raises:
            FileNotFoundError: If the file does not exist
            SchemaError: If the contents are malformed
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Graph file not found: {path}")
        lines = _content_lines(path)
        if not lines:
            raise SchemaError("Graph file is empty", path)
        try:
            n = int(lines[0])
            edges = []
            for line in lines[1:]:
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"Expected 'i j', got '{line}'")
                edges.append((int(parts[0]), int(parts[1])))
            return Graph.from_edges(n, edges)
        except ValueError as e:
            raise SchemaError(str(e), path) from e

    def to_text(self) -> str:
        lines = [str(self.n)] + [f"{i} {j}" for i, j in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    def neighbors(self, v: int) -> list[int]:
        return sorted(
            [j for i, j in self.edges if i == v] + [i for i, j in self.edges if j == v]
        )

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    @property
    def max_degree(self) -> int:
        return max(self.degree(v) for v in range(1, self.n + 1))

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(1, self.n + 1))
        g.add_edges_from(self.edges)
        return g


@dataclass(frozen=True)
class Coloring:
    """Color assignment; colors[v-1] in 1..m is the color of vertex v."""

    colors: tuple[int, ...]

    def __post_init__(self):
        colors = tuple(int(c) for c in self.colors)
        if not colors:
            raise ValueError("Coloring must assign at least one vertex")
        if min(colors) < 1:
            raise ValueError(f"Colors must be positive: {colors}")
        object.__setattr__(self, "colors", colors)

    @property
    def m(self) -> int:
        return len(set(self.colors))

    def classes(self) -> list[list[int]]:
        """Vertex lists per color, ordered by color label."""
        return [
            [v + 1 for v, c in enumerate(self.colors) if c == color]
            for color in sorted(set(self.colors))
        ]

    def is_proper(self, g: Graph) -> bool:
        if len(self.colors) != g.n:
            return False
        return all(self.colors[i - 1] != self.colors[j - 1] for i, j in g.edges)

    def check_proper(self, g: Graph) -> None:
        """Raises ValueError unless the coloring is proper for g."""
        if len(self.colors) != g.n:
            raise ValueError(
                f"Coloring covers {len(self.colors)} vertices, graph has {g.n}"
            )
        for i, j in sorted(g.edges):
            if self.colors[i - 1] == self.colors[j - 1]:
                raise ValueError(
                    f"Improper coloring: adjacent vertices {i} and {j} share "
                    f"color {self.colors[i - 1]}"
                )

    @staticmethod
    def from_file(path: Path) -> "Coloring":
        """Read "vertex color" pairs.

        Raises:
            FileNotFoundError: If the file does not exist
            SchemaError: If vertices are missing, repeated or malformed
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Coloring file not found: {path}")
        assignment: dict[int, int] = {}
        try:
            for line in _content_lines(path):
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"Expected 'vertex color', got '{line}'")
                vertex, color = int(parts[0]), int(parts[1])
                if vertex in assignment:
                    raise ValueError(f"Vertex {vertex} colored twice")
                assignment[vertex] = color
            if not assignment:
                raise ValueError("Coloring file is empty")
            n = max(assignment)
            missing = [v for v in range(1, n + 1) if v not in assignment]
            if missing:
                raise ValueError(f"Vertices without a color: {missing}")
            return Coloring(tuple(assignment[v] for v in range(1, n + 1)))
        except ValueError as e:
            raise SchemaError(str(e), path) from e

    def to_text(self) -> str:
        return "".join(f"{v + 1} {c}\n" for v, c in enumerate(self.colors))


def _content_lines(path: Path) -> list[str]:
    lines = []
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    return lines


def greedy_coloring(g: Graph) -> Coloring:
    """Proper coloring with at most max-degree + 1 colors.

    Uses networkx's DSATUR ordering, which is optimal on bipartite graphs.
    Colors are relabeled 1..m in order of first appearance over vertices 1..n.
    """
    raw = nx.coloring.greedy_color(g.to_networkx(), strategy="saturation_largest_first")
    relabel: dict[int, int] = {}
    colors = []
    for v in range(1, g.n + 1):
        color = raw[v]
        if color not in relabel:
            relabel[color] = len(relabel) + 1
        colors.append(relabel[color])
    return Coloring(tuple(colors))


def generators(g: Graph) -> list[PauliString]:
    """g_i = X on vertex i, Z on each neighbor of i."""
    result = []
    for v in range(1, g.n + 1):
        letters = ["I"] * g.n
        letters[v - 1] = "X"
        for u in g.neighbors(v):
            letters[u - 1] = "Z"
        result.append(PauliString("".join(letters)))
    return result


def ghz_generators(n: int) -> list[PauliString]:
    """X^n together with Z_1 Z_j for j = 2..n."""
    if n < 2:
        raise ValueError(f"GHZ needs at least 2 qubits, got {n}")
    result = [PauliString("X" * n)]
    for j in range(1, n):
        letters = ["I"] * n
        letters[0] = letters[j] = "Z"
        result.append(PauliString("".join(letters)))
    return result


def stabilizer_group(gens: list[PauliString]) -> list[PauliString]:
    """All 2^len(gens) products g1^b1 ... gn^bn.

    Element b has generator i included when bit i (LSB first) of b is set;
    the identity comes first.

    Raises:
        ValueError: If gens is empty, too long, or of mixed length
        NonCommutingError: If two generators anticommute
    """
    if not gens:
        raise ValueError("Need at least one generator")
    if len(gens) > MAX_GROUP_GENERATORS:
        raise ValueError(
            f"Group enumeration supports at most {MAX_GROUP_GENERATORS} "
            f"generators, got {len(gens)}"
        )
    n = gens[0].n
    if any(g.n != n for g in gens):
        raise ValueError("Generators have different lengths")
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            if not gens[a].commutes(gens[b]):
                raise NonCommutingError(
                    f"Generators {gens[a]} and {gens[b]} do not commute"
                )
    group = [PauliString.identity(n)]
    for g in gens:
        group = group + [h * g for h in group]
    return group


def pauli_projector(g: PauliString, sign: int = 1) -> Operator:
    """(I + sign*g)/2 for a Hermitian Pauli string.

    Raises:
        ValueError: If g has an imaginary phase or sign is not +-1
    """
    if not g.is_hermitian():
        raise ValueError(f"Pauli string {g} has an imaginary phase")
    if sign not in (1, -1):
        raise ValueError(f"Sign must be +1 or -1, got {sign}")
    matrix = g.to_matrix().matrix * (0.5 * sign)
    matrix[np.diag_indices_from(matrix)] += 0.5
    return Operator((2,) * g.n, matrix)


def graph_state(g: Graph) -> PureState:
    """prod_{(i,j) in E} CZ_ij |+>^n."""
    check_dims([2] * g.n)
    indices = np.arange(2**g.n)
    parity = np.zeros_like(indices)
    for i, j in g.edges:
        bit_i = (indices >> (g.n - i)) & 1
        bit_j = (indices >> (g.n - j)) & 1
        parity ^= bit_i & bit_j
    amplitudes = (1 - 2 * parity) / np.sqrt(2**g.n)
    return PureState((2,) * g.n, amplitudes.astype(complex))
