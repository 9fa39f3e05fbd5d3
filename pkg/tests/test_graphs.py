"""Tests for Pauli strings, graphs, colorings and stabilizer groups."""

import networkx as nx
import numpy as np
import pytest

from qsv_toolkit.errors import NonCommutingError, SchemaError
from qsv_toolkit.graphs import (
    Coloring,
    Graph,
    PauliString,
    generators,
    ghz_generators,
    graph_state,
    greedy_coloring,
    pauli_projector,
    stabilizer_group,
)
from qsv_toolkit.local_strategies import coloring_strategy, stabilizer_strategy
from qsv_toolkit.qmath import PAULI_X, PAULI_Y, PAULI_Z, Operator, kron_all
from qsv_toolkit.states import ghz


class TestPauliString:
    def test_parse_phases(self):
        assert PauliString.from_string("-YY").phase == 2
        assert PauliString.from_string("+iXZ").phase == 1
        assert PauliString.from_string("-iZ").phase == 3
        assert PauliString.from_string("xz").letters == "XZ"

    def test_invalid_letters(self):
        with pytest.raises(ValueError, match="Invalid Pauli"):
            PauliString("XQ")

    def test_products(self):
        assert PauliString("X") * PauliString("Y") == PauliString("Z", 1)
        assert PauliString("ZZ") * PauliString("ZZ") == PauliString("II")
        assert str(PauliString("XX") * PauliString("ZZ")) == "-YY"

    def test_commutation(self):
        assert PauliString("XX").commutes(PauliString("ZZ"))
        assert not PauliString("XI").commutes(PauliString("ZI"))

    def test_matrix_matches_kron(self):
        expected = kron_all(
            [Operator((2,), PAULI_X), Operator((2,), PAULI_Y), Operator((2,), PAULI_Z)]
        )
        assert PauliString("XYZ").to_matrix().allclose(expected)

    def test_apply_matches_matrix(self, rng):
        p = PauliString("YZX", 2)
        v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        assert p.apply(v) == pytest.approx(p.to_matrix().matrix @ v)

    def test_sign(self):
        assert PauliString("ZZ", 2).sign == -1
        with pytest.raises(ValueError, match="imaginary"):
            PauliString("Z", 1).sign


class TestGraph:
    def test_normalizes_edges(self):
        assert Graph.from_edges(3, [(2, 1), (3, 2)]).edges == {(1, 2), (2, 3)}

    def test_rejects_bad_edges(self):
        with pytest.raises(ValueError, match="Self-loop"):
            Graph.from_edges(2, [(1, 1)])
        with pytest.raises(ValueError, match="out of range"):
            Graph.from_edges(2, [(1, 3)])
        with pytest.raises(ValueError, match="Duplicate"):
            Graph.from_edges(2, [(1, 2), (2, 1)])

    def test_families(self):
        assert len(Graph.path(4).edges) == 3
        assert len(Graph.cycle(5).edges) == 5
        assert Graph.star(4).max_degree == 3
        assert len(Graph.complete(4).edges) == 6

    def test_networkx_round_trip(self):
        g = Graph.from_networkx(nx.petersen_graph())
        assert g.n == 10
        assert len(g.edges) == 15
        assert nx.is_isomorphic(g.to_networkx(), nx.petersen_graph())

    def test_file_round_trip(self, tmp_path):
        g = Graph.cycle(4)
        path = tmp_path / "c4.txt"
        path.write_text("# four-cycle\n" + g.to_text())
        assert Graph.from_file(path) == g

    def test_file_errors(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            Graph.from_file(tmp_path / "missing.txt")
        bad = tmp_path / "bad.txt"
        bad.write_text("3\n1 2 3\n")
        with pytest.raises(SchemaError, match="Expected 'i j'"):
            Graph.from_file(bad)
        empty = tmp_path / "empty.txt"
        empty.write_text("\n# nothing\n")
        with pytest.raises(SchemaError, match="empty"):
            Graph.from_file(empty)


class TestColoring:
    def test_from_file(self, graph_files):
        graph_path, coloring_path = graph_files
        g = Graph.from_file(graph_path)
        c = Coloring.from_file(coloring_path)
        assert c.m == 2
        assert c.classes() == [[1, 3], [2, 4]]
        assert c.is_proper(g)

    def test_improper(self):
        with pytest.raises(ValueError, match="adjacent vertices 1 and 2"):
            Coloring((1, 1, 2)).check_proper(Graph.path(3))

    def test_missing_vertex(self, tmp_path):
        path = tmp_path / "c.col"
        path.write_text("1 1\n3 2\n")
        with pytest.raises(SchemaError, match="without a color"):
            Coloring.from_file(path)

    def test_greedy_bipartite_uses_two_colors(self):
        for g in (Graph.path(6), Graph.cycle(6), Graph.star(5)):
            c = greedy_coloring(g)
            assert c.is_proper(g)
            assert c.m == 2

    def test_greedy_bounded_by_max_degree(self):
        g = Graph.from_networkx(nx.petersen_graph())
        c = greedy_coloring(g)
        assert c.is_proper(g)
        assert c.m <= g.max_degree + 1


class TestStabilizers:
    def test_graph_state_is_stabilized(self):
        g = Graph.cycle(4)
        state = graph_state(g)
        for gen in generators(g):
            assert gen.apply(state.amplitudes) == pytest.approx(state.amplitudes)

    def test_group_size_and_identity_first(self):
        group = stabilizer_group(generators(Graph.path(3)))
        assert len(group) == 8
        assert group[0] == PauliString.identity(3)
        assert len({(p.letters, p.phase) for p in group}) == 8

    def test_ghz_generators_stabilize_ghz(self):
        state = ghz(3)
        for gen in stabilizer_group(ghz_generators(3)):
            assert gen.apply(state.amplitudes) == pytest.approx(state.amplitudes)

    def test_non_commuting(self):
        with pytest.raises(NonCommutingError):
            stabilizer_group([PauliString("XI"), PauliString("ZI")])

    def test_pauli_projector(self):
        p = pauli_projector(PauliString("ZZ"))
        assert np.real(np.diag(p.matrix)) == pytest.approx([1, 0, 0, 1])
        minus = pauli_projector(PauliString("ZZ"), sign=-1)
        assert (p + minus).allclose(Operator.identity((2, 2)))

    @pytest.mark.parametrize("graph", [Graph.path(3), Graph.cycle(4), Graph.cycle(5)])
    def test_strategy_operators_commute_with_group(self, graph):
        group = stabilizer_group(generators(graph))
        for s in (stabilizer_strategy(graph), coloring_strategy(graph, greedy_coloring(graph))):
            omega = s.operator().matrix
            for element in group:
                m = element.to_matrix().matrix
                assert np.allclose(omega @ m, m @ omega, atol=1e-12)
