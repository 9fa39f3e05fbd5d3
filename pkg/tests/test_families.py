"""Tests for the strategy family registry and sweep helpers."""

from math import pi

import pytest

from qsv_toolkit.families import (
    COMPARE_COLUMNS,
    FAMILIES,
    FamilyParams,
    build_strategy,
    compare_qubit_rows,
    get_family,
    parse_int_range,
    parse_theta_grid,
    snap_theta,
    sweep_rows,
)


class TestFamilyParams:
    def test_from_dict_converts_types(self):
        p = FamilyParams.from_dict({"schmidt": [0.8, 0.6], "graph": "g.txt", "n": 3})
        assert p.schmidt == (0.8, 0.6)
        assert str(p.graph) == "g.txt"
        assert p.to_dict() == {"n": 3, "schmidt": [0.8, 0.6], "graph": "g.txt"}

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="Unknown family parameter"):
            FamilyParams.from_dict({"alpha": 1})


class TestRegistry:
    def test_unknown_family(self):
        with pytest.raises(ValueError, match="Unknown strategy family 'nope'"):
            get_family("nope")

    def test_missing_parameters_name_flags(self):
        with pytest.raises(ValueError, match="needs --target, --lambda"):
            build_strategy("homogeneous", FamilyParams())
        with pytest.raises(ValueError, match="needs --theta"):
            build_strategy("oneway-qubit", FamilyParams())

    @pytest.mark.parametrize(
        "name,params,gap",
        [
            ("bell", FamilyParams(), 2 / 3),
            ("mes", FamilyParams(d=3), 3 / 4),
            ("ghz-two-setting", FamilyParams(n=3), 1 / 2),
            ("global", FamilyParams(target="ghz:3"), 1.0),
            ("homogeneous", FamilyParams(target="bell", lam=0.25), 0.75),
        ],
    )
    def test_build_known_gaps(self, name, params, gap):
        assert build_strategy(name, params).gap() == pytest.approx(gap)

    def test_graph_families(self, graph_files):
        graph, coloring = graph_files
        from_file = build_strategy("coloring", FamilyParams(graph=graph, coloring=coloring))
        greedy = build_strategy("coloring", FamilyParams(graph=graph))
        assert len(from_file.tests) == len(greedy.tests) == 2
        stabilizer = build_strategy("stabilizer", FamilyParams(graph=graph))
        assert len(stabilizer.tests) == 2**4 - 1

    def test_every_family_has_description(self):
        assert all(f.description for f in FAMILIES.values())


class TestGrids:
    def test_theta_grid_snaps_endpoint(self):
        grid = parse_theta_grid("0.1:0.7854:3")
        assert len(grid) == 3
        assert grid[0] == 0.1
        assert grid[-1] == pi / 4

    def test_snap_leaves_interior_alone(self):
        assert snap_theta(0.7) == 0.7

    @pytest.mark.parametrize("text", ["0:1", "a:b:3", "0:1:x"])
    def test_malformed_theta_grid(self, text):
        with pytest.raises(ValueError, match="Invalid theta grid"):
            parse_theta_grid(text)

    def test_theta_grid_needs_points(self):
        with pytest.raises(ValueError, match="at least one point"):
            parse_theta_grid("0:1:0")

    def test_int_range(self):
        assert parse_int_range("3:6") == [3, 4, 5, 6]
        assert parse_int_range("5") == [5]
        with pytest.raises(ValueError, match="a <= b"):
            parse_int_range("6:3")
        with pytest.raises(ValueError, match="Invalid integer range"):
            parse_int_range("x")


class TestSweeps:
    def test_mes_sweep_matches_prediction(self):
        rows = sweep_rows("mes", [2, 3, 4], FamilyParams())
        assert [r[0] for r in rows] == [2, 3, 4]
        for _, gap, predicted in rows:
            assert gap == pytest.approx(predicted, abs=1e-9)

    def test_no_axis(self):
        with pytest.raises(ValueError, match="has no sweep axis"):
            sweep_rows("bell", [1], FamilyParams())

    def test_compare_leaves_undefined_cells_empty(self):
        (row,) = compare_qubit_rows([0.0])
        assert len(row) == 1 + len(COMPARE_COLUMNS)
        local = row[1 + COMPARE_COLUMNS.index("local-qubit")]
        many = row[1 + COMPARE_COLUMNS.index("manyround-qubit")]
        assert local == "" and many == ""

    def test_compare_at_quarter_pi(self):
        (row,) = compare_qubit_rows([pi / 4])
        assert row[1 + COMPARE_COLUMNS.index("local-qubit")] == pytest.approx(2 / 3)
        assert all(isinstance(v, float) for v in row[1:])

    def test_more_communication_never_hurts(self):
        (row,) = compare_qubit_rows([0.5])
        gaps = row[1:]
        assert all(a <= b + 1e-9 for a, b in zip(gaps, gaps[1:]))
