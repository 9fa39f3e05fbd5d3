"""Tests for JSON and CSV encodings."""

import io
import json

import numpy as np
import pytest

from qsv_toolkit.errors import SchemaError
from qsv_toolkit.local_strategies import bell_strategy
from qsv_toolkit.protocol_sim import Transcript
from qsv_toolkit.qmath import Operator
from qsv_toolkit.qpv import convert_one_way_to_pm
from qsv_toolkit.serialization import (
    format_csv_value,
    load_json,
    load_operator,
    load_state,
    load_strategy,
    load_transcript,
    operator_from_dict,
    operator_to_dict,
    pm_strategy_from_dict,
    pm_strategy_to_dict,
    save_strategy,
    state_from_dict,
    state_to_dict,
    transcript_to_dict,
    write_csv,
    write_json,
    write_transcript_csv,
)
from qsv_toolkit.states import two_qubit_state


class TestFiles:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_json(tmp_path / "missing.json")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("")
        with pytest.raises(SchemaError, match="File is empty"):
            load_json(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError, match="Invalid JSON") as info:
            load_json(path)
        assert info.value.path == path

    def test_write_json_to_stream(self):
        stream = io.StringIO()
        write_json({"gap": 0.5}, None, stream)
        assert json.loads(stream.getvalue()) == {"gap": 0.5}

    def test_write_json_rejects_nan(self, tmp_path):
        with pytest.raises(ValueError):
            write_json({"x": float("nan")}, tmp_path / "nan.json")


class TestCsv:
    def test_float_precision(self):
        assert format_csv_value(2 / 3) == "0.666666666667"
        assert format_csv_value(np.float64(0.5)) == "0.5"
        assert format_csv_value(7) == "7"
        assert format_csv_value("") == ""

    def test_write_csv(self):
        stream = io.StringIO()
        write_csv([[0.1, 1], [0.2, ""]], ["theta", "gap"], stream)
        assert stream.getvalue() == "theta,gap\n0.1,1\n0.2,\n"

    def test_transcript_csv(self):
        tr = Transcript(1, "bell", "exact", np.array([2, 0]), np.array([True, False]))
        stream = io.StringIO()
        write_transcript_csv(tr, stream)
        assert stream.getvalue() == "round,test,pass\n0,2,1\n1,0,0\n"


class TestOperators:
    def test_doubles_survive_bit_for_bit(self):
        op = Operator((2,), np.array([[1 / 3, 1j / 7], [-1j / 7, 2 / 3]]))
        restored = operator_from_dict(json.loads(json.dumps(operator_to_dict(op))))
        assert np.array_equal(restored.matrix, op.matrix)
        assert restored.dims == (2,)

    def test_wrong_entry_count(self):
        data = {"dims": [2], "re": [1.0, 0.0, 0.0]}
        with pytest.raises(SchemaError, match="has 3 entries, expected 4"):
            operator_from_dict(data)

    def test_missing_im_means_real(self):
        op = operator_from_dict({"dims": [2], "re": [1, 0, 0, 1]})
        assert np.array_equal(op.matrix, np.eye(2))

    @pytest.mark.parametrize(
        "data,message",
        [
            ([], "must be an object"),
            ({"re": [1]}, "missing required field 'dims'"),
            ({"dims": [0], "re": []}, "positive integers"),
            ({"dims": [1], "re": ["a"]}, "non-numeric"),
            ({"dims": [1], "re": [1], "im": [0, 0]}, "differ in shape"),
        ],
    )
    def test_schema_errors(self, data, message):
        with pytest.raises(SchemaError, match=message):
            operator_from_dict(data)

    def test_load_operator(self, tmp_path):
        path = tmp_path / "gate.json"
        write_json(operator_to_dict(Operator.identity((3,))), path)
        assert np.array_equal(load_operator(path).matrix, np.eye(3))


class TestStates:
    def test_round_trip(self, tmp_path):
        state = two_qubit_state(0.3)
        path = tmp_path / "state.json"
        write_json(state_to_dict(state), path)
        assert np.array_equal(load_state(path).amplitudes, state.amplitudes)

    def test_unnormalized_state(self):
        with pytest.raises(SchemaError, match="state"):
            state_from_dict({"dims": [2], "re": [1.0, 1.0]})


class TestStrategies:
    def test_json_round_trip(self, tmp_path):
        s = bell_strategy()
        path = tmp_path / "bell.json"
        save_strategy(s, path)
        restored = load_strategy(path)
        assert restored.label == "bell"
        assert restored.predicted_gap == pytest.approx(2 / 3)
        assert restored.has_one_way_decomposition
        assert [t.name for t in restored.tests] == ["XX", "YY", "ZZ"]
        assert np.array_equal(restored.operator().matrix, s.operator().matrix)

    def test_archive_suffix_dispatch(self, tmp_path):
        path = tmp_path / "bell.qsva"
        save_strategy(bell_strategy(), path, compression="none")
        assert path.read_bytes()[:4] == b"QSVA"
        assert load_strategy(path).gap() == pytest.approx(2 / 3)

    def test_empty_tests(self, tmp_path):
        path = tmp_path / "s.json"
        data = {"label": "x", "target": state_to_dict(two_qubit_state(0.3)), "tests": []}
        path.write_text(json.dumps(data))
        with pytest.raises(SchemaError, match="non-empty list"):
            load_strategy(path)

    def test_bad_branch(self, tmp_path):
        s = bell_strategy()
        path = tmp_path / "s.json"
        save_strategy(s, path)
        data = json.loads(path.read_text())
        data["tests"][0]["branches"][0] = [data["tests"][0]["effect"]]
        path.write_text(json.dumps(data))
        with pytest.raises(SchemaError, match=r"branches\[0\] must be a pair"):
            load_strategy(path)


class TestTranscripts:
    def test_round_trip(self, tmp_path):
        tr = Transcript(42, "bell", "exact", np.array([0, 1, 2]), np.array([True, True, False]))
        path = tmp_path / "t.json"
        write_json(transcript_to_dict(tr), path)
        restored = load_transcript(path)
        assert restored.seed == 42
        assert restored.passes == 2
        assert np.array_equal(restored.tests, tr.tests)

    def test_mismatched_lengths(self, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({"seed": 1, "tests": [0, 1], "passed": [1]}))
        with pytest.raises(SchemaError, match="disagree"):
            load_transcript(path)


class TestPMStrategies:
    def test_round_trip(self):
        xi = convert_one_way_to_pm(bell_strategy())
        restored = pm_strategy_from_dict(json.loads(json.dumps(pm_strategy_to_dict(xi))))
        assert len(restored.tests) == len(xi.tests)
        assert np.allclose(restored.xi().matrix, xi.xi().matrix)

    def test_bad_probabilities(self):
        data = pm_strategy_to_dict(convert_one_way_to_pm(bell_strategy()))
        data["tests"] = data["tests"][:1]
        with pytest.raises(SchemaError, match="sum to"):
            pm_strategy_from_dict(data)
