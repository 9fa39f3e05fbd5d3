"""JSON and CSV encodings of operators, states, strategies and results.

Complex arrays are stored as flat row-major "re" and "im" lists next to the
factor "dims", so every double survives a round trip bit-for-bit. Strategies
whose path ends in ".qsva" go through the binary archive instead of JSON.
"""

import csv
import json
from math import prod
from pathlib import Path
from typing import IO, Any

import numpy as np

from qsv_toolkit.errors import SchemaError
from qsv_toolkit.qmath import Operator, PureState

ARCHIVE_SUFFIX = ".qsva"
CSV_DIGITS = 12


def format_csv_value(value: Any) -> str:
    """Render floats at 12 significant digits; everything else with str()."""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{CSV_DIGITS}g}"
    return str(value)


def write_csv(rows: list[list[Any]], header: list[str], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_csv_value(v) for v in row])


def load_json(path: Path) -> Any:
    """Read a JSON document.

    Raises:
        FileNotFoundError: If the file does not exist
        SchemaError: If the file is empty or not valid JSON
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Input file not found: {path}")
    if path.stat().st_size == 0:
        raise SchemaError("File is empty", path)
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError(f"Invalid JSON: {e}", path) from e


def write_json(data: Any, path: Path | None, stream: IO[str] | None = None) -> None:
    """Write JSON to path, or to stream when path is None."""
    text = json.dumps(data, indent=2, allow_nan=False)
    if path is None:
        stream.write(text + "\n")
        return
    path = Path(path)
    path.write_text(text + "\n")
    if path.stat().st_size == 0:
        raise RuntimeError(f"Written file is empty: {path}")


def _field(data: Any, key: str, where: str, path: Path | None) -> Any:
    if not isinstance(data, dict):
        raise SchemaError(f"{where} must be an object", path)
    if key not in data:
        raise SchemaError(f"{where} is missing required field '{key}'", path)
    return data[key]


def _complex_array(
    data: dict, where: str, path: Path | None, shape: tuple[int, ...]
) -> np.ndarray:
    real = _field(data, "re", where, path)
    imag = data.get("im")
    try:
        array = np.asarray(real, dtype=float)
        if imag is not None:
            array = array + 1j * np.asarray(imag, dtype=float)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{where} has non-numeric entries: {e}", path) from e
    if imag is not None and np.shape(imag) != np.shape(real):
        raise SchemaError(f"{where} re and im parts differ in shape", path)
    if array.size != prod(shape):
        raise SchemaError(
            f"{where} has {array.size} entries, expected {prod(shape)} for dims", path
        )
    return array.astype(complex).reshape(shape)


def _dims(data: dict, where: str, path: Path | None) -> tuple[int, ...]:
    dims = _field(data, "dims", where, path)
    if (
        not isinstance(dims, list)
        or not dims
        or not all(isinstance(d, int) and d >= 1 for d in dims)
    ):
        raise SchemaError(f"{where}.dims must be a non-empty list of positive integers", path)
    return tuple(dims)


def operator_to_dict(op: Operator) -> dict:
    return {
        "dims": list(op.dims),
        "re": op.matrix.real.reshape(-1).tolist(),
        "im": op.matrix.imag.reshape(-1).tolist(),
    }


def operator_from_dict(data: Any, path: Path | None = None, where: str = "operator") -> Operator:
    dims = _dims(data, where, path)
    try:
        side = prod(dims)
        return Operator(dims, _complex_array(data, where, path, (side, side)))
    except SchemaError:
        raise
    except ValueError as e:
        raise SchemaError(f"{where}: {e}", path) from e


def state_to_dict(state: PureState) -> dict:
    return {
        "dims": list(state.dims),
        "re": state.amplitudes.real.tolist(),
        "im": state.amplitudes.imag.tolist(),
    }


def state_from_dict(data: Any, path: Path | None = None, where: str = "state") -> PureState:
    dims = _dims(data, where, path)
    try:
        return PureState(dims, _complex_array(data, where, path, (prod(dims),)))
    except SchemaError:
        raise
    except ValueError as e:
        raise SchemaError(f"{where}: {e}", path) from e


def strategy_to_dict(s) -> dict:
    tests = []
    for test in s.tests:
        entry = {"p": test.probability, "name": test.name, "effect": operator_to_dict(test.effect)}
        if test.branches is not None:
            entry["branches"] = [
                [operator_to_dict(m), operator_to_dict(n)] for m, n in test.branches
            ]
        tests.append(entry)
    return {
        "label": s.label,
        "target": state_to_dict(s.target),
        "tests": tests,
        "predicted_gap": s.predicted_gap,
        "metadata": s.metadata,
    }


def strategy_from_dict(data: Any, path: Path | None = None):
    from qsv_toolkit.strategy import Strategy, WeightedTest

    label = _field(data, "label", "strategy", path)
    target = state_from_dict(_field(data, "target", "strategy", path), path, "strategy.target")
    raw_tests = _field(data, "tests", "strategy", path)
    if not isinstance(raw_tests, list) or not raw_tests:
        raise SchemaError("strategy.tests must be a non-empty list", path)
    tests = []
    for index, entry in enumerate(raw_tests):
        where = f"strategy.tests[{index}]"
        probability = _field(entry, "p", where, path)
        if not isinstance(probability, (int, float)):
            raise SchemaError(f"{where}.p must be a number", path)
        effect = operator_from_dict(_field(entry, "effect", where, path), path, f"{where}.effect")
        branches = None
        if "branches" in entry:
            branches = []
            for b, pair in enumerate(entry["branches"]):
                if not isinstance(pair, list) or len(pair) != 2:
                    raise SchemaError(f"{where}.branches[{b}] must be a pair", path)
                branches.append(
                    (
                        operator_from_dict(pair[0], path, f"{where}.branches[{b}][0]"),
                        operator_from_dict(pair[1], path, f"{where}.branches[{b}][1]"),
                    )
                )
        tests.append(
            WeightedTest(float(probability), effect, name=entry.get("name", ""), branches=branches)
        )
    predicted = data.get("predicted_gap")
    return Strategy(
        target,
        tests,
        str(label),
        None if predicted is None else float(predicted),
        dict(data.get("metadata") or {}),
    )


def load_operator(path: Path) -> Operator:
    return operator_from_dict(load_json(path), Path(path))


def load_state(path: Path) -> PureState:
    return state_from_dict(load_json(path), Path(path))


def load_strategy(path: Path):
    """Read a strategy from JSON or, for ".qsva" paths, from an archive."""
    path = Path(path)
    if path.suffix == ARCHIVE_SUFFIX:
        from qsv_toolkit.archive import read_strategy_archive

        return read_strategy_archive(path)
    return strategy_from_dict(load_json(path), path)


def save_strategy(s, path: Path, compression: str = "zstd-per-effect") -> None:
    path = Path(path)
    if path.suffix == ARCHIVE_SUFFIX:
        from qsv_toolkit.archive import write_strategy_archive
        from qsv_toolkit.compression import create_compressor

        write_strategy_archive(s, path, create_compressor(compression))
        return
    write_json(strategy_to_dict(s), path)


def transcript_to_dict(tr) -> dict:
    return {
        "seed": tr.seed,
        "label": tr.label,
        "source": tr.source,
        "rounds": tr.rounds,
        "passes": tr.passes,
        "frequency": tr.frequency,
        "tests": tr.tests.tolist(),
        "passed": tr.passed.astype(int).tolist(),
    }


def transcript_from_dict(data: Any, path: Path | None = None):
    from qsv_toolkit.protocol_sim import Transcript

    seed = _field(data, "seed", "transcript", path)
    tests = _field(data, "tests", "transcript", path)
    passed = _field(data, "passed", "transcript", path)
    if not isinstance(tests, list) or not isinstance(passed, list):
        raise SchemaError("transcript.tests and transcript.passed must be lists", path)
    try:
        return Transcript(
            seed=int(seed),
            label=str(data.get("label", "")),
            source=str(data.get("source", "")),
            tests=np.asarray(tests, dtype=np.int64),
            passed=np.asarray(passed, dtype=bool),
        )
    except (TypeError, ValueError) as e:
        raise SchemaError(f"transcript: {e}", path) from e


def load_transcript(path: Path):
    return transcript_from_dict(load_json(path), Path(path))


def write_transcript_csv(tr, stream: IO[str]) -> None:
    """One row per round: round index, test index, pass flag."""
    rows = [[k, int(t), int(p)] for k, (t, p) in enumerate(zip(tr.tests, tr.passed))]
    write_csv(rows, ["round", "test", "pass"], stream)


def pm_strategy_to_dict(xi) -> dict:
    return {
        "label": xi.label,
        "d_in": xi.d_in,
        "d_out": xi.d_out,
        "tests": [
            {
                "p": t.probability,
                "name": t.name,
                "input_state": operator_to_dict(t.input_state),
                "effect": operator_to_dict(t.effect),
            }
            for t in xi.tests
        ],
        "metadata": xi.metadata,
    }


def pm_strategy_from_dict(data: Any, path: Path | None = None):
    from qsv_toolkit.qpv import PMStrategy, PMTest

    raw_tests = _field(data, "tests", "pm_strategy", path)
    if not isinstance(raw_tests, list):
        raise SchemaError("pm_strategy.tests must be a list", path)
    tests = []
    for index, entry in enumerate(raw_tests):
        where = f"pm_strategy.tests[{index}]"
        tests.append(
            PMTest(
                probability=float(_field(entry, "p", where, path)),
                input_state=operator_from_dict(
                    _field(entry, "input_state", where, path), path, f"{where}.input_state"
                ),
                effect=operator_from_dict(
                    _field(entry, "effect", where, path), path, f"{where}.effect"
                ),
                name=entry.get("name", ""),
            )
        )
    try:
        return PMStrategy(tests, label=str(data.get("label", "")), metadata=data.get("metadata") or {})
    except ValueError as e:
        raise SchemaError(str(e), path) from e

