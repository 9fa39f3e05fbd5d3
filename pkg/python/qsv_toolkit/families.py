"""Registry of strategy families addressable by name.

The command-line tool and experiment configs refer to strategies by family
name plus a handful of parameters; this module turns that pair into a
Strategy and provides the theta/n grids used by gap sweeps.
"""

from dataclasses import dataclass, fields, replace
from math import pi
from pathlib import Path
from typing import Any, Callable

import numpy as np

from qsv_toolkit.adversarial import homogeneous_strategy
from qsv_toolkit.graphs import Coloring, Graph, greedy_coloring
from qsv_toolkit.local_strategies import (
    bell_strategy,
    coloring_strategy,
    ghz_optimal,
    ghz_two_setting,
    mes_strategy,
    stabilizer_strategy,
    two_qubit_local_optimal,
)
from qsv_toolkit.locc_strategies import (
    dicke_locc,
    many_round_qubit,
    one_way_qubit,
    one_way_qudit,
    two_way_qubit,
    two_way_qudit,
    w_local,
    w_locc,
)
from qsv_toolkit.states import SchmidtVector, parse_state_spec
from qsv_toolkit.strategy import Strategy, global_strategy

# Sweep grid points this close to pi/4 are snapped onto it, so that a grid
# ending at a rounded 0.7854 hits the maximally entangled endpoint.
SWEEP_SNAP_TOL = 1e-4

COMPARE_QUBIT = "compare-qubit"
COMPARE_COLUMNS = ("local-qubit", "oneway-qubit", "twoway-qubit", "manyround-qubit")


@dataclass
class FamilyParams:
    """Parameters a family builder may consume; unused fields stay None."""

    theta: float | None = None
    d: int | None = None
    n: int | None = None
    k: int | None = None
    schmidt: tuple[float, ...] | None = None
    graph: Path | None = None
    coloring: Path | None = None
    target: str | None = None
    lam: float | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FamilyParams":
        """Build from a JSON mapping.

        Raises:
            ValueError: On unknown keys
        """
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"Unknown family parameter(s): {', '.join(sorted(unknown))}")
        values = dict(data)
        if values.get("schmidt") is not None:
            values["schmidt"] = tuple(float(v) for v in values["schmidt"])
        for key in ("graph", "coloring"):
            if values.get(key) is not None:
                values[key] = Path(values[key])
        return cls(**values)

    def to_dict(self) -> dict[str, Any]:
        result = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, Path):
                value = str(value)
            elif isinstance(value, tuple):
                value = list(value)
            result[f.name] = value
        return result


@dataclass(frozen=True)
class Family:
    """A named strategy builder.

    Attributes:
        name: Name used on the command line
        build: Builder taking FamilyParams
        required: FamilyParams fields the builder needs
        axis: Parameter a sweep varies ("theta", "n" or "d"), or None
        description: One-line summary for --help
    """

    name: str
    build: Callable[[FamilyParams], Strategy]
    required: tuple[str, ...]
    axis: str | None
    description: str


def _coloring_for(p: FamilyParams) -> Strategy:
    g = Graph.from_file(p.graph)
    c = Coloring.from_file(p.coloring) if p.coloring is not None else greedy_coloring(g)
    return coloring_strategy(g, c)


def _schmidt(p: FamilyParams) -> SchmidtVector:
    return SchmidtVector.from_values(p.schmidt)


_FAMILY_LIST = [
    Family("bell", lambda p: bell_strategy(), (), None, "Pauli XX, YY, ZZ tests (gap 2/3)"),
    Family("mes", lambda p: mes_strategy(p.d), ("d",), "d", "Maximally entangled qudits"),
    Family(
        "ghz-two-setting", lambda p: ghz_two_setting(p.n), ("n",), "n", "GHZ Z/X settings"
    ),
    Family("ghz-optimal", lambda p: ghz_optimal(p.n), ("n",), "n", "Optimal GHZ strategy"),
    Family(
        "stabilizer",
        lambda p: stabilizer_strategy(Graph.from_file(p.graph)),
        ("graph",),
        None,
        "All stabilizer tests of a graph state",
    ),
    Family("coloring", _coloring_for, ("graph",), None, "One setting per color class"),
    Family(
        "local-qubit",
        lambda p: two_qubit_local_optimal(p.theta),
        ("theta",),
        "theta",
        "Optimal nonadaptive two-qubit strategy",
    ),
    Family(
        "oneway-qubit", lambda p: one_way_qubit(p.theta), ("theta",), "theta", "One-way LOCC"
    ),
    Family(
        "twoway-qubit", lambda p: two_way_qubit(p.theta), ("theta",), "theta", "Two-way LOCC"
    ),
    Family(
        "manyround-qubit",
        lambda p: many_round_qubit(p.theta),
        ("theta",),
        "theta",
        "Many-round LOCC",
    ),
    Family(
        "oneway-qudit",
        lambda p: one_way_qudit(_schmidt(p)),
        ("schmidt",),
        None,
        "One-way LOCC for Schmidt-form qudits",
    ),
    Family(
        "twoway-qudit",
        lambda p: two_way_qudit(_schmidt(p)),
        ("schmidt",),
        None,
        "Symmetrized two-way LOCC for Schmidt-form qudits",
    ),
    Family("w-locc", lambda p: w_locc(p.n), ("n",), "n", "Adaptive W-state pair tests"),
    Family("w-local", lambda p: w_local(p.n), ("n",), "n", "Nonadaptive W-state tests"),
    Family(
        "dicke-locc", lambda p: dicke_locc(p.n, p.k), ("n", "k"), "n", "Adaptive Dicke tests"
    ),
    Family(
        "global",
        lambda p: global_strategy(parse_state_spec(p.target)),
        ("target",),
        None,
        "Projector onto the target (gap 1)",
    ),
    Family(
        "homogeneous",
        lambda p: homogeneous_strategy(parse_state_spec(p.target), p.lam),
        ("target", "lam"),
        None,
        "Global test mixed with the trivial test",
    ),
]

FAMILIES: dict[str, Family] = {f.name: f for f in _FAMILY_LIST}

_FLAG_NAMES = {"lam": "--lambda"}


def get_family(name: str) -> Family:
    """Raises ValueError for unknown names."""
    if name not in FAMILIES:
        raise ValueError(
            f"Unknown strategy family '{name}' (known: {', '.join(sorted(FAMILIES))})"
        )
    return FAMILIES[name]


def build_strategy(name: str, params: FamilyParams) -> Strategy:
    """Build the named family's strategy.

    Raises:
        ValueError: For unknown families, missing parameters or parameters
            outside the builder's domain
    """
    family = get_family(name)
    missing = [r for r in family.required if getattr(params, r) is None]
    if missing:
        flags = ", ".join(_FLAG_NAMES.get(m, f"--{m}") for m in missing)
        raise ValueError(f"Family '{name}' needs {flags}")
    return family.build(params)


def snap_theta(theta: float) -> float:
    return pi / 4 if abs(theta - pi / 4) <= SWEEP_SNAP_TOL else theta


def parse_theta_grid(text: str) -> list[float]:
    """Parse "start:stop:count" into count evenly spaced angles, endpoints included.

    Raises:
        ValueError: If the grid is malformed or count < 1
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"Invalid theta grid '{text}' (expected start:stop:count)")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValueError(f"Invalid theta grid '{text}' (expected start:stop:count)") from None
    if count < 1:
        raise ValueError(f"Theta grid needs at least one point, got {count}")
    return [snap_theta(float(t)) for t in np.linspace(start, stop, count)]


def parse_int_range(text: str) -> list[int]:
    """Parse "a:b" as the inclusive integer range a..b (or a single integer)."""
    parts = text.split(":")
    try:
        values = [int(p) for p in parts]
    except ValueError:
        raise ValueError(f"Invalid integer range '{text}' (expected a:b)") from None
    if len(values) == 1:
        return values
    if len(values) != 2 or values[0] > values[1]:
        raise ValueError(f"Invalid integer range '{text}' (expected a:b with a <= b)")
    return list(range(values[0], values[1] + 1))


def sweep_rows(name: str, values: list, params: FamilyParams) -> list[list]:
    """[axis value, achieved gap, predicted gap] for every grid value.

    Raises:
        ValueError: If the family has no sweep axis or a value is out of domain
    """
    family = get_family(name)
    if family.axis is None:
        raise ValueError(f"Family '{name}' has no sweep axis")
    rows = []
    for value in values:
        s = build_strategy(name, replace(params, **{family.axis: value}))
        predicted = "" if s.predicted_gap is None else s.predicted_gap
        rows.append([value, s.gap(), predicted])
    return rows


def compare_qubit_rows(thetas: list[float]) -> list[list]:
    """Achieved gaps of the four two-qubit strategy classes side by side.

    Cells where a class is undefined (e.g. local at theta = 0) are left empty.
    """
    rows = []
    for theta in thetas:
        row: list = [theta]
        for name in COMPARE_COLUMNS:
            try:
                s = build_strategy(name, FamilyParams(theta=theta))
            except ValueError:
                row.append("")
                continue
            row.append(s.gap())
        rows.append(row)
    return rows
