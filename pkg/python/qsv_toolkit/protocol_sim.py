"""Monte Carlo simulation of verification experiments.

Each round k draws a test l with probability p_l and passes with probability
Tr(Omega_l sigma_k). Sources are i.i.d., so the per-test pass probabilities
are computed once per run; the two uniforms used by round k come from
rng.RoundRandom and depend only on (seed, k).
"""

import warnings
from concurrent.futures import Executor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from qsv_toolkit import stats
from qsv_toolkit.errors import NumericalIntegrityError
from qsv_toolkit.parallel import (
    DEFAULT_CHUNK_ROUNDS,
    RoundChunk,
    parallel_map_chunks,
    split_rounds,
)
from qsv_toolkit.qmath import (
    DERIVED_TOL,
    Operator,
    PureState,
    eigenvalues,
    hermitian_spectrum,
)
from qsv_toolkit.rng import RoundRandom
from qsv_toolkit.strategy import Strategy

# Two eigenvalues closer than this are treated as one eigenspace.
DEGENERACY_TOL = 1e-9
# Pass probabilities this close to 0 or 1 are snapped to the endpoint.
SNAP_TOL = 1e-12


def check_density(rho: Operator, name: str = "density operator") -> None:
    """Raises ValueError unless rho has unit trace and is positive semidefinite."""
    trace = rho.trace()
    if abs(trace - 1.0) > DERIVED_TOL:
        raise ValueError(f"{name} has trace {trace!r}, expected 1")
    if not rho.is_hermitian():
        raise ValueError(f"{name} is not Hermitian")
    smallest = eigenvalues(rho)[-1]
    if smallest < -DERIVED_TOL:
        raise ValueError(f"{name} has negative eigenvalue {smallest!r}")


@dataclass
class Source:
    """Device emitting the same state independently every round.

    Attributes:
        kind: "exact", "worst-case", "depolarized" or "custom"
        density: State emitted each round
        params: Parameters the source was built from
    """

    kind: str
    density: Operator
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        check_density(self.density, f"{self.kind} source state")

    def state(self, round_index: int) -> Operator:
        return self.density

    def fidelity(self, target: PureState) -> float:
        return self.density.expectation(target)

    def describe(self) -> str:
        if not self.params:
            return self.kind
        values = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({values})"


@dataclass
class Transcript:
    """Per-round record of a simulated experiment.

    Attributes:
        seed: Master seed of the run
        label: Strategy label
        source: Source description
        tests: Test index drawn in each round
        passed: Pass flag of each round
    """

    seed: int
    label: str
    source: str
    tests: np.ndarray
    passed: np.ndarray

    def __post_init__(self):
        self.tests = np.asarray(self.tests, dtype=np.int64)
        self.passed = np.asarray(self.passed, dtype=bool)
        if self.tests.shape != self.passed.shape or self.tests.ndim != 1:
            raise ValueError(
                f"Transcript arrays disagree: {self.tests.shape} tests vs "
                f"{self.passed.shape} pass flags"
            )

    @property
    def rounds(self) -> int:
        return int(self.tests.shape[0])

    @property
    def passes(self) -> int:
        return int(np.count_nonzero(self.passed))

    @property
    def frequency(self) -> float:
        if self.rounds == 0:
            return 0.0
        return self.passes / self.rounds


def worst_case_vector(s: Strategy) -> tuple[PureState, bool]:
    """Second eigenvector of Omega and whether its eigenspace is degenerate.

    Ties are broken by the eigensolver's deterministic ordering; the flag
    reports that other choices were possible.
    """
    projector = s.target.projector().matrix
    complement = np.eye(s.target.dim) - projector
    omega = s.operator().matrix
    restricted = Operator(s.target.dims, complement @ omega @ complement - projector)
    values, vectors = hermitian_spectrum(restricted)
    degenerate = values.shape[0] > 2 and values[0] - values[1] <= DEGENERACY_TOL
    return PureState.normalized(s.target.dims, vectors[:, 0]), bool(degenerate)


def _worst_case(s: Strategy, eps: float) -> tuple[Operator, bool]:
    if not 0 <= eps <= 1:
        raise ValueError(f"eps={eps!r} must lie in [0, 1]")
    perp, degenerate = worst_case_vector(s)
    if degenerate:
        warnings.warn(
            f"Second eigenspace of the {s.label} strategy is degenerate; "
            "using the eigensolver's first vector",
            stacklevel=3,
        )
    return (1 - eps) * s.target.projector() + eps * perp.projector(), degenerate


def worst_case_state(s: Strategy, eps: float) -> Operator:
    """(1 - eps)|psi><psi| + eps|psi_perp><psi_perp| with Tr(Omega sigma) = 1 - eps*nu.

    Warns when the second eigenspace of Omega is degenerate.
    """
    return _worst_case(s, eps)[0]


def exact_source(target: PureState) -> Source:
    return Source("exact", target.projector())


def worst_case_source(s: Strategy, eps: float) -> Source:
    density, degenerate = _worst_case(s, eps)
    return Source("worst-case", density, {"eps": eps, "degenerate": degenerate})


def depolarized_source(target: PureState, p: float) -> Source:
    """(1 - p)|psi><psi| + p 1/D each round; fidelity 1 - p + p/D."""
    if not 0 <= p <= 1:
        raise ValueError(f"Depolarizing probability p={p!r} must lie in [0, 1]")
    mixed = Operator.identity(target.dims) * (1.0 / target.dim)
    return Source("depolarized", (1 - p) * target.projector() + p * mixed, {"p": p})


def custom_source(density: Operator) -> Source:
    return Source("custom", density)


def parse_source_spec(text: str, s: Strategy) -> Source:
    """Build a source from "exact", "worst:EPS", "depolarized:P" or "custom:FILE".

    Raises:
        ValueError: For unknown kinds or malformed parameters
        SchemaError: If a custom density file is malformed
    """
    kind, _, rest = text.strip().partition(":")
    kind = kind.lower()
    if kind == "exact" and not rest:
        return exact_source(s.target)
    if kind == "custom" and rest:
        from qsv_toolkit.serialization import load_operator

        density = load_operator(Path(rest))
        if density.dims != s.target.dims:
            raise ValueError(
                f"Custom state dims {density.dims} do not match target dims {s.target.dims}"
            )
        return custom_source(density)
    try:
        value = float(rest)
    except ValueError:
        raise ValueError(
            f"Invalid source spec '{text}' (expected exact, worst:EPS, "
            f"depolarized:P or custom:FILE)"
        ) from None
    if kind == "worst":
        return worst_case_source(s, value)
    if kind == "depolarized":
        return depolarized_source(s.target, value)
    raise ValueError(f"Unknown source kind '{kind}' in '{text}'")


def round_pass_probabilities(s: Strategy, src: Source) -> np.ndarray:
    """Tr(Omega_l sigma) per test, checked against [0, 1].

    Raises:
        NumericalIntegrityError: If a probability leaves [-1e-9, 1 + 1e-9]
    """
    if src.density.dims != s.target.dims:
        raise ValueError(
            f"Source dims {src.density.dims} do not match target dims {s.target.dims}"
        )
    q = s.pass_probabilities(src.density)
    bad = np.flatnonzero((q < -DERIVED_TOL) | (q > 1 + DERIVED_TOL))
    if bad.size:
        index = int(bad[0])
        raise NumericalIntegrityError(
            f"Test {index} ({s.tests[index].name}) has pass probability {q[index]!r}"
        )
    q = np.clip(q, 0.0, 1.0)
    q[q > 1 - SNAP_TOL] = 1.0
    q[q < SNAP_TOL] = 0.0
    return q


def run_protocol(
    s: Strategy,
    src: Source,
    rounds: int,
    seed: int,
    executor: Executor | None = None,
    chunk_rounds: int = DEFAULT_CHUNK_ROUNDS,
) -> Transcript:
    """Simulate rounds of the protocol.

    Args:
        s: Strategy whose tests are drawn
        src: Source emitting the tested states
        rounds: Number of rounds N (at least 1)
        seed: Master seed
        executor: Executor for parallel chunks. If None, runs sequentially.
        chunk_rounds: Rounds per chunk

    Returns:
        Transcript, identical for any executor and chunk size
    """
    if rounds < 1:
        raise ValueError(f"Need at least one round, got {rounds}")
    q = round_pass_probabilities(s, src)
    cumulative = np.cumsum([t.probability for t in s.tests])
    cumulative /= cumulative[-1]
    last = len(s.tests) - 1
    random = RoundRandom(seed)

    def simulate(chunk: RoundChunk) -> tuple[np.ndarray, np.ndarray]:
        u = random.round_uniforms(chunk.start, chunk.stop)
        tests = np.minimum(np.searchsorted(cumulative, u[:, 0], side="right"), last)
        return tests, u[:, 1] < q[tests]

    parts = parallel_map_chunks(simulate, split_rounds(rounds, chunk_rounds), executor)
    return Transcript(
        seed=random.seed,
        label=s.label,
        source=src.describe(),
        tests=np.concatenate([p[0] for p in parts]),
        passed=np.concatenate([p[1] for p in parts]),
    )


def evaluate_transcript(tr: Transcript, eps: float, nu: float) -> stats.TestResult:
    """Fidelity decision for the transcript's pass frequency."""
    return stats.decide(tr.passes, tr.rounds, eps, nu)
