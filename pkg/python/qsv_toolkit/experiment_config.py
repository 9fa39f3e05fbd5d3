"""
Configuration for simulated verification experiments.

A config names the strategy (by family or by file), the source, the number
of rounds and the seed, plus optional parallelism and decision parameters.
Seeds are always explicit so that every run can be reproduced from its config.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from qsv_toolkit.families import FamilyParams, get_family
from qsv_toolkit.parallel import DEFAULT_CHUNK_ROUNDS
from qsv_toolkit.rng import check_seed

_TOP_LEVEL_FIELDS = {"strategy", "source", "rounds", "seed", "workers", "chunk_rounds", "decision"}


@dataclass
class StrategyRef:
    """Strategy given either as a family plus parameters or as a file."""

    family: str | None = None
    params: FamilyParams = field(default_factory=FamilyParams)
    file: Path | None = None

    def __post_init__(self):
        if (self.family is None) == (self.file is None):
            raise ValueError("Strategy must name exactly one of 'family' or 'file'")
        if self.family is not None:
            get_family(self.family)

    def to_dict(self) -> dict[str, Any]:
        if self.file is not None:
            return {"file": str(self.file)}
        return {"family": self.family, "params": self.params.to_dict()}


@dataclass
class DecisionParams:
    """Infidelity threshold and spectral gap used to judge the transcript."""

    eps: float
    nu: float

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError(f"decision.eps={self.eps!r} must lie in (0, 1)")
        if not 0 < self.nu <= 1:
            raise ValueError(f"decision.nu={self.nu!r} must lie in (0, 1]")


@dataclass
class ExperimentConfig:
    """
    Configuration for one simulated experiment.

    Attributes:
        strategy: Which strategy to draw tests from
        source: Source spec ("exact", "worst:EPS", "depolarized:P", "custom:FILE")
        rounds: Number of rounds N
        seed: Master seed
        workers: Worker threads, or None for one per CPU
        chunk_rounds: Rounds per parallel chunk
        decision: Optional parameters for the fidelity decision
    """

    strategy: StrategyRef
    source: str
    rounds: int
    seed: int
    workers: int | None = None
    chunk_rounds: int = DEFAULT_CHUNK_ROUNDS
    decision: DecisionParams | None = None

    def __post_init__(self):
        if not self.source:
            raise ValueError("source must be specified")
        if isinstance(self.rounds, bool) or not isinstance(self.rounds, int) or self.rounds < 1:
            raise ValueError(f"rounds must be a positive integer, got {self.rounds!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")
        check_seed(self.seed)
        if self.workers is not None and self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        if self.chunk_rounds < 1:
            raise ValueError(f"chunk_rounds must be at least 1, got {self.chunk_rounds}")

    @classmethod
    def from_json(cls, json_path: Path) -> "ExperimentConfig":
        """Parse and validate an experiment file.

        Raises:
            FileNotFoundError: If json_path is missing
            ValueError: For unparsable JSON, unknown or missing fields, or
                out-of-range values
        """
        json_path = Path(json_path)
        if not json_path.exists():
            raise FileNotFoundError(f"Experiment file not found: {json_path}")

        if json_path.stat().st_size == 0:
            raise ValueError(f"Experiment file {json_path} is empty")

        try:
            data = json.loads(json_path.read_text())
        except json.JSONDecodeError as e:
            raise ValueError(f"Invalid JSON in {json_path}: {e}") from e
        except OSError as e:
            raise RuntimeError(f"Cannot read experiment file {json_path}: {e}") from e

        if not isinstance(data, dict):
            raise ValueError("Configuration must be a JSON object")

        unknown = set(data) - _TOP_LEVEL_FIELDS
        if unknown:
            raise ValueError(f"Unknown field(s): {', '.join(sorted(unknown))}")

        for required in ("strategy", "source", "rounds", "seed"):
            if required not in data:
                raise ValueError(f"Missing required field: {required}")

        strategy_data = data["strategy"]
        if not isinstance(strategy_data, dict):
            raise ValueError("'strategy' field must be an object")
        params_data = strategy_data.get("params", {})
        if not isinstance(params_data, dict):
            raise ValueError("'strategy.params' field must be an object")
        strategy = StrategyRef(
            family=strategy_data.get("family"),
            params=FamilyParams.from_dict(params_data),
            file=Path(strategy_data["file"]) if "file" in strategy_data else None,
        )

        decision = None
        if data.get("decision") is not None:
            decision_data = data["decision"]
            if not isinstance(decision_data, dict):
                raise ValueError("'decision' field must be an object")
            for required in ("eps", "nu"):
                if required not in decision_data:
                    raise ValueError(f"Missing required field: decision.{required}")
            decision = DecisionParams(
                eps=float(decision_data["eps"]), nu=float(decision_data["nu"])
            )

        source = data["source"]
        if not isinstance(source, str):
            raise ValueError("'source' must be a string")

        return cls(
            strategy=strategy,
            source=source,
            rounds=data["rounds"],
            seed=data["seed"],
            workers=data.get("workers"),
            chunk_rounds=data.get("chunk_rounds", DEFAULT_CHUNK_ROUNDS),
            decision=decision,
        )

    def to_json(self, json_path: Path) -> None:
        """Write the experiment in the form from_json() reads back."""
        json_path = Path(json_path)
        data: dict[str, Any] = {
            "strategy": self.strategy.to_dict(),
            "source": self.source,
            "rounds": self.rounds,
            "seed": self.seed,
            "chunk_rounds": self.chunk_rounds,
        }
        if self.workers is not None:
            data["workers"] = self.workers
        if self.decision is not None:
            data["decision"] = {"eps": self.decision.eps, "nu": self.decision.nu}

        json_path.write_text(json.dumps(data, indent=2) + "\n")
