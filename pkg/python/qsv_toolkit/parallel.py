"""Parallel processing utilities for protocol simulation.

Rounds are split into contiguous chunks that are simulated independently;
results are reassembled in round order, so the output does not depend on
the worker count.
"""

import os
from concurrent.futures import Executor, as_completed
from typing import Callable, NamedTuple, TypeVar

T = TypeVar("T")

# Rounds per chunk when splitting work across an executor.
DEFAULT_CHUNK_ROUNDS = 8192


class RoundChunk(NamedTuple):
    """Half-open range of round indices [start, stop).

    Attributes:
        start: First round index in the chunk
        stop: One past the last round index
    """

    start: int
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start


def get_worker_count(max_workers: int | None = None) -> int:
    """Determine the number of worker threads to use.

    Args:
        max_workers: Explicit worker count, or None for auto-detection

    Returns:
        Number of worker threads (minimum 1)
    """
    if max_workers is not None:
        return max(1, max_workers)

    cpu_count = os.cpu_count()
    if cpu_count is None:
        return 1
    return max(1, cpu_count)


def split_rounds(rounds: int, chunk_rounds: int = DEFAULT_CHUNK_ROUNDS) -> list[RoundChunk]:
    """Split rounds 0..rounds-1 into contiguous chunks of at most chunk_rounds."""
    if rounds < 0:
        raise ValueError(f"Round count must be non-negative, got {rounds}")
    if chunk_rounds < 1:
        raise ValueError(f"Chunk size must be positive, got {chunk_rounds}")
    return [
        RoundChunk(start, min(start + chunk_rounds, rounds))
        for start in range(0, rounds, chunk_rounds)
    ]


def parallel_map_chunks(
    work: Callable[[RoundChunk], T],
    chunks: list[RoundChunk],
    executor: Executor | None = None,
) -> list[T]:
    """Run work on every chunk using the provided executor.

    Args:
        work: Function simulating one chunk; must be safe to call concurrently
        chunks: Chunks to process
        executor: Executor for parallel execution. If None, runs sequentially.

    Returns:
        Results in the same order as chunks
    """
    if not chunks:
        return []

    if executor is None:
        return [work(chunk) for chunk in chunks]

    future_to_index = {}
    for i, chunk in enumerate(chunks):
        future_to_index[executor.submit(work, chunk)] = i

    results = [None] * len(chunks)
    for future in as_completed(future_to_index):
        results[future_to_index[future]] = future.result()

    return results
