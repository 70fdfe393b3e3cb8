"""Shared corpora of random problem instances."""

from __future__ import annotations

import numpy as np
import pytest

from dynbatch import ProblemInstance


def random_instances(count: int, max_n: int = 14, seed: int = 0) -> list[ProblemInstance]:
    """Mixed corpus: uniform and Poisson arrival times, plus degenerate
    shapes (single sample, all-coincident, duplicated times)."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(1, max_n + 1))
        if k % 2 == 0:
            times = np.sort(rng.uniform(0.0, n / 2.0, size=n))
        else:
            times = np.cumsum(rng.exponential(0.5, size=n))
        if k % 17 == 0 and n >= 3:
            times[n // 2] = times[n // 2 - 1]  # force a duplicate arrival time
        out.append(ProblemInstance.from_times(times))
    out.append(ProblemInstance.from_times([0.0]))
    out.append(ProblemInstance.from_times([0.0, 0.0, 0.0]))
    out.append(ProblemInstance.from_times([1.5] * 6))
    return out


@pytest.fixture(scope="session")
def small_corpus() -> list[ProblemInstance]:
    return random_instances(120, max_n=12, seed=2024)
