"""Small descriptive-statistics helpers used by the benchmarks."""

from __future__ import annotations

import math
from typing import Sequence

from .errors import DomainError


def percentile_nearest_rank(samples: Sequence[float], q: float) -> float:
    """Nearest-rank percentile: the ceil(q*n)-th smallest sample.

    q is a fraction in (0, 1]; the result is always an observed sample.
    """
    if not samples:
        raise DomainError("percentile of empty sample set")
    if not 0 < q <= 1:
        raise DomainError(f"percentile fraction must be in (0, 1], got {q}")
    ordered = sorted(samples)
    rank = math.ceil(q * len(ordered))
    return ordered[rank - 1]


def summarize(samples: Sequence[float]) -> dict:
    """p50/p95/mean/max summary of a sample set."""
    if not samples:
        return {"n": 0, "p50": None, "p95": None, "mean": None, "max": None}
    return {
        "n": len(samples),
        "p50": percentile_nearest_rank(samples, 0.50),
        "p95": percentile_nearest_rank(samples, 0.95),
        "mean": sum(samples) / len(samples),
        "max": max(samples),
    }
