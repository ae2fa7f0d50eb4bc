"""Latency distributions for simulated network round-trips and storage I/O."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class Constant:
    """Degenerate distribution; every draw returns the same value."""

    ms: float

    def __post_init__(self):
        if self.ms < 0:
            raise DomainError(f"latency must be >= 0, got {self.ms}")

    def sample(self, rng: random.Random) -> float:
        return self.ms


@dataclass(frozen=True)
class LogNormal:
    """Log-normal latency with the given median; sigma is the log-space spread."""

    median_ms: float
    sigma: float = 0.3

    def __post_init__(self):
        if self.median_ms <= 0:
            raise DomainError(f"median must be > 0, got {self.median_ms}")
        if self.sigma < 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")

    def sample(self, rng: random.Random) -> float:
        return self.median_ms * math.exp(self.sigma * rng.gauss(0.0, 1.0))


LatencyDistribution = Constant | LogNormal


def parse_distribution(spec: object) -> LatencyDistribution:
    """Build a distribution from a config value.

    Accepts a bare number (constant milliseconds) or a mapping with a
    ``kind`` of ``constant`` or ``lognormal``.
    """
    if isinstance(spec, (int, float)):
        return Constant(float(spec))
    if isinstance(spec, dict):
        kind = spec.get("kind", "constant")
        if kind == "constant":
            return Constant(float(spec["ms"]))
        if kind == "lognormal":
            return LogNormal(float(spec["median_ms"]), float(spec.get("sigma", 0.3)))
        raise DomainError(f"unknown latency distribution kind: {kind!r}")
    raise DomainError(f"cannot parse latency distribution from {spec!r}")
