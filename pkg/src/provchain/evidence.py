"""Content-addressed evidence store with replication and churn modelling.

Objects are addressed by a digest-based content id; integrity verification
recomputes the id from retrieved bytes, so tampering is always detectable
regardless of provider availability. Availability is modelled per provider:
each retrieval attempt succeeds independently with the provider's
availability probability, and pinned replicas are tried in registration
order until one responds.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .distributions import LatencyDistribution, LogNormal
from .errors import DomainError, InsufficientProviders, UnknownCid
from .rng import substream
from .stats import percentile_nearest_rank

CID_PREFIX = "cid1-"

# Log-normal defaults calibrated to the reference run's observed medians and
# p95/p50 spread; absolute latencies are environment-dependent and never
# acceptance targets.
DEFAULT_UPLOAD_LATENCY = LogNormal(median_ms=737.0, sigma=1.19)
DEFAULT_FETCH_LATENCY = LogNormal(median_ms=361.0, sigma=0.46)

DEFAULT_LOOP_SIZES = (10 * 1024, 100 * 1024, 1024 * 1024, 5 * 1024 * 1024)


def compute_cid(data: bytes) -> str:
    """Deterministic content id: prefixed lowercase hex of a SHA-256 digest."""
    return CID_PREFIX + hashlib.sha256(data).hexdigest()


def verify(cid: str, data: bytes) -> bool:
    """True iff the bytes recompute to the given content id."""
    return compute_cid(data) == cid


@dataclass
class ProviderModel:
    """One pinning provider: availability per attempt plus latency draws."""

    provider_id: str
    availability: float = 1.0
    fetch_latency: LatencyDistribution = DEFAULT_FETCH_LATENCY
    upload_latency: LatencyDistribution = DEFAULT_UPLOAD_LATENCY
    pinned: set = field(default_factory=set)

    def __post_init__(self):
        if not 0.0 <= self.availability <= 1.0:
            raise DomainError(f"availability must be in [0, 1], got {self.availability}")


@dataclass(frozen=True)
class PinPolicy:
    """Replicate each object across this many independent providers."""

    replicas: int = 2

    def __post_init__(self):
        if self.replicas < 1:
            raise DomainError(f"replication factor must be >= 1, got {self.replicas}")


@dataclass(frozen=True)
class FetchResult:
    ok: bool
    data: Optional[bytes]
    tries: int
    latency_ms: float


class EvidenceStore:
    """Pinned object store shared by a fixed, ordered set of providers."""

    def __init__(self, providers: Sequence[ProviderModel]):
        ids = [p.provider_id for p in providers]
        if len(set(ids)) != len(ids):
            raise DomainError("provider ids must be unique")
        self.providers = list(providers)
        self._objects: dict[str, bytes] = {}
        self.upload_samples: list[tuple[str, int, float]] = []  # (provider, size, ms)

    def put(self, data: bytes, policy: PinPolicy, rng: random.Random) -> tuple[str, float]:
        """Pin the object on the first `replicas` providers (registration order).

        Returns (cid, upload_ms) where upload_ms is the slowest replica's
        draw: replication completes when the last pin confirms. One latency
        sample per provider is also recorded.
        """
        if policy.replicas > len(self.providers):
            raise InsufficientProviders(
                f"policy wants {policy.replicas} replicas, only {len(self.providers)} providers")
        cid = compute_cid(data)
        self._objects[cid] = data
        draws = []
        for provider in self.providers[:policy.replicas]:
            provider.pinned.add(cid)
            ms = provider.upload_latency.sample(rng)
            self.upload_samples.append((provider.provider_id, len(data), ms))
            draws.append(ms)
        return cid, max(draws)

    def get(self, cid: str, rng: random.Random) -> FetchResult:
        """Try pinned providers in order; each attempt succeeds with its p.

        Raises UnknownCid when nothing ever pinned the id; returns a failed
        FetchResult (with the full attempt latency) when all replicas are
        down for this retrieval.
        """
        holders = [p for p in self.providers if cid in p.pinned]
        if not holders:
            raise UnknownCid(f"cid {cid!r} was never pinned on any provider")
        latency = 0.0
        for tries, provider in enumerate(holders, start=1):
            available = rng.random() < provider.availability
            latency += provider.fetch_latency.sample(rng)
            if available:
                return FetchResult(True, self._objects[cid], tries, latency)
        return FetchResult(False, None, len(holders), latency)

    def pinned_on(self, cid: str) -> list[str]:
        return [p.provider_id for p in self.providers if cid in p.pinned]

    def tamper(self, cid: str, data: bytes) -> None:
        """Corrupt the stored payload without re-keying (test fault injection)."""
        if cid not in self._objects:
            raise UnknownCid(f"cid {cid!r} not stored")
        self._objects[cid] = data


def retrieval_availability(availability: float, replicas: int) -> float:
    """Probability at least one of `replicas` independent pins responds."""
    if not 0.0 <= availability <= 1.0:
        raise DomainError(f"availability must be in [0, 1], got {availability}")
    if replicas < 1:
        raise DomainError(f"replicas must be >= 1, got {replicas}")
    return 1.0 - (1.0 - availability) ** replicas


def expected_tries(availability: float, replicas: int) -> float:
    """Mean number of attempts, conditioned on eventual success.

    Attempt i succeeds first with probability (1-p)^(i-1) * p; conditioning
    divides by the overall retrieval probability.
    """
    if not 0.0 < availability <= 1.0:
        raise DomainError(f"availability must be in (0, 1], got {availability}")
    if replicas < 1:
        raise DomainError(f"replicas must be >= 1, got {replicas}")
    p = availability
    weights = [(1.0 - p) ** (i - 1) * p for i in range(1, replicas + 1)]
    # Same-form denominator (== 1 - (1-p)^k) keeps the single-replica case
    # exactly 1.0 in floating point.
    return sum(i * w for i, w in enumerate(weights, start=1)) / sum(weights)


@dataclass(frozen=True)
class ChurnSample:
    """Monte-Carlo estimate of the churn model for one (p, replicas) cell."""

    trials: int
    successes: int
    rate: float
    mean_tries_on_success: Optional[float]


def simulate_churn(availability: float, replicas: int, trials: int,
                   rng: random.Random) -> ChurnSample:
    """Bernoulli retrieval trials against the per-attempt availability model."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not 0.0 <= availability <= 1.0:
        raise DomainError(f"availability must be in [0, 1], got {availability}")
    successes = 0
    total_tries = 0
    for _ in range(trials):
        for attempt in range(1, replicas + 1):
            if rng.random() < availability:
                successes += 1
                total_tries += attempt
                break
    mean_tries = total_tries / successes if successes else None
    return ChurnSample(trials, successes, successes / trials, mean_tries)


@dataclass(frozen=True)
class SizeBucket:
    size: int
    upload_ms_p50: float
    upload_ms_p95: float
    fetch_ms_p50: float
    fetch_ms_p95: float


@dataclass(frozen=True)
class EvidenceReport:
    """Outcome of the upload/fetch/verify loop over the object corpus."""

    n: int
    per_size: tuple[SizeBucket, ...]
    fetched: int
    matched: int
    retrievability: Optional[float]
    match_rate: Optional[float]
    verifiability: Optional[float]
    failures: int

    def to_dict(self) -> dict:
        # Exported JSON schema: {n, per_size, R, M, V, failures}.
        return {
            "n": self.n,
            "per_size": [
                {
                    "size": b.size,
                    "upload_ms": {"p50": b.upload_ms_p50, "p95": b.upload_ms_p95},
                    "fetch_ms": {"p50": b.fetch_ms_p50, "p95": b.fetch_ms_p95},
                }
                for b in self.per_size
            ],
            "R": self.retrievability,
            "M": self.match_rate,
            "V": self.verifiability,
            "failures": self.failures,
        }


def run_evidence_loop(store: EvidenceStore, policy: PinPolicy, seed: int,
                      sizes: Sequence[int] = DEFAULT_LOOP_SIZES,
                      repeats: int = 10) -> EvidenceReport:
    """Generate, upload, fetch, and verify one object corpus.

    Each object gets a dedicated random substream, so the corpus is
    bit-for-bit reproducible for a given seed. Failures are counted, never
    thrown: a lost object lowers retrievability, a corrupted one lowers the
    match rate, and the match rate is computed only over fetched objects.
    """
    n = 0
    fetched = 0
    matched = 0
    buckets = []
    for size in sizes:
        upload_ms: list[float] = []
        fetch_ms: list[float] = []
        for repeat in range(repeats):
            rng = substream(seed, "evidence-loop", size, repeat)
            payload = rng.randbytes(size)
            expected_cid = compute_cid(payload)
            cid, up_ms = store.put(payload, policy, rng)
            assert cid == expected_cid  # put keys by content, nothing else
            upload_ms.append(up_ms)
            result = store.get(cid, rng)
            fetch_ms.append(result.latency_ms)
            n += 1
            if result.ok:
                fetched += 1
                if verify(cid, result.data):
                    matched += 1
        if upload_ms:
            buckets.append(SizeBucket(
                size=size,
                upload_ms_p50=percentile_nearest_rank(upload_ms, 0.50),
                upload_ms_p95=percentile_nearest_rank(upload_ms, 0.95),
                fetch_ms_p50=percentile_nearest_rank(fetch_ms, 0.50),
                fetch_ms_p95=percentile_nearest_rank(fetch_ms, 0.95),
            ))
    return EvidenceReport(
        n=n,
        per_size=tuple(buckets),
        fetched=fetched,
        matched=matched,
        retrievability=fetched / n if n else None,
        match_rate=matched / fetched if fetched else None,
        verifiability=matched / n if n else None,
        failures=n - matched,
    )
