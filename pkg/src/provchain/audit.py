"""Audit-trail reconstruction over the exported event-log schema.

Reconstruction runs four measured phases: fetch receipts for the product's
transactions, decode their logs locally, sort canonically by (block number,
tx index, log index), and attach block timestamps. Remote phases charge
simulated round-trips batched into sequential waves of at most `concurrency`
calls, each wave costing the maximum of its members' draws; local phases are
measured as real compute time. Warm caches skip the remote draws entirely.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .contracts import (
    ContractSuite,
    LifecycleStep,
    Role,
    TOPIC_EVIDENCE_ANCHORED,
)
from .distributions import LatencyDistribution, LogNormal
from .errors import DomainError, UnknownCid, UnknownProduct
from .evidence import EvidenceStore, compute_cid, verify
from .ledger import ChainConfig, SimulatedLedger, TxReceipt
from .rng import substream
from .stats import summarize

# Round-trip default calibrated so a 10-call phase at concurrency 8 costs two
# waves of ~265 ms; absolute milliseconds are environment-dependent and are
# not acceptance targets.
DEFAULT_RTT = LogNormal(median_ms=265.0, sigma=0.15)

UNCACHED = "uncached"
CACHED = "cached"


@dataclass(frozen=True)
class RpcModel:
    rtt: LatencyDistribution = DEFAULT_RTT
    concurrency: int = 8

    def __post_init__(self):
        if self.concurrency < 1:
            raise DomainError(f"concurrency must be >= 1, got {self.concurrency}")


class RpcSession:
    """Per-caller latency meter over one round-trip distribution."""

    def __init__(self, model: RpcModel, rng: random.Random):
        self.model = model
        self._rng = rng
        self.total_ms = 0.0
        self.calls = 0

    def draw(self) -> float:
        """One raw round-trip draw (callers doing wave accounting meter it)."""
        self.calls += 1
        return self.model.rtt.sample(self._rng)

    def charge(self) -> float:
        """One serial round-trip, added to the session meter."""
        ms = self.draw()
        self.total_ms += ms
        return ms

    def wave_cost(self, n_calls: int) -> float:
        """Cost of n_calls issued in waves of at most `concurrency`.

        Calls inside a wave run in parallel (cost = max of the draws);
        waves run sequentially. Added to the session meter.
        """
        cost = 0.0
        remaining = n_calls
        while remaining > 0:
            wave = min(remaining, self.model.concurrency)
            cost += max(self.draw() for _ in range(wave))
            remaining -= wave
        self.total_ms += cost
        return cost


@dataclass
class CacheState:
    """Receipt and timestamp caches; hits cost zero round-trips."""

    receipts: dict[str, TxReceipt] = field(default_factory=dict)
    timestamps: dict[int, float] = field(default_factory=dict)

    @classmethod
    def warmed(cls, ledger: SimulatedLedger, tx_ids: Sequence[str]) -> "CacheState":
        cache = cls()
        for tx_id in tx_ids:
            receipt = ledger.get_receipt(tx_id)
            cache.receipts[tx_id] = receipt
            cache.timestamps[receipt.block_number] = ledger.get_block_timestamp(
                receipt.block_number)
        return cache


@dataclass(frozen=True)
class AqlBreakdown:
    """Reconstruction latency decomposition; total is the exact sum."""

    receipts_ms: float
    decode_ms: float
    sort_ms: float
    timestamps_ms: float

    @property
    def total_ms(self) -> float:
        return self.receipts_ms + self.decode_ms + self.sort_ms + self.timestamps_ms


@dataclass(frozen=True)
class TrailRecord:
    topic: str
    payload: dict
    block_number: int
    tx_index: int
    log_index: int
    timestamp: float
    actor: Optional[str]


@dataclass(frozen=True)
class AuditTrail:
    product_id: str
    records: tuple[TrailRecord, ...]


def product_tx_ids(ledger: SimulatedLedger, product_id: str) -> list[str]:
    """Transactions that touched the product, via the indexed-event lookup.

    This is the discovery step an indexer provides for free; it is not one
    of the four measured reconstruction phases.
    """
    seen: list[str] = []
    for log in ledger.logs:
        if log.payload.get("product_id") == product_id:
            tx_id = ledger.tx_id_at(log.block_number, log.tx_index)
            if tx_id not in seen:
                seen.append(tx_id)
    return seen


_ACTOR_FIELDS = ("actor", "submitter", "certifier", "registrant")


def _actor_of(payload: dict) -> Optional[str]:
    for name in _ACTOR_FIELDS:
        if name in payload:
            return payload[name]
    return None


def reconstruct(ledger: SimulatedLedger, product_id: str, session: RpcSession,
                cache: Optional[CacheState] = None) -> tuple[AuditTrail, AqlBreakdown]:
    """Rebuild the product's ordered timeline and measure each phase.

    Raises UnknownProduct when no anchored record references the product.
    The record order is a pure function of chain state, so repeated
    reconstructions return identical trails.
    """
    tx_ids = product_tx_ids(ledger, product_id)
    if not tx_ids:
        raise UnknownProduct(f"no anchored records for product {product_id!r}")

    # Phase 1: fetch receipts (remote, wave-batched; cache hits are free).
    cold_tx = [tx_id for tx_id in tx_ids if cache is None or tx_id not in cache.receipts]
    receipts_ms = session.wave_cost(len(cold_tx)) if cold_tx else 0.0
    receipts: dict[str, TxReceipt] = {}
    for tx_id in tx_ids:
        if cache is not None and tx_id in cache.receipts:
            receipts[tx_id] = cache.receipts[tx_id]
        else:
            receipt = ledger.get_receipt(tx_id)
            receipts[tx_id] = receipt
            if cache is not None:
                cache.receipts[tx_id] = receipt

    # Phase 2: decode logs (local compute, measured).
    t0 = time.perf_counter()
    decoded = []
    for tx_id in tx_ids:
        for log in receipts[tx_id].logs:
            if log.payload.get("product_id") != product_id:
                continue
            decoded.append((log.topic, log.payload, log.block_number, log.tx_index,
                            log.log_index, _actor_of(log.payload)))
    decode_ms = (time.perf_counter() - t0) * 1e3

    # Phase 3: canonical ordering (local compute, measured).
    t0 = time.perf_counter()
    decoded.sort(key=lambda item: (item[2], item[3], item[4]))
    sort_ms = (time.perf_counter() - t0) * 1e3

    # Phase 4: attach block timestamps (remote, wave-batched over unique blocks).
    unique_blocks = sorted({item[2] for item in decoded})
    cold_blocks = [b for b in unique_blocks if cache is None or b not in cache.timestamps]
    timestamps_ms = session.wave_cost(len(cold_blocks)) if cold_blocks else 0.0
    stamps: dict[int, float] = {}
    for number in unique_blocks:
        if cache is not None and number in cache.timestamps:
            stamps[number] = cache.timestamps[number]
        else:
            ts = ledger.get_block_timestamp(number)
            stamps[number] = ts
            if cache is not None:
                cache.timestamps[number] = ts

    records = tuple(
        TrailRecord(topic, payload, block, tx_index, log_index, stamps[block], actor)
        for topic, payload, block, tx_index, log_index, actor in decoded
    )
    breakdown = AqlBreakdown(receipts_ms, decode_ms, sort_ms, timestamps_ms)
    return AuditTrail(product_id, records), breakdown


@dataclass(frozen=True)
class CommitmentCheck:
    cid: str
    step: str
    fetched: bool
    matched: bool


@dataclass(frozen=True)
class EvidenceCheckReport:
    checks: tuple[CommitmentCheck, ...]
    fetched: int
    matched: int
    retrievability: Optional[float]
    match_rate: Optional[float]
    verifiability: Optional[float]


def verify_evidence(trail: AuditTrail, store: EvidenceStore,
                    rng: random.Random) -> EvidenceCheckReport:
    """Re-fetch and re-verify every evidence commitment in the trail.

    Failures are recorded per commitment, never raised; rates are None on
    an empty trail.
    """
    checks = []
    for record in trail.records:
        if record.topic != TOPIC_EVIDENCE_ANCHORED:
            continue
        cid = record.payload["cid"]
        try:
            result = store.get(cid, rng)
        except UnknownCid:
            checks.append(CommitmentCheck(cid, record.payload.get("step", "?"), False, False))
            continue
        matched = bool(result.ok and verify(cid, result.data))
        checks.append(CommitmentCheck(cid, record.payload.get("step", "?"),
                                      result.ok, matched))
    n = len(checks)
    fetched = sum(1 for c in checks if c.fetched)
    matched = sum(1 for c in checks if c.matched)
    return EvidenceCheckReport(
        checks=tuple(checks),
        fetched=fetched,
        matched=matched,
        retrievability=fetched / n if n else None,
        match_rate=matched / fetched if fetched else None,
        verifiability=matched / n if n else None,
    )


@dataclass(frozen=True)
class AuditWorkload:
    ledger: SimulatedLedger
    suite: ContractSuite
    product_id: str
    tx_count: int
    event_count: int
    block_count: int


def build_audit_workload(chain: ChainConfig | None = None,
                         product_id: str = "audit-batch-001") -> AuditWorkload:
    """Construct the reference reconstruction workload on a fresh chain:
    10 transactions emitting 15 product events across 10 unique blocks."""
    ledger = SimulatedLedger(chain or ChainConfig())
    suite = ContractSuite(ledger, admin="admin")
    actors = {
        Role.PRODUCER: "producer-1",
        Role.PROCESSOR: "processor-1",
        Role.RETAILER: "retailer-1",
    }
    for role, address in actors.items():
        suite.register_actor("admin", address, role)
    ledger.advance_block()

    # Five lifecycle anchors with one evidence commitment each (two events
    # per tx), then five single-commitment rollup batches (one event each),
    # one transaction per block.
    steps = [LifecycleStep.PRODUCED, LifecycleStep.PROCESSED, LifecycleStep.SHIPPED,
             LifecycleStep.RECEIVED, LifecycleStep.AT_RETAIL]
    for i, step in enumerate(steps):
        cid = compute_cid(f"{product_id}/anchor-evidence-{i}".encode())
        writer = actors[
            {LifecycleStep.PRODUCED: Role.PRODUCER,
             LifecycleStep.PROCESSED: Role.PROCESSOR,
             LifecycleStep.SHIPPED: Role.PROCESSOR}.get(step, Role.RETAILER)]
        suite.anchor_step(writer, product_id, step, [cid])
        ledger.advance_block()
    for i in range(5):
        cid = compute_cid(f"{product_id}/extra-evidence-{i}".encode())
        suite.submit_cid_batch("retailer-1", [(product_id, LifecycleStep.AT_RETAIL, cid)])
        ledger.advance_block()

    tx_ids = product_tx_ids(ledger, product_id)
    events = sum(1 for log in ledger.logs if log.payload.get("product_id") == product_id)
    blocks = {ledger.get_receipt(tx).block_number for tx in tx_ids}
    return AuditWorkload(ledger, suite, product_id, len(tx_ids), events, len(blocks))


def run_aql_benchmark(ledger: SimulatedLedger, product_id: str,
                      model: RpcModel | None = None, runs: int = 30, warmup: int = 3,
                      regimes: Sequence[str] = (UNCACHED, CACHED),
                      seed: int = 0) -> dict:
    """Repeated reconstruction benchmark with warmup runs discarded.

    The cached regime pre-populates receipt and timestamp caches once, so
    measured runs pay local compute only.
    """
    if runs < 1 or warmup < 0:
        raise DomainError("need runs >= 1 and warmup >= 0")
    model = model or RpcModel()
    report: dict = {
        "runs": runs,
        "warmup": warmup,
        "concurrency": model.concurrency,
        "regimes": {},
    }
    for regime in regimes:
        if regime not in (UNCACHED, CACHED):
            raise DomainError(f"unknown regime {regime!r}")
        warm = None
        if regime == CACHED:
            warm = CacheState.warmed(ledger, product_tx_ids(ledger, product_id))
        samples: dict[str, list[float]] = {
            "receipts_ms": [], "decode_ms": [], "sort_ms": [], "timestamps_ms": [],
            "total_ms": [],
        }
        for run in range(warmup + runs):
            session = RpcSession(model, substream(seed, "aql", regime, run))
            _, breakdown = reconstruct(ledger, product_id, session, cache=warm)
            if run < warmup:
                continue
            samples["receipts_ms"].append(breakdown.receipts_ms)
            samples["decode_ms"].append(breakdown.decode_ms)
            samples["sort_ms"].append(breakdown.sort_ms)
            samples["timestamps_ms"].append(breakdown.timestamps_ms)
            samples["total_ms"].append(breakdown.total_ms)
        # Simulated RPC phases are seed-deterministic; decode/sort (and hence
        # the total) are real compute time, so they live under the volatile
        # key that report canonicalization strips.
        report["regimes"][regime] = {
            "receipts_ms": summarize(samples["receipts_ms"]),
            "timestamps_ms": summarize(samples["timestamps_ms"]),
            "volatile": {
                "decode_ms": summarize(samples["decode_ms"]),
                "sort_ms": summarize(samples["sort_ms"]),
                "total_ms": summarize(samples["total_ms"]),
            },
        }
    return report
