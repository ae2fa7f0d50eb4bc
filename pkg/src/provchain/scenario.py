"""End-to-end coffee batch driver: onboarding, six-step lifecycle with
evidence commitments, consumer verification, audit reconstruction, the
deterministic negative-case suite, and the false-input injection experiment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from . import audit
from .analytics import detection_probability
from .batching import BatchPolicy
from .contracts import (
    ActorStatus,
    APPROVE,
    ContractSuite,
    DUPLICATE_STEP,
    ACTOR_INACTIVE,
    LifecycleStep,
    Role,
    STEP_WRITER,
    TOPIC_STEP_ANCHORED,
    UNAUTHORISED,
)
from .errors import DomainError, SuiteFailure, UnknownProduct
from .evidence import EvidenceStore, PinPolicy, ProviderModel
from .ledger import ChainConfig, REVERTED, SimulatedLedger, SUCCESS
from .rng import substream

ALL_STEP_LABELS = tuple(step.label for step in LifecycleStep)


def default_roster() -> dict[Role, str]:
    return {
        Role.PRODUCER: "producer-1",
        Role.PROCESSOR: "processor-1",
        Role.RETAILER: "retailer-1",
        Role.CERTIFIER: "certifier-1",
        Role.REGULATOR: "regulator-1",
        Role.CONSUMER: "consumer-1",
    }


@dataclass(frozen=True)
class InjectionConfig:
    """False-event injection: count, front-door gate strength, audit rate."""

    false_events: int = 100_000
    gate_rejection: float = 0.2
    audit_sampling: float = 0.01


@dataclass
class ScenarioConfig:
    seed: int = 42
    product_id: str = "coffee-batch-001"
    roster: dict[Role, str] = field(default_factory=default_roster)
    # Evidence commitments per lifecycle step; the reference allocation puts
    # the extra weight on origin documentation and totals 13.
    evidence_per_step: tuple[int, ...] = (3, 2, 2, 2, 2, 2)
    evidence_bytes: int = 4096
    certification_gate: bool = False
    skip_steps: tuple[str, ...] = ()
    replicas: int = 2
    providers: int = 2
    provider_availability: float = 1.0
    chain: ChainConfig = field(default_factory=ChainConfig)
    rpc: audit.RpcModel = field(default_factory=audit.RpcModel)
    batcher: BatchPolicy = field(default_factory=BatchPolicy)
    injection: Optional[InjectionConfig] = None

    def __post_init__(self):
        if len(self.evidence_per_step) != len(LifecycleStep):
            raise DomainError("evidence_per_step needs one entry per lifecycle step")
        if any(count < 0 for count in self.evidence_per_step):
            raise DomainError("evidence counts must be >= 0")
        missing = [role for role in Role if role not in self.roster]
        if missing:
            raise DomainError(f"roster is missing roles: {[r.value for r in missing]}")


@dataclass
class ScenarioWorld:
    """One wired-up simulator instance: chain, contracts, evidence store."""

    config: ScenarioConfig
    ledger: SimulatedLedger
    suite: ContractSuite
    store: EvidenceStore
    policy: PinPolicy
    admin: str = "admin"

    @classmethod
    def build(cls, config: ScenarioConfig) -> "ScenarioWorld":
        ledger = SimulatedLedger(config.chain)
        suite = ContractSuite(ledger, admin="admin",
                              certification_gate=config.certification_gate)
        providers = [
            ProviderModel(f"pin-{i + 1}", availability=config.provider_availability)
            for i in range(config.providers)
        ]
        store = EvidenceStore(providers)
        return cls(config, ledger, suite, store, PinPolicy(config.replicas))

    def exec_tx(self, tx_id: str):
        """Seal a block and return the receipt for one just-submitted tx."""
        self.ledger.advance_block()
        return self.ledger.get_receipt(tx_id)

    def register_roster(self) -> None:
        for role, address in self.config.roster.items():
            self.suite.register_actor(self.admin, address, role)
        self.ledger.advance_block()


@dataclass(frozen=True)
class StepOutcome:
    step: str
    status: str
    revert_reason: Optional[str]
    evidence_count: int
    block_number: int


@dataclass(frozen=True)
class ReferenceResult:
    product_id: str
    completeness: float
    steps_anchored: tuple[str, ...]
    step_outcomes: tuple[StepOutcome, ...]
    evidence_anchored: int
    evidence_fetched: int
    evidence_matched: int
    trail_record_count: int
    trace_complete: bool
    anchor_gas: int
    aql: Optional[audit.AqlBreakdown]
    # The live simulator state behind the run (for log export and follow-up
    # queries); never serialized.
    world: Optional[ScenarioWorld] = field(default=None, repr=False, compare=False)

    def to_payload(self) -> dict:
        n = self.evidence_anchored
        fetched = self.evidence_fetched
        payload = {
            "product_id": self.product_id,
            "completeness": self.completeness,
            "steps_anchored": list(self.steps_anchored),
            "step_outcomes": [
                {
                    "step": o.step,
                    "status": o.status,
                    "revert_reason": o.revert_reason,
                    "evidence_count": o.evidence_count,
                    "block_number": o.block_number,
                }
                for o in self.step_outcomes
            ],
            "evidence": {
                "anchored": n,
                "fetched": fetched,
                "matched": self.evidence_matched,
                "R": fetched / n if n else None,
                "M": self.evidence_matched / fetched if fetched else None,
                "V": self.evidence_matched / n if n else None,
            },
            "trail_records": self.trail_record_count,
            "trace_complete": self.trace_complete,
            "anchor_gas": self.anchor_gas,
        }
        if self.aql is not None:
            payload["audit"] = {
                "receipts_ms": self.aql.receipts_ms,
                "timestamps_ms": self.aql.timestamps_ms,
                "volatile": {
                    "decode_ms": self.aql.decode_ms,
                    "sort_ms": self.aql.sort_ms,
                    "total_ms": self.aql.total_ms,
                },
            }
        return payload


def trail_is_complete(trail: audit.AuditTrail) -> bool:
    """Brute-force completeness: the trail's anchored steps are exactly the
    full lifecycle, in ordinal order."""
    labels = [r.payload["step"] for r in trail.records if r.topic == TOPIC_STEP_ANCHORED]
    return tuple(labels) == ALL_STEP_LABELS


def run_reference(config: ScenarioConfig | None = None) -> ReferenceResult:
    """Reference lifecycle walk-through with per-step evidence anchoring.

    Anchors each non-skipped step in order (one block each), stores fresh
    evidence payloads for every commitment, then verifies via the consumer
    trace, audit reconstruction, and evidence re-verification.
    """
    config = config or ScenarioConfig()
    world = ScenarioWorld.build(config)
    world.register_roster()
    suite, ledger, store = world.suite, world.ledger, world.store

    outcomes: list[StepOutcome] = []
    anchor_gas = 0
    for step in LifecycleStep:
        if step.label in config.skip_steps:
            continue
        actor = config.roster[STEP_WRITER[step]]
        cids = []
        for j in range(config.evidence_per_step[step]):
            rng = substream(config.seed, "evidence", step.label, j)
            payload = rng.randbytes(config.evidence_bytes)
            cid, _ = store.put(payload, world.policy, rng)
            cids.append(cid)
        tx_id = suite.anchor_step(actor, config.product_id, step, cids)
        receipt = world.exec_tx(tx_id)
        anchor_gas += receipt.gas_used if receipt.ok else 0
        outcomes.append(StepOutcome(step.label, receipt.status, receipt.revert_reason,
                                    len(cids), receipt.block_number))
        if config.certification_gate and step is LifecycleStep.AT_RETAIL and receipt.ok:
            attest_tx = suite.attest(config.roster[Role.CERTIFIER], config.product_id,
                                     LifecycleStep.AT_RETAIL, APPROVE)
            world.exec_tx(attest_tx)

    anchored = tuple(o.step for o in outcomes if o.status == SUCCESS)

    trail = None
    breakdown = None
    verify_report = None
    if anchored:
        session = audit.RpcSession(config.rpc, substream(config.seed, "audit-rpc"))
        trail, breakdown = audit.reconstruct(ledger, config.product_id, session)
        verify_report = audit.verify_evidence(trail, store,
                                              substream(config.seed, "verify"))
    complete = bool(trail and trail_is_complete(trail))

    return ReferenceResult(
        product_id=config.product_id,
        completeness=1.0 if complete else 0.0,
        steps_anchored=anchored,
        step_outcomes=tuple(outcomes),
        evidence_anchored=len(verify_report.checks) if verify_report else 0,
        evidence_fetched=verify_report.fetched if verify_report else 0,
        evidence_matched=verify_report.matched if verify_report else 0,
        trail_record_count=len(trail.records) if trail else 0,
        trace_complete=complete,
        anchor_gas=anchor_gas,
        aql=breakdown,
        world=world,
    )


# -- negative-case suite ------------------------------------------------------


@dataclass(frozen=True)
class CaseResult:
    name: str
    expected_reason: str
    status: str
    revert_reason: Optional[str]
    state_unchanged: bool
    passed: bool
    detail: str = ""

    def to_payload(self) -> dict:
        return {
            "name": self.name,
            "expected_reason": self.expected_reason,
            "status": self.status,
            "revert_reason": self.revert_reason,
            "state_unchanged": self.state_unchanged,
            "passed": self.passed,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class NegativeSuiteResult:
    cases: tuple[CaseResult, ...]

    @property
    def all_passed(self) -> bool:
        return all(case.passed for case in self.cases)

    def raise_if_failed(self) -> None:
        failed = [case.name for case in self.cases if not case.passed]
        if failed:
            raise SuiteFailure(failed)

    def to_payload(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "rejected": sum(1 for c in self.cases if c.status == REVERTED),
            "cases": [case.to_payload() for case in self.cases],
        }


def _product_snapshot(world: ScenarioWorld, product_id: str):
    try:
        trace = world.suite.get_product_trace(product_id)
        entries = tuple((e.step, e.actor, e.evidence_cids) for e in trace.entries)
    except UnknownProduct:
        entries = None
    return entries, len(world.ledger.logs)


def run_negative_suite(config: ScenarioConfig | None = None,
                       interfere: Optional[Callable[[ScenarioWorld, str], None]] = None,
                       ) -> NegativeSuiteResult:
    """Execute the four accountability negative cases on a fresh world.

    Every case must revert deterministically with its designated reason and
    leave state untouched. `interfere` is an optional fault-injection hook
    run before each case (control experiments flip a case's premise and the
    suite then reports the deviation instead of hiding it).
    """
    config = config or ScenarioConfig()
    world = ScenarioWorld.build(config)
    world.register_roster()
    suite, ledger = world.suite, world.ledger

    # Extra fixtures: a second processor for the collision race and a
    # registered-then-suspended producer.
    suite.register_actor(world.admin, "processor-2", Role.PROCESSOR)
    suite.register_actor(world.admin, "suspended-supplier", Role.PRODUCER)
    ledger.advance_block()
    suite.set_actor_status(world.admin, "suspended-supplier", ActorStatus.SUSPENDED)
    ledger.advance_block()

    producer = config.roster[Role.PRODUCER]
    processor = config.roster[Role.PROCESSOR]
    cases: list[CaseResult] = []

    def run_case(name: str, expected: str, product_id: str, submit: Callable[[], str]) -> None:
        if interfere is not None:
            interfere(world, name)
        before = _product_snapshot(world, product_id)
        receipt = world.exec_tx(submit())
        after = _product_snapshot(world, product_id)
        unchanged = before == after
        passed = (receipt.status == REVERTED
                  and receipt.revert_reason == expected
                  and unchanged)
        cases.append(CaseResult(name, expected, receipt.status, receipt.revert_reason,
                                unchanged, passed))

    run_case(
        "unregistered_write", UNAUTHORISED, "neg-unregistered",
        lambda: suite.anchor_step("mallory", "neg-unregistered", LifecycleStep.PRODUCED),
    )
    run_case(
        "inactive_actor_write", ACTOR_INACTIVE, "neg-suspended",
        lambda: suite.anchor_step("suspended-supplier", "neg-suspended",
                                  LifecycleStep.PRODUCED),
    )

    # Replay: a successful anchor, then the same (product, step) again.
    first = suite.anchor_step(producer, "neg-replay", LifecycleStep.PRODUCED)
    if not world.exec_tx(first).ok:
        raise SuiteFailure(["replay_setup"])
    run_case(
        "replay", DUPLICATE_STEP, "neg-replay",
        lambda: suite.anchor_step(producer, "neg-replay", LifecycleStep.PRODUCED),
    )

    # Concurrent collision: two active processors race the same step inside
    # one block; inclusion order decides the winner.
    for tx in (suite.anchor_step(producer, "neg-collision", LifecycleStep.PRODUCED),
               suite.anchor_step(processor, "neg-collision", LifecycleStep.PROCESSED)):
        if not world.exec_tx(tx).ok:
            raise SuiteFailure(["collision_setup"])
    if interfere is not None:
        interfere(world, "concurrent_collision")
    tx_first = suite.anchor_step(processor, "neg-collision", LifecycleStep.SHIPPED)
    tx_second = suite.anchor_step("processor-2", "neg-collision", LifecycleStep.SHIPPED)
    ledger.advance_block()
    first_receipt = ledger.get_receipt(tx_first)
    second_receipt = ledger.get_receipt(tx_second)
    anchored_logs = [
        log for log in ledger.logs
        if log.topic == TOPIC_STEP_ANCHORED
        and log.payload["product_id"] == "neg-collision"
        and log.payload["step"] == LifecycleStep.SHIPPED.label
    ]
    collision_passed = (first_receipt.ok
                        and second_receipt.status == REVERTED
                        and second_receipt.revert_reason == DUPLICATE_STEP
                        and len(anchored_logs) == 1)
    cases.append(CaseResult(
        name="concurrent_collision",
        expected_reason=DUPLICATE_STEP,
        status=second_receipt.status,
        revert_reason=second_receipt.revert_reason,
        state_unchanged=len(anchored_logs) == 1,
        passed=collision_passed,
        detail=f"winner={first_receipt.status}, anchored_logs={len(anchored_logs)}",
    ))

    return NegativeSuiteResult(tuple(cases))


# -- false-input injection -----------------------------------------------------


@dataclass(frozen=True)
class OracleOutcome:
    events: int
    gate_rejection: float
    audit_sampling: float
    detected: int
    empirical: float
    analytic: float

    def to_payload(self) -> dict:
        return {
            "events": self.events,
            "gate_rejection": self.gate_rejection,
            "audit_sampling": self.audit_sampling,
            "detected": self.detected,
            "empirical": self.empirical,
            "analytic": self.analytic,
        }


def run_oracle_experiment(events: int, gate_rejection: float, audit_sampling: float,
                          seed: int) -> OracleOutcome:
    """Inject false events; each is rejected at the gate with the configured
    probability, survivors are caught when audit sampling selects them."""
    if events < 1:
        raise DomainError(f"events must be >= 1, got {events}")
    analytic = detection_probability(gate_rejection, audit_sampling)
    rng = substream(seed, "oracle-injection", gate_rejection, audit_sampling)
    detected = 0
    for _ in range(events):
        if rng.random() < gate_rejection:
            detected += 1
        elif rng.random() < audit_sampling:
            detected += 1
    return OracleOutcome(
        events=events,
        gate_rejection=gate_rejection,
        audit_sampling=audit_sampling,
        detected=detected,
        empirical=detected / events,
        analytic=analytic,
    )
