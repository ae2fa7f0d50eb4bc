"""Executable contract suite: actor registry, lifecycle manager, CID rollup,
document registry, and a payment-router stub.

All state mutation happens inside block execution (the suite registers
itself as the ledger's executor), so submission helpers only queue
transactions and authorisation failures surface as reverted receipts, never
as partially applied state. Each executor method validates every
precondition before touching state, which gives revert purity by
construction.

Write authorisation follows the role model: lifecycle steps map to exactly
one writer role, oversight roles (Regulator, Consumer) never hold write
permission for anchors, and replay protection keys lifecycle anchors by
(product_id, step) so each step anchors at most once per product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Optional, Sequence

from .errors import DomainError, EmptyBatch, UnknownProduct
from .ledger import ContractCall, ExecutionResult, PendingTx, SimulatedLedger


class Role(str, Enum):
    PRODUCER = "Producer"
    PROCESSOR = "Processor"
    RETAILER = "Retailer"
    CERTIFIER = "Certifier"
    REGULATOR = "Regulator"
    CONSUMER = "Consumer"


class ActorStatus(str, Enum):
    ACTIVE = "Active"
    SUSPENDED = "Suspended"
    REVOKED = "Revoked"


class LifecycleStep(IntEnum):
    PRODUCED = 0
    PROCESSED = 1
    SHIPPED = 2
    RECEIVED = 3
    AT_RETAIL = 4
    SOLD = 5

    @property
    def label(self) -> str:
        return _STEP_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "LifecycleStep":
        for step, name in _STEP_LABELS.items():
            if name == label:
                return step
        raise DomainError(f"unknown lifecycle step {label!r}")


_STEP_LABELS = {
    LifecycleStep.PRODUCED: "Produced",
    LifecycleStep.PROCESSED: "Processed",
    LifecycleStep.SHIPPED: "Shipped",
    LifecycleStep.RECEIVED: "Received",
    LifecycleStep.AT_RETAIL: "AtRetail",
    LifecycleStep.SOLD: "Sold",
}

# Writer role per lifecycle step. Shipped is assigned to the Processor for
# want of a dedicated logistics role.
STEP_WRITER: dict[LifecycleStep, Role] = {
    LifecycleStep.PRODUCED: Role.PRODUCER,
    LifecycleStep.PROCESSED: Role.PROCESSOR,
    LifecycleStep.SHIPPED: Role.PROCESSOR,
    LifecycleStep.RECEIVED: Role.RETAILER,
    LifecycleStep.AT_RETAIL: Role.RETAILER,
    LifecycleStep.SOLD: Role.RETAILER,
}

# Revert reasons (receipt-level, deterministic).
NOT_ADMIN = "NotAdmin"
ALREADY_REGISTERED = "AlreadyRegistered"
UNKNOWN_ACTOR = "UnknownActor"
UNAUTHORISED = "Unauthorised"
ACTOR_INACTIVE = "ActorInactive"
WRONG_ROLE = "WrongRole"
OUT_OF_ORDER = "OutOfOrder"
DUPLICATE_STEP = "DuplicateStep"
GATE_NOT_SATISFIED = "GateNotSatisfied"

# Event topics (the exported log schema consumed by audit reconstruction).
TOPIC_REGISTERED_ACTOR = "RegisteredActor"
TOPIC_STATUS_CHANGED = "StatusChanged"
TOPIC_STEP_ANCHORED = "StepAnchored"
TOPIC_EVIDENCE_ANCHORED = "EvidenceAnchored"
TOPIC_DOCUMENT_REGISTERED = "DocumentRegistered"
TOPIC_ATTESTATION = "Attestation"

APPROVE = "Approve"
REJECT = "Reject"


@dataclass
class ActorRecord:
    address: str
    role: Role
    status: ActorStatus


@dataclass(frozen=True)
class HistoryEntry:
    step: LifecycleStep
    actor: str
    tx_id: str
    evidence_cids: tuple[str, ...]


@dataclass(frozen=True)
class AttestationRecord:
    product_id: str
    step: LifecycleStep
    verdict: str
    certifier: str
    evidence_cid: Optional[str]
    tx_id: str


@dataclass
class ProductRecord:
    product_id: str
    history: list[HistoryEntry] = field(default_factory=list)

    @property
    def next_step(self) -> Optional[LifecycleStep]:
        """The next anchorable step, or None once the lifecycle is complete."""
        if len(self.history) == len(LifecycleStep):
            return None
        return LifecycleStep(len(self.history))


@dataclass(frozen=True)
class DocumentVersion:
    doc_id: str
    cid: str
    version: int
    registrant: str
    tx_id: str


@dataclass(frozen=True)
class ProductTrace:
    """Read-only ordered history view, open to every role."""

    product_id: str
    entries: tuple[HistoryEntry, ...]
    attestations: tuple[AttestationRecord, ...]
    next_step_label: str

    @property
    def complete(self) -> bool:
        return self.next_step_label == "Complete"


class ContractSuite:
    """State machines executed by the ledger during block sealing."""

    def __init__(self, ledger: SimulatedLedger, admin: str = "admin",
                 certification_gate: bool = False):
        self.ledger = ledger
        self.admin = admin
        self.certification_gate = certification_gate
        self._actors: dict[str, ActorRecord] = {}
        self._products: dict[str, ProductRecord] = {}
        self._used_step_keys: set[tuple[str, int]] = set()
        self._attestations: dict[str, list[AttestationRecord]] = {}
        self._documents: dict[str, list[DocumentVersion]] = {}
        self._rollup_count = 0
        ledger.attach_executor(self.execute)

    # -- transaction submission -------------------------------------------

    def register_actor(self, caller: str, address: str, role: Role) -> str:
        call = ContractCall("actor_registry", "register_actor",
                            {"address": address, "role": Role(role).value})
        return self.ledger.submit_call(caller, call, self._admin_gas())

    def set_actor_status(self, caller: str, address: str, status: ActorStatus) -> str:
        call = ContractCall("actor_registry", "set_actor_status",
                            {"address": address, "status": ActorStatus(status).value})
        return self.ledger.submit_call(caller, call, self._admin_gas())

    def anchor_step(self, caller: str, product_id: str, step: LifecycleStep,
                    evidence_cids: Sequence[str] = ()) -> str:
        """Queue a lifecycle anchor; all checks run at execution time."""
        step = LifecycleStep(step)
        gas = self.ledger.gas_of_batch(1 + len(evidence_cids))
        call = ContractCall("process_manager", "anchor_step", {
            "product_id": product_id,
            "step": step.label,
            "evidence_cids": tuple(evidence_cids),
        })
        return self.ledger.submit_call(caller, call, gas)

    def submit_cid_batch(self, caller: str,
                         commitments: Sequence[tuple[str, LifecycleStep, str]]) -> str:
        """Queue a batched evidence-commitment append (no lifecycle transition)."""
        if len(commitments) < 1:
            raise EmptyBatch("cid batch must contain at least one commitment")
        gas = self.ledger.gas_of_batch(len(commitments))
        normalized = tuple(
            (product_id, LifecycleStep(step).label, cid)
            for product_id, step, cid in commitments
        )
        call = ContractCall("cid_rollup", "submit_cid_batch", {"commitments": normalized})
        return self.ledger.submit_call(caller, call, gas)

    def register_document(self, caller: str, doc_id: str, cid: str) -> str:
        call = ContractCall("document_registry", "register_document",
                            {"doc_id": doc_id, "cid": cid})
        return self.ledger.submit_call(caller, call, self._admin_gas())

    def attest(self, caller: str, product_id: str, step: LifecycleStep, verdict: str,
               evidence_cid: Optional[str] = None) -> str:
        if verdict not in (APPROVE, REJECT):
            raise DomainError(f"verdict must be {APPROVE!r} or {REJECT!r}, got {verdict!r}")
        call = ContractCall("process_manager", "attest", {
            "product_id": product_id,
            "step": LifecycleStep(step).label,
            "verdict": verdict,
            "evidence_cid": evidence_cid,
        })
        return self.ledger.submit_call(caller, call, self._admin_gas())

    def route_payment(self, caller: str, product_id: str, amount_usd: float = 0.0) -> str:
        """PaymentRouter stub: accepted, no state change, no events."""
        call = ContractCall("payment_router", "route_payment",
                            {"product_id": product_id, "amount_usd": amount_usd})
        return self.ledger.submit_call(caller, call, self._admin_gas())

    def _admin_gas(self) -> int:
        # Non-batch calls are charged one commitment slot; the calibrated
        # constant is the only gas rate in the model.
        return self.ledger.config.gas_per_commitment

    # -- read-only views ----------------------------------------------------

    def get_actor(self, address: str) -> Optional[ActorRecord]:
        record = self._actors.get(address)
        if record is None:
            return None
        return ActorRecord(record.address, record.role, record.status)

    def get_product_trace(self, product_id: str) -> ProductTrace:
        product = self._products.get(product_id)
        if product is None:
            raise UnknownProduct(f"no history for product {product_id!r}")
        next_step = product.next_step
        return ProductTrace(
            product_id=product_id,
            entries=tuple(product.history),
            attestations=tuple(self._attestations.get(product_id, ())),
            next_step_label="Complete" if next_step is None else next_step.label,
        )

    def get_documents(self, doc_id: str) -> tuple[DocumentVersion, ...]:
        return tuple(self._documents.get(doc_id, ()))

    @property
    def rollup_commitment_count(self) -> int:
        return self._rollup_count

    def step_key_used(self, product_id: str, step: LifecycleStep) -> bool:
        return (product_id, int(step)) in self._used_step_keys

    # -- execution (called by the ledger inside advance_block) --------------

    def execute(self, tx: PendingTx) -> ExecutionResult:
        handler = getattr(self, f"_exec_{tx.call.method}", None)
        if handler is None:
            return ExecutionResult.revert(f"UnknownMethod:{tx.call.method}")
        self._executing_tx_id = tx.tx_id
        try:
            return handler(tx.sender, tx.call.args)
        finally:
            self._executing_tx_id = "?"

    def _exec_register_actor(self, sender: str, args: dict) -> ExecutionResult:
        if sender != self.admin:
            return ExecutionResult.revert(NOT_ADMIN)
        address = args["address"]
        if address in self._actors:
            return ExecutionResult.revert(ALREADY_REGISTERED)
        role = Role(args["role"])
        self._actors[address] = ActorRecord(address, role, ActorStatus.ACTIVE)
        return ExecutionResult.success([
            (TOPIC_REGISTERED_ACTOR, {"address": address, "role": role.value}),
        ])

    def _exec_set_actor_status(self, sender: str, args: dict) -> ExecutionResult:
        if sender != self.admin:
            return ExecutionResult.revert(NOT_ADMIN)
        address = args["address"]
        record = self._actors.get(address)
        if record is None:
            return ExecutionResult.revert(UNKNOWN_ACTOR)
        status = ActorStatus(args["status"])
        record.status = status
        return ExecutionResult.success([
            (TOPIC_STATUS_CHANGED, {"address": address, "status": status.value}),
        ])

    def _check_active(self, sender: str) -> Optional[str]:
        """Shared registered+active gate; returns a revert reason or None."""
        actor = self._actors.get(sender)
        if actor is None:
            return UNAUTHORISED
        if actor.status is not ActorStatus.ACTIVE:
            return ACTOR_INACTIVE
        return None

    def _exec_anchor_step(self, sender: str, args: dict) -> ExecutionResult:
        reason = self._check_active(sender)
        if reason:
            return ExecutionResult.revert(reason)
        actor = self._actors[sender]
        product_id = args["product_id"]
        step = LifecycleStep.from_label(args["step"])
        cids = tuple(args["evidence_cids"])

        if STEP_WRITER[step] is not actor.role:
            return ExecutionResult.revert(WRONG_ROLE)
        # Replay guard first: a consumed (product, step) key always reports
        # DuplicateStep, even when the step is also out of order by now.
        if (product_id, int(step)) in self._used_step_keys:
            return ExecutionResult.revert(DUPLICATE_STEP)
        product = self._products.get(product_id)
        expected = LifecycleStep.PRODUCED if product is None else product.next_step
        if expected is None or step is not expected:
            return ExecutionResult.revert(OUT_OF_ORDER)
        if self.certification_gate and step is LifecycleStep.SOLD:
            if not self._has_approval(product_id, LifecycleStep.AT_RETAIL):
                return ExecutionResult.revert(GATE_NOT_SATISFIED)

        if product is None:
            product = ProductRecord(product_id)
            self._products[product_id] = product
        tx_id = self._current_tx_id()
        product.history.append(HistoryEntry(step, sender, tx_id, cids))
        self._used_step_keys.add((product_id, int(step)))
        events = [(TOPIC_STEP_ANCHORED, {
            "product_id": product_id,
            "step": step.label,
            "actor": sender,
            "evidence_count": len(cids),
        })]
        for cid in cids:
            events.append((TOPIC_EVIDENCE_ANCHORED, {
                "product_id": product_id,
                "step": step.label,
                "cid": cid,
                "submitter": sender,
            }))
        return ExecutionResult.success(events)

    def _exec_submit_cid_batch(self, sender: str, args: dict) -> ExecutionResult:
        reason = self._check_active(sender)
        if reason:
            return ExecutionResult.revert(reason)
        events = []
        for product_id, step_label, cid in args["commitments"]:
            events.append((TOPIC_EVIDENCE_ANCHORED, {
                "product_id": product_id,
                "step": step_label,
                "cid": cid,
                "submitter": sender,
            }))
        self._rollup_count += len(events)
        return ExecutionResult.success(events)

    def _exec_register_document(self, sender: str, args: dict) -> ExecutionResult:
        reason = self._check_active(sender)
        if reason:
            return ExecutionResult.revert(reason)
        doc_id = args["doc_id"]
        cid = args["cid"]
        versions = self._documents.setdefault(doc_id, [])
        version = DocumentVersion(doc_id, cid, len(versions) + 1, sender,
                                  self._current_tx_id())
        versions.append(version)
        return ExecutionResult.success([
            (TOPIC_DOCUMENT_REGISTERED, {
                "doc_id": doc_id,
                "cid": cid,
                "version": version.version,
                "registrant": sender,
            }),
        ])

    def _exec_attest(self, sender: str, args: dict) -> ExecutionResult:
        reason = self._check_active(sender)
        if reason:
            return ExecutionResult.revert(reason)
        if self._actors[sender].role is not Role.CERTIFIER:
            return ExecutionResult.revert(WRONG_ROLE)
        product_id = args["product_id"]
        step = LifecycleStep.from_label(args["step"])
        record = AttestationRecord(product_id, step, args["verdict"], sender,
                                   args.get("evidence_cid"), self._current_tx_id())
        self._attestations.setdefault(product_id, []).append(record)
        return ExecutionResult.success([
            (TOPIC_ATTESTATION, {
                "product_id": product_id,
                "step": step.label,
                "verdict": record.verdict,
                "certifier": sender,
                "evidence_cid": record.evidence_cid,
            }),
        ])

    def _exec_route_payment(self, sender: str, args: dict) -> ExecutionResult:
        return ExecutionResult.success()

    def _has_approval(self, product_id: str, step: LifecycleStep) -> bool:
        return any(
            record.step is step and record.verdict == APPROVE
            for record in self._attestations.get(product_id, ())
        )

    def _current_tx_id(self) -> str:
        # Execution is single-writer inside advance_block, one tx at a time,
        # so tracking the executing tx in a field is safe.
        return self._executing_tx_id

    _executing_tx_id: str = "?"
