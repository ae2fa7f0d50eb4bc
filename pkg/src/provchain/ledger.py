"""Deterministic simulated Layer-2 ledger.

Transactions queue FIFO, blocks seal on demand at a fixed interval, and gas
is accounted with a single calibrated per-commitment constant. Contract
execution is delegated to an attached executor (see ``contracts``); without
one, every included transaction succeeds and emits no logs.

Time is purely simulated: block N carries timestamp N * block_interval and
wall clock never enters chain state.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import IO, Callable, Optional, Sequence

from .errors import DomainError, EmptyBatch, GasCapExceeded, NotFound

SUCCESS = "success"
REVERTED = "reverted"


@dataclass(frozen=True)
class ChainConfig:
    """Calibration constants for the simulated chain.

    Defaults reproduce the reference deployment: a two-second block
    interval, 62,841 gas per anchored commitment, a per-transaction cap
    that admits at most 1,022 commitments, and a block gas limit sized for
    2,800 commitments per block (1,400/s sustained).
    """

    block_interval: float = 2.0
    per_tx_gas_cap: int = 64_250_000
    block_gas_limit: int = 176_000_000
    gas_per_commitment: int = 62_841
    base_gas_price: float = 1.0

    def __post_init__(self):
        for name in ("block_interval", "per_tx_gas_cap", "block_gas_limit",
                     "gas_per_commitment", "base_gas_price"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be strictly positive")
        if self.per_tx_gas_cap > self.block_gas_limit:
            raise DomainError("per_tx_gas_cap cannot exceed block_gas_limit")

    def gas_of_batch(self, commitments: int) -> int:
        """Gas for a batch of CID commitments: linear at the calibrated rate."""
        if commitments < 1:
            raise EmptyBatch(f"batch must contain at least one commitment, got {commitments}")
        return commitments * self.gas_per_commitment

    @property
    def max_commitments_per_tx(self) -> int:
        return self.per_tx_gas_cap // self.gas_per_commitment

    @property
    def max_commitments_per_block(self) -> int:
        return self.block_gas_limit // self.gas_per_commitment

    @property
    def peak_commitment_rate(self) -> float:
        """Sustained commitments/second with fully packed blocks."""
        return self.max_commitments_per_block / self.block_interval


@dataclass(frozen=True)
class ContractCall:
    """Descriptor for a contract method invocation."""

    contract: str
    method: str
    args: dict


@dataclass(frozen=True)
class PendingTx:
    tx_id: str
    sender: str
    call: ContractCall
    gas_estimate: int
    submit_time: float


@dataclass(frozen=True)
class LogRecord:
    """One emitted event; (block_number, tx_index, log_index) totally orders logs."""

    topic: str
    payload: dict
    block_number: int
    tx_index: int
    log_index: int
    timestamp: float

    def sort_key(self) -> tuple:
        return (self.block_number, self.tx_index, self.log_index)

    def to_json_dict(self) -> dict:
        return {
            "topic": self.topic,
            "payload": self.payload,
            "block_number": self.block_number,
            "tx_index": self.tx_index,
            "log_index": self.log_index,
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class TxReceipt:
    tx_id: str
    status: str
    revert_reason: Optional[str]
    block_number: int
    tx_index: int
    gas_used: int
    logs: tuple[LogRecord, ...]

    @property
    def ok(self) -> bool:
        return self.status == SUCCESS


@dataclass(frozen=True)
class SealedBlock:
    number: int
    timestamp: float
    tx_ids: tuple[str, ...]
    gas_used: int


@dataclass(frozen=True)
class ExecutionResult:
    """Outcome of running one call against contract state."""

    status: str
    revert_reason: Optional[str] = None
    events: tuple = ()  # sequence of (topic, payload) pairs

    @staticmethod
    def success(events: Sequence[tuple[str, dict]] = ()) -> "ExecutionResult":
        return ExecutionResult(SUCCESS, None, tuple(events))

    @staticmethod
    def revert(reason: str) -> "ExecutionResult":
        return ExecutionResult(REVERTED, reason, ())


class SimulatedLedger:
    """Single-writer simulated chain with FIFO inclusion and greedy packing."""

    def __init__(self, config: ChainConfig | None = None,
                 executor: Optional[Callable[[PendingTx], ExecutionResult]] = None):
        self.config = config or ChainConfig()
        self._executor = executor
        self._pending: deque[PendingTx] = deque()
        self._seen_tx_ids: set[str] = set()
        self._blocks: list[SealedBlock] = [SealedBlock(0, 0.0, (), 0)]
        self._receipts: dict[str, TxReceipt] = {}
        self._logs: list[LogRecord] = []
        self._tx_counter = 0

    # -- submission ------------------------------------------------------

    def attach_executor(self, executor: Callable[[PendingTx], ExecutionResult]) -> None:
        self._executor = executor

    def next_tx_id(self) -> str:
        self._tx_counter += 1
        return f"tx-{self._tx_counter:06d}"

    def submit_transaction(self, tx: PendingTx) -> str:
        """Queue a transaction FIFO; rejects estimates above the per-tx cap."""
        if tx.gas_estimate > self.config.per_tx_gas_cap:
            raise GasCapExceeded(
                f"gas estimate {tx.gas_estimate} exceeds per-tx cap {self.config.per_tx_gas_cap}")
        if tx.gas_estimate <= 0:
            raise DomainError("gas estimate must be strictly positive")
        if tx.tx_id in self._seen_tx_ids:
            raise DomainError(f"duplicate tx id {tx.tx_id!r}")
        self._seen_tx_ids.add(tx.tx_id)
        self._pending.append(tx)
        return tx.tx_id

    def submit_call(self, sender: str, call: ContractCall, gas_estimate: int,
                    submit_time: float | None = None) -> str:
        """Convenience wrapper building a PendingTx with a fresh id."""
        when = self.head.timestamp if submit_time is None else submit_time
        tx = PendingTx(self.next_tx_id(), sender, call, gas_estimate, when)
        return self.submit_transaction(tx)

    # -- sealing ---------------------------------------------------------

    def advance_block(self) -> SealedBlock:
        """Seal the next block: greedy FIFO packing up to the block gas limit.

        Packing stops at the first queued transaction that does not fit, so
        inclusion order always equals submission order. An empty block is
        valid. Reverted transactions consume their gas but emit no logs.
        """
        number = len(self._blocks)
        timestamp = self._blocks[-1].timestamp + self.config.block_interval

        included: list[PendingTx] = []
        gas_used = 0
        while self._pending and gas_used + self._pending[0].gas_estimate <= self.config.block_gas_limit:
            tx = self._pending.popleft()
            included.append(tx)
            gas_used += tx.gas_estimate

        tx_ids = []
        log_index = 0
        block_logs: list[LogRecord] = []
        for tx_index, tx in enumerate(included):
            outcome = self._execute(tx)
            logs: list[LogRecord] = []
            if outcome.status == SUCCESS:
                for topic, payload in outcome.events:
                    logs.append(LogRecord(topic, payload, number, tx_index, log_index, timestamp))
                    log_index += 1
            receipt = TxReceipt(
                tx_id=tx.tx_id,
                status=outcome.status,
                revert_reason=outcome.revert_reason,
                block_number=number,
                tx_index=tx_index,
                gas_used=tx.gas_estimate,
                logs=tuple(logs),
            )
            self._receipts[tx.tx_id] = receipt
            block_logs.extend(logs)
            tx_ids.append(tx.tx_id)

        block = SealedBlock(number, timestamp, tuple(tx_ids), gas_used)
        self._blocks.append(block)
        self._logs.extend(block_logs)
        return block

    def advance_until_idle(self, max_blocks: int = 10_000) -> int:
        """Seal blocks until the queue drains; returns blocks sealed."""
        sealed = 0
        while self._pending:
            before = len(self._pending)
            self.advance_block()
            sealed += 1
            if len(self._pending) >= before:
                raise DomainError("pending transaction can never fit in a block")
            if sealed > max_blocks:
                raise DomainError("queue failed to drain within max_blocks")
        return sealed

    def _execute(self, tx: PendingTx) -> ExecutionResult:
        if self._executor is None:
            return ExecutionResult.success()
        return self._executor(tx)

    # -- queries ---------------------------------------------------------

    @property
    def head(self) -> SealedBlock:
        return self._blocks[-1]

    @property
    def blocks(self) -> tuple[SealedBlock, ...]:
        return tuple(self._blocks)

    @property
    def logs(self) -> tuple[LogRecord, ...]:
        """All logs in emission order."""
        return tuple(self._logs)

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    def gas_of_batch(self, commitments: int) -> int:
        return self.config.gas_of_batch(commitments)

    def get_receipt(self, tx_id: str, rpc=None) -> TxReceipt:
        """Receipt for an included tx; charges one round-trip when rpc given."""
        receipt = self._receipts.get(tx_id)
        if receipt is None:
            raise NotFound(f"no sealed receipt for tx {tx_id!r}")
        if rpc is not None:
            rpc.charge()
        return receipt

    def get_block(self, number: int) -> SealedBlock:
        if not 0 <= number < len(self._blocks):
            raise NotFound(f"block {number} not sealed")
        return self._blocks[number]

    def get_block_timestamp(self, number: int, rpc=None) -> float:
        """Timestamp of a sealed block; charges one round-trip when rpc given."""
        if not 0 <= number < len(self._blocks):
            raise NotFound(f"block {number} not sealed")
        if rpc is not None:
            rpc.charge()
        return self._blocks[number].timestamp

    def tx_id_at(self, block_number: int, tx_index: int) -> str:
        block = self.get_block(block_number)
        return block.tx_ids[tx_index]

    def export_logs_jsonl(self, stream: IO[str]) -> int:
        """Write one JSON line per log record, in emission order."""
        count = 0
        for record in self._logs:
            stream.write(json.dumps(record.to_json_dict(), sort_keys=True))
            stream.write("\n")
            count += 1
        return count
