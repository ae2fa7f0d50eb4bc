"""Simulated chain: gas accounting, FIFO packing, receipts, determinism."""

import io

import pytest
from hypothesis import given, settings, strategies as st

from provchain.audit import RpcModel, RpcSession
from provchain.distributions import Constant
from provchain.errors import DomainError, EmptyBatch, GasCapExceeded, NotFound
from provchain.ledger import ChainConfig, ContractCall, PendingTx, SimulatedLedger
from provchain.rng import substream

CALL = ContractCall("cid_rollup", "submit_cid_batch", {"commitments": ()})


def submit_batch(ledger, commitments, sender="op"):
    return ledger.submit_call(sender, CALL, ledger.gas_of_batch(commitments))


def test_gas_of_batch_reference_values():
    config = ChainConfig()
    assert config.gas_of_batch(1) == 62_841
    assert config.gas_of_batch(13) == 816_933
    assert config.gas_of_batch(1_022) == 64_223_502


def test_gas_of_batch_rejects_empty():
    with pytest.raises(EmptyBatch):
        ChainConfig().gas_of_batch(0)


def test_submit_accepts_max_batch_and_rejects_above_cap():
    ledger = SimulatedLedger()
    submit_batch(ledger, 1_022)  # 64,223,502 gas, under the cap
    with pytest.raises(GasCapExceeded):
        submit_batch(ledger, 1_023)  # 64,286,343 gas


def test_config_invariants():
    with pytest.raises(DomainError):
        ChainConfig(block_interval=0)
    with pytest.raises(DomainError):
        ChainConfig(per_tx_gas_cap=200, block_gas_limit=100)


def test_three_single_commitment_txs_pack_one_block():
    ledger = SimulatedLedger()
    for _ in range(3):
        submit_batch(ledger, 1)
    block = ledger.advance_block()
    assert block.gas_used == 188_523  # 3 * 62,841
    receipts = [ledger.get_receipt(tx_id) for tx_id in block.tx_ids]
    assert [r.tx_index for r in receipts] == [0, 1, 2]


def test_empty_block_is_valid():
    ledger = SimulatedLedger()
    block = ledger.advance_block()
    assert block.tx_ids == ()
    assert block.gas_used == 0


def test_greedy_fifo_packing_defers_overflow():
    ledger = SimulatedLedger()
    tx_ids = [submit_batch(ledger, 1_022) for _ in range(4)]
    first = ledger.advance_block()
    # Two max batches fit (128,447,004 gas); a third would exceed 176M.
    assert first.tx_ids == tuple(tx_ids[:2])
    assert first.gas_used == 128_447_004
    second = ledger.advance_block()
    assert second.tx_ids == tuple(tx_ids[2:])


def test_block_timestamps_follow_interval():
    ledger = SimulatedLedger()
    for _ in range(5):
        ledger.advance_block()
    assert ledger.get_block_timestamp(0) == 0.0
    assert ledger.get_block_timestamp(5) == 10.0
    with pytest.raises(NotFound):
        ledger.get_block_timestamp(6)


def test_receipt_unknown_or_pending_not_found():
    ledger = SimulatedLedger()
    with pytest.raises(NotFound):
        ledger.get_receipt("tx-999999")
    tx_id = submit_batch(ledger, 1)
    with pytest.raises(NotFound):
        ledger.get_receipt(tx_id)  # still pending
    ledger.advance_block()
    assert ledger.get_receipt(tx_id).block_number == 1


def test_rpc_metering_one_call_one_draw():
    ledger = SimulatedLedger()
    tx_id = submit_batch(ledger, 1)
    ledger.advance_block()
    session = RpcSession(RpcModel(rtt=Constant(50.0)), substream(0, "rpc"))
    ledger.get_receipt(tx_id, rpc=session)
    assert session.total_ms == 50.0
    assert session.calls == 1
    ledger.get_block_timestamp(1, rpc=session)
    assert session.total_ms == 100.0
    # No rpc object: nothing charged.
    ledger.get_receipt(tx_id)
    assert session.calls == 2


def test_duplicate_tx_id_rejected():
    ledger = SimulatedLedger()
    tx = PendingTx("tx-a", "op", CALL, 62_841, 0.0)
    ledger.submit_transaction(tx)
    with pytest.raises(DomainError):
        ledger.submit_transaction(tx)


def test_throughput_ceiling_constants():
    config = ChainConfig()
    assert config.max_commitments_per_tx == 1_022
    assert config.max_commitments_per_block == 2_800
    assert config.peak_commitment_rate == 1_400.0


def test_identical_submissions_yield_identical_histories():
    def build():
        ledger = SimulatedLedger()
        for n in (3, 1, 500, 1_022, 7):
            submit_batch(ledger, n)
            ledger.advance_block()
        out = io.StringIO()
        ledger.export_logs_jsonl(out)
        blocks = [(b.number, b.timestamp, b.tx_ids, b.gas_used) for b in ledger.blocks]
        return out.getvalue(), blocks

    assert build() == build()


def test_export_jsonl_one_line_per_log():
    from provchain.contracts import ContractSuite, LifecycleStep, Role

    ledger = SimulatedLedger()
    suite = ContractSuite(ledger)
    suite.register_actor("admin", "p1", Role.PRODUCER)
    ledger.advance_block()
    suite.anchor_step("p1", "batch", LifecycleStep.PRODUCED, ["cid1-ab", "cid1-cd"])
    ledger.advance_block()
    out = io.StringIO()
    count = ledger.export_logs_jsonl(out)
    lines = out.getvalue().strip().splitlines()
    assert count == len(lines) == len(ledger.logs)
    import json
    record = json.loads(lines[0])
    assert set(record) == {"topic", "payload", "block_number", "tx_index",
                           "log_index", "timestamp"}


@settings(max_examples=60, deadline=None)
@given(batches=st.lists(st.integers(min_value=1, max_value=1_022), min_size=1, max_size=40))
def test_packing_conserves_gas_and_order(batches):
    ledger = SimulatedLedger()
    submitted = [submit_batch(ledger, n) for n in batches]
    while ledger.pending_count:
        ledger.advance_block()
    included = [tx_id for block in ledger.blocks for tx_id in block.tx_ids]
    assert included == submitted  # FIFO inclusion across blocks
    for block in ledger.blocks:
        total = sum(ledger.get_receipt(t).gas_used for t in block.tx_ids)
        assert total == block.gas_used <= ledger.config.block_gas_limit
    # Log total order equals emission order.
    keys = [log.sort_key() for log in ledger.logs]
    assert keys == sorted(keys)
