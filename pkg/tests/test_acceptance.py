"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one `ACCEPTANCE <n> <name>: PASS (<runtime>)` line when its
criterion holds (run pytest with -s to stream them); a pytest failure on any
test is that criterion's FAIL line. Runtime limits are part of the criteria
and asserted.
"""

import json
import time

import pytest

from provchain import audit
from provchain.analytics import cost_table, detection_probability
from provchain.batching import ArrivalModel, BatchPolicy, analytic_delay, simulate
from provchain.cli import find_max_batch, main, run_anchor_benchmark
from provchain.contracts import ContractSuite, LifecycleStep, Role, STEP_WRITER
from provchain.distributions import Constant
from provchain.evidence import (
    EvidenceStore,
    PinPolicy,
    ProviderModel,
    expected_tries,
    retrieval_availability,
    run_evidence_loop,
    simulate_churn,
)
from provchain.ledger import ChainConfig, SimulatedLedger
from provchain.reporting import canonical_bytes
from provchain.rng import substream
from provchain.scenario import (
    ALL_STEP_LABELS,
    ScenarioConfig,
    run_negative_suite,
    run_oracle_experiment,
    run_reference,
)

SEED = 42


class Criterion:
    """Tracks one criterion's runtime budget and prints its PASS line."""

    def __init__(self, number, name, budget_s):
        self.number = number
        self.name = name
        self.budget_s = budget_s
        self.started = time.perf_counter()

    def done(self):
        elapsed = time.perf_counter() - self.started
        assert elapsed < self.budget_s, (
            f"criterion {self.number} exceeded its {self.budget_s}s budget: {elapsed:.2f}s")
        print(f"ACCEPTANCE {self.number:02d} {self.name}: PASS ({elapsed:.2f}s)")


def test_criterion_01_max_batch_size():
    crit = Criterion(1, "max batch size", budget_s=1.0)
    assert find_max_batch(ChainConfig()) == 1_022
    crit.done()


def test_criterion_02_peak_throughput():
    crit = Criterion(2, "peak anchoring throughput", budget_s=10.0)
    payload = run_anchor_benchmark(ChainConfig(), blocks=60)
    rate = payload["throughput"]["rate_per_s"]
    assert payload["throughput"]["blocks"] >= 60
    assert rate == pytest.approx(1_400.0, rel=0.05)
    crit.done()


def test_criterion_03_cost_table():
    crit = Criterion(3, "cost sensitivity table", budget_s=1.0)
    printed = {
        0.001: (0.00151, 0.000116),
        0.01: (0.0151, 0.00117),
        0.1: (0.151, 0.0117),
        0.5: (0.757, 0.0583),
        1.0: (1.51, 0.116),
    }
    rows = cost_table()  # defaults: batch gas 816,933; 1,850 USD/ETH
    assert len(rows) == 5
    for row in rows:
        batch_cell, commitment_cell = printed[row.gas_price_gwei]
        assert row.batch_usd == pytest.approx(batch_cell, rel=0.015)
        assert row.per_commitment_usd == pytest.approx(commitment_cell, rel=0.015)
    crit.done()


def test_criterion_04_batching_analytics_and_simulation():
    crit = Criterion(4, "batching delay model", budget_s=30.0)
    policy = BatchPolicy()
    printed = {
        1: (1.00, 0.50, 0.95, 2.50, 2.95),
        10: (1.00, 0.50, 0.95, 2.50, 2.95),
        50: (1.00, 0.50, 0.95, 2.50, 2.95),
        200: (1.00, 0.50, 0.95, 2.50, 2.95),
        600: (0.85, 0.43, 0.81, 2.43, 2.81),
        1200: (0.43, 0.21, 0.41, 2.21, 2.41),
    }
    for rate, cells in printed.items():
        s = analytic_delay(rate, policy, inclusion_s=2.0)
        for value, cell in zip((s.max_wait, s.mean_wait, s.wait_p95,
                                s.mean_delay, s.delay_p95), cells):
            assert value == pytest.approx(cell, abs=0.005)
    for rate in (1, 10, 600, 1200):
        run = simulate(ArrivalModel(rate), policy, duration_s=600.0)
        target = analytic_delay(rate, policy)
        assert run.mean_wait == pytest.approx(target.mean_wait, rel=0.05)
        assert run.mean_delay == pytest.approx(target.mean_delay, rel=0.05)
    crit.done()


def test_criterion_05_availability_table_and_monte_carlo():
    crit = Criterion(5, "availability under churn", budget_s=30.0)
    printed = {
        (0.95, 1): (0.9500, 4, 1.00), (0.95, 2): (0.9975, 4, 1.05),
        (0.95, 3): (0.9999, 4, 1.05), (0.98, 1): (0.9800, 4, 1.00),
        (0.98, 2): (0.9996, 4, 1.02), (0.98, 3): (0.999992, 6, 1.02),
        (0.99, 1): (0.9900, 4, 1.00), (0.99, 2): (0.9999, 4, 1.01),
        (0.99, 3): (0.999999, 6, 1.01),
    }
    trials = 100_000
    for (p, k), (prob_cell, decimals, tries_cell) in printed.items():
        analytic = retrieval_availability(p, k)
        assert round(analytic, decimals) == prob_cell
        assert round(expected_tries(p, k), 2) == tries_cell
        sample = simulate_churn(p, k, trials, substream(SEED, "availability", p, k))
        sigma = (analytic * (1 - analytic) / trials) ** 0.5
        assert abs(sample.rate - analytic) <= 3 * sigma
    crit.done()


def test_criterion_06_oracle_detection():
    crit = Criterion(6, "false-input detection", budget_s=30.0)
    printed = {(0.2, 0.01): 0.208, (0.2, 0.10): 0.280,
               (0.6, 0.01): 0.604, (0.6, 0.10): 0.640}
    events = 100_000
    for (gate, sampling), cell in printed.items():
        analytic = detection_probability(gate, sampling)
        assert round(analytic, 3) == cell
        outcome = run_oracle_experiment(events, gate, sampling, SEED)
        sigma = (analytic * (1 - analytic) / events) ** 0.5
        assert abs(outcome.empirical - analytic) <= 3 * sigma
    crit.done()


def test_criterion_07_evidence_loop():
    crit = Criterion(7, "evidence verifiability loop", budget_s=5.0)
    store = EvidenceStore([ProviderModel("pin-1"), ProviderModel("pin-2")])
    report = run_evidence_loop(store, PinPolicy(2), seed=SEED)
    assert report.n == 40
    assert report.retrievability == 1.0
    assert report.match_rate == 1.0
    assert report.verifiability == 1.0
    assert report.failures == 0
    crit.done()


def test_criterion_08_reference_scenario():
    crit = Criterion(8, "reference lifecycle scenario", budget_s=5.0)
    result = run_reference(ScenarioConfig(seed=SEED))
    assert result.completeness == 1.0
    assert result.steps_anchored == ALL_STEP_LABELS  # six, ordinal order
    assert result.evidence_anchored == 13
    assert result.evidence_matched == 13
    crit.done()


def test_criterion_09_negative_suite():
    crit = Criterion(9, "negative-case enforcement", budget_s=5.0)
    result = run_negative_suite(ScenarioConfig(seed=SEED))
    expected = {
        "unregistered_write": "Unauthorised",
        "inactive_actor_write": "ActorInactive",
        "replay": "DuplicateStep",
        "concurrent_collision": "DuplicateStep",
    }
    assert {c.name: c.revert_reason for c in result.cases} == expected
    assert all(c.state_unchanged for c in result.cases)  # revert purity
    assert result.all_passed
    crit.done()


def test_criterion_10_audit_latency_structure():
    crit = Criterion(10, "audit latency structure", budget_s=30.0)
    workload = audit.build_audit_workload()
    assert (workload.tx_count, workload.event_count, workload.block_count) == (10, 15, 10)

    # (a) Decomposition identity on every run.
    model = audit.RpcModel(rtt=audit.DEFAULT_RTT, concurrency=8)
    for run in range(10):
        session = audit.RpcSession(model, substream(SEED, "aql-identity", run))
        _, b = audit.reconstruct(workload.ledger, workload.product_id, session)
        assert b.total_ms == b.receipts_ms + b.decode_ms + b.sort_ms + b.timestamps_ms

    # (b) Warm-cache total under 1% of the cold mean at rtt mean >= 50 ms.
    for rtt in (Constant(50.0), Constant(265.0)):
        report = audit.run_aql_benchmark(
            workload.ledger, workload.product_id,
            audit.RpcModel(rtt=rtt, concurrency=8), runs=10, warmup=2, seed=SEED)
        cold = report["regimes"]["uncached"]["volatile"]["total_ms"]["mean"]
        warm = report["regimes"]["cached"]["volatile"]["total_ms"]["mean"]
        assert warm < 0.01 * cold

    # (c) Wave law at constant 265 ms and concurrency 8.
    session = audit.RpcSession(audit.RpcModel(rtt=Constant(265.0), concurrency=8),
                               substream(SEED, "aql-wave"))
    _, b = audit.reconstruct(workload.ledger, workload.product_id, session)
    assert b.receipts_ms == 530.0
    assert b.timestamps_ms == 530.0
    assert b.total_ms == pytest.approx(1_060.0, rel=0.05)
    crit.done()


def test_criterion_11_report_determinism(tmp_path):
    crit = Criterion(11, "byte-identical reports", budget_s=30.0)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["scenario", "run", "--seed", "42", "--out", str(out_a)]) == 0
    assert main(["scenario", "run", "--seed", "42", "--out", str(out_b)]) == 0
    doc_a = json.loads((out_a / "scenario_run.json").read_text(encoding="utf-8"))
    doc_b = json.loads((out_b / "scenario_run.json").read_text(encoding="utf-8"))
    assert canonical_bytes(doc_a) == canonical_bytes(doc_b)
    crit.done()


def test_criterion_12_oracle_equivalence():
    crit = Criterion(12, "search and reconstruction oracles", budget_s=60.0)
    gas = 62_841

    # Binary search vs linear scan over randomized gas caps, spanning up to
    # one million commitments.
    rng = substream(SEED, "caps")
    caps = [int(10 ** rng.uniform(4.0, 10.8)) for _ in range(49)]
    caps.append(1_000_000 * gas)
    for cap in caps:
        config = ChainConfig(per_tx_gas_cap=cap,
                             block_gas_limit=max(cap, 176_000_000))
        linear = 0
        while (linear + 1) * gas <= cap:
            linear += 1
        assert find_max_batch(config) == linear

    # Reconstructed trails vs brute-force log filtering over randomized
    # scenarios (random products, steps, evidence, and interleavings).
    for scenario_index in range(20):
        rng = substream(SEED, "audit-scenario", scenario_index)
        ledger = SimulatedLedger()
        suite = ContractSuite(ledger)
        actors = {Role.PRODUCER: "producer-1", Role.PROCESSOR: "processor-1",
                  Role.RETAILER: "retailer-1", Role.CERTIFIER: "certifier-1"}
        for role, address in actors.items():
            suite.register_actor("admin", address, role)
        ledger.advance_block()
        products = [f"lot-{i}" for i in range(rng.randint(1, 3))]
        for product in products:
            steps_to_anchor = rng.randint(1, 6)
            for step in list(LifecycleStep)[:steps_to_anchor]:
                cids = [f"cid1-{rng.getrandbits(128):032x}"
                        for _ in range(rng.randint(0, 3))]
                suite.anchor_step(actors[STEP_WRITER[step]], product, step, cids)
                if rng.random() < 0.5:
                    ledger.advance_block()
            if rng.random() < 0.5:
                suite.submit_cid_batch(
                    "certifier-1",
                    [(product, LifecycleStep.PRODUCED,
                      f"cid1-{rng.getrandbits(128):032x}")])
        ledger.advance_until_idle()
        session_model = audit.RpcModel(rtt=Constant(1.0), concurrency=8)
        for product in products:
            trail, _ = audit.reconstruct(
                ledger, product,
                audit.RpcSession(session_model, substream(SEED, "sess", product)))
            expected = [
                (log.topic, log.payload, log.block_number, log.tx_index,
                 log.log_index, log.timestamp)
                for log in ledger.logs
                if log.payload.get("product_id") == product
            ]
            got = [(r.topic, r.payload, r.block_number, r.tx_index, r.log_index,
                    r.timestamp) for r in trail.records]
            assert got == expected
    crit.done()
