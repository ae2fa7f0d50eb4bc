"""End-to-end scenario: reference lifecycle, negative suite, injection."""

import pytest

from provchain.contracts import ActorStatus, LifecycleStep, Role
from provchain.errors import DomainError
from provchain.ledger import REVERTED, SUCCESS
from provchain.reporting import canonical_bytes
from provchain.scenario import (
    ALL_STEP_LABELS,
    InjectionConfig,
    ScenarioConfig,
    run_negative_suite,
    run_oracle_experiment,
    run_reference,
)


def test_reference_scenario_full_walkthrough():
    result = run_reference(ScenarioConfig(seed=42))
    assert result.completeness == 1.0
    assert result.steps_anchored == ALL_STEP_LABELS
    assert result.evidence_anchored == 13
    assert result.evidence_fetched == 13
    assert result.evidence_matched == 13
    assert result.trail_record_count == 19  # 6 step anchors + 13 commitments
    assert result.trace_complete
    assert result.anchor_gas == 19 * 62_841
    payload = result.to_payload()
    assert payload["evidence"]["V"] == 1.0
    assert [o["status"] for o in payload["step_outcomes"]] == [SUCCESS] * 6


def test_reference_scenario_deterministic_given_seed():
    a = run_reference(ScenarioConfig(seed=42)).to_payload()
    b = run_reference(ScenarioConfig(seed=42)).to_payload()
    assert canonical_bytes(a) == canonical_bytes(b)
    # A different seed changes simulated draws but not the outcome metrics.
    c = run_reference(ScenarioConfig(seed=43)).to_payload()
    assert c["completeness"] == a["completeness"]
    assert c["evidence"] == a["evidence"]


def test_skipping_a_step_breaks_completeness():
    result = run_reference(ScenarioConfig(seed=1, skip_steps=("AtRetail",)))
    assert result.completeness == 0.0
    sold = [o for o in result.step_outcomes if o.step == "Sold"][0]
    assert (sold.status, sold.revert_reason) == (REVERTED, "OutOfOrder")


def test_gate_requires_attestation_before_sold():
    gated = run_reference(ScenarioConfig(seed=2, certification_gate=True))
    assert gated.completeness == 1.0  # certifier approves after AtRetail

    # Same flow without the attestation: Sold must trip the gate.
    from provchain.scenario import ScenarioWorld
    config = ScenarioConfig(seed=3, certification_gate=True)
    world = ScenarioWorld.build(config)
    world.register_roster()
    roster = config.roster
    writers = [(LifecycleStep.PRODUCED, roster[Role.PRODUCER]),
               (LifecycleStep.PROCESSED, roster[Role.PROCESSOR]),
               (LifecycleStep.SHIPPED, roster[Role.PROCESSOR]),
               (LifecycleStep.RECEIVED, roster[Role.RETAILER]),
               (LifecycleStep.AT_RETAIL, roster[Role.RETAILER])]
    for step, writer in writers:
        assert world.exec_tx(world.suite.anchor_step(writer, "b1", step)).ok
    receipt = world.exec_tx(world.suite.anchor_step(roster[Role.RETAILER], "b1",
                                                    LifecycleStep.SOLD))
    assert (receipt.status, receipt.revert_reason) == (REVERTED, "GateNotSatisfied")


def test_evidence_allocation_is_configurable():
    result = run_reference(ScenarioConfig(seed=4, evidence_per_step=(1, 1, 1, 1, 1, 1)))
    assert result.evidence_anchored == 6
    assert result.completeness == 1.0
    with pytest.raises(DomainError):
        ScenarioConfig(evidence_per_step=(1, 2, 3))


def test_roster_must_cover_every_role():
    roster = {Role.PRODUCER: "p"}
    with pytest.raises(DomainError):
        ScenarioConfig(roster=roster)


def test_negative_suite_all_four_cases_pass():
    result = run_negative_suite(ScenarioConfig(seed=42))
    assert result.all_passed
    by_name = {case.name: case for case in result.cases}
    assert set(by_name) == {"unregistered_write", "inactive_actor_write",
                            "replay", "concurrent_collision"}
    assert by_name["unregistered_write"].revert_reason == "Unauthorised"
    assert by_name["inactive_actor_write"].revert_reason == "ActorInactive"
    assert by_name["replay"].revert_reason == "DuplicateStep"
    assert by_name["concurrent_collision"].revert_reason == "DuplicateStep"
    assert all(case.state_unchanged for case in result.cases)
    result.raise_if_failed()  # no-op when green
    payload = result.to_payload()
    assert payload["all_passed"] and payload["rejected"] == 4


def test_negative_suite_reports_control_condition_deviation():
    # Re-activating the suspended actor flips that case's premise; the suite
    # must report the deviation, not hide it.
    def reactivate(world, case_name):
        if case_name == "inactive_actor_write":
            world.suite.set_actor_status(world.admin, "suspended-supplier",
                                         ActorStatus.ACTIVE)
            world.ledger.advance_block()

    result = run_negative_suite(ScenarioConfig(seed=42), interfere=reactivate)
    assert not result.all_passed
    case = {c.name: c for c in result.cases}["inactive_actor_write"]
    assert case.status == SUCCESS and not case.passed
    others = [c for c in result.cases if c.name != "inactive_actor_write"]
    assert all(c.passed for c in others)
    with pytest.raises(Exception):
        result.raise_if_failed()


def test_oracle_experiment_trivial_cells_exact():
    assert run_oracle_experiment(10_000, 1.0, 0.0, seed=1).empirical == 1.0
    assert run_oracle_experiment(10_000, 0.0, 1.0, seed=1).empirical == 1.0
    assert run_oracle_experiment(10_000, 0.0, 0.0, seed=1).empirical == 0.0


def test_oracle_experiment_converges_to_model():
    outcome = run_oracle_experiment(100_000, 0.2, 0.01, seed=42)
    assert outcome.analytic == pytest.approx(0.208)
    sigma = (0.208 * 0.792 / 100_000) ** 0.5
    assert abs(outcome.empirical - outcome.analytic) <= 3 * sigma
    with pytest.raises(DomainError):
        run_oracle_experiment(0, 0.2, 0.01, seed=1)
    with pytest.raises(DomainError):
        run_oracle_experiment(10, 1.2, 0.01, seed=1)


def test_injection_config_defaults():
    config = ScenarioConfig(seed=5, injection=InjectionConfig())
    assert config.injection.false_events == 100_000
    assert config.injection.gate_rejection == 0.2
    assert config.injection.audit_sampling == 0.01
