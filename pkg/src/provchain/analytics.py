"""Closed-form metrics: integrity rates, anchoring cost, fairness break-even,
and false-input detection under gated submission plus audit sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .errors import DomainError, NegativeDelay

REFERENCE_BATCH_COMMITMENTS = 13
DEFAULT_BATCH_GAS = 13 * 62_841  # 816,933
DEFAULT_ETH_USD = 1_850.0
GWEI_PER_ETH = 1e9


@dataclass(frozen=True)
class CoreMetricsInput:
    """Counts feeding the integrity rates.

    batches_complete counts batches holding every lifecycle step;
    evidence_matched counts objects whose retrieved bytes recompute to the
    expected content id (a subset of evidence_fetched).
    """

    batches: int = 0
    batches_complete: int = 0
    evidence: int = 0
    evidence_fetched: int = 0
    evidence_matched: int = 0

    def __post_init__(self):
        if not 0 <= self.batches_complete <= self.batches:
            raise DomainError("need 0 <= batches_complete <= batches")
        if not 0 <= self.evidence_matched <= self.evidence_fetched <= self.evidence:
            raise DomainError("need 0 <= matched <= fetched <= evidence")


@dataclass(frozen=True)
class CoreMetrics:
    completeness: Optional[float]
    retrievability: Optional[float]
    match_rate: Optional[float]
    verifiability: Optional[float]


def core_metrics(inp: CoreMetricsInput) -> CoreMetrics:
    """Completeness, retrievability, match rate, and verifiability.

    Rates with a zero denominator are None; verifiability always equals
    retrievability times match rate by construction.
    """
    return CoreMetrics(
        completeness=inp.batches_complete / inp.batches if inp.batches else None,
        retrievability=inp.evidence_fetched / inp.evidence if inp.evidence else None,
        match_rate=inp.evidence_matched / inp.evidence_fetched if inp.evidence_fetched else None,
        verifiability=inp.evidence_matched / inp.evidence if inp.evidence else None,
    )


def anchoring_delay(t_arrive: float, t_included: float) -> float:
    """Seconds from event arrival to block inclusion."""
    if t_included < t_arrive:
        raise NegativeDelay(f"inclusion at {t_included} precedes arrival at {t_arrive}")
    return t_included - t_arrive


@dataclass(frozen=True)
class CostParams:
    """Anchoring cost model inputs (defaults are the reference calibration)."""

    batch_gas: int = DEFAULT_BATCH_GAS
    gas_price_gwei: float = 1.0
    eth_usd: float = DEFAULT_ETH_USD

    def __post_init__(self):
        if self.batch_gas < 0 or self.gas_price_gwei < 0 or self.eth_usd < 0:
            raise DomainError("cost parameters must be >= 0")


def batch_cost_usd(params: CostParams) -> float:
    """USD to anchor one batch: gas * price(gwei) * 1e-9 ETH/gas * ETH-USD."""
    return params.batch_gas * params.gas_price_gwei / GWEI_PER_ETH * params.eth_usd


def per_commitment_cost_usd(params: CostParams,
                            commitments: int = REFERENCE_BATCH_COMMITMENTS) -> float:
    if commitments < 1:
        raise DomainError(f"commitments must be >= 1, got {commitments}")
    return batch_cost_usd(params) / commitments


@dataclass(frozen=True)
class CostRow:
    gas_price_gwei: float
    batch_usd: float
    per_commitment_usd: float


DEFAULT_GAS_PRICE_GRID = (0.001, 0.01, 0.1, 0.5, 1.0)


def cost_table(gas_prices: Sequence[float] = DEFAULT_GAS_PRICE_GRID,
               batch_gas: int = DEFAULT_BATCH_GAS,
               eth_usd: float = DEFAULT_ETH_USD,
               commitments: int = REFERENCE_BATCH_COMMITMENTS) -> list[CostRow]:
    """Per-batch and per-commitment anchoring cost across gas-price regimes."""
    rows = []
    for price in gas_prices:
        params = CostParams(batch_gas=batch_gas, gas_price_gwei=price, eth_usd=eth_usd)
        rows.append(CostRow(
            gas_price_gwei=price,
            batch_usd=batch_cost_usd(params),
            per_commitment_usd=per_commitment_cost_usd(params, commitments),
        ))
    return rows


@dataclass(frozen=True)
class FairnessParams:
    """Break-even inputs: anchoring cost against the premium flow it rides on.

    The premium has no universal default; deployments must configure it.
    """

    premium_usd_per_lb: float
    batch_cost: float
    overhead_fraction: float = 0.01
    batch_mass_lb: Optional[float] = None

    def __post_init__(self):
        if self.premium_usd_per_lb <= 0:
            raise DomainError(f"premium must be > 0, got {self.premium_usd_per_lb}")
        if not 0.0 < self.overhead_fraction <= 1.0:
            raise DomainError(
                f"overhead fraction must be in (0, 1], got {self.overhead_fraction}")
        if self.batch_cost < 0:
            raise DomainError("batch cost must be >= 0")
        if self.batch_mass_lb is not None and self.batch_mass_lb < 0:
            raise DomainError("batch mass must be >= 0")


@dataclass(frozen=True)
class FairnessResult:
    ok: Optional[bool]
    mass_threshold_lb: float


def fairness_check(params: FairnessParams) -> FairnessResult:
    """Anchoring cost stays below the overhead fraction of premium flow.

    The mass threshold is the smallest batch mass satisfying the constraint
    (boundary inclusive); ok is None when no batch mass was supplied.
    """
    threshold = params.batch_cost / (params.overhead_fraction * params.premium_usd_per_lb)
    ok = None
    if params.batch_mass_lb is not None:
        budget = params.overhead_fraction * params.premium_usd_per_lb * params.batch_mass_lb
        ok = params.batch_cost <= budget
    return FairnessResult(ok=ok, mass_threshold_lb=threshold)


def detection_probability(gate_rejection: float, audit_sampling: float) -> float:
    """Probability a false event is caught: rejected at submission with the
    gate probability, else detected when audit sampling selects it."""
    for name, value in (("gate_rejection", gate_rejection), ("audit_sampling", audit_sampling)):
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"{name} must be in [0, 1], got {value}")
    return gate_rejection + (1.0 - gate_rejection) * audit_sampling


# -- scorecard assembly -----------------------------------------------------

MISSING_INPUT = "missing_input"

_PRINCIPLE_SOURCES = {
    "transparency": ("scenario", "evidence"),
    "accountability": ("scenario", "audit", "oracle"),
    "fairness": ("batching",),
    "safety": ("fees", "availability"),
}


def scorecard(artifacts: Mapping[str, Optional[dict]]) -> dict:
    """Assemble the principle-keyed quantitative scorecard.

    `artifacts` maps source names (scenario, evidence, audit, batching,
    fees, availability, oracle, fairness) to report payloads; absent ones
    flag their principle rows as missing rather than failing the assembly.
    """
    def take(name):
        return artifacts.get(name)

    missing: list[str] = []
    doc: dict = {"principles": {}}

    def row(principle: str, builder, sources: tuple[str, ...]) -> None:
        absent = [s for s in sources if take(s) is None]
        if absent:
            doc["principles"][principle] = {"status": MISSING_INPUT, "missing": absent}
            missing.extend(absent)
        else:
            body = builder()
            body["status"] = "ok"
            doc["principles"][principle] = body

    def transparency():
        scenario = take("scenario")
        evidence = take("evidence")
        return {
            "provenance_completeness": scenario.get("completeness"),
            "scenario_verifiability": (scenario.get("evidence") or {}).get("V"),
            "evidence_loop": {
                "n": evidence.get("n"),
                "R": evidence.get("R"),
                "M": evidence.get("M"),
                "V": evidence.get("V"),
                "failures": evidence.get("failures"),
            },
        }

    def accountability():
        scenario = take("scenario")
        audit = take("audit")
        oracle = take("oracle")
        return {
            "negative_cases": (scenario.get("negative_suite") or {}),
            "audit_latency": audit.get("regimes"),
            "detection": oracle.get("rows"),
        }

    def fairness():
        batching = take("batching")
        body = {"anchoring_delay": batching.get("rows")}
        fair = take("fairness")
        if fair is None:
            body["break_even"] = {"status": MISSING_INPUT, "missing": ["fairness"]}
        else:
            body["break_even"] = {k: fair.get(k) for k in
                                  ("premium_usd_per_lb", "overhead_fraction", "rows")}
        return body

    def safety():
        fees = take("fees")
        availability = take("availability")
        return {
            "cost": fees.get("rows"),
            "availability": availability.get("rows"),
        }

    row("transparency", transparency, _PRINCIPLE_SOURCES["transparency"])
    row("accountability", accountability, _PRINCIPLE_SOURCES["accountability"])
    row("fairness", fairness, _PRINCIPLE_SOURCES["fairness"])
    doc["principles"]["ethics"] = {
        "status": "not_evaluated",
        "note": "qualitative governance assessment; outside this toolkit's scope",
    }
    row("safety", safety, _PRINCIPLE_SOURCES["safety"])
    doc["missing_inputs"] = sorted(set(missing))
    return doc
