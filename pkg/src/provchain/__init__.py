"""Deterministic supply-chain provenance anchoring simulator and analytics."""

__version__ = "0.1.0"

from .ledger import ChainConfig, SimulatedLedger
from .contracts import ContractSuite, LifecycleStep, Role
from .evidence import EvidenceStore, PinPolicy, ProviderModel, compute_cid, verify
from .batching import ArrivalModel, BatchPolicy, analytic_delay, simulate
from .analytics import CoreMetricsInput, CostParams, core_metrics, cost_table
from .audit import RpcModel, RpcSession, reconstruct, verify_evidence
from .scenario import ScenarioConfig, run_negative_suite, run_reference

__all__ = [
    "__version__",
    "ChainConfig",
    "SimulatedLedger",
    "ContractSuite",
    "LifecycleStep",
    "Role",
    "EvidenceStore",
    "PinPolicy",
    "ProviderModel",
    "compute_cid",
    "verify",
    "ArrivalModel",
    "BatchPolicy",
    "analytic_delay",
    "simulate",
    "CoreMetricsInput",
    "CostParams",
    "core_metrics",
    "cost_table",
    "RpcModel",
    "RpcSession",
    "reconstruct",
    "verify_evidence",
    "ScenarioConfig",
    "run_negative_suite",
    "run_reference",
]
