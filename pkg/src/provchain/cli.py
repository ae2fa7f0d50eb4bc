"""Operator command-line interface.

Subcommands: scenario run, bench anchor|evidence|audit, stress
batching|fees|fairness|availability|oracle, and report scorecard. Every
subcommand honours --seed (PROVCHAIN_SEED as fallback), embeds its config in
the report, and writes reports to the output directory in the requested
formats. Exit codes: 0 success, 1 validation failure, 2 suite failure,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from . import __version__, audit, batching
from .analytics import (
    DEFAULT_BATCH_GAS,
    DEFAULT_ETH_USD,
    DEFAULT_GAS_PRICE_GRID,
    FairnessParams,
    REFERENCE_BATCH_COMMITMENTS,
    cost_table,
    detection_probability,
    fairness_check,
    scorecard,
)
from .batching import ArrivalModel, BatchPolicy, analytic_delay, simulate
from .contracts import ContractSuite, LifecycleStep, Role
from .distributions import parse_distribution
from .errors import DomainError, GasCapExceeded, ProvchainError, SuiteFailure
from .evidence import (
    CID_PREFIX,
    EvidenceStore,
    PinPolicy,
    ProviderModel,
    retrieval_availability,
    expected_tries,
    run_evidence_loop,
    simulate_churn,
)
from .ledger import ChainConfig, ContractCall, SimulatedLedger
from .reporting import (
    make_report,
    rows_to_csv,
    rows_to_markdown,
    to_json_bytes,
)
from .rng import substream
from .scenario import (
    InjectionConfig,
    ScenarioConfig,
    run_negative_suite,
    run_oracle_experiment,
    run_reference,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SUITE_FAILURE = 2
EXIT_USAGE = 64

DEFAULT_SEED = 42
SEED_ENV_VAR = "PROVCHAIN_SEED"

DEFAULT_AVAILABILITY_GRID = tuple(
    (p, k) for p in (0.95, 0.98, 0.99) for k in (1, 2, 3)
)
DEFAULT_ORACLE_GRID = ((0.2, 0.01), (0.2, 0.10), (0.6, 0.01), (0.6, 0.10))
DEFAULT_BATCHING_RATES = (1.0, 10.0, 50.0, 200.0, 600.0, 1200.0)


class CliParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 64."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- max-batch search and anchoring benchmark ---------------------------------


def _batch_confirms(chain: ChainConfig, commitments: int) -> bool:
    """Probe one batch size on a throwaway chain: accepted and confirmed."""
    probe = SimulatedLedger(chain)
    call = ContractCall("cid_rollup", "submit_cid_batch", {"commitments": commitments})
    try:
        tx_id = probe.submit_call("prober", call, probe.gas_of_batch(commitments))
    except GasCapExceeded:
        return False
    probe.advance_block()
    return probe.get_receipt(tx_id).ok


def find_max_batch(chain: ChainConfig | SimulatedLedger) -> int:
    """Largest batch size that confirms without a gas revert (binary search).

    Returns 0 when even a single commitment cannot confirm.
    """
    if isinstance(chain, SimulatedLedger):
        chain = chain.config
    if not _batch_confirms(chain, 1):
        return 0
    lo = 1  # confirmed
    hi = 2
    while _batch_confirms(chain, hi):
        lo = hi
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _batch_confirms(chain, mid):
            lo = mid
        else:
            hi = mid
    return lo


def run_anchor_benchmark(chain: ChainConfig, blocks: int = 60,
                         max_batch: Optional[int] = None) -> dict:
    """Sustained saturation run: keep max-size batches flowing, topping each
    block off with one remainder batch, and measure commitments per second."""
    if blocks < 1:
        raise DomainError(f"blocks must be >= 1, got {blocks}")
    max_batch = find_max_batch(chain) if max_batch is None else max_batch
    if max_batch < 1:
        return {"max_batch": 0, "warning": "NoFeasibleBatch"}

    ledger = SimulatedLedger(chain)
    suite = ContractSuite(ledger, admin="admin")
    suite.register_actor("admin", "bench-operator", Role.RETAILER)
    ledger.advance_block()

    cid_counter = 0

    def synthetic_batch(size: int) -> list:
        nonlocal cid_counter
        batch = []
        for _ in range(size):
            batch.append(("bench-product", LifecycleStep.AT_RETAIL,
                          f"{CID_PREFIX}{cid_counter:064x}"))
            cid_counter += 1
        return batch

    start_commitments = suite.rollup_commitment_count
    gas_used = 0
    for _ in range(blocks):
        remaining = chain.block_gas_limit
        while remaining >= chain.gas_per_commitment:
            size = min(max_batch, remaining // chain.gas_per_commitment)
            suite.submit_cid_batch("bench-operator", synthetic_batch(size))
            remaining -= chain.gas_of_batch(size)
        block = ledger.advance_block()
        gas_used += block.gas_used

    commitments = suite.rollup_commitment_count - start_commitments
    duration_s = blocks * chain.block_interval
    return {
        "max_batch": max_batch,
        "max_batch_gas": chain.gas_of_batch(max_batch),
        "gas_per_commitment": chain.gas_per_commitment,
        "inclusion_latency_s": chain.block_interval,
        "reference_batch": {
            "commitments": REFERENCE_BATCH_COMMITMENTS,
            "gas": chain.gas_of_batch(REFERENCE_BATCH_COMMITMENTS),
        },
        "throughput": {
            "blocks": blocks,
            "duration_s": duration_s,
            "commitments": commitments,
            "rate_per_s": commitments / duration_s,
            "gas_used": gas_used,
        },
    }


# -- configuration -------------------------------------------------------------


def load_config_file(path: Path) -> dict:
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        return json.loads(text)
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        return tomllib.loads(text.decode("utf-8"))
    except tomllib.TOMLDecodeError as toml_error:
        # JSON accepted as an alternative regardless of extension.
        try:
            return json.loads(text)
        except json.JSONDecodeError:
            raise DomainError(
                f"config file {path} is neither valid TOML nor JSON: {toml_error}")


class RunContext:
    """Config file contents merged with flag overrides."""

    def __init__(self, args: argparse.Namespace):
        self.raw: dict = {}
        if args.config:
            self.raw = load_config_file(Path(args.config))
        self.seed = self._resolve_seed(args)
        out = args.out or self._section("output").get("dir") or "reports"
        self.out_dir = Path(out)
        formats = args.format or self._section("output").get("formats") or ["json"]
        self.formats = list(dict.fromkeys(formats))
        for fmt in self.formats:
            if fmt not in ("json", "csv", "md"):
                raise DomainError(f"unknown report format {fmt!r}")

    def _resolve_seed(self, args) -> int:
        if args.seed is not None:
            return args.seed
        env = os.environ.get(SEED_ENV_VAR)
        if env is not None:
            try:
                return int(env)
            except ValueError as exc:
                raise DomainError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from exc
        if "seed" in self.raw:
            return int(self.raw["seed"])
        return DEFAULT_SEED

    def _section(self, name: str) -> dict:
        section = self.raw.get(name, {})
        if not isinstance(section, dict):
            raise DomainError(f"config section {name!r} must be a table")
        return section

    def chain(self) -> ChainConfig:
        section = self._section("chain")
        return ChainConfig(
            block_interval=float(section.get("block_interval", 2.0)),
            per_tx_gas_cap=int(section.get("per_tx_gas_cap", 64_250_000)),
            block_gas_limit=int(section.get("block_gas_limit", 176_000_000)),
            gas_per_commitment=int(section.get("gas_per_commitment", 62_841)),
            base_gas_price=float(section.get("base_gas_price", 1.0)),
        )

    def store(self) -> tuple[EvidenceStore, PinPolicy]:
        section = self._section("store")
        specs = section.get("providers")
        providers = []
        if specs:
            for spec in specs:
                kwargs = {
                    "provider_id": spec["provider_id"],
                    "availability": float(spec.get("availability", 1.0)),
                }
                if "fetch_latency" in spec:
                    kwargs["fetch_latency"] = parse_distribution(spec["fetch_latency"])
                if "upload_latency" in spec:
                    kwargs["upload_latency"] = parse_distribution(spec["upload_latency"])
                providers.append(ProviderModel(**kwargs))
        else:
            count = int(section.get("provider_count", 2))
            availability = float(section.get("availability", 1.0))
            providers = [ProviderModel(f"pin-{i + 1}", availability=availability)
                         for i in range(count)]
        policy = PinPolicy(int(section.get("replicas", 2)))
        return EvidenceStore(providers), policy

    def batch_policy(self) -> BatchPolicy:
        section = self._section("batcher")
        return BatchPolicy(
            max_batch=int(section.get("max_batch", 512)),
            max_wait_s=float(section.get("max_wait_s", 1.0)),
        )

    def rpc(self) -> audit.RpcModel:
        section = self._section("rpc")
        kwargs: dict[str, Any] = {"concurrency": int(section.get("concurrency", 8))}
        if "rtt" in section:
            kwargs["rtt"] = parse_distribution(section["rtt"])
        return audit.RpcModel(**kwargs)

    def scenario(self) -> ScenarioConfig:
        section = self._section("scenario")
        kwargs: dict[str, Any] = {
            "seed": self.seed,
            "chain": self.chain(),
            "rpc": self.rpc(),
            "batcher": self.batch_policy(),
        }
        if "product_id" in section:
            kwargs["product_id"] = str(section["product_id"])
        if "evidence_per_step" in section:
            kwargs["evidence_per_step"] = tuple(int(x) for x in section["evidence_per_step"])
        if "certification_gate" in section:
            kwargs["certification_gate"] = bool(section["certification_gate"])
        if "evidence_bytes" in section:
            kwargs["evidence_bytes"] = int(section["evidence_bytes"])
        if "skip_steps" in section:
            kwargs["skip_steps"] = tuple(section["skip_steps"])
        store_section = self._section("store")
        if "replicas" in store_section:
            kwargs["replicas"] = int(store_section["replicas"])
        if "provider_count" in store_section:
            kwargs["providers"] = int(store_section["provider_count"])
        if "availability" in store_section:
            kwargs["provider_availability"] = float(store_section["availability"])
        injection = self.raw.get("injection")
        if injection:
            kwargs["injection"] = InjectionConfig(
                false_events=int(injection.get("false_events", 100_000)),
                gate_rejection=float(injection.get("gate_rejection", 0.2)),
                audit_sampling=float(injection.get("audit_sampling", 0.01)),
            )
        return ScenarioConfig(**kwargs)

    def costs(self) -> dict:
        section = self._section("costs")
        return {
            "batch_gas": int(section.get("batch_gas", DEFAULT_BATCH_GAS)),
            "eth_usd": float(section.get("eth_usd", DEFAULT_ETH_USD)),
            "commitments": int(section.get("commitments", REFERENCE_BATCH_COMMITMENTS)),
            "gas_prices": [float(g) for g in
                           section.get("gas_prices", DEFAULT_GAS_PRICE_GRID)],
        }

    def config_echo(self) -> dict:
        return self.raw


# -- report output -------------------------------------------------------------


def _csv_tables(command: str, payload: Mapping) -> dict[str, tuple[list, list[str]]]:
    """Tabular views of a payload, keyed by table name."""
    tables: dict[str, tuple[list, list[str]]] = {}
    if command == "stress_fees":
        tables["cost"] = (payload["rows"],
                          ["gas_price_gwei", "batch_usd", "per_commitment_usd"])
    elif command == "stress_availability":
        tables["availability"] = (payload["rows"], [
            "availability", "replicas", "analytic", "expected_tries",
            "empirical", "empirical_tries", "within_3_sigma"])
    elif command == "stress_oracle":
        tables["detection"] = (payload["rows"], [
            "gate_rejection", "audit_sampling", "analytic", "empirical",
            "within_3_sigma"])
    elif command == "stress_batching":
        rows = []
        for row in payload["rows"]:
            flat = {"rate": row["rate"]}
            flat.update({f"analytic_{k}": v for k, v in row["analytic"].items()})
            flat.update({f"simulated_{k}": v for k, v in (row.get("simulated") or {}).items()})
            rows.append(flat)
        columns = sorted({k for row in rows for k in row}, key=lambda c: (c != "rate", c))
        tables["batching"] = (rows, columns)
    elif command == "stress_fairness":
        tables["fairness"] = (payload["rows"], [
            "gas_price_gwei", "batch_usd", "mass_threshold_lb", "ok"])
    elif command == "bench_evidence":
        rows = [
            {
                "size": bucket["size"],
                "upload_ms_p50": bucket["upload_ms"]["p50"],
                "upload_ms_p95": bucket["upload_ms"]["p95"],
                "fetch_ms_p50": bucket["fetch_ms"]["p50"],
                "fetch_ms_p95": bucket["fetch_ms"]["p95"],
            }
            for bucket in payload["per_size"]
        ]
        tables["evidence"] = (rows, ["size", "upload_ms_p50", "upload_ms_p95",
                                     "fetch_ms_p50", "fetch_ms_p95"])
    elif command == "scenario_run":
        tables["steps"] = (payload["step_outcomes"], [
            "step", "status", "revert_reason", "evidence_count", "block_number"])
        tables["negative_cases"] = (payload["negative_suite"]["cases"], [
            "name", "expected_reason", "status", "revert_reason",
            "state_unchanged", "passed"])
        metrics_row = {
            "completeness": payload["completeness"],
            "R": payload["evidence"]["R"],
            "M": payload["evidence"]["M"],
            "V": payload["evidence"]["V"],
            "evidence_anchored": payload["evidence"]["anchored"],
        }
        tables["metrics"] = ([metrics_row], list(metrics_row))
    return tables


def _emit(ctx: RunContext, command: str, doc: Mapping, payload: Mapping) -> list[Path]:
    ctx.out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in ctx.formats:
        path = ctx.out_dir / f"{command}.json"
        path.write_bytes(to_json_bytes(doc))
        written.append(path)
    tables = _csv_tables(command, payload)
    if "csv" in ctx.formats:
        for name, (rows, columns) in tables.items():
            path = ctx.out_dir / f"{command}_{name}.csv"
            path.write_text(rows_to_csv(rows, columns), encoding="utf-8")
            written.append(path)
    if "md" in ctx.formats:
        sections = [f"# provchain {command.replace('_', ' ')}", ""]
        for name, (rows, columns) in tables.items():
            sections.append(rows_to_markdown(name, rows, columns))
        if not tables:
            sections.append("```json")
            sections.append(to_json_bytes(payload).decode("utf-8").rstrip())
            sections.append("```")
        path = ctx.out_dir / f"{command}.md"
        path.write_text("\n".join(sections) + "\n", encoding="utf-8")
        written.append(path)
    return written


# -- subcommand handlers ---------------------------------------------------------


def cmd_scenario_run(ctx: RunContext, args) -> tuple[dict, int]:
    config = ctx.scenario()
    reference = run_reference(config)
    suite_result = run_negative_suite(config)
    payload = reference.to_payload()
    payload["negative_suite"] = suite_result.to_payload()
    if args.export_logs:
        ctx.out_dir.mkdir(parents=True, exist_ok=True)
        log_path = ctx.out_dir / "scenario_logs.jsonl"
        with log_path.open("w", encoding="utf-8") as stream:
            count = reference.world.ledger.export_logs_jsonl(stream)
        payload["exported_logs"] = {"path": log_path.name, "records": count}
        print(f"wrote {log_path}")
    if config.injection is not None:
        outcome = run_oracle_experiment(
            config.injection.false_events,
            config.injection.gate_rejection,
            config.injection.audit_sampling,
            ctx.seed,
        )
        payload["detection"] = outcome.to_payload()
    exit_code = EXIT_OK if suite_result.all_passed else EXIT_SUITE_FAILURE
    return payload, exit_code


def cmd_bench_anchor(ctx: RunContext, args) -> tuple[dict, int]:
    chain = ctx.chain()
    if args.max_batch_search:
        return {"max_batch": find_max_batch(chain),
                "per_tx_gas_cap": chain.per_tx_gas_cap,
                "gas_per_commitment": chain.gas_per_commitment}, EXIT_OK
    payload = run_anchor_benchmark(chain, blocks=args.blocks)
    code = EXIT_OK if payload.get("max_batch", 0) >= 1 else EXIT_SUITE_FAILURE
    return payload, code


def cmd_bench_evidence(ctx: RunContext, args) -> tuple[dict, int]:
    store, policy = ctx.store()
    report = run_evidence_loop(store, policy, seed=ctx.seed, repeats=args.repeats)
    return report.to_dict(), EXIT_OK


def cmd_bench_audit(ctx: RunContext, args) -> tuple[dict, int]:
    workload = audit.build_audit_workload(ctx.chain())
    report = audit.run_aql_benchmark(
        workload.ledger, workload.product_id, ctx.rpc(),
        runs=args.runs, warmup=args.warmup, seed=ctx.seed)
    report["workload"] = {
        "tx": workload.tx_count,
        "events": workload.event_count,
        "blocks": workload.block_count,
    }
    return report, EXIT_OK


def cmd_stress_batching(ctx: RunContext, args) -> tuple[dict, int]:
    policy = ctx.batch_policy()
    chain = ctx.chain()
    inclusion = chain.block_interval
    rows = []
    for rate in args.rate or DEFAULT_BATCHING_RATES:
        analytic = analytic_delay(rate, policy, inclusion_s=inclusion)
        row = {
            "rate": rate,
            "analytic": {
                "max_wait": analytic.max_wait,
                "mean_wait": analytic.mean_wait,
                "wait_p95": analytic.wait_p95,
                "mean_delay": analytic.mean_delay,
                "delay_p95": analytic.delay_p95,
            },
        }
        if not args.analytic_only:
            run = simulate(ArrivalModel(rate, args.arrivals), policy,
                           duration_s=args.duration, inclusion_s=inclusion,
                           seed=ctx.seed)
            row["simulated"] = {
                "mean_wait": run.mean_wait,
                "wait_p95": run.wait_p95,
                "mean_delay": run.mean_delay,
                "delay_p95": run.delay_p95,
                "mean_batch_size": run.mean_batch_size,
                "flushes": run.n_flushes,
            }
        rows.append(row)
    payload = {
        "policy": {"max_batch": policy.max_batch, "max_wait_s": policy.max_wait_s},
        "inclusion_s": inclusion,
        "arrivals": args.arrivals,
        "duration_s": args.duration,
        "rows": rows,
    }
    return payload, EXIT_OK


def cmd_stress_fees(ctx: RunContext, args) -> tuple[dict, int]:
    costs = ctx.costs()
    rows = cost_table(costs["gas_prices"], batch_gas=costs["batch_gas"],
                      eth_usd=costs["eth_usd"], commitments=costs["commitments"])
    payload = {
        "batch_gas": costs["batch_gas"],
        "eth_usd": costs["eth_usd"],
        "commitments": costs["commitments"],
        "rows": [
            {"gas_price_gwei": r.gas_price_gwei, "batch_usd": r.batch_usd,
             "per_commitment_usd": r.per_commitment_usd}
            for r in rows
        ],
    }
    return payload, EXIT_OK


def cmd_stress_fairness(ctx: RunContext, args) -> tuple[dict, int]:
    section = ctx._section("fairness")
    premium = args.premium if args.premium is not None else section.get("premium_usd_per_lb")
    if premium is None:
        raise DomainError(
            "a premium (USD per pound) is required: pass --premium or set "
            "[fairness].premium_usd_per_lb in the config")
    alpha = args.alpha if args.alpha is not None else float(
        section.get("overhead_fraction", 0.01))
    mass = args.mass if args.mass is not None else section.get("batch_mass_lb")
    costs = ctx.costs()
    rows = []
    for cost_row in cost_table(costs["gas_prices"], batch_gas=costs["batch_gas"],
                               eth_usd=costs["eth_usd"], commitments=costs["commitments"]):
        result = fairness_check(FairnessParams(
            premium_usd_per_lb=float(premium),
            batch_cost=cost_row.batch_usd,
            overhead_fraction=alpha,
            batch_mass_lb=float(mass) if mass is not None else None,
        ))
        rows.append({
            "gas_price_gwei": cost_row.gas_price_gwei,
            "batch_usd": cost_row.batch_usd,
            "mass_threshold_lb": result.mass_threshold_lb,
            "ok": result.ok,
        })
    payload = {
        "premium_usd_per_lb": float(premium),
        "overhead_fraction": alpha,
        "batch_mass_lb": float(mass) if mass is not None else None,
        "rows": rows,
    }
    return payload, EXIT_OK


def cmd_stress_availability(ctx: RunContext, args) -> tuple[dict, int]:
    rows = []
    for availability, replicas in DEFAULT_AVAILABILITY_GRID:
        analytic = retrieval_availability(availability, replicas)
        tries = expected_tries(availability, replicas)
        row = {
            "availability": availability,
            "replicas": replicas,
            "analytic": analytic,
            "expected_tries": tries,
        }
        if args.trials > 0:
            rng = substream(ctx.seed, "availability", availability, replicas)
            sample = simulate_churn(availability, replicas, args.trials, rng)
            sigma = (analytic * (1 - analytic) / args.trials) ** 0.5
            row.update({
                "empirical": sample.rate,
                "empirical_tries": sample.mean_tries_on_success,
                "within_3_sigma": abs(sample.rate - analytic) <= 3 * sigma,
            })
        rows.append(row)
    payload = {"trials": args.trials, "rows": rows}
    code = EXIT_OK
    if args.trials > 0 and not all(r["within_3_sigma"] for r in rows):
        code = EXIT_SUITE_FAILURE
    return payload, code


def cmd_stress_oracle(ctx: RunContext, args) -> tuple[dict, int]:
    rows = []
    for gate, sampling in DEFAULT_ORACLE_GRID:
        analytic = detection_probability(gate, sampling)
        row = {
            "gate_rejection": gate,
            "audit_sampling": sampling,
            "analytic": analytic,
        }
        if args.events > 0:
            outcome = run_oracle_experiment(args.events, gate, sampling, ctx.seed)
            sigma = (analytic * (1 - analytic) / args.events) ** 0.5
            row.update({
                "empirical": outcome.empirical,
                "within_3_sigma": abs(outcome.empirical - analytic) <= 3 * sigma,
            })
        rows.append(row)
    payload = {"events": args.events, "rows": rows}
    code = EXIT_OK
    if args.events > 0 and not all(r["within_3_sigma"] for r in rows):
        code = EXIT_SUITE_FAILURE
    return payload, code


_SCORECARD_SOURCES = {
    "scenario": "scenario_run.json",
    "evidence": "bench_evidence.json",
    "audit": "bench_audit.json",
    "batching": "stress_batching.json",
    "fees": "stress_fees.json",
    "availability": "stress_availability.json",
    "oracle": "stress_oracle.json",
    "fairness": "stress_fairness.json",
}


def cmd_report_scorecard(ctx: RunContext, args) -> tuple[dict, int]:
    artifacts: dict[str, Optional[dict]] = {}
    for name, filename in _SCORECARD_SOURCES.items():
        path = ctx.out_dir / filename
        if path.exists():
            artifacts[name] = json.loads(path.read_text(encoding="utf-8")).get("payload")
        else:
            artifacts[name] = None
    return scorecard(artifacts), EXIT_OK


# -- argument parsing ------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file (TOML, or JSON)")
    parser.add_argument("--seed", type=int, help=f"run seed (fallback: ${SEED_ENV_VAR})")
    parser.add_argument("--out", help="report output directory (default: reports)")
    parser.add_argument("--format", action="append", choices=("json", "csv", "md"),
                        help="report format, repeatable (default: json)")


def build_parser() -> CliParser:
    parser = CliParser(prog="provchain", description=__doc__)
    parser.add_argument("--version", action="version", version=f"provchain {__version__}")
    groups = parser.add_subparsers(dest="group", metavar="command", parser_class=CliParser)
    groups.required = True

    scenario_group = groups.add_parser("scenario",
                                       help="end-to-end lifecycle scenario")
    scenario_sub = scenario_group.add_subparsers(dest="action", metavar="action", parser_class=CliParser)
    scenario_sub.required = True
    run_p = scenario_sub.add_parser("run",
                                    help="reference lifecycle + negative suite")
    _add_common(run_p)
    run_p.add_argument("--export-logs", action="store_true",
                       help="also write the chain's event log as JSON lines")
    run_p.set_defaults(handler=cmd_scenario_run, command="scenario_run")

    bench_group = groups.add_parser("bench",
                                    help="calibrated benchmarks")
    bench_sub = bench_group.add_subparsers(dest="action", metavar="action", parser_class=CliParser)
    bench_sub.required = True
    anchor_p = bench_sub.add_parser("anchor",
                                    help="anchoring throughput and max batch size")
    _add_common(anchor_p)
    anchor_p.add_argument("--max-batch-search", action="store_true",
                          help="binary-search the max batch size and stop")
    anchor_p.add_argument("--blocks", type=int, default=60,
                          help="blocks to sustain (default 60)")
    anchor_p.set_defaults(handler=cmd_bench_anchor, command="bench_anchor")
    evidence_p = bench_sub.add_parser("evidence",
                                      help="upload/fetch/verify loop")
    _add_common(evidence_p)
    evidence_p.add_argument("--repeats", type=int, default=10,
                            help="objects per size bucket (default 10)")
    evidence_p.set_defaults(handler=cmd_bench_evidence, command="bench_evidence")
    audit_p = bench_sub.add_parser("audit",
                                   help="audit reconstruction latency")
    _add_common(audit_p)
    audit_p.add_argument("--runs", type=int, default=30)
    audit_p.add_argument("--warmup", type=int, default=3)
    audit_p.set_defaults(handler=cmd_bench_audit, command="bench_audit")

    stress_group = groups.add_parser("stress",
                                     help="model-based stress analyses")
    stress_sub = stress_group.add_subparsers(dest="action", metavar="action", parser_class=CliParser)
    stress_sub.required = True
    batching_p = stress_sub.add_parser("batching",
                                       help="batching delay, analytic vs simulated")
    _add_common(batching_p)
    batching_p.add_argument("--rate", action="append", type=float,
                            help="arrival rate, repeatable (default: reference grid)")
    batching_p.add_argument("--duration", type=float, default=600.0)
    batching_p.add_argument("--arrivals", choices=("deterministic", "poisson"),
                            default="deterministic")
    batching_p.add_argument("--analytic-only", action="store_true")
    batching_p.set_defaults(handler=cmd_stress_batching, command="stress_batching")
    fees_p = stress_sub.add_parser("fees",
                                   help="anchoring cost sensitivity")
    _add_common(fees_p)
    fees_p.set_defaults(handler=cmd_stress_fees, command="stress_fees")
    fairness_p = stress_sub.add_parser("fairness",
                                       help="premium-overhead break-even")
    _add_common(fairness_p)
    fairness_p.add_argument("--premium", type=float, help="premium, USD per pound")
    fairness_p.add_argument("--alpha", type=float, help="overhead fraction (default 0.01)")
    fairness_p.add_argument("--mass", type=float, help="batch mass in pounds")
    fairness_p.set_defaults(handler=cmd_stress_fairness, command="stress_fairness")
    availability_p = stress_sub.add_parser("availability",
                                           help="evidence availability under churn")
    _add_common(availability_p)
    availability_p.add_argument("--trials", type=int, default=100_000,
                                help="Monte-Carlo trials per cell (0 = analytic only)")
    availability_p.set_defaults(handler=cmd_stress_availability,
                                command="stress_availability")
    oracle_p = stress_sub.add_parser("oracle",
                                     help="false-input detection sensitivity")
    _add_common(oracle_p)
    oracle_p.add_argument("--events", type=int, default=100_000,
                          help="injected events per cell (0 = analytic only)")
    oracle_p.set_defaults(handler=cmd_stress_oracle, command="stress_oracle")

    report_group = groups.add_parser("report",
                                     help="assembled reports")
    report_sub = report_group.add_subparsers(dest="action", metavar="action", parser_class=CliParser)
    report_sub.required = True
    scorecard_p = report_sub.add_parser("scorecard",
                                        help="principle-keyed scorecard")
    _add_common(scorecard_p)
    scorecard_p.set_defaults(handler=cmd_report_scorecard, command="scorecard")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        ctx = RunContext(args)
        payload, exit_code = args.handler(ctx, args)
    except SuiteFailure as exc:
        print(f"suite failure: {exc}", file=sys.stderr)
        return EXIT_SUITE_FAILURE
    except (ProvchainError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    doc = make_report(
        command=args.command,
        version=__version__,
        seed=ctx.seed,
        config_echo=ctx.config_echo(),
        payload=payload,
        deterministic=True,
    )
    written = _emit(ctx, args.command, doc, payload)
    for path in written:
        print(f"wrote {path}")
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
