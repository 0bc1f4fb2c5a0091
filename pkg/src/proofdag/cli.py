"""Command-line pipeline: generate | validate | evaluate | report.

Offline mode (deterministic template instantiation) is the default so the
whole pipeline runs hermetically; client-backed instantiation is opt-in
via --endpoint plus a client config file.  Exit codes: 0 success, 1
validation failures present, 2 configuration error, 3 I/O or transport
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .catalog import CATALOG_VERSION, DOMAIN_PROFILES
from .client import ClientConfig, ClientError, TextCompletionClient
from .dag import (
    TIER_BANDS,
    GenerationConfig,
    GenerationError,
    derive_seed,
    generate_instance,
)
from .dataset import (
    GENERATOR_VERSION,
    BenchmarkInstance,
    DatasetError,
    build_instance,
    config_hash,
    export_dot,
    read_dataset,
    stratified_sample,
    write_dataset,
)
from .evaluation import (
    MINIMIZATION_RULE,
    RawResponse,
    ResponseEvaluation,
    evaluate_response,
)
from .instantiate import InstantiationError, assign_semantics, verbalize
from .metrics import (
    aggregate_report,
    case_result_from_record,
    per_case_detail,
    report_csv,
    report_table,
)
from .validator import validate_instance

EXIT_OK = 0
EXIT_VALIDATION_FAILURES = 1
EXIT_CONFIG = 2
EXIT_IO = 3


class ConfigError(ValueError):
    pass


def _add_common_generation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--tier", choices=sorted(TIER_BANDS), help="generate one tier only")
    parser.add_argument("--count", type=int, help="instances for --tier")
    parser.add_argument("--per-tier", type=int, help="instances per tier (all three)")
    parser.add_argument(
        "--oversample",
        type=int,
        default=0,
        help="extra instances per tier, stratified-sampled back down",
    )
    parser.add_argument("--offline", action="store_true", help="force template fallback")
    parser.add_argument("--endpoint", help="text-generation endpoint URL")
    parser.add_argument("--client-config", help="JSON file with client settings")
    parser.add_argument("--workers", type=int, default=1, help="client-call parallelism")
    parser.add_argument("--out", default="dataset.jsonl", help="output dataset path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proofdag",
        description="Generate, validate, evaluate and report on multi-path proof benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a solver-verified dataset")
    _add_common_generation_flags(gen)

    val = sub.add_parser("validate", help="re-run the acceptance gate on a dataset")
    val.add_argument("--dataset", required=True)
    val.add_argument("--out", help="path for the surviving instances")
    val.add_argument("--report", help="path for the per-check failure table (JSON)")

    ev = sub.add_parser("evaluate", help="score model responses against a dataset")
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--responses", required=True, help="directory or JSON-lines file")
    ev.add_argument("--out", default="verdicts.jsonl")
    ev.add_argument("--endpoint", help="text-generation endpoint URL")
    ev.add_argument("--client-config", help="JSON file with client settings")
    ev.add_argument("--offline", action="store_true", help="force offline formalization")
    ev.add_argument("--workers", type=int, default=1)

    rep = sub.add_parser("report", help="aggregate verdicts into metric reports")
    rep.add_argument("--verdicts", required=True)
    rep.add_argument("--out-dir", default="reports")
    rep.add_argument("--dot", help="also export this instance's DAG as DOT")
    rep.add_argument("--dataset", help="dataset path (needed for --dot)")

    return parser


def _build_client(args) -> TextCompletionClient | None:
    if getattr(args, "offline", False):
        return None
    endpoint = getattr(args, "endpoint", None)
    config_path = getattr(args, "client_config", None)
    if not endpoint and not config_path:
        return None
    settings: dict = {}
    if config_path:
        try:
            settings = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read client config: {exc}") from exc
    if endpoint:
        settings["endpoint"] = endpoint
    settings.setdefault("model", "default")
    if "endpoint" not in settings:
        raise ConfigError("client config needs an endpoint")
    try:
        return TextCompletionClient(ClientConfig.from_dict(settings))
    except TypeError as exc:
        raise ConfigError(f"bad client config: {exc}") from exc


def _generation_plan(args) -> list[tuple[str, int]]:
    if args.per_tier is not None and (args.tier or args.count is not None):
        raise ConfigError("--per-tier cannot be combined with --tier/--count")
    if args.per_tier is not None:
        if args.per_tier < 0:
            raise ConfigError("--per-tier must be non-negative")
        return [(tier, args.per_tier + args.oversample) for tier in ("small", "medium", "large")]
    if args.tier:
        count = args.count if args.count is not None else 10
        if count < 0:
            raise ConfigError("--count must be non-negative")
        return [(args.tier, count + args.oversample)]
    raise ConfigError("specify --per-tier N or --tier T [--count N]")


def _generate_one(
    master_seed: int, tier: str, index: int, client: TextCompletionClient | None
) -> tuple[BenchmarkInstance | None, list[str]]:
    """Build one accepted instance, resampling seeds past rejections."""
    rejects: list[str] = []
    for attempt in range(50):
        seed = derive_seed(master_seed, tier, index, attempt)
        config = GenerationConfig(seed=seed, tier=tier)
        try:
            dag, gt = generate_instance(config)
        except GenerationError as exc:
            rejects.append(f"{tier}/{index}: generation retry ({exc})")
            continue
        profile = DOMAIN_PROFILES[
            derive_seed(master_seed, "domain", tier, index) % len(DOMAIN_PROFILES)
        ]
        try:
            symbol_map = assign_semantics(dag, profile, client, seed=seed)
            verbalized = verbalize(dag, symbol_map, profile, client)
        except InstantiationError as exc:
            rejects.append(f"{tier}/{index}: instantiation failed ({exc})")
            continue
        instance = build_instance(
            dag,
            gt,
            symbol_map,
            verbalized,
            instance_id=f"{tier}-{index:04d}-{seed:016x}",
            tier=tier,
            domain=profile.domain_name,
            provenance={
                "seed": seed,
                "master_seed": master_seed,
                "config_hash": config_hash(config),
                "catalog_version": CATALOG_VERSION,
                "generator_version": GENERATOR_VERSION,
            },
        )
        report = validate_instance(instance)
        if report.accepted:
            return instance, rejects
        rejects.append(f"{instance.instance_id}: {report.verdict}")
    return None, rejects


def cmd_generate(args) -> int:
    plan = _generation_plan(args)
    client = _build_client(args)
    instances: list[BenchmarkInstance] = []
    all_rejects: list[str] = []
    jobs = [(tier, i) for tier, count in plan for i in range(count)]
    if client is not None and args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(
                pool.map(lambda job: _generate_one(args.seed, job[0], job[1], client), jobs)
            )
    else:
        results = [_generate_one(args.seed, tier, i, client) for tier, i in jobs]
    for (instance, rejects), (tier, i) in zip(results, jobs):
        all_rejects.extend(rejects)
        if instance is None:
            print(f"error: could not build instance {tier}/{i}", file=sys.stderr)
            return EXIT_VALIDATION_FAILURES
        instances.append(instance)
    if args.oversample:
        keep = plan[0][1] - args.oversample
        instances = stratified_sample(instances, keep, seed=args.seed)
    for line in all_rejects:
        print(f"rejected: {line}", file=sys.stderr)
    write_dataset(instances, args.out)
    print(f"wrote {len(instances)} instances to {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    instances = read_dataset(args.dataset)
    survivors: list[BenchmarkInstance] = []
    failures: list[dict] = []
    for instance in instances:
        report = validate_instance(instance)
        if report.accepted:
            survivors.append(instance)
        else:
            failures.append(
                {
                    "instance_id": instance.instance_id,
                    "verdict": report.verdict,
                    "stepwise_failures": [i for i, ok in report.stepwise if not ok],
                    "global_pass": report.global_pass,
                    "consistency_pass": report.consistency_pass,
                }
            )
    if args.out:
        write_dataset(survivors, args.out)
    if args.report:
        Path(args.report).write_text(
            json.dumps({"failures": failures, "survivors": len(survivors)}, indent=2),
            encoding="utf-8",
        )
    print(f"{len(survivors)}/{len(instances)} instances pass validation")
    for failure in failures:
        print(f"  {failure['instance_id']}: {failure['verdict']}")
    return EXIT_VALIDATION_FAILURES if failures else EXIT_OK


def _load_responses(path: Path) -> list[RawResponse]:
    responses: list[RawResponse] = []
    if path.is_dir():
        for instance_dir in sorted(p for p in path.iterdir() if p.is_dir()):
            for response_file in sorted(instance_dir.glob("*.txt")):
                responses.append(
                    RawResponse(
                        instance_id=instance_dir.name,
                        model_name=response_file.stem,
                        text=response_file.read_text(encoding="utf-8"),
                    )
                )
        return responses
    with path.open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            responses.append(
                RawResponse(
                    instance_id=record["instance_id"],
                    model_name=record["model_name"],
                    text=record["text"],
                    completion_tokens=record.get("completion_tokens"),
                )
            )
    return responses


def _verdict_record(evaluation: ResponseEvaluation, instance: BenchmarkInstance) -> dict:
    gt = instance.ground_truth
    return {
        "instance_id": evaluation.instance_id,
        "model_name": evaluation.model_name,
        "tier": instance.tier,
        "gt_solution_count": len(gt.solutions),
        "gt_families": [list(f) for f in gt.families],
        "min_gt_length": min(s.length for s in gt.solutions),
        "unparseable": evaluation.unparseable,
        "completion_tokens": evaluation.completion_tokens,
        "minimization_rule": MINIMIZATION_RULE,
        "candidates": [
            {
                "solution_index": candidate.solution_index,
                "length": verdict.length,
                "locally_valid": list(verdict.locally_valid),
                "globally_valid": verdict.globally_valid,
                "concluded_goal": verdict.concluded_goal,
                "valid": verdict.fully_valid,
                "matched_solution_id": verdict.matched_solution_id,
                "matched_support": sorted(verdict.matched_support)
                if verdict.matched_support
                else None,
                "used_premises": sorted(verdict.used_premise_ids),
                "error_labels": {
                    str(step): [label.kind.value for label in labels]
                    for step, labels in verdict.error_labels.items()
                },
            }
            for candidate, verdict in evaluation.candidates
        ],
    }


def cmd_evaluate(args) -> int:
    instances = {i.instance_id: i for i in read_dataset(args.dataset)}
    responses_path = Path(args.responses)
    if not responses_path.exists():
        raise ConfigError(f"responses path {responses_path} does not exist")
    responses = _load_responses(responses_path)
    client = _build_client(args)
    records: list[dict] = []
    missing = 0

    def run(response: RawResponse) -> dict | None:
        instance = instances.get(response.instance_id)
        if instance is None:
            return None
        return _verdict_record(evaluate_response(response, instance, client), instance)

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            outcomes = list(pool.map(run, responses))
    else:
        outcomes = [run(r) for r in responses]
    for response, outcome in zip(responses, outcomes):
        if outcome is None:
            missing += 1
            print(f"warning: no instance {response.instance_id}", file=sys.stderr)
        else:
            records.append(outcome)
    records.sort(key=lambda r: (r["model_name"], r["instance_id"]))
    with Path(args.out).open("w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
    if not responses:
        print("warning: no responses found", file=sys.stderr)
    print(f"evaluated {len(records)} responses ({missing} without a matching instance)")
    return EXIT_OK


def cmd_report(args) -> int:
    records = []
    with Path(args.verdicts).open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    results_by_model: dict[str, list] = {}
    for record in records:
        results_by_model.setdefault(record["model_name"], []).append(
            case_result_from_record(record)
        )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = aggregate_report(results_by_model)
    (out_dir / "report.csv").write_text(report_csv(reports), encoding="utf-8")
    table = report_table(reports)
    (out_dir / "report.txt").write_text(table, encoding="utf-8")
    (out_dir / "per_case.json").write_text(
        per_case_detail(results_by_model), encoding="utf-8"
    )
    if args.dot:
        if not args.dataset:
            raise ConfigError("--dot needs --dataset")
        instances = {i.instance_id: i for i in read_dataset(args.dataset)}
        instance = instances.get(args.dot)
        if instance is None:
            raise ConfigError(f"instance {args.dot} not in dataset")
        (out_dir / f"{args.dot}.dot").write_text(
            export_dot(instance.dag, title=args.dot), encoding="utf-8"
        )
    print(table, end="")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "generate": cmd_generate,
        "validate": cmd_validate,
        "evaluate": cmd_evaluate,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, DatasetError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ClientError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
