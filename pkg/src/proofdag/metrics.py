"""Convergent and divergent metric suite, aggregated per tier.

Convergent: success rate (cases with at least one valid proof), precision
(valid candidates over all emitted candidates) and shortest-path-finding
rate (cases with a valid candidate at the minimum ground-truth length).
Divergent: diversity (matched ground-truth solutions over all of them),
versatility (families covered over all families) and originality
(rarity-weighted recall: each matched solution counts 1/k where k models
found it, normalized by the solution-space size).

All rates are case-averaged percentages in [0, 100].  The per-metric
"avg" is the unweighted mean of the three tier values; token efficiency
is the plain mean of completion tokens over all responses that carry a
count, and is absent (not zero) when no counts exist.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

__all__ = [
    "TIER_ORDER",
    "CONVERGENT_METRICS",
    "DIVERGENT_METRICS",
    "CandidateSummary",
    "CaseResult",
    "ModelReport",
    "OriginalityContextError",
    "convergent_metrics",
    "divergent_metrics",
    "token_efficiency",
    "aggregate_report",
    "report_csv",
    "report_table",
    "per_case_detail",
    "case_result_from_record",
]

TIER_ORDER = ("small", "medium", "large")
CONVERGENT_METRICS = ("success_rate", "precision", "spf_rate")
DIVERGENT_METRICS = ("diversity", "versatility", "originality")


class OriginalityContextError(ValueError):
    """Originality needs every evaluated model's matched-solution sets."""


@dataclass(frozen=True)
class CandidateSummary:
    valid: bool
    matched_id: int | None
    length: int


@dataclass(frozen=True)
class CaseResult:
    instance_id: str
    tier: str
    gt_solution_count: int
    gt_families: tuple[tuple[int, ...], ...]
    min_gt_length: int
    candidates: tuple[CandidateSummary, ...]
    completion_tokens: int | None = None
    unparseable: bool = False

    def matched_ids(self) -> frozenset[int]:
        return frozenset(
            c.matched_id for c in self.candidates if c.valid and c.matched_id is not None
        )


@dataclass
class ModelReport:
    model_name: str
    per_tier: dict[str, dict[str, float | None]]
    average: dict[str, float | None]
    metadata: dict = field(default_factory=dict)


def convergent_metrics(results: Sequence[CaseResult]) -> dict:
    if not results:
        raise ValueError("no case results")
    cases = len(results)
    with_valid = sum(1 for r in results if any(c.valid for c in r.candidates))
    total_candidates = sum(len(r.candidates) for r in results)
    valid_candidates = sum(sum(1 for c in r.candidates if c.valid) for r in results)
    shortest = sum(
        1
        for r in results
        if any(c.valid and c.length == r.min_gt_length for c in r.candidates)
    )
    return {
        "success_rate": 100.0 * with_valid / cases,
        "precision": 100.0 * valid_candidates / total_candidates if total_candidates else 0.0,
        "spf_rate": 100.0 * shortest / cases,
        "no_candidates": total_candidates == 0,
    }


def _case_diversity(result: CaseResult) -> float:
    return len(result.matched_ids()) / result.gt_solution_count

def _case_versatility(result: CaseResult) -> float:
    if not result.gt_families:
        return 0.0
    matched = result.matched_ids()
    covered = sum(1 for family in result.gt_families if any(s in matched for s in family))
    return covered / len(result.gt_families)


def divergent_metrics(
    results: Sequence[CaseResult],
    *,
    cross_model: Mapping[str, Mapping[str, frozenset[int]]] | None = None,
    model_name: str | None = None,
) -> dict:
    """Diversity and versatility; originality too when the cross-model
    context (model -> instance -> matched ids) and this model's name are
    both supplied."""
    if not results:
        raise ValueError("no case results")
    if (cross_model is None) != (model_name is None):
        raise OriginalityContextError(
            "originality needs both cross_model and model_name (or neither)"
        )
    out = {
        "diversity": 100.0 * sum(_case_diversity(r) for r in results) / len(results),
        "versatility": 100.0 * sum(_case_versatility(r) for r in results) / len(results),
    }
    if cross_model is not None:
        total = 0.0
        for r in results:
            discovery_counts = {
                s: sum(
                    1
                    for model_matches in cross_model.values()
                    if s in model_matches.get(r.instance_id, frozenset())
                )
                for s in r.matched_ids()
            }
            contribution = sum(1.0 / k for k in discovery_counts.values() if k > 0)
            total += contribution / r.gt_solution_count
        out["originality"] = 100.0 * total / len(results)
    return out


def token_efficiency(results: Sequence[CaseResult]) -> float | None:
    """Mean completion tokens per response; absent when no counts exist."""
    counts = [r.completion_tokens for r in results if r.completion_tokens is not None]
    if not counts:
        return None
    return sum(counts) / len(counts)


def _tier_mean(values: Iterable[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return sum(present) / len(present)


def aggregate_report(
    results_by_model: Mapping[str, Sequence[CaseResult]]
) -> list[ModelReport]:
    """Per-tier and averaged metrics for every model, with originality
    computed jointly across all supplied models."""
    cross_model = {
        model: {r.instance_id: r.matched_ids() for r in results}
        for model, results in results_by_model.items()
    }
    reports: list[ModelReport] = []
    for model in sorted(results_by_model):
        results = list(results_by_model[model])
        per_tier: dict[str, dict[str, float | None]] = {}
        for tier in TIER_ORDER:
            tier_results = [r for r in results if r.tier == tier]
            if not tier_results:
                per_tier[tier] = {m: None for m in CONVERGENT_METRICS + DIVERGENT_METRICS}
                per_tier[tier]["token_efficiency"] = None
                continue
            metrics = convergent_metrics(tier_results)
            metrics.pop("no_candidates")
            metrics.update(
                divergent_metrics(tier_results, cross_model=cross_model, model_name=model)
            )
            metrics["token_efficiency"] = token_efficiency(tier_results)
            per_tier[tier] = metrics
        unknown = [r for r in results if r.tier not in TIER_ORDER]
        if unknown:
            raise ValueError(f"unknown tier {unknown[0].tier!r}")
        average = {
            metric: _tier_mean(per_tier[tier][metric] for tier in TIER_ORDER)
            for metric in CONVERGENT_METRICS + DIVERGENT_METRICS
        }
        average["token_efficiency"] = token_efficiency(results)
        reports.append(
            ModelReport(
                model_name=model,
                per_tier=per_tier,
                average=average,
                metadata={
                    "originality_weighting": "1/k per matched solution over |S_GT|",
                    "spf_scope": "case_level",
                    "precision_counts_duplicates": True,
                },
            )
        )
    return reports


def report_csv(reports: Sequence[ModelReport]) -> str:
    lines = ["model,tier,metric,value"]
    metrics = CONVERGENT_METRICS + DIVERGENT_METRICS + ("token_efficiency",)
    for report in reports:
        for tier in TIER_ORDER + ("avg",):
            values = report.average if tier == "avg" else report.per_tier[tier]
            for metric in metrics:
                value = values.get(metric)
                rendered = "" if value is None else f"{value:.2f}"
                lines.append(f"{report.model_name},{tier},{metric},{rendered}")
    return "\n".join(lines) + "\n"


def report_table(reports: Sequence[ModelReport]) -> str:
    metrics = CONVERGENT_METRICS + DIVERGENT_METRICS + ("token_efficiency",)
    header = ["model", "tier"] + list(metrics)
    rows: list[list[str]] = []
    for report in reports:
        for tier in TIER_ORDER + ("avg",):
            values = report.average if tier == "avg" else report.per_tier[tier]
            row = [report.model_name, tier]
            for metric in metrics:
                value = values.get(metric)
                row.append("-" if value is None else f"{value:.2f}")
            rows.append(row)
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    def fmt(row: list[str]) -> str:
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
    return "\n".join([fmt(header)] + [fmt(r) for r in rows]) + "\n"


def per_case_detail(results_by_model: Mapping[str, Sequence[CaseResult]]) -> str:
    detail = {
        model: [
            {
                "instance_id": r.instance_id,
                "tier": r.tier,
                "gt_solution_count": r.gt_solution_count,
                "matched_ids": sorted(r.matched_ids()),
                "candidates": [
                    {"valid": c.valid, "matched_id": c.matched_id, "length": c.length}
                    for c in r.candidates
                ],
                "completion_tokens": r.completion_tokens,
                "unparseable": r.unparseable,
            }
            for r in sorted(results, key=lambda r: r.instance_id)
        ]
        for model, results in sorted(results_by_model.items())
    }
    return json.dumps(detail, indent=2, sort_keys=True) + "\n"


def case_result_from_record(record: dict) -> CaseResult:
    """Rebuild a CaseResult from a persisted verdict record."""
    return CaseResult(
        instance_id=record["instance_id"],
        tier=record["tier"],
        gt_solution_count=record["gt_solution_count"],
        gt_families=tuple(tuple(f) for f in record["gt_families"]),
        min_gt_length=record["min_gt_length"],
        candidates=tuple(
            CandidateSummary(
                valid=c["valid"],
                matched_id=c.get("matched_solution_id"),
                length=c["length"],
            )
            for c in record["candidates"]
        ),
        completion_tokens=record.get("completion_tokens"),
        unparseable=record.get("unparseable", False),
    )
