"""Benchmark instances and their on-disk form.

Datasets are UTF-8 JSON-lines, one instance per line, schema-versioned.
Each line carries the formal layer (premises, goal, the instantiated DAG
and its exhaustive ground truth in premise-id space), the NL layer, and
enough provenance (seed, config hash, catalog and generator versions) to
regenerate the instance from scratch.

Premises are presented to models as numbered Facts (literals) and Rules
(everything compound), and candidate solutions cite them by those labels.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .dag import (
    DagStats,
    GroundTruth,
    InferenceNode,
    LogicDag,
    ShareEvent,
    Solution,
    derive_seed,
)
from .entailment import PremiseSet
from .formulas import Atom, AtomRef, Formula, Not, format_formula, parse_formula
from .instantiate import SymbolMap, VerbalizedInstance

__all__ = [
    "SCHEMA_ID",
    "GENERATOR_VERSION",
    "DatasetError",
    "InsufficientPoolError",
    "Premise",
    "BenchmarkInstance",
    "build_instance",
    "instance_to_dict",
    "instance_from_dict",
    "write_dataset",
    "read_dataset",
    "stratified_sample",
    "export_dot",
    "config_hash",
]

SCHEMA_ID = "multipath-proof-bench/v1"
GENERATOR_VERSION = "0.1.0"


class DatasetError(ValueError):
    pass


class InsufficientPoolError(DatasetError):
    def __init__(self, tier: str, have: int, need: int):
        self.tier = tier
        super().__init__(f"tier {tier!r} has {have} instances, need {need}")


@dataclass(frozen=True)
class Premise:
    premise_id: int
    kind: str  # "fact" | "rule"
    label: str  # e.g. "Fact 2", "Rule 5"
    formula: Formula
    text: str


@dataclass
class BenchmarkInstance:
    instance_id: str
    tier: str
    domain: str
    context: str
    premises: list[Premise]
    goal_formula: Formula
    goal_text: str
    atom_glosses: dict[str, str]  # formatted atom -> gloss
    dag: LogicDag  # instantiated vocabulary; node-id space
    ground_truth: GroundTruth  # supports in premise-id space
    provenance: dict = field(default_factory=dict)

    @property
    def premise_set(self) -> PremiseSet:
        return PremiseSet.from_formulas(p.formula for p in self.premises)

    @property
    def vocabulary(self) -> frozenset[Atom]:
        atoms: set[Atom] = set()
        for p in self.premises:
            atoms.update(_formula_atoms(p.formula))
        atoms.update(_formula_atoms(self.goal_formula))
        return frozenset(atoms)

    def premises_of_kind(self, kind: str) -> list[Premise]:
        return [p for p in self.premises if p.kind == kind]

    def premise_by_label(self, kind: str, number: int) -> Premise | None:
        of_kind = self.premises_of_kind(kind)
        if 1 <= number <= len(of_kind):
            return of_kind[number - 1]
        return None

    def gloss_atom_lookup(self) -> dict[str, Atom]:
        """Casefolded gloss text -> atom, for template inversion."""
        out: dict[str, Atom] = {}
        for atom_text, gloss in self.atom_glosses.items():
            parsed = parse_formula(atom_text)
            assert isinstance(parsed, AtomRef)
            out[gloss.casefold()] = parsed.atom
        return out

    def sentence_formulas(self) -> dict[str, Formula]:
        """Casefolded premise/goal sentence -> its stored formula."""
        out = {p.text.casefold(): p.formula for p in self.premises}
        out[self.goal_text.casefold()] = self.goal_formula
        return out


def _formula_atoms(f: Formula) -> frozenset[Atom]:
    from .formulas import atoms_of

    return atoms_of(f)


def _is_literal(f: Formula) -> bool:
    return isinstance(f, AtomRef) or (isinstance(f, Not) and isinstance(f.operand, AtomRef))


def build_instance(
    dag: LogicDag,
    gt: GroundTruth,
    symbol_map: SymbolMap,
    verbalized: VerbalizedInstance,
    *,
    instance_id: str,
    tier: str,
    domain: str,
    provenance: dict | None = None,
) -> BenchmarkInstance:
    """Assemble the persisted instance from the generation artifacts.

    The DAG is rewritten through the symbol map so that premises, goal and
    DAG share one vocabulary; ground-truth supports are remapped from leaf
    node ids to premise ids (1-based, in sorted leaf order).
    """
    leaf_order = sorted(dag.leaf_ids)
    node_to_premise = {node_id: i for i, node_id in enumerate(leaf_order, start=1)}
    mapped_dag = dag.map_formulas(symbol_map.apply)

    if len(verbalized.premise_sentences) != len(leaf_order):
        raise DatasetError("premise sentences do not align with leaves")

    premises: list[Premise] = []
    fact_count = rule_count = 0
    for i, node_id in enumerate(leaf_order, start=1):
        formula = mapped_dag.formula_nodes[node_id]
        if _is_literal(formula):
            fact_count += 1
            kind, label = "fact", f"Fact {fact_count}"
        else:
            rule_count += 1
            kind, label = "rule", f"Rule {rule_count}"
        premises.append(
            Premise(
                premise_id=i,
                kind=kind,
                label=label,
                formula=formula,
                text=verbalized.premise_sentences[i - 1],
            )
        )

    remapped_solutions = tuple(
        Solution(
            support=frozenset(node_to_premise[n] for n in sol.support),
            inference_node_ids=sol.inference_node_ids,
            length=sol.length,
        )
        for sol in gt.solutions
    )
    ground_truth = GroundTruth(
        solutions=remapped_solutions, families=gt.families, stats=gt.stats
    )

    glosses = {format_formula(AtomRef(atom)): text for atom, text in symbol_map.glosses.items()}
    return BenchmarkInstance(
        instance_id=instance_id,
        tier=tier,
        domain=domain,
        context=verbalized.context,
        premises=premises,
        goal_formula=mapped_dag.goal_formula(),
        goal_text=verbalized.goal_sentence,
        atom_glosses=glosses,
        dag=mapped_dag,
        ground_truth=ground_truth,
        provenance=dict(provenance or {}),
    )


# --- serialization ------------------------------------------------------------


def instance_to_dict(instance: BenchmarkInstance) -> dict:
    dag = instance.dag
    return {
        "schema": SCHEMA_ID,
        "instance_id": instance.instance_id,
        "tier": instance.tier,
        "domain": instance.domain,
        "context": instance.context,
        "premises": [
            {
                "id": p.premise_id,
                "kind": p.kind,
                "label": p.label,
                "formula": format_formula(p.formula),
                "text": p.text,
            }
            for p in instance.premises
        ],
        "goal": {
            "formula": format_formula(instance.goal_formula),
            "text": instance.goal_text,
        },
        "atom_glosses": dict(sorted(instance.atom_glosses.items())),
        "dag": {
            "goal_id": dag.goal_id,
            "leaf_ids": sorted(dag.leaf_ids),
            "seed": dag.seed,
            "formula_nodes": {
                str(i): format_formula(f) for i, f in sorted(dag.formula_nodes.items())
            },
            "inference_nodes": [
                {
                    "id": e.node_id,
                    "form": e.form_kind,
                    "premises": list(e.local_premises),
                    "conclusion": e.conclusion,
                }
                for e in dag.inference_nodes
            ],
            "shares": [
                {"inference": s.inference_id, "node": s.reused_node} for s in dag.shares
            ],
        },
        "ground_truth": {
            "solutions": [
                {
                    "support": sorted(sol.support),
                    "inference_nodes": sorted(sol.inference_node_ids),
                    "length": sol.length,
                }
                for sol in instance.ground_truth.solutions
            ],
            "families": [list(f) for f in instance.ground_truth.families],
            "stats": {
                "depth": instance.ground_truth.stats.depth,
                "n_paths": instance.ground_truth.stats.n_paths,
                "reuse_ratio": instance.ground_truth.stats.reuse_ratio,
            },
        },
        "provenance": dict(instance.provenance),
    }


def instance_from_dict(data: dict) -> BenchmarkInstance:
    if data.get("schema") != SCHEMA_ID:
        raise DatasetError(f"unsupported schema {data.get('schema')!r}")
    dag_data = data["dag"]
    dag = LogicDag(
        formula_nodes={int(i): parse_formula(t) for i, t in dag_data["formula_nodes"].items()},
        leaf_ids=set(dag_data["leaf_ids"]),
        goal_id=dag_data["goal_id"],
        inference_nodes=[
            InferenceNode(
                node_id=e["id"],
                form_kind=e["form"],
                local_premises=tuple(e["premises"]),
                conclusion=e["conclusion"],
            )
            for e in dag_data["inference_nodes"]
        ],
        seed=dag_data.get("seed", 0),
        config=None,
        shares=[ShareEvent(s["inference"], s["node"]) for s in dag_data.get("shares", [])],
    )
    gt_data = data["ground_truth"]
    ground_truth = GroundTruth(
        solutions=tuple(
            Solution(
                support=frozenset(sol["support"]),
                inference_node_ids=frozenset(sol["inference_nodes"]),
                length=sol["length"],
            )
            for sol in gt_data["solutions"]
        ),
        families=tuple(tuple(f) for f in gt_data["families"]),
        stats=DagStats(
            depth=gt_data["stats"]["depth"],
            n_paths=gt_data["stats"]["n_paths"],
            reuse_ratio=gt_data["stats"]["reuse_ratio"],
        ),
    )
    premises = [
        Premise(
            premise_id=p["id"],
            kind=p["kind"],
            label=p["label"],
            formula=parse_formula(p["formula"]),
            text=p["text"],
        )
        for p in data["premises"]
    ]
    return BenchmarkInstance(
        instance_id=data["instance_id"],
        tier=data["tier"],
        domain=data["domain"],
        context=data["context"],
        premises=premises,
        goal_formula=parse_formula(data["goal"]["formula"]),
        goal_text=data["goal"]["text"],
        atom_glosses=dict(data["atom_glosses"]),
        dag=dag,
        ground_truth=ground_truth,
        provenance=dict(data.get("provenance", {})),
    )


def write_dataset(instances: Iterable[BenchmarkInstance], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for instance in instances:
            handle.write(
                json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":"))
            )
            handle.write("\n")


def read_dataset(path: str | Path) -> list[BenchmarkInstance]:
    out: list[BenchmarkInstance] = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(instance_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise DatasetError(f"{path}:{line_no}: {exc}") from exc
    return out


def stratified_sample(
    pool: Sequence[BenchmarkInstance], per_tier: int, *, seed: int = 0
) -> list[BenchmarkInstance]:
    """Uniform without-replacement sample of ``per_tier`` instances per tier."""
    by_tier: dict[str, list[BenchmarkInstance]] = {}
    for instance in pool:
        by_tier.setdefault(instance.tier, []).append(instance)
    sampled: list[BenchmarkInstance] = []
    for tier in sorted(by_tier):
        members = sorted(by_tier[tier], key=lambda i: i.instance_id)
        if len(members) < per_tier:
            raise InsufficientPoolError(tier, len(members), per_tier)
        rng = random.Random(derive_seed(seed, "sample", tier))
        sampled.extend(rng.sample(members, per_tier))
    sampled.sort(key=lambda i: i.instance_id)
    return sampled


def config_hash(config) -> str:
    blob = json.dumps(
        {k: list(v) if isinstance(v, tuple) else v for k, v in vars(config).items()},
        sort_keys=True,
        default=str,
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def export_dot(dag: LogicDag, title: str = "proof_dag") -> str:
    """Graphviz rendering: record node per rule, edges premise->rule->conclusion."""
    lines = [f"digraph {json.dumps(title)} {{", "  rankdir=BT;"]
    for node_id in sorted(dag.formula_nodes):
        label = format_formula(dag.formula_nodes[node_id]).replace('"', '\\"')
        shape = "box" if node_id in dag.leaf_ids else "ellipse"
        lines.append(f'  n{node_id} [shape={shape} label="{node_id}: {label}"];')
    for e in sorted(dag.inference_nodes, key=lambda e: e.node_id):
        lines.append(f'  e{e.node_id} [shape=record label="e{e.node_id}|{e.form_kind}"];')
        for p in e.local_premises:
            lines.append(f"  n{p} -> e{e.node_id};")
        lines.append(f"  e{e.node_id} -> n{e.conclusion};")
    lines.append("}")
    return "\n".join(lines) + "\n"
