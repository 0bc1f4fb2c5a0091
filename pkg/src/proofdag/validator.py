"""The instance acceptance gate: three symbolic checks per instance.

Stepwise entailment verifies each rule application locally; global
derivability walks the DAG in topological order and confirms every
intermediate conclusion (and finally the goal) follows from the leaves
plus earlier conclusions; contextual consistency requires the union of
all leaf premises to be satisfiable.  An instance is accepted iff all
three checks pass.

The internal decision procedure is authoritative.  An external Prover9
binary, when present, can be run as a second opinion on emitted job
files; it is never required for a verdict.
"""

from __future__ import annotations

import heapq
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .dag import LogicDag
from .entailment import entails, satisfiable
from .formulas import Formula, format_formula

__all__ = [
    "ValidationReport",
    "check_stepwise",
    "check_global",
    "check_consistency",
    "validate_dag",
    "validate_instance",
    "emit_prover9_job",
    "ExternalProofResult",
    "external_prove",
    "find_prover9",
    "REASON_STEPWISE",
    "REASON_GLOBAL",
    "REASON_CONSISTENCY",
]

REASON_STEPWISE = "stepwise_entailment"
REASON_GLOBAL = "global_derivability"
REASON_CONSISTENCY = "contextual_consistency"


@dataclass(frozen=True)
class ValidationReport:
    instance_id: str
    stepwise: tuple[tuple[int, bool], ...]
    global_pass: bool
    consistency_pass: bool
    verdict: str

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"


def check_stepwise(dag: LogicDag) -> list[tuple[int, bool]]:
    """Per inference node: do its local premises entail its conclusion?"""
    results: list[tuple[int, bool]] = []
    for e in dag.inference_nodes:
        premises = [dag.formula_nodes[p] for p in e.local_premises if p in dag.formula_nodes]
        conclusion = dag.formula_nodes.get(e.conclusion)
        ok = (
            conclusion is not None
            and len(premises) == len(e.local_premises)
            and entails(premises, conclusion)
        )
        results.append((e.node_id, ok))
    return results


def _topological_conclusions(dag: LogicDag) -> list[int]:
    """Derived nodes ordered so every premise precedes its conclusions."""
    derived = {e.conclusion for e in dag.inference_nodes if e.conclusion in dag.formula_nodes}
    indegree = {v: 0 for v in derived}
    successors: dict[int, set[int]] = {v: set() for v in derived}
    for e in dag.inference_nodes:
        if e.conclusion not in derived:
            continue
        for p in e.local_premises:
            if p in derived and e.conclusion not in successors[p]:
                successors[p].add(e.conclusion)
                indegree[e.conclusion] += 1
    heap = [v for v, d in indegree.items() if d == 0]
    heapq.heapify(heap)
    order: list[int] = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for w in sorted(successors[v]):
            indegree[w] -= 1
            if indegree[w] == 0:
                heapq.heappush(heap, w)
    if len(order) != len(derived):
        raise ValueError("inference structure contains a cycle")
    return order


def check_global(dag: LogicDag) -> bool:
    """Cumulative derivability: leaves, then each conclusion in topological
    order, must entail the next conclusion; the goal is among them."""
    known = [dag.formula_nodes[i] for i in sorted(dag.leaf_ids) if i in dag.formula_nodes]
    order = _topological_conclusions(dag)
    goal_seen = dag.goal_id in dag.leaf_ids
    for v in order:
        formula = dag.formula_nodes[v]
        if not entails(known, formula):
            return False
        known.append(formula)
        if v == dag.goal_id:
            goal_seen = True
    return goal_seen


def check_consistency(dag: LogicDag) -> bool:
    """The union of leaf premises across all paths must be satisfiable."""
    return satisfiable(dag.leaf_formulas())


def validate_dag(dag: LogicDag, instance_id: str = "") -> ValidationReport:
    stepwise = tuple(check_stepwise(dag))
    global_pass = check_global(dag)
    consistency_pass = check_consistency(dag)
    if not all(ok for _, ok in stepwise):
        verdict = f"reject:{REASON_STEPWISE}"
    elif not global_pass:
        verdict = f"reject:{REASON_GLOBAL}"
    elif not consistency_pass:
        verdict = f"reject:{REASON_CONSISTENCY}"
    else:
        verdict = "accept"
    return ValidationReport(
        instance_id=instance_id,
        stepwise=stepwise,
        global_pass=global_pass,
        consistency_pass=consistency_pass,
        verdict=verdict,
    )


def validate_instance(instance) -> ValidationReport:
    """Validate anything carrying ``.dag`` and ``.instance_id``."""
    return validate_dag(instance.dag, instance.instance_id)


def emit_prover9_job(premises: Sequence[Formula], goal: Formula) -> str:
    """Bit-exact Prover9 input: assumptions block, then goals block.

    One canonical formula per line, each terminated by a period; newline
    is ``\\n`` and the content is ASCII.
    """
    lines = ["formulas(assumptions)."]
    lines.extend(format_formula(p) + "." for p in premises)
    lines.append("end_of_list.")
    lines.append("formulas(goals).")
    lines.append(format_formula(goal) + ".")
    lines.append("end_of_list.")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExternalProofResult:
    status: str  # "proved" | "not_proved" | "unavailable"
    timed_out: bool = False


def find_prover9() -> str | None:
    return shutil.which("prover9")


def external_prove(
    job_text: str,
    *,
    binary: str | None = None,
    timeout: float = 5.0,
    input_mode: str = "stdin",
) -> ExternalProofResult:
    """Run an external Prover9 on a job file; never required for a verdict."""
    binary = binary or find_prover9()
    if binary is None or not (Path(binary).exists() or shutil.which(binary)):
        return ExternalProofResult(status="unavailable")
    try:
        if input_mode == "stdin":
            proc = subprocess.run(
                [binary],
                input=job_text.encode("ascii"),
                capture_output=True,
                timeout=timeout,
            )
        else:
            with tempfile.NamedTemporaryFile("w", suffix=".in", delete=False) as handle:
                handle.write(job_text)
                job_path = handle.name
            try:
                proc = subprocess.run(
                    [binary, "-f", job_path], capture_output=True, timeout=timeout
                )
            finally:
                Path(job_path).unlink(missing_ok=True)
    except subprocess.TimeoutExpired:
        return ExternalProofResult(status="not_proved", timed_out=True)
    except OSError:
        return ExternalProofResult(status="unavailable")
    output = proc.stdout.decode("utf-8", errors="replace")
    if proc.returncode == 0 or "THEOREM PROVED" in output:
        return ExternalProofResult(status="proved")
    return ExternalProofResult(status="not_proved")
