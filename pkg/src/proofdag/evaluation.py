"""Scoring of model-proposed proofs against solver-verified instances.

Stage 1 splits a raw response into candidate solutions and steps under the
structured answer template, resolving implicit references; stage 2
formalizes each step (premise-sentence lookup, template inversion, direct
formula syntax, then an optional client) and verifies local and global
validity symbolically; stage 3 matches valid solutions onto ground-truth
supports and labels each failing step with the error taxonomy.

Everything a verdict depends on is the formal layer: rewriting any NL text
after formalization cannot change a verdict.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .client import CompletionRequest, CompletionUnavailable, TextCompletionClient
from .dataset import BenchmarkInstance
from .entailment import NotEntailedError, entails, minimize_support
from .formulas import (
    Atom,
    AtomRef,
    Formula,
    Implies,
    ParseError,
    atoms_of,
    format_formula,
    parse_formula,
)
from .instantiate import TemplateInversionError, invert_formula_text, render_sentence

__all__ = [
    "Ref",
    "Step",
    "CandidateSolution",
    "RawResponse",
    "SegmentedResponse",
    "AnswerTemplate",
    "DEFAULT_TEMPLATE",
    "ErrorKind",
    "ErrorLabel",
    "SolutionVerdict",
    "ResponseEvaluation",
    "FormalizationError",
    "segment_response",
    "formalize_step",
    "verify_solution",
    "match_ground_truth",
    "classify_errors",
    "evaluate_response",
    "render_reference_response",
    "MINIMIZATION_RULE",
]

# Recorded in every verdict: how a verbose-but-valid proof maps onto ground truth.
MINIMIZATION_RULE = "cited premises reduced to a minimal support before matching"


@dataclass(frozen=True)
class Ref:
    kind: str  # "fact" | "rule" | "step"
    index: int

    def __str__(self) -> str:
        return f"{self.kind.capitalize()} {self.index}"


@dataclass
class Step:
    index: int
    cited_refs: tuple[Ref, ...]
    nl_text: str
    formal: Formula | None = None
    form_hint: str | None = None
    oov_atoms: frozenset[Atom] = frozenset()


@dataclass
class CandidateSolution:
    solution_index: int
    steps: list[Step]
    conclusion_text: str | None = None

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError("candidate solution needs at least one step")


@dataclass(frozen=True)
class RawResponse:
    instance_id: str
    model_name: str
    text: str
    completion_tokens: int | None = None

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("response text must be non-empty")


@dataclass(frozen=True)
class SegmentedResponse:
    solutions: tuple[CandidateSolution, ...]
    unparseable: bool


class ErrorKind(str, Enum):
    SEMANTIC_MISINTERPRETATION = "semantic_misinterpretation"
    INFORMATION_OMISSION = "information_omission"
    FACT_HALLUCINATION = "fact_hallucination"
    INVALID_DEDUCTION = "invalid_deduction"
    RULE_MISAPPLICATION = "rule_misapplication"
    INSUFFICIENT_PREMISE = "insufficient_premise"


_ASSISTED_KINDS = frozenset(
    {ErrorKind.SEMANTIC_MISINTERPRETATION, ErrorKind.INFORMATION_OMISSION}
)


@dataclass(frozen=True)
class ErrorLabel:
    kind: ErrorKind
    decidability: str  # "symbolic" | "assisted"

    @classmethod
    def symbolic(cls, kind: ErrorKind) -> "ErrorLabel":
        assert kind not in _ASSISTED_KINDS
        return cls(kind, "symbolic")

    @classmethod
    def assisted(cls, kind: ErrorKind) -> "ErrorLabel":
        assert kind in _ASSISTED_KINDS
        return cls(kind, "assisted")


@dataclass
class SolutionVerdict:
    locally_valid: tuple[bool, ...]
    globally_valid: bool
    concluded_goal: bool
    length: int
    used_premise_ids: frozenset[int]
    matched_support: frozenset[int] | None = None
    matched_solution_id: int | None = None
    error_labels: dict[int, tuple[ErrorLabel, ...]] = field(default_factory=dict)

    @property
    def fully_valid(self) -> bool:
        return all(self.locally_valid) and self.globally_valid


@dataclass
class ResponseEvaluation:
    instance_id: str
    model_name: str
    candidates: list[tuple[CandidateSolution, SolutionVerdict]]
    unparseable: bool
    completion_tokens: int | None


class FormalizationError(ValueError):
    """A step's text could not be resolved to a formula."""


# --- stage 1: segmentation ----------------------------------------------------


@dataclass(frozen=True)
class AnswerTemplate:
    """The structured answer format the test prompt mandates."""

    solution_heading: str = r"^###\s*Solution\s+(\d+)\s*$"
    step_line: str = r"^Step\s+(\d+)\s*:\s*(.*?)\s*(?:\[uses:\s*([^\]]*)\])?\s*$"
    conclusion_line: str = r"^Conclusion\s*:\s*(.*?)\s*$"
    ref_token: str = r"(Fact|Rule|Step)\s+(\d+)"
    form_token: str = r"\b(MP|MT|HS|DS|CD|RAA|DE)\b"
    previous_step: str = r"previous\s+step"


DEFAULT_TEMPLATE = AnswerTemplate()


def _parse_refs(token_text: str, template: AnswerTemplate) -> tuple[tuple[Ref, ...], str | None]:
    refs: list[Ref] = []
    for kind, number in re.findall(template.ref_token, token_text, flags=re.IGNORECASE):
        refs.append(Ref(kind.lower(), int(number)))
    form_match = re.search(template.form_token, token_text)
    return tuple(refs), form_match.group(1) if form_match else None


def segment_response(
    raw: RawResponse | str,
    template: AnswerTemplate = DEFAULT_TEMPLATE,
    client: TextCompletionClient | None = None,
) -> SegmentedResponse:
    """Deterministic structural parse of a templated response.

    Nonconforming output is optionally rewritten into the template by the
    client and re-parsed; otherwise it counts as unparseable (zero
    candidate solutions, never a crash).
    """
    text = raw.text if isinstance(raw, RawResponse) else raw
    solutions = _parse_template(text, template)
    if solutions:
        return SegmentedResponse(solutions=tuple(solutions), unparseable=False)
    if client is not None:
        try:
            reply = client.complete(
                CompletionRequest(system_text=_REPAIR_SYSTEM_PROMPT, user_text=text)
            )
            repaired = _parse_template(reply.text, template)
            if repaired:
                return SegmentedResponse(solutions=tuple(repaired), unparseable=False)
        except (CompletionUnavailable, ValueError):
            pass
    return SegmentedResponse(solutions=(), unparseable=True)


def _parse_template(text: str, template: AnswerTemplate) -> list[CandidateSolution]:
    heading = re.compile(template.solution_heading, re.MULTILINE)
    step_re = re.compile(template.step_line, re.IGNORECASE)
    conclusion_re = re.compile(template.conclusion_line, re.IGNORECASE)
    matches = list(heading.finditer(text))
    solutions: list[CandidateSolution] = []
    for pos, match in enumerate(matches):
        block_end = matches[pos + 1].start() if pos + 1 < len(matches) else len(text)
        block = text[match.end():block_end]
        steps: list[Step] = []
        conclusion: str | None = None
        for line in block.splitlines():
            line = line.strip()
            if not line:
                continue
            step_match = step_re.match(line)
            if step_match:
                index = int(step_match.group(1))
                statement = step_match.group(2).strip()
                refs, form_hint = _parse_refs(step_match.group(3) or "", template)
                if re.search(template.previous_step, statement, re.IGNORECASE):
                    implicit = Ref("step", index - 1)
                    if index > 1 and implicit not in refs:
                        refs = refs + (implicit,)
                steps.append(
                    Step(index=index, cited_refs=refs, nl_text=statement, form_hint=form_hint)
                )
                continue
            conclusion_match = conclusion_re.match(line)
            if conclusion_match:
                conclusion = conclusion_match.group(1).strip()
        if steps:
            solutions.append(
                CandidateSolution(
                    solution_index=int(match.group(1)),
                    steps=steps,
                    conclusion_text=conclusion,
                )
            )
    return solutions


_REPAIR_SYSTEM_PROMPT = (
    "Rewrite the reasoning below into this exact structure, changing no "
    "content: '### Solution k' headings; lines 'Step t: <statement>. "
    "[uses: Fact n, Rule n, Step m]'; a final line 'Conclusion: <statement>'."
)


# --- stage 2: formalization and verification ----------------------------------


def _strip_step_text(text: str) -> str:
    t = text.strip()
    # drop a trailing "by <FORM>" annotation if present
    stripped = re.sub(r"[,\s]*\(?\bby\s+(MP|MT|HS|DS|CD|RAA|DE)\)?\s*\.?\s*$", "", t)
    return stripped.strip() or t


def formalize_step(
    step: Step,
    instance: BenchmarkInstance,
    client: TextCompletionClient | None = None,
) -> Formula:
    """Resolve a step's text to a formula over the instance vocabulary.

    Resolution order: exact premise/goal sentence match, fallback-template
    inversion, direct formula syntax, then the optional client.  Atoms
    outside the instance vocabulary are recorded on the step (they are
    evidence for fact hallucination), never silently dropped.  Raises
    :class:`FormalizationError` when nothing resolves; the caller marks
    the step unverifiable.
    """
    text = _strip_step_text(step.nl_text)
    formula = _resolve_text(text, instance, client)
    step.formal = formula
    step.oov_atoms = frozenset(atoms_of(formula)) - instance.vocabulary
    return formula


def _resolve_text(
    text: str,
    instance: BenchmarkInstance,
    client: TextCompletionClient | None,
) -> Formula:
    key = text.casefold().strip()
    by_sentence = instance.sentence_formulas()
    if key in by_sentence:
        return by_sentence[key]
    if key.rstrip(".") + "." in by_sentence:
        return by_sentence[key.rstrip(".") + "."]
    try:
        return invert_formula_text(text, instance.gloss_atom_lookup())
    except TemplateInversionError:
        pass
    try:
        return parse_formula(text.rstrip("."))
    except (ParseError, ValueError):
        pass
    if client is not None:
        try:
            reply = client.complete(
                CompletionRequest(
                    system_text=_FORMALIZE_SYSTEM_PROMPT,
                    user_text=_formalize_user_prompt(text, instance),
                )
            )
            return parse_formula(reply.text.strip().rstrip("."))
        except (CompletionUnavailable, ParseError, ValueError) as exc:
            raise FormalizationError(f"client formalization failed: {exc}") from exc
    raise FormalizationError(f"cannot formalize step text: {text!r}")


_FORMALIZE_SYSTEM_PROMPT = (
    "Translate the statement into a single formula using only the predicates "
    "shown in the examples, with connectives '-', '&', '|', '->'. Reply with "
    "the formula alone."
)


def _formalize_user_prompt(text: str, instance: BenchmarkInstance) -> str:
    anchors = "\n".join(f"{p.text} => {format_formula(p.formula)}" for p in instance.premises)
    return f"Examples:\n{anchors}\n\nStatement: {text}"


def formalize_candidate(
    candidate: CandidateSolution,
    instance: BenchmarkInstance,
    client: TextCompletionClient | None = None,
) -> None:
    for step in candidate.steps:
        try:
            formalize_step(step, instance, client)
        except FormalizationError:
            step.formal = None


def _resolve_ref(
    ref: Ref, step: Step, candidate: CandidateSolution, instance: BenchmarkInstance
) -> tuple[bool, Formula | None, int | None]:
    """(citation exists, its formula if formalized, premise id if original)."""
    if ref.kind in ("fact", "rule"):
        premise = instance.premise_by_label(ref.kind, ref.index)
        if premise is None:
            return False, None, None
        return True, premise.formula, premise.premise_id
    if ref.kind == "step":
        if ref.index >= step.index:
            return False, None, None
        earlier = next((s for s in candidate.steps if s.index == ref.index), None)
        if earlier is None:
            return False, None, None
        return True, earlier.formal, None
    return False, None, None


def verify_solution(
    candidate: CandidateSolution, instance: BenchmarkInstance
) -> SolutionVerdict:
    """Local validity per step, global validity for the whole candidate.

    Local: the formulas of a step's cited references must entail the
    step's formula.  Global: the goal must be entailed by the original
    context premises cited anywhere in the solution, and nothing else;
    intermediate steps are lemmas, not premises.
    """
    locally: list[bool] = []
    used_premises: set[int] = set()
    goal = instance.goal_formula
    concluded = False
    for step in candidate.steps:
        resolved: list[Formula] = []
        ok = step.formal is not None and not step.oov_atoms
        for ref in step.cited_refs:
            exists, formula, premise_id = _resolve_ref(ref, step, candidate, instance)
            if not exists:
                ok = False
                continue
            if premise_id is not None:
                used_premises.add(premise_id)
            if formula is None:
                ok = False
            else:
                resolved.append(formula)
        if ok:
            ok = entails(resolved, step.formal)
        locally.append(ok)
        if step.formal is not None and step.formal == goal:
            concluded = True
    if candidate.conclusion_text:
        try:
            if _resolve_text(_strip_step_text(candidate.conclusion_text), instance, None) == goal:
                concluded = True
        except FormalizationError:
            pass
    globally = entails(
        instance.premise_set.subset_formulas(used_premises), goal
    )
    return SolutionVerdict(
        locally_valid=tuple(locally),
        globally_valid=globally,
        concluded_goal=concluded,
        length=len(candidate.steps),
        used_premise_ids=frozenset(used_premises),
    )


# --- stage 3: matching and error taxonomy --------------------------------------


def match_ground_truth(
    verdict: SolutionVerdict, instance: BenchmarkInstance
) -> int | None:
    """Reduce the candidate's cited premises to a minimal support and look
    it up among the ground-truth solutions (1-based id)."""
    if not verdict.fully_valid:
        return None
    try:
        reduced = minimize_support(
            verdict.used_premise_ids, instance.premise_set, instance.goal_formula
        )
    except NotEntailedError:
        return None
    for sol_id, sol in enumerate(instance.ground_truth.solutions, start=1):
        if sol.support == reduced:
            verdict.matched_support = reduced
            verdict.matched_solution_id = sol_id
            return sol_id
    return None


def classify_errors(
    verdict: SolutionVerdict,
    candidate: CandidateSolution,
    instance: BenchmarkInstance,
    client: TextCompletionClient | None = None,
) -> dict[int, tuple[ErrorLabel, ...]]:
    """One symbolic label per locally-invalid step, in fixed priority order.

    1. a cited reference that does not exist, or content outside the
       instance vocabulary (including text that resolves to nothing at
       all): fact_hallucination;
    2. the cited premises fall short but a single uncited context premise
       closes the gap: insufficient_premise;
    3. the step concludes a cited rule's consequent while the rule's
       antecedent is not established by the other citations:
       rule_misapplication;
    4. otherwise: invalid_deduction.

    The two comprehension labels are emitted only by the optional
    client-assisted pass and are flagged as such.
    """
    labels: dict[int, tuple[ErrorLabel, ...]] = {}
    for pos, step in enumerate(candidate.steps):
        if verdict.locally_valid[pos]:
            continue
        label = _symbolic_label(step, candidate, instance)
        step_labels: tuple[ErrorLabel, ...] = (label,)
        if client is not None:
            step_labels = step_labels + _assisted_labels(step, instance, client)
        labels[step.index] = step_labels
    verdict.error_labels = labels
    return labels


def _symbolic_label(
    step: Step, candidate: CandidateSolution, instance: BenchmarkInstance
) -> ErrorLabel:
    resolved: list[Formula] = []
    for ref in step.cited_refs:
        exists, formula, _ = _resolve_ref(ref, step, candidate, instance)
        if not exists:
            return ErrorLabel.symbolic(ErrorKind.FACT_HALLUCINATION)
        if formula is not None:
            resolved.append(formula)
    if step.formal is None or step.oov_atoms:
        return ErrorLabel.symbolic(ErrorKind.FACT_HALLUCINATION)
    cited_set = set(resolved)
    uncited = [p.formula for p in instance.premises if p.formula not in cited_set]
    for extra in uncited:
        if entails(resolved + [extra], step.formal):
            return ErrorLabel.symbolic(ErrorKind.INSUFFICIENT_PREMISE)
    for formula in resolved:
        if isinstance(formula, Implies) and formula.right == step.formal:
            others = [g for g in resolved if g is not formula]
            if not entails(others, formula.left):
                return ErrorLabel.symbolic(ErrorKind.RULE_MISAPPLICATION)
    return ErrorLabel.symbolic(ErrorKind.INVALID_DEDUCTION)


_ASSISTED_SYSTEM_PROMPT = (
    "Compare the statement with its formalization and the scenario context. "
    "Reply with a comma-separated subset of: semantic_misinterpretation, "
    "information_omission. Reply 'none' if neither applies."
)


def _assisted_labels(
    step: Step, instance: BenchmarkInstance, client: TextCompletionClient
) -> tuple[ErrorLabel, ...]:
    formal = format_formula(step.formal) if step.formal is not None else "(unformalized)"
    try:
        reply = client.complete(
            CompletionRequest(
                system_text=_ASSISTED_SYSTEM_PROMPT,
                user_text=f"Context:\n{instance.context}\n\nStatement: {step.nl_text}\n"
                f"Formalization: {formal}",
            )
        )
    except (CompletionUnavailable, ValueError):
        return ()
    out: list[ErrorLabel] = []
    for token in reply.text.replace(",", " ").split():
        try:
            kind = ErrorKind(token.strip().lower())
        except ValueError:
            continue
        if kind in _ASSISTED_KINDS:
            out.append(ErrorLabel.assisted(kind))
    return tuple(out)


# --- orchestration --------------------------------------------------------------


def evaluate_response(
    raw: RawResponse,
    instance: BenchmarkInstance,
    client: TextCompletionClient | None = None,
    template: AnswerTemplate = DEFAULT_TEMPLATE,
) -> ResponseEvaluation:
    segmented = segment_response(raw, template, client)
    evaluated: list[tuple[CandidateSolution, SolutionVerdict]] = []
    for candidate in segmented.solutions:
        formalize_candidate(candidate, instance, client)
        verdict = verify_solution(candidate, instance)
        match_ground_truth(verdict, instance)
        classify_errors(verdict, candidate, instance, client)
        evaluated.append((candidate, verdict))
    return ResponseEvaluation(
        instance_id=raw.instance_id,
        model_name=raw.model_name,
        candidates=evaluated,
        unparseable=segmented.unparseable,
        completion_tokens=raw.completion_tokens,
    )


def render_reference_response(instance: BenchmarkInstance) -> str:
    """Every ground-truth proof rendered through the fallback templates in
    the structured answer format; used for closed-loop self-tests."""
    glosses: dict[Atom, str] = {}
    for atom_text, gloss in instance.atom_glosses.items():
        parsed = parse_formula(atom_text)
        assert isinstance(parsed, AtomRef)
        glosses[parsed.atom] = gloss
    dag = instance.dag
    label_by_premise_id = {p.premise_id: p.label for p in instance.premises}
    leaf_order = sorted(dag.leaf_ids)
    node_to_premise = {node_id: i for i, node_id in enumerate(leaf_order, start=1)}
    blocks: list[str] = []
    for sol_id, sol in enumerate(instance.ground_truth.solutions, start=1):
        chosen = [e for e in dag.inference_nodes if e.node_id in sol.inference_node_ids]
        ordered = _topological_rules(chosen)
        step_of_node: dict[int, int] = {}
        lines = [f"### Solution {sol_id}"]
        for step_no, rule in enumerate(ordered, start=1):
            refs: list[str] = []
            for p in rule.local_premises:
                if p in node_to_premise:
                    refs.append(label_by_premise_id[node_to_premise[p]])
                else:
                    refs.append(f"Step {step_of_node[p]}")
            sentence = render_sentence(dag.formula_nodes[rule.conclusion], glosses)
            lines.append(f"Step {step_no}: {sentence} [uses: {', '.join(refs)}]")
            step_of_node[rule.conclusion] = step_no
        lines.append(f"Conclusion: {instance.goal_text}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def _topological_rules(rules: list) -> list:
    """Order a solution's rules so cited steps precede their users."""
    remaining = {e.node_id: e for e in rules}
    concluded: set[int] = set()
    conclusions = {e.conclusion for e in rules}
    ordered = []
    while remaining:
        ready = [
            e
            for e in sorted(remaining.values(), key=lambda e: e.node_id)
            if all(p not in conclusions or p in concluded for p in e.local_premises)
        ]
        if not ready:
            raise ValueError("cyclic rule structure in solution")
        rule = ready[0]
        ordered.append(rule)
        concluded.add(rule.conclusion)
        del remaining[rule.node_id]
    return ordered
