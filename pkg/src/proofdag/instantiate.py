"""Semantic instantiation: abstract DAG symbols to themed predicates and text.

Two layers are produced per instance.  The formal layer (instantiated
formulas, serialized in the Prover9-style surface syntax) is authoritative
and drives all downstream verification; the natural-language layer is
presentation only.  Naming and verbalization go through an external
text-generation client when one is configured, with a deterministic
template fallback that keeps the whole pipeline usable offline.

The fallback templates are designed to be invertible:
:func:`invert_formula_text` parses a rendered sentence back into the exact
formula, which the evaluation pipeline uses to formalize well-behaved
steps without any client.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Mapping

from .catalog import CATALOG_VERSION, DOMAIN_PROFILES, ENTITY_TYPES, DomainProfile
from .client import CompletionRequest, TextCompletionClient, CompletionUnavailable
from .dag import LogicDag, derive_seed
from .formulas import (
    And,
    Atom,
    AtomRef,
    Formula,
    Implies,
    Not,
    Or,
    atoms_in_order,
    format_formula,
    parse_formula,
)

__all__ = [
    "InstantiationError",
    "NamingCollisionError",
    "TemplateInversionError",
    "SymbolMap",
    "VerbalizedInstance",
    "assign_semantics",
    "verbalize",
    "mechanical_atom",
    "mechanical_gloss",
    "render_formula_text",
    "render_sentence",
    "invert_formula_text",
    "gloss_is_safe",
    "CATALOG_VERSION",
]


class InstantiationError(RuntimeError):
    pass


class NamingCollisionError(InstantiationError):
    """The proposed symbol map is not a bijection."""


class TemplateInversionError(ValueError):
    """Text does not match the fallback template grammar."""


@dataclass
class SymbolMap:
    """Bijection from abstract DAG atoms to instantiated atoms, plus a
    short text gloss per instantiated atom."""

    atom_map: dict[Atom, Atom]
    glosses: dict[Atom, str]

    def __post_init__(self) -> None:
        values = list(self.atom_map.values())
        if len(set(values)) != len(values):
            raise NamingCollisionError("atom map is not injective")
        missing = [a for a in values if a not in self.glosses]
        if missing:
            raise InstantiationError(f"missing glosses for {missing}")

    def apply(self, f: Formula) -> Formula:
        if isinstance(f, AtomRef):
            return AtomRef(self.atom_map[f.atom])
        if isinstance(f, Not):
            return Not(self.apply(f.operand))
        cls = type(f)
        return cls(self.apply(f.left), self.apply(f.right))


@dataclass(frozen=True)
class VerbalizedInstance:
    """The NL layer plus the authoritative formal strings.

    ``prover9_forms`` holds one canonical formula string per premise,
    followed by the goal's; each parses back to the mapped formula.
    """

    context: str
    premise_sentences: tuple[str, ...]
    goal_sentence: str
    prover9_forms: tuple[str, ...]


def dag_atom_order(dag: LogicDag) -> list[Atom]:
    """Distinct abstract atoms in deterministic first-occurrence order."""
    seen: dict[Atom, None] = {}
    for node_id in sorted(dag.formula_nodes):
        for atom in atoms_in_order(dag.formula_nodes[node_id]):
            seen.setdefault(atom, None)
    return list(seen)


def mechanical_atom(entity_identifier: str, index: int) -> Atom:
    """Deterministic fallback naming: entity type plus running index."""
    return Atom(f"{entity_identifier}_prop_{index}", (f"{entity_identifier}_1",))


def mechanical_gloss(atom: Atom) -> str:
    # comma-joined so no template keyword can appear in a gloss
    subject = ", ".join(atom.args) if atom.args else "the scenario"
    return f"{subject} satisfies {atom.predicate}"


def assign_semantics(
    dag: LogicDag,
    profile: DomainProfile,
    client: TextCompletionClient | None = None,
    *,
    seed: int = 0,
    max_attempts: int = 3,
) -> SymbolMap:
    """Map every distinct abstract atom to a distinct instantiated atom.

    With a client, names are requested from the text-generation service and
    validated for bijectivity and identifier-grammar compliance, with
    bounded re-prompts.  Without one, names are derived mechanically from
    the entity catalog.
    """
    if client is None:
        return _fallback_symbol_map(dag, profile, seed)
    abstract = dag_atom_order(dag)
    last_error: Exception | None = None
    for attempt in range(max_attempts):
        try:
            reply = client.complete(
                CompletionRequest(
                    system_text=_NAMING_SYSTEM_PROMPT,
                    user_text=_naming_user_prompt(dag, profile, abstract),
                )
            )
            return _parse_naming_reply(reply.text, abstract)
        except CompletionUnavailable:
            raise
        except (InstantiationError, ValueError) as exc:
            last_error = exc
    raise NamingCollisionError(f"client naming failed after {max_attempts} attempts: {last_error}")


def _fallback_symbol_map(dag: LogicDag, profile: DomainProfile, seed: int) -> SymbolMap:
    rng = random.Random(derive_seed(seed, "semantics", profile.domain_name))
    atom_map: dict[Atom, Atom] = {}
    glosses: dict[Atom, str] = {}
    for index, abstract in enumerate(dag_atom_order(dag), start=1):
        entity = rng.choice(ENTITY_TYPES)
        concrete = mechanical_atom(entity.identifier, index)
        atom_map[abstract] = concrete
        glosses[concrete] = mechanical_gloss(concrete)
    return SymbolMap(atom_map=atom_map, glosses=glosses)


def verbalize(
    dag: LogicDag,
    symbol_map: SymbolMap,
    profile: DomainProfile,
    client: TextCompletionClient | None = None,
    *,
    max_attempts: int = 3,
) -> VerbalizedInstance:
    """One sentence per leaf premise, a goal sentence and a background
    paragraph; the stored formal strings are authoritative."""
    leaf_order = sorted(dag.leaf_ids)
    mapped_premises = [symbol_map.apply(dag.formula_nodes[i]) for i in leaf_order]
    mapped_goal = symbol_map.apply(dag.goal_formula())
    forms = tuple(format_formula(f) for f in mapped_premises + [mapped_goal])
    for form, mapped in zip(forms, mapped_premises + [mapped_goal]):
        if parse_formula(form) != mapped:
            raise InstantiationError("canonical form does not round-trip")

    if client is None:
        sentences = tuple(render_sentence(f, symbol_map.glosses) for f in mapped_premises)
        goal_sentence = render_sentence(mapped_goal, symbol_map.glosses)
        return VerbalizedInstance(
            context=profile.background,
            premise_sentences=sentences,
            goal_sentence=goal_sentence,
            prover9_forms=forms,
        )

    last_error: Exception | None = None
    for attempt in range(max_attempts):
        try:
            reply = client.complete(
                CompletionRequest(
                    system_text=_VERBALIZE_SYSTEM_PROMPT,
                    user_text=_verbalize_user_prompt(profile, forms),
                )
            )
            return _parse_verbalize_reply(reply.text, forms, profile)
        except CompletionUnavailable:
            raise
        except (InstantiationError, ValueError) as exc:
            last_error = exc
    raise InstantiationError(f"client verbalization failed after {max_attempts} attempts: {last_error}")


# --- fallback templates -------------------------------------------------------

_NOT_PREFIX = "it is not the case that "


def render_formula_text(f: Formula, glosses: Mapping[Atom, str]) -> str:
    """Mechanical English rendering of a formula (lowercase clause)."""
    if isinstance(f, AtomRef):
        return glosses[f.atom]
    if isinstance(f, Not):
        return _NOT_PREFIX + _render_operand(f.operand, glosses)
    if isinstance(f, And):
        return f"both {_render_operand(f.left, glosses)} and {_render_operand(f.right, glosses)}"
    if isinstance(f, Or):
        return f"either {_render_operand(f.left, glosses)} or {_render_operand(f.right, glosses)}"
    return f"if {_render_operand(f.left, glosses)}, then {_render_operand(f.right, glosses)}"


def _render_operand(f: Formula, glosses: Mapping[Atom, str]) -> str:
    text = render_formula_text(f, glosses)
    if isinstance(f, AtomRef):
        return text
    return f"({text})"


def render_sentence(f: Formula, glosses: Mapping[Atom, str]) -> str:
    text = render_formula_text(f, glosses)
    return text[0].upper() + text[1:] + "."


_GLOSS_FORBIDDEN_SUBSTRINGS = (", then ", " or ", " and ", "(", ")")
_GLOSS_FORBIDDEN_PREFIXES = ("if ", "either ", "both ", _NOT_PREFIX)


def gloss_is_safe(text: str) -> bool:
    """Glosses must not collide with the template grammar's markers."""
    low = text.casefold()
    if any(s in low for s in _GLOSS_FORBIDDEN_SUBSTRINGS):
        return False
    return not any(low.startswith(p) for p in _GLOSS_FORBIDDEN_PREFIXES)


def _split_top(text: str, sep: str) -> tuple[str, str] | None:
    depth = 0
    limit = len(text) - len(sep)
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and i <= limit and text.startswith(sep, i):
            return text[:i], text[i + len(sep):]
    return None


def _wraps_fully(text: str) -> bool:
    if not (text.startswith("(") and text.endswith(")")):
        return False
    depth = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return i == len(text) - 1
    return False


def invert_formula_text(text: str, gloss_atoms: Mapping[str, Atom]) -> Formula:
    """Parse fallback-template text back into a formula.

    ``gloss_atoms`` maps casefolded gloss text to atoms.  Raises
    :class:`TemplateInversionError` for text outside the template grammar.
    """
    t = text.strip()
    if t.endswith("."):
        t = t[:-1].rstrip()
    return _invert(t, gloss_atoms)


def _invert(t: str, gloss_atoms: Mapping[str, Atom]) -> Formula:
    t = t.strip()
    if _wraps_fully(t):
        return _invert(t[1:-1], gloss_atoms)
    low = t.casefold()
    if low.startswith("if "):
        split = _split_top(t[3:], ", then ")
        if split is not None:
            return Implies(_invert(split[0], gloss_atoms), _invert(split[1], gloss_atoms))
    if low.startswith("either "):
        split = _split_top(t[7:], " or ")
        if split is not None:
            return Or(_invert(split[0], gloss_atoms), _invert(split[1], gloss_atoms))
    if low.startswith("both "):
        split = _split_top(t[5:], " and ")
        if split is not None:
            return And(_invert(split[0], gloss_atoms), _invert(split[1], gloss_atoms))
    if low.startswith(_NOT_PREFIX):
        return Not(_invert(t[len(_NOT_PREFIX):], gloss_atoms))
    atom = gloss_atoms.get(low)
    if atom is not None:
        return AtomRef(atom)
    raise TemplateInversionError(f"text does not match the template grammar: {t!r}")


# --- client prompts and reply parsing ----------------------------------------
# Prompt wording is configuration, not contract; edit freely.

_NAMING_SYSTEM_PROMPT = (
    "You name abstract logical symbols for a themed reasoning puzzle. "
    "Reply with a single JSON object mapping each abstract symbol to an "
    "object {\"predicate\": str, \"args\": [str...], \"gloss\": str}. "
    "Predicates and args must match [a-z][a-z0-9_]*. Glosses are short "
    "clauses that avoid the words 'if', 'either', 'both', 'or', 'and', "
    "parentheses, and the phrase 'it is not the case that'."
)


def _naming_user_prompt(dag: LogicDag, profile: DomainProfile, abstract: list[Atom]) -> str:
    payload = {
        "domain": profile.domain_name,
        "background": profile.background,
        "constants": list(profile.constant_pool),
        "symbols": [str(a) for a in abstract],
    }
    return json.dumps(payload, sort_keys=True)


def _parse_naming_reply(text: str, abstract: list[Atom]) -> SymbolMap:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstantiationError(f"naming reply is not JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InstantiationError("naming reply must be a JSON object")
    atom_map: dict[Atom, Atom] = {}
    glosses: dict[Atom, str] = {}
    for a in abstract:
        entry = data.get(str(a))
        if not isinstance(entry, dict):
            raise InstantiationError(f"missing naming entry for {a}")
        try:
            concrete = Atom(str(entry["predicate"]), tuple(str(x) for x in entry.get("args", ())))
        except (KeyError, ValueError) as exc:
            raise InstantiationError(f"bad naming entry for {a}: {exc}") from exc
        gloss = str(entry.get("gloss", "")).strip()
        if not gloss or not gloss_is_safe(gloss):
            raise InstantiationError(f"unsafe or missing gloss for {a}")
        atom_map[a] = concrete
        glosses[concrete] = gloss
    if len({g.casefold() for g in glosses.values()}) != len(glosses):
        raise NamingCollisionError("glosses collide after casefolding")
    return SymbolMap(atom_map=atom_map, glosses=glosses)


_VERBALIZE_SYSTEM_PROMPT = (
    "You verbalize formal logical statements into a coherent narrative while "
    "preserving every logical relation and adding no unsupported facts. "
    "Reply with a JSON object {\"context\": str, \"sentences\": [str...], "
    "\"goal\": str}; 'sentences' must align one-to-one with the given "
    "premise formulas."
)


def _verbalize_user_prompt(profile: DomainProfile, forms: tuple[str, ...]) -> str:
    payload = {
        "domain": profile.domain_name,
        "background": profile.background,
        "premises": list(forms[:-1]),
        "goal": forms[-1],
    }
    return json.dumps(payload, sort_keys=True)


def _parse_verbalize_reply(
    text: str, forms: tuple[str, ...], profile: DomainProfile
) -> VerbalizedInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstantiationError(f"verbalization reply is not JSON: {exc}") from exc
    sentences = data.get("sentences")
    goal = data.get("goal")
    if not isinstance(sentences, list) or len(sentences) != len(forms) - 1:
        raise InstantiationError("sentence list does not align with premises")
    if not isinstance(goal, str) or not goal.strip():
        raise InstantiationError("missing goal sentence")
    context = str(data.get("context") or profile.background)
    return VerbalizedInstance(
        context=context,
        premise_sentences=tuple(str(s) for s in sentences),
        goal_sentence=goal,
        prover9_forms=forms,
    )


def default_profile(seed: int) -> DomainProfile:
    rng = random.Random(derive_seed(seed, "domain"))
    return rng.choice(DOMAIN_PROFILES)
