"""Ground propositional formulas in a Prover9-style surface syntax.

The object language is deliberately small: atoms are opaque ground
predicates (``pin_ok(emma)``) or bare propositions (``p``), combined with
prefix negation ``-`` and the infix connectives ``&``, ``|`` and ``->``.
Precedence, tightest first: ``-``, ``&``, ``|``, ``->``; implication
associates to the right.  ``parse_formula`` and ``format_formula`` are
mutual inverses on the whole language.

Also defined here: the catalog of the seven basic argument forms
(MP, MT, HS, DS, CD, RAA, DE) as schematic formulas over metavariables,
plus capture-free schema instantiation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

__all__ = [
    "Atom",
    "AtomRef",
    "Not",
    "And",
    "Or",
    "Implies",
    "Formula",
    "ParseError",
    "parse_formula",
    "format_formula",
    "atoms_of",
    "atoms_in_order",
    "ArgumentForm",
    "FORMS",
    "FORM_KINDS",
    "MissingBindingError",
    "instantiate_form",
]

_IDENT_RE = re.compile(r"[a-z][a-z0-9_]*\Z")


@dataclass(frozen=True)
class Atom:
    """Opaque ground atom: a predicate name plus constant arguments.

    A zero-argument atom is a plain propositional symbol.  Equality and
    hashing are structural.
    """

    predicate: str
    args: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not _IDENT_RE.match(self.predicate):
            raise ValueError(f"invalid predicate identifier: {self.predicate!r}")
        for arg in self.args:
            if not _IDENT_RE.match(arg):
                raise ValueError(f"invalid constant identifier: {arg!r}")

    def __str__(self) -> str:
        if self.args:
            return f"{self.predicate}({','.join(self.args)})"
        return self.predicate


@dataclass(frozen=True)
class AtomRef:
    atom: Atom


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


Formula = Union[AtomRef, Not, And, Or, Implies]


class ParseError(ValueError):
    """Syntax error carrying the byte offset and the expected-token set."""

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = expected
        detail = f"syntax error at byte {offset}: {message}"
        if expected:
            detail += f" (expected {', '.join(expected)})"
        super().__init__(detail)


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident" | one of the operator strings | "eof"
    text: str
    offset: int  # byte offset into the UTF-8 input


_SINGLE_CHAR_TOKENS = frozenset("&|(),.")


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    byte_pos = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            byte_pos += len(ch.encode("utf-8"))
            i += 1
            continue
        if ch == "-":
            if i + 1 < n and text[i + 1] == ">":
                tokens.append(_Token("->", "->", byte_pos))
                i += 2
                byte_pos += 2
            else:
                tokens.append(_Token("-", "-", byte_pos))
                i += 1
                byte_pos += 1
            continue
        if ch in _SINGLE_CHAR_TOKENS:
            tokens.append(_Token(ch, ch, byte_pos))
            i += 1
            byte_pos += 1
            continue
        if "a" <= ch <= "z":
            j = i + 1
            while j < n and ("a" <= text[j] <= "z" or "0" <= text[j] <= "9" or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], byte_pos))
            byte_pos += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", byte_pos)
    tokens.append(_Token("eof", "", byte_pos))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, expected: tuple[str, ...]) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            shown = tok.text if tok.kind != "eof" else "end of input"
            raise ParseError(f"unexpected {shown!r}", tok.offset, expected)
        return self.advance()

    def parse(self) -> Formula:
        tok = self.peek()
        if tok.kind == "eof":
            raise ParseError("empty input", tok.offset, ("formula",))
        formula = self.implication()
        if self.peek().kind == ".":
            self.advance()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"trailing input {tok.text!r}", tok.offset, ("end of input",))
        return formula

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek().kind == "->":
            self.advance()
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.peek().kind == "|":
            self.advance()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.peek().kind == "&":
            self.advance()
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        if self.peek().kind == "-":
            self.advance()
            return Not(self.unary())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "(":
            self.advance()
            inner = self.implication()
            self.expect(")", (")",))
            return inner
        if tok.kind == "ident":
            self.advance()
            if self.peek().kind == "(":
                self.advance()
                args = [self.expect("ident", ("constant",)).text]
                while self.peek().kind == ",":
                    self.advance()
                    args.append(self.expect("ident", ("constant",)).text)
                self.expect(")", (")", ","))
                return AtomRef(Atom(tok.text, tuple(args)))
            return AtomRef(Atom(tok.text))
        shown = tok.text if tok.kind != "eof" else "end of input"
        raise ParseError(f"unexpected {shown!r}", tok.offset, ("identifier", "(", "-"))


def parse_formula(text: str) -> Formula:
    """Parse a single formula; inverse of :func:`format_formula`."""
    return _Parser(_tokenize(text)).parse()


_PREC_ATOM = 4
_PREC_NOT = 3
_PREC_AND = 2
_PREC_OR = 1
_PREC_IMPLIES = 0


def _prec(f: Formula) -> int:
    if isinstance(f, AtomRef):
        return _PREC_ATOM
    if isinstance(f, Not):
        return _PREC_NOT
    if isinstance(f, And):
        return _PREC_AND
    if isinstance(f, Or):
        return _PREC_OR
    return _PREC_IMPLIES


def format_formula(f: Formula) -> str:
    """Canonical text with minimal parentheses under the fixed precedence."""
    if isinstance(f, AtomRef):
        return str(f.atom)
    if isinstance(f, Not):
        inner = format_formula(f.operand)
        if _prec(f.operand) < _PREC_NOT:
            inner = f"({inner})"
        return "-" + inner
    if isinstance(f, And):
        sym, prec = " & ", _PREC_AND
    elif isinstance(f, Or):
        sym, prec = " | ", _PREC_OR
    else:
        sym, prec = " -> ", _PREC_IMPLIES
    left = format_formula(f.left)
    right = format_formula(f.right)
    if isinstance(f, Implies):
        # right-associative: parenthesize a left child at the same level
        if _prec(f.left) <= prec:
            left = f"({left})"
    else:
        # left-associative
        if _prec(f.left) < prec:
            left = f"({left})"
        if _prec(f.right) <= prec:
            right = f"({right})"
    return left + sym + right


def atoms_of(f: Formula) -> frozenset[Atom]:
    """The exact set of atom leaves of ``f``."""
    return frozenset(atoms_in_order(f))


def atoms_in_order(f: Formula) -> list[Atom]:
    """Atom leaves in left-to-right traversal order, with duplicates removed."""
    seen: dict[Atom, None] = {}

    def walk(g: Formula) -> None:
        if isinstance(g, AtomRef):
            seen.setdefault(g.atom, None)
        elif isinstance(g, Not):
            walk(g.operand)
        else:
            walk(g.left)
            walk(g.right)

    walk(f)
    return list(seen)


class MissingBindingError(LookupError):
    """A schema metavariable has no binding."""


@dataclass(frozen=True)
class ArgumentForm:
    """One of the seven basic argument forms, as schemas over metavariables."""

    kind: str
    premise_schemas: tuple[Formula, ...]
    conclusion_schema: Formula

    @property
    def metavariables(self) -> frozenset[str]:
        names: set[str] = set()
        for schema in self.premise_schemas + (self.conclusion_schema,):
            names.update(a.predicate for a in atoms_of(schema))
        return frozenset(names)


def _mv(name: str) -> AtomRef:
    return AtomRef(Atom(name))


_P, _Q, _R, _S = _mv("p"), _mv("q"), _mv("r"), _mv("s")

FORMS: dict[str, ArgumentForm] = {
    "MP": ArgumentForm("MP", (Implies(_P, _Q), _P), _Q),
    "MT": ArgumentForm("MT", (Implies(_P, _Q), Not(_Q)), Not(_P)),
    "HS": ArgumentForm("HS", (Implies(_P, _Q), Implies(_Q, _R)), Implies(_P, _R)),
    "DS": ArgumentForm("DS", (Or(_P, _Q), Not(_P)), _Q),
    "CD": ArgumentForm("CD", (Implies(_P, _Q), Implies(_R, _S), Or(_P, _R)), Or(_Q, _S)),
    "RAA": ArgumentForm("RAA", (Implies(_P, _Q), Implies(_P, Not(_Q))), Not(_P)),
    "DE": ArgumentForm("DE", (Or(_P, _Q), Implies(_P, _R), Implies(_Q, _R)), _R),
}

FORM_KINDS: tuple[str, ...] = tuple(FORMS)


def _substitute(schema: Formula, bindings: Mapping[str, Formula]) -> Formula:
    if isinstance(schema, AtomRef):
        return bindings[schema.atom.predicate]
    if isinstance(schema, Not):
        return Not(_substitute(schema.operand, bindings))
    cls = type(schema)
    return cls(_substitute(schema.left, bindings), _substitute(schema.right, bindings))


def instantiate_form(
    form: ArgumentForm, bindings: Mapping[str, Formula]
) -> tuple[list[Formula], Formula]:
    """Substitute metavariables throughout a form's schemas.

    There are no object-level variables, so substitution is trivially
    capture-free.  Raises :class:`MissingBindingError` if any metavariable
    of the form is unbound.
    """
    missing = sorted(form.metavariables - set(bindings))
    if missing:
        raise MissingBindingError(f"unbound metavariables for {form.kind}: {', '.join(missing)}")
    premises = [_substitute(s, bindings) for s in form.premise_schemas]
    return premises, _substitute(form.conclusion_schema, bindings)
