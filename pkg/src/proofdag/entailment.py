"""Sound and complete entailment for the ground fragment.

Queries are decided by Tseitin CNF conversion followed by a deterministic
DPLL search, which is complete for this variable-free fragment.  On top of
the decision procedure sit the minimal-support operations: exhaustive
enumeration of all minimal entailing premise subsets and deterministic
reduction of a candidate subset to minimality.

Everything is a pure function of immutable inputs; results are memoized,
and the caches never change observable behaviour.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

from .formulas import And, Atom, AtomRef, Formula, Implies, Not, Or, format_formula

__all__ = [
    "PremiseSet",
    "EnumerationLimitError",
    "NotEntailedError",
    "entails",
    "satisfiable",
    "minimal_supports",
    "minimize_support",
    "DEFAULT_ENUMERATION_BOUND",
]

DEFAULT_ENUMERATION_BOUND = 30


class EnumerationLimitError(RuntimeError):
    """Premise count exceeds the configured enumeration bound."""


class NotEntailedError(ValueError):
    """The candidate subset does not entail the goal."""


@dataclass(frozen=True)
class PremiseSet:
    """An ordered premise pool with ids dense from 1.

    No two entries may be structurally equal formulas.
    """

    formulas: tuple[Formula, ...]

    def __post_init__(self) -> None:
        if len(set(self.formulas)) != len(self.formulas):
            raise ValueError("premise set contains structurally equal formulas")

    @classmethod
    def from_formulas(cls, formulas: Iterable[Formula]) -> "PremiseSet":
        return cls(tuple(formulas))

    def __len__(self) -> int:
        return len(self.formulas)

    @property
    def ids(self) -> range:
        return range(1, len(self.formulas) + 1)

    def formula(self, premise_id: int) -> Formula:
        if not 1 <= premise_id <= len(self.formulas):
            raise KeyError(f"premise id {premise_id} out of range")
        return self.formulas[premise_id - 1]

    def items(self) -> Iterator[tuple[int, Formula]]:
        return enumerate(self.formulas, start=1)

    def subset_formulas(self, ids: Iterable[int]) -> frozenset[Formula]:
        return frozenset(self.formula(i) for i in ids)


# --- CNF conversion ---------------------------------------------------------


def _encode(
    f: Formula,
    atom_vars: dict[Atom, int],
    memo: dict[Formula, int],
    clauses: list[tuple[int, ...]],
    counter: list[int],
) -> int:
    """Tseitin encoding; returns the literal representing ``f``."""
    if isinstance(f, AtomRef):
        return atom_vars[f.atom]
    if isinstance(f, Not):
        return -_encode(f.operand, atom_vars, memo, clauses, counter)
    cached = memo.get(f)
    if cached is not None:
        return cached
    a = _encode(f.left, atom_vars, memo, clauses, counter)
    b = _encode(f.right, atom_vars, memo, clauses, counter)
    counter[0] += 1
    v = counter[0]
    if isinstance(f, And):
        clauses.extend(((-v, a), (-v, b), (v, -a, -b)))
    elif isinstance(f, Or):
        clauses.extend(((-v, a, b), (v, -a), (v, -b)))
    else:  # Implies
        clauses.extend(((-v, -a, b), (v, a), (v, -b)))
    memo[f] = v
    return v


def _clausify(asserted: Iterable[Formula], denied: Formula | None) -> list[tuple[int, ...]]:
    """Clauses for (AND asserted) AND NOT denied, with deterministic numbering."""
    roots = sorted(set(asserted), key=format_formula)
    atoms: set[Atom] = set()
    for f in roots:
        atoms.update(_atoms(f))
    if denied is not None:
        atoms.update(_atoms(denied))
    atom_vars = {a: i for i, a in enumerate(sorted(atoms, key=lambda x: (x.predicate, x.args)), start=1)}
    counter = [len(atom_vars)]
    memo: dict[Formula, int] = {}
    clauses: list[tuple[int, ...]] = []
    for f in roots:
        clauses.append((_encode(f, atom_vars, memo, clauses, counter),))
    if denied is not None:
        clauses.append((-_encode(denied, atom_vars, memo, clauses, counter),))
    return clauses


def _atoms(f: Formula) -> frozenset[Atom]:
    if isinstance(f, AtomRef):
        return frozenset((f.atom,))
    if isinstance(f, Not):
        return _atoms(f.operand)
    return _atoms(f.left) | _atoms(f.right)


# --- DPLL -------------------------------------------------------------------


def _propagate(clauses: list[tuple[int, ...]]) -> list[tuple[int, ...]] | None:
    """Exhaustive unit propagation; None signals a conflict."""
    while True:
        units: set[int] = set()
        for c in clauses:
            if len(c) == 1:
                lit = c[0]
                if -lit in units:
                    return None
                units.add(lit)
        if not units:
            return clauses
        reduced: list[tuple[int, ...]] = []
        for c in clauses:
            if any(l in units for l in c):
                continue
            r = tuple(l for l in c if -l not in units)
            if not r:
                return None
            reduced.append(r)
        clauses = reduced
        if not clauses:
            return clauses


def _assign(clauses: list[tuple[int, ...]], lit: int) -> list[tuple[int, ...]] | None:
    out: list[tuple[int, ...]] = []
    for c in clauses:
        if lit in c:
            continue
        if -lit in c:
            r = tuple(l for l in c if l != -lit)
            if not r:
                return None
            out.append(r)
        else:
            out.append(c)
    return out


def _dpll(clauses: list[tuple[int, ...]]) -> bool:
    clauses = _propagate(clauses)
    if clauses is None:
        return False
    if not clauses:
        return True
    # branch on the smallest variable index for determinism
    var = min(abs(l) for c in clauses for l in c)
    for lit in (var, -var):
        reduced = _assign(clauses, lit)
        if reduced is not None and _dpll(reduced):
            return True
    return False


# --- public operations ------------------------------------------------------


@lru_cache(maxsize=1 << 16)
def _entails_cached(premises: frozenset[Formula], goal: Formula) -> bool:
    return not _dpll(_clausify(premises, goal))


@lru_cache(maxsize=1 << 16)
def _satisfiable_cached(formulas: frozenset[Formula]) -> bool:
    return _dpll(_clausify(formulas, None))


def entails(premises: Iterable[Formula], goal: Formula) -> bool:
    """True iff every assignment satisfying all premises satisfies the goal.

    The empty premise set entails exactly the tautologies.
    """
    return _entails_cached(frozenset(premises), goal)


def satisfiable(formulas: Iterable[Formula]) -> bool:
    """True iff some truth assignment satisfies all formulas jointly."""
    return _satisfiable_cached(frozenset(formulas))


def minimal_supports(
    premises: PremiseSet,
    goal: Formula,
    *,
    max_premises: int = DEFAULT_ENUMERATION_BOUND,
) -> list[frozenset[int]]:
    """All minimal entailing premise subsets, as id sets.

    Enumerates bottom-up by subset size with superset pruning, so every
    set returned is minimal and the result is the complete antichain of
    supports.  Premises whose removal from the full pool already breaks
    entailment must belong to every support (by monotonicity), which
    prunes the lattice sharply.  Output is ordered by (size, id order).

    Raises :class:`EnumerationLimitError` when the pool exceeds
    ``max_premises``; callers then fall back to construction-time ground
    truth plus spot checks.
    """
    n = len(premises)
    if n > max_premises:
        raise EnumerationLimitError(
            f"premise count {n} exceeds enumeration bound {max_premises}"
        )
    all_ids = list(premises.ids)
    if not entails(premises.formulas, goal):
        return []
    necessary = frozenset(
        pid
        for pid in all_ids
        if not entails(premises.subset_formulas(set(all_ids) - {pid}), goal)
    )
    optional = [pid for pid in all_ids if pid not in necessary]
    found: list[frozenset[int]] = []
    for size in range(len(optional) + 1):
        for combo in itertools.combinations(optional, size):
            subset = necessary | frozenset(combo)
            if any(support <= subset for support in found):
                continue
            if entails(premises.subset_formulas(subset), goal):
                found.append(subset)
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def minimize_support(
    candidate_ids: Iterable[int], premises: PremiseSet, goal: Formula
) -> frozenset[int]:
    """Reduce an entailing subset to a minimal one.

    Removal is attempted in ascending premise-id order, so identical
    inputs always shrink to the identical minimal set.
    """
    current = set(candidate_ids)
    for pid in current:
        premises.formula(pid)  # range check
    if not entails(premises.subset_formulas(current), goal):
        raise NotEntailedError("candidate subset does not entail the goal")
    for pid in sorted(current):
        trial = current - {pid}
        if entails(premises.subset_formulas(trial), goal):
            current = trial
    return frozenset(current)
