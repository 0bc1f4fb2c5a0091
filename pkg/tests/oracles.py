"""Independent test oracles: exhaustive truth-table semantics.

Kept deliberately separate from the package's CNF/DPLL decision procedure:
formulas are evaluated over every assignment via bitmask truth vectors
(one bit per assignment), so entailment, satisfiability and the
brute-force power-set minimal-support enumeration here share no code with
the implementation they check.
"""

from __future__ import annotations

import itertools
import random

from proofdag.formulas import And, Atom, AtomRef, Formula, Implies, Not, Or

MAX_ORACLE_ATOMS = 22


def _collect_atoms(formulas) -> list[Atom]:
    atoms: set[Atom] = set()
    stack = list(formulas)
    while stack:
        f = stack.pop()
        if isinstance(f, AtomRef):
            atoms.add(f.atom)
        elif isinstance(f, Not):
            stack.append(f.operand)
        else:
            stack.extend((f.left, f.right))
    return sorted(atoms, key=lambda a: (a.predicate, a.args))


def truth_vector(f: Formula, atom_bit: dict[Atom, int], mask: int, patterns: dict[Atom, int]) -> int:
    if isinstance(f, AtomRef):
        return patterns[f.atom]
    if isinstance(f, Not):
        return mask & ~truth_vector(f.operand, atom_bit, mask, patterns)
    a = truth_vector(f.left, atom_bit, mask, patterns)
    b = truth_vector(f.right, atom_bit, mask, patterns)
    if isinstance(f, And):
        return a & b
    if isinstance(f, Or):
        return a | b
    return (mask & ~a) | b


def _vectors(formulas: list[Formula]) -> tuple[list[int], int]:
    atoms = _collect_atoms(formulas)
    n = len(atoms)
    assert n <= MAX_ORACLE_ATOMS, f"oracle limited to {MAX_ORACLE_ATOMS} atoms, got {n}"
    mask = (1 << (1 << n)) - 1
    patterns: dict[Atom, int] = {}
    for i, atom in enumerate(atoms):
        # bit j of the pattern = truth of this atom in assignment j,
        # i.e. (j >> i) & 1; built by doubling the repeating unit
        width = 1 << (i + 1)
        vec = ((1 << (1 << i)) - 1) << (1 << i)
        while width < (1 << n):
            vec |= vec << width
            width <<= 1
        patterns[atom] = vec
    atom_bit = {a: i for i, a in enumerate(atoms)}
    return [truth_vector(f, atom_bit, mask, patterns) for f in formulas], mask


def tt_entails(premises, goal: Formula) -> bool:
    premises = list(premises)
    vectors, mask = _vectors(premises + [goal])
    joint = mask
    for vec in vectors[:-1]:
        joint &= vec
    return joint & (mask & ~vectors[-1]) == 0


def tt_satisfiable(formulas) -> bool:
    formulas = list(formulas)
    if not formulas:
        return True
    vectors, mask = _vectors(formulas)
    joint = mask
    for vec in vectors:
        joint &= vec
    return joint != 0


def brute_force_minimal_supports(formulas: list[Formula], goal: Formula) -> set[frozenset[int]]:
    """Power-set enumeration: test every subset, then keep the minimal
    entailing ones.  Premise ids are 1-based list positions."""
    n = len(formulas)
    assert n <= 14, "power-set oracle limited to 14 premises"
    vectors, mask = _vectors(formulas + [goal])
    not_goal = mask & ~vectors[-1]
    joint = [0] * (1 << n)
    joint[0] = mask
    entailing = [False] * (1 << n)
    entailing[0] = not_goal == 0
    for m in range(1, 1 << n):
        low = m & -m
        joint[m] = joint[m ^ low] & vectors[low.bit_length() - 1]
        entailing[m] = joint[m] & not_goal == 0
    minimal: set[frozenset[int]] = set()
    for m in range(1 << n):
        if not entailing[m]:
            continue
        if any(entailing[m & ~(1 << b)] for b in range(n) if m & (1 << b)):
            continue
        minimal.add(frozenset(b + 1 for b in range(n) if m & (1 << b)))
    return minimal


def random_formula(rng: random.Random, atoms: list[Atom], depth: int) -> Formula:
    if depth <= 0 or rng.random() < 0.3:
        return AtomRef(rng.choice(atoms))
    kind = rng.randrange(4)
    if kind == 0:
        return Not(random_formula(rng, atoms, depth - 1))
    left = random_formula(rng, atoms, depth - 1)
    right = random_formula(rng, atoms, depth - 1)
    return (And, Or, Implies)[kind - 1](left, right)


def random_atoms(count: int, prefix: str = "v") -> list[Atom]:
    return [Atom(f"{prefix}{i}") for i in range(1, count + 1)]


def enumerate_formulas(atoms: list[Atom], depth: int):
    """All formulas over the given atoms up to the given connective depth."""
    level: list[Formula] = [AtomRef(a) for a in atoms]
    yield from level
    for _ in range(depth):
        new: list[Formula] = [Not(f) for f in level]
        for left, right in itertools.product(level, repeat=2):
            new.extend((And(left, right), Or(left, right), Implies(left, right)))
        yield from new
        level = level + new
