"""Entailment decisions and minimal-support operations, checked against
the independent truth-table oracles."""

from __future__ import annotations

import random

import pytest

from _fixtures import VAULT_GOAL, VAULT_PREMISES, VAULT_SUPPORTS
from oracles import (
    brute_force_minimal_supports,
    random_atoms,
    random_formula,
    tt_entails,
    tt_satisfiable,
)
from proofdag.entailment import (
    EnumerationLimitError,
    NotEntailedError,
    PremiseSet,
    entails,
    minimal_supports,
    minimize_support,
    satisfiable,
)
from proofdag.formulas import parse_formula


def pf(text):
    return parse_formula(text)


def vault_pool() -> PremiseSet:
    return PremiseSet.from_formulas(pf(t) for t in VAULT_PREMISES)


class TestEntails:
    def test_modus_ponens_on_predicates(self):
        assert entails({pf("escort(emma)"), pf("escort(emma) -> enter(emma)")}, pf("enter(emma)"))

    def test_empty_premises(self):
        assert not entails([], pf("p"))
        assert entails([], pf("p | -p"))

    def test_dilemma_composition(self):
        assert entails([pf("p -> q"), pf("r -> s"), pf("-q | -s")], pf("-p | -r"))

    def test_not_entailed(self):
        assert not entails([pf("p -> q"), pf("q")], pf("p"))

    def test_agreement_with_truth_table_oracle(self):
        rng = random.Random(4242)
        atoms = random_atoms(10)
        for _ in range(1000):
            premises = frozenset(
                random_formula(rng, atoms, 3) for _ in range(rng.randrange(0, 5))
            )
            goal = random_formula(rng, atoms, 3)
            assert entails(premises, goal) == tt_entails(premises, goal)

    def test_monotonicity(self):
        rng = random.Random(777)
        atoms = random_atoms(6)
        checked = 0
        for _ in range(400):
            base = [random_formula(rng, atoms, 2) for _ in range(rng.randrange(1, 4))]
            extra = [random_formula(rng, atoms, 2) for _ in range(rng.randrange(1, 3))]
            goal = random_formula(rng, atoms, 2)
            if entails(base, goal):
                assert entails(base + extra, goal)
                checked += 1
        assert checked > 20


class TestSatisfiable:
    def test_contradictory_pair(self):
        assert not satisfiable([pf("fact(x)"), pf("-fact(x)")])

    def test_empty_set(self):
        assert satisfiable([])

    def test_agreement_with_oracle(self):
        rng = random.Random(31337)
        atoms = random_atoms(8)
        for _ in range(500):
            formulas = frozenset(
                random_formula(rng, atoms, 3) for _ in range(rng.randrange(0, 6))
            )
            assert satisfiable(formulas) == tt_satisfiable(formulas)


class TestPremiseSet:
    def test_duplicate_formulas_rejected(self):
        with pytest.raises(ValueError):
            PremiseSet.from_formulas([pf("p"), pf("p")])

    def test_ids_dense_from_one(self):
        pool = PremiseSet.from_formulas([pf("p"), pf("q")])
        assert list(pool.ids) == [1, 2]
        assert pool.formula(1) == pf("p")
        with pytest.raises(KeyError):
            pool.formula(3)


class TestMinimalSupports:
    def test_vault_scenario_exact(self):
        supports = minimal_supports(vault_pool(), pf(VAULT_GOAL))
        assert set(supports) == VAULT_SUPPORTS

    def test_goal_is_its_own_support(self):
        pool = PremiseSet.from_formulas([pf("g")])
        assert minimal_supports(pool, pf("g")) == [frozenset({1})]

    def test_no_support(self):
        pool = PremiseSet.from_formulas([pf("p"), pf("q")])
        assert minimal_supports(pool, pf("r")) == []

    def test_enumeration_bound(self):
        pool = PremiseSet.from_formulas([pf(f"x{i}") for i in range(1, 6)])
        with pytest.raises(EnumerationLimitError):
            minimal_supports(pool, pf("x1"), max_premises=4)

    def test_matches_power_set_oracle_on_random_pools(self):
        rng = random.Random(2024)
        atoms = random_atoms(6)
        for _ in range(40):
            formulas = []
            seen = set()
            for _ in range(rng.randrange(2, 8)):
                f = random_formula(rng, atoms, 2)
                if f not in seen:
                    seen.add(f)
                    formulas.append(f)
            goal = random_formula(rng, atoms, 2)
            if not satisfiable(formulas):
                continue
            pool = PremiseSet.from_formulas(formulas)
            got = set(minimal_supports(pool, goal))
            want = brute_force_minimal_supports(formulas, goal)
            assert got == want

    def test_antichain_and_support_invariants(self):
        pool = vault_pool()
        goal = pf(VAULT_GOAL)
        supports = minimal_supports(pool, goal)
        for s in supports:
            assert entails(pool.subset_formulas(s), goal)
            for pid in s:
                assert not entails(pool.subset_formulas(s - {pid}), goal)
        for a in supports:
            for b in supports:
                assert a == b or not a < b

    def test_deterministic_ordering(self):
        first = minimal_supports(vault_pool(), pf(VAULT_GOAL))
        second = minimal_supports(vault_pool(), pf(VAULT_GOAL))
        assert first == second
        assert first == sorted(first, key=lambda s: (len(s), sorted(s)))


class TestMinimizeSupport:
    def test_full_vault_reduces_to_escort(self):
        # ascending-id removal lands on the escort route
        got = minimize_support(range(1, 8), vault_pool(), pf(VAULT_GOAL))
        assert got == frozenset({3, 7})

    def test_redundant_citation_reduces(self):
        got = minimize_support({1, 3, 7}, vault_pool(), pf(VAULT_GOAL))
        assert got == frozenset({3, 7})

    def test_already_minimal_is_fixpoint(self):
        got = minimize_support({1, 4, 6}, vault_pool(), pf(VAULT_GOAL))
        assert got == frozenset({1, 4, 6})

    def test_result_confirmed_minimal_by_oracle(self):
        formulas = [pf(t) for t in VAULT_PREMISES]
        got = minimize_support(range(1, 8), vault_pool(), pf(VAULT_GOAL))
        assert got in brute_force_minimal_supports(formulas, pf(VAULT_GOAL))

    def test_precondition_violation(self):
        with pytest.raises(NotEntailedError):
            minimize_support({1, 2}, vault_pool(), pf(VAULT_GOAL))
