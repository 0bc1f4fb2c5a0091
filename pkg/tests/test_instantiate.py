"""Symbol mapping, verbalization templates and their inversion."""

from __future__ import annotations

import json
import random

import pytest

from oracles import random_atoms, random_formula
from proofdag.catalog import DOMAIN_PROFILES, ENTITY_TYPES
from proofdag.client import ClientConfig, TextCompletionClient
from proofdag.dag import GenerationConfig, generate_instance
from proofdag.formulas import (
    And,
    Atom,
    AtomRef,
    Implies,
    Not,
    Or,
    atoms_of,
    parse_formula,
)
from proofdag.instantiate import (
    InstantiationError,
    NamingCollisionError,
    SymbolMap,
    TemplateInversionError,
    assign_semantics,
    gloss_is_safe,
    invert_formula_text,
    mechanical_atom,
    mechanical_gloss,
    render_sentence,
    verbalize,
)

PROFILE = DOMAIN_PROFILES[0]


def small_instance(seed=0):
    dag, _ = generate_instance(GenerationConfig(seed=seed, tier="small"))
    return dag


class TestCatalog:
    def test_exactly_32_unique_entries(self):
        assert len(ENTITY_TYPES) == 32
        assert len({e.name for e in ENTITY_TYPES}) == 32

    def test_examples_are_valid_identifiers(self):
        for entity in ENTITY_TYPES:
            Atom(entity.identifier)  # identifier grammar
            for example in entity.examples:
                Atom("p", (example,))

    def test_profiles_nonempty(self):
        for profile in DOMAIN_PROFILES:
            assert profile.domain_name and profile.background


class TestAssignSemantics:
    def test_mechanical_naming_example(self):
        assert mechanical_atom("person", 3) == Atom("person_prop_3", ("person_1",))

    def test_fallback_map_is_bijective_and_grammatical(self):
        dag = small_instance(1)
        symbol_map = assign_semantics(dag, PROFILE, seed=1)
        values = list(symbol_map.atom_map.values())
        assert len(set(values)) == len(values)
        for atom in values:
            Atom(atom.predicate, atom.args)  # revalidates grammar
            assert gloss_is_safe(symbol_map.glosses[atom])

    def test_fallback_deterministic(self):
        dag = small_instance(2)
        a = assign_semantics(dag, PROFILE, seed=7)
        b = assign_semantics(dag, PROFILE, seed=7)
        assert a.atom_map == b.atom_map and a.glosses == b.glosses

    def test_structure_preserved_over_corpus(self):
        def signature(f):
            if isinstance(f, AtomRef):
                return "A"
            if isinstance(f, Not):
                return ("N", signature(f.operand))
            return (type(f).__name__, signature(f.left), signature(f.right))

        for seed in range(4):
            dag = small_instance(seed)
            symbol_map = assign_semantics(dag, PROFILE, seed=seed)
            for f in dag.formula_nodes.values():
                assert signature(symbol_map.apply(f)) == signature(f)

    def test_non_injective_map_rejected(self):
        with pytest.raises(NamingCollisionError):
            SymbolMap(
                atom_map={Atom("a1"): Atom("x"), Atom("a2"): Atom("x")},
                glosses={Atom("x"): "x holds"},
            )


def stub_client(replies):
    """A client whose transport yields canned completion texts."""
    replies = list(replies)

    def transport(payload, config):
        return {
            "choices": [{"message": {"content": replies.pop(0)}}],
            "usage": {"prompt_tokens": 1, "completion_tokens": 2},
        }

    return TextCompletionClient(
        ClientConfig(endpoint="stub://", model="stub", max_retries=1),
        transport=transport,
        sleep=lambda s: None,
    )


class TestClientBackedNaming:
    def test_valid_reply_accepted(self):
        dag = small_instance(3)
        abstract = sorted({str(a) for f in dag.formula_nodes.values() for a in atoms_of(f)})
        reply = {
            name: {"predicate": f"pred_{i}", "args": ["emma"], "gloss": f"signal {i} is set"}
            for i, name in enumerate(abstract, start=1)
        }
        symbol_map = assign_semantics(dag, PROFILE, stub_client([json.dumps(reply)]))
        assert len(symbol_map.atom_map) == len(abstract)
        assert Atom("pred_1", ("emma",)) in symbol_map.glosses

    def test_collision_retried_then_fails(self):
        dag = small_instance(3)
        abstract = sorted({str(a) for f in dag.formula_nodes.values() for a in atoms_of(f)})
        colliding = {
            name: {"predicate": "same", "args": [], "gloss": "same thing"}
            for name in abstract
        }
        client = stub_client([json.dumps(colliding)] * 3)
        with pytest.raises(NamingCollisionError):
            assign_semantics(dag, PROFILE, client, max_attempts=3)

    def test_bad_identifier_rejected(self):
        dag = small_instance(3)
        abstract = sorted({str(a) for f in dag.formula_nodes.values() for a in atoms_of(f)})
        bad = {
            name: {"predicate": "Bad!", "args": [], "gloss": "g"} for name in abstract
        }
        client = stub_client([json.dumps(bad)] * 2)
        with pytest.raises(InstantiationError):
            assign_semantics(dag, PROFILE, client, max_attempts=2)


class TestVerbalize:
    def test_conditional_sentence_exact(self):
        glosses = {
            Atom("escort", ("emma",)): "Emma has a security escort",
            Atom("enter", ("emma",)): "Emma can enter the Vault",
        }
        f = Implies(AtomRef(Atom("escort", ("emma",))), AtomRef(Atom("enter", ("emma",))))
        assert (
            render_sentence(f, glosses)
            == "If Emma has a security escort, then Emma can enter the Vault."
        )

    def test_negation_template(self):
        glosses = {Atom("fact", ("x",)): "the flag is set"}
        f = Not(AtomRef(Atom("fact", ("x",))))
        assert render_sentence(f, glosses) == "It is not the case that the flag is set."

    def test_connective_templates(self):
        glosses = {Atom("a"): "alpha holds", Atom("b"): "beta holds"}
        a, b = AtomRef(Atom("a")), AtomRef(Atom("b"))
        assert render_sentence(Or(a, b), glosses) == "Either alpha holds or beta holds."
        assert render_sentence(And(a, b), glosses) == "Both alpha holds and beta holds."

    def test_prover9_forms_round_trip(self):
        dag = small_instance(4)
        symbol_map = assign_semantics(dag, PROFILE, seed=4)
        verbalized = verbalize(dag, symbol_map, PROFILE)
        leaf_order = sorted(dag.leaf_ids)
        mapped = [symbol_map.apply(dag.formula_nodes[i]) for i in leaf_order]
        mapped.append(symbol_map.apply(dag.goal_formula()))
        assert [parse_formula(t) for t in verbalized.prover9_forms] == mapped
        assert len(verbalized.premise_sentences) == len(leaf_order)

    def test_fallback_deterministic(self):
        dag = small_instance(5)
        symbol_map = assign_semantics(dag, PROFILE, seed=5)
        assert verbalize(dag, symbol_map, PROFILE) == verbalize(dag, symbol_map, PROFILE)

    def test_client_backed_sentences(self):
        dag = small_instance(6)
        symbol_map = assign_semantics(dag, PROFILE, seed=6)
        n = len(dag.leaf_ids)
        reply = json.dumps(
            {"context": "A story.", "sentences": [f"Sentence {i}." for i in range(n)],
             "goal": "The goal holds."}
        )
        verbalized = verbalize(dag, symbol_map, PROFILE, stub_client([reply]))
        assert verbalized.context == "A story."
        assert len(verbalized.premise_sentences) == n

    def test_client_misaligned_reply_rejected(self):
        dag = small_instance(6)
        symbol_map = assign_semantics(dag, PROFILE, seed=6)
        reply = json.dumps({"context": "x", "sentences": ["only one"], "goal": "g"})
        with pytest.raises(InstantiationError):
            verbalize(dag, symbol_map, PROFILE, stub_client([reply] * 2), max_attempts=2)


class TestTemplateInversion:
    def _glosses(self, atoms):
        return {a: f"signal {a.predicate} is set" for a in atoms}

    def test_random_formula_round_trip(self):
        rng = random.Random(314)
        atoms = random_atoms(5)
        glosses = self._glosses(atoms)
        lookup = {text.casefold(): atom for atom, text in glosses.items()}
        from proofdag.instantiate import render_formula_text

        for _ in range(500):
            f = random_formula(rng, atoms, depth=4)
            text = render_formula_text(f, glosses)
            assert invert_formula_text(text, lookup) == f

    def test_sentence_round_trip_with_capitalization(self):
        atoms = random_atoms(3)
        glosses = self._glosses(atoms)
        lookup = {text.casefold(): atom for atom, text in glosses.items()}
        f = Implies(AtomRef(atoms[0]), Or(AtomRef(atoms[1]), AtomRef(atoms[2])))
        sentence = render_sentence(f, glosses)
        assert invert_formula_text(sentence, lookup) == f

    def test_unknown_text_raises(self):
        with pytest.raises(TemplateInversionError):
            invert_formula_text("This matches no template.", {})

    def test_gloss_safety_checker(self):
        assert gloss_is_safe("Emma has a security escort")
        assert not gloss_is_safe("either this or that")
        assert not gloss_is_safe("rain, then shine")
        assert not gloss_is_safe("it is not the case that x")
        assert gloss_is_safe(mechanical_gloss(mechanical_atom("person", 3)))
