"""Hand-built benchmark instances shared across test modules.

Three scenarios recur everywhere:

* the vault: three routes to one goal (PIN, fingerprint, escort), the
  canonical multi-support example;
* the destructive dilemma: two contraposition steps feeding a
  constructive-dilemma step, a single-solution derivation;
* the controlled-irrigation pair: a conjunction-bridging rule that a
  candidate proof either cites (valid) or omits (insufficient premise),
  plus a disjunction-elimination variant whose compressed step must still
  verify.
"""

from __future__ import annotations

from proofdag.catalog import DOMAIN_PROFILES
from proofdag.dag import InferenceNode, LogicDag, derive_ground_truth
from proofdag.dataset import BenchmarkInstance, build_instance
from proofdag.formulas import atoms_of, parse_formula
from proofdag.instantiate import SymbolMap, verbalize

_ACCESS_PROFILE = DOMAIN_PROFILES[0]


def _identity_symbol_map(dag: LogicDag, glosses: dict[str, str]) -> SymbolMap:
    atoms = {a for f in dag.formula_nodes.values() for a in atoms_of(f)}
    return SymbolMap(
        atom_map={a: a for a in atoms},
        glosses={a: glosses[str(a)] for a in atoms},
    )


def _hand_instance(
    node_formulas: dict[int, str],
    leaf_ids: set[int],
    goal_id: int,
    inference_nodes: list[tuple[int, str, tuple[int, ...], int]],
    glosses: dict[str, str],
    *,
    instance_id: str,
    tier: str = "small",
) -> BenchmarkInstance:
    dag = LogicDag(
        formula_nodes={i: parse_formula(t) for i, t in node_formulas.items()},
        leaf_ids=set(leaf_ids),
        goal_id=goal_id,
        inference_nodes=[
            InferenceNode(node_id=i, form_kind=kind, local_premises=prem, conclusion=conc)
            for i, kind, prem, conc in inference_nodes
        ],
        seed=0,
        config=None,
    )
    gt = derive_ground_truth(dag)
    symbol_map = _identity_symbol_map(dag, glosses)
    verbalized = verbalize(dag, symbol_map, _ACCESS_PROFILE)
    return build_instance(
        dag,
        gt,
        symbol_map,
        verbalized,
        instance_id=instance_id,
        tier=tier,
        domain=_ACCESS_PROFILE.domain_name,
        provenance={"seed": 0, "config_hash": "fixture", "catalog_version": "1",
                    "generator_version": "0.1.0"},
    )


VAULT_PREMISES = [
    "pin_ok(emma)",
    "fingerprint_ok(emma)",
    "escort(emma)",
    "pin_ok(emma) -> badge(emma)",
    "fingerprint_ok(emma) -> badge(emma)",
    "badge(emma) -> enter(emma)",
    "escort(emma) -> enter(emma)",
]

VAULT_GOAL = "enter(emma)"

VAULT_GLOSSES = {
    "pin_ok(emma)": "Emma's PIN is verified",
    "fingerprint_ok(emma)": "Emma's fingerprint is recognized",
    "escort(emma)": "Emma has a security escort",
    "badge(emma)": "Emma holds a valid badge",
    "enter(emma)": "Emma can enter the Vault",
}

# the three expected minimal supports, in premise ids (P1..P7 order above)
VAULT_SUPPORTS = {frozenset({1, 4, 6}), frozenset({2, 5, 6}), frozenset({3, 7})}


def vault_instance() -> BenchmarkInstance:
    nodes = {i + 1: text for i, text in enumerate(VAULT_PREMISES)}
    nodes[8] = "badge(emma)"
    nodes[9] = VAULT_GOAL
    return _hand_instance(
        nodes,
        leaf_ids={1, 2, 3, 4, 5, 6, 7},
        goal_id=9,
        inference_nodes=[
            (1, "MP", (4, 1), 8),
            (2, "MP", (5, 2), 8),
            (3, "MP", (6, 8), 9),
            (4, "MP", (7, 3), 9),
        ],
        glosses=VAULT_GLOSSES,
        instance_id="fixture-vault",
    )


DILEMMA_GLOSSES = {
    "p": "the primary sensor is active",
    "q": "the heater is on",
    "r": "the backup sensor is active",
    "s": "the cooler is on",
}


def dilemma_instance() -> BenchmarkInstance:
    """Premises {p->q, r->s, -q|-s}; two contrapositions then a dilemma
    step conclude -p|-r.  One solution of length 3."""
    return _hand_instance(
        {
            1: "p -> q",
            2: "r -> s",
            3: "-q | -s",
            4: "-q -> -p",
            5: "-s -> -r",
            6: "-p | -r",
        },
        leaf_ids={1, 2, 3},
        goal_id=6,
        inference_nodes=[
            (1, "MT", (1,), 4),
            (2, "MT", (2,), 5),
            (3, "CD", (3, 4, 5), 6),
        ],
        glosses=DILEMMA_GLOSSES,
        instance_id="fixture-dilemma",
    )


IRRIGATION_GLOSSES = {
    "power_on": "the power supply is on",
    "dispensers_loaded": "the dispensers are loaded",
    "operational": "the irrigation system is operational",
    "controlled": "the water flow is controlled",
}


def irrigation_instance() -> BenchmarkInstance:
    """Fact 1: power_on; Fact 2: dispensers_loaded; Rule 1: power_on ->
    operational; Rule 2: operational & dispensers_loaded -> controlled."""
    return _hand_instance(
        {
            1: "power_on",
            2: "dispensers_loaded",
            3: "power_on -> operational",
            4: "operational & dispensers_loaded -> controlled",
            5: "operational",
            6: "controlled",
        },
        leaf_ids={1, 2, 3, 4},
        goal_id=6,
        inference_nodes=[
            (1, "MP", (3, 1), 5),
            (2, "MP", (4, 5, 2), 6),
        ],
        glosses=IRRIGATION_GLOSSES,
        instance_id="fixture-irrigation",
    )


LICENSING_GLOSSES = {
    "driver(john)": "John is a driver",
    "doctor(john)": "John is a doctor",
    "licensed(john)": "John holds a medical license",
    "insured(john)": "John is insured",
}


def licensing_instance() -> BenchmarkInstance:
    """A rule whose antecedent is never establishable: applying the
    doctor-licensing rule to a driver is a misapplication, and no single
    premise in context can repair it."""
    return _hand_instance(
        {
            1: "driver(john)",
            2: "doctor(john) -> licensed(john)",
            3: "driver(john) -> insured(john)",
            4: "insured(john)",
        },
        leaf_ids={1, 2, 3},
        goal_id=4,
        inference_nodes=[(1, "MP", (3, 1), 4)],
        glosses=LICENSING_GLOSSES,
        instance_id="fixture-licensing",
    )


QUARANTINE_GLOSSES = {
    "research_team": "the plot is managed by the research team",
    "medicinal_plant": "the plot grows a medicinal plant",
    "herbal_use": "the harvest is cleared for herbal use",
    "infected": "the plot is infected",
}


def quarantine_instance() -> BenchmarkInstance:
    """A disjunction-elimination shape whose two-arm step can be cited in
    one compressed move: {a|b, a->-g, b->-g} concluding -g."""
    return _hand_instance(
        {
            1: "research_team -> -infected",
            2: "research_team | medicinal_plant",
            3: "medicinal_plant -> herbal_use",
            4: "herbal_use -> -infected",
            5: "medicinal_plant -> -infected",
            6: "-infected",
        },
        leaf_ids={1, 2, 3, 4},
        goal_id=6,
        inference_nodes=[
            (1, "HS", (3, 4), 5),
            (2, "DE", (2, 1, 5), 6),
        ],
        glosses=QUARANTINE_GLOSSES,
        instance_id="fixture-quarantine",
    )
