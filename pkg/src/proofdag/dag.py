"""Backward construction of multi-path proof DAGs.

A DAG is grown from a goal atom downward-to-upward: each expansion applies
one of the seven argument forms in reverse, minting parent premises with
fresh atoms.  A first pass builds a single linear chain (one solution);
further passes pick an already-derived node and add an alternative
derivation for it, multiplying the solution count.  Every newly minted
premise gets fresh atoms unless it explicitly reuses an existing node, so
the construction-tracked solution set stays exhaustive.

Ground truth is derived by enumerating all proof subgraphs (one deriving
rule chosen per needed node) and is cross-checked against the entailment
module's minimal-support enumeration whenever the premise count permits.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .entailment import PremiseSet, entails, minimal_supports, satisfiable
from .formulas import Atom, AtomRef, Formula, Implies, Not, Or, atoms_of

__all__ = [
    "GenerationError",
    "BranchRejectedError",
    "TierUnreachableError",
    "InconsistentGroundTruthError",
    "TIER_BANDS",
    "GenerationConfig",
    "InferenceNode",
    "ShareEvent",
    "LogicDag",
    "Solution",
    "DagStats",
    "GroundTruth",
    "derive_seed",
    "generate_chain",
    "add_branch",
    "generate_instance",
    "derive_ground_truth",
    "dag_stats",
    "enumerate_proof_subgraphs",
]


class GenerationError(RuntimeError):
    pass


class BranchRejectedError(GenerationError):
    """No branch expansion passed the defensive checks within budget."""


class TierUnreachableError(GenerationError):
    """The tier's solution-count band was not reached within the retry budget."""


class InconsistentGroundTruthError(GenerationError):
    """An enumerated support failed the entailment check (generator bug)."""


TIER_BANDS: dict[str, tuple[int, int]] = {
    "small": (2, 4),
    "medium": (5, 7),
    "large": (8, 19),
}

DEFAULT_FORM_WEIGHTS: tuple[tuple[str, float], ...] = (
    ("MP", 3.0),
    ("MT", 1.0),
    ("HS", 1.0),
    ("DS", 1.0),
    ("CD", 1.0),
    ("RAA", 1.0),
    ("DE", 1.0),
)


@dataclass(frozen=True)
class GenerationConfig:
    seed: int
    tier: str = "small"
    depth_range: tuple[int, int] = (4, 8)
    form_weights: tuple[tuple[str, float], ...] = DEFAULT_FORM_WEIGHTS
    max_branch_attempts: int = 40
    share_probability: float = 0.25
    reuse_ratio_max: float = 1.9
    oracle_check_max_premises: int = 12
    max_instance_retries: int = 60
    band_override: tuple[int, int] | None = None  # replaces the tier's default band

    def __post_init__(self) -> None:
        if self.tier not in TIER_BANDS:
            raise ValueError(f"unknown tier {self.tier!r}")
        lo, hi = self.depth_range
        if lo < 1 or hi < lo:
            raise ValueError(f"invalid depth range {self.depth_range}")
        weights = dict(self.form_weights)
        if any(w < 0 for w in weights.values()) or not any(w > 0 for w in weights.values()):
            raise ValueError("form weights must be non-negative and not all zero")
        if not any(weights.get(k, 0.0) > 0 for k in ("MP", "DS", "DE")):
            raise ValueError("at least one shape-independent form (MP, DS, DE) needs weight > 0")
        if not 0.0 <= self.share_probability <= 1.0:
            raise ValueError("share_probability must lie in [0, 1]")
        if self.band_override is not None and not 1 <= self.band_override[0] <= self.band_override[1]:
            raise ValueError(f"invalid band override {self.band_override}")

    @property
    def weight_map(self) -> dict[str, float]:
        return dict(self.form_weights)

    @property
    def solution_band(self) -> tuple[int, int]:
        return self.band_override or TIER_BANDS[self.tier]


@dataclass(frozen=True)
class InferenceNode:
    """One rule instance: local premise nodes and the concluded node."""

    node_id: int
    form_kind: str
    local_premises: tuple[int, ...]
    conclusion: int


@dataclass(frozen=True)
class ShareEvent:
    """Explicit reuse of an existing node as a premise of a new rule."""

    inference_id: int
    reused_node: int


@dataclass
class LogicDag:
    formula_nodes: dict[int, Formula]
    leaf_ids: set[int]
    goal_id: int
    inference_nodes: list[InferenceNode]
    seed: int
    config: GenerationConfig | None = None
    shares: list[ShareEvent] = field(default_factory=list)

    def copy(self) -> "LogicDag":
        return LogicDag(
            formula_nodes=dict(self.formula_nodes),
            leaf_ids=set(self.leaf_ids),
            goal_id=self.goal_id,
            inference_nodes=list(self.inference_nodes),
            seed=self.seed,
            config=self.config,
            shares=list(self.shares),
        )

    def derivers(self, node_id: int) -> list[InferenceNode]:
        return [e for e in self.inference_nodes if e.conclusion == node_id]

    @property
    def derived_ids(self) -> set[int]:
        return {e.conclusion for e in self.inference_nodes}

    def leaf_formulas(self) -> list[Formula]:
        return [self.formula_nodes[i] for i in sorted(self.leaf_ids)]

    def goal_formula(self) -> Formula:
        return self.formula_nodes[self.goal_id]

    def _next_node_id(self) -> int:
        return max(self.formula_nodes) + 1 if self.formula_nodes else 1

    def _next_inference_id(self) -> int:
        return max((e.node_id for e in self.inference_nodes), default=0) + 1

    def map_formulas(self, mapping) -> "LogicDag":
        """A structurally identical DAG with every formula rewritten."""
        out = self.copy()
        out.formula_nodes = {i: mapping(f) for i, f in self.formula_nodes.items()}
        return out


@dataclass(frozen=True)
class Solution:
    support: frozenset[int]
    inference_node_ids: frozenset[int]
    length: int


@dataclass(frozen=True)
class DagStats:
    depth: float
    n_paths: int
    reuse_ratio: float


@dataclass(frozen=True)
class GroundTruth:
    solutions: tuple[Solution, ...]
    families: tuple[tuple[int, ...], ...]  # 1-based solution ids per family
    stats: DagStats


def derive_seed(*parts: object) -> int:
    """A stable 63-bit stream seed derived from arbitrary hashable parts."""
    digest = hashlib.sha256(repr(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


_ATOM_INDEX_RE = re.compile(r"a(\d+)\Z")


def _fresh_atoms(dag: LogicDag, count: int) -> list[Atom]:
    highest = 0
    for f in dag.formula_nodes.values():
        for atom in atoms_of(f):
            m = _ATOM_INDEX_RE.match(atom.predicate)
            if m:
                highest = max(highest, int(m.group(1)))
    return [Atom(f"a{highest + i}") for i in range(1, count + 1)]


def _applicable_forms(f: Formula, weights: Mapping[str, float]) -> list[tuple[str, float]]:
    kinds = ["MP", "DS", "DE"]
    if isinstance(f, Not):
        kinds.extend(["MT", "RAA"])
    elif isinstance(f, Implies):
        kinds.append("HS")
    elif isinstance(f, Or):
        kinds.append("CD")
    out = [(k, weights.get(k, 0.0)) for k in kinds]
    return [(k, w) for k, w in out if w > 0]


def _downstream(dag: LogicDag, node_id: int) -> set[int]:
    """All nodes derivable (transitively) using ``node_id`` as a premise."""
    out: set[int] = set()
    frontier = [node_id]
    while frontier:
        current = frontier.pop()
        for e in dag.inference_nodes:
            if current in e.local_premises and e.conclusion not in out:
                out.add(e.conclusion)
                frontier.append(e.conclusion)
    return out


def _min_steps_to_goal(dag: LogicDag, node_id: int) -> int:
    """Fewest inference hops from ``node_id`` down to the goal."""
    if node_id == dag.goal_id:
        return 0
    dist = {node_id: 0}
    frontier = [node_id]
    while frontier:
        nxt: list[int] = []
        for v in frontier:
            for e in dag.inference_nodes:
                if v in e.local_premises and e.conclusion not in dist:
                    dist[e.conclusion] = dist[v] + 1
                    if e.conclusion == dag.goal_id:
                        return dist[e.conclusion]
                    nxt.append(e.conclusion)
        frontier = nxt
    return 0


def _expand(
    dag: LogicDag,
    target_id: int,
    rng: random.Random,
    *,
    allow_share: bool,
    share_candidates: Iterable[int] = (),
) -> tuple[InferenceNode, list[int]]:
    """Add one backward rule application deriving ``target_id`` in place.

    Returns the new inference node and the ids of its freshly minted
    premise nodes (a shared premise node is wired, not minted).
    """
    target = dag.formula_nodes[target_id]
    config = dag.config
    assert config is not None
    applicable = _applicable_forms(target, config.weight_map)
    kinds = [k for k, _ in applicable]
    weights = [w for _, w in applicable]
    kind = rng.choices(kinds, weights=weights, k=1)[0]

    existing = set(dag.formula_nodes.values())
    minted: list[tuple[Formula, int | None]] = []  # (formula, wired existing node)
    shared_node: int | None = None

    if kind == "MP":
        shared_node = _pick_share(dag, rng, target, existing, allow_share, share_candidates)
        if shared_node is not None:
            bound = dag.formula_nodes[shared_node]
            minted = [(Implies(bound, target), None), (bound, shared_node)]
        else:
            x = AtomRef(_fresh_atoms(dag, 1)[0])
            minted = [(Implies(x, target), None), (x, None)]
    elif kind == "MT":
        assert isinstance(target, Not)
        q = AtomRef(_fresh_atoms(dag, 1)[0])
        minted = [(Implies(target.operand, q), None), (Not(q), None)]
    elif kind == "HS":
        assert isinstance(target, Implies)
        q = AtomRef(_fresh_atoms(dag, 1)[0])
        minted = [(Implies(target.left, q), None), (Implies(q, target.right), None)]
    elif kind == "DS":
        p = AtomRef(_fresh_atoms(dag, 1)[0])
        minted = [(Or(p, target), None), (Not(p), None)]
    elif kind == "CD":
        assert isinstance(target, Or)
        p, r = (AtomRef(a) for a in _fresh_atoms(dag, 2))
        minted = [(Implies(p, target.left), None), (Implies(r, target.right), None), (Or(p, r), None)]
    elif kind == "RAA":
        assert isinstance(target, Not)
        q = AtomRef(_fresh_atoms(dag, 1)[0])
        minted = [(Implies(target.operand, q), None), (Implies(target.operand, Not(q)), None)]
    else:  # DE
        p, q = (AtomRef(a) for a in _fresh_atoms(dag, 2))
        minted = [(Or(p, q), None), (Implies(p, target), None), (Implies(q, target), None)]

    premise_ids: list[int] = []
    new_ids: list[int] = []
    for formula, wired in minted:
        if wired is not None:
            premise_ids.append(wired)
            continue
        node_id = dag._next_node_id()
        dag.formula_nodes[node_id] = formula
        dag.leaf_ids.add(node_id)
        premise_ids.append(node_id)
        new_ids.append(node_id)

    inference = InferenceNode(
        node_id=dag._next_inference_id(),
        form_kind=kind,
        local_premises=tuple(premise_ids),
        conclusion=target_id,
    )
    dag.inference_nodes.append(inference)
    dag.leaf_ids.discard(target_id)
    if shared_node is not None:
        dag.shares.append(ShareEvent(inference.node_id, shared_node))
    return inference, new_ids


def _pick_share(
    dag: LogicDag,
    rng: random.Random,
    target: Formula,
    existing: set[Formula],
    allow_share: bool,
    candidates: Iterable[int],
) -> int | None:
    config = dag.config
    assert config is not None
    if not allow_share or rng.random() >= config.share_probability:
        return None
    legal = []
    for node_id in sorted(candidates):
        bound = dag.formula_nodes.get(node_id)
        # Only atom nodes may be reused.  Minted compound premises embed
        # their target formula (p | t, x -> t, ...) and are therefore
        # entailed by it; giving such a node a second consumer would let
        # the target's other derivations satisfy it implicitly, creating
        # minimal supports the construction does not track.
        if bound is None or not isinstance(bound, AtomRef) or bound == target:
            continue
        if Implies(bound, target) in existing:
            continue
        legal.append(node_id)
    if not legal:
        return None
    return rng.choice(legal)


def generate_chain(config: GenerationConfig, rng: random.Random) -> LogicDag:
    """A single linear backward chain with exactly one solution.

    Starts from a freshly sampled goal atom and applies one backward rule
    per step until the sampled depth is reached; every minted premise uses
    fresh atoms.
    """
    dag = LogicDag(
        formula_nodes={1: AtomRef(Atom("a1"))},
        leaf_ids={1},
        goal_id=1,
        inference_nodes=[],
        seed=config.seed,
        config=config,
    )
    depth = rng.randint(*config.depth_range)
    frontier = dag.goal_id
    for _ in range(depth):
        _, new_ids = _expand(dag, frontier, rng, allow_share=False)
        frontier = rng.choice(new_ids)
    return dag


def enumerate_proof_subgraphs(dag: LogicDag, cap: int = 20000) -> list[Solution]:
    """Every proof subgraph of the goal: for each needed non-leaf node pick
    exactly one deriving rule, recursively down to leaves."""
    derivers: dict[int, list[InferenceNode]] = {}
    for e in dag.inference_nodes:
        derivers.setdefault(e.conclusion, []).append(e)
    for rules in derivers.values():
        rules.sort(key=lambda e: e.node_id)
    leaves = dag.leaf_ids
    out: list[Solution] = []

    def resolve(pending: frozenset[int], chosen: dict[int, InferenceNode]) -> None:
        if len(out) > cap:
            raise GenerationError("proof subgraph enumeration exceeded cap")
        unresolved = [v for v in sorted(pending) if v not in leaves and v not in chosen]
        if not unresolved:
            support = frozenset(v for v in pending if v in leaves)
            ids = frozenset(e.node_id for e in chosen.values())
            out.append(Solution(support=support, inference_node_ids=ids, length=len(ids)))
            return
        v = unresolved[0]
        for e in derivers.get(v, ()):
            resolve(pending | set(e.local_premises), {**chosen, v: e})

    resolve(frozenset((dag.goal_id,)), {})
    return out


def _canonical_solutions(raw: list[Solution]) -> list[Solution]:
    """Deduplicate by support, drop non-minimal supports, canonical order."""
    by_support: dict[frozenset[int], Solution] = {}
    for sol in raw:
        best = by_support.get(sol.support)
        if best is None or (sol.length, sorted(sol.inference_node_ids)) < (
            best.length,
            sorted(best.inference_node_ids),
        ):
            by_support[sol.support] = sol
    supports = list(by_support)
    minimal = [
        s for s in supports if not any(other < s for other in supports)
    ]
    kept = [by_support[s] for s in minimal]
    kept.sort(key=lambda sol: (len(sol.support), sorted(sol.support)))
    return kept


def _families(solutions: list[Solution]) -> tuple[tuple[int, ...], ...]:
    """Connected components under 'shares at least one inference node'."""
    n = len(solutions)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if solutions[i].inference_node_ids & solutions[j].inference_node_ids:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i + 1)
    return tuple(tuple(sorted(g)) for g in sorted(groups.values(), key=lambda g: g[0]))


def _stats(solutions: list[Solution]) -> DagStats:
    n = len(solutions)
    total_occurrences = sum(len(s.inference_node_ids) for s in solutions)
    distinct = set().union(*(s.inference_node_ids for s in solutions)) if solutions else set()
    depth = sum(s.length for s in solutions) / n if n else 0.0
    reuse = total_occurrences / len(distinct) if distinct else 0.0
    return DagStats(depth=depth, n_paths=n, reuse_ratio=reuse)


def derive_ground_truth(dag: LogicDag, *, check_entailment: bool = True) -> GroundTruth:
    """Exhaustive ground truth for a DAG.

    Supports are the leaf sets of the enumerated proof subgraphs,
    deduplicated and reduced to the minimal antichain; families group
    solutions that share at least one inference node; stats are the mean
    solution length, the path count, and the reuse ratio (inference-node
    occurrences across solutions over distinct inference nodes used).

    With ``check_entailment`` every support is verified to entail the goal
    and to be exactly minimal: by monotonicity, no single removable member
    means no entailing proper subset at all.
    """
    solutions = _canonical_solutions(enumerate_proof_subgraphs(dag))
    if check_entailment:
        goal = dag.goal_formula()
        for sol in solutions:
            formulas = {i: dag.formula_nodes[i] for i in sol.support}
            if not entails(formulas.values(), goal):
                raise InconsistentGroundTruthError(
                    f"support {sorted(sol.support)} does not entail the goal"
                )
            for pid in sol.support:
                rest = [f for i, f in formulas.items() if i != pid]
                if entails(rest, goal):
                    raise InconsistentGroundTruthError(
                        f"support {sorted(sol.support)} is not minimal: "
                        f"{pid} is removable"
                    )
    return GroundTruth(
        solutions=tuple(solutions),
        families=_families(solutions),
        stats=_stats(solutions),
    )


def dag_stats(dag: LogicDag, gt: GroundTruth) -> DagStats:
    """Recompute the three statistics from the ground truth's solutions."""
    return _stats(list(gt.solutions))


def _oracle_agrees(dag: LogicDag, solutions: list[Solution]) -> bool:
    """Cross-check construction-tracked supports against exhaustive
    minimal-support enumeration over the leaves (small DAGs only)."""
    leaf_order = sorted(dag.leaf_ids)
    pool = PremiseSet.from_formulas(dag.formula_nodes[i] for i in leaf_order)
    oracle = minimal_supports(pool, dag.goal_formula())
    mapped = {frozenset(leaf_order[i - 1] for i in s) for s in oracle}
    return mapped == {s.support for s in solutions}


def add_branch(dag: LogicDag, rng: random.Random) -> LogicDag:
    """Expand one already-derived node with an alternative derivation.

    A non-leaf node is chosen uniformly at random and re-derived through a
    fresh sub-chain (explicit node reuse honored per share_probability).
    Each attempt is recounted structurally and, on small DAGs, checked
    against the entailment oracle; attempts that change the solution set
    in any unexpected way are rejected.  Raises
    :class:`BranchRejectedError` when the attempt budget is exhausted.
    """
    if not dag.inference_nodes:
        raise ValueError("add_branch requires at least one inference node")
    config = dag.config
    assert config is not None
    old = _canonical_solutions(enumerate_proof_subgraphs(dag))
    for _ in range(config.max_branch_attempts):
        work = dag.copy()
        pre_branch_ids = set(dag.formula_nodes)
        target = rng.choice(sorted(work.derived_ids))
        forbidden = _downstream(work, target) | {target}
        share_pool = pre_branch_ids - forbidden
        length = max(1, rng.randint(*config.depth_range) - _min_steps_to_goal(work, target))
        frontier = target
        ok = True
        for _ in range(length):
            _, new_ids = _expand(
                work, frontier, rng, allow_share=True, share_candidates=share_pool
            )
            if not new_ids:
                ok = False
                break
            frontier = rng.choice(new_ids)
        if not ok or not _branch_is_sound(work, old, config):
            continue
        return work
    raise BranchRejectedError("no branch expansion passed the defensive checks")


def _branch_is_sound(
    work: LogicDag, old: list[Solution], config: GenerationConfig
) -> bool:
    seen = set()
    for e in work.inference_nodes:
        key = (e.conclusion, frozenset(e.local_premises))
        if key in seen:
            return False
        seen.add(key)
    try:
        solutions = _canonical_solutions(enumerate_proof_subgraphs(work))
    except GenerationError:
        return False
    if len(solutions) <= len(old):
        return False
    raw = enumerate_proof_subgraphs(work)
    if len({s.support for s in raw}) != len(raw):
        return False
    if len(solutions) != len(raw):
        return False
    if _stats(solutions).reuse_ratio > config.reuse_ratio_max:
        return False
    if not satisfiable(work.leaf_formulas()):
        return False
    if len(work.leaf_ids) <= config.oracle_check_max_premises and not _oracle_agrees(
        work, solutions
    ):
        return False
    return True


def generate_instance(config: GenerationConfig) -> tuple[LogicDag, GroundTruth]:
    """Chain generation plus branching until the tier band is hit.

    Fully deterministic given the config seed.  Raises
    :class:`TierUnreachableError` after the bounded retry budget; callers
    resample the seed.
    """
    lo, hi = config.solution_band
    for attempt in range(config.max_instance_retries):
        rng = random.Random(derive_seed(config.seed, attempt))
        dag = generate_chain(config, rng)
        target = rng.randint(lo, hi)
        count = 1
        stalled = False
        guard = 0
        while count < target and guard < config.max_branch_attempts:
            guard += 1
            try:
                candidate = add_branch(dag, rng)
            except BranchRejectedError:
                stalled = True
                break
            new_count = len(_canonical_solutions(enumerate_proof_subgraphs(candidate)))
            if new_count > hi:
                continue
            dag = candidate
            count = new_count
        if stalled or not lo <= count <= hi:
            continue
        try:
            gt = derive_ground_truth(dag)
        except GenerationError:
            continue
        if not satisfiable(dag.leaf_formulas()):
            continue
        return dag, gt
    raise TierUnreachableError(
        f"could not reach tier {config.tier!r} band within "
        f"{config.max_instance_retries} retries (seed {config.seed})"
    )
