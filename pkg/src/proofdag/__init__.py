"""Multi-path propositional proof benchmarks: generation, verification,
evaluation and metrics.

The core task: given a premise pool and a goal, every minimal subset of
premises entailing the goal is one distinct solution; instances carry the
exhaustive set of those solutions as solver-verified ground truth.
"""

from .dag import (
    GenerationConfig,
    GroundTruth,
    InferenceNode,
    LogicDag,
    Solution,
    TIER_BANDS,
    add_branch,
    derive_ground_truth,
    dag_stats,
    generate_chain,
    generate_instance,
)
from .dataset import BenchmarkInstance, read_dataset, write_dataset
from .entailment import (
    PremiseSet,
    entails,
    minimal_supports,
    minimize_support,
    satisfiable,
)
from .formulas import (
    And,
    ArgumentForm,
    Atom,
    AtomRef,
    FORMS,
    Formula,
    Implies,
    Not,
    Or,
    ParseError,
    atoms_of,
    format_formula,
    instantiate_form,
    parse_formula,
)

__version__ = "0.1.0"

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
    "ArgumentForm",
    "FORMS",
    "instantiate_form",
    "PremiseSet",
    "entails",
    "satisfiable",
    "minimal_supports",
    "minimize_support",
    "GenerationConfig",
    "LogicDag",
    "InferenceNode",
    "Solution",
    "GroundTruth",
    "TIER_BANDS",
    "generate_chain",
    "add_branch",
    "generate_instance",
    "derive_ground_truth",
    "dag_stats",
    "BenchmarkInstance",
    "read_dataset",
    "write_dataset",
    "__version__",
]
