"""Recursive grounding: scenes decompose into dimensionally or axiomatically
terminated leaves, leaves retrieve formal declarations, and composition folds
the hierarchy back into a chain of checked statements."""

from geoground.ground.scene import (
    SceneGraph,
    ScenePrimitive,
    SceneParseError,
    UnknownRelation,
    DanglingReference,
    RELATION_VOCAB,
    parse_scene,
    load_bundled_scene,
    bundled_scene_names,
)
from geoground.ground.engine import (
    AxiomChain,
    ComposeFailed,
    DepthBudgetExceeded,
    EngineConfig,
    GroundNode,
    Lemma,
    NodeBudgetExceeded,
    PropChain,
    RunResult,
    check_chain,
    compose,
    ground_node,
    ground_to_dot,
    run_pipeline,
    semantic_check,
    terminate,
)
from geoground.ground.oracles import (
    CheckerUnavailable,
    DecompositionRules,
    EmptyIndex,
    NoCandidate,
    Oracles,
    default_oracles,
    evaluate_formula,
    velocity_composition,
)

__all__ = [
    "SceneGraph",
    "ScenePrimitive",
    "SceneParseError",
    "UnknownRelation",
    "DanglingReference",
    "RELATION_VOCAB",
    "parse_scene",
    "load_bundled_scene",
    "bundled_scene_names",
    "AxiomChain",
    "ComposeFailed",
    "DepthBudgetExceeded",
    "EngineConfig",
    "GroundNode",
    "Lemma",
    "NodeBudgetExceeded",
    "PropChain",
    "RunResult",
    "check_chain",
    "compose",
    "ground_node",
    "ground_to_dot",
    "run_pipeline",
    "semantic_check",
    "terminate",
    "CheckerUnavailable",
    "DecompositionRules",
    "EmptyIndex",
    "NoCandidate",
    "Oracles",
    "default_oracles",
    "evaluate_formula",
    "velocity_composition",
]
