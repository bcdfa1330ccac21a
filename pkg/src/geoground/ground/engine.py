"""The recursive grounding engine.

A scene's root statement opens a node over the whole scene graph.  Each node
is termination-tested first: concepts that reduce to a base dimension
terminate as dimensional groundings, fundamental laws and structural
primitives terminate as named axioms.  Non-terminal nodes decompose through
the grounder's rule table into child nodes over sub-scenes; nodes with no
decomposition retrieve their best-matching formal declaration.  Composition
then folds children back into parent statements, each passed through the
syntax check, yielding the proposition chain and the axiom chain (the
multiset of terminal leaves).

Node and depth budgets are enforced while nodes are created, so adversarial
or looping rule tables abort with a budget error carrying the partial graph
instead of expanding without bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

from geoground.dimension import ConceptTable, DimExpr, TerminationVerdict
from geoground.ground.oracles import NoCandidate, Oracles, slug
from geoground.ground.scene import SceneGraph, ScenePrimitive

__all__ = [
    "EngineConfig",
    "Lemma",
    "GroundNode",
    "PropChain",
    "AxiomChain",
    "RunResult",
    "NodeBudgetExceeded",
    "DepthBudgetExceeded",
    "ComposeFailed",
    "terminate",
    "ground_node",
    "compose",
    "semantic_check",
    "check_chain",
    "run_pipeline",
    "ground_to_dot",
]


@dataclass(frozen=True)
class EngineConfig:
    max_nodes: int = 100
    max_depth: int = 6
    retrieval_k: int = 10
    samples_per_node: int = 1
    temperature_greedy: float = 0.1
    temperature_diverse: float = 0.6

    def __post_init__(self) -> None:
        if min(self.max_nodes, self.max_depth, self.retrieval_k, self.samples_per_node) < 1:
            raise ValueError("engine budgets must be positive")
        if self.max_depth > self.max_nodes:
            raise ValueError("max_depth cannot exceed max_nodes")

    def to_dict(self) -> Dict[str, object]:
        return {
            "max_nodes": self.max_nodes,
            "max_depth": self.max_depth,
            "retrieval_k": self.retrieval_k,
            "samples_per_node": self.samples_per_node,
            "temperature_greedy": self.temperature_greedy,
            "temperature_diverse": self.temperature_diverse,
        }


@dataclass(frozen=True)
class Lemma:
    """A formal statement with its (opaque) proof term and provenance."""

    statement: str
    proof: str
    source: Tuple[str, Optional[str]]  # ("retrieved", declaration id) | ("composed", None)

    def __post_init__(self) -> None:
        if not self.statement:
            raise ValueError("lemma statement must be non-empty")


@dataclass
class GroundNode:
    index: int
    parent: Optional[int]
    depth: int  # root is depth 1
    subgraph: Tuple[str, ...]
    informal: str
    predicates: Tuple[str, ...]
    status: str = "open"  # open | lemma | dim | axiom
    lemma: Optional[Lemma] = None
    verdict: Optional[TerminationVerdict] = None
    children: List[int] = field(default_factory=list)

    def terminal(self) -> bool:
        return self.status in ("dim", "axiom")


@dataclass
class PropChain:
    lemmas: List[Tuple[int, Lemma]] = field(default_factory=list)

    def statements(self) -> List[str]:
        return [lemma.statement for _, lemma in self.lemmas]


@dataclass
class AxiomChain:
    axioms: List[str] = field(default_factory=list)
    dims: List[DimExpr] = field(default_factory=list)

    def size(self) -> int:
        return len(self.axioms) + len(self.dims)


@dataclass
class RunResult:
    prop_chain: PropChain
    axiom_chain: AxiomChain
    report: Dict[str, object]
    nodes: Dict[int, GroundNode]


class _BudgetError(RuntimeError):
    """Base for budget violations; carries the partial graph diagnosis."""

    def __init__(self, message: str, report: Dict[str, object]):
        super().__init__(message)
        self.report = report


class NodeBudgetExceeded(_BudgetError):
    pass


class DepthBudgetExceeded(_BudgetError):
    pass


class ComposeFailed(RuntimeError):
    def __init__(self, node_index: int, attempts: int):
        super().__init__(f"node {node_index}: no candidate passed the syntax check in {attempts} attempts")
        self.node_index = node_index
        self.attempts = attempts


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def terminate(
    predicates: Sequence[str],
    classifier: ConceptTable,
    domain: str,
    construction_described: bool = False,
) -> TerminationVerdict:
    """Termination test for a node's predicate set.

    The node terminates when every predicate classifies terminal; the
    verdict of the first predicate stands for the node.  Structural
    primitives ground axiomatically (as named terminals).
    """
    verdicts = [
        classifier.classify(p, domain, construction_described) for p in predicates
    ]
    if verdicts and all(v.terminal for v in verdicts):
        return verdicts[0]
    first = predicates[0] if predicates else ""
    return TerminationVerdict("nonterminal", first, "not tabled")


def ground_node(
    prev_subgraph: Sequence[str],
    predicates: Sequence[str],
    retriever: Callable[[str, int], List],
    selector: Callable[[List], Optional[Tuple]],
    k: int,
) -> Lemma:
    """Retrieve the best-aligned formal declaration for a leaf's statements.

    Queries the index with each informal statement, pools the top-k
    candidates and lets the selector pick; NoCandidate when it rejects all.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    candidates: List = []
    seen: Set[str] = set()
    for statement in predicates:
        for decl, score in retriever(statement, k):
            if decl.id not in seen:
                seen.add(decl.id)
                candidates.append((decl, score))
    best = selector(candidates)
    if best is None:
        raise NoCandidate(f"no declaration aligned with {list(predicates)!r}")
    decl, _score = best
    return Lemma(
        statement=f"{decl.kind} {decl.name} : {decl.signature}",
        proof=f"retrieved:{decl.id}",
        source=("retrieved", decl.id),
    )


def compose(
    children: Sequence[object],
    subgraph: Sequence[ScenePrimitive],
    predicates: Sequence[str],
    composer: Callable,
    syntax_check: Callable[[str], bool],
    samples_per_node: int = 1,
    node_index: int = 0,
) -> Lemma:
    """Fold resolved children (lemmas or termination verdicts) into one lemma.

    The composer's candidate statement must pass the syntax check; it is
    retried up to ``samples_per_node`` times (pass@k) before ComposeFailed.
    """
    parts: List[str] = []
    for child in children:
        if isinstance(child, Lemma):
            parts.append(child.statement)
        elif isinstance(child, TerminationVerdict):
            parts.append(render_terminal(child))
        else:
            parts.append(str(child))
    for attempt in range(samples_per_node):
        candidate = composer(parts, subgraph, predicates, attempt)
        if syntax_check(candidate):
            return Lemma(candidate, proof=f"composed:{node_index}", source=("composed", None))
    raise ComposeFailed(node_index, samples_per_node)


def render_terminal(verdict: TerminationVerdict) -> str:
    if verdict.kind == "dim":
        return f"dim {verdict.concept} : {verdict.dim}"
    return f"axiom {verdict.concept}"


def semantic_check(
    triplet: Tuple[SceneGraph, str, str],
    checker: Optional[Callable[[SceneGraph, str, str], int]],
) -> int:
    """Indicator for one (scene, informal, formal) triplet: 1 accept, 0 reject."""
    from geoground.ground.oracles import CheckerUnavailable

    if checker is None:
        raise CheckerUnavailable("no semantic checker wired")
    scene, informal, formal = triplet
    return 1 if checker(scene, informal, formal) else 0


def check_chain(
    scene: SceneGraph,
    nodes: Dict[int, GroundNode],
    prop_chain: PropChain,
    checker: Optional[Callable[[SceneGraph, str, str], int]],
) -> Tuple[List[Tuple[int, int]], int]:
    """Per-proposition indicators and their conjunction (the chain verdict)."""
    per_prop: List[Tuple[int, int]] = []
    verdict = 1
    for idx, lemma in prop_chain.lemmas:
        flag = semantic_check((scene, nodes[idx].informal, lemma.statement), checker)
        per_prop.append((idx, flag))
        verdict = min(verdict, flag)
    return per_prop, verdict


# ---------------------------------------------------------------------------
# the pipeline
# ---------------------------------------------------------------------------

def _refine_subgraph(
    scene: SceneGraph, parent_ids: Sequence[str], concept: str
) -> Tuple[str, ...]:
    """Primitives whose label matches the concept, within the parent slice;
    the parent slice itself when nothing matches."""
    needle = slug(concept)
    parent = set(parent_ids)
    matched = [
        p.id
        for p in scene.primitives
        if p.id in parent and (needle in slug(p.label) or slug(p.label) in needle)
    ]
    if not matched:
        return tuple(sorted(parent))
    return tuple(sorted(matched))


class _Run:
    def __init__(self, scene: SceneGraph, config: EngineConfig, oracles: Oracles):
        self.scene = scene
        self.config = config
        self.oracles = oracles
        self.nodes: Dict[int, GroundNode] = {}
        self.counter = 0

    def new_node(
        self, parent: Optional[int], depth: int, informal: str, subgraph: Tuple[str, ...]
    ) -> GroundNode:
        if len(self.nodes) + 1 > self.config.max_nodes:
            raise NodeBudgetExceeded(
                f"node budget {self.config.max_nodes} exhausted while expanding "
                f"{informal!r} (over-decomposition)",
                self.partial_report("node budget exceeded"),
            )
        if depth > self.config.max_depth:
            raise DepthBudgetExceeded(
                f"depth budget {self.config.max_depth} exceeded at depth {depth} "
                f"for {informal!r} (runaway recursion)",
                self.partial_report("depth budget exceeded"),
            )
        self.counter += 1
        node = GroundNode(
            index=self.counter,
            parent=parent,
            depth=depth,
            subgraph=subgraph,
            informal=informal,
            predicates=(informal,),
        )
        self.nodes[node.index] = node
        return node

    def resolve(self, node: GroundNode) -> None:
        verdict = terminate(
            node.predicates,
            self.oracles.classifier,
            self.scene.domain,
            construction_described=self.oracles.grounder.has_rule(node.predicates),
        )
        if verdict.terminal:
            node.verdict = verdict
            node.status = "dim" if verdict.kind == "dim" else "axiom"
            return
        child_concepts = self.oracles.grounder.propose(
            node.predicates, self.scene, node.subgraph
        )
        if not child_concepts:
            node.lemma = ground_node(
                node.subgraph,
                node.predicates,
                self.oracles.retriever,
                self.oracles.selector,
                self.config.retrieval_k,
            )
            node.status = "lemma"
            return
        children: List[GroundNode] = []
        for concept in child_concepts:
            sub = _refine_subgraph(self.scene, node.subgraph, concept)
            child = self.new_node(node.index, node.depth + 1, concept, sub)
            node.children.append(child.index)
            children.append(child)
        for child in children:
            self.resolve(child)
        node.lemma = self._compose_node(node, children)
        node.status = "lemma"

    def _compose_node(self, node: GroundNode, children: Sequence[GroundNode]) -> Lemma:
        resolved: List[object] = []
        for child in children:
            resolved.append(child.verdict if child.terminal() else child.lemma)
        prims = [self.scene.primitive(pid) for pid in node.subgraph]
        return compose(
            resolved,
            prims,
            node.predicates,
            self.oracles.composer,
            self.oracles.syntax_check,
            self.config.samples_per_node,
            node.index,
        )

    def partial_report(self, aborted: str) -> Dict[str, object]:
        report = build_report(self.scene, self.config, self.nodes, PropChain(), AxiomChain(), None)
        report["aborted"] = aborted
        return report


def run_pipeline(
    scene: SceneGraph, config: EngineConfig, oracles: Oracles
) -> RunResult:
    """Full recursive run: decompose/terminate to leaves, retrieve at
    non-terminal leaves, compose upward, then check the chain."""
    run = _Run(scene, config, oracles)
    root = run.new_node(None, 1, scene.root_statement, tuple(scene.ids()))
    run.resolve(root)
    if root.terminal():
        # a terminal root still heads the proposition chain: wrap its verdict
        root.lemma = compose(
            [root.verdict],
            [scene.primitive(pid) for pid in root.subgraph],
            root.predicates,
            oracles.composer,
            oracles.syntax_check,
            config.samples_per_node,
            root.index,
        )

    prop_chain = PropChain()
    axiom_chain = AxiomChain()
    for idx in sorted(run.nodes):
        node = run.nodes[idx]
        if node.lemma is not None:
            prop_chain.lemmas.append((idx, node.lemma))
        if node.terminal():
            assert node.verdict is not None
            if node.status == "dim":
                axiom_chain.dims.append(node.verdict.dim)
            else:
                axiom_chain.axioms.append(node.verdict.concept)

    per_prop, chain_flag = check_chain(scene, run.nodes, prop_chain, oracles.checker)
    report = build_report(scene, config, run.nodes, prop_chain, axiom_chain, (per_prop, chain_flag))
    return RunResult(prop_chain, axiom_chain, report, run.nodes)


def build_report(
    scene: SceneGraph,
    config: EngineConfig,
    nodes: Dict[int, GroundNode],
    prop_chain: PropChain,
    axiom_chain: AxiomChain,
    checks: Optional[Tuple[List[Tuple[int, int]], int]],
) -> Dict[str, object]:
    """Run report: node count, max depth, per-node status, chains, checks."""
    node_rows = []
    for idx in sorted(nodes):
        node = nodes[idx]
        detail = ""
        if node.verdict is not None:
            detail = render_terminal(node.verdict)
        elif node.lemma is not None:
            detail = node.lemma.statement
        node_rows.append(
            {
                "index": node.index,
                "parent": node.parent,
                "depth": node.depth,
                "concept": node.informal,
                "status": node.status,
                "detail": detail,
                "children": list(node.children),
            }
        )
    report: Dict[str, object] = {
        "scene": scene.name,
        "domain": scene.domain,
        "config": config.to_dict(),
        "node_count": len(nodes),
        "depth": max((n.depth for n in nodes.values()), default=0),
        "nodes": node_rows,
        "prop_chain": [
            {"node": idx, "statement": lemma.statement, "source": lemma.source[0]}
            for idx, lemma in prop_chain.lemmas
        ],
        "axiom_chain": {
            "axioms": list(axiom_chain.axioms),
            "dims": [str(d) for d in axiom_chain.dims],
        },
    }
    if checks is not None:
        per_prop, chain_flag = checks
        report["checks"] = {
            "per_prop": [[idx, flag] for idx, flag in per_prop],
            "chain": chain_flag,
        }
    return report


def report_to_json(report: Dict[str, object]) -> str:
    return json.dumps(report, ensure_ascii=False, indent=2, sort_keys=False)


def ground_to_dot(nodes: Dict[int, GroundNode]) -> str:
    """Grounding graph in DOT: terminals are boxes, lemmas ovals."""
    lines = ["digraph grounding {", "  rankdir=TB;"]
    for idx in sorted(nodes):
        node = nodes[idx]
        shape = "box" if node.terminal() else "ellipse"
        color = {"dim": "lightblue", "axiom": "lightyellow", "open": "lightcoral"}.get(
            node.status, "white"
        )
        label = node.informal.replace('"', "'")
        lines.append(
            f'  n{idx} [label="{idx}: {label}\\n[{node.status}]" shape={shape} '
            f'style=filled fillcolor="{color}"];'
        )
    for idx in sorted(nodes):
        for child in nodes[idx].children:
            lines.append(f"  n{idx} -> n{child};")
    lines.append("}")
    return "\n".join(lines)
