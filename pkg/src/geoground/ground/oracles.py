"""Pluggable oracle interfaces with deterministic rule-table defaults.

Every reasoning step of the grounding engine is mediated by an oracle so a
remote model can replace it; the bundled defaults are deterministic and run
the shipped exemplar scenes end to end with no network access:

* grounder: a decomposition rule table keyed on (label, relation) patterns;
* retriever/selector: lexical search over the bundled declaration corpus,
  highest score wins with lexicographic tie-break;
* composer: a template engine that conjoins child statements and evaluates
  any arithmetic ``formula`` attribute found on the node's primitives;
* syntax check: structural well-formedness (balanced delimiters, binders
  followed by an identifier);
* semantic checker: every identifier in the formal statement must be
  declared (scene ids, corpus names, concept names, attribute keys).

A remote-model adapter implements the same callables; a request carries the
query context plus the temperature and candidate count from EngineConfig,
and the response is a ranked list of texts.  Deterministic defaults ignore
the temperatures.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

from geoground import index as index_mod
from geoground.dimension import ConceptTable, load_default_table
from geoground.ground.scene import SceneGraph, ScenePrimitive

__all__ = [
    "EmptyIndex",
    "NoCandidate",
    "CheckerUnavailable",
    "DecompositionRules",
    "Oracles",
    "default_oracles",
    "load_default_decomposition",
    "evaluate_formula",
    "velocity_composition",
    "structural_syntax_check",
    "make_structural_checker",
]


class EmptyIndex(RuntimeError):
    pass


class NoCandidate(RuntimeError):
    """The selector rejected every retrieved candidate."""


class CheckerUnavailable(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# decomposition rule table
# ---------------------------------------------------------------------------

def _normalize(text: str) -> str:
    return " ".join(text.lower().split())


@dataclass(frozen=True)
class DecompositionRule:
    pattern: str  # normalized label
    children: Tuple[str, ...]
    relation: Optional[str] = None  # required relation inside the node's subgraph


class DecompositionRules:
    """Ordered (label, relation)-keyed rewrite table driving decomposition."""

    def __init__(self, rules: Sequence[DecompositionRule]):
        self.rules: Tuple[DecompositionRule, ...] = tuple(rules)
        self._by_pattern: Dict[str, List[DecompositionRule]] = {}
        for rule in self.rules:
            self._by_pattern.setdefault(rule.pattern, []).append(rule)

    @staticmethod
    def parse(text: str) -> "DecompositionRules":
        """One rule per line: ``pattern [@relation] -> child; child; ...``"""
        rules: List[DecompositionRule] = []
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "->" not in line:
                raise ValueError(f"line {line_no}: expected 'pattern -> children'")
            lhs, rhs = line.split("->", 1)
            relation = None
            if "@" in lhs:
                lhs, relation = lhs.split("@", 1)
                relation = relation.strip()
            children = tuple(c.strip() for c in rhs.split(";") if c.strip())
            if not children:
                raise ValueError(f"line {line_no}: rule has no children")
            rules.append(DecompositionRule(_normalize(lhs), children, relation))
        return DecompositionRules(rules)

    def propose(
        self, concepts: Sequence[str], scene: SceneGraph, subgraph_ids: Sequence[str]
    ) -> List[str]:
        """Children for the first matching (label, relation) rule, in order."""
        present = {rel for _, rel, _ in scene.relations_among(subgraph_ids)}
        out: List[str] = []
        for concept in concepts:
            for rule in self._by_pattern.get(_normalize(concept), ()):
                if rule.relation is not None and rule.relation not in present:
                    continue
                for child in rule.children:
                    if child not in out:
                        out.append(child)
                break
        return out

    def has_rule(self, concepts: Sequence[str]) -> bool:
        return any(_normalize(c) in self._by_pattern for c in concepts)


def load_default_decomposition() -> DecompositionRules:
    text = resources.files("geoground.data").joinpath("grounding_rules.txt").read_text("utf-8")
    return DecompositionRules.parse(text)


# ---------------------------------------------------------------------------
# formula evaluation (the bundled numeric evaluator for composed statements)
# ---------------------------------------------------------------------------

_ALLOWED_BINOPS = {ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow}


def evaluate_formula(expression: str, bindings: Dict[str, float]) -> float:
    """Evaluate a small arithmetic expression over named values.

    Supports + - * / ** and unary minus; anything else is rejected.
    """
    tree = ast.parse(expression, mode="eval")

    def walk(node: ast.AST) -> float:
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in bindings:
                raise ValueError(f"unbound formula variable {node.id!r}")
            return bindings[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _ALLOWED_BINOPS:
            left, right = walk(node.left), walk(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                return left / right
            return left**right
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -walk(node.operand)
        raise ValueError(f"unsupported expression node {type(node).__name__}")

    return walk(tree)


def velocity_composition(u: float, v: float) -> float:
    """Relativistic sum of two collinear speeds given in units of c."""
    return (u + v) / (1.0 + u * v)


# ---------------------------------------------------------------------------
# composition and checking
# ---------------------------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")
_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")
_BINDERS = {"forall", "exists", "fun", "∀", "∃", "λ"}
_PAIRS = {")": "(", "]": "[", "}": "{"}

_SLUG_RE = re.compile(r"[^a-z0-9]+")


def slug(text: str) -> str:
    return _SLUG_RE.sub("_", text.lower()).strip("_") or "node"


def structural_syntax_check(statement: str) -> bool:
    """Balanced delimiters, non-empty body, every binder followed by a name."""
    if not statement.strip():
        return False
    stack: List[str] = []
    for ch in statement:
        if ch in "([{":
            stack.append(ch)
        elif ch in ")]}":
            if not stack or stack.pop() != _PAIRS[ch]:
                return False
    if stack:
        return False
    tokens = re.findall(r"[A-Za-z_][A-Za-z0-9_.]*|\S", statement)
    for i, tok in enumerate(tokens):
        if tok in _BINDERS:
            if i + 1 >= len(tokens) or not _IDENT_RE.fullmatch(tokens[i + 1]):
                return False
    return True


def default_composer(
    children: List[str],
    subgraph: Sequence[ScenePrimitive],
    predicates: Sequence[str],
    attempt: int = 0,
) -> str:
    """Conjoin child statements; evaluate a ``formula`` attribute when present.

    A single child is wrapped once (identity-like composition).  Numeric
    evaluation renders as ``= <value><unit>`` so a composed statement carries
    its computed quantity.
    """
    tag = slug(predicates[0]) if predicates else "node"
    if not children:
        body = " and ".join(predicates) or tag
    else:
        body = " ∧ ".join(f"({c})" for c in children)
    suffix = ""
    for prim in subgraph:
        expr = prim.attr("formula")
        if expr is None:
            continue
        value = evaluate_formula(expr, prim.numeric_attrs())
        unit = prim.attr("unit") or ""
        suffix = f" = {value:.3f}{unit}"
        break
    if not children:
        return f"theorem {tag} : {body}{suffix}"
    return f"{body}{suffix}" if len(children) > 1 or suffix else body


def default_selector(candidates):
    """Highest score wins; ties break on lexicographic declaration name."""
    if not candidates:
        return None
    return min(candidates, key=lambda item: (-item[1], item[0].name, item[0].id))


_WORD_RUN_RE = re.compile(r"[A-Za-z0-9]+")

_STATEMENT_KEYWORDS = (
    "theorem", "lemma", "axiom", "definition", "structure", "dim", "primitive",
    "forall", "exists", "by", "composition", "and", "of", "in", "c", "node",
)


def _vocab_terms(text: str) -> Set[str]:
    """Lowercased alphanumeric runs of a source string, plus the whole string."""
    terms = {t.lower() for t in _WORD_RUN_RE.findall(text)}
    stripped = text.strip().lower()
    if stripped:
        terms.add(stripped)
    return terms


def make_structural_checker(
    scene: SceneGraph, declared: Iterable[str] = ()
) -> Callable[[SceneGraph, str, str], int]:
    """Indicator checker: 1 iff every identifier in the statement is declared.

    The declared universe is built from the scene (primitive ids, labels,
    attributes, root statement), the given declaration-derived strings, and a
    small statement-keyword whitelist.  An identifier matches when all of its
    alphanumeric runs are known, so a statement that names a primitive absent
    from the scene is rejected.
    """
    universe: Set[str] = set()
    for source in declared:
        universe.update(_vocab_terms(source))
    for prim in scene.primitives:
        universe.update(_vocab_terms(prim.id))
        universe.update(_vocab_terms(prim.label))
        for key, value in prim.attributes:
            universe.update(_vocab_terms(key))
            universe.update(_vocab_terms(value))
    universe.update(_vocab_terms(scene.root_statement))
    universe.update(_STATEMENT_KEYWORDS)

    def checker(check_scene: SceneGraph, informal: str, formal: str) -> int:
        for token in _IDENT_RE.findall(formal):
            runs = [t.lower() for t in _WORD_RUN_RE.findall(token)]
            if runs and all(run in universe for run in runs):
                continue
            if token.lower() in universe:
                continue
            return 0
        return 1

    return checker


# ---------------------------------------------------------------------------
# the oracle bundle
# ---------------------------------------------------------------------------

@dataclass
class Oracles:
    """Everything the engine consults; swap any field for a remote adapter."""

    grounder: DecompositionRules
    retriever: Callable[[str, int], List]
    selector: Callable[[List], Optional[Tuple]]
    composer: Callable[[List[str], Sequence[ScenePrimitive], Sequence[str], int], str]
    syntax_check: Callable[[str], bool] = structural_syntax_check
    checker: Optional[Callable[[SceneGraph, str, str], int]] = None
    classifier: ConceptTable = field(default_factory=load_default_table)


def default_oracles(
    scene: SceneGraph,
    search_index: Optional[index_mod.Index] = None,
    decomposition: Optional[DecompositionRules] = None,
) -> Oracles:
    """Deterministic oracle bundle over the shipped corpus and rule tables."""
    if search_index is None:
        search_index = index_mod.build_index(index_mod.load_bundled_corpus())
    if decomposition is None:
        decomposition = load_default_decomposition()

    def retriever(query: str, k: int):
        if not search_index.declarations:
            raise EmptyIndex("declaration index is empty")
        return index_mod.search(search_index, query, k)

    classifier = load_default_table()
    declared: Set[str] = set()
    for decl in search_index.declarations:
        declared.add(decl.name)
        declared.add(decl.signature)
    declared.update(entry.name for entry in classifier.entries)

    return Oracles(
        grounder=decomposition,
        retriever=retriever,
        selector=default_selector,
        composer=default_composer,
        syntax_check=structural_syntax_check,
        checker=make_structural_checker(scene, declared),
        classifier=classifier,
    )
