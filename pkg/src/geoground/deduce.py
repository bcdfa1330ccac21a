"""Horn-style forward chaining over geometric facts.

``closure`` saturates a fact set under a rule list using semi-naive (delta
driven) evaluation and records every rule application in a derivation graph.
Fact symmetry is handled at canonicalization time: the matcher enumerates the
symmetry orbit of each stored fact, so rules never need explicit symmetry
schemas.

Rules are loadable from text (see docs/rules.md)::

    rule cong_trans: cong(A,B,C,D) & cong(C,D,E,F) => cong(A,B,E,F)
    rule[2d] perp_perp_ll: perp(K,L) & perp(L,M) => para(K,M) where K != M

Uppercase tokens are variables.  ``where`` clauses carry distinctness
constraints (``X != Y``) and coplanarity guards (``not_coll(X,Y,Z)`` blocks a
rule when the collinearity of the bound points is already known, which keeps
degenerate-angle noise out of the closure).  ``rule[2d]`` marks rules that
are only sound in planar configurations.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from geoground.geom import (
    Fact,
    PREDICATE_ARITIES,
    is_trivial,
    make_fact,
    symmetry_variants,
)

__all__ = [
    "Pattern",
    "Rule",
    "RuleApplication",
    "DerivationGraph",
    "RuleParseError",
    "parse_rules",
    "load_default_rules",
    "match",
    "closure",
    "MAX_STORED_DERIVATIONS",
]

# alternative derivations stored per fact; beyond this they are counted only
MAX_STORED_DERIVATIONS = 16

_VAR_RE = re.compile(r"^[A-Z][A-Z0-9]*$")


def is_variable(token: str) -> bool:
    return bool(_VAR_RE.match(token))


@dataclass(frozen=True)
class Pattern:
    predicate: str
    args: Tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"


@dataclass(frozen=True)
class Rule:
    name: str
    premises: Tuple[Pattern, ...]
    conclusion: Pattern
    distinct: Tuple[Tuple[str, str], ...] = ()
    not_coll: Tuple[Tuple[str, str, str], ...] = ()
    planar_only: bool = False

    def __post_init__(self) -> None:
        bound = {a for p in self.premises for a in p.args if is_variable(a)}
        for a in self.conclusion.args:
            if is_variable(a) and a not in bound:
                raise RuleParseError(
                    f"rule {self.name}: conclusion variable {a} not bound by any premise"
                )
        for pat in self.premises + (self.conclusion,):
            if len(pat.args) not in PREDICATE_ARITIES.get(pat.predicate, ()):
                raise RuleParseError(
                    f"rule {self.name}: bad arity for {pat.predicate} in {pat}"
                )


class RuleParseError(ValueError):
    pass


@dataclass(frozen=True)
class RuleApplication:
    rule: str
    premises: Tuple[Fact, ...]
    conclusion: Fact


@dataclass
class DerivationGraph:
    """Facts plus the rule applications that produced them.

    ``derivations`` stores at most MAX_STORED_DERIVATIONS alternatives per
    fact; ``overflow`` counts further derivations that were found but not
    stored.
    """

    roots: FrozenSet[Fact]
    nodes: Set[Fact] = field(default_factory=set)
    derivations: Dict[Fact, List[RuleApplication]] = field(default_factory=dict)
    overflow: Dict[Fact, int] = field(default_factory=dict)

    def record(self, app: RuleApplication) -> None:
        stored = self.derivations.setdefault(app.conclusion, [])
        if app in stored:
            return
        if len(stored) >= MAX_STORED_DERIVATIONS:
            self.overflow[app.conclusion] = self.overflow.get(app.conclusion, 0) + 1
            return
        stored.append(app)

    def edges(self) -> List[RuleApplication]:
        out: List[RuleApplication] = []
        for fact in sorted(self.derivations):
            out.extend(self.derivations[fact])
        return out

    def truncated(self, fact: Fact) -> bool:
        return self.overflow.get(fact, 0) > 0


# ---------------------------------------------------------------------------
# rule text
# ---------------------------------------------------------------------------

_RULE_RE = re.compile(
    r"^rule(\[(?P<tag>[a-z0-9]+)\])?\s+(?P<name>[a-z0-9_]+)\s*:\s*(?P<body>.+)$"
)
_ATOM_RE = re.compile(r"([a-z_]+)\s*\(\s*([^()]*?)\s*\)")
_NOT_COLL_RE = re.compile(r"^not_coll\(\s*(\w+)\s*,\s*(\w+)\s*,\s*(\w+)\s*\)$")


def _parse_atom(text: str, context: str) -> Pattern:
    m = _ATOM_RE.fullmatch(text.strip())
    if not m:
        raise RuleParseError(f"{context}: cannot parse atom {text!r}")
    args = tuple(a.strip() for a in m.group(2).split(","))
    return Pattern(m.group(1), args)


def _split_top_level(text: str, sep: str) -> List[str]:
    """Split on ``sep`` outside parentheses."""
    parts: List[str] = []
    depth = 0
    current: List[str] = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return parts


def parse_rules(text: str) -> List[Rule]:
    rules: List[Rule] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _RULE_RE.match(line)
        if not m:
            raise RuleParseError(f"line {line_no}: expected 'rule name: ...'")
        tag = m.group("tag")
        if tag not in (None, "2d"):
            raise RuleParseError(f"line {line_no}: unknown rule tag {tag!r}")
        body = m.group("body")
        where_part = ""
        if " where " in body:
            body, where_part = body.split(" where ", 1)
        if "=>" not in body:
            raise RuleParseError(f"line {line_no}: missing '=>'")
        lhs, rhs = body.split("=>", 1)
        premises = tuple(
            _parse_atom(p, f"line {line_no}") for p in lhs.split("&")
        )
        conclusion = _parse_atom(rhs, f"line {line_no}")
        distinct: List[Tuple[str, str]] = []
        not_coll: List[Tuple[str, str, str]] = []
        if where_part:
            for cond in _split_top_level(where_part, ","):
                cond = cond.strip()
                if not cond:
                    continue
                nc = _NOT_COLL_RE.match(cond)
                if nc:
                    not_coll.append((nc.group(1), nc.group(2), nc.group(3)))
                    continue
                if "!=" in cond:
                    a, b = (s.strip() for s in cond.split("!=", 1))
                    distinct.append((a, b))
                    continue
                raise RuleParseError(f"line {line_no}: bad side condition {cond!r}")
        rules.append(
            Rule(
                m.group("name"),
                premises,
                conclusion,
                tuple(distinct),
                tuple(not_coll),
                planar_only=tag == "2d",
            )
        )
    names = [r.name for r in rules]
    if len(set(names)) != len(names):
        raise RuleParseError("duplicate rule names")
    return rules


def load_default_rules(space_dim: int = 2) -> List[Rule]:
    """Bundled rule set; planar-only rules are dropped for 3D configurations."""
    text = resources.files("geoground.data").joinpath("rules.txt").read_text("utf-8")
    rules = parse_rules(text)
    if space_dim == 3:
        rules = [r for r in rules if not r.planar_only]
    return rules


# ---------------------------------------------------------------------------
# matching
# ---------------------------------------------------------------------------

class _FactStore:
    """Facts indexed for pattern matching: by (predicate, arity) and by the
    first argument of each symmetry variant."""

    def __init__(self) -> None:
        self.facts: List[Fact] = []
        self.fact_set: Set[Fact] = set()
        self.by_key: Dict[Tuple[str, int], List[Fact]] = {}
        self.variants: Dict[Fact, List[Tuple[str, ...]]] = {}
        self.first_arg: Dict[Tuple[str, int, str], List[Tuple[Fact, Tuple[str, ...]]]] = {}

    def add(self, fact: Fact) -> bool:
        if fact in self.fact_set:
            return False
        self.fact_set.add(fact)
        self.facts.append(fact)
        key = (fact.predicate, len(fact.args))
        self.by_key.setdefault(key, []).append(fact)
        variants = symmetry_variants(fact)
        self.variants[fact] = variants
        for variant in variants:
            self.first_arg.setdefault(key + (variant[0],), []).append((fact, variant))
        return True

    def __contains__(self, fact: Fact) -> bool:
        return fact in self.fact_set

    def candidates(
        self, pattern: Pattern, subst: Dict[str, str]
    ) -> Iterable[Tuple[Fact, Tuple[str, ...]]]:
        key = (pattern.predicate, len(pattern.args))
        lead = pattern.args[0]
        if not is_variable(lead):
            yield from self.first_arg.get(key + (lead,), ())
            return
        bound = subst.get(lead)
        if bound is not None:
            yield from self.first_arg.get(key + (bound,), ())
            return
        for fact in self.by_key.get(key, ()):
            for variant in self.variants[fact]:
                yield fact, variant


def _unify(
    pattern: Pattern, variant: Tuple[str, ...], subst: Dict[str, str]
) -> Optional[Dict[str, str]]:
    out = subst
    copied = False
    for p_arg, f_arg in zip(pattern.args, variant):
        if is_variable(p_arg):
            bound = out.get(p_arg)
            if bound is None:
                if not copied:
                    out = dict(out)
                    copied = True
                out[p_arg] = f_arg
            elif bound != f_arg:
                return None
        elif p_arg != f_arg:
            return None
    return out if copied else dict(out)


def _satisfies(rule: Rule, subst: Dict[str, str], store: _FactStore) -> bool:
    for a, b in rule.distinct:
        if subst.get(a, a) == subst.get(b, b):
            return False
    for trio in rule.not_coll:
        ids = tuple(subst.get(v, v) for v in trio)
        if len(set(ids)) < 3:
            return False
        if make_fact("coll", ids) in store:
            return False
    return True


def _enumerate_matches(
    rule: Rule,
    store: _FactStore,
    delta: Optional[Set[Fact]],
) -> List[Tuple[Dict[str, str], Tuple[Fact, ...]]]:
    """All (substitution, premise facts) pairs for a rule.

    When ``delta`` is given, enumerate only matches using at least one delta
    fact: premise slot d is drawn from delta, earlier slots from old facts,
    later slots from anything (standard semi-naive split, each application
    found exactly once).
    """
    results: List[Tuple[Dict[str, str], Tuple[Fact, ...]]] = []
    n = len(rule.premises)
    delta_positions = range(n) if delta is not None else (None,)

    for d in delta_positions:
        stack: List[Tuple[int, Dict[str, str], Tuple[Fact, ...]]] = [(0, {}, ())]
        while stack:
            idx, subst, used = stack.pop()
            if idx == n:
                if _satisfies(rule, subst, store):
                    results.append((subst, used))
                continue
            pattern = rule.premises[idx]
            for fact, variant in store.candidates(pattern, subst):
                if d is not None:
                    in_delta = fact in delta
                    if idx < d and in_delta:
                        continue
                    if idx == d and not in_delta:
                        continue
                new_subst = _unify(pattern, variant, subst)
                if new_subst is not None:
                    stack.append((idx + 1, new_subst, used + (fact,)))
    return results


def match(rule: Rule, facts: Iterable[Fact]) -> List[Dict[str, str]]:
    """Substitutions satisfying the rule's premises against ``facts``.

    Substitutions are deduplicated up to predicate symmetry (two are
    equivalent when they instantiate the same premise set and conclusion)
    and those instantiating a trivial conclusion are dropped; the result is
    in deterministic order.
    """
    store = _FactStore()
    for fact in facts:
        store.add(fact)
    seen: Set[Tuple[FrozenSet[Fact], Fact]] = set()
    out: List[Dict[str, str]] = []
    for subst, premises in _enumerate_matches(rule, store, None):
        conclusion = _instantiate(rule.conclusion, subst)
        if is_trivial(conclusion):
            continue
        key = (frozenset(premises), conclusion)
        if key not in seen:
            seen.add(key)
            out.append(subst)
    out.sort(key=lambda s: tuple(sorted(s.items())))
    return out


# ---------------------------------------------------------------------------
# closure
# ---------------------------------------------------------------------------

def _instantiate(pattern: Pattern, subst: Dict[str, str]) -> Fact:
    return make_fact(pattern.predicate, tuple(subst.get(a, a) for a in pattern.args))


def closure(
    facts: Iterable[Fact], rules: Sequence[Rule]
) -> Tuple[Set[Fact], DerivationGraph]:
    """Deduction fixpoint and its derivation graph.

    The returned set is closed under ``rules``; saturation is goal-agnostic
    and terminates because the predicate vocabulary over a finite object set
    is finite.  Every distinct rule application encountered is recorded
    (capped per fact, see MAX_STORED_DERIVATIONS).
    """
    store = _FactStore()
    roots: List[Fact] = []
    for fact in facts:
        if store.add(fact):
            roots.append(fact)
    graph = DerivationGraph(roots=frozenset(roots))
    graph.nodes.update(store.fact_set)

    seen_apps: Set[Tuple[str, Tuple[Fact, ...], Fact]] = set()
    delta: Set[Fact] = set(store.fact_set)
    while delta:
        pending: List[Fact] = []
        pending_set: Set[Fact] = set()
        for rule in rules:
            for subst, premises in _enumerate_matches(rule, store, delta):
                conclusion = _instantiate(rule.conclusion, subst)
                if is_trivial(conclusion) or conclusion in premises:
                    continue
                app = RuleApplication(rule.name, premises, conclusion)
                key = (rule.name, tuple(sorted(premises)), conclusion)
                if key in seen_apps:
                    continue
                seen_apps.add(key)
                graph.record(app)
                if conclusion not in store and conclusion not in pending_set:
                    pending_set.add(conclusion)
                    pending.append(conclusion)
        for fact in pending:
            store.add(fact)
        graph.nodes.update(pending)
        delta = pending_set
    return set(store.fact_set), graph


def graph_to_dot(graph: DerivationGraph, highlight: Optional[Set[Fact]] = None) -> str:
    """Render a derivation graph in DOT; roots are boxes, derived facts ovals."""
    highlight = highlight or set()
    ids: Dict[Fact, str] = {}
    lines = ["digraph deduction {", "  rankdir=BT;"]
    for i, fact in enumerate(sorted(graph.nodes)):
        ids[fact] = f"f{i}"
        shape = "box" if fact in graph.roots else "ellipse"
        style = ' style=filled fillcolor="lightyellow"' if fact in highlight else ""
        lines.append(f'  f{i} [label="{fact}" shape={shape}{style}];')
    edge_id = 0
    for app in graph.edges():
        node = f"r{edge_id}"
        edge_id += 1
        lines.append(f'  {node} [label="{app.rule}" shape=plaintext fontsize=9];')
        for premise in app.premises:
            lines.append(f"  {ids[premise]} -> {node};")
        lines.append(f"  {node} -> {ids[app.conclusion]};")
    lines.append("}")
    return "\n".join(lines)
