"""Problem-instance pipeline: realize, select goals, extract premises, verify.

``generate`` runs the full loop -- sample a construction, saturate it,
select a derived goal, walk the derivation graph backward for the minimal
premise set, and numerically verify the result -- resampling on any stage
failure.  Everything is driven by one integer seed: sub-seeds for the
construction, the goal draw, and the coordinate draws are derived by hashing,
so a generated instance is byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

from geoground import construct, deduce, geom
from geoground.construct import ConstructionProgram, Limits, asserted_facts, parse_program, sample_program, serialize_program
from geoground.deduce import DerivationGraph, Rule, RuleApplication, closure
from geoground.geom import (
    Circle,
    Degenerate,
    Fact,
    Line,
    Plane,
    Realization,
    Tolerance,
    eval_fact,
    is_degenerate,
    parse_fact,
    sample_free_point,
)

__all__ = [
    "NoDerivedGoal",
    "GoalNotInGraph",
    "GenerationExhausted",
    "Verified",
    "Rejected",
    "Instance",
    "derive_seed",
    "realize_program",
    "select_goal",
    "extract_premises",
    "verify_numeric",
    "generate",
    "instance_to_json",
    "instance_from_json",
    "rederives_goal",
    "DEFAULT_RETRY_BUDGET",
    "VERIFY_MARGIN",
]

# pipeline restarts per generate() call before giving up
DEFAULT_RETRY_BUDGET = 200
# verification rejects realizations whose step conditioning is within this
# factor of the degeneracy threshold (near-degenerate margin)
VERIFY_MARGIN = 10.0


class NoDerivedGoal(RuntimeError):
    """The closure added nothing beyond the asserted facts."""


class GoalNotInGraph(KeyError):
    pass


class GenerationExhausted(RuntimeError):
    """The global retry budget was spent without emitting an instance."""


@dataclass(frozen=True)
class Verified:
    realization: Realization
    resamples: int


@dataclass(frozen=True)
class Rejected:
    reason: str  # degenerate_step | fact_violated | resamples_exhausted
    detail: str
    resamples: int


def derive_seed(seed: int, purpose: str, k: int) -> int:
    """Stable sub-seed split; identical across platforms and runs."""
    digest = hashlib.sha256(f"{seed}/{purpose}/{k}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# realization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepFailure:
    step_index: int
    operator: str
    reason: str


def _execute_step(
    step: construct.ConstructionStep,
    coords: Dict[str, geom.Coord],
    rng: random.Random,
    degen_tol: float,
    space_dim: int,
):
    op, ins = step.operator, [coords[i] for i in step.inputs]
    if op == "point":
        return (sample_free_point(rng, space_dim),)
    if op == "line":
        return (geom.line_through(ins[0], ins[1], degen_tol),)
    if op == "circle":
        return (geom.circle_center_through(ins[0], ins[1], degen_tol),)
    if op == "plane":
        return (geom.plane_through(ins[0], ins[1], ins[2], degen_tol),)
    if op == "line_line_intersection":
        return (geom.intersect_lines(ins[0], ins[1], degen_tol),)
    if op == "line_circle_intersection":
        got = geom.intersect_line_circle(ins[0], ins[1], degen_tol)
        return (got,) if is_degenerate(got) else got
    if op == "circle_circle_intersection":
        got = geom.intersect_circles(ins[0], ins[1], degen_tol)
        return (got,) if is_degenerate(got) else got
    if op == "line_plane_intersection":
        return (geom.intersect_line_plane(ins[0], ins[1], degen_tol),)
    if op == "plane_plane_intersection":
        return (geom.intersect_planes(ins[0], ins[1], degen_tol),)
    if op == "midpoint":
        return (geom.midpoint_coords(ins[0], ins[1]),)
    if op == "circumcenter":
        return (geom.circumcenter_coords(ins[0], ins[1], ins[2], degen_tol),)
    if op == "incenter":
        return (geom.incenter_coords(ins[0], ins[1], ins[2], degen_tol),)
    if op == "centroid":
        return (geom.centroid_coords(ins[0], ins[1], ins[2], degen_tol),)
    if op == "orthocenter":
        return (geom.orthocenter_coords(ins[0], ins[1], ins[2], degen_tol),)
    if op == "perpendicular_line":
        return (geom.perpendicular_line_through(ins[0], ins[1], degen_tol),)
    if op == "parallel_line":
        return (geom.parallel_line_through(ins[0], ins[1]),)
    if op == "foot_of_perpendicular":
        return (geom.foot_coords(ins[0], ins[1]),)
    if op == "angle_bisector":
        return (geom.bisector_line(ins[0], ins[1], ins[2], degen_tol),)
    raise construct.UnknownOperator(op)


def realize_program(
    program: ConstructionProgram,
    seed: int,
    tol: Tolerance = geom.DEFAULT_TOLERANCE,
    space_dim: int = 2,
    margin: float = 1.0,
) -> Union[Realization, StepFailure]:
    """Evaluate each construction step sequentially from seeded free points.

    ``margin`` scales the degeneracy threshold; verification passes
    VERIFY_MARGIN so configurations close to degeneracy are rejected.  The
    realization also requires all point pairs to stay separated by the same
    margin relative to the configuration size.
    """
    rng = random.Random(seed)
    degen_tol = tol.degen_tol * margin
    coords: Dict[str, geom.Coord] = {}
    for idx, step in enumerate(program.steps):
        results = _execute_step(step, coords, rng, degen_tol, space_dim)
        for out_id, value in zip(step.outputs, results):
            if is_degenerate(value):
                return StepFailure(idx, step.operator, value.reason)
            coords[out_id] = value
    realization = Realization(coords, space_dim)
    pts = realization.points()
    if len(pts) >= 2:
        scale = geom.characteristic_length(realization)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if geom.vdist(pts[i], pts[j]) < degen_tol * scale:
                    return StepFailure(-1, "separation", "near-coincident points")
    return realization


# ---------------------------------------------------------------------------
# goal selection and premise extraction
# ---------------------------------------------------------------------------

def select_goal(
    closure_set: Set[Fact],
    graph: DerivationGraph,
    asserted: Iterable[Fact],
    rng: random.Random,
) -> Fact:
    """Uniform draw over derived facts that carry a recorded derivation.

    Reservoir sampling over the candidate list in canonical order, so the
    draw is deterministic for a fixed generator state.
    """
    asserted_set = set(asserted)
    chosen: Optional[Fact] = None
    count = 0
    for fact in sorted(closure_set):
        if fact in asserted_set or not graph.derivations.get(fact):
            continue
        count += 1
        if rng.randrange(count) == 0:
            chosen = fact
    if chosen is None:
        raise NoDerivedGoal("closure added nothing beyond the asserted facts")
    return chosen


def extract_premises(
    graph: DerivationGraph, goal: Fact
) -> Tuple[Set[Fact], DerivationGraph]:
    """Backward walk from ``goal`` to the construction facts.

    Returns the premise set (roots reached) and the induced dependency
    subgraph.  When a fact has several stored derivations their prerequisite
    facts are all included (union semantics); the subgraph's ``overflow``
    flags facts whose derivation list was truncated by the storage cap.
    """
    if goal not in graph.nodes:
        raise GoalNotInGraph(str(goal))
    reached: Set[Fact] = set()
    stack = [goal]
    while stack:
        fact = stack.pop()
        if fact in reached:
            continue
        reached.add(fact)
        if fact in graph.roots:
            continue
        for app in graph.derivations.get(fact, ()):
            stack.extend(app.premises)
    premises = {f for f in reached if f in graph.roots}
    if goal in graph.roots:
        premises = {goal}
        return premises, DerivationGraph(roots=frozenset([goal]), nodes={goal})
    sub = DerivationGraph(roots=frozenset(premises), nodes=set(reached))
    for fact in reached:
        if fact in graph.roots:
            continue
        for app in graph.derivations.get(fact, ()):
            sub.record(app)
        if graph.overflow.get(fact):
            sub.overflow[fact] = graph.overflow[fact]
    return premises, sub


def rederives_goal(premises: Iterable[Fact], goal: Fact, rules: Sequence[Rule]) -> bool:
    """Premise-sufficiency check: the premises alone re-derive the goal."""
    closed, _ = closure(premises, rules)
    return goal in closed


# ---------------------------------------------------------------------------
# numerical verification
# ---------------------------------------------------------------------------

def verify_numeric(
    program: ConstructionProgram,
    premises: Iterable[Fact],
    goal: Fact,
    seed: int,
    tol: Tolerance = geom.DEFAULT_TOLERANCE,
    max_resamples: int = 50,
    space_dim: int = 2,
) -> Union[Verified, Rejected]:
    """Realize the construction and check premises and goal numerically.

    Degenerate steps and violated facts both trigger a fresh coordinate draw,
    up to ``max_resamples`` attempts.
    """
    facts = sorted(set(premises) | {goal})
    last_reason = "resamples_exhausted"
    last_detail = "no attempt made"
    for attempt in range(max_resamples):
        attempt_seed = derive_seed(seed, "realize", attempt)
        realized = realize_program(program, attempt_seed, tol, space_dim, VERIFY_MARGIN)
        if isinstance(realized, StepFailure):
            last_reason = "degenerate_step"
            last_detail = f"step {realized.step_index} ({realized.operator}): {realized.reason}"
            continue
        violated = next((f for f in facts if not eval_fact(f, realized, tol)), None)
        if violated is not None:
            last_reason = "fact_violated"
            last_detail = str(violated)
            continue
        return Verified(realized, attempt)
    if last_reason == "degenerate_step":
        return Rejected("resamples_exhausted", last_detail, max_resamples)
    return Rejected(last_reason, last_detail, max_resamples)


# ---------------------------------------------------------------------------
# the full loop
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Instance:
    program: ConstructionProgram
    premises: FrozenSet[Fact]
    goal: Fact
    trace: DerivationGraph
    realization: Realization
    seed: int
    verdict: Verified
    meta: Dict[str, object] = field(default_factory=dict)


def generate(
    seed: int,
    limits: Limits = construct.DEFAULT_LIMITS,
    rules: Optional[Sequence[Rule]] = None,
    tol: Tolerance = geom.DEFAULT_TOLERANCE,
    space_dim: int = 2,
    operator_weights: Optional[Dict[str, float]] = None,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
) -> Instance:
    """Produce one verified instance; deterministic in ``seed``.

    Raises GenerationExhausted when the retry budget is spent (for example
    with limits that admit nothing derivable).
    """
    if rules is None:
        rules = deduce.load_default_rules(space_dim)
    for attempt in range(retry_budget):
        program_rng = random.Random(derive_seed(seed, "program", attempt))
        try:
            program = sample_program(program_rng, limits, operator_weights, space_dim)
        except construct.SamplingExhausted:
            continue
        asserted = asserted_facts(program)
        if not asserted:
            continue
        closure_set, graph = closure(asserted, rules)
        goal_rng = random.Random(derive_seed(seed, "goal", attempt))
        try:
            goal = select_goal(closure_set, graph, asserted, goal_rng)
        except NoDerivedGoal:
            continue
        premises, trace = extract_premises(graph, goal)
        verdict = verify_numeric(
            program,
            premises,
            goal,
            derive_seed(seed, "coords", attempt),
            tol,
            limits.max_resamples,
            space_dim,
        )
        if isinstance(verdict, Rejected):
            continue
        meta = {
            "attempts": attempt + 1,
            "coord_resamples": verdict.resamples,
            "space_dim": space_dim,
            "limits": {
                "max_steps": limits.max_steps,
                "max_objects": limits.max_objects,
                "max_resamples": limits.max_resamples,
            },
            "tolerance": {"eq_tol": tol.eq_tol, "degen_tol": tol.degen_tol},
        }
        return Instance(
            program=program,
            premises=frozenset(premises),
            goal=goal,
            trace=trace,
            realization=verdict.realization,
            seed=seed,
            verdict=verdict,
            meta=meta,
        )
    raise GenerationExhausted(f"retry budget {retry_budget} spent for seed {seed}")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _coord_to_json(coord: geom.Coord):
    if isinstance(coord, Line):
        return {"kind": "line", "point": list(coord.point), "direction": list(coord.direction)}
    if isinstance(coord, Circle):
        return {"kind": "circle", "center": list(coord.center), "radius": coord.radius}
    if isinstance(coord, Plane):
        return {"kind": "plane", "point": list(coord.point), "normal": list(coord.normal)}
    return {"kind": "point", "coords": list(coord)}


def _coord_from_json(obj) -> geom.Coord:
    kind = obj["kind"]
    if kind == "line":
        return Line(tuple(obj["point"]), tuple(obj["direction"]))
    if kind == "circle":
        return Circle(tuple(obj["center"]), obj["radius"])
    if kind == "plane":
        return Plane(tuple(obj["point"]), tuple(obj["normal"]))
    return tuple(obj["coords"])


def trace_to_json(trace: DerivationGraph) -> Dict[str, object]:
    return {
        "roots": [str(f) for f in sorted(trace.roots)],
        "edges": [
            {
                "rule": app.rule,
                "premises": [str(p) for p in app.premises],
                "conclusion": str(app.conclusion),
            }
            for app in trace.edges()
        ],
        "truncated": sorted(str(f) for f, n in trace.overflow.items() if n),
    }


def trace_from_json(obj) -> DerivationGraph:
    roots = frozenset(parse_fact(t) for t in obj["roots"])
    graph = DerivationGraph(roots=roots, nodes=set(roots))
    for edge in obj["edges"]:
        app = RuleApplication(
            edge["rule"],
            tuple(parse_fact(p) for p in edge["premises"]),
            parse_fact(edge["conclusion"]),
        )
        graph.nodes.add(app.conclusion)
        graph.nodes.update(app.premises)
        graph.record(app)
    for name in obj.get("truncated", ()):
        graph.overflow[parse_fact(name)] = 1
    return graph


def instance_to_json(instance: Instance) -> str:
    """One-line JSON with fixed field order for byte determinism."""
    ordered_ids = [o for step in instance.program.steps for o in step.outputs]
    obj = {
        "seed": instance.seed,
        "dsl": serialize_program(instance.program),
        "premises": [str(f) for f in sorted(instance.premises)],
        "goal": str(instance.goal),
        "trace": trace_to_json(instance.trace),
        "realization": {
            "space_dim": instance.realization.space_dim,
            "coords": {i: _coord_to_json(instance.realization.coords[i]) for i in ordered_ids},
        },
        "meta": instance.meta,
    }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def instance_from_json(line: str, limits: Limits = construct.DEFAULT_LIMITS) -> Instance:
    obj = json.loads(line)
    program = parse_program(obj["dsl"], limits)
    premises = frozenset(parse_fact(t) for t in obj["premises"])
    goal = parse_fact(obj["goal"])
    trace = trace_from_json(obj["trace"])
    coords = {i: _coord_from_json(c) for i, c in obj["realization"]["coords"].items()}
    realization = Realization(coords, obj["realization"]["space_dim"])
    return Instance(
        program=program,
        premises=premises,
        goal=goal,
        trace=trace,
        realization=realization,
        seed=obj["seed"],
        verdict=Verified(realization, obj["meta"].get("coord_resamples", 0)),
        meta=obj["meta"],
    )
