"""Construction DSL: parsing, validation, canonicalization, and random sampling.

Surface syntax, one step per line or ';':

    a = point
    l = line a b
    x y = circle_circle_intersection c1 c2
    ? cong x a x b          # optional goal clause

Operator signatures follow the construction-operator table documented in
docs/dsl.md.  Sampling only ever emits steps whose preconditions are
satisfiable by the objects bound so far; partial constructions that violate a
precondition are discarded and resampled.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Set, Tuple

from geoground.geom import Fact, make_fact, parse_fact

__all__ = [
    "OperatorSpec",
    "OPERATORS",
    "ConstructionStep",
    "ConstructionProgram",
    "Limits",
    "DslSyntaxError",
    "UnknownOperator",
    "UnboundId",
    "OperatorArityMismatch",
    "LimitExceeded",
    "SamplingExhausted",
    "parse_program",
    "serialize_program",
    "canonicalize",
    "asserted_facts",
    "sample_program",
    "object_name",
]


class DslSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int = 0):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class UnknownOperator(ValueError):
    pass


class UnboundId(ValueError):
    pass


class OperatorArityMismatch(ValueError):
    pass


class LimitExceeded(ValueError):
    pass


class SamplingExhausted(RuntimeError):
    """Raised when max_resamples rejections accumulate during sampling."""


@dataclass(frozen=True)
class Limits:
    """Global bounds on construction size; all positive, objects >= steps."""

    max_steps: int = 12
    max_objects: int = 20
    max_resamples: int = 50

    def __post_init__(self) -> None:
        if min(self.max_steps, self.max_objects, self.max_resamples) <= 0:
            raise ValueError("limits must be positive")
        if self.max_objects < self.max_steps:
            raise ValueError("max_objects must be >= max_steps")


DEFAULT_LIMITS = Limits()


@dataclass(frozen=True)
class OperatorSpec:
    name: str
    input_kinds: Tuple[str, ...]
    output_kinds: Tuple[str, ...]
    # index groups over inputs that may be freely reordered
    commutative: Tuple[Tuple[int, ...], ...] = ()
    # space dimensions in which the sampler may pick this operator
    sample_dims: Tuple[int, ...] = (2, 3)


OPERATORS: Dict[str, OperatorSpec] = {
    spec.name: spec
    for spec in [
        OperatorSpec("point", (), ("point",)),
        OperatorSpec("line", ("point", "point"), ("line",), ((0, 1),)),
        OperatorSpec("circle", ("point", "point"), ("circle",), (), (2,)),
        OperatorSpec("plane", ("point", "point", "point"), ("plane",), ((0, 1, 2),), (3,)),
        OperatorSpec("line_line_intersection", ("line", "line"), ("point",), ((0, 1),), (2,)),
        OperatorSpec("line_circle_intersection", ("line", "circle"), ("point", "point"), (), (2,)),
        OperatorSpec("circle_circle_intersection", ("circle", "circle"), ("point", "point"), ((0, 1),), (2,)),
        OperatorSpec("line_plane_intersection", ("line", "plane"), ("point",), (), (3,)),
        OperatorSpec("plane_plane_intersection", ("plane", "plane"), ("line",), ((0, 1),), (3,)),
        OperatorSpec("midpoint", ("point", "point"), ("point",), ((0, 1),)),
        OperatorSpec("circumcenter", ("point", "point", "point"), ("point",), ((0, 1, 2),)),
        OperatorSpec("incenter", ("point", "point", "point"), ("point",), ((0, 1, 2),)),
        OperatorSpec("centroid", ("point", "point", "point"), ("point",), ((0, 1, 2),)),
        OperatorSpec("orthocenter", ("point", "point", "point"), ("point",), ((0, 1, 2),)),
        OperatorSpec("perpendicular_line", ("point", "line"), ("line",)),
        OperatorSpec("parallel_line", ("point", "line"), ("line",)),
        OperatorSpec("foot_of_perpendicular", ("point", "line"), ("point",)),
        OperatorSpec("angle_bisector", ("point", "point", "point"), ("line",), ((0, 2),)),
    ]
}

# operators that consume a genuine (non-collinear) triangle
TRIANGLE_OPERATORS = {"circumcenter", "incenter", "centroid", "orthocenter", "angle_bisector", "plane"}

_ID_RE = re.compile(r"^[a-z][a-z0-9]*$")
_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def object_name(index: int) -> str:
    """Deterministic id sequence a, b, ..., z, aa, ab, ... (bijective base 26)."""
    name = ""
    index += 1
    while index > 0:
        index, rem = divmod(index - 1, 26)
        name = _LETTERS[rem] + name
    return name


@dataclass(frozen=True)
class ConstructionStep:
    operator: str
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]

    def __str__(self) -> str:
        lhs = " ".join(self.outputs)
        rhs = " ".join((self.operator,) + self.inputs)
        return f"{lhs} = {rhs}"


@dataclass(frozen=True)
class ConstructionProgram:
    steps: Tuple[ConstructionStep, ...]
    limits: Limits = DEFAULT_LIMITS
    goal: Optional[Fact] = None

    def kinds(self) -> Dict[str, str]:
        """Map of bound id -> kind, in introduction order."""
        out: Dict[str, str] = {}
        for step in self.steps:
            spec = OPERATORS[step.operator]
            for out_id, kind in zip(step.outputs, spec.output_kinds):
                out[out_id] = kind
        return out

    def object_count(self) -> int:
        return sum(len(s.outputs) for s in self.steps)


def _validate_step(
    step: ConstructionStep, kinds: Dict[str, str], line: int = 0
) -> None:
    spec = OPERATORS.get(step.operator)
    if spec is None:
        raise UnknownOperator(f"line {line}: unknown operator {step.operator!r}")
    if len(step.inputs) != len(spec.input_kinds):
        raise OperatorArityMismatch(
            f"line {line}: {step.operator} takes {len(spec.input_kinds)} inputs, "
            f"got {len(step.inputs)}"
        )
    if len(step.outputs) != len(spec.output_kinds):
        raise OperatorArityMismatch(
            f"line {line}: {step.operator} produces {len(spec.output_kinds)} outputs, "
            f"got {len(step.outputs)}"
        )
    for arg, want in zip(step.inputs, spec.input_kinds):
        have = kinds.get(arg)
        if have is None:
            raise UnboundId(f"line {line}: unbound id {arg!r}")
        if have != want:
            raise OperatorArityMismatch(
                f"line {line}: {step.operator} expects a {want}, {arg!r} is a {have}"
            )
    for out in step.outputs:
        if out in kinds:
            raise DslSyntaxError(f"output id {out!r} already bound", line)
    if len(set(step.outputs)) != len(step.outputs):
        raise DslSyntaxError("duplicate output ids", line)


def parse_program(text: str, limits: Limits = DEFAULT_LIMITS) -> ConstructionProgram:
    """Parse DSL source into a validated program.

    Raises DslSyntaxError, UnknownOperator, UnboundId, OperatorArityMismatch,
    or LimitExceeded.
    """
    steps: List[ConstructionStep] = []
    kinds: Dict[str, str] = {}
    goal: Optional[Fact] = None
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        for chunk in raw_line.split(";"):
            stmt = chunk.split("#", 1)[0].strip()
            if not stmt:
                continue
            if stmt.startswith("?"):
                if goal is not None:
                    raise DslSyntaxError("multiple goal clauses", line_no)
                try:
                    goal = parse_fact(stmt[1:].strip())
                except ValueError as exc:
                    raise DslSyntaxError(f"bad goal clause: {exc}", line_no) from exc
                for arg in goal.args:
                    if arg not in kinds:
                        raise UnboundId(f"line {line_no}: goal references unbound id {arg!r}")
                continue
            if "=" not in stmt:
                raise DslSyntaxError("expected 'outputs = operator inputs'", line_no, raw_line.find(stmt))
            lhs, rhs = stmt.split("=", 1)
            outputs = tuple(lhs.split())
            rhs_tokens = rhs.split()
            if not outputs or not rhs_tokens:
                raise DslSyntaxError("empty side of '='", line_no)
            for tok in outputs + tuple(rhs_tokens[1:]):
                if not _ID_RE.match(tok):
                    raise DslSyntaxError(f"bad identifier {tok!r}", line_no, stmt.find(tok))
            step = ConstructionStep(rhs_tokens[0], tuple(rhs_tokens[1:]), outputs)
            _validate_step(step, kinds, line_no)
            spec = OPERATORS[step.operator]
            for out_id, kind in zip(step.outputs, spec.output_kinds):
                kinds[out_id] = kind
            steps.append(step)
    program = ConstructionProgram(tuple(steps), limits, goal)
    if len(steps) > limits.max_steps:
        raise LimitExceeded(f"{len(steps)} steps exceeds max_steps={limits.max_steps}")
    if program.object_count() > limits.max_objects:
        raise LimitExceeded(
            f"{program.object_count()} objects exceeds max_objects={limits.max_objects}"
        )
    return program


def serialize_program(program: ConstructionProgram) -> str:
    lines = [str(step) for step in program.steps]
    if program.goal is not None:
        lines.append(f"? {program.goal.predicate} {' '.join(program.goal.args)}")
    return "\n".join(lines)


def _sort_commutative(step: ConstructionStep) -> ConstructionStep:
    spec = OPERATORS[step.operator]
    inputs = list(step.inputs)
    for group in spec.commutative:
        values = sorted(inputs[i] for i in group)
        for i, v in zip(group, values):
            inputs[i] = v
    return replace(step, inputs=tuple(inputs))


def canonicalize(program: ConstructionProgram) -> ConstructionProgram:
    """Relabel ids in first-appearance order and sort commutative inputs.

    Canonical serialization is a fixed point: canonicalize(canonicalize(p))
    == canonicalize(p).
    """
    mapping: Dict[str, str] = {}
    steps: List[ConstructionStep] = []
    for step in program.steps:
        inputs = tuple(mapping[i] for i in step.inputs)
        outputs = []
        for out in step.outputs:
            mapping[out] = object_name(len(mapping))
            outputs.append(mapping[out])
        steps.append(_sort_commutative(ConstructionStep(step.operator, inputs, tuple(outputs))))
    goal = None
    if program.goal is not None:
        goal = make_fact(program.goal.predicate, tuple(mapping[a] for a in program.goal.args))
    return ConstructionProgram(tuple(steps), program.limits, goal)


# ---------------------------------------------------------------------------
# asserted facts
# ---------------------------------------------------------------------------

def _step_facts(step: ConstructionStep) -> List[Fact]:
    op, ins, outs = step.operator, step.inputs, step.outputs
    if op == "line":
        return [make_fact("on_line", (ins[0], outs[0])), make_fact("on_line", (ins[1], outs[0]))]
    if op == "circle":
        return [make_fact("on_circle", (ins[1], outs[0]))]
    if op == "plane":
        return [make_fact("on_plane", (p, outs[0])) for p in ins]
    if op == "line_line_intersection":
        return [make_fact("on_line", (outs[0], ins[0])), make_fact("on_line", (outs[0], ins[1]))]
    if op == "line_circle_intersection":
        return [
            make_fact("on_line", (outs[0], ins[0])),
            make_fact("on_circle", (outs[0], ins[1])),
            make_fact("on_line", (outs[1], ins[0])),
            make_fact("on_circle", (outs[1], ins[1])),
        ]
    if op == "circle_circle_intersection":
        return [
            make_fact("on_circle", (outs[0], ins[0])),
            make_fact("on_circle", (outs[0], ins[1])),
            make_fact("on_circle", (outs[1], ins[0])),
            make_fact("on_circle", (outs[1], ins[1])),
        ]
    if op == "line_plane_intersection":
        return [make_fact("on_line", (outs[0], ins[0])), make_fact("on_plane", (outs[0], ins[1]))]
    if op == "midpoint":
        return [make_fact("midp", (outs[0], ins[0], ins[1]))]
    if op == "circumcenter":
        o = outs[0]
        return [
            make_fact("cong", (o, ins[0], o, ins[1])),
            make_fact("cong", (o, ins[1], o, ins[2])),
        ]
    if op == "incenter":
        # the incenter lies on the internal bisectors at two of the vertices
        i, (a, b, c) = outs[0], ins
        return [
            make_fact("eqangle", (b, a, i, i, a, c)),
            make_fact("eqangle", (a, b, i, i, b, c)),
        ]
    if op == "orthocenter":
        h, (a, b, c) = outs[0], ins
        return [
            make_fact("perp", (a, h, b, c)),
            make_fact("perp", (b, h, a, c)),
        ]
    if op == "perpendicular_line":
        return [make_fact("perp", (outs[0], ins[1])), make_fact("on_line", (ins[0], outs[0]))]
    if op == "parallel_line":
        return [make_fact("para", (outs[0], ins[1])), make_fact("on_line", (ins[0], outs[0]))]
    if op == "foot_of_perpendicular":
        f, (a, ln) = outs[0], ins
        return [make_fact("on_line", (f, ln)), make_fact("perp", (a, f, ln))]
    if op == "angle_bisector":
        ln, (a, b, c) = outs[0], ins
        return [
            make_fact("on_line", (b, ln)),
            make_fact("eqangle", (a, b, ln, c, b, ln)),
        ]
    # point, centroid, plane_plane_intersection assert nothing expressible
    # in the predicate vocabulary
    return []


def asserted_facts(program: ConstructionProgram) -> List[Fact]:
    """Defining facts of every step, deduplicated, in step order."""
    seen: Set[Fact] = set()
    out: List[Fact] = []
    for step in program.steps:
        for fact in _step_facts(step):
            if fact not in seen:
                seen.add(fact)
                out.append(fact)
    return out


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass
class _SamplerState:
    kinds: Dict[str, str] = field(default_factory=dict)
    steps: List[ConstructionStep] = field(default_factory=list)
    # line id -> points known to lie on it (drives collinearity gating)
    on_line: Dict[str, Set[str]] = field(default_factory=dict)
    coll_triples: Set[Tuple[str, str, str]] = field(default_factory=set)

    def ids_of(self, kind: str) -> List[str]:
        return [i for i, k in self.kinds.items() if k == kind]

    def known_collinear(self, a: str, b: str, c: str) -> bool:
        if tuple(sorted((a, b, c))) in self.coll_triples:
            return True
        for pts in self.on_line.values():
            if a in pts and b in pts and c in pts:
                return True
        return False

    def note_facts(self, step: ConstructionStep) -> None:
        for fact in _step_facts(step):
            if fact.predicate == "on_line":
                self.on_line.setdefault(fact.args[1], set()).add(fact.args[0])
            elif fact.predicate == "midp":
                self.coll_triples.add(tuple(sorted(fact.args)))


def _available_operators(
    state: _SamplerState, limits: Limits, space_dim: int, n_objects: int
) -> List[str]:
    pool = {k: len(state.ids_of(k)) for k in ("point", "line", "circle", "plane")}
    names = []
    for name in sorted(OPERATORS):
        spec = OPERATORS[name]
        if space_dim not in spec.sample_dims:
            continue
        if n_objects + len(spec.output_kinds) > limits.max_objects:
            continue
        need: Dict[str, int] = {}
        for kind in spec.input_kinds:
            need[kind] = need.get(kind, 0) + 1
        if all(pool.get(kind, 0) >= cnt for kind, cnt in need.items()):
            names.append(name)
    return names


def _weighted_choice(rng, names: List[str], weights: Optional[Dict[str, float]]) -> str:
    if weights is None:
        return names[rng.randrange(len(names))]
    ws = [max(weights.get(n, 1.0), 0.0) for n in names]
    total = sum(ws)
    if total <= 0.0:
        return names[rng.randrange(len(names))]
    x = rng.random() * total
    for name, w in zip(names, ws):
        x -= w
        if x <= 0.0:
            return name
    return names[-1]


def _pick_inputs(rng, state: _SamplerState, spec: OperatorSpec) -> Optional[Tuple[str, ...]]:
    """Draw distinct inputs of the right kinds; None if the draw is invalid."""
    chosen: List[str] = []
    for kind in spec.input_kinds:
        pool = [i for i in state.ids_of(kind) if i not in chosen]
        if not pool:
            return None
        chosen.append(pool[rng.randrange(len(pool))])
    inputs = tuple(chosen)
    if spec.name in TRIANGLE_OPERATORS and len(spec.input_kinds) == 3:
        if state.known_collinear(*inputs):
            return None
    if spec.name in ("foot_of_perpendicular", "perpendicular_line"):
        pt, ln = inputs
        if pt in state.on_line.get(ln, ()):  # foot would coincide with the point
            return None
    if spec.name == "parallel_line":
        pt, ln = inputs
        if pt in state.on_line.get(ln, ()):  # parallel through an incident point duplicates it
            return None
    return inputs


def sample_program(
    rng,
    limits: Limits = DEFAULT_LIMITS,
    operator_weights: Optional[Dict[str, float]] = None,
    space_dim: int = 2,
) -> ConstructionProgram:
    """Sample a bounded construction; deterministic for a fixed generator state.

    Draws that violate an operator precondition (unavailable kinds, known
    collinearity, incident projections, duplicate steps) are rejected and
    retried; SamplingExhausted is raised after limits.max_resamples
    rejections.
    """
    state = _SamplerState()
    rejections = 0
    n_objects = 0
    target_steps = rng.randint(min(3, limits.max_steps), limits.max_steps)
    step_keys: Set[Tuple[str, Tuple[str, ...]]] = set()
    while len(state.steps) < target_steps:
        names = _available_operators(state, limits, space_dim, n_objects)
        if not names:
            break
        name = _weighted_choice(rng, names, operator_weights)
        spec = OPERATORS[name]
        inputs = _pick_inputs(rng, state, spec)
        if inputs is None or (inputs and (name, inputs) in step_keys):
            rejections += 1
            if rejections > limits.max_resamples:
                raise SamplingExhausted(
                    f"{rejections} rejected draws exceed max_resamples={limits.max_resamples}"
                )
            continue
        outputs = tuple(
            object_name(n_objects + i) for i in range(len(spec.output_kinds))
        )
        step = _sort_commutative(ConstructionStep(name, inputs, outputs))
        step_keys.add((name, step.inputs))
        state.steps.append(step)
        for out_id, kind in zip(step.outputs, spec.output_kinds):
            state.kinds[out_id] = kind
        state.note_facts(step)
        n_objects += len(outputs)
    return ConstructionProgram(tuple(state.steps), limits)
