"""Structured scene files: the perceptual front door of the grounding engine.

A scene document declares primitives (point / line / region), a closed
vocabulary of spatial relations between them, and a root statement::

    scene relativity_velocity_addition
    domain physics
    root "Relative approach speed of two particles"

    primitive p1 point "RelativitySpeedOfLight"
    primitive p2 point "RelativityVelocityAddition" u=0.8 v=0.6
    relation p2 connected p1

Labels are quoted free text (the primitive's initial semantic hypothesis);
trailing ``key=value`` tokens attach attributes.  The full schema lives in
docs/scene.md.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

__all__ = [
    "RELATION_VOCAB",
    "PRIMITIVE_KINDS",
    "ScenePrimitive",
    "SceneGraph",
    "SceneParseError",
    "UnknownRelation",
    "DanglingReference",
    "parse_scene",
    "load_bundled_scene",
    "bundled_scene_names",
]

PRIMITIVE_KINDS = ("point", "line", "region")
RELATION_VOCAB = frozenset(
    {"adjacent", "parallel", "perpendicular", "contained_in", "intersects", "connected"}
)


class SceneParseError(ValueError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class UnknownRelation(ValueError):
    pass


class DanglingReference(ValueError):
    pass


@dataclass(frozen=True)
class ScenePrimitive:
    id: str
    kind: str
    label: str
    attributes: Tuple[Tuple[str, str], ...] = ()

    def attr(self, name: str) -> Optional[str]:
        for key, value in self.attributes:
            if key == name:
                return value
        return None

    def numeric_attrs(self) -> Dict[str, float]:
        out: Dict[str, float] = {}
        for key, value in self.attributes:
            try:
                out[key] = float(value)
            except ValueError:
                continue
        return out


@dataclass(frozen=True)
class SceneGraph:
    name: str
    domain: str
    root_statement: str
    primitives: Tuple[ScenePrimitive, ...]
    relations: Tuple[Tuple[str, str, str], ...]  # (source id, relation, target id)

    def ids(self) -> List[str]:
        return [p.id for p in self.primitives]

    def primitive(self, pid: str) -> ScenePrimitive:
        for p in self.primitives:
            if p.id == pid:
                return p
        raise DanglingReference(pid)

    def kind_counts(self) -> Dict[str, int]:
        counts = {k: 0 for k in PRIMITIVE_KINDS}
        for p in self.primitives:
            counts[p.kind] += 1
        return counts

    def neighbors(self, pid: str) -> List[str]:
        out = []
        for src, _, dst in self.relations:
            if src == pid:
                out.append(dst)
            elif dst == pid:
                out.append(src)
        return sorted(set(out))

    def relations_among(self, ids: Sequence[str]) -> List[Tuple[str, str, str]]:
        pool = set(ids)
        return [r for r in self.relations if r[0] in pool and r[2] in pool]


def _split_attrs(tokens: Sequence[str], line_no: int) -> Tuple[Tuple[str, str], ...]:
    attrs: List[Tuple[str, str]] = []
    for token in tokens:
        if "=" not in token:
            raise SceneParseError(f"expected key=value attribute, got {token!r}", line_no)
        key, value = token.split("=", 1)
        if not key:
            raise SceneParseError(f"empty attribute name in {token!r}", line_no)
        attrs.append((key, value))
    return tuple(attrs)


def parse_scene(text: str) -> SceneGraph:
    """Parse and validate a scene document.

    Raises SceneParseError for structural problems, UnknownRelation for a
    relation outside the vocabulary, DanglingReference when a relation
    endpoint is undeclared.
    """
    name: Optional[str] = None
    domain: Optional[str] = None
    root: Optional[str] = None
    primitives: List[ScenePrimitive] = []
    relations: List[Tuple[str, str, str]] = []
    ids: Dict[str, int] = {}

    for line_no, raw in enumerate(text.splitlines(), start=1):
        try:
            tokens = shlex.split(raw, comments=True)
        except ValueError as exc:
            raise SceneParseError(str(exc), line_no) from exc
        if not tokens:
            continue
        head = tokens[0]
        if head == "scene":
            if len(tokens) != 2:
                raise SceneParseError("scene takes exactly one name", line_no)
            name = tokens[1]
        elif head == "domain":
            if len(tokens) != 2 or tokens[1] not in ("math", "physics"):
                raise SceneParseError("domain must be 'math' or 'physics'", line_no)
            domain = tokens[1]
        elif head == "root":
            if len(tokens) != 2:
                raise SceneParseError("root takes one quoted statement", line_no)
            root = tokens[1]
        elif head == "primitive":
            if len(tokens) < 4:
                raise SceneParseError("primitive takes: id kind \"label\" [attrs]", line_no)
            pid, kind, label = tokens[1], tokens[2], tokens[3]
            if kind not in PRIMITIVE_KINDS:
                raise SceneParseError(f"unknown primitive kind {kind!r}", line_no)
            if pid in ids:
                raise SceneParseError(f"duplicate primitive id {pid!r}", line_no)
            ids[pid] = line_no
            primitives.append(ScenePrimitive(pid, kind, label, _split_attrs(tokens[4:], line_no)))
        elif head == "relation":
            if len(tokens) != 4:
                raise SceneParseError("relation takes: src name dst", line_no)
            src, rel, dst = tokens[1], tokens[2], tokens[3]
            if rel not in RELATION_VOCAB:
                raise UnknownRelation(f"line {line_no}: {rel!r}")
            relations.append((src, rel, dst))
        else:
            raise SceneParseError(f"unknown directive {head!r}", line_no)

    if name is None or domain is None or root is None:
        missing = [k for k, v in (("scene", name), ("domain", domain), ("root", root)) if v is None]
        raise SceneParseError(f"missing required directive(s): {', '.join(missing)}")
    for src, rel, dst in relations:
        for endpoint in (src, dst):
            if endpoint not in ids:
                raise DanglingReference(f"relation {rel} references undeclared id {endpoint!r}")
    return SceneGraph(name, domain, root, tuple(primitives), tuple(relations))


def bundled_scene_names() -> List[str]:
    root = resources.files("geoground.data").joinpath("scenes")
    return sorted(e.name[: -len(".scene")] for e in root.iterdir() if e.name.endswith(".scene"))


def load_bundled_scene(name: str) -> SceneGraph:
    path = resources.files("geoground.data").joinpath("scenes").joinpath(f"{name}.scene")
    return parse_scene(path.read_text("utf-8"))
