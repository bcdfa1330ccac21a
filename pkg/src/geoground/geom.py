"""Geometric kernel: entities, coordinate realizations, and predicate evaluation.

Coordinates are plain float tuples (2 or 3 components).  Lines, circles and
planes are small frozen dataclasses over those tuples.  All predicate tests
are relative: residuals are normalized by the configuration's characteristic
length (the maximum pairwise point distance) before comparison against the
equality tolerance, so every verdict is invariant under uniform scaling.

Kernel constructors return either coordinates or a :class:`Degenerate` value
when the defining system is ill-conditioned (parallel lines asked to
intersect, collinear circumcenter input, tangent-miss line/circle).
Degenerate is a value rather than an exception so samplers can branch on it
without unwinding.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

Vec = Tuple[float, ...]

# Fixed numerical constants; callers may override per call but these are the
# engine-wide defaults.
DEFAULT_EQ_TOL = 1e-9
DEFAULT_DEGEN_TOL = 1e-7


class MissingCoordinates(KeyError):
    """An object id referenced by a fact has no coordinates."""


class ArityMismatch(ValueError):
    """Predicate applied to the wrong number or kind of arguments."""


@dataclass(frozen=True)
class Tolerance:
    """Relative equality tolerance and degeneracy threshold (0 < eq < degen < 1)."""

    eq_tol: float = DEFAULT_EQ_TOL
    degen_tol: float = DEFAULT_DEGEN_TOL

    def __post_init__(self) -> None:
        if not (0.0 < self.eq_tol < self.degen_tol < 1.0):
            raise ValueError(
                f"tolerances must satisfy 0 < eq_tol < degen_tol < 1, "
                f"got eq_tol={self.eq_tol}, degen_tol={self.degen_tol}"
            )


DEFAULT_TOLERANCE = Tolerance()


@dataclass(frozen=True)
class Degenerate:
    """Marker value for ill-conditioned kernel results; carries the reason."""

    reason: str


def is_degenerate(value: object) -> bool:
    return isinstance(value, Degenerate)


@dataclass(frozen=True)
class Line:
    """Line through ``point`` with unit ``direction``."""

    point: Vec
    direction: Vec


@dataclass(frozen=True)
class Circle:
    center: Vec
    radius: float


@dataclass(frozen=True)
class Plane:
    """Plane through ``point`` with unit ``normal`` (3D only)."""

    point: Vec
    normal: Vec


Coord = Union[Vec, Line, Circle, Plane]


def kind_of(coord: Coord) -> str:
    if isinstance(coord, Line):
        return "line"
    if isinstance(coord, Circle):
        return "circle"
    if isinstance(coord, Plane):
        return "plane"
    return "point"


@dataclass(frozen=True)
class GeoObject:
    """Symbolic geometric entity: canonical id, kind, and the defining step."""

    id: str
    kind: str  # point | line | circle | plane
    definition: str  # e.g. "circumcenter a b c"; "free" for sampled primitives


@dataclass(frozen=True)
class Realization:
    """Concrete coordinates for every object of a configuration."""

    coords: Dict[str, Coord]
    space_dim: int = 2

    def __post_init__(self) -> None:
        if self.space_dim not in (2, 3):
            raise ValueError(f"space_dim must be 2 or 3, got {self.space_dim}")

    def get(self, obj_id: str) -> Coord:
        try:
            return self.coords[obj_id]
        except KeyError:
            raise MissingCoordinates(obj_id) from None

    def points(self) -> List[Vec]:
        return [c for c in self.coords.values() if not isinstance(c, (Line, Circle, Plane))]


# ---------------------------------------------------------------------------
# vector helpers
# ---------------------------------------------------------------------------

def vadd(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def vsub(a: Vec, b: Vec) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def vscale(a: Vec, k: float) -> Vec:
    return tuple(x * k for x in a)


def vdot(a: Vec, b: Vec) -> float:
    return sum(x * y for x, y in zip(a, b))


def vnorm(a: Vec) -> float:
    return math.sqrt(vdot(a, a))


def vdist(a: Vec, b: Vec) -> float:
    return vnorm(vsub(a, b))


def vmid(a: Vec, b: Vec) -> Vec:
    return tuple((x + y) * 0.5 for x, y in zip(a, b))


def cross_mag(a: Vec, b: Vec) -> float:
    """Magnitude of the cross product (scalar in 2D, vector norm in 3D)."""
    if len(a) == 2:
        return abs(a[0] * b[1] - a[1] * b[0])
    cx = a[1] * b[2] - a[2] * b[1]
    cy = a[2] * b[0] - a[0] * b[2]
    cz = a[0] * b[1] - a[1] * b[0]
    return math.sqrt(cx * cx + cy * cy + cz * cz)


def cross3(a: Vec, b: Vec) -> Vec:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def unit(v: Vec, eps: float = 1e-300) -> Optional[Vec]:
    """Normalize ``v``; None when its norm is below ``eps``."""
    n = vnorm(v)
    if n <= eps:
        return None
    return vscale(v, 1.0 / n)


def rot90(v: Vec) -> Vec:
    return (-v[1], v[0])


def angle_between(u: Vec, v: Vec, fold: bool = False) -> float:
    """Unsigned angle between unit vectors: [0, pi], or [0, pi/2] when folded.

    Folding identifies a direction with its opposite, which is the right
    notion for undirected lines.
    """
    c = cross_mag(u, v)
    d = vdot(u, v)
    if fold:
        d = abs(d)
    return math.atan2(c, d)


# ---------------------------------------------------------------------------
# facts
# ---------------------------------------------------------------------------

# predicate -> allowed arities
PREDICATE_ARITIES: Dict[str, Tuple[int, ...]] = {
    "coll": (3,),
    "para": (2, 3, 4),       # 2 lines | point,point,line | 4 points
    "perp": (2, 3, 4),
    "cong": (4,),
    "midp": (3,),
    "eqangle": (6, 8),       # two (wing, vertex, wing) triples | two line pairs
    "cyclic": tuple(range(4, 13)),
    "on_line": (2,),
    "on_circle": (2,),
    "on_plane": (2,),
    "eqdist": (3,),
}


def _canon_pair(a: str, b: str) -> Tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def _canon_args(predicate: str, args: Tuple[str, ...]) -> Tuple[str, ...]:
    """Reorder args into the unique representative of the symmetry orbit."""
    n = len(args)
    if predicate in ("coll", "cyclic"):
        return tuple(sorted(args))
    if predicate in ("para", "perp"):
        if n == 2:
            return tuple(sorted(args))
        if n == 3:  # segment vs line: sort the two segment endpoints
            return _canon_pair(args[0], args[1]) + (args[2],)
        p, q = _canon_pair(args[0], args[1]), _canon_pair(args[2], args[3])
        return min(p, q) + max(p, q)
    if predicate == "cong":
        p, q = _canon_pair(args[0], args[1]), _canon_pair(args[2], args[3])
        return min(p, q) + max(p, q)
    if predicate in ("midp", "eqdist"):
        return (args[0],) + _canon_pair(args[1], args[2])
    if predicate == "eqangle":
        if n == 6:
            left = _canon_pair(args[0], args[2])
            right = _canon_pair(args[3], args[5])
            t1 = (left[0], args[1], left[1])
            t2 = (right[0], args[4], right[1])
            return min(t1, t2) + max(t1, t2)
        quads = []
        for i in (0, 4):
            p = _canon_pair(args[i], args[i + 1])
            q = _canon_pair(args[i + 2], args[i + 3])
            quads.append(min(p, q) + max(p, q))
        return min(quads) + max(quads)
    return args  # on_line / on_circle / on_plane carry no symmetry


_FACT_TEXT_RE = re.compile(r"^\s*([a-z_]+)\s*\(\s*([^()]*?)\s*\)\s*$")


@dataclass(frozen=True, order=True)
class Fact:
    """A predicate instance in canonical (symmetry-reduced) form."""

    predicate: str
    args: Tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"


def make_fact(predicate: str, args: Sequence[str]) -> Fact:
    args = tuple(args)
    arities = PREDICATE_ARITIES.get(predicate)
    if arities is None:
        raise ArityMismatch(f"unknown predicate {predicate!r}")
    if len(args) not in arities:
        raise ArityMismatch(
            f"{predicate} takes {arities} arguments, got {len(args)}"
        )
    return Fact(predicate, _canon_args(predicate, args))


def parse_fact(text: str) -> Fact:
    """Parse ``pred(a,b,c)`` or whitespace form ``pred a b c``."""
    m = _FACT_TEXT_RE.match(text)
    if m:
        name = m.group(1)
        args = [a.strip() for a in m.group(2).split(",") if a.strip()]
        return make_fact(name, args)
    parts = text.split()
    if len(parts) >= 2:
        return make_fact(parts[0], parts[1:])
    raise ArityMismatch(f"cannot parse fact from {text!r}")


def symmetry_variants(fact: Fact) -> List[Tuple[str, ...]]:
    """Every argument ordering equivalent to ``fact`` under its symmetry group.

    Used by the rule matcher so patterns can bind any symmetric reading of a
    stored fact.  The canonical ordering is always included.
    """
    pred, args = fact.predicate, fact.args
    n = len(args)
    out: set = set()
    if pred in ("coll", "cyclic"):
        if n <= 4:
            import itertools

            out.update(itertools.permutations(args))
        else:
            # large cyclic facts: canonical ordering only (rules never need more)
            out.add(args)
    elif pred in ("para", "perp") and n == 2:
        out.update([args, (args[1], args[0])])
    elif pred in ("para", "perp") and n == 3:
        out.update([args, (args[1], args[0], args[2])])
    elif (pred in ("para", "perp") and n == 4) or pred == "cong":
        pairs = [(args[0], args[1]), (args[2], args[3])]
        for p in (pairs, pairs[::-1]):
            for a in (p[0], p[0][::-1]):
                for b in (p[1], p[1][::-1]):
                    out.add(a + b)
    elif pred in ("midp", "eqdist"):
        out.update([args, (args[0], args[2], args[1])])
    elif pred == "eqangle" and n == 6:
        t1, t2 = args[:3], args[3:]
        for u, v in ((t1, t2), (t2, t1)):
            for a in (u, (u[2], u[1], u[0])):
                for b in (v, (v[2], v[1], v[0])):
                    out.add(a + b)
    elif pred == "eqangle" and n == 8:
        def quad_variants(q: Tuple[str, ...]) -> List[Tuple[str, ...]]:
            p1, p2 = (q[0], q[1]), (q[2], q[3])
            vs = []
            for x, y in ((p1, p2), (p2, p1)):
                for a in (x, x[::-1]):
                    for b in (y, y[::-1]):
                        vs.append(a + b)
            return vs

        q1, q2 = args[:4], args[4:]
        for u, v in ((q1, q2), (q2, q1)):
            for a in quad_variants(u):
                for b in quad_variants(v):
                    out.add(a + b)
    else:
        out.add(args)
    return sorted(out)


def is_trivial(fact: Fact) -> bool:
    """True for tautological or vacuous facts which the closure drops.

    Examples: cong of a segment with itself, para/perp/eqangle relating a
    direction to itself, coll/cyclic with a repeated point.
    """
    pred, args = fact.predicate, fact.args
    if pred in ("coll", "cyclic"):
        return len(set(args)) < len(args)
    if pred == "cong" or (pred in ("para", "perp") and len(args) == 4):
        return args[:2] == args[2:] or len(set(args[:2])) == 1 or len(set(args[2:])) == 1
    if pred in ("para", "perp") and len(args) == 2:
        return args[0] == args[1]
    if pred in ("para", "perp") and len(args) == 3:
        return args[0] == args[1]
    if pred in ("midp", "eqdist"):
        return len(set(args)) < len(args)
    if pred == "eqangle":
        half = len(args) // 2
        if args[:half] == args[half:]:
            return True
        if len(args) == 6:
            return args[0] == args[1] or args[1] == args[2] or args[3] == args[4] or args[4] == args[5]
        return args[0] == args[1] or args[2] == args[3] or args[4] == args[5] or args[6] == args[7]
    return False


# ---------------------------------------------------------------------------
# predicate evaluation
# ---------------------------------------------------------------------------

def characteristic_length(r: Realization) -> float:
    """Maximum pairwise distance among point coordinates (1.0 if undefined)."""
    pts = r.points()
    best = 0.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = vdist(pts[i], pts[j])
            if d > best:
                best = d
    return best if best > 0.0 else 1.0


def _as_point(coord: Coord, what: str) -> Vec:
    if isinstance(coord, (Line, Circle, Plane)):
        raise ArityMismatch(f"{what} must be a point")
    return coord


def _direction_of_wing(wing: Coord, vertex: Vec) -> Tuple[Optional[Vec], bool]:
    """Direction of an angle wing: a ray toward a point, or a line's direction.

    Returns (unit direction or None, folded) where folded means the sign of
    the direction is ambiguous (line wings).
    """
    if isinstance(wing, Line):
        return wing.direction, True
    if isinstance(wing, (Circle, Plane)):
        raise ArityMismatch("angle wing must be a point or a line")
    return unit(vsub(wing, vertex)), False


def _triple_angle(r: Realization, w1: str, v: str, w2: str) -> Optional[float]:
    vertex = _as_point(r.get(v), "angle vertex")
    d1, f1 = _direction_of_wing(r.get(w1), vertex)
    d2, f2 = _direction_of_wing(r.get(w2), vertex)
    if d1 is None or d2 is None:
        return None
    return angle_between(d1, d2, fold=f1 or f2)


def _segment_direction(r: Realization, a: str, b: str) -> Optional[Vec]:
    return unit(vsub(_as_point(r.get(b), b), _as_point(r.get(a), a)))


def _line_angle(r: Realization, quad: Tuple[str, str, str, str]) -> Optional[float]:
    d1 = _segment_direction(r, quad[0], quad[1])
    d2 = _segment_direction(r, quad[2], quad[3])
    if d1 is None or d2 is None:
        return None
    return angle_between(d1, d2, fold=True)


def _direction_operand(r: Realization, args: Tuple[str, ...]) -> Optional[Tuple[Vec, Vec]]:
    """Resolve para/perp operands to a pair of unit directions."""
    coords = [r.get(a) for a in args]
    if len(args) == 2:
        if not (isinstance(coords[0], Line) and isinstance(coords[1], Line)):
            raise ArityMismatch("2-argument para/perp takes two lines")
        return coords[0].direction, coords[1].direction
    if len(args) == 3:
        if not isinstance(coords[2], Line):
            raise ArityMismatch("3-argument para/perp takes point, point, line")
        d = _segment_direction(r, args[0], args[1])
        if d is None:
            return None
        return d, coords[2].direction
    d1 = _segment_direction(r, args[0], args[1])
    d2 = _segment_direction(r, args[2], args[3])
    if d1 is None or d2 is None:
        return None
    return d1, d2


def _concyclic_residual(pts: List[Vec]) -> float:
    """Normalized determinant test: 0 iff the points lie on a common circle."""
    center = tuple(sum(p[i] for p in pts) / len(pts) for i in range(len(pts[0])))
    scale = max(max(vdist(p, center) for p in pts), 1e-300)
    norm = [vscale(vsub(p, center), 1.0 / scale) for p in pts]
    if len(norm[0]) == 3:
        # embed in the plane of the first three points
        u = unit(vsub(norm[1], norm[0]))
        if u is None:
            return math.inf
        w = vsub(norm[2], norm[0])
        w = vsub(w, vscale(u, vdot(w, u)))
        v = unit(w)
        if v is None:
            return math.inf
        n = cross3(u, v)
        base = norm[0]
        flat = []
        for p in norm:
            d = vsub(p, base)
            if abs(vdot(d, n)) > 1e-9:  # off-plane: cannot be concyclic
                return math.inf
            flat.append((vdot(d, u), vdot(d, v)))
        norm = flat
    worst = 0.0
    a, b, c = norm[0], norm[1], norm[2]
    for d in norm[3:]:
        rows = [(p[0] * p[0] + p[1] * p[1], p[0], p[1], 1.0) for p in (a, b, c, d)]
        det = _det4(rows)
        worst = max(worst, abs(det))
    return worst


def _det4(rows: List[Tuple[float, float, float, float]]) -> float:
    def det3(m: List[Tuple[float, float, float]]) -> float:
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )

    total = 0.0
    for col in range(4):
        minor = [tuple(row[c] for c in range(4) if c != col) for row in rows[1:]]
        sign = -1.0 if col % 2 else 1.0
        total += sign * rows[0][col] * det3(minor)
    return total


def eval_fact(fact: Fact, r: Realization, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """Numerically test ``fact`` against a realization.

    The algebraic residual is scaled by the configuration's characteristic
    length so verdicts are scale invariant.  Facts over coincident points
    (zero-length directions) evaluate False: they cannot be certified.
    """
    pred, args = fact.predicate, fact.args
    if len(args) not in PREDICATE_ARITIES.get(pred, ()):
        raise ArityMismatch(f"bad arity for {pred}: {len(args)}")
    L = characteristic_length(r)
    eq = tol.eq_tol

    if pred == "coll":
        a, b, c = (_as_point(r.get(x), x) for x in args)
        return cross_mag(vsub(b, a), vsub(c, a)) / (L * L) <= eq

    if pred in ("para", "perp"):
        ops = _direction_operand(r, args)
        if ops is None:
            return False
        d1, d2 = ops
        residual = cross_mag(d1, d2) if pred == "para" else abs(vdot(d1, d2))
        return residual <= eq

    if pred == "cong":
        a, b, c, d = (_as_point(r.get(x), x) for x in args)
        return abs(vdist(a, b) - vdist(c, d)) / L <= eq

    if pred == "midp":
        m, a, b = (_as_point(r.get(x), x) for x in args)
        return vdist(m, vmid(a, b)) / L <= eq

    if pred == "eqdist":
        o, a, b = (_as_point(r.get(x), x) for x in args)
        return abs(vdist(o, a) - vdist(o, b)) / L <= eq

    if pred == "eqangle":
        if len(args) == 6:
            t1 = _triple_angle(r, *args[:3])
            t2 = _triple_angle(r, *args[3:])
        else:
            t1 = _line_angle(r, args[:4])
            t2 = _line_angle(r, args[4:])
        if t1 is None or t2 is None:
            return False
        return abs(t1 - t2) <= eq

    if pred == "cyclic":
        pts = [_as_point(r.get(x), x) for x in args]
        return _concyclic_residual(pts) <= eq

    if pred == "on_line":
        p = _as_point(r.get(args[0]), args[0])
        ln = r.get(args[1])
        if not isinstance(ln, Line):
            raise ArityMismatch("on_line carrier must be a line")
        off = vsub(p, ln.point)
        perp_part = vsub(off, vscale(ln.direction, vdot(off, ln.direction)))
        return vnorm(perp_part) / L <= eq

    if pred == "on_circle":
        p = _as_point(r.get(args[0]), args[0])
        c = r.get(args[1])
        if not isinstance(c, Circle):
            raise ArityMismatch("on_circle carrier must be a circle")
        return abs(vdist(p, c.center) - c.radius) / L <= eq

    if pred == "on_plane":
        p = _as_point(r.get(args[0]), args[0])
        pl = r.get(args[1])
        if not isinstance(pl, Plane):
            raise ArityMismatch("on_plane carrier must be a plane")
        return abs(vdot(vsub(p, pl.point), pl.normal)) / L <= eq

    raise ArityMismatch(f"unknown predicate {pred!r}")


# ---------------------------------------------------------------------------
# kernel constructors
# ---------------------------------------------------------------------------

def midpoint_coords(a: Vec, b: Vec) -> Vec:
    return vmid(a, b)


def centroid_coords(a: Vec, b: Vec, c: Vec, degen_tol: float = DEFAULT_DEGEN_TOL):
    if _collinearity(a, b, c) < degen_tol:
        return Degenerate("collinear centroid input")
    return tuple((x + y + z) / 3.0 for x, y, z in zip(a, b, c))


def _collinearity(a: Vec, b: Vec, c: Vec) -> float:
    """sin of the angle at the smallest spread; 0 means collinear."""
    ab, ac = vsub(b, a), vsub(c, a)
    nab, nac = vnorm(ab), vnorm(ac)
    if nab == 0.0 or nac == 0.0:
        return 0.0
    return cross_mag(ab, ac) / (nab * nac)


def circumcenter_coords(a: Vec, b: Vec, c: Vec, degen_tol: float = DEFAULT_DEGEN_TOL):
    """Equidistant point of a triangle, in 2D or within the spanned 3D plane."""
    if _collinearity(a, b, c) < degen_tol:
        return Degenerate("collinear circumcenter input")
    ab, ac = vsub(b, a), vsub(c, a)
    u = unit(ab)
    if u is None:
        return Degenerate("coincident circumcenter input")
    w = vsub(ac, vscale(u, vdot(ac, u)))
    v = unit(w)
    if v is None:
        return Degenerate("collinear circumcenter input")
    bx = vnorm(ab)
    cx, cy = vdot(ac, u), vdot(ac, v)
    x = bx / 2.0
    y = (cx * cx + cy * cy - 2.0 * x * cx) / (2.0 * cy)
    return vadd(a, vadd(vscale(u, x), vscale(v, y)))


def incenter_coords(a: Vec, b: Vec, c: Vec, degen_tol: float = DEFAULT_DEGEN_TOL):
    if _collinearity(a, b, c) < degen_tol:
        return Degenerate("collinear incenter input")
    wa, wb, wc = vdist(b, c), vdist(c, a), vdist(a, b)
    s = wa + wb + wc
    return tuple(
        (wa * pa + wb * pb + wc * pc) / s for pa, pb, pc in zip(a, b, c)
    )


def orthocenter_coords(a: Vec, b: Vec, c: Vec, degen_tol: float = DEFAULT_DEGEN_TOL):
    o = circumcenter_coords(a, b, c, degen_tol)
    if is_degenerate(o):
        return Degenerate("collinear orthocenter input")
    # h = a + b + c - 2o (vector identity with the circumcenter)
    return tuple(pa + pb + pc - 2.0 * po for pa, pb, pc, po in zip(a, b, c, o))


def foot_coords(p: Vec, line: Line) -> Vec:
    off = vsub(p, line.point)
    return vadd(line.point, vscale(line.direction, vdot(off, line.direction)))


def line_through(a: Vec, b: Vec, degen_tol: float = DEFAULT_DEGEN_TOL):
    d = unit(vsub(b, a), eps=0.0)
    if d is None or vdist(a, b) < degen_tol:
        return Degenerate("coincident line endpoints")
    return Line(a, d)


def circle_center_through(center: Vec, through: Vec, degen_tol: float = DEFAULT_DEGEN_TOL):
    radius = vdist(center, through)
    if radius < degen_tol:
        return Degenerate("zero-radius circle")
    return Circle(center, radius)


def plane_through(a: Vec, b: Vec, c: Vec, degen_tol: float = DEFAULT_DEGEN_TOL):
    if len(a) != 3:
        return Degenerate("plane requires 3D points")
    if _collinearity(a, b, c) < degen_tol:
        return Degenerate("collinear plane input")
    n = unit(cross3(vsub(b, a), vsub(c, a)))
    if n is None:
        return Degenerate("collinear plane input")
    return Plane(a, n)


def intersect_lines(l1: Line, l2: Line, degen_tol: float = DEFAULT_DEGEN_TOL):
    """Intersection point of two coplanar (2D) lines."""
    if len(l1.point) != 2:
        return Degenerate("line-line intersection requires 2D")
    denom = l1.direction[0] * l2.direction[1] - l1.direction[1] * l2.direction[0]
    if abs(denom) < degen_tol:
        return Degenerate("parallel lines")
    diff = vsub(l2.point, l1.point)
    t = (diff[0] * l2.direction[1] - diff[1] * l2.direction[0]) / denom
    return vadd(l1.point, vscale(l1.direction, t))


def intersect_line_circle(line: Line, circle: Circle, degen_tol: float = DEFAULT_DEGEN_TOL):
    """Both intersection points, ordered by the line parameter."""
    t0 = vdot(vsub(circle.center, line.point), line.direction)
    closest = vadd(line.point, vscale(line.direction, t0))
    h_sq = circle.radius**2 - vdist(closest, circle.center) ** 2
    if h_sq <= 0.0 or math.sqrt(h_sq) / circle.radius < degen_tol:
        return Degenerate("line misses or is tangent to circle")
    h = math.sqrt(h_sq)
    return (
        vadd(line.point, vscale(line.direction, t0 - h)),
        vadd(line.point, vscale(line.direction, t0 + h)),
    )


def intersect_circles(c1: Circle, c2: Circle, degen_tol: float = DEFAULT_DEGEN_TOL):
    """Both intersection points, ordered lexicographically."""
    d = vdist(c1.center, c2.center)
    if d < degen_tol * max(c1.radius, c2.radius):
        return Degenerate("concentric circles")
    a = (d * d + c1.radius**2 - c2.radius**2) / (2.0 * d)
    h_sq = c1.radius**2 - a * a
    if h_sq <= 0.0 or math.sqrt(h_sq) / c1.radius < degen_tol:
        return Degenerate("circles miss or are tangent")
    h = math.sqrt(h_sq)
    u = unit(vsub(c2.center, c1.center))
    base = vadd(c1.center, vscale(u, a))
    n = rot90(u)
    p1 = vadd(base, vscale(n, h))
    p2 = vsub(base, vscale(n, h))
    return (p1, p2) if p1 <= p2 else (p2, p1)


def intersect_line_plane(line: Line, plane: Plane, degen_tol: float = DEFAULT_DEGEN_TOL):
    denom = vdot(line.direction, plane.normal)
    if abs(denom) < degen_tol:
        return Degenerate("line parallel to plane")
    t = vdot(vsub(plane.point, line.point), plane.normal) / denom
    return vadd(line.point, vscale(line.direction, t))


def intersect_planes(p1: Plane, p2: Plane, degen_tol: float = DEFAULT_DEGEN_TOL):
    d = cross3(p1.normal, p2.normal)
    du = unit(d)
    if du is None or vnorm(d) < degen_tol:
        return Degenerate("parallel planes")
    # point on both planes: solve via the 2x2 system in the (n1, n2) basis
    n1n2 = vdot(p1.normal, p2.normal)
    det = 1.0 - n1n2 * n1n2
    h1 = vdot(p1.normal, p1.point)
    h2 = vdot(p2.normal, p2.point)
    c1 = (h1 - h2 * n1n2) / det
    c2 = (h2 - h1 * n1n2) / det
    point = vadd(vscale(p1.normal, c1), vscale(p2.normal, c2))
    return Line(point, du)


def perpendicular_line_through(p: Vec, line: Line, degen_tol: float = DEFAULT_DEGEN_TOL):
    """Line through ``p`` perpendicular to ``line``.

    In 2D the result exists for any position of ``p``; in 3D it is the
    perpendicular dropped onto the line, degenerate when ``p`` lies on it.
    """
    if len(p) == 2:
        return Line(p, rot90(line.direction))
    f = foot_coords(p, line)
    d = unit(vsub(f, p))
    if d is None or vdist(p, f) < degen_tol:
        return Degenerate("point on line: perpendicular direction undefined")
    return Line(p, d)


def parallel_line_through(p: Vec, line: Line) -> Line:
    return Line(p, line.direction)


def bisector_line(a: Vec, b: Vec, c: Vec, degen_tol: float = DEFAULT_DEGEN_TOL):
    """Internal bisector of the angle at vertex ``b`` in triangle a-b-c."""
    da, dc = unit(vsub(a, b)), unit(vsub(c, b))
    if da is None or dc is None:
        return Degenerate("coincident bisector input")
    d = unit(vadd(da, dc))
    if d is None or vnorm(vadd(da, dc)) < degen_tol:
        return Degenerate("straight angle: bisector undefined")
    return Line(b, d)


def sample_free_point(rng, space_dim: int) -> Vec:
    """Uniform point in the unit box; bit-reproducible for a fixed generator state."""
    return tuple(rng.random() for _ in range(space_dim))
