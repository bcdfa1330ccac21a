"""Dimensional algebra and the recursive-termination concept tables.

Dimensions are exponent vectors over the base set (M, L, T, Q, Th): mass,
length, time, charge, temperature.  Exponents are rationals so intermediate
quantities like sqrt(dimension) stay representable, though every tabled
concept is integral.

The concept table (data/concepts.txt) transcribes the termination tables for
the mathematics and physics domains; :func:`classify` is a pure lookup over
it.  Unknown concepts are NonTerminal (decompose further) rather than an
error.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Dict, Optional, Tuple

__all__ = [
    "BASE_DIMENSIONS",
    "DimExpr",
    "DIMENSIONLESS",
    "MASS",
    "LENGTH",
    "TIME",
    "CHARGE",
    "TEMPERATURE",
    "dim_mul",
    "dim_div",
    "dim_pow",
    "ConceptEntry",
    "ConceptTable",
    "TerminationVerdict",
    "UnknownDomain",
    "load_default_table",
    "classify",
    "dim_of",
    "CATEGORIES",
]

BASE_DIMENSIONS: Tuple[str, ...] = ("M", "L", "T", "Q", "Th")

CATEGORIES = frozenset(
    {
        "primitive",
        "atomic_parameter",
        "standard_predicate",
        "quantum_relativistic_parameter",
        "numeric_constraint",
        "derived_dimension",
        "dimensionless_group",
        "fundamental_law",
        "base_abstract_type",
        "math_operation",
        "conditional_atomic",
    }
)

# categories whose entries must carry an exponent vector
_DIMENSIONFUL = frozenset(
    {
        "atomic_parameter",
        "derived_dimension",
        "dimensionless_group",
        "quantum_relativistic_parameter",
        "conditional_atomic",
    }
)


class UnknownDomain(ValueError):
    pass


@dataclass(frozen=True)
class DimExpr:
    """Exponent vector over the base dimensions; the zero vector is dimensionless."""

    exponents: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.exponents) != len(BASE_DIMENSIONS):
            raise ValueError(f"expected {len(BASE_DIMENSIONS)} exponents")

    @staticmethod
    def of(m=0, l=0, t=0, q=0, th=0) -> "DimExpr":
        return DimExpr(tuple(Fraction(x) for x in (m, l, t, q, th)))

    def is_dimensionless(self) -> bool:
        return all(e == 0 for e in self.exponents)

    def __str__(self) -> str:
        if self.is_dimensionless():
            return "1"
        parts = []
        for name, e in zip(BASE_DIMENSIONS, self.exponents):
            if e == 0:
                continue
            parts.append(name if e == 1 else f"{name}^{e}")
        return " ".join(parts)


DIMENSIONLESS = DimExpr.of()
MASS = DimExpr.of(m=1)
LENGTH = DimExpr.of(l=1)
TIME = DimExpr.of(t=1)
CHARGE = DimExpr.of(q=1)
TEMPERATURE = DimExpr.of(th=1)


def dim_mul(a: DimExpr, b: DimExpr) -> DimExpr:
    return DimExpr(tuple(x + y for x, y in zip(a.exponents, b.exponents)))


def dim_div(a: DimExpr, b: DimExpr) -> DimExpr:
    return DimExpr(tuple(x - y for x, y in zip(a.exponents, b.exponents)))


def dim_pow(a: DimExpr, k) -> DimExpr:
    k = Fraction(k)
    return DimExpr(tuple(x * k for x in a.exponents))


@dataclass(frozen=True)
class ConceptEntry:
    name: str
    domain: str  # math | physics
    category: str
    dim: Optional[DimExpr] = None

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r} for {self.name}")
        if self.category in _DIMENSIONFUL and self.dim is None:
            raise ValueError(f"{self.name}: category {self.category} requires exponents")
        if self.category in ("fundamental_law", "math_operation") and self.dim is not None:
            raise ValueError(f"{self.name}: category {self.category} must not carry exponents")


@dataclass(frozen=True)
class TerminationVerdict:
    """Outcome of the termination test for one concept.

    kind is one of "dim" (dimensional grounding), "axiom" (a fundamental
    law), "primitive" (a structural terminal: type, predicate, constraint,
    or operation), or "nonterminal".  ``reason`` names the matched table row.
    """

    kind: str
    concept: str
    reason: str
    dim: Optional[DimExpr] = None

    def __post_init__(self) -> None:
        if self.kind not in ("dim", "axiom", "primitive", "nonterminal"):
            raise ValueError(f"bad verdict kind {self.kind!r}")
        if self.kind == "dim" and self.dim is None:
            raise ValueError("dim verdict requires a DimExpr")

    @property
    def terminal(self) -> bool:
        return self.kind != "nonterminal"


# category -> verdict kind
_VERDICT_KIND = {
    "primitive": "primitive",
    "atomic_parameter": "dim",
    "standard_predicate": "primitive",
    "quantum_relativistic_parameter": "dim",
    "numeric_constraint": "primitive",
    "derived_dimension": "dim",
    "dimensionless_group": "dim",
    "fundamental_law": "axiom",
    "base_abstract_type": "primitive",
    "math_operation": "primitive",
}


class ConceptTable:
    """Immutable lookup over concept entries, keyed by (normalized name, domain)."""

    def __init__(self, entries) -> None:
        self.entries: Tuple[ConceptEntry, ...] = tuple(entries)
        self._by_key: Dict[Tuple[str, str], ConceptEntry] = {}
        for entry in self.entries:
            key = (entry.name.lower(), entry.domain)
            if key in self._by_key:
                raise ValueError(f"duplicate concept {entry.name} in {entry.domain}")
            self._by_key[key] = entry

    def lookup(self, name: str, domain: str) -> Optional[ConceptEntry]:
        return self._by_key.get((name.strip().lower(), domain))

    def classify(
        self, name: str, domain: str, construction_described: bool = False
    ) -> TerminationVerdict:
        """Table-driven termination verdict for a concept.

        Conditional atomics (Resistance, Inductance, Capacitance) are
        terminal unless a construction for them is described; numeric
        constraint strings (``SideCount=6``, ``VertexCountEq6``) terminate as
        a whole.  Anything not matched is NonTerminal.
        """
        if domain not in ("math", "physics"):
            raise UnknownDomain(domain)
        name = name.strip()
        entry = self.lookup(name, domain)
        if entry is None and _looks_like_numeric_constraint(name):
            return TerminationVerdict("primitive", name, "numeric_constraint")
        if entry is None:
            return TerminationVerdict("nonterminal", name, "not tabled")
        if entry.category == "conditional_atomic":
            if construction_described:
                return TerminationVerdict(
                    "nonterminal", name, "conditional_atomic with construction described"
                )
            return TerminationVerdict("dim", name, "conditional_atomic", entry.dim)
        kind = _VERDICT_KIND[entry.category]
        return TerminationVerdict(kind, name, entry.category, entry.dim)

    def dim_of(self, name: str) -> Optional[DimExpr]:
        """Exponent vector for a tabled quantity; None when unknown."""
        for domain in ("physics", "math"):
            entry = self.lookup(name, domain)
            if entry is not None and entry.dim is not None:
                return entry.dim
        return None


def _looks_like_numeric_constraint(name: str) -> bool:
    import re

    return bool(re.search(r"=\s*-?\d", name) or re.search(r"Eq\d+$", name))


def _parse_exponents(text: str) -> DimExpr:
    parts = text.split()
    if len(parts) != len(BASE_DIMENSIONS):
        raise ValueError(f"expected {len(BASE_DIMENSIONS)} exponents, got {text!r}")
    return DimExpr(tuple(Fraction(p) for p in parts))


def parse_concept_table(text: str) -> ConceptTable:
    """One entry per line: ``name | domain | category [| M L T Q Th]``."""
    entries = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split("|")]
        if len(fields) not in (3, 4):
            raise ValueError(f"line {line_no}: expected 3 or 4 fields")
        name, domain, category = fields[:3]
        dim = None
        if len(fields) == 4 and fields[3]:
            dim = _parse_exponents(fields[3])
        entries.append(ConceptEntry(name, domain, category, dim))
    return ConceptTable(entries)


_DEFAULT_TABLE: Optional[ConceptTable] = None


def load_default_table() -> ConceptTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        text = resources.files("geoground.data").joinpath("concepts.txt").read_text("utf-8")
        _DEFAULT_TABLE = parse_concept_table(text)
    return _DEFAULT_TABLE


def classify(
    name: str, domain: str, construction_described: bool = False
) -> TerminationVerdict:
    return load_default_table().classify(name, domain, construction_described)


def dim_of(name: str) -> Optional[DimExpr]:
    return load_default_table().dim_of(name)
