"""geoground: deterministic synthetic geometry instances and recursive scene grounding.

The package has two halves that share a geometric kernel:

* construction sampling -> deduction closure -> premise extraction ->
  numerical verification (``construct``, ``deduce``, ``instance``);
* scene parsing -> recursive decomposition with dimensional/axiomatic
  termination -> retrieval and composition of formal statements
  (``scene``, ``ground``, ``dimension``, ``index``).

Everything is reproducible from a single integer seed.
"""

from geoground.geom import Fact, Realization, Tolerance, eval_fact
from geoground.construct import ConstructionProgram, Limits, parse_program, sample_program
from geoground.deduce import Rule, closure, load_default_rules
from geoground.instance import Instance, generate

__all__ = [
    "Fact",
    "Realization",
    "Tolerance",
    "eval_fact",
    "ConstructionProgram",
    "Limits",
    "parse_program",
    "sample_program",
    "Rule",
    "closure",
    "load_default_rules",
    "Instance",
    "generate",
]

__version__ = "0.1.0"
