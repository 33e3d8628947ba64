"""Maximum-entropy reasoning for ALC with propositional context labels.

Typical use::

    from alcp import load_kb, Reasoner, parse_concept

    kb = load_kb("kbs/antibiotics.alcp")
    r = Reasoner(kb).belief_interval(parse_concept("some sf.strep"), parse_concept("some suc.ab"))
    r.interval  # BeliefInterval(lower=0.9405..., upper=0.95)
"""

from .alc import GCI, TBox, is_satisfiable, nnf, parse_concept, strongly_not_subsumes, subsumes, tbox_consistent
from .context import ContextSignature, Valuation, WorldSet, evaluate, parse_context, worlds_of
from .engine import (
    AlcpKnowledgeBase,
    BeliefInterval,
    BeliefResult,
    LabeledGci,
    Reasoner,
    Settings,
    belief_interval,
    belief_stream,
    consequence_worlds,
    me_consistent,
    restrict_tbox,
)
from .errors import AlcpError
from .kbio import load_kb, parse_kb
from .maxent import ConditionalConstraint, ConstraintSet, Distribution, LinearConstraint, solve_me

__all__ = [
    "GCI",
    "TBox",
    "is_satisfiable",
    "nnf",
    "parse_concept",
    "strongly_not_subsumes",
    "subsumes",
    "tbox_consistent",
    "ContextSignature",
    "Valuation",
    "WorldSet",
    "evaluate",
    "parse_context",
    "worlds_of",
    "AlcpKnowledgeBase",
    "BeliefInterval",
    "BeliefResult",
    "LabeledGci",
    "Reasoner",
    "Settings",
    "belief_interval",
    "belief_stream",
    "consequence_worlds",
    "me_consistent",
    "restrict_tbox",
    "AlcpError",
    "load_kb",
    "parse_kb",
    "ConditionalConstraint",
    "ConstraintSet",
    "Distribution",
    "LinearConstraint",
    "solve_me",
]

__version__ = "0.1.0"
