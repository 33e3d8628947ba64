"""Knowledge-base files, query reports and their JSON/text encodings.

KB file grammar (statements end with ``.``, ``#`` starts a comment)::

    vars res, h.
    concepts strep, bac.          # optional, names are also inferred
    roles sf, suc.                # optional
    gci some sf.bac sqsubseteq some suc.ab : !res & !h.
    gci strep sqsubseteq bac.     # context defaults to true
    prob (res) = 0.05.
    prob (res) in [0.01, 0.1].
    cond (res | h) = 0.8.
    cond (res | h) in [0.7, 0.9].
    linear 0.25*P(bird & flies) - P(bird & !flies) >= 0.

In ``cond (psi | phi)`` the first top-level ``|`` separates consequent and
antecedent, so a disjunctive consequent must be parenthesized.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

from ._lexer import TokenStream
from .alc import GCI, KEYWORDS as CONCEPT_KEYWORDS, Concept, parse_concept_tokens, render_concept
from .context import TRUE, ContextSignature, Formula, parse_formula, render, render_operand
from .engine import AlcpKnowledgeBase, BeliefResult, LabeledGci, Reasoner
from .errors import BoundsError, ParseError
from .maxent import ConditionalConstraint, LinearConstraint, point_constraint

# -- documents --------------------------------------------------------------------


@dataclass(frozen=True)
class Position:
    line: int
    column: int


def _pos():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class VarsDecl:
    names: tuple[str, ...]
    pos: Optional[Position] = _pos()


@dataclass(frozen=True)
class NamesDecl:
    kind: str  # "concepts" or "roles"
    names: tuple[str, ...]
    pos: Optional[Position] = _pos()


@dataclass(frozen=True)
class GciStmt:
    lhs: Concept
    rhs: Concept
    context: Formula = TRUE
    pos: Optional[Position] = _pos()


@dataclass(frozen=True)
class ProbStmt:
    formula: Formula
    lower: float
    upper: float
    pos: Optional[Position] = _pos()


@dataclass(frozen=True)
class CondStmt:
    consequent: Formula
    antecedent: Formula
    lower: float
    upper: float
    pos: Optional[Position] = _pos()


@dataclass(frozen=True)
class LinearStmt:
    c0: float
    terms: tuple[tuple[float, Formula], ...]
    pos: Optional[Position] = _pos()


Statement = Union[VarsDecl, NamesDecl, GciStmt, ProbStmt, CondStmt, LinearStmt]


@dataclass(frozen=True)
class KbDocument:
    statements: tuple[Statement, ...]

    @property
    def signature(self) -> ContextSignature:
        for st in self.statements:
            if isinstance(st, VarsDecl):
                return ContextSignature(st.names)
        raise ParseError("missing 'vars' declaration")

    def to_kb(self) -> AlcpKnowledgeBase:
        sig = self.signature
        constraints, tbox = [], []
        concepts, roles = set(), set()
        for st in self.statements:
            if isinstance(st, NamesDecl):
                (concepts if st.kind == "concepts" else roles).update(st.names)
            elif isinstance(st, GciStmt):
                tbox.append(LabeledGci(GCI(st.lhs, st.rhs), st.context))
            elif isinstance(st, ProbStmt):
                constraints.append(point_constraint(st.formula, st.lower, st.upper))
            elif isinstance(st, CondStmt):
                constraints.append(ConditionalConstraint(st.consequent, st.antecedent, st.lower, st.upper))
            elif isinstance(st, LinearStmt):
                constraints.append(LinearConstraint(st.c0, st.terms))
        try:
            return AlcpKnowledgeBase.build(sig, constraints, tbox, concepts, roles)
        except ValueError as exc:
            raise ParseError(str(exc)) from exc


class _KbParser:
    def __init__(self, text):
        self.ts = TokenStream(text)
        self.sig: Optional[ContextSignature] = None

    def parse(self) -> KbDocument:
        ts = self.ts
        statements = []
        while ts.peek().kind != "eof":
            tok = ts.peek()
            pos = Position(tok.line, tok.column)
            if tok.kind != "ident":
                ts.fail("expected a statement keyword")
            handler = getattr(self, f"_st_{tok.value}", None)
            if handler is None:
                ts.fail("expected vars, concepts, roles, gci, prob, cond or linear")
            if tok.value in ("gci", "prob", "cond", "linear") and self.sig is None:
                raise ParseError("'vars' must be declared before this statement", tok.line, tok.column)
            ts.next()
            statements.append(handler(pos))
            ts.expect(".")
        if self.sig is None:
            raise ParseError("missing 'vars' declaration")
        return KbDocument(tuple(statements))

    def _names(self):
        names = [self.ts.expect_ident().value]
        while self.ts.accept(","):
            names.append(self.ts.expect_ident().value)
        return tuple(names)

    def _st_vars(self, pos):
        if self.sig is not None:
            raise ParseError("duplicate 'vars' declaration", pos.line, pos.column)
        names = self._names()
        try:
            self.sig = ContextSignature(names)
        except ValueError as exc:
            raise ParseError(str(exc), pos.line, pos.column) from exc
        return VarsDecl(names, pos)

    def _st_concepts(self, pos):
        return NamesDecl("concepts", self._checked_names(pos), pos)

    def _st_roles(self, pos):
        return NamesDecl("roles", self._checked_names(pos), pos)

    def _checked_names(self, pos):
        names = self._names()
        bad = [n for n in names if n in CONCEPT_KEYWORDS]
        if bad:
            raise ParseError(f"{bad[0]!r} is a reserved word", pos.line, pos.column)
        return names

    def _st_gci(self, pos):
        lhs = parse_concept_tokens(self.ts)
        self.ts.expect("sqsubseteq")
        rhs = parse_concept_tokens(self.ts)
        ctx = TRUE
        if self.ts.accept(":"):
            ctx = parse_formula(self.ts, self.sig)
        return GciStmt(lhs, rhs, ctx, pos)

    def _st_prob(self, pos):
        self.ts.expect("(")
        f = parse_formula(self.ts, self.sig)
        self.ts.expect(")")
        lo, hi = self._bounds()
        return ProbStmt(f, lo, hi, pos)

    def _st_cond(self, pos):
        self.ts.expect("(")
        psi = parse_formula(self.ts, self.sig, level=2)
        self.ts.expect("|")
        phi = parse_formula(self.ts, self.sig)
        self.ts.expect(")")
        lo, hi = self._bounds()
        return CondStmt(psi, phi, lo, hi, pos)

    def _number(self):
        sign = -1.0 if self.ts.accept("-") else 1.0
        tok = self.ts.peek()
        if tok.kind != "number":
            self.ts.fail("expected a number")
        self.ts.next()
        return sign * float(tok.value)

    def _bounds(self):
        tok = self.ts.peek()
        if self.ts.accept("="):
            lo = hi = self._number()
        elif self.ts.accept("in"):
            self.ts.expect("[")
            lo = self._number()
            self.ts.expect(",")
            hi = self._number()
            self.ts.expect("]")
        else:
            self.ts.fail("expected '=' or 'in'")
        if not (0.0 <= lo <= 1.0 and 0.0 <= hi <= 1.0):
            raise BoundsError(f"probability bounds [{lo}, {hi}] outside [0, 1]", tok.line, tok.column)
        if lo > hi:
            raise BoundsError(f"lower bound {lo} exceeds upper bound {hi}", tok.line, tok.column)
        return lo, hi

    def _st_linear(self, pos):
        ts = self.ts
        c0 = 0.0
        terms = []
        first = True
        while True:
            if ts.accept("+"):
                sign = 1.0
            elif ts.accept("-"):
                sign = -1.0
            elif first:
                sign = 1.0
            else:
                break
            first = False
            coef = 1.0
            if ts.peek().kind == "number":
                coef = float(ts.next().value)
                if not ts.accept("*"):
                    c0 += sign * coef
                    continue
            if not (ts.at("P") and ts.at("(", 1)):
                ts.fail("expected P(<context>)")
            ts.next()
            ts.expect("(")
            f = parse_formula(ts, self.sig)
            ts.expect(")")
            terms.append((sign * coef, f))
        tok = ts.peek()
        if ts.accept(">="):
            direction = 1.0
        elif ts.accept("<="):
            direction = -1.0
        else:
            ts.fail("expected '>=' or '<='")
        rhs = self._number()
        c0 = direction * (c0 - rhs)
        terms = tuple((direction * c, f) for c, f in terms)
        if not terms and c0 == 0:
            raise ParseError("constraint has neither terms nor a constant", tok.line, tok.column)
        return LinearStmt(c0 if c0 != 0 else 0.0, terms, pos)


def parse_document(text: str) -> KbDocument:
    return _KbParser(text).parse()


def parse_kb(text: str) -> AlcpKnowledgeBase:
    return parse_document(text).to_kb()


def load_kb(path) -> AlcpKnowledgeBase:
    with open(path, encoding="utf-8") as fh:
        return parse_kb(fh.read())


def _fmt_bounds(lo, hi):
    return f"= {lo!r}" if lo == hi else f"in [{lo!r}, {hi!r}]"


def render_statement(st: Statement) -> str:
    if isinstance(st, VarsDecl):
        return f"vars {', '.join(st.names)}."
    if isinstance(st, NamesDecl):
        return f"{st.kind} {', '.join(st.names)}."
    if isinstance(st, GciStmt):
        return f"gci {render_concept(st.lhs)} sqsubseteq {render_concept(st.rhs)} : {render(st.context)}."
    if isinstance(st, ProbStmt):
        return f"prob ({render(st.formula)}) {_fmt_bounds(st.lower, st.upper)}."
    if isinstance(st, CondStmt):
        return f"cond ({render_operand(st.consequent)} | {render(st.antecedent)}) {_fmt_bounds(st.lower, st.upper)}."
    if isinstance(st, LinearStmt):
        parts = []
        if st.c0 != 0 or not st.terms:
            parts.append(repr(st.c0))
        for coef, f in st.terms:
            op = "-" if coef < 0 else "+"
            body = f"{abs(coef)!r}*P({render(f)})"
            parts.append(f"{op} {body}" if parts or coef < 0 else body)
        return f"linear {' '.join(parts)} >= 0."
    raise TypeError(f"not a statement: {st!r}")


def render_document(doc: KbDocument) -> str:
    return "\n".join(render_statement(st) for st in doc.statements) + "\n"


def document_from_kb(kb: AlcpKnowledgeBase) -> KbDocument:
    """Document for a KB; constraints come out in their lowered linear form."""
    sts: list[Statement] = [VarsDecl(kb.context_signature.variables)]
    if kb.concept_names:
        sts.append(NamesDecl("concepts", tuple(sorted(kb.concept_names))))
    if kb.role_names:
        sts.append(NamesDecl("roles", tuple(sorted(kb.role_names))))
    sts.extend(GciStmt(lg.gci.lhs, lg.gci.rhs, lg.context) for lg in kb.labeled_tbox)
    sts.extend(LinearStmt(c.c0, c.terms) for c in kb.constraints)
    return KbDocument(tuple(sts))


# -- reports -------------------------------------------------------------------------


@dataclass
class QueryReport:
    lhs: str
    rhs: str
    given: str
    mode: str
    p_context: float
    sceptical: float
    credulous: float
    subsumption_worlds: list[int]
    non_subsumption_worlds: list[int]
    me_consistent: bool = True
    trace: Optional[list[dict]] = None
    snapshots: Optional[list[dict]] = None

    @classmethod
    def from_result(cls, r: BeliefResult, lhs, rhs, given, mode, trace=False, snapshots=None) -> QueryReport:
        return cls(
            lhs=lhs if isinstance(lhs, str) else render_concept(lhs),
            rhs=rhs if isinstance(rhs, str) else render_concept(rhs),
            given=given if isinstance(given, str) else render(given),
            mode=mode,
            p_context=r.p_context,
            sceptical=r.interval.lower,
            credulous=r.interval.upper,
            subsumption_worlds=r.sub_worlds.indices(),
            non_subsumption_worlds=r.nonsub_worlds.indices(),
            trace=[
                {"index": w.index, "probability": w.probability, "classification": w.classification}
                for w in r.trace
            ]
            if trace
            else None,
            snapshots=[
                {"processed": s.processed, "lower": s.outer.lower, "upper": s.outer.upper} for s in snapshots
            ]
            if snapshots is not None
            else None,
        )

    def to_json_obj(self) -> dict:
        obj = {
            "query": {"lhs": self.lhs, "rhs": self.rhs, "given": self.given, "mode": self.mode},
            "p_context": self.p_context,
            "sceptical": self.sceptical,
            "credulous": self.credulous,
            "consequence_worlds": {
                "subsumption": list(self.subsumption_worlds),
                "non_subsumption": list(self.non_subsumption_worlds),
            },
            "me_consistent": self.me_consistent,
        }
        if self.trace:
            obj["trace"] = self.trace
        if self.snapshots:
            obj["snapshots"] = self.snapshots
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> QueryReport:
        q = obj["query"]
        return cls(
            lhs=q["lhs"],
            rhs=q["rhs"],
            given=q["given"],
            mode=q["mode"],
            p_context=float(obj["p_context"]),
            sceptical=float(obj["sceptical"]),
            credulous=float(obj["credulous"]),
            subsumption_worlds=list(obj["consequence_worlds"]["subsumption"]),
            non_subsumption_worlds=list(obj["consequence_worlds"]["non_subsumption"]),
            me_consistent=obj["me_consistent"],
            trace=obj.get("trace"),
            snapshots=obj.get("snapshots"),
        )


def format_number(x: float) -> str:
    """Exact decimal form of a double: 17 significant digits, always with a fraction or exponent."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot encode {x!r} in JSON")
    s = format(x, ".17g")
    if not any(ch in s for ch in ".eE"):
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON with full-precision floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return format_number(obj)
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, int) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(str(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def emit_report(r: QueryReport, format: str = "json") -> bytes:
    if format == "json":
        return (dumps(r.to_json_obj()) + "\n").encode()
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    lines = [
        f"query:            {r.lhs} sqsubseteq {r.rhs} | {r.given}   (mode {r.mode})",
        f"P(context):       {r.p_context!r}",
        f"sceptical:        {r.sceptical!r}",
        f"credulous:        {r.credulous!r}",
        f"subsumption:      worlds {r.subsumption_worlds}",
        f"non-subsumption:  worlds {r.non_subsumption_worlds}",
        f"ME-consistent:    {'yes' if r.me_consistent else 'no'}",
    ]
    if r.trace:
        lines.append("trace:")
        lines.extend(f"  world {t['index']:>4}  P={t['probability']!r:<24} {t['classification']}" for t in r.trace)
    if r.snapshots:
        lines.append("anytime snapshots:")
        lines.extend(f"  {s['processed']:>4} worlds  [{s['lower']!r}, {s['upper']!r}]" for s in r.snapshots)
    return ("\n".join(lines) + "\n").encode()


def parse_report(data: Union[bytes, str]) -> QueryReport:
    if isinstance(data, bytes):
        data = data.decode()
    return QueryReport.from_json_obj(json.loads(data))


# -- other command outputs ------------------------------------------------------------


def _world_obj(sig, index):
    return {"index": index, "assignment": {v: bool(index >> i & 1) for i, v in enumerate(sig.variables)}}


def check_report(reasoner: Reasoner) -> dict:
    """Feasibility of R and ME-consistency; raises InfeasibleConstraintsError when R has no model."""
    c = reasoner.me_consistent()
    sig = reasoner.kb.context_signature
    return {
        "feasible": True,
        "me_consistent": c.consistent,
        "witness": None if c.witness is None else _world_obj(sig, c.witness.index),
    }


def me_report(reasoner: Reasoner) -> dict:
    sol = reasoner.me
    sig = reasoner.kb.context_signature
    worlds = []
    for i, p in enumerate(sol.distribution.probs):
        obj = _world_obj(sig, i)
        obj["probability"] = float(p)
        worlds.append(obj)
    return {
        "variables": list(sig.variables),
        "worlds": worlds,
        "entropy": sol.entropy,
        "iterations": sol.iterations,
        "max_constraint_residual": sol.max_constraint_residual,
    }


def worlds_report(reasoner: Reasoner) -> dict:
    sig = reasoner.kb.context_signature
    worlds = []
    for i in range(sig.n_worlds):
        obj = _world_obj(sig, i)
        obj["tbox"] = [str(ax) for ax in reasoner.tbox_of(i)]
        worlds.append(obj)
    return {"variables": list(sig.variables), "worlds": worlds}


_NUM = {"type": "number"}
_WORLD = {
    "type": "object",
    "required": ["index", "assignment"],
    "properties": {
        "index": {"type": "integer", "minimum": 0},
        "assignment": {"type": "object", "additionalProperties": {"type": "boolean"}},
    },
}

QUERY_SCHEMA = {
    "type": "object",
    "required": ["query", "p_context", "sceptical", "credulous", "consequence_worlds", "me_consistent"],
    "additionalProperties": False,
    "properties": {
        "query": {
            "type": "object",
            "required": ["lhs", "rhs", "given", "mode"],
            "additionalProperties": False,
            "properties": {
                "lhs": {"type": "string"},
                "rhs": {"type": "string"},
                "given": {"type": "string"},
                "mode": {"enum": ["disjoint", "strict"]},
            },
        },
        "p_context": _NUM,
        "sceptical": _NUM,
        "credulous": _NUM,
        "consequence_worlds": {
            "type": "object",
            "required": ["subsumption", "non_subsumption"],
            "additionalProperties": False,
            "properties": {
                "subsumption": {"type": "array", "items": {"type": "integer"}},
                "non_subsumption": {"type": "array", "items": {"type": "integer"}},
            },
        },
        "me_consistent": {"type": "boolean"},
        "trace": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "probability", "classification"],
                "properties": {
                    "index": {"type": "integer"},
                    "probability": _NUM,
                    "classification": {"enum": ["subsumption", "non_subsumption", "neither", "outside_context"]},
                },
            },
        },
        "snapshots": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["processed", "lower", "upper"],
                "properties": {"processed": {"type": "integer"}, "lower": _NUM, "upper": _NUM},
            },
        },
    },
}

CHECK_SCHEMA = {
    "type": "object",
    "required": ["feasible", "me_consistent", "witness"],
    "properties": {
        "feasible": {"type": "boolean"},
        "me_consistent": {"type": ["boolean", "null"]},
        "witness": {"oneOf": [{"type": "null"}, _WORLD]},
    },
}

ME_SCHEMA = {
    "type": "object",
    "required": ["variables", "worlds", "entropy", "iterations", "max_constraint_residual"],
    "properties": {
        "variables": {"type": "array", "items": {"type": "string"}},
        "worlds": {
            "type": "array",
            "items": {**_WORLD, "required": ["index", "assignment", "probability"]},
        },
        "entropy": _NUM,
        "iterations": {"type": "integer"},
        "max_constraint_residual": _NUM,
    },
}

WORLDS_SCHEMA = {
    "type": "object",
    "required": ["variables", "worlds"],
    "properties": {
        "variables": {"type": "array", "items": {"type": "string"}},
        "worlds": {
            "type": "array",
            "items": {
                **_WORLD,
                "required": ["index", "assignment", "tbox"],
            },
        },
    },
}
