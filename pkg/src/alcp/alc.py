"""Classical ALC: concepts, TBoxes and a tableau decision procedure.

The tableau works on concepts in negation normal form.  A general TBox is
internalized into the single concept ``AND over (C => D)`` that every node
label contains.  Nodes are explored depth first as a tree: propositional
rules (conjunction, disjunction by branching) saturate a label, then every
existential restriction spawns a successor carrying its filler, the matching
universal fillers and the TBox concept.  A node whose saturated label is a
subset of an ancestor's label is blocked and needs no successors.  ALC has no
inverse roles, so successors never push constraints back up and each subtree
can be decided independently.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

from ._lexer import TokenStream
from .errors import ResourceLimitError

DEFAULT_NODE_LIMIT = 10**6

KEYWORDS = frozenset({"top", "bot", "not", "and", "or", "some", "all", "sqsubseteq"})


class Concept:
    __slots__ = ()

    def __and__(self, other):
        return Conj(self, other)

    def __or__(self, other):
        return Disj(self, other)

    def __invert__(self):
        return Neg(self)

    def __str__(self):
        return render_concept(self)


@dataclass(frozen=True)
class Top(Concept):
    pass


@dataclass(frozen=True)
class Bottom(Concept):
    pass


@dataclass(frozen=True)
class Name(Concept):
    name: str


@dataclass(frozen=True)
class Neg(Concept):
    arg: Concept


@dataclass(frozen=True)
class Conj(Concept):
    left: Concept
    right: Concept


@dataclass(frozen=True)
class Disj(Concept):
    left: Concept
    right: Concept


@dataclass(frozen=True)
class Exists(Concept):
    role: str
    filler: Concept


@dataclass(frozen=True)
class Forall(Concept):
    role: str
    filler: Concept


TOP = Top()
BOTTOM = Bottom()


@dataclass(frozen=True)
class GCI:
    lhs: Concept
    rhs: Concept

    def __str__(self):
        return f"{render_concept(self.lhs)} sqsubseteq {render_concept(self.rhs)}"


@dataclass(frozen=True)
class TBox:
    """A finite set of GCIs, kept as a duplicate-free tuple in canonical order."""

    axioms: tuple[GCI, ...] = ()

    def __post_init__(self):
        unique = {ax: None for ax in self.axioms}
        object.__setattr__(self, "axioms", tuple(sorted(unique, key=str)))

    @classmethod
    def of(cls, axioms: Iterable[GCI]) -> TBox:
        return cls(tuple(axioms))

    def __iter__(self):
        return iter(self.axioms)

    def __len__(self):
        return len(self.axioms)

    def __contains__(self, ax):
        return ax in self.axioms

    def __or__(self, other: TBox) -> TBox:
        return TBox(self.axioms + tuple(other))

    def add(self, *axioms: GCI) -> TBox:
        return TBox(self.axioms + axioms)


def concept_names(c: Concept) -> set[str]:
    if isinstance(c, Name):
        return {c.name}
    if isinstance(c, (Top, Bottom)):
        return set()
    if isinstance(c, Neg):
        return concept_names(c.arg)
    if isinstance(c, (Exists, Forall)):
        return concept_names(c.filler)
    return concept_names(c.left) | concept_names(c.right)


def role_names(c: Concept) -> set[str]:
    if isinstance(c, (Name, Top, Bottom)):
        return set()
    if isinstance(c, Neg):
        return role_names(c.arg)
    if isinstance(c, (Exists, Forall)):
        return {c.role} | role_names(c.filler)
    return role_names(c.left) | role_names(c.right)


# -- normal forms ------------------------------------------------------------------


def nnf(c: Concept) -> Concept:
    """Negation normal form: negation only in front of concept names."""
    if isinstance(c, (Name, Top, Bottom)):
        return c
    if isinstance(c, Conj):
        return Conj(nnf(c.left), nnf(c.right))
    if isinstance(c, Disj):
        return Disj(nnf(c.left), nnf(c.right))
    if isinstance(c, Exists):
        return Exists(c.role, nnf(c.filler))
    if isinstance(c, Forall):
        return Forall(c.role, nnf(c.filler))
    a = c.arg
    if isinstance(a, Name):
        return c
    if isinstance(a, Top):
        return BOTTOM
    if isinstance(a, Bottom):
        return TOP
    if isinstance(a, Neg):
        return nnf(a.arg)
    if isinstance(a, Conj):
        return Disj(nnf(Neg(a.left)), nnf(Neg(a.right)))
    if isinstance(a, Disj):
        return Conj(nnf(Neg(a.left)), nnf(Neg(a.right)))
    if isinstance(a, Exists):
        return Forall(a.role, nnf(Neg(a.filler)))
    if isinstance(a, Forall):
        return Exists(a.role, nnf(Neg(a.filler)))
    raise TypeError(f"not a concept: {c!r}")


def internalize(t: TBox) -> Concept:
    """The conjunction of ``nnf(not C or D)`` over all ``C sqsubseteq D`` in ``t``."""
    parts = [nnf(Disj(Neg(ax.lhs), ax.rhs)) for ax in t]
    if not parts:
        return TOP
    result = parts[0]
    for part in parts[1:]:
        result = Conj(result, part)
    return result


# -- tableau ------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _key(c: Concept) -> str:
    return render_concept(c)


def _has_clash(label) -> bool:
    if BOTTOM in label:
        return True
    return any(isinstance(c, Neg) and c.arg in label for c in label)


class Tableau:
    """Satisfiability w.r.t. one TBox.

    Instances cache refuted labels, so reuse one per TBox when asking many
    questions against it.
    """

    def __init__(self, tbox: TBox, node_limit: int = DEFAULT_NODE_LIMIT):
        self.tbox = tbox
        self.node_limit = node_limit
        self.nodes = 0
        conjuncts = []
        for ax in tbox:
            conjuncts.extend(_flatten_conj(nnf(Disj(Neg(ax.lhs), ax.rhs))))
        self._tbox_label = frozenset(c for c in conjuncts if c != TOP)
        self._refuted: set[frozenset] = set()

    def satisfiable(self, c: Concept) -> bool:
        start = frozenset({nnf(c)}) | self._tbox_label
        return self._node(start, ())

    def _node(self, label, ancestors) -> bool:
        self.nodes += 1
        if self.nodes > self.node_limit:
            raise ResourceLimitError(f"tableau exceeded {self.node_limit} nodes")
        if label in self._refuted:
            return False
        for complete in self._saturate(set(label)):
            if self._expand_successors(complete, ancestors):
                return True
        self._refuted.add(label)
        return False

    def _saturate(self, label: set) -> Iterator[frozenset]:
        todo = [c for c in label if isinstance(c, Conj)]
        while todo:
            c = todo.pop()
            for part in (c.left, c.right):
                if part not in label:
                    label.add(part)
                    if isinstance(part, Conj):
                        todo.append(part)
        if _has_clash(label):
            return
        open_disj = [
            c for c in label if isinstance(c, Disj) and c.left not in label and c.right not in label
        ]
        if not open_disj:
            yield frozenset(label)
            return
        d = min(open_disj, key=_key)
        for choice in (d.left, d.right):
            yield from self._saturate(label | {choice})

    def _expand_successors(self, label: frozenset, ancestors) -> bool:
        if any(label <= anc for anc in ancestors):
            return True
        path = ancestors + (label,)
        for ex in sorted((c for c in label if isinstance(c, Exists)), key=_key):
            succ = {ex.filler}
            succ.update(c.filler for c in label if isinstance(c, Forall) and c.role == ex.role)
            if not self._node(frozenset(succ) | self._tbox_label, path):
                return False
        return True


def _flatten_conj(c):
    if isinstance(c, Conj):
        return _flatten_conj(c.left) + _flatten_conj(c.right)
    return [c]


def is_satisfiable(c: Concept, t: TBox = TBox(), node_limit: int = DEFAULT_NODE_LIMIT) -> bool:
    return Tableau(t, node_limit).satisfiable(c)


def subsumes(t: TBox, c: Concept, d: Concept, node_limit: int = DEFAULT_NODE_LIMIT) -> bool:
    """``t |= c sqsubseteq d``."""
    return not is_satisfiable(Conj(c, Neg(d)), t, node_limit)


def tbox_consistent(t: TBox, node_limit: int = DEFAULT_NODE_LIMIT) -> bool:
    return is_satisfiable(TOP, t, node_limit)


DISJOINT = "disjoint"
STRICT = "strict"
MODES = (DISJOINT, STRICT)


def strongly_not_subsumes(
    t: TBox, c: Concept, d: Concept, mode: str = DISJOINT, node_limit: int = DEFAULT_NODE_LIMIT
) -> bool:
    """Strong non-subsumption of ``c`` by ``d`` w.r.t. ``t``.

    ``disjoint``: ``t`` entails that ``c`` and ``d`` are disjoint.
    ``strict``: no model of ``t`` has ``c`` included in ``d``, i.e. adding
    ``c sqsubseteq d`` to ``t`` makes it inconsistent.  The all-empty
    interpretation makes this false whenever ``t`` itself is consistent and
    only constrains non-empty extensions.
    """
    if mode == DISJOINT:
        return subsumes(t, c, nnf(Neg(d)), node_limit)
    if mode == STRICT:
        return not tbox_consistent(t.add(GCI(c, d)), node_limit)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


# -- surface syntax --------------------------------------------------------------


def render_concept(c: Concept) -> str:
    if isinstance(c, Name):
        return c.name
    if isinstance(c, Top):
        return "top"
    if isinstance(c, Bottom):
        return "bot"
    if isinstance(c, Neg):
        return "not " + render_concept(c.arg)
    if isinstance(c, Conj):
        return f"({render_concept(c.left)} and {render_concept(c.right)})"
    if isinstance(c, Disj):
        return f"({render_concept(c.left)} or {render_concept(c.right)})"
    if isinstance(c, Exists):
        return f"some {c.role}.{render_concept(c.filler)}"
    if isinstance(c, Forall):
        return f"all {c.role}.{render_concept(c.filler)}"
    raise TypeError(f"not a concept: {c!r}")


def parse_concept_tokens(ts: TokenStream) -> Concept:
    tok = ts.peek()
    if ts.accept("("):
        first = parse_concept_tokens(ts)
        for op, cls in (("and", Conj), ("or", Disj)):
            if ts.at(op):
                result = first
                while ts.accept(op):
                    result = cls(result, parse_concept_tokens(ts))
                break
        else:
            result = first
        ts.expect(")")
        return result
    if tok.kind != "ident":
        ts.fail("expected a concept")
    if tok.value in ("some", "all"):
        ts.next()
        role = ts.expect_ident("role name")
        if role.value in KEYWORDS:
            ts.fail("expected role name", role)
        ts.expect(".")
        filler = parse_concept_tokens(ts)
        return (Exists if tok.value == "some" else Forall)(role.value, filler)
    ts.next()
    if tok.value == "top":
        return TOP
    if tok.value == "bot":
        return BOTTOM
    if tok.value == "not":
        return Neg(parse_concept_tokens(ts))
    if tok.value in KEYWORDS:
        ts.fail("expected a concept", tok)
    return Name(tok.value)


def parse_concept(text: str) -> Concept:
    ts = TokenStream(text)
    c = parse_concept_tokens(ts)
    if ts.peek().kind != "eof":
        ts.fail("unexpected trailing input")
    return c
