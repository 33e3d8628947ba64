"""Propositional context language: formulas, valuations and world sets.

Worlds (valuations) of a signature ``(x0, x1, ..., x_{n-1})`` are identified
with integers in ``[0, 2**n)``; variable ``x_i`` is bit ``i`` of the index, so
the first-declared variable is the least-significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Mapping

import numpy as np

from ._lexer import TokenStream
from .errors import ParseError, SignatureTooLargeError, UndeclaredVariableError

DEFAULT_MAX_VARIABLES = 24

KEYWORDS = frozenset({"true", "false"})


@dataclass(frozen=True)
class ContextSignature:
    variables: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        seen = set()
        for name in self.variables:
            if not isinstance(name, str) or not name:
                raise ValueError(f"invalid variable name {name!r}")
            if name in KEYWORDS:
                raise ValueError(f"{name!r} is reserved and cannot name a variable")
            if name in seen:
                raise ValueError(f"duplicate variable {name!r}")
            seen.add(name)

    def __len__(self):
        return len(self.variables)

    def __contains__(self, name):
        return name in self.variables

    def __iter__(self):
        return iter(self.variables)

    @property
    def n_worlds(self) -> int:
        return 1 << len(self.variables)

    def index_of(self, name: str) -> int:
        return self.variables.index(name)

    def extend(self, *names: str) -> ContextSignature:
        """Signature with ``names`` appended; existing bit positions are kept."""
        return ContextSignature(self.variables + tuple(n for n in names if n not in self))


def check_size(sig: ContextSignature, limit: int = DEFAULT_MAX_VARIABLES):
    if len(sig) > limit:
        raise SignatureTooLargeError(len(sig), limit)


# -- formulas ---------------------------------------------------------------


class Formula:
    """Base class of context formula nodes; supports ``&``, ``|`` and ``~``."""

    __slots__ = ()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)

    def implies(self, other):
        return Implies(self, other)

    def __str__(self):
        return render(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class Var(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


TRUE = Const(True)
FALSE = Const(False)


def conjunction(*formulas: Formula) -> Formula:
    if not formulas:
        return TRUE
    result = formulas[0]
    for f in formulas[1:]:
        result = And(result, f)
    return result


def variables_of(f: Formula) -> set[str]:
    if isinstance(f, Var):
        return {f.name}
    if isinstance(f, Const):
        return set()
    if isinstance(f, Not):
        return variables_of(f.arg)
    return variables_of(f.left) | variables_of(f.right)


# -- valuations and world sets ----------------------------------------------


@dataclass(frozen=True)
class Valuation:
    signature: ContextSignature
    index: int

    def __post_init__(self):
        if not 0 <= self.index < self.signature.n_worlds:
            raise ValueError(f"world index {self.index} out of range for {len(self.signature)} variables")

    @classmethod
    def from_assignment(cls, sig: ContextSignature, assignment: Mapping[str, bool]) -> Valuation:
        index = 0
        for i, name in enumerate(sig.variables):
            if assignment[name]:
                index |= 1 << i
        return cls(sig, index)

    @property
    def assignment(self) -> tuple[bool, ...]:
        return tuple(bool(self.index >> i & 1) for i in range(len(self.signature)))

    def as_dict(self) -> dict[str, bool]:
        return dict(zip(self.signature.variables, self.assignment))

    def __getitem__(self, name: str) -> bool:
        return bool(self.index >> self.signature.index_of(name) & 1)

    def __str__(self):
        if not self.signature.variables:
            return "(empty valuation)"
        return ", ".join(f"{k}={'true' if v else 'false'}" for k, v in self.as_dict().items())


@lru_cache(maxsize=32)
def _bit_columns(n: int) -> tuple[np.ndarray, ...]:
    idx = np.arange(1 << n, dtype=np.int64)
    cols = []
    for i in range(n):
        col = ((idx >> i) & 1).astype(bool)
        col.setflags(write=False)
        cols.append(col)
    return tuple(cols)


class WorldSet:
    """Immutable set of world indices over one signature, stored as a bitmask."""

    __slots__ = ("signature", "mask")

    def __init__(self, signature: ContextSignature, mask: np.ndarray):
        mask = np.array(mask, dtype=bool, copy=True)
        if mask.shape != (signature.n_worlds,):
            raise ValueError("mask length must equal the number of worlds")
        mask.setflags(write=False)
        self.signature = signature
        self.mask = mask

    @classmethod
    def from_indices(cls, sig, indices) -> WorldSet:
        mask = np.zeros(sig.n_worlds, dtype=bool)
        mask[list(indices)] = True
        return cls(sig, mask)

    @classmethod
    def full(cls, sig) -> WorldSet:
        return cls(sig, np.ones(sig.n_worlds, dtype=bool))

    @classmethod
    def empty(cls, sig) -> WorldSet:
        return cls(sig, np.zeros(sig.n_worlds, dtype=bool))

    def indices(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.mask)]

    def __iter__(self):
        return iter(self.indices())

    def __len__(self):
        return int(self.mask.sum())

    def __contains__(self, item):
        if isinstance(item, Valuation):
            item = item.index
        return bool(self.mask[item])

    def _check(self, other):
        if other.signature != self.signature:
            raise ValueError("world sets over different signatures")

    def __and__(self, other):
        self._check(other)
        return WorldSet(self.signature, self.mask & other.mask)

    def __or__(self, other):
        self._check(other)
        return WorldSet(self.signature, self.mask | other.mask)

    def __sub__(self, other):
        self._check(other)
        return WorldSet(self.signature, self.mask & ~other.mask)

    def __invert__(self):
        return WorldSet(self.signature, ~self.mask)

    def __eq__(self, other):
        if not isinstance(other, WorldSet):
            return NotImplemented
        return self.signature == other.signature and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash((self.signature, self.mask.tobytes()))

    def __repr__(self):
        return f"WorldSet({self.indices()})"


# -- semantics ---------------------------------------------------------------


def evaluate(f: Formula, v: Valuation) -> bool:
    if isinstance(f, Var):
        return v[f.name]
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Not):
        return not evaluate(f.arg, v)
    if isinstance(f, And):
        return evaluate(f.left, v) and evaluate(f.right, v)
    if isinstance(f, Or):
        return evaluate(f.left, v) or evaluate(f.right, v)
    if isinstance(f, Implies):
        return (not evaluate(f.left, v)) or evaluate(f.right, v)
    raise TypeError(f"not a context formula: {f!r}")


def _truth_vector(f, sig, cols):
    if isinstance(f, Var):
        return cols[sig.index_of(f.name)]
    if isinstance(f, Const):
        return np.full(sig.n_worlds, f.value, dtype=bool)
    if isinstance(f, Not):
        return ~_truth_vector(f.arg, sig, cols)
    left = _truth_vector(f.left, sig, cols)
    right = _truth_vector(f.right, sig, cols)
    if isinstance(f, And):
        return left & right
    if isinstance(f, Or):
        return left | right
    if isinstance(f, Implies):
        return ~left | right
    raise TypeError(f"not a context formula: {f!r}")


def worlds_of(f: Formula, sig: ContextSignature, limit: int = DEFAULT_MAX_VARIABLES) -> WorldSet:
    """All worlds of ``sig`` satisfying ``f``."""
    check_size(sig, limit)
    missing = variables_of(f) - set(sig.variables)
    if missing:
        raise UndeclaredVariableError(sorted(missing)[0])
    return WorldSet(sig, _truth_vector(f, sig, _bit_columns(len(sig))))


def enumerate_valuations(sig: ContextSignature, limit: int = DEFAULT_MAX_VARIABLES) -> Iterator[Valuation]:
    """Valuations of ``sig`` in ascending index order.

    Raises SignatureTooLargeError immediately (not on first iteration).
    """
    check_size(sig, limit)
    return (Valuation(sig, i) for i in range(sig.n_worlds))


# -- surface syntax ------------------------------------------------------------

_PREC = {Implies: 0, Or: 1, And: 2, Not: 3, Var: 4, Const: 4}


def render(f: Formula) -> str:
    """Surface syntax with the minimal parentheses that parse back to ``f``."""

    def wrap(g, min_prec):
        s = render(g)
        return f"({s})" if _PREC[type(g)] < min_prec else s

    if isinstance(f, Var):
        return f.name
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        return "!" + wrap(f.arg, 3)
    if isinstance(f, And):
        return f"{wrap(f.left, 2)} & {wrap(f.right, 3)}"
    if isinstance(f, Or):
        return f"{wrap(f.left, 1)} | {wrap(f.right, 2)}"
    if isinstance(f, Implies):
        return f"{wrap(f.left, 1)} -> {wrap(f.right, 0)}"
    raise TypeError(f"not a context formula: {f!r}")


def render_operand(f: Formula) -> str:
    """Render ``f`` so that it contains no top-level ``|`` or ``->``."""
    s = render(f)
    return f"({s})" if _PREC[type(f)] < 2 else s


def parse_formula(ts: TokenStream, sig: ContextSignature, level: int = 0) -> Formula:
    """Parse a formula from a token stream.

    ``level`` is the loosest operator accepted at top level: 0 for a full
    formula, 2 to stop at a top-level ``|`` (used for the consequent of
    ``cond (psi | phi)``).
    """
    if level <= 0:
        left = parse_formula(ts, sig, 1)
        if ts.accept("->"):
            return Implies(left, parse_formula(ts, sig, 0))
        return left
    if level == 1:
        result = parse_formula(ts, sig, 2)
        while ts.accept("|"):
            result = Or(result, parse_formula(ts, sig, 2))
        return result
    if level == 2:
        result = parse_formula(ts, sig, 3)
        while ts.accept("&"):
            result = And(result, parse_formula(ts, sig, 3))
        return result
    if ts.accept("!"):
        return Not(parse_formula(ts, sig, 3))
    if ts.accept("("):
        inner = parse_formula(ts, sig, 0)
        ts.expect(")")
        return inner
    tok = ts.peek()
    if tok.kind != "ident":
        ts.fail("expected a context formula")
    ts.next()
    if tok.value == "true":
        return TRUE
    if tok.value == "false":
        return FALSE
    if tok.value not in sig:
        raise UndeclaredVariableError(tok.value, tok.line, tok.column)
    return Var(tok.value)


def parse_context(text: str, sig: ContextSignature) -> Formula:
    ts = TokenStream(text)
    f = parse_formula(ts, sig)
    if ts.peek().kind != "eof":
        ts.fail("unexpected trailing input")
    return f


__all__ = [
    "DEFAULT_MAX_VARIABLES",
    "ContextSignature",
    "Formula",
    "Const",
    "Var",
    "Not",
    "And",
    "Or",
    "Implies",
    "TRUE",
    "FALSE",
    "Valuation",
    "WorldSet",
    "conjunction",
    "variables_of",
    "evaluate",
    "worlds_of",
    "enumerate_valuations",
    "render",
    "parse_context",
    "ParseError",
]
