"""ALCP knowledge bases and belief intervals for subsumption queries.

For a query ``C sqsubseteq D`` given context ``kappa`` every world ``w`` that
satisfies ``kappa`` is classified against its restricted TBox ``T_w``:
its ME probability counts towards the sceptical bound if ``T_w`` entails
the subsumption, and against the credulous bound otherwise if ``T_w``
entails strong non-subsumption.  Worlds with identical restricted TBoxes
share one tableau.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

import numpy as np

from . import alc
from .alc import DISJOINT, GCI, Concept, TBox, Tableau
from .context import (
    DEFAULT_MAX_VARIABLES,
    TRUE,
    ContextSignature,
    Formula,
    Valuation,
    WorldSet,
    check_size,
    evaluate,
    render,
    variables_of,
    worlds_of,
)
from .errors import MEInconsistentError, UndeclaredVariableError, ZeroProbabilityContextError
from .maxent import (
    DEFAULT_GAP_TOL,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    DEFAULT_ZERO_EPS,
    ConstraintSet,
    MESolution,
    solve_me,
)

SUBSUMPTION = "subsumption"
NON_SUBSUMPTION = "non_subsumption"
NEITHER = "neither"
OUTSIDE = "outside_context"

ORDER_PROB = "prob"
ORDER_INDEX = "index"


@dataclass(frozen=True)
class LabeledGci:
    gci: GCI
    context: Formula = TRUE

    def __str__(self):
        return f"{self.gci} : {render(self.context)}"


@dataclass(frozen=True)
class AlcpKnowledgeBase:
    context_signature: ContextSignature
    constraints: ConstraintSet
    labeled_tbox: tuple[LabeledGci, ...] = ()
    concept_names: frozenset[str] = frozenset()
    role_names: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "labeled_tbox", tuple(self.labeled_tbox))
        if self.constraints.signature != self.context_signature:
            raise ValueError("constraint set and knowledge base use different context signatures")
        cn, rn = set(self.concept_names), set(self.role_names)
        for lg in self.labeled_tbox:
            missing = variables_of(lg.context) - set(self.context_signature.variables)
            if missing:
                raise UndeclaredVariableError(sorted(missing)[0])
            for c in (lg.gci.lhs, lg.gci.rhs):
                cn |= alc.concept_names(c)
                rn |= alc.role_names(c)
        if cn & rn:
            raise ValueError(f"names used both as concept and role: {sorted(cn & rn)}")
        object.__setattr__(self, "concept_names", frozenset(cn))
        object.__setattr__(self, "role_names", frozenset(rn))

    @classmethod
    def build(cls, signature, constraints=(), tbox=(), concept_names=(), role_names=()):
        """Knowledge base from constraint items and ``(GCI, context)`` pairs or LabeledGcis."""
        if not isinstance(signature, ContextSignature):
            signature = ContextSignature(tuple(signature))
        if not isinstance(constraints, ConstraintSet):
            constraints = ConstraintSet.build(signature, constraints)
        labeled = [lg if isinstance(lg, LabeledGci) else LabeledGci(*lg) for lg in tbox]
        return cls(signature, constraints, tuple(labeled), frozenset(concept_names), frozenset(role_names))

    def signature(self) -> set[str]:
        """Symbols actually used: context variables of R and T plus concept and role names of T."""
        names = set(self.constraints.variables())
        for lg in self.labeled_tbox:
            names |= variables_of(lg.context)
            names |= alc.concept_names(lg.gci.lhs) | alc.concept_names(lg.gci.rhs)
            names |= alc.role_names(lg.gci.lhs) | alc.role_names(lg.gci.rhs)
        return names

    def union(self, other: AlcpKnowledgeBase) -> AlcpKnowledgeBase:
        sig = self.context_signature.extend(*other.context_signature.variables)
        return AlcpKnowledgeBase(
            sig,
            ConstraintSet(sig, self.constraints.constraints + other.constraints.constraints),
            self.labeled_tbox + other.labeled_tbox,
            self.concept_names | other.concept_names,
            self.role_names | other.role_names,
        )

    def with_signature(self, signature: ContextSignature) -> AlcpKnowledgeBase:
        return replace(self, context_signature=signature, constraints=self.constraints.with_signature(signature))


def restrict_tbox(k: AlcpKnowledgeBase, v: Valuation) -> TBox:
    """The classical TBox of the axioms whose context ``v`` satisfies."""
    return TBox.of(lg.gci for lg in k.labeled_tbox if evaluate(lg.context, v))


@dataclass(frozen=True)
class Settings:
    tol: float = DEFAULT_TOL
    gap_tol: float = DEFAULT_GAP_TOL
    max_iter: int = DEFAULT_MAX_ITER
    zero_eps: float = DEFAULT_ZERO_EPS
    mode: str = DISJOINT
    node_limit: int = alc.DEFAULT_NODE_LIMIT
    max_variables: int = DEFAULT_MAX_VARIABLES
    threads: int = 1


@dataclass(frozen=True)
class BeliefInterval:
    lower: float
    upper: float

    def __iter__(self):
        return iter((self.lower, self.upper))

    def contains(self, other: BeliefInterval, tol: float = 1e-12) -> bool:
        return self.lower <= other.lower + tol and other.upper <= self.upper + tol

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class WorldRecord:
    index: int
    probability: float
    classification: str


@dataclass(frozen=True)
class BeliefResult:
    interval: BeliefInterval
    p_context: float
    sub_worlds: WorldSet
    nonsub_worlds: WorldSet
    trace: tuple[WorldRecord, ...] = field(repr=False, default=())

    @property
    def sceptical(self) -> float:
        return self.interval.lower

    @property
    def credulous(self) -> float:
        return self.interval.upper


@dataclass(frozen=True)
class AnytimeSnapshot:
    processed: int
    outer: BeliefInterval
    result: Optional[BeliefResult] = None


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    witness: Optional[Valuation] = None

    def __bool__(self):
        return self.consistent


class Reasoner:
    """Query front end for one knowledge base.

    Caches the ME solution, the world-to-TBox grouping and one tableau per
    distinct restricted TBox.
    """

    def __init__(self, kb: AlcpKnowledgeBase, settings: Settings = Settings(), **overrides):
        self.kb = kb
        self.settings = replace(settings, **overrides) if overrides else settings
        check_size(kb.context_signature, self.settings.max_variables)
        self._me: Optional[MESolution] = None
        self._groups = None
        self._tableaux: dict[TBox, Tableau] = {}
        self._consistency: Optional[ConsistencyReport] = None

    # -- probabilistic part

    @property
    def me(self) -> MESolution:
        if self._me is None:
            s = self.settings
            self._me = solve_me(self.kb.constraints, tol=s.tol, max_iter=s.max_iter, gap_tol=s.gap_tol)
        return self._me

    @property
    def probs(self) -> np.ndarray:
        return self.me.distribution.probs

    def worlds(self, f: Formula) -> WorldSet:
        return worlds_of(f, self.kb.context_signature, self.settings.max_variables)

    # -- logical part

    def _world_groups(self):
        """``(tboxes, group_of)``: distinct restricted TBoxes and each world's group index."""
        if self._groups is None:
            axioms = self.kb.labeled_tbox
            n = self.kb.context_signature.n_worlds
            member = np.zeros((n, len(axioms)), dtype=bool)
            for j, lg in enumerate(axioms):
                member[:, j] = self.worlds(lg.context).mask
            rows, group_of = np.unique(member, axis=0, return_inverse=True)
            tboxes = [TBox.of(lg.gci for lg, used in zip(axioms, row) if used) for row in rows]
            self._groups = (tboxes, np.asarray(group_of).reshape(-1))
        return self._groups

    def tbox_of(self, index: int) -> TBox:
        tboxes, group_of = self._world_groups()
        return tboxes[group_of[index]]

    def _tableau(self, t: TBox) -> Tableau:
        tab = self._tableaux.get(t)
        if tab is None:
            tab = self._tableaux[t] = Tableau(t, self.settings.node_limit)
        return tab

    def _subsumes(self, t, c, d):
        return not self._tableau(t).satisfiable(alc.Conj(c, alc.Neg(d)))

    def _strongly_not(self, t, c, d):
        mode = self.settings.mode
        if mode == alc.DISJOINT:
            return self._subsumes(t, c, alc.nnf(alc.Neg(d)))
        if mode == alc.STRICT:
            return not self._tableau(t.add(GCI(c, d))).satisfiable(alc.TOP)
        raise ValueError(f"unknown mode {mode!r}; expected one of {alc.MODES}")

    def _map_groups(self, fn, group_ids):
        group_ids = list(group_ids)
        if self.settings.threads > 1 and len(group_ids) > 1:
            with ThreadPoolExecutor(self.settings.threads) as pool:
                return dict(zip(group_ids, pool.map(fn, group_ids)))
        return {g: fn(g) for g in group_ids}

    def me_consistent(self) -> ConsistencyReport:
        if self._consistency is None:
            tboxes, group_of = self._world_groups()
            positive = np.flatnonzero(self.probs > self.settings.zero_eps)
            needed = sorted(set(int(group_of[i]) for i in positive))
            ok = self._map_groups(lambda g: self._tableau(tboxes[g]).satisfiable(alc.TOP), needed)
            witness = None
            for i in positive:
                if not ok[int(group_of[i])]:
                    witness = Valuation(self.kb.context_signature, int(i))
                    break
            self._consistency = ConsistencyReport(witness is None, witness)
        return self._consistency

    def consequence_worlds(self, c: Concept, d: Concept) -> tuple[WorldSet, WorldSet]:
        """Worlds whose restricted TBox entails ``c sqsubseteq d``, and those entailing strong non-subsumption."""
        tboxes, group_of = self._world_groups()
        verdicts = self._map_groups(
            lambda g: (self._subsumes(tboxes[g], c, d), self._strongly_not(tboxes[g], c, d)),
            range(len(tboxes)),
        )
        sub = np.array([verdicts[g][0] for g in range(len(tboxes))], dtype=bool)[group_of]
        non = np.array([verdicts[g][1] for g in range(len(tboxes))], dtype=bool)[group_of]
        sig = self.kb.context_signature
        return WorldSet(sig, sub), WorldSet(sig, non)

    def _classify(self, c, d, worlds: np.ndarray) -> dict[int, str]:
        """Algorithm-1 classification (subsumption first, then strong non-subsumption) per group."""
        tboxes, group_of = self._world_groups()

        def verdict(g):
            t = tboxes[g]
            if self._subsumes(t, c, d):
                return SUBSUMPTION
            if self._strongly_not(t, c, d):
                return NON_SUBSUMPTION
            return NEITHER

        groups = sorted(set(int(group_of[i]) for i in worlds))
        return self._map_groups(verdict, groups)

    def _check_query(self, kappa):
        report = self.me_consistent()
        if not report:
            raise MEInconsistentError(report.witness)
        ctx = self.worlds(kappa)
        p_ctx = float(self.probs[ctx.mask].sum())
        if p_ctx <= self.settings.zero_eps:
            raise ZeroProbabilityContextError(p_ctx, self.settings.zero_eps)
        return ctx, p_ctx

    def belief_stream(self, c: Concept, d: Concept, kappa: Formula = TRUE, order: str = ORDER_PROB) -> Iterator[AnytimeSnapshot]:
        """Snapshots of the running bounds; the last one carries the final BeliefResult.

        The first snapshot (nothing processed) is ``[0, 1]``.  Worlds outside
        ``kappa`` contribute nothing and are skipped.
        """
        ctx, p_ctx = self._check_query(kappa)
        probs = self.probs
        in_ctx = np.flatnonzero(ctx.mask)
        if order == ORDER_PROB:
            in_ctx = in_ctx[np.lexsort((in_ctx, -probs[in_ctx]))]
        elif order != ORDER_INDEX:
            raise ValueError(f"unknown order {order!r}")
        return self._stream(c, d, ctx, p_ctx, in_ctx)

    def _stream(self, c, d, ctx, p_ctx, in_ctx):
        tboxes, group_of = self._world_groups()
        verdicts = self._classify(c, d, in_ctx)
        sig = self.kb.context_signature
        probs = [float(x) for x in self.probs]
        ls = lc = 0.0
        sub = np.zeros(sig.n_worlds, dtype=bool)
        non = np.zeros(sig.n_worlds, dtype=bool)
        yield AnytimeSnapshot(0, BeliefInterval(0.0, 1.0))
        for pos, i in enumerate(in_ctx, start=1):
            kind = verdicts[int(group_of[i])]
            if kind == SUBSUMPTION:
                ls += probs[i]
                sub[i] = True
            elif kind == NON_SUBSUMPTION:
                lc += probs[i]
                non[i] = True
            outer = _interval(ls, lc, p_ctx)
            if pos < len(in_ctx):
                yield AnytimeSnapshot(pos, outer)
        classification = {int(i): verdicts[int(group_of[i])] for i in in_ctx}
        trace = tuple(
            WorldRecord(i, float(probs[i]), classification.get(i, OUTSIDE)) for i in range(sig.n_worlds)
        )
        result = BeliefResult(_interval(ls, lc, p_ctx), p_ctx, WorldSet(sig, sub), WorldSet(sig, non), trace)
        yield AnytimeSnapshot(len(in_ctx), result.interval, result)

    def belief_interval(self, c: Concept, d: Concept, kappa: Formula = TRUE) -> BeliefResult:
        *_, last = self.belief_stream(c, d, kappa, order=ORDER_INDEX)
        return last.result


def _interval(ls, lc, p_ctx):
    lower = min(max(ls / p_ctx, 0.0), 1.0)
    upper = min(max(1.0 - lc / p_ctx, 0.0), 1.0)
    return BeliefInterval(lower, upper)


# -- function-style API --------------------------------------------------------


def me_consistent(k: AlcpKnowledgeBase, **settings) -> ConsistencyReport:
    return Reasoner(k, **settings).me_consistent()


def belief_interval(k: AlcpKnowledgeBase, c: Concept, d: Concept, kappa: Formula = TRUE, **settings) -> BeliefResult:
    return Reasoner(k, **settings).belief_interval(c, d, kappa)


def consequence_worlds(k: AlcpKnowledgeBase, c: Concept, d: Concept, **settings) -> tuple[WorldSet, WorldSet]:
    return Reasoner(k, **settings).consequence_worlds(c, d)


def belief_stream(
    k: AlcpKnowledgeBase, c: Concept, d: Concept, kappa: Formula = TRUE, order: str = ORDER_PROB, **settings
) -> list[AnytimeSnapshot]:
    return list(Reasoner(k, **settings).belief_stream(c, d, kappa, order))
