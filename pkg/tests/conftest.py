import pathlib
import sys

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from alcp import alc, context as ctx  # noqa: E402
from alcp.alc import GCI  # noqa: E402
from alcp.engine import AlcpKnowledgeBase, LabeledGci, Reasoner  # noqa: E402
from alcp.kbio import load_kb  # noqa: E402
from alcp.maxent import ConditionalConstraint, ConstraintSet, LinearConstraint, lower_conditional, point_constraint  # noqa: E402

KBS = pathlib.Path(__file__).resolve().parents[1] / "kbs"


@pytest.fixture(scope="session")
def kbs_dir():
    return KBS


@pytest.fixture
def antibiotics():
    return load_kb(KBS / "antibiotics.alcp")


@pytest.fixture
def anti_sig():
    return ctx.ContextSignature(("res", "h"))


@pytest.fixture
def r_anti(anti_sig):
    res, h = ctx.Var("res"), ctx.Var("h")
    return ConstraintSet.build(anti_sig, [point_constraint(res, 0.05), ConditionalConstraint(res, h, 0.8, 0.8)])


# -- hypothesis strategies ------------------------------------------------------------


def formulas(names, max_leaves=12):
    atoms = st.sampled_from([ctx.Var(n) for n in names] + [ctx.TRUE, ctx.FALSE])

    def extend(children):
        return st.one_of(
            children.map(ctx.Not),
            st.tuples(children, children).map(lambda p: ctx.And(*p)),
            st.tuples(children, children).map(lambda p: ctx.Or(*p)),
            st.tuples(children, children).map(lambda p: ctx.Implies(*p)),
        )

    return st.recursive(atoms, extend, max_leaves=max_leaves)


def concepts(names, roles=(), max_leaves=10):
    atoms = st.sampled_from([alc.Name(n) for n in names] + [alc.TOP, alc.BOTTOM])

    def extend(children):
        options = [
            children.map(alc.Neg),
            st.tuples(children, children).map(lambda p: alc.Conj(*p)),
            st.tuples(children, children).map(lambda p: alc.Disj(*p)),
        ]
        if roles:
            options.append(st.tuples(st.sampled_from(roles), children).map(lambda p: alc.Exists(*p)))
            options.append(st.tuples(st.sampled_from(roles), children).map(lambda p: alc.Forall(*p)))
        return st.one_of(*options)

    return st.recursive(atoms, extend, max_leaves=max_leaves)


# -- seeded random generators (numpy) ----------------------------------------------------


def random_concept(rng, names, roles=(), depth=3):
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.08:
            return alc.TOP
        if r < 0.12:
            return alc.BOTTOM
        return alc.Name(str(rng.choice(names)))
    kinds = ["neg", "and", "or"] + (["some", "all"] if roles else [])
    kind = kinds[rng.integers(len(kinds))]
    if kind == "neg":
        return alc.Neg(random_concept(rng, names, roles, depth - 1))
    if kind in ("and", "or"):
        cls = alc.Conj if kind == "and" else alc.Disj
        return cls(random_concept(rng, names, roles, depth - 1), random_concept(rng, names, roles, depth - 1))
    cls = alc.Exists if kind == "some" else alc.Forall
    return cls(str(rng.choice(roles)), random_concept(rng, names, roles, depth - 1))


def random_formula(rng, names, depth=2):
    if depth == 0 or rng.random() < 0.35:
        return ctx.Var(str(rng.choice(names)))
    kind = rng.integers(3)
    if kind == 0:
        return ctx.Not(random_formula(rng, names, depth - 1))
    cls = ctx.And if kind == 1 else ctx.Or
    return cls(random_formula(rng, names, depth - 1), random_formula(rng, names, depth - 1))


def random_feasible_items(rng, sig, n_items):
    """Interval constraints built around a random distribution, so they are feasible."""
    q = rng.dirichlet(np.ones(sig.n_worlds))
    items = []
    for _ in range(n_items):
        f = random_formula(rng, list(sig.variables))
        pf = float(q[ctx.worlds_of(f, sig).mask].sum())
        if rng.random() < 0.5:
            g = random_formula(rng, list(sig.variables))
            mg = ctx.worlds_of(g, sig).mask
            pg = float(q[mg].sum())
            if pg < 1e-3:
                continue
            val = float(q[mg & ctx.worlds_of(f, sig).mask].sum()) / pg
            lo, hi = _around(rng, val)
            items.append(ConditionalConstraint(f, g, lo, hi))
        else:
            lo, hi = _around(rng, pf)
            items.append(point_constraint(f, lo, hi))
    return items


def _around(rng, val):
    val = min(1.0, max(0.0, val))
    if rng.random() < 0.4:
        return val, val
    width = float(rng.uniform(0.02, 0.2))
    return max(0.0, val - width), min(1.0, val + width)


def random_kb_parts(rng, variables=("a", "b"), names=("A", "B", "C"), roles=("r",), n_gcis=(1, 4), n_items=(1, 3)):
    """``(signature, items, gcis)`` of a random ME-consistent KB (rejection sampling)."""
    sig = ctx.ContextSignature(variables)
    while True:
        items = random_feasible_items(rng, sig, int(rng.integers(n_items[0], n_items[1] + 1)))
        gcis = []
        for _ in range(int(rng.integers(n_gcis[0], n_gcis[1] + 1))):
            g = GCI(random_concept(rng, list(names), list(roles), 2), random_concept(rng, list(names), list(roles), 2))
            label = ctx.TRUE if rng.random() < 0.3 else random_formula(rng, list(variables), 1)
            gcis.append(LabeledGci(g, label))
        if Reasoner(AlcpKnowledgeBase.build(sig, items, gcis)).me_consistent():
            return sig, items, gcis


def random_kb(rng, **kw):
    """A random ME-consistent KB; keywords as for :func:`random_kb_parts`."""
    return AlcpKnowledgeBase.build(*random_kb_parts(rng, **kw))


# -- acceptance summary -------------------------------------------------------------

_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")


# -- invariance helpers ---------------------------------------------------------------


def random_query(rng, kb, reasoner, min_context=1e-6):
    """``(c, d, kappa)`` over the KB's names, with a context of non-negligible mass."""
    names = sorted(kb.concept_names) or ["A"]
    roles = sorted(kb.role_names)
    c = random_concept(rng, names, roles, 2)
    d = random_concept(rng, names, roles, 2)
    while True:
        kappa = ctx.TRUE if rng.random() < 0.4 else random_formula(rng, list(kb.context_signature.variables), 1)
        if reasoner.probs[reasoner.worlds(kappa).mask].sum() > min_context:
            return c, d, kappa


def representation_variant(rng, sig, items, gcis):
    """A syntactically different KB with the same models as ``build(sig, items, gcis)``.

    Conditionals are replaced by their lowered linear pairs, scaled by random
    positive factors, with formulas rewritten into equivalent ones and some
    rows duplicated; GCIs are randomly replaced by their contrapositive and
    their labels rewritten.
    """

    def same(f):
        k = rng.integers(3)
        return ctx.Not(ctx.Not(f)) if k == 0 else ctx.And(f, ctx.TRUE) if k == 1 else ctx.Or(f, ctx.FALSE)

    cons = []
    for item in items:
        for con in lower_conditional(item):
            k = float(rng.uniform(0.2, 5.0))
            cons.append(LinearConstraint(con.c0 * k, tuple((coef * k, same(f)) for coef, f in con.terms)))
            if rng.random() < 0.3:
                cons.append(con)
    cons = [cons[i] for i in rng.permutation(len(cons))]
    variant = []
    for lg in gcis:
        g = lg.gci
        if rng.random() < 0.5:
            g = GCI(alc.Neg(g.rhs), alc.Neg(g.lhs))
        variant.append(LabeledGci(g, same(lg.context)))
    return AlcpKnowledgeBase.build(sig, cons, variant)


def close_intervals(a, b, tol):
    return abs(a.lower - b.lower) <= tol and abs(a.upper - b.upper) <= tol


def invariance_case(kind, seed):
    """Run one randomized invariance check; returns the two intervals compared."""
    rng = np.random.default_rng(seed)
    parts = random_kb_parts(rng)
    kb = AlcpKnowledgeBase.build(*parts)
    base = Reasoner(kb)
    c, d, kappa = random_query(rng, kb, base)
    if kind == "representation":
        other = Reasoner(representation_variant(rng, *parts))
    elif kind == "language":
        other = Reasoner(kb.with_signature(kb.context_signature.extend("zz")))
    elif kind == "independence":
        kb2 = random_kb(rng, variables=("c", "d"), names=("E", "F"), roles=("s",))
        other = Reasoner(kb.union(kb2))
    else:
        raise ValueError(kind)
    return base.belief_interval(c, d, kappa).interval, other.belief_interval(c, d, kappa).interval
