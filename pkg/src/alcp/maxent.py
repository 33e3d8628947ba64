"""Linear probabilistic constraints and the maximum-entropy distribution.

A constraint ``c0 + sum_i c_i * P(phi_i) >= 0`` is linear in the world
probability vector ``p``, so a constraint set becomes a matrix ``A`` and an
offset ``c`` with ``A @ p + c >= 0``.  The maximum-entropy model is found in
two stages:

1. One linear program computes the face of the feasible polytope: the worlds
   that can receive positive mass and the constraints that can be strictly
   satisfied.  Worlds outside the face get probability 0; the remaining
   constraints that are tight in every model become linear equalities.
2. A log-barrier method with damped Newton steps maximizes the entropy on
   that face.  The Newton systems use the diagonal-plus-low-rank structure
   of the Hessian, so each step costs O(worlds * constraints^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Union

import numpy as np
from scipy.optimize import linprog

from .context import (
    TRUE,
    And,
    ContextSignature,
    Formula,
    WorldSet,
    variables_of,
    worlds_of,
)
from .errors import InfeasibleConstraintsError, NonConvergenceError, UndeclaredVariableError

DEFAULT_TOL = 1e-9
DEFAULT_GAP_TOL = 1e-10
DEFAULT_MAX_ITER = 500
DEFAULT_ZERO_EPS = 1e-9

# Homogeneous scale cap of the face-finding LP.  A world whose largest
# attainable probability is below roughly 1/_SCALE_CAP counts as forced to 0.
_SCALE_CAP = 1e6
_FACE_THRESHOLD = 1e-3
# Centering stops once half the squared Newton decrement falls below this.
_CENTER_TOL = 1e-12
_ROUNDING_SLACK = 1e-14
_STEP_TOL = 1e-12


@dataclass(frozen=True)
class LinearConstraint:
    """``c0 + sum(coef * P(formula)) >= 0``."""

    c0: float
    terms: tuple[tuple[float, Formula], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "terms", tuple((float(c), f) for c, f in self.terms))
        if not math.isfinite(self.c0) or not all(math.isfinite(c) for c, _ in self.terms):
            raise ValueError("constraint coefficients must be finite")
        if not self.terms and self.c0 == 0:
            raise ValueError("a constraint needs at least one term or a nonzero constant")

    def value(self, P: "Distribution") -> float:
        return self.c0 + sum(c * prob(P, f) for c, f in self.terms)

    def formulas(self):
        return [f for _, f in self.terms]


@dataclass(frozen=True)
class ConditionalConstraint:
    """``(consequent | antecedent)[lower, upper]``."""

    consequent: Formula
    antecedent: Formula
    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= 1.0 and 0.0 <= self.upper <= 1.0):
            raise ValueError(f"conditional bounds [{self.lower}, {self.upper}] not within [0, 1]")
        if self.lower > self.upper:
            raise ValueError(f"conditional lower bound {self.lower} exceeds upper bound {self.upper}")

    def formulas(self):
        return [self.consequent, self.antecedent]


def lower_conditional(c: ConditionalConstraint) -> tuple[LinearConstraint, LinearConstraint]:
    """``P(psi & phi) - l*P(phi) >= 0`` and ``u*P(phi) - P(psi & phi) >= 0``."""
    joint = And(c.consequent, c.antecedent)
    return (
        LinearConstraint(0.0, ((1.0, joint), (-c.lower, c.antecedent))),
        LinearConstraint(0.0, ((c.upper, c.antecedent), (-1.0, joint))),
    )


def point_constraint(f: Formula, lower: float, upper: Optional[float] = None) -> ConditionalConstraint:
    """``(f)[lower, upper]``, i.e. ``(f | true)[lower, upper]``."""
    return ConditionalConstraint(f, TRUE, lower, lower if upper is None else upper)


@dataclass(frozen=True)
class ConstraintSet:
    signature: ContextSignature
    constraints: tuple[LinearConstraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        declared = set(self.signature.variables)
        for con in self.constraints:
            for f in con.formulas():
                missing = variables_of(f) - declared
                if missing:
                    raise UndeclaredVariableError(sorted(missing)[0])

    @classmethod
    def build(
        cls,
        signature: ContextSignature,
        items: Iterable[Union[LinearConstraint, ConditionalConstraint]] = (),
    ) -> ConstraintSet:
        """Constraint set from linear and conditional constraints (the latter are lowered)."""
        out = []
        for item in items:
            if isinstance(item, ConditionalConstraint):
                out.extend(lower_conditional(item))
            else:
                out.append(item)
        return cls(signature, tuple(out))

    def __len__(self):
        return len(self.constraints)

    def __iter__(self):
        return iter(self.constraints)

    def with_signature(self, signature: ContextSignature) -> ConstraintSet:
        return ConstraintSet(signature, self.constraints)

    def union(self, other: ConstraintSet) -> ConstraintSet:
        sig = self.signature.extend(*other.signature.variables)
        return ConstraintSet(sig, self.constraints + other.constraints)

    def variables(self) -> set[str]:
        names = set()
        for con in self.constraints:
            for f in con.formulas():
                names |= variables_of(f)
        return names

    @cached_property
    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """``(A, c)`` with shape ``(m, 2**n)`` and ``(m,)``: the set reads ``A @ p + c >= 0``."""
        m, n_worlds = len(self.constraints), self.signature.n_worlds
        A = np.zeros((m, n_worlds))
        c = np.zeros(m)
        cache: dict[Formula, np.ndarray] = {}
        for i, con in enumerate(self.constraints):
            c[i] = con.c0
            for coef, f in con.terms:
                if f not in cache:
                    cache[f] = worlds_of(f, self.signature).mask
                A[i, cache[f]] += coef
        A.setflags(write=False)
        c.setflags(write=False)
        return A, c


class Distribution:
    """Probability vector indexed by world index."""

    __slots__ = ("signature", "probs")

    def __init__(self, signature: ContextSignature, probs):
        probs = np.array(probs, dtype=float, copy=True)
        if probs.shape != (signature.n_worlds,):
            raise ValueError(f"expected {signature.n_worlds} probabilities, got shape {probs.shape}")
        if np.any(probs < -1e-12) or np.any(probs > 1 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs = np.clip(probs, 0.0, 1.0)
        probs.setflags(write=False)
        self.signature = signature
        self.probs = probs

    @classmethod
    def uniform(cls, signature: ContextSignature) -> Distribution:
        return cls(signature, np.full(signature.n_worlds, 1.0 / signature.n_worlds))

    def __getitem__(self, index: int) -> float:
        return float(self.probs[index])

    def __len__(self):
        return len(self.probs)

    def __repr__(self):
        return f"Distribution({self.signature.variables}, {self.probs.tolist()})"


@dataclass(frozen=True)
class MESolution:
    distribution: Distribution
    iterations: int
    max_constraint_residual: float
    entropy: float
    support: WorldSet = field(repr=False)


# -- evaluation -----------------------------------------------------------------


def _mask(P: Distribution, f) -> np.ndarray:
    if isinstance(f, WorldSet):
        if f.signature != P.signature:
            raise ValueError("world set and distribution over different signatures")
        return f.mask
    return worlds_of(f, P.signature).mask


def prob(P: Distribution, f: Union[Formula, WorldSet]) -> float:
    """``P(f)``, the total mass of the worlds satisfying ``f``."""
    return float(P.probs[_mask(P, f)].sum())


def cond_prob(P: Distribution, psi, phi, eps_zero: float = DEFAULT_ZERO_EPS) -> Optional[float]:
    """``P(psi | phi)``, or None when ``P(phi) <= eps_zero``."""
    m_phi = _mask(P, phi)
    denom = float(P.probs[m_phi].sum())
    if denom <= eps_zero:
        return None
    return float(P.probs[m_phi & _mask(P, psi)].sum()) / denom


def constraint_values(P: Distribution, R: ConstraintSet) -> np.ndarray:
    if P.signature != R.signature:
        raise ValueError("distribution and constraint set over different signatures")
    A, c = R.matrix
    return A @ P.probs + c


def satisfies(P: Distribution, R: ConstraintSet, tol: float = DEFAULT_TOL) -> bool:
    if not len(R):
        return True
    return bool(np.all(constraint_values(P, R) >= -tol))


def entropy(P: Union[Distribution, np.ndarray]) -> float:
    """Shannon entropy in nats, with 0 log 0 = 0."""
    p = P.probs if isinstance(P, Distribution) else np.asarray(P, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum()) + 0.0


def feasible(R: ConstraintSet) -> bool:
    """Whether some distribution satisfies every constraint of ``R``."""
    if not len(R):
        return True
    A, c = R.matrix
    n_worlds = A.shape[1]
    res = linprog(
        np.zeros(n_worlds),
        A_ub=-A,
        b_ub=c,
        A_eq=np.ones((1, n_worlds)),
        b_eq=[1.0],
        bounds=(0, None),
        method="highs",
    )
    return res.status == 0


# -- the solver ---------------------------------------------------------------


def _homogeneous_rows(R: ConstraintSet) -> np.ndarray:
    """Rows g with ``g @ p >= 0`` equivalent to ``R`` on the simplex, scaled to unit max-norm."""
    A, c = R.matrix
    G = A + c[:, None]
    scale = np.abs(G).max(axis=1)
    # a row that cancels down to roundoff (e.g. a bound of 1 - 2**-52 on a
    # tautology) is 0 >= 0; normalizing it would blow the noise up to +-1
    magnitude = np.maximum(np.abs(A).max(axis=1), np.abs(c))
    null = scale <= 64 * np.finfo(float).eps * np.maximum(magnitude, 1.0)
    G[null] = 0.0
    scale[null] = 1.0
    return G / scale[:, None]


def _face(G: np.ndarray):
    """Face of ``{p in simplex : G p >= 0}`` via one homogenized LP.

    Returns ``(support, strict, p0)``: boolean masks of worlds that can carry
    mass and rows that can hold strictly, plus a relative-interior start
    point.  Returns None when the set is empty.
    """
    m, n = G.shape
    # variables: q (n), s (1), tw (n), tr (m)
    nv = 2 * n + 1 + m
    cost = np.zeros(nv)
    cost[n + 1 :] = -1.0
    eye_n = np.eye(n)
    A_ub = np.zeros((n + m, nv))
    A_ub[:n, :n] = -eye_n  # tw - q <= 0
    A_ub[:n, n + 1 : 2 * n + 1] = eye_n
    A_ub[n:, :n] = -G  # tr - G q <= 0
    A_ub[n:, 2 * n + 1 :] = np.eye(m)
    A_eq = np.zeros((1, nv))
    A_eq[0, :n] = 1.0
    A_eq[0, n] = -1.0
    bounds = [(0, None)] * n + [(0, _SCALE_CAP)] + [(0, 1)] * (n + m)
    res = linprog(cost, A_ub=A_ub, b_ub=np.zeros(n + m), A_eq=A_eq, b_eq=[0.0], bounds=bounds, method="highs")
    if res.status != 0:
        raise NonConvergenceError(f"face-finding LP failed: {res.message}")
    x = res.x
    q, s = x[:n], x[n]
    support = x[n + 1 : 2 * n + 1] > _FACE_THRESHOLD
    strict = x[2 * n + 1 :] > _FACE_THRESHOLD
    if s <= 0 or not support.any():
        return None
    p0 = np.where(support, np.maximum(q, 0.0), 0.0)
    return support, strict, p0 / p0.sum()


def _equality_system(E: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """``C p = d``: ``sum(p) = 1`` plus an independent subset of the rows of ``E p = 0``.

    Rows are picked greedily by pivoted Gram-Schmidt, starting from the
    all-ones row, and kept in their original form; recombining them would
    smear a sharp row such as ``p3 = 1e-9 * (p1 + p2)`` over every world.  A
    row whose part outside the span of the chosen ones has max-norm at most
    ``tol`` is dropped, since it changes no constraint by more than ``tol``
    (this covers rows numerically parallel to the normalization, such as a
    bound of 1 - 1e-10 on a near-tautology).
    """
    n = E.shape[1]
    basis = [np.full(n, 1.0 / math.sqrt(n))]
    R = E - np.outer(E @ basis[0], basis[0])
    chosen = []
    while len(chosen) < min(len(E), n - 1):
        size = np.abs(R).max(axis=1, initial=0.0)
        size[chosen] = 0.0
        i = int(np.argmax(size)) if len(size) else 0
        if not len(size) or size[i] <= tol:
            break
        q = R[i]
        for b in basis:  # second pass keeps the basis orthogonal in floating point
            q = q - (q @ b) * b
        q = q / np.linalg.norm(q)
        basis.append(q)
        chosen.append(i)
        R = R - np.outer(R @ q, q)
    C = np.vstack([np.ones((1, n)), E[chosen]])
    d = np.zeros(C.shape[0])
    d[0] = 1.0
    return C, d


class _BarrierProblem:
    """minimize t * sum(p log p) - sum(log(Gi p)) - sum(log p)  subject to  C p = d.

    The ``log p`` terms matter: the entropy alone only pushes back on a
    vanishing probability logarithmically, too weakly to stop a Newton step
    from collapsing a small coordinate.
    """

    def __init__(self, Gi, C, d):
        self.Gi, self.C, self.d = Gi, C, d
        self._gram_pinv = np.linalg.pinv(C @ C.T)

    def project(self, p):
        """``p`` moved back onto ``C p = d`` if that keeps it positive (removes drift from roundoff)."""
        q = p - self.C.T @ (self._gram_pinv @ (self.C @ p - self.d))
        return q if np.all(q > 0) else p

    def objective(self, p, t):
        s = self.Gi @ p
        if np.any(p <= 0) or np.any(s <= 0):
            return math.inf
        logp = np.log(p)
        return t * float(p @ logp) - float(np.log(s).sum()) - float(logp.sum())

    def gradient(self, p, s, t):
        return t * (np.log(p) + 1.0) - self.Gi.T @ (1.0 / s) - 1.0 / p

    def newton_step(self, p, s, t, g, rp):
        """Solve ``[H C'; C 0][dp; w] = [-g; -rp]`` with H = diag(t/p + 1/p^2) + Gi' diag(1/s^2) Gi.

        The system is solved in the scaled variable ``y = dp / p``, where the
        diagonal part becomes ``t*p + 1 >= 1`` and the Woodbury inner matrix
        ``I + K diag(1/(t*p + 1)) K'`` (rows of ``K`` are ``Gi * p / s``) is
        bounded below by the identity.  Without the scaling, probabilities
        near 0 make both matrices badly conditioned.
        """
        diag = t * p + 1.0
        dinv = 1.0 / diag
        K = self.Gi * p / s[:, None]
        Ct = self.C * p

        if K.shape[0]:
            inner = np.eye(K.shape[0]) + (K * dinv) @ K.T

            def hinv(X):
                Y = dinv[:, None] * X if X.ndim == 2 else dinv * X
                return Y - (dinv[:, None] * K.T) @ np.linalg.solve(inner, K @ Y)
        else:

            def hinv(X):
                return dinv[:, None] * X if X.ndim == 2 else dinv * X

        hc = hinv(Ct.T)
        S = Ct @ hc

        def solve(a, b):
            ha = hinv(a)
            w = _solve_psd(S, Ct @ ha - b)
            return ha - hc @ w, w

        a, b = -p * g, -rp
        y, w = solve(a, b)
        # iterative refinement: the reduced system loses accuracy when p spans many magnitudes
        for _ in range(2):
            r1 = a - diag * y - K.T @ (K @ y) - Ct.T @ w
            r2 = b - Ct @ y
            dy, dw = solve(r1, r2)
            y, w = y + dy, w + dw
        return p * y, w


def _solve_psd(S, r):
    try:
        return np.linalg.solve(S, r)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(S, r, rcond=None)[0]


def _max_step(x, dx):
    neg = dx < 0
    if not neg.any():
        return 1.0
    return min(1.0, 0.99 * float(np.min(-x[neg] / dx[neg])))


def _center(prob_, p, nu, t, budget, inner_tol):
    """Equality-constrained Newton for fixed t. Returns ``(p, nu, iterations)``."""
    Gi, C, d = prob_.Gi, prob_.C, prob_.d
    # the objective grows like t and so does its rounding floor; a stalled
    # line search is accepted as converged only within that floor
    stall_tol = max(1e3 * inner_tol, _ROUNDING_SLACK * t)
    for it in range(1, budget + 1):
        s = Gi @ p
        g = prob_.gradient(p, s, t)
        rp = C @ p - d
        dp, w = prob_.newton_step(p, s, t, g, rp)
        # squared Newton decrement of the (t-scaled) barrier objective
        lam2 = float(-(g @ dp)) if np.linalg.norm(rp) < 1e-13 else math.inf
        if lam2 / 2 <= inner_tol or (lam2 < math.inf and np.abs(dp).max() <= _STEP_TOL):
            return p, w, it, True
        alpha = _max_step(p, dp)
        if Gi.shape[0]:
            alpha = min(alpha, _max_step(s, Gi @ dp))
        feasible_now = np.linalg.norm(rp) < 1e-13
        if feasible_now:
            f0 = prob_.objective(p, t)
            slope = float(g @ dp)
            while alpha > 1e-14 and prob_.objective(p + alpha * dp, t) > f0 + 0.25 * alpha * slope:
                alpha *= 0.5
        else:
            r0 = math.hypot(np.linalg.norm(g + C.T @ w), np.linalg.norm(rp))

            def rnorm(a):
                pn = p + a * dp
                sn = Gi @ pn
                gn = prob_.gradient(pn, sn, t)
                return math.hypot(np.linalg.norm(gn + C.T @ w), np.linalg.norm(C @ pn - d))

            while alpha > 1e-14 and rnorm(alpha) > (1 - 0.01 * alpha) * r0:
                alpha *= 0.5
        p_next = prob_.project(p + alpha * dp)
        if alpha <= 1e-14 or np.array_equal(p_next, p):
            # no further progress possible in floating point
            return p, w, it, feasible_now and lam2 / 2 <= stall_tol
        p = p_next
        nu = w
    return p, nu, budget, False


def solve_me(
    R: ConstraintSet,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    gap_tol: float = DEFAULT_GAP_TOL,
) -> MESolution:
    """The maximum-entropy distribution among the models of ``R``.

    ``tol`` bounds the constraint residual of the result, ``gap_tol`` the
    entropy suboptimality, and ``max_iter`` the total number of Newton steps.
    """
    sig = R.signature
    n_worlds = sig.n_worlds
    if not len(R):
        P = Distribution.uniform(sig)
        return MESolution(P, 0, 0.0, entropy(P), WorldSet.full(sig))

    G = _homogeneous_rows(R)
    face = _face(G)
    if face is None:
        raise InfeasibleConstraintsError("the probabilistic constraints have no model")
    support, strict, p0 = face
    Gs = G[:, support]
    Gi = Gs[strict]
    C, d = _equality_system(Gs[~strict])
    problem = _BarrierProblem(Gi, C, d)

    p = p0[support]
    nu = np.zeros(C.shape[0])
    k = Gi.shape[0] + Gi.shape[1]  # barrier terms: strict rows plus positivity
    t = 1.0
    iterations = 0
    while True:
        p, nu, used, ok = _center(problem, p, nu, t, max_iter - iterations, inner_tol=_CENTER_TOL)
        iterations += used
        if not ok:
            raise NonConvergenceError("maximum-entropy iteration did not converge", iterations, _residual(R, p, support))
        if k / t <= gap_tol:
            break
        t *= 20.0

    p = p / p.sum()
    full = np.zeros(n_worlds)
    full[support] = p
    residual = _residual(R, p, support)
    if residual > tol:
        raise NonConvergenceError("constraint residual above tolerance", iterations, residual)
    P = Distribution(sig, full)
    return MESolution(P, iterations, residual, entropy(P), WorldSet(sig, support))


def _residual(R, p_support, support):
    A, c = R.matrix
    full = np.zeros(A.shape[1])
    full[support] = p_support
    viol = -(A @ full + c)
    return float(max(0.0, viol.max(initial=0.0), abs(full.sum() - 1.0), -full.min()))


__all__ = [
    "LinearConstraint",
    "ConditionalConstraint",
    "ConstraintSet",
    "Distribution",
    "MESolution",
    "lower_conditional",
    "point_constraint",
    "prob",
    "cond_prob",
    "constraint_values",
    "satisfies",
    "entropy",
    "feasible",
    "solve_me",
]
