"""Symbol-level operator calculus.

Composition, adjoint, left/right symbol conversion, commutators,
ellipticity tests, the elliptic parametrix recursion, the approximate
square root, and the principal-symbol pullback under a diffeomorphism.

All expansions are truncated: output terms below the certified order of
either input are dropped.  Constructions that need a correction "one level
at a time" (parametrix, square root) are driven by the residual of an
actual composition, with the semantic zero test deciding which residual
levels still need killing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import (DimensionMismatch, NotElliptic, NotPositive,
                     ZeroCovector)
from .symbols import (DEGREE_TOL, ClassicalSymbol, Diffeo, HomogeneousTerm,
                      MultiIndex, differentiate, is_zero, multi_indices)

ELLIPTIC_THRESHOLD = 1e-8


def principal(P: ClassicalSymbol) -> HomogeneousTerm:
    """The unique term at the leading order (zero if it cancelled)."""
    return P.term_at(P.leading_order)


def compose(P: ClassicalSymbol, Q: ClassicalSymbol,
            truncation: int | None = None) -> ClassicalSymbol:
    """Left-symbol composition: terms (1/alpha!) D_xi^alpha p d_x^alpha q
    collected by homogeneity level, truncated at min of the input orders."""
    if P.dimension != Q.dimension:
        raise DimensionMismatch("compose: dimension mismatch")
    n = P.dimension
    m_out = P.leading_order + Q.leading_order
    n_out = truncation if truncation is not None else min(
        P.truncation_order, Q.truncation_order)
    cutoff = m_out - n_out
    terms = []
    for p in P.terms:
        for q in Q.terms:
            span = p.degree + q.degree - cutoff
            if span <= DEGREE_TOL:
                continue
            lmax = int(math.floor(span - DEGREE_TOL))
            for alpha in multi_indices(n, lmax):
                dp = differentiate(p, "xi", alpha)          # D convention
                dq = differentiate(q, "x", alpha)           # plain partial
                contrib = dp.mul(dq).scale(1.0 / alpha.factorial)
                terms.append(contrib)
    return ClassicalSymbol(m_out, tuple(terms), n_out, n)


def adjoint(P: ClassicalSymbol) -> ClassicalSymbol:
    """Formal adjoint: sum_alpha (1/alpha!) d_x^alpha D_xi^alpha conj(p)."""
    n = P.dimension
    cutoff = P.leading_order - P.truncation_order
    terms = []
    for p in P.terms:
        span = p.degree - cutoff
        lmax = int(math.floor(span - DEGREE_TOL))
        pc = HomogeneousTerm(p.expr.conj(), p.degree, n)
        for alpha in multi_indices(n, max(lmax, 0)):
            t = differentiate(pc, "xi", alpha)
            t = differentiate(t, "x", alpha)
            terms.append(t.scale(1.0 / alpha.factorial))
    return ClassicalSymbol(P.leading_order, tuple(terms),
                           P.truncation_order, n)


def convert_left_right(P: ClassicalSymbol, direction: str) -> ClassicalSymbol:
    """Total-symbol conversion between left and right quantizations.

    left-to-right:  b ~ sum_alpha ((-1)^|alpha|/alpha!) D_xi^a d_x^a p
    right-to-left:  a ~ sum_alpha (1/alpha!) D_xi^a d_x^a p
    """
    if direction not in ("left-to-right", "right-to-left"):
        raise ValueError("direction must be left-to-right or right-to-left")
    n = P.dimension
    cutoff = P.leading_order - P.truncation_order
    terms = []
    for p in P.terms:
        span = p.degree - cutoff
        lmax = int(math.floor(span - DEGREE_TOL))
        for alpha in multi_indices(n, max(lmax, 0)):
            t = differentiate(p, "xi", alpha)
            t = differentiate(t, "x", alpha)
            c = 1.0 / alpha.factorial
            if direction == "left-to-right":
                c *= (-1.0) ** alpha.order
            terms.append(t.scale(c))
    return ClassicalSymbol(P.leading_order, tuple(terms),
                           P.truncation_order, n)


def commutator(P: ClassicalSymbol, Q: ClassicalSymbol) -> ClassicalSymbol:
    """[P, Q] = PQ - QP.  The top-level term cancels semantically; the
    next level is (1/i) times the Poisson bracket of the principals."""
    return compose(P, Q) - compose(Q, P)


def poisson_bracket(p: HomogeneousTerm, q: HomogeneousTerm) -> HomogeneousTerm:
    """{p, q} = sum_j dp/dxi_j dq/dx_j - dp/dx_j dq/dxi_j."""
    if p.dimension != q.dimension:
        raise DimensionMismatch("poisson_bracket: dimension mismatch")
    n = p.dimension
    e = ex.add(*(
        ex.mul(p.expr.diff("xi", j), q.expr.diff("x", j))
        - ex.mul(p.expr.diff("x", j), q.expr.diff("xi", j))
        for j in range(1, n + 1)))
    return HomogeneousTerm(e, p.degree + q.degree - 1, n)


@dataclass(frozen=True)
class EllipticityReport:
    min_modulus: float
    argmin: tuple            # (x, xi) with |xi| = 1
    verdict: bool
    threshold: float = ELLIPTIC_THRESHOLD


def _sphere_directions(n: int, count: int = 64) -> np.ndarray:
    if n == 1:
        return np.array([[1.0, -1.0]])
    if n == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.vstack([np.cos(ang), np.sin(ang)])
    rng = np.random.default_rng(421)
    g = rng.standard_normal((n, count))
    return g / np.linalg.norm(g, axis=0, keepdims=True)


def _grid_points(n: int, per_axis: int = 16) -> np.ndarray:
    axes = [np.linspace(0.0, 2.0 * np.pi, per_axis, endpoint=False)
            for _ in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.vstack([m.ravel() for m in mesh])


def is_elliptic(P: ClassicalSymbol, per_axis: int = 16,
                directions: int = 64,
                threshold: float = ELLIPTIC_THRESHOLD) -> EllipticityReport:
    """Sample |principal(P)| on an x-grid times unit sphere directions.
    Sampling can miss zeros; the argmin is reported so near-characteristic
    locations are inspectable."""
    n = P.dimension
    p = principal(P)
    xg = _grid_points(n, per_axis)
    dirs = _sphere_directions(n, directions)
    best = (np.inf, None)
    for k in range(dirs.shape[1]):
        xiv = np.repeat(dirs[:, k:k + 1], xg.shape[1], axis=1)
        vals = np.abs(p.expr.ev(xg, xiv))
        idx = int(np.argmin(vals))
        if vals[idx] < best[0]:
            best = (float(vals[idx]),
                    (tuple(xg[:, idx]), tuple(dirs[:, k])))
    min_mod, argmin = best
    return EllipticityReport(min_mod, argmin, min_mod >= threshold, threshold)


def micro_elliptic_at(P: ClassicalSymbol, point,
                      threshold: float = ELLIPTIC_THRESHOLD) -> bool:
    """True iff the principal symbol is nonzero at (x0, xi0/|xi0|)."""
    pt = np.asarray(point, dtype=float)
    n = P.dimension
    x0, xi0 = pt[:n], pt[n:]
    nrm = np.linalg.norm(xi0)
    if nrm == 0.0:
        raise ZeroCovector("micro-ellipticity needs a nonzero covector")
    val = ex.evaluate(principal(P).expr,
                      np.concatenate([x0, xi0 / nrm]))
    return abs(val) >= threshold


def _residual_correction_loop(P, make_first, next_term, cutoff, n_out,
                              residual_of, max_iter):
    """Shared driver for parametrix/sqrt: repeatedly kill the highest
    residual level that fails the semantic zero test."""
    q_terms = [make_first()]
    for _ in range(max_iter):
        Q = ClassicalSymbol.from_terms(q_terms, n_out)
        R = residual_of(Q)
        target = None
        for t in R.terms:
            if t.degree <= cutoff + DEGREE_TOL:
                continue
            if not is_zero(t):
                target = t
                break
        if target is None:
            return Q
        q_terms.append(next_term(target))
    return ClassicalSymbol.from_terms(q_terms, n_out)


def parametrix(P: ClassicalSymbol, N: int) -> ClassicalSymbol:
    """Two-sided inverse modulo order -N terms, by the elliptic recursion:
    the leading term is 1/principal(P), and each further term kills the
    highest surviving level of compose(P, Q) - 1."""
    rep = is_elliptic(P)
    if not rep.verdict:
        raise NotElliptic(
            f"principal symbol has modulus {rep.min_modulus:.2e} "
            f"at {rep.argmin}")
    n = P.dimension
    m = P.leading_order
    p_m = principal(P)
    ident = ClassicalSymbol.identity(n, N)

    def first():
        return HomogeneousTerm(ex.div(ex.ONE, p_m.expr), -m, n)

    def correction(res_term):
        e = ex.neg(ex.div(res_term.expr, p_m.expr))
        return HomogeneousTerm(e, res_term.degree - m, n)

    def residual(Q):
        return compose(P, Q, truncation=N) - ident

    return _residual_correction_loop(P, first, correction, -N, N,
                                     residual, max_iter=4 * N + 4)


def sqrt_approx(P: ClassicalSymbol, N: int) -> ClassicalSymbol:
    """Approximate square root: Q with compose(Q, Q) - P of order m - N.
    Requires the principal symbol to be real and strictly positive."""
    n = P.dimension
    m = P.leading_order
    p_m = principal(P)
    xg = _grid_points(n, 8)
    dirs = _sphere_directions(n, 32)
    for k in range(dirs.shape[1]):
        xiv = np.repeat(dirs[:, k:k + 1], xg.shape[1], axis=1)
        vals = p_m.expr.ev(xg, xiv)
        scale = max(1.0, float(np.max(np.abs(vals))))
        if np.any(np.abs(vals.imag) > 1e-9 * scale):
            raise NotPositive("principal symbol takes non-real values")
        if np.any(vals.real <= ELLIPTIC_THRESHOLD):
            raise NotPositive("principal symbol is not strictly positive")
    q0 = ex.sqrt(p_m.expr)

    def first():
        return HomogeneousTerm(q0, m / 2.0, n)

    def correction(res_term):
        e = ex.mul(ex.Const(0.5), ex.div(res_term.expr, q0))
        return HomogeneousTerm(e, res_term.degree - m / 2.0, n)

    def residual(Q):
        return P - compose(Q, Q, truncation=N)

    return _residual_correction_loop(P, first, correction, m - N, N,
                                     residual, max_iter=4 * N + 4)


def _minor(mat, i, j):
    return [row[:j] + row[j + 1:] for k, row in enumerate(mat) if k != i]


def _det(mat) -> ex.Expr:
    n = len(mat)
    if n == 1:
        return mat[0][0]
    parts = []
    for j in range(n):
        sub = _det(_minor(mat, 0, j))
        parts.append(ex.mul(ex.Const((-1.0) ** j), mat[0][j], sub))
    return ex.add(*parts)


def pullback_principal(p: HomogeneousTerm, phi: Diffeo) -> HomogeneousTerm:
    """Principal-symbol pullback: (x, eta) -> p(chi(x), (dchi/dx)^{-T} eta),
    assembled symbolically (Jacobian entries stay expression trees)."""
    n = p.dimension
    if phi.dimension != n:
        raise DimensionMismatch("diffeomorphism dimension mismatch")
    jac = phi.jacobian()
    det = _det(jac)
    new_xi = []
    for i in range(n):
        parts = []
        for j in range(n):
            if n == 1:
                cof = ex.ONE
            else:
                cof = ex.mul(ex.Const((-1.0) ** (i + j)),
                             _det(_minor(jac, i, j)))
            parts.append(ex.mul(cof, ex.xi(j + 1)))
        new_xi.append(ex.div(ex.add(*parts), det))
    table = {("x", j + 1): phi.forward[j] for j in range(n)}
    table.update({("xi", j + 1): new_xi[j] for j in range(n)})
    return HomogeneousTerm(p.expr.subst(table), p.degree, n)
