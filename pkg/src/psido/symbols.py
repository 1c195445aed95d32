"""Homogeneous terms and truncated classical symbol series.

A HomogeneousTerm is an expression tree tagged with a real homogeneity
degree in xi, validated against Euler's relation on a fixed seeded sample
set.  A ClassicalSymbol is a finite list of such terms with strictly
decreasing degrees and an explicit truncation order: the remainder is
understood to be of order (leading_order - truncation_order).

Zero testing is semantic: evaluate on the seeded samples and compare
against the magnitude scale of the additive subterms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import DegreeOrderError, DimensionMismatch, HomogeneityError

EULER_TOL = 1e-9
ZERO_TOL = 1e-9
DEGREE_TOL = 1e-12
_SAMPLE_SEED = 73
_N_SAMPLES = 64


class MultiIndex:
    """Ordered tuple of non-negative integers, one per variable."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        entries = tuple(int(e) for e in entries)
        if any(e < 0 for e in entries):
            raise ValueError("multi-index entries must be non-negative")
        self.entries = entries

    @property
    def order(self) -> int:
        return sum(self.entries)

    @property
    def factorial(self) -> int:
        out = 1
        for e in self.entries:
            out *= math.factorial(e)
        return out

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    def __eq__(self, other):
        return isinstance(other, MultiIndex) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"MultiIndex{self.entries}"


def multi_indices(n: int, max_order: int):
    """All multi-indices in n variables with order <= max_order."""
    for total in range(max_order + 1):
        for cuts in itertools.combinations(range(total + n - 1), n - 1):
            prev = -1
            entry = []
            for c in cuts:
                entry.append(c - prev - 1)
                prev = c
            entry.append(total + n - 2 - prev)
            yield MultiIndex(entry)


_sample_cache: dict = {}


def sample_points(n: int):
    """Fixed seeded sample set: 64 points, x uniform in [0, 2pi)^n,
    xi quasi-uniform on the unit sphere.  Returns (x, xi) of shape (n, 64)."""
    if n not in _sample_cache:
        rng = np.random.default_rng(_SAMPLE_SEED + n)
        xs = rng.uniform(0.0, 2.0 * np.pi, size=(n, _N_SAMPLES))
        g = rng.standard_normal(size=(n, _N_SAMPLES))
        xis = g / np.linalg.norm(g, axis=0, keepdims=True)
        _sample_cache[n] = (xs, xis)
    return _sample_cache[n]


def _additive_scale(e: ex.Expr, xs, xis) -> float:
    """Magnitude scale of the top-level additive subterms on the samples."""
    parts = e.terms if isinstance(e, ex.Add) else (e,)
    total = np.zeros(xs.shape[1])
    for p in parts:
        total += np.abs(p.ev(xs, xis))
    return float(np.max(total)) if total.size else 0.0


def is_zero_expr(e: ex.Expr, n: int, tol: float = ZERO_TOL) -> bool:
    """Semantic zero test on the seeded sample set."""
    xs, xis = sample_points(n)
    vals = e.ev(xs, xis)
    scale = _additive_scale(e, xs, xis)
    return bool(np.max(np.abs(vals)) <= tol * max(1.0, scale))


@dataclass(frozen=True)
class HomogeneousTerm:
    """Expression homogeneous of a real degree in xi."""

    expr: ex.Expr
    degree: float
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "degree", float(self.degree))

    @classmethod
    def checked(cls, e: ex.Expr, degree: float, dimension: int,
                tol: float = EULER_TOL) -> "HomogeneousTerm":
        term = cls(e, degree, dimension)
        res = check_homogeneity(term)
        if res > tol:
            raise HomogeneityError(degree, res)
        return term

    @classmethod
    def zero(cls, degree: float, dimension: int) -> "HomogeneousTerm":
        return cls(ex.ZERO, degree, dimension)

    def __add__(self, other):
        if not isinstance(other, HomogeneousTerm):
            return NotImplemented
        if other.dimension != self.dimension:
            raise DimensionMismatch("terms live in different dimensions")
        if abs(other.degree - self.degree) > DEGREE_TOL:
            raise DegreeOrderError(
                "cannot merge terms of different homogeneity degrees")
        return HomogeneousTerm(ex.add(self.expr, other.expr),
                               self.degree, self.dimension)

    def __neg__(self):
        return HomogeneousTerm(ex.neg(self.expr), self.degree, self.dimension)

    def scale(self, c) -> "HomogeneousTerm":
        return HomogeneousTerm(ex.mul(ex.Const(c), self.expr),
                               self.degree, self.dimension)

    def mul(self, other: "HomogeneousTerm") -> "HomogeneousTerm":
        if other.dimension != self.dimension:
            raise DimensionMismatch("terms live in different dimensions")
        return HomogeneousTerm(ex.mul(self.expr, other.expr),
                               self.degree + other.degree, self.dimension)


def differentiate(term: HomogeneousTerm, var_kind: str, alpha,
                  convention: str | None = None) -> HomogeneousTerm:
    """Differentiate |alpha| times.  Convention defaults to D = (1/i) d/dxi
    for xi-derivatives and the plain partial for x-derivatives; pass
    convention="D" or "partial" to override.  xi-differentiation lowers the
    degree by |alpha|; x-differentiation leaves it unchanged.
    """
    if not isinstance(alpha, MultiIndex):
        alpha = MultiIndex(alpha)
    if len(alpha) != term.dimension:
        raise DimensionMismatch("multi-index length != dimension")
    if convention is None:
        convention = "D" if var_kind == "xi" else "partial"
    e = term.expr
    for j, k in enumerate(alpha, start=1):
        for _ in range(k):
            e = e.diff(var_kind, j)
    if convention == "D":
        e = ex.mul(ex.Const((-1j) ** alpha.order), e)
    deg = term.degree - (alpha.order if var_kind == "xi" else 0)
    return HomogeneousTerm(e, deg, term.dimension)


def check_homogeneity(term: HomogeneousTerm) -> float:
    """Max relative Euler residual |(sum xi_j d/dxi_j - degree) expr| over
    the sample set."""
    n = term.dimension
    xs, xis = sample_points(n)
    radial = ex.add(*(ex.mul(ex.xi(j), term.expr.diff("xi", j))
                      for j in range(1, n + 1)))
    resid = radial.ev(xs, xis) - term.degree * term.expr.ev(xs, xis)
    scale = max(1.0, float(np.max(np.abs(term.expr.ev(xs, xis)))))
    return float(np.max(np.abs(resid))) / scale


def is_zero(term: HomogeneousTerm, tol: float = ZERO_TOL) -> bool:
    return is_zero_expr(term.expr, term.dimension, tol)


def conjugate(term: HomogeneousTerm) -> HomogeneousTerm:
    """Complex-conjugate all constants (variables are real-valued)."""
    return HomogeneousTerm(term.expr.conj(), term.degree, term.dimension)


@dataclass(frozen=True)
class ClassicalSymbol:
    """Truncated series of homogeneous terms with strictly decreasing
    degrees; the remainder is of order (leading_order - truncation_order)."""

    leading_order: float
    terms: tuple
    truncation_order: int
    dimension: int = field(default=0)

    def __post_init__(self):
        if self.truncation_order < 1:
            raise DegreeOrderError("truncation order must be >= 1")
        n = self.dimension or (self.terms[0].dimension if self.terms else 0)
        if n <= 0:
            raise DimensionMismatch("cannot infer dimension of empty symbol")
        merged: dict = {}
        order: list = []
        for t in self.terms:
            if t.dimension != n:
                raise DimensionMismatch("mixed-dimension terms")
            if t.degree > self.leading_order + DEGREE_TOL:
                raise DegreeOrderError(
                    f"term degree {t.degree} exceeds leading order "
                    f"{self.leading_order}")
            for d in order:
                if abs(d - t.degree) <= DEGREE_TOL:
                    merged[d] = merged[d] + t
                    break
            else:
                merged[t.degree] = t
                order.append(t.degree)
        cutoff = self.leading_order - self.truncation_order
        kept = sorted((d for d in order if d > cutoff + DEGREE_TOL),
                      reverse=True)
        final = [merged[d] for d in kept
                 if not (isinstance(merged[d].expr, ex.Const)
                         and merged[d].expr.value == 0)]
        object.__setattr__(self, "terms", tuple(final))
        object.__setattr__(self, "dimension", n)
        object.__setattr__(self, "leading_order", float(self.leading_order))

    @classmethod
    def from_terms(cls, terms, truncation_order: int,
                   leading_order: float | None = None) -> "ClassicalSymbol":
        terms = list(terms)
        if leading_order is None:
            if not terms:
                raise DegreeOrderError("cannot infer order of empty symbol")
            leading_order = max(t.degree for t in terms)
        return cls(leading_order, tuple(terms), truncation_order,
                   terms[0].dimension if terms else 0)

    @classmethod
    def single(cls, e: ex.Expr, degree: float, dimension: int,
               truncation_order: int = 4) -> "ClassicalSymbol":
        return cls(degree, (HomogeneousTerm(e, degree, dimension),),
                   truncation_order, dimension)

    @classmethod
    def identity(cls, dimension: int, truncation_order: int = 4):
        return cls.single(ex.ONE, 0.0, dimension, truncation_order)

    def term_at(self, degree: float) -> HomogeneousTerm:
        for t in self.terms:
            if abs(t.degree - degree) <= max(DEGREE_TOL, 1e-9 * abs(degree)):
                return t
        return HomogeneousTerm.zero(degree, self.dimension)

    def degrees(self) -> list:
        return [t.degree for t in self.terms]

    def __add__(self, other) -> "ClassicalSymbol":
        if not isinstance(other, ClassicalSymbol):
            return NotImplemented
        if other.dimension != self.dimension:
            raise DimensionMismatch("symbols live in different dimensions")
        m = max(self.leading_order, other.leading_order)
        n_tr = min(self.leading_order - self.truncation_order,
                   other.leading_order - other.truncation_order)
        return ClassicalSymbol(m, self.terms + other.terms,
                               max(1, int(round(m - n_tr))), self.dimension)

    def __sub__(self, other) -> "ClassicalSymbol":
        return self + other.scale(-1.0)

    def scale(self, c) -> "ClassicalSymbol":
        return ClassicalSymbol(self.leading_order,
                               tuple(t.scale(c) for t in self.terms),
                               self.truncation_order, self.dimension)

    def mul_pointwise(self, other: "ClassicalSymbol") -> "ClassicalSymbol":
        """Plain term-by-term product of the two series (no operator
        composition corrections)."""
        if other.dimension != self.dimension:
            raise DimensionMismatch("symbols live in different dimensions")
        m = self.leading_order + other.leading_order
        n_out = min(self.truncation_order, other.truncation_order)
        prods = [a.mul(b) for a in self.terms for b in other.terms
                 if a.degree + b.degree > m - n_out + DEGREE_TOL]
        return ClassicalSymbol(m, tuple(prods), n_out, self.dimension)

    def render(self) -> str:
        lines = [f"degree {t.degree:g}: {t.expr.render()}"
                 for t in self.terms]
        return "\n".join(lines) if lines else "(zero symbol)"


def _gen_binom(a: float, k: int) -> float:
    """Generalized binomial coefficient C(a, k) by the falling factorial
    (well-defined for every real a, unlike the gamma-function route)."""
    out = 1.0
    for i in range(k):
        out *= (a - i) / (i + 1)
    return out


def make_lambda_s(s: float, n: int, N: int) -> ClassicalSymbol:
    """Classical expansion of <xi>^s = |xi|^s (1 + |xi|^-2)^(s/2) by the
    generalized binomial series: sum_k C(s/2, k) |xi|^(s-2k)."""
    if N < 1:
        raise DegreeOrderError("truncation order must be >= 1")
    terms = []
    for k in range(math.ceil(N / 2)):
        c = _gen_binom(s / 2.0, k)
        if c == 0.0:
            continue
        e = ex.mul(ex.Const(c), ex.pow_(ex.xi_norm_sq(n), (s - 2 * k) / 2.0))
        terms.append(HomogeneousTerm(e, s - 2 * k, n))
    if not terms:
        terms = [HomogeneousTerm.zero(s, n)]
    return ClassicalSymbol(s, tuple(terms), N, n)


class Diffeo:
    """A diffeomorphism of the working box given by forward and inverse
    coordinate expressions (lists of n Exprs in x)."""

    def __init__(self, forward, inverse, check: bool = True,
                 tol: float = 1e-9):
        self.forward = tuple(forward)
        self.inverse = tuple(inverse)
        self.dimension = len(self.forward)
        if len(self.inverse) != self.dimension:
            raise DimensionMismatch("forward/inverse length mismatch")
        if check:
            self._validate(tol)

    def jacobian(self):
        """Entries J[i][j] = d forward_i / d x_j as Exprs."""
        n = self.dimension
        return [[self.forward[i].diff("x", j + 1) for j in range(n)]
                for i in range(n)]

    def _validate(self, tol):
        n = self.dimension
        xs, xis = sample_points(n)
        # round-trip inverse(forward(x)) = x at the samples
        sub = {("x", j + 1): self.forward[j] for j in range(n)}
        comp = [g.subst(sub) for g in self.inverse]
        vals = np.array([c.ev(xs, xis) for c in comp])
        err = np.max(np.abs(vals - xs))
        if err > tol:
            raise DegreeOrderError(
                f"inverse(forward) deviates from identity by {err:.2e}")
        jac = self.jacobian()
        jv = np.array([[jac[i][j].ev(xs, xis) for j in range(n)]
                       for i in range(n)])
        dets = np.linalg.det(np.moveaxis(jv, 2, 0))
        if np.min(np.abs(dets)) < 1e-12:
            raise DegreeOrderError("Jacobian determinant vanishes at a sample")
