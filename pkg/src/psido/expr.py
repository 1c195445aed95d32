"""Expression trees over phase-space variables x1..xn, xi1..xin.

The node set is deliberately small -- complex constants, variables, sums,
products, quotients, real powers, sin, cos, exp -- and is closed under
differentiation with respect to any variable.  Negation is Mul(-1, .) and
square roots are Pow(., 0.5).  There is no simplification beyond constant
folding and neutral-element elimination: semantic questions (is this tree
zero?) are settled by sampling, not by rewriting.

Evaluation is vectorized: `ev` takes numpy arrays of x and xi samples and
returns a complex array.  All values are immutable after construction.
"""

from __future__ import annotations

import numbers

import numpy as np

from .errors import DomainError

_DIV_EPS = 1e-14


def _as_expr(v) -> "Expr":
    if isinstance(v, Expr):
        return v
    if isinstance(v, numbers.Number):
        return Const(complex(v))
    raise TypeError(f"cannot coerce {v!r} to Expr")


class Expr:
    """Base class.  Subclasses are immutable and hashable by identity."""

    __slots__ = ()

    # -- arithmetic sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, _as_expr(other))

    def __radd__(self, other):
        return add(_as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(_as_expr(other)))

    def __rsub__(self, other):
        return add(_as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, _as_expr(other))

    def __rmul__(self, other):
        return mul(_as_expr(other), self)

    def __truediv__(self, other):
        return div(self, _as_expr(other))

    def __rtruediv__(self, other):
        return div(_as_expr(other), self)

    def __pow__(self, p):
        return pow_(self, p)

    def __neg__(self):
        return neg(self)

    # -- interface implemented by subclasses ------------------------------
    def ev(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Evaluate at sample points.  x, xi have shape (n, m) (or (n,))."""
        raise NotImplementedError

    def diff(self, kind: str, j: int) -> "Expr":
        """Plain partial derivative with respect to x_j or xi_j (1-based)."""
        raise NotImplementedError

    def conj(self) -> "Expr":
        raise NotImplementedError

    def subst(self, table: dict) -> "Expr":
        """Replace variables per table {("x", j): Expr, ...}."""
        raise NotImplementedError

    def vars(self) -> set:
        raise NotImplementedError

    def render(self) -> str:
        """Serialize in the CLI grammar (re-parseable)."""
        raise NotImplementedError

    def __repr__(self):
        return self.render()


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        object.__setattr__(self, "value", complex(value))

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def ev(self, x, xi):
        m = x.shape[1] if x.ndim == 2 else 1
        return np.full(m, self.value, dtype=complex)

    def diff(self, kind, j):
        return ZERO

    def conj(self):
        return Const(self.value.conjugate())

    def subst(self, table):
        return self

    def vars(self):
        return set()

    def render(self):
        z = self.value
        if z.imag == 0.0:
            return _fmt_real(z.real)
        if z.real == 0.0:
            if z.imag == 1.0:
                return "i"
            if z.imag == -1.0:
                return "(-i)"
            return f"({_fmt_real(z.imag)}*i)"
        sign = "+" if z.imag >= 0 else "-"
        return f"({_fmt_real(z.real)}{sign}{_fmt_real(abs(z.imag))}*i)"


def _fmt_real(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        s = str(int(v))
    else:
        s = repr(v)
    return f"({s})" if v < 0 else s


class Var(Expr):
    __slots__ = ("kind", "j")

    def __init__(self, kind, j):
        if kind not in ("x", "xi"):
            raise ValueError("variable kind must be 'x' or 'xi'")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "j", int(j))

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def ev(self, x, xi):
        arr = x if self.kind == "x" else xi
        v = arr[self.j - 1]
        return np.asarray(v, dtype=complex).reshape(-1)

    def diff(self, kind, j):
        return ONE if (kind, j) == (self.kind, self.j) else ZERO

    def conj(self):
        return self

    def subst(self, table):
        return table.get((self.kind, self.j), self)

    def vars(self):
        return {(self.kind, self.j)}

    def render(self):
        return f"{self.kind}{self.j}"


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        object.__setattr__(self, "terms", tuple(terms))

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def ev(self, x, xi):
        out = self.terms[0].ev(x, xi).copy()
        for t in self.terms[1:]:
            out += t.ev(x, xi)
        return out

    def diff(self, kind, j):
        return add(*(t.diff(kind, j) for t in self.terms))

    def conj(self):
        return add(*(t.conj() for t in self.terms))

    def subst(self, table):
        return add(*(t.subst(table) for t in self.terms))

    def vars(self):
        out = set()
        for t in self.terms:
            out |= t.vars()
        return out

    def render(self):
        return "(" + " + ".join(t.render() for t in self.terms) + ")"


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        object.__setattr__(self, "factors", tuple(factors))

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def ev(self, x, xi):
        out = self.factors[0].ev(x, xi).copy()
        for f in self.factors[1:]:
            out *= f.ev(x, xi)
        return out

    def diff(self, kind, j):
        parts = []
        fs = self.factors
        for k in range(len(fs)):
            d = fs[k].diff(kind, j)
            if d is ZERO:
                continue
            parts.append(mul(*fs[:k], d, *fs[k + 1:]))
        return add(*parts)

    def conj(self):
        return mul(*(f.conj() for f in self.factors))

    def subst(self, table):
        return mul(*(f.subst(table) for f in self.factors))

    def vars(self):
        out = set()
        for f in self.factors:
            out |= f.vars()
        return out

    def render(self):
        return "(" + "*".join(f.render() for f in self.factors) + ")"


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num, den):
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def ev(self, x, xi):
        d = self.den.ev(x, xi)
        if np.any(np.abs(d) < _DIV_EPS):
            raise DomainError(f"denominator underflow in {self.den.render()}")
        return self.num.ev(x, xi) / d

    def diff(self, kind, j):
        dn = self.num.diff(kind, j)
        dd = self.den.diff(kind, j)
        if dd is ZERO:
            return div(dn, self.den)
        return div(dn * self.den - self.num * dd, mul(self.den, self.den))

    def conj(self):
        return div(self.num.conj(), self.den.conj())

    def subst(self, table):
        return div(self.num.subst(table), self.den.subst(table))

    def vars(self):
        return self.num.vars() | self.den.vars()

    def render(self):
        return f"({self.num.render()}/{self.den.render()})"


class Pow(Expr):
    """Real, constant exponent.  Non-integer exponents require a
    non-negative real base at evaluation time."""

    __slots__ = ("base", "expo")

    def __init__(self, base, expo):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "expo", float(expo))

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def ev(self, x, xi):
        b = self.base.ev(x, xi)
        p = self.expo
        if p == int(p):
            if p < 0 and np.any(np.abs(b) < _DIV_EPS):
                raise DomainError(
                    f"negative power of vanishing base {self.base.render()}")
            return b ** int(p)
        scale = np.max(np.abs(b)) if b.size else 1.0
        if np.any(np.abs(b.imag) > 1e-9 * max(1.0, scale)):
            raise DomainError(
                f"fractional power of non-real base {self.base.render()}")
        br = b.real
        if np.any(br < -1e-12 * max(1.0, scale)):
            raise DomainError(
                f"fractional power of negative base {self.base.render()}")
        br = np.maximum(br, 0.0)
        if p < 0 and np.any(br < _DIV_EPS):
            raise DomainError(
                f"negative power of vanishing base {self.base.render()}")
        return (br ** p).astype(complex)

    def diff(self, kind, j):
        db = self.base.diff(kind, j)
        if db is ZERO:
            return ZERO
        return Const(self.expo) * pow_(self.base, self.expo - 1.0) * db

    def conj(self):
        return pow_(self.base.conj(), self.expo)

    def subst(self, table):
        return pow_(self.base.subst(table), self.expo)

    def vars(self):
        return self.base.vars()

    def render(self):
        if self.expo == 0.5:
            return f"sqrt({self.base.render()})"
        return f"({self.base.render()}^{_fmt_real(self.expo)})"


class _Fn(Expr):
    __slots__ = ("arg",)
    name = ""

    def __init__(self, arg):
        object.__setattr__(self, "arg", arg)

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def conj(self):
        return type(self)(self.arg.conj())

    def subst(self, table):
        return type(self)(self.arg.subst(table))

    def vars(self):
        return self.arg.vars()

    def render(self):
        return f"{self.name}({self.arg.render()})"


class Sin(_Fn):
    __slots__ = ()
    name = "sin"

    def ev(self, x, xi):
        return np.sin(self.arg.ev(x, xi))

    def diff(self, kind, j):
        d = self.arg.diff(kind, j)
        if d is ZERO:
            return ZERO
        return Cos(self.arg) * d


class Cos(_Fn):
    __slots__ = ()
    name = "cos"

    def ev(self, x, xi):
        return np.cos(self.arg.ev(x, xi))

    def diff(self, kind, j):
        d = self.arg.diff(kind, j)
        if d is ZERO:
            return ZERO
        return neg(Sin(self.arg)) * d


class Exp(_Fn):
    __slots__ = ()
    name = "exp"

    def ev(self, x, xi):
        return np.exp(self.arg.ev(x, xi))

    def diff(self, kind, j):
        d = self.arg.diff(kind, j)
        if d is ZERO:
            return ZERO
        return self * d


# -- smart constructors (constant folding, neutral elements) --------------

ZERO = Const(0.0)
ONE = Const(1.0)
I = Const(1j)


def add(*terms) -> Expr:
    flat = []
    const = 0.0 + 0.0j
    for t in terms:
        t = _as_expr(t)
        if isinstance(t, Add):
            flat.extend(t.terms)
        elif isinstance(t, Const):
            const += t.value
        else:
            flat.append(t)
    # nested Adds may still carry consts
    merged = []
    for t in flat:
        if isinstance(t, Const):
            const += t.value
        else:
            merged.append(t)
    if const != 0:
        merged.append(Const(const))
    if not merged:
        return ZERO
    if len(merged) == 1:
        return merged[0]
    return Add(merged)


def mul(*factors) -> Expr:
    flat = []
    const = 1.0 + 0.0j
    for f in factors:
        f = _as_expr(f)
        if isinstance(f, Mul):
            flat.extend(f.factors)
        elif isinstance(f, Const):
            const *= f.value
        else:
            flat.append(f)
    merged = []
    for f in flat:
        if isinstance(f, Const):
            const *= f.value
        else:
            merged.append(f)
    if const == 0:
        return ZERO
    if const != 1:
        merged.insert(0, Const(const))
    if not merged:
        return ONE
    if len(merged) == 1:
        return merged[0]
    return Mul(merged)


def neg(e) -> Expr:
    return mul(Const(-1.0), _as_expr(e))


def div(num, den) -> Expr:
    num = _as_expr(num)
    den = _as_expr(den)
    if isinstance(den, Const):
        if den.value == 0:
            raise DomainError("division by the constant zero")
        return mul(Const(1.0 / den.value), num)
    if num is ZERO:
        return ZERO
    return Div(num, den)


def pow_(base, expo) -> Expr:
    base = _as_expr(base)
    expo = float(expo)
    if expo == 0.0:
        return ONE
    if expo == 1.0:
        return base
    if isinstance(base, Const):
        v = base.value
        if v.imag == 0 and (v.real >= 0 or expo == int(expo)):
            return Const(v ** expo)
    if isinstance(base, Pow):
        return Pow(base.base, base.expo * expo)
    return Pow(base, expo)


def sqrt(e) -> Expr:
    return pow_(e, 0.5)


def sin(e) -> Expr:
    return Sin(_as_expr(e))


def cos(e) -> Expr:
    return Cos(_as_expr(e))


def exp(e) -> Expr:
    return Exp(_as_expr(e))


def x(j: int) -> Expr:
    return Var("x", j)


def xi(j: int) -> Expr:
    return Var("xi", j)


def xi_norm_sq(n: int) -> Expr:
    return add(*(mul(xi(j), xi(j)) for j in range(1, n + 1)))


def xi_norm(n: int) -> Expr:
    return sqrt(xi_norm_sq(n))


def _children(node):
    if isinstance(node, Add):
        return node.terms
    if isinstance(node, Mul):
        return node.factors
    if isinstance(node, Div):
        return (node.num, node.den)
    if isinstance(node, Pow):
        return (node.base,)
    if isinstance(node, _Fn):
        return (node.arg,)
    return ()


def ev_cached(e: Expr, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Evaluate with per-node memoization.  Trees produced by repeated
    differentiation share subtrees heavily (the product and quotient rules
    reuse child references), so caching by node identity turns an
    exponentially redundant walk into a linear one.  A reference-count
    prepass lets each cached array be dropped after its last use, keeping
    peak memory proportional to the live frontier, not the whole DAG."""
    refs = {}
    stack = [e]
    while stack:
        node = stack.pop()
        key = id(node)
        if key in refs:
            refs[key] += 1
            continue
        refs[key] = 1
        stack.extend(_children(node))
    cache = {}

    def _owned(v, node):
        # safe to accumulate in place only if nobody else holds this array:
        # not still cached for another parent, and not a possible view of
        # the caller's input (Var)
        if cache.get(id(node)) is v or isinstance(node, Var):
            return v.copy()
        return v

    def rec(node):
        key = id(node)
        hit = cache.get(key)
        if hit is not None:
            refs[key] -= 1
            if refs[key] == 0:
                del cache[key]
            return hit
        if isinstance(node, (Const, Var)):
            out = node.ev(x, xi)
        elif isinstance(node, Add):
            out = _owned(rec(node.terms[0]), node.terms[0])
            for t in node.terms[1:]:
                out += rec(t)
        elif isinstance(node, Mul):
            out = _owned(rec(node.factors[0]), node.factors[0])
            for f in node.factors[1:]:
                out *= rec(f)
        elif isinstance(node, Div):
            d = rec(node.den)
            if np.any(np.abs(d) < _DIV_EPS):
                raise DomainError(
                    f"denominator underflow in {node.den.render()}")
            out = rec(node.num) / d
        elif isinstance(node, Pow):
            b = rec(node.base)
            p = node.expo
            if p == int(p):
                if p < 0 and np.any(np.abs(b) < _DIV_EPS):
                    raise DomainError(
                        f"negative power of vanishing base "
                        f"{node.base.render()}")
                out = b ** int(p)
            else:
                scale = np.max(np.abs(b)) if b.size else 1.0
                if np.any(np.abs(b.imag) > 1e-9 * max(1.0, scale)):
                    raise DomainError(
                        f"fractional power of non-real base "
                        f"{node.base.render()}")
                br = b.real
                if np.any(br < -1e-12 * max(1.0, scale)):
                    raise DomainError(
                        f"fractional power of negative base "
                        f"{node.base.render()}")
                br = np.maximum(br, 0.0)
                if p < 0 and np.any(br < _DIV_EPS):
                    raise DomainError(
                        f"negative power of vanishing base "
                        f"{node.base.render()}")
                out = (br ** p).astype(complex)
        elif isinstance(node, Sin):
            out = np.sin(rec(node.arg))
        elif isinstance(node, Cos):
            out = np.cos(rec(node.arg))
        elif isinstance(node, Exp):
            out = np.exp(rec(node.arg))
        else:
            out = node.ev(x, xi)
        refs[key] -= 1
        if refs[key] > 0:
            cache[key] = out
        return out

    return rec(e)


def evaluate(e: Expr, point) -> complex:
    """Evaluate at a single phase-space point (x1..xn, xi1..xin)."""
    pt = np.asarray(point, dtype=float)
    if pt.ndim != 1 or pt.size % 2 != 0:
        raise ValueError("point must be a flat (x, xi) vector of even length")
    n = pt.size // 2
    xv = pt[:n].reshape(n, 1)
    xiv = pt[n:].reshape(n, 1)
    return complex(e.ev(xv, xiv)[0])
