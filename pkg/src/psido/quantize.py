"""Numerical realization of the calculus on the torus [0, 2pi)^n, n <= 2.

Quantization is the finite Fourier sum (Pu)(x) = sum_k e^{ikx} p(x,k) u^(k).
The xi-singularity of a homogeneous term meets the integer lattice only at
k = 0, so excision reduces to a k = 0 policy: degree-0 terms contribute
their value along the e1 ray, terms of nonzero degree contribute 0.

Also here: Sobolev norms and the H^s/H^-s duality pairing, the two
regularized definitions of an oscillatory integral (mutual oracles), and
the winding-number/matrix-oracle index of a piecewise symbol on the
circle.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import expr as ex
from .errors import (DomainError, GridMismatch, NonConvergent,
                     SymbolVanishes, Unstable)
from .symbols import ClassicalSymbol, HomogeneousTerm

_MODE_EPS = 1e-12          # below the fft roundoff floor a mode is noise
_DEGREE_ZERO_TOL = 1e-9


def lattice(n: int, M: int):
    """Spatial lattice axes (2pi/M){0..M-1} as a meshgrid list."""
    ax = 2.0 * np.pi * np.arange(M) / M
    return np.meshgrid(*([ax] * n), indexing="ij")


def wavenumbers(n: int, M: int):
    """Integer wavenumber meshgrid in fft order."""
    ks = np.fft.fftfreq(M, d=1.0 / M).astype(int)
    return np.meshgrid(*([ks] * n), indexing="ij")


@dataclass
class GridFunction:
    """Complex samples on the periodic lattice (2pi/M)^n, n in {1, 2}."""

    dimension: int
    M: int
    values: np.ndarray

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise GridMismatch("grid dimension must be 1 or 2")
        if self.M & (self.M - 1):
            raise GridMismatch("points-per-axis must be a power of two")
        self.values = np.asarray(self.values, dtype=complex).reshape(
            (self.M,) * self.dimension)

    @classmethod
    def from_callable(cls, n: int, M: int, f) -> "GridFunction":
        mesh = lattice(n, M)
        return cls(n, M, f(*mesh))

    @classmethod
    def from_expr(cls, e: ex.Expr, n: int, M: int) -> "GridFunction":
        mesh = lattice(n, M)
        flat = np.vstack([m.ravel() for m in mesh])
        zero_xi = np.zeros_like(flat)
        vals = e.ev(flat, zero_xi)
        return cls(n, M, vals.reshape((M,) * n))

    @classmethod
    def single_mode(cls, n: int, M: int, k) -> "GridFunction":
        mesh = lattice(n, M)
        k = np.atleast_1d(k)
        phase = sum(k[j] * mesh[j] for j in range(n))
        return cls(n, M, np.exp(1j * phase))

    @classmethod
    def random_band_limited(cls, n: int, M: int, band: int,
                            rng=None) -> "GridFunction":
        rng = rng or np.random.default_rng(0)
        kg = wavenumbers(n, M)
        mask = np.ones_like(kg[0], dtype=bool)
        for K in kg:
            mask &= np.abs(K) <= band
        coef = np.zeros((M,) * n, dtype=complex)
        coef[mask] = rng.standard_normal(int(mask.sum())) \
            + 1j * rng.standard_normal(int(mask.sum()))
        return cls(n, M, np.fft.ifftn(coef) * M ** n)

    def spectrum(self) -> "GridSpectrum":
        coef = np.fft.fftn(self.values) / self.M ** self.dimension
        return GridSpectrum(self.dimension, self.M, coef)

    def copy(self) -> "GridFunction":
        return GridFunction(self.dimension, self.M, self.values.copy())

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)
                             / self.M ** self.dimension))

    def write_csv(self, path):
        n, M = self.dimension, self.M
        with open(path, "w", newline="") as fh:
            fh.write(f"# gridfunction n={n} M={M}\n")
            w = csv.writer(fh)
            for idx in np.ndindex(*([M] * n)):
                v = self.values[idx]
                w.writerow(list(idx) + [repr(float(v.real)),
                                        repr(float(v.imag))])

    @classmethod
    def read_csv(cls, path) -> "GridFunction":
        with open(path) as fh:
            header = fh.readline().strip()
            if not header.startswith("#"):
                raise GridMismatch("missing grid CSV header")
            fields = dict(kv.split("=") for kv in header[1:].split()
                          if "=" in kv)
            n, M = int(fields["n"]), int(fields["M"])
            vals = np.zeros((M,) * n, dtype=complex)
            for row in csv.reader(fh):
                if not row:
                    continue
                idx = tuple(int(c) for c in row[:n])
                vals[idx] = float(row[n]) + 1j * float(row[n + 1])
        return cls(n, M, vals)


@dataclass
class GridSpectrum:
    """Discrete Fourier coefficients u^(k) = M^-n sum_x u(x) e^{-ikx},
    stored in fft order; k ranges over {-M/2 .. M/2-1}^n."""

    dimension: int
    M: int
    coefficients: np.ndarray     # fft order

    def to_grid(self) -> GridFunction:
        vals = np.fft.ifftn(self.coefficients) * self.M ** self.dimension
        return GridFunction(self.dimension, self.M, vals)

    def coefficient(self, k) -> complex:
        idx = tuple(int(kk) % self.M for kk in np.atleast_1d(k))
        return complex(self.coefficients[idx])

    def shifted(self) -> np.ndarray:
        return np.fft.fftshift(self.coefficients)

    def power(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))


def _separate(e: ex.Expr, limit: int = 256):
    """Try to write e as a sum of products c(x) * h(xi).  Returns a list of
    (x_factor, xi_factor) pairs or None when the tree does not factor."""
    vs = e.vars()
    if not any(k == "xi" for k, _ in vs):
        return [(e, ex.ONE)]
    if not any(k == "x" for k, _ in vs):
        return [(ex.ONE, e)]
    if isinstance(e, ex.Add):
        out = []
        for t in e.terms:
            sub = _separate(t, limit)
            if sub is None:
                return None
            out.extend(sub)
            if len(out) > limit:
                return None
        return out
    if isinstance(e, ex.Mul):
        pairs = [(ex.ONE, ex.ONE)]
        for f in e.factors:
            sub = _separate(f, limit)
            if sub is None:
                return None
            pairs = [(ex.mul(cx, sx), ex.mul(ck, sk))
                     for (cx, ck) in pairs for (sx, sk) in sub]
            if len(pairs) > limit:
                return None
        return pairs
    if isinstance(e, ex.Div):
        dv = e.den.vars()
        den_kinds = {k for k, _ in dv}
        sub = _separate(e.num, limit)
        if sub is None:
            return None
        if den_kinds <= {"xi"}:
            return [(cx, ex.div(ck, e.den)) for (cx, ck) in sub]
        if den_kinds <= {"x"}:
            return [(ex.div(cx, e.den), ck) for (cx, ck) in sub]
        return None
    return None


def _term_multiplier(term: HomogeneousTerm, h: ex.Expr,
                     kgrid) -> np.ndarray:
    """Evaluate the xi-factor h on the wavenumber lattice with the k = 0
    excision policy determined by the term's homogeneity degree."""
    n = term.dimension
    shape = kgrid[0].shape
    flat = np.vstack([K.ravel().astype(float) for K in kgrid])
    zero_mask = np.all(flat == 0.0, axis=0)
    xdummy = np.zeros_like(flat)
    out = np.zeros(flat.shape[1], dtype=complex)
    nz = ~zero_mask
    if np.any(nz):
        out[nz] = ex.ev_cached(h, xdummy[:, nz], flat[:, nz])
    if np.any(zero_mask):
        if abs(term.degree) <= _DEGREE_ZERO_TOL:
            e1 = np.zeros((n, 1))
            e1xi = np.zeros((n, 1))
            e1xi[0, 0] = 1.0
            out[zero_mask] = h.ev(e1, e1xi)[0]
        # nonzero degree: excised extension contributes 0 at k = 0
    return out.reshape(shape)


def op_apply(P: ClassicalSymbol, u: GridFunction) -> GridFunction:
    """Apply the quantization of P to u.  Exact for Fourier multipliers
    and for differential symbols on sufficiently band-limited input."""
    n, M = u.dimension, u.M
    if P.dimension != n:
        raise GridMismatch("symbol/grid dimension mismatch")
    kgrid = wavenumbers(n, M)
    uhat_fft = np.fft.fftn(u.values)
    out = np.zeros_like(u.values)
    mesh = lattice(n, M)
    xflat = np.vstack([m.ravel() for m in mesh])
    mx = float(np.max(np.abs(uhat_fft)))
    if mx > 0.0:
        nactive = int(np.count_nonzero(np.abs(uhat_fft) > _MODE_EPS * mx))
        if nactive <= 8:
            # few excited modes: summing over them directly is cheaper
            # than factoring and weighting every term on the full lattice
            for term in P.terms:
                out += _dense_apply(term, u, kgrid, uhat_fft, xflat)
            return GridFunction(n, M, out)
    for term in P.terms:
        pairs = _separate(term.expr)
        if pairs is not None:
            for cx, ck in pairs:
                w = _term_multiplier(term, ck, kgrid)
                spectral = np.fft.ifftn(w * uhat_fft)
                if isinstance(cx, ex.Const):
                    out += cx.value * spectral
                else:
                    cvals = ex.ev_cached(cx, xflat,
                                         np.zeros_like(xflat))
                    out += cvals.reshape((M,) * n) * spectral
        else:
            out += _dense_apply(term, u, kgrid, uhat_fft, xflat)
    return GridFunction(n, M, out)


def _dense_apply(term, u, kgrid, uhat_fft, xflat):
    """Fallback mode-by-mode sum for non-separable terms, restricted to
    modes that actually carry energy."""
    n, M = u.dimension, u.M
    uhat = uhat_fft / M ** n
    mx = np.max(np.abs(uhat))
    out = np.zeros((M,) * n, dtype=complex)
    if mx == 0.0:
        return out
    active = np.argwhere(np.abs(uhat) > _MODE_EPS * mx)
    ks = np.fft.fftfreq(M, d=1.0 / M).astype(int)
    mesh = lattice(n, M)
    for idx in active:
        k = np.array([ks[i] for i in idx], dtype=float)
        if np.all(k == 0.0):
            if abs(term.degree) <= _DEGREE_ZERO_TOL:
                e1 = np.zeros((n, 1))
                e1[0] = 1.0
                kv = np.repeat(e1, xflat.shape[1], axis=1)
            else:
                continue
        else:
            kv = np.repeat(k.reshape(n, 1), xflat.shape[1], axis=1)
        pvals = ex.ev_cached(term.expr, xflat, kv).reshape((M,) * n)
        phase = sum(k[j] * mesh[j] for j in range(n))
        out += uhat[tuple(idx)] * pvals * np.exp(1j * phase)
    return out


def sobolev_norm(u: GridFunction, s: float) -> float:
    """(sum_k (1+|k|^2)^s |u^(k)|^2)^(1/2)."""
    sp = u.spectrum()
    kgrid = wavenumbers(u.dimension, u.M)
    k2 = sum(K.astype(float) ** 2 for K in kgrid)
    w = (1.0 + k2) ** s
    return float(np.sqrt(np.sum(w * np.abs(sp.coefficients) ** 2)))


def duality_pair(u: GridFunction, v: GridFunction) -> complex:
    """sum_k u^(k) conj(v^(k)); the H^s x H^-s pairing on the torus."""
    if (u.dimension, u.M) != (v.dimension, v.M):
        raise GridMismatch("duality pairing needs matching grids")
    su = u.spectrum().coefficients
    sv = v.spectrum().coefficients
    return complex(np.sum(su * np.conj(sv)))


# ---------------------------------------------------------------------------
# oscillatory integrals, 1D phase x*theta
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = leggauss(16)


def _panel_quad(f, a: float, b: float) -> complex:
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    t = mid + half * _GL_NODES
    return half * complex(np.sum(_GL_WEIGHTS * f(t)))


def _outward_theta_quad(f, start: float, theta_max: float,
                        width: float = 1.0, quiet_after: int = 3) -> complex:
    """Integrate f over start <= |theta| <= theta_max symmetric outward,
    stopping once panels stop contributing."""
    total = 0.0 + 0.0j
    quiet = 0
    a = start
    while a < theta_max:
        b = min(a + width, theta_max)
        c = _panel_quad(f, a, b) + _panel_quad(f, -b, -a)
        total += c
        scale = max(1.0, abs(total))
        if abs(c) < 1e-9 * scale and a > 8.0:
            quiet += 1
            if quiet >= quiet_after:
                break
        else:
            quiet = 0
        a = b
    return total


class _PsiTransform:
    """Cached Fourier transform Psi(theta) = int e^{ix theta} psi(x) dx."""

    def __init__(self, psi: ex.Expr, support):
        a, b = support
        nodes, weights = [], []
        # dense enough that the discrete transform is machine accurate
        # wherever |Psi| is above the noise floor below
        panels = 128
        edges = np.linspace(a, b, panels + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            nodes.append(mid + half * _GL_NODES)
            weights.append(half * _GL_WEIGHTS)
        self.xn = np.concatenate(nodes)
        self.w = np.concatenate(weights)
        xv = self.xn.reshape(1, -1)
        psi_vals = psi.ev(xv, np.zeros_like(xv))
        self.wf = self.w * psi_vals
        # below this level the computed transform is dominated by support
        # truncation and quadrature noise; snapping it to an exact zero makes
        # tail integrals terminate instead of amplifying noise by |theta|^m
        self.floor = 1e-9 * max(1.0, float(np.sum(np.abs(self.wf))))
        self._cache = {}

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        theta = np.atleast_1d(theta)
        # quadrature panels revisit the same nodes across epsilon sweeps
        key = (theta[0], theta[-1], theta.size)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = np.exp(1j * np.outer(theta, self.xn)) @ self.wf
        out[np.abs(out) < self.floor] = 0.0
        self._cache[key] = out
        return out


def _cutoff_profile(u: np.ndarray, kind: str) -> np.ndarray:
    """Smooth chi with chi=1 for |u|<1 and chi=0 for |u|>2."""
    au = np.abs(u)
    t = np.clip(au - 1.0, 0.0, 1.0)
    if kind == "smoothstep":
        s = t * t * t * (t * (6 * t - 15) + 10)
    elif kind == "cosine":
        s = 0.5 * (1.0 - np.cos(np.pi * t))
    else:
        raise ValueError(f"unknown cutoff profile {kind!r}")
    return 1.0 - s


def _estimate_order(a: ex.Expr) -> float:
    t1, t2 = 64.0, 128.0
    v1 = abs(complex(a.ev(np.zeros((1, 1)), np.array([[t1]]))[0]))
    v2 = abs(complex(a.ev(np.zeros((1, 1)), np.array([[t2]]))[0]))
    if v1 == 0.0 or v2 == 0.0:
        return 0.0
    return float(np.log2(v2 / v1))


def oscint_eval(a: ex.Expr, psi: ex.Expr, method: str = "both",
                support=(-np.pi, np.pi), cutoff: str = "smoothstep",
                tol: float = 1e-6):
    """Regularized oscillatory integral <u, psi> for phase x*theta.

    a is an amplitude in theta (variable xi1), psi a smooth compactly
    supported test function in x (variable x1).  The two regularizations
    (epsilon-cutoff limit, and integration by parts against M = chi^-1 L)
    define the same distribution; computing both gives a built-in oracle.
    """
    if method == "both":
        ve = oscint_eval(a, psi, "epsilon-cutoff", support, cutoff, tol)
        vp = oscint_eval(a, psi, "parts", support, cutoff, tol)
        scale = max(1.0, abs(ve), abs(vp))
        if abs(ve - vp) > 100 * tol * scale:
            raise NonConvergent(
                f"regularizations disagree: {ve} vs {vp}")
        return 0.5 * (ve + vp)
    psif = _PsiTransform(psi, support)

    def amp(theta):
        th = np.asarray(theta, dtype=float).reshape(1, -1)
        return a.ev(np.zeros_like(th), th)

    if method == "epsilon-cutoff":
        vals = []
        for j in range(7):
            eps = 2.0 ** (-4 - j)

            def f(th):
                return (amp(th) * _cutoff_profile(eps * th, cutoff)
                        * psif(th))

            vals.append(_outward_theta_quad(f, 0.0, 2.0 / eps))
        diffs = [abs(vals[i + 1] - vals[i]) for i in range(len(vals) - 1)]
        scale = max(1.0, abs(vals[-1]))
        if diffs[-1] > tol * scale:
            raise NonConvergent(
                f"epsilon sequence not Cauchy at {tol:g}: "
                f"last diff {diffs[-1]:.2e}")
        # one Richardson step when the ratio looks geometric
        if diffs[-2] > 0 and diffs[-1] > 0:
            r = diffs[-1] / diffs[-2]
            if r < 0.9:
                step = vals[-1] - vals[-2]
                return complex(vals[-1] + step * r / (1.0 - r))
        return complex(vals[-1])

    if method == "parts":
        theta = ex.xi(1)
        xv = ex.x(1)
        sigma = ex.div(ex.pow_(theta, 8),
                       ex.add(ex.ONE, ex.pow_(theta, 8)))
        near_expr = ex.div(a, ex.add(ex.ONE, ex.pow_(theta, 8)))
        m = _estimate_order(a)
        r = max(0, int(np.floor(m)) + 2)
        # M = chi^-1 L = -i(b dx + c dtheta) fixes e^{ix theta}, so
        # M^t = i(dx(b .) + dtheta(c .)).  Both coefficients split into a
        # theta factor times an x factor (b = theta^-1 g, c = h), and the
        # amplitude depends on theta alone, so (M^t)^r (a sigma psi) stays
        # a sum of separable terms F(theta) G(x) psi^(k)(x).  Each term's
        # x integral is then a cached Fourier transform, so the theta
        # quadrature never re-walks expression trees.
        g = ex.div(ex.ONE, ex.ONE + xv * xv)
        h = ex.div(xv, ex.ONE + xv * xv)
        inv_theta = ex.pow_(theta, -1.0)
        terms = [(0, ex.mul(a, sigma), ex.ONE)]
        for _ in range(r):
            nxt = []
            for k, F, G in terms:
                iF = ex.mul(ex.I, F)
                # d/dx of the x factor, d/dtheta of the theta factor, and
                # the psi-derivative shift from d/dx hitting psi^(k)
                nxt.append((k, ex.mul(iF, inv_theta),
                            ex.mul(g, G).diff("x", 1)))
                nxt.append((k, ex.mul(ex.I, F.diff("xi", 1)),
                            ex.mul(h, G)))
                nxt.append((k + 1, ex.mul(iF, inv_theta), ex.mul(g, G)))
            terms = nxt
        psi_k = [psi]
        for _ in range(r):
            psi_k.append(psi_k[-1].diff("x", 1))
        # all x factors share psif's quadrature nodes, so one phase matrix
        # serves every transform
        xrow = psif.xn.reshape(1, -1)
        zrow = np.zeros_like(xrow)
        wmat = np.stack([psif.w * ex.mul(G, psi_k[k]).ev(xrow, zrow)
                         for k, F, G in terms], axis=1)
        floors = 1e-9 * np.maximum(1.0, np.sum(np.abs(wmat), axis=0))
        f_exprs = [F for k, F, G in terms]

        def far_theta_integrand(th):
            row = th.reshape(1, -1)
            zero = np.zeros_like(row)
            vals = np.exp(1j * np.outer(th, psif.xn)) @ wmat
            vals[np.abs(vals) < floors[None, :]] = 0.0
            out = np.zeros(th.size, dtype=complex)
            for j, F in enumerate(f_exprs):
                out += F.ev(zero, row) * vals[:, j]
            return out

        def near_theta_integrand(th):
            av = near_expr.ev(np.zeros((1, th.size)),
                              th.reshape(1, -1))
            return av * psif(th)

        # near part carries the non-excised remainder 1/(1+theta^8)
        near = _outward_theta_quad(near_theta_integrand, 0.0, 64.0,
                                   width=0.5)
        far = _outward_theta_quad(far_theta_integrand, 0.0, 512.0,
                                  width=1.0)
        return complex(near + far)

    raise ValueError(f"unknown oscint method {method!r}")


# ---------------------------------------------------------------------------
# circle index (piecewise symbol a+ for xi>0, a- for xi<0)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IndexReport:
    winding_plus: int
    winding_minus: int
    numerical_index: int
    truncation: int
    near_zero_singular_values: tuple = field(default=())


def _winding(values: np.ndarray) -> int:
    ratios = values / np.roll(values, 1)
    total = float(np.sum(np.angle(ratios))) / (2.0 * np.pi)
    w = int(round(total))
    if abs(total - w) > 1e-6:
        raise SymbolVanishes(
            f"winding number {total} is not close to an integer")
    return w


def _fourier_coefs(e: ex.Expr, samples: int = 256) -> np.ndarray:
    xv = 2.0 * np.pi * np.arange(samples) / samples
    vals = e.ev(xv.reshape(1, -1), np.zeros((1, samples)))
    if np.min(np.abs(vals)) < 1e-8:
        raise SymbolVanishes("symbol modulus < 1e-8 at a circle sample")
    return np.fft.fft(vals) / samples, vals


def _coef(chat: np.ndarray, l: int) -> complex:
    S = chat.size
    if abs(l) >= S // 2:
        return 0.0
    return complex(chat[l % S])


def _kernel_dim(columns_op, K: int, B: int, rank_tol: float = 1e-8) -> tuple:
    """Numerical kernel dimension of the bi-infinite operator restricted
    to columns [-K, K], with all reachable rows [-K-B, K+B] retained.  A
    kernel vector of this rectangle extends by zero to an exact kernel
    vector of the infinite matrix."""
    cols = np.arange(-K, K + 1)
    rows = np.arange(-K - B, K + B + 1)
    A = np.zeros((rows.size, cols.size), dtype=complex)
    for cj, j in enumerate(cols):
        for ri, k in enumerate(rows):
            if abs(k - j) <= B:
                A[ri, cj] = columns_op(k, j)
    sv = np.linalg.svd(A, compute_uv=False)
    smax = sv[0] if sv.size else 1.0
    rank = int(np.sum(sv > rank_tol * max(smax, 1e-300)))
    near = tuple(float(s) for s in sv[sv <= rank_tol * max(smax, 1e-300)])
    return cols.size - rank, near


def circle_index(aplus: ex.Expr, aminus: ex.Expr, K: int = 32) -> IndexReport:
    """Winding numbers of a+/- plus a matrix oracle for the Fredholm index
    of the operator with symbol a+(x) for xi>0, a-(x) for xi<0 (the a+
    branch also takes the xi = 0 mode)."""
    cp, vp = _fourier_coefs(aplus)
    cm, vm = _fourier_coefs(aminus)
    wp = _winding(vp)
    wm = _winding(vm)
    mx = max(np.max(np.abs(cp)), np.max(np.abs(cm)))
    sig = [l for l in range(-127, 128)
           if abs(_coef(cp, l)) > 1e-10 * mx or abs(_coef(cm, l)) > 1e-10 * mx]
    B = max(8, max((abs(l) for l in sig), default=0))

    def entry(k, j):
        chat = cp if j >= 0 else cm
        return _coef(chat, k - j)

    def entry_adj(k, j):
        chat = cp if k >= 0 else cm
        return np.conj(_coef(chat, j - k))

    def index_at(KK):
        dk, near_k = _kernel_dim(entry, KK, B)
        dc, near_c = _kernel_dim(entry_adj, KK, B)
        return dk - dc, near_k + near_c

    idx, near = index_at(K)
    idx2, _ = index_at(K + 8)
    if idx != idx2:
        raise Unstable(
            f"index changed from {idx} to {idx2} between K={K} and K={K + 8}")
    return IndexReport(wp, wm, idx, K, near)
