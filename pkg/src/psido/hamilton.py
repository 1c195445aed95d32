"""Hamiltonian flow of principal symbols.

The Hamiltonian field of p is (dp/dxi, -dp/dx) on phase space; its
integral curves inside {p = 0} are the bicharacteristics along which
singularities propagate.  Integration uses an adaptive embedded
Runge-Kutta pair (scipy's RK45); p is conserved along the flow, which
serves as an independent accuracy certificate on every trajectory.

x-components are not wrapped into the periodic box during integration;
wrap only when reporting, if a torus interpretation is wanted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import expr as ex
from .errors import NotCharacteristic, NotReal, StepFailure
from .symbols import HomogeneousTerm, sample_points

XI_FLOOR = 1e-8
CONSERVATION_TOL = 1e-6


@dataclass(frozen=True)
class PhasePoint:
    x: tuple
    xi: tuple

    @classmethod
    def of(cls, x, xi):
        return cls(tuple(float(v) for v in x), tuple(float(v) for v in xi))

    def as_vector(self) -> np.ndarray:
        return np.array(self.x + self.xi, dtype=float)

    @property
    def dimension(self):
        return len(self.x)


@dataclass
class Bicharacteristic:
    """A sampled integral curve: times, phase points, symbol values."""

    times: np.ndarray
    points: np.ndarray          # shape (len(times), 2n)
    p_values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self):
        return self.points.shape[1] // 2

    def endpoint(self) -> PhasePoint:
        n = self.dimension
        last = self.points[-1]
        return PhasePoint.of(last[:n], last[n:])

    def conservation_drift(self) -> float:
        return float(np.max(np.abs(self.p_values - self.p_values[0])))

    def write_csv(self, path):
        n = self.dimension
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            fh.write("# t, x1..xn, xi1..xin, p_value\n")
            for t, row, pv in zip(self.times, self.points, self.p_values):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row]
                           + [repr(float(pv))])


def _check_real(p: HomogeneousTerm):
    xs, xis = sample_points(p.dimension)
    vals = p.expr.ev(xs, xis)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.max(np.abs(vals.imag)) > 1e-9 * scale:
        raise NotReal("Hamiltonian flow needs a real-valued symbol")


def hamiltonian_field(p: HomogeneousTerm, check: bool = True):
    """Evaluator PhasePoint-or-vector -> 2n-vector of the field
    (dp/dxi_1..n, -dp/dx_1..n), assembled by symbolic differentiation."""
    if check:
        _check_real(p)
    n = p.dimension
    dxi = [p.expr.diff("xi", j) for j in range(1, n + 1)]
    dx = [p.expr.diff("x", j) for j in range(1, n + 1)]

    def field_at(z) -> np.ndarray:
        if isinstance(z, PhasePoint):
            z = z.as_vector()
        z = np.asarray(z, dtype=float)
        xv = z[:n].reshape(n, 1)
        xiv = z[n:].reshape(n, 1)
        out = np.empty(2 * n)
        for j in range(n):
            out[j] = dxi[j].ev(xv, xiv)[0].real
            out[n + j] = -dx[j].ev(xv, xiv)[0].real
        return out

    return field_at


def flow(p: HomogeneousTerm, start, T: float,
         tol: float = 1e-9, check: bool = True) -> Bicharacteristic:
    """Integrate the Hamiltonian flow from `start` over t in [0, T].

    Aborts with StepFailure if the trajectory approaches xi = 0 (the
    symbol's phase space excludes the zero covector) or if the step
    controller fails.
    """
    if isinstance(start, PhasePoint):
        z0 = start.as_vector()
    else:
        z0 = np.asarray(start, dtype=float)
    n = p.dimension
    if z0.size != 2 * n:
        raise ValueError(f"start must have length {2 * n}")
    fld = hamiltonian_field(p, check=check)

    def rhs(t, z):
        return fld(z)

    def xi_floor_event(t, z):
        return float(np.linalg.norm(z[n:]) - XI_FLOOR)

    xi_floor_event.terminal = True

    if T == 0.0:
        times = np.array([0.0])
        pts = z0.reshape(1, -1)
    else:
        sol = solve_ivp(rhs, (0.0, T), z0, method="RK45",
                        rtol=tol, atol=tol * 1e-3,
                        events=[xi_floor_event], dense_output=False)
        if sol.status < 0:
            raise StepFailure(f"integrator failed: {sol.message}")
        if sol.status == 1:
            raise StepFailure(
                "trajectory entered |xi| < 1e-8 (symbol singularity)")
        times = sol.t
        pts = sol.y.T
    pv = np.array([
        ex.evaluate(p.expr, row).real for row in pts])
    return Bicharacteristic(times, pts, pv,
                            meta={"tol": tol, "n_steps": len(times) - 1})


def propagate_wavefront(p: HomogeneousTerm, initial, T: float,
                        tol: float = 1e-9) -> list:
    """Flow a set of characteristic points for time T.  Every input must
    lie on char(p) (|p| <= 1e-6); conservation keeps the outputs there."""
    pts = list(initial)
    for pt in pts:
        v = pt.as_vector() if isinstance(pt, PhasePoint) else np.asarray(pt)
        val = ex.evaluate(p.expr, v)
        if abs(val) > 1e-6:
            raise NotCharacteristic(
                f"initial point {tuple(v)} has |p| = {abs(val):.2e} > 1e-6")
    out = []
    for pt in pts:
        if T == 0.0:
            if not isinstance(pt, PhasePoint):
                v = np.asarray(pt, dtype=float)
                n = p.dimension
                pt = PhasePoint.of(v[:n], v[n:])
            out.append(pt)
            continue
        out.append(flow(p, pt, T, tol=tol, check=False).endpoint())
    return out


def transport_solve(p1: HomogeneousTerm, q_init: ex.Expr, t: float,
                    z, tol: float = 1e-9) -> complex:
    """Value at (t, z) of the transport solution dq/dt - H_{p1} q = 0 with
    initial data q_init: constant along (1, H_{p1}) curves, so equals
    q_init evaluated at the time-t forward flow of z."""
    if abs(p1.degree - 1.0) > 1e-9:
        raise ValueError("transport equation needs a degree-1 symbol")
    if isinstance(z, PhasePoint):
        zv = z.as_vector()
    else:
        zv = np.asarray(z, dtype=float)
    if t == 0.0:
        return ex.evaluate(q_init, zv)
    curve = flow(p1, zv, t, tol=tol)
    return ex.evaluate(q_init, curve.points[-1])
