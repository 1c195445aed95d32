import numpy as np
import pytest

from psido import expr as ex
from psido import symbols as sy
from psido.hamilton import (flow, hamiltonian_field, propagate_wavefront,
                            transport_solve)
from psido.errors import NotCharacteristic, NotReal, StepFailure


def test_field_of_laplacian():
    p = sy.HomogeneousTerm(ex.xi_norm_sq(2), 2.0, 2)
    f = hamiltonian_field(p)
    assert np.allclose(f([0.0, 0.0, 1.0, 2.0]), [2.0, 4.0, 0.0, 0.0])


def test_field_of_xi1():
    p = sy.HomogeneousTerm(ex.xi(1), 1.0, 2)
    f = hamiltonian_field(p)
    assert np.allclose(f([0.3, 0.7, 1.0, -2.0]), [1.0, 0.0, 0.0, 0.0])


def test_field_with_x_dependence():
    p = sy.HomogeneousTerm(ex.mul(ex.sin(ex.x(1)), ex.xi(2)), 1.0, 2)
    f = hamiltonian_field(p)
    x1, xi2 = 0.4, 1.5
    assert np.allclose(f([x1, 0.0, 2.0, xi2]),
                       [0.0, np.sin(x1), -np.cos(x1) * xi2, 0.0])


def test_field_rejects_complex_symbol():
    p = sy.HomogeneousTerm(ex.mul(ex.I, ex.xi(1)), 1.0, 1)
    with pytest.raises(NotReal):
        hamiltonian_field(p)


def test_flow_of_laplacian_is_straight_line():
    p = sy.HomogeneousTerm(ex.xi_norm_sq(2), 2.0, 2)
    b = flow(p, [0.0, 0.0, 1.0, 0.0], 1.0)
    end = b.endpoint()
    assert np.allclose(end.x, [2.0, 0.0], atol=1e-8)
    assert np.allclose(end.xi, [1.0, 0.0], atol=1e-8)


def test_flow_conserves_symbol():
    p = sy.HomogeneousTerm(ex.mul(ex.ONE + ex.mul(ex.Const(0.5),
                                                  ex.sin(ex.x(1))),
                                  ex.xi_norm_sq(2)), 2.0, 2)
    b = flow(p, [0.1, 0.2, 1.0, 0.5], 2.0)
    assert b.conservation_drift() < 1e-6


def test_flow_tolerance_halving_converges():
    p = sy.HomogeneousTerm(ex.mul(ex.ONE + ex.mul(ex.Const(0.5),
                                                  ex.sin(ex.x(1))),
                                  ex.xi_norm_sq(2)), 2.0, 2)
    start, T = [0.1, 0.2, 1.0, 0.5], 1.0
    ends = []
    for tol in (1e-6, 1e-8, 1e-10):
        e = flow(p, start, T, tol=tol).endpoint()
        ends.append(np.concatenate([e.x, e.xi]))
    # tighter tolerances agree better with each other
    assert np.linalg.norm(ends[2] - ends[1]) <= \
        np.linalg.norm(ends[1] - ends[0]) + 1e-12


def test_flow_group_law():
    p = sy.HomogeneousTerm(ex.mul(ex.ONE + ex.mul(ex.Const(0.5),
                                                  ex.sin(ex.x(1))),
                                  ex.xi_norm_sq(2)), 2.0, 2)
    start = [0.1, 0.2, 1.0, 0.5]
    e_full = flow(p, start, 1.0).endpoint()
    mid = flow(p, start, 0.5).endpoint()
    e_two = flow(p, list(mid.x) + list(mid.xi), 0.5).endpoint()
    assert np.allclose(e_full.x, e_two.x, atol=1e-6)
    assert np.allclose(e_full.xi, e_two.xi, atol=1e-6)


def test_flow_zero_time():
    p = sy.HomogeneousTerm(ex.xi_norm_sq(2), 2.0, 2)
    b = flow(p, [0.3, 0.4, 1.0, 2.0], 0.0)
    end = b.endpoint()
    assert np.allclose(end.x, [0.3, 0.4])
    assert np.allclose(end.xi, [1.0, 2.0])


def test_flow_stops_when_xi_collapses():
    # along p = x1 xi1 the momentum decays like e^{-t} and crosses the
    # solver floor before T
    p = sy.HomogeneousTerm(ex.mul(ex.x(1), ex.xi(1)), 1.0, 1)
    with pytest.raises(StepFailure):
        flow(p, [1.0, 1.0], 25.0)


def test_wavefront_zero_time_is_identity():
    p = sy.HomogeneousTerm(ex.mul(ex.sin(ex.x(1)), ex.xi(2)), 1.0, 2)
    pts = [[0.0, 0.0, 1.0, 0.5]]
    out = propagate_wavefront(p, pts, 0.0)
    assert np.allclose(list(out[0].x) + list(out[0].xi), pts[0])


def test_wavefront_moves_along_flow():
    p = sy.HomogeneousTerm(ex.mul(ex.sin(ex.x(1)), ex.xi(2)), 1.0, 2)
    out = propagate_wavefront(p, [[0.0, 0.0, 1.0, 0.5]], 0.5)
    # dx/dt = (0, sin x1) = 0 at x1 = 0; dxi1/dt = -cos(x1) xi2
    assert np.allclose(out[0].x, [0.0, 0.0], atol=1e-8)
    assert np.allclose(out[0].xi, [0.75, 0.5], atol=1e-8)


def test_wavefront_rejects_non_characteristic_point():
    p = sy.HomogeneousTerm(ex.xi(1), 1.0, 2)
    with pytest.raises(NotCharacteristic):
        propagate_wavefront(p, [[0.0, 0.0, 1.0, 0.0]], 0.5)


def test_transport_is_translation_for_xi1():
    p = sy.HomogeneousTerm(ex.xi(1), 1.0, 2)
    q = ex.sin(ex.x(1))
    v = transport_solve(p, q, 1.0, [0.3, 0.0, 1.0, 0.0])
    assert v == pytest.approx(np.sin(1.3), abs=1e-8)


def test_transport_zero_time():
    p = sy.HomogeneousTerm(ex.xi(1), 1.0, 2)
    q = ex.sin(ex.x(1))
    v = transport_solve(p, q, 0.0, [0.3, 0.0, 1.0, 0.0])
    assert v == pytest.approx(np.sin(0.3), abs=1e-12)


def test_transport_matches_finite_difference_along_flow():
    # d/dt q(Phi_t(z)) = {p, q}(Phi_t(z)); check at t = 0 against a
    # centered difference of the solved values
    p = sy.HomogeneousTerm(ex.mul(ex.ONE + ex.mul(ex.Const(0.5),
                                                  ex.sin(ex.x(1))),
                                  ex.xi(1)), 1.0, 1)
    q = ex.sin(ex.x(1))
    z = [0.3, 1.0]
    h = 1e-4
    fd = (transport_solve(p, q, h, z) - transport_solve(p, q, -h, z)) / (2 * h)
    f = hamiltonian_field(p)
    dx = f(z)[0]
    exact = np.cos(0.3) * dx
    assert fd == pytest.approx(exact, abs=1e-6)


def test_bicharacteristic_csv(tmp_path):
    p = sy.HomogeneousTerm(ex.xi_norm_sq(2), 2.0, 2)
    b = flow(p, [0.0, 0.0, 1.0, 0.0], 1.0)
    path = tmp_path / "curve.csv"
    b.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("#")
    assert len(lines) == 1 + len(b.times)
    last = [float(v) for v in lines[-1].split(",")]
    assert last[0] == pytest.approx(1.0)
    assert last[1] == pytest.approx(2.0, abs=1e-8)
