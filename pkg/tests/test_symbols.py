import numpy as np
import pytest

from psido import expr as ex
from psido import symbols as sy
from psido.errors import HomogeneityError


def _eval_term(term, x, xi):
    return ex.evaluate(term.expr, list(x) + list(xi))


def test_multi_index_basics():
    mi = sy.MultiIndex([2, 1])
    assert mi.order == 3
    assert mi.factorial == 2
    idxs = list(sy.multi_indices(2, 2))
    # all alpha with |alpha| <= 2 in two variables
    assert len(idxs) == 6


def test_d_xi_of_xi_is_minus_i():
    t = sy.HomogeneousTerm(ex.xi(1), 1.0, 1)
    d = sy.differentiate(t, "xi", [1])
    assert d.degree == 0.0
    assert _eval_term(d, [0.0], [3.0]) == pytest.approx(-1j)


def test_d_xi_of_xi_norm():
    # D_xi1 |xi| = (1/i) xi1 / |xi|
    t = sy.HomogeneousTerm(ex.xi_norm(2), 1.0, 2)
    d = sy.differentiate(t, "xi", [1, 0])
    assert d.degree == 0.0
    v = _eval_term(d, [0.0, 0.0], [3.0, 4.0])
    assert v == pytest.approx(-1j * 3.0 / 5.0)


def test_partial_x_keeps_degree():
    t = sy.HomogeneousTerm(ex.mul(ex.sin(ex.x(1)), ex.xi(2), ex.xi(2)),
                           2.0, 2)
    d = sy.differentiate(t, "x", [1, 0], convention="plain")
    assert d.degree == 2.0
    v = _eval_term(d, [0.7, 0.0], [0.0, 3.0])
    assert v == pytest.approx(np.cos(0.7) * 9.0)


def test_check_homogeneity_accepts_true_degree():
    t = sy.HomogeneousTerm(ex.xi_norm_sq(2), 2.0, 2)
    assert sy.check_homogeneity(t) < 1e-9


def test_check_homogeneity_flags_wrong_degree():
    t = sy.HomogeneousTerm(ex.xi_norm_sq(2), 1.0, 2)
    assert sy.check_homogeneity(t) > 1e-3


def test_term_validation_rejects_inhomogeneous():
    with pytest.raises(HomogeneityError):
        sy.HomogeneousTerm.checked(ex.ONE + ex.xi(1), 1.0, 1)


def test_is_zero():
    a = sy.HomogeneousTerm(
        ex.mul(ex.sin(ex.x(1)), ex.sin(ex.x(1)))
        + ex.mul(ex.cos(ex.x(1)), ex.cos(ex.x(1))) - ex.ONE,
        0.0, 1)
    assert sy.is_zero(a.scale(1.0).mul(
        sy.HomogeneousTerm(ex.xi(1), 1.0, 1)))
    b = sy.HomogeneousTerm(ex.xi(1), 1.0, 1)
    assert not sy.is_zero(b)


def test_conjugate():
    t = sy.HomogeneousTerm(ex.mul(ex.I, ex.xi(1)), 1.0, 1)
    c = sy.conjugate(t)
    assert _eval_term(c, [0.0], [2.0]) == pytest.approx(-2j)


def test_term_arithmetic():
    t = sy.HomogeneousTerm(ex.xi(1), 1.0, 2)
    s = t + t
    assert _eval_term(s, [0, 0], [3.0, 0.0]) == pytest.approx(6.0)
    assert _eval_term(t.scale(-2.0), [0, 0], [3.0, 0.0]) == pytest.approx(-6.0)
    p = t.mul(sy.HomogeneousTerm(ex.xi(2), 1.0, 2))
    assert p.degree == 2.0
    assert _eval_term(p, [0, 0], [3.0, 4.0]) == pytest.approx(12.0)


def test_classical_symbol_container():
    p = sy.ClassicalSymbol.single(ex.xi_norm_sq(2), 2.0, 2)
    assert p.degrees() == [2.0]
    q = sy.ClassicalSymbol.identity(2)
    assert q.term_at(0.0) is not None
    s = p + q
    assert set(s.degrees()) == {2.0, 0.0}
    assert isinstance(s.render(), str)


def test_make_lambda_s_trivial_cases():
    lam0 = sy.make_lambda_s(0.0, 2, 4)
    assert lam0.degrees() == [0.0]
    assert _eval_term(lam0.term_at(0.0), [0, 0], [3.0, 4.0]) == \
        pytest.approx(1.0)

    lam2 = sy.make_lambda_s(2.0, 2, 4)
    total = sum(_eval_term(lam2.term_at(d), [0, 0], [3.0, 4.0])
                for d in lam2.degrees())
    assert total == pytest.approx(26.0)  # 1 + |xi|^2 at |xi| = 5


def test_make_lambda_s_expansion_accuracy():
    # partial sums of (1 + |xi|^2)^{-1} at |xi| = 4: the N-term truncation
    # error is bounded by the first dropped term, below 4^{-8}
    lam = sy.make_lambda_s(-2.0, 2, 6)
    xi = [4.0, 0.0]
    total = sum(_eval_term(lam.term_at(d), [0, 0], xi)
                for d in lam.degrees())
    exact = 1.0 / 17.0
    assert abs(total - exact) < 4.0 ** (-8)


def test_diffeo_validation():
    fwd = [ex.mul(ex.Const(2.0), ex.x(1))]
    inv = [ex.mul(ex.Const(0.5), ex.x(1))]
    d = sy.Diffeo(fwd, inv)
    J = d.jacobian()
    assert ex.evaluate(J[0][0], [1.3, 0.0]) == pytest.approx(2.0)
    with pytest.raises(Exception):
        sy.Diffeo(fwd, fwd, check=True)
