import numpy as np
import pytest

from psido import expr as ex
from psido.cli import main
from psido.errors import DegreeOrderError, HomogeneityError
from psido.parser import parse_expr, parse_symbol_document, parse_symbol_text
from psido.quantize import GridFunction

LAPLACIAN_DOC = """symbol P {
  dim=2 order=2 trunc=4
  term 2: "xi1^2 + xi2^2"
}
"""

VARIABLE_DOC = """symbol P {
  dim=2 order=2 trunc=4
  term 2: "(1 + 0.5*sin(x1)) * (xi1^2 + xi2^2)"
}
"""

FIRST_ORDER_DOC = """symbol Q {
  dim=1 order=1 trunc=3
  term 1: "xi1"
  term 0: "x1"
}
"""


def test_parse_expr_precedence():
    e = parse_expr("1 + 2*xi1^2", 1)
    assert ex.evaluate(e, [0.0, 3.0]) == pytest.approx(19.0)


def test_parse_expr_power_right_associative():
    e = parse_expr("xi1^2^3", 1)
    assert ex.evaluate(e, [0.0, 2.0]) == pytest.approx(256.0)


def test_parse_expr_xi_norm_sugar():
    e = parse_expr("|xi|", 2)
    assert ex.evaluate(e, [0.0, 0.0, 3.0, 4.0]) == pytest.approx(5.0)


def test_parse_expr_imaginary_unit():
    e = parse_expr("i*xi1", 1)
    assert ex.evaluate(e, [0.0, 2.0]) == pytest.approx(2.0j)


def test_parse_expr_reports_position():
    with pytest.raises(SyntaxError, match="position 6"):
        parse_expr("xi1 + @", 1)


def test_parse_expr_rejects_out_of_range_variable():
    with pytest.raises(SyntaxError):
        parse_expr("xi3", 2)


def test_parse_symbol_document():
    doc = parse_symbol_document(VARIABLE_DOC)
    assert doc.name == "P"
    assert doc.dimension == 2
    assert doc.leading_order == 2.0
    assert doc.truncation_order == 4


def test_parse_symbol_text_validates_homogeneity():
    bad = 'symbol P {\n  dim=1 order=1 trunc=2\n  term 1: "xi1 + 1"\n}\n'
    with pytest.raises(HomogeneityError):
        parse_symbol_text(bad)


def test_parse_symbol_text_requires_decreasing_degrees():
    bad = ('symbol P {\n  dim=1 order=1 trunc=3\n'
           '  term 0: "x1"\n  term 1: "xi1"\n}\n')
    with pytest.raises(DegreeOrderError):
        parse_symbol_text(bad)


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_cli_compose(tmp_path, capsys):
    p = _write(tmp_path / "p.sym", LAPLACIAN_DOC)
    q = _write(tmp_path / "q.sym", FIRST_ORDER_DOC.replace("dim=1", "dim=2")
               .replace('term 1: "xi1"', 'term 1: "xi1"')
               .replace('term 0: "x1"', 'term 0: "x1"'))
    rc = main(["compose", p, q])
    assert rc == 0
    assert capsys.readouterr().out.strip()


def test_cli_adjoint_and_commutator(tmp_path, capsys):
    p = _write(tmp_path / "p.sym", VARIABLE_DOC)
    assert main(["adjoint", p]) == 0
    assert main(["commutator", p, p]) == 0
    capsys.readouterr()


def test_cli_ellipticity(tmp_path, capsys):
    p = _write(tmp_path / "p.sym", LAPLACIAN_DOC)
    assert main(["ellipticity", p]) == 0
    out = capsys.readouterr().out
    assert "verdict: elliptic" in out


def test_cli_parametrix_not_elliptic_exits_one(tmp_path, capsys):
    wave = ('symbol W {\n  dim=2 order=2 trunc=4\n'
            '  term 2: "xi1^2 - xi2^2"\n}\n')
    p = _write(tmp_path / "w.sym", wave)
    assert main(["parametrix", p, "--order", "2"]) == 1


def test_cli_parse_error_exits_one(tmp_path):
    p = _write(tmp_path / "bad.sym", "symbol P { this is not valid }")
    assert main(["adjoint", p]) == 1


def test_cli_flow_writes_csv(tmp_path, capsys):
    p = _write(tmp_path / "p.sym", LAPLACIAN_DOC)
    out = tmp_path / "curve.csv"
    rc = main(["flow", p, "--start", "0,0,1,0", "--time", "1.0",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    last = [float(v) for v in lines[-1].split(",")]
    assert last[1] == pytest.approx(2.0, abs=1e-8)
    capsys.readouterr()


def test_cli_apply_and_sobolev(tmp_path, capsys):
    p = _write(tmp_path / "p.sym", LAPLACIAN_DOC)
    grid = tmp_path / "u.csv"
    GridFunction.single_mode(2, 16, [3, 4]).write_csv(grid)
    out = tmp_path / "v.csv"
    assert main(["apply", p, "--grid", str(grid), "--out", str(out)]) == 0
    v = GridFunction.read_csv(out)
    u = GridFunction.single_mode(2, 16, [3, 4])
    assert np.allclose(v.values, 25.0 * u.values, atol=1e-8)
    capsys.readouterr()
    assert main(["sobolev", "--grid", str(grid), "--s", "1.0"]) == 0
    outtext = capsys.readouterr().out
    val = float(outtext.split("sobolev_norm: ")[1])
    assert val == pytest.approx(np.sqrt(26.0))


def test_cli_oscint(tmp_path, capsys):
    rc = main(["oscint", "--amp", "1", "--test", "exp(0 - 2*x1^2)",
               "--method", "parts"])
    assert rc == 0
    val = float(capsys.readouterr().out.split("value: ")[1].split(",")[0])
    assert val == pytest.approx(2.0 * np.pi, abs=1e-4)


def test_cli_index(capsys):
    assert main(["index", "--aplus", "1", "--aminus",
                 "cos(x1) + i*sin(x1)"]) == 0
    out = capsys.readouterr().out
    assert "numerical_index: 1" in out


def test_cli_hodge_betti(capsys):
    assert main(["hodge", "betti", "--n", "2", "--j", "1"]) == 0
    assert "betti: 2" in capsys.readouterr().out


def test_cli_hodge_parametrix_check(capsys):
    assert main(["hodge", "parametrix-check", "--n", "2", "--j", "1",
                 "--trials", "5"]) == 0
    assert "max_residual" in capsys.readouterr().out


def test_cli_missing_file_exits_one(tmp_path):
    assert main(["adjoint", str(tmp_path / "missing.sym")]) == 1
