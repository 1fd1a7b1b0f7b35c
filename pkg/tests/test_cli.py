import io
import json
import subprocess
import sys

import pytest

from rci_secrecy import __version__
from rci_secrecy.cli import EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, main
from rci_secrecy.experiments import Table
from rci_secrecy.table_io import emit_csv, format_value, read_csv


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    lines = text.splitlines()
    header = lines[1].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[2:]]


def test_format_value():
    assert format_value(1 / 3) == "0.333333333"
    assert format_value(7) == "7"
    assert format_value(float("nan")) == "nan"
    assert format_value(float("-inf")) == "-inf"
    assert format_value(None) == ""
    assert format_value("rci") == "rci"


def test_empty_table_emits_comment_and_header():
    text = emit_csv(Table(["a", "b"], meta={"seed": 4}))
    lines = text.splitlines()
    assert len(lines) == 2
    assert lines[0].startswith(f"# rci_secrecy {__version__} seed=4 config=")
    assert lines[1] == "a,b"


def test_csv_roundtrip(tmp_path):
    t = Table(["x", "y", "name"], meta={"seed": 1})
    t.add(dict(x=0.1234567891234, y=3, name="p"))
    t.add(dict(x=-2.5e-12, y=4, name="q"))
    path = tmp_path / "t.csv"
    emit_csv(t, str(path))
    comment, cols, data = read_csv(path)
    assert cols == ["x", "y", "name"]
    assert data[0][0] == pytest.approx(0.1234567891234, rel=1e-8)
    assert data[1] == [pytest.approx(-2.5e-12), 4, "q"]
    assert json.loads(comment.split("config=", 1)[1]) == {"seed": 1}


def test_csv_bad_destination(tmp_path):
    with pytest.raises(OSError, match="nope"):
        emit_csv(Table(["a"]), str(tmp_path / "nope" / "t.csv"))


def test_deteq_example():
    code, out, _ = run("deteq", "--beta", "1", "--rho-db", "10", "--xi", "auto")
    assert code == EXIT_OK
    r = rows(out)[0]
    assert float(r["xi"]) == pytest.approx(0.027347, abs=1e-6)
    assert float(r["rate_per_user"]) == pytest.approx(1.41460217, abs=1e-8)
    assert float(r["rate_per_antenna"]) == pytest.approx(1.41460217, abs=1e-8)
    assert "g" in r


def test_deteq_explicit_xi_and_csi():
    code, out, _ = run("deteq", "--beta", "0.5", "--rho-db", "20", "--xi", "0.01",
                       "--tau-sq", "0.1")
    assert code == EXIT_OK and float(rows(out)[0]["xi"]) == 0.01


def test_mc_heavy_load_is_zero():
    code, out, _ = run("mc", "--M", "8", "--K", "20", "--rho-db", "10", "--trials", "10")
    assert code == EXIT_OK
    r = rows(out)[0]
    assert float(r["sum_mean"]) == 0.0 and float(r["per_user"]) == 0.0


def test_mc_deterministic_output():
    argv = ("mc", "--M", "8", "--K", "6", "--rho-db", "15", "--trials", "10", "--seed", "7")
    assert run(*argv)[1] == run(*argv)[1]


def test_mc_empirical_xi():
    code, out, _ = run("mc", "--M", "6", "--K", "6", "--trials", "3", "--xi", "empirical")
    assert code == EXIT_OK and rows(out)[0]["precoder"] == "empirical"


def test_figure_to_file(tmp_path):
    path = tmp_path / "fig2.csv"
    code, out, _ = run("figure", "fig2", "--M", "8", "--trials", "4", "--seed", "7",
                       "--rho-db", "0,10", "--out", str(path))
    assert code == EXIT_OK and out == ""
    comment, cols, data = read_csv(path)
    assert "seed=7" in comment and cols[:2] == ["beta", "rho_db"]
    assert len(data) == 6


def test_figure_tuple_override():
    code, out, _ = run("figure", "fig3", "--M", "16", "--trials", "2", "--rho-db", "10")
    assert code == EXIT_OK and len(rows(out)) == 1


def test_optimize_output():
    code, out, _ = run("optimize", "--beta", "1.2", "--rho-db", "20", "--M", "10")
    r = rows(out)[0]
    assert code == EXIT_OK
    assert float(r["xi_star"]) == pytest.approx(float(r["xi_star_numeric"]), abs=1e-6)
    assert float(r["rho_star_pr_db"]) == pytest.approx(13.8021124, abs=1e-6)


def test_sweep_output():
    code, out, _ = run("sweep", "--M", "8", "--K", "6", "--param", "rho_db",
                       "--values", "0,10,20", "--outputs", "deteq,highsnr")
    assert code == EXIT_OK and [r["rho_db"] for r in rows(out)] == ["0", "10", "20"]


@pytest.mark.parametrize("argv", [
    ("deteq", "--beta", "-1", "--rho-db", "10"),
    ("deteq", "--rho-db", "10"),
    ("deteq", "--beta", "1", "--xi", "banana"),
    ("mc", "--K", "4"),
    ("mc", "--M", "4", "--K", "4", "--tau-sq", "2"),
    ("sweep", "--M", "8", "--K", "6", "--param", "rho_db", "--values", "10,0,5"),
    ("sweep", "--M", "8", "--K", "6", "--param", "rho_db", "--values", "1",
     "--outputs", "none"),
    ("figure", "fig9"),
    ("figure", "fig1", "--M", "4"),
    ("mc", "--bogus"),
])
def test_validation_exit_code(argv):
    code, _, err = run(*argv)
    assert code == EXIT_INVALID


def test_numerical_exit_code(monkeypatch):
    import rci_secrecy.cli as cli
    from rci_secrecy.errors import TooManySkipped

    def fail(*a, **k):
        raise TooManySkipped("5 of 10 trials ill-conditioned")

    monkeypatch.setattr(cli, "ergodic_run", fail)
    code, _, err = run("mc", "--M", "4", "--K", "4", "--trials", "10")
    assert code == EXIT_NUMERICAL and "ill-conditioned" in err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[system]\nM = 6\nK = 6\nrho_db = 20\ntrials = 3\nseed = 11\n")
    code, out, _ = run("mc", "--config", str(cfg), "--rho-db", "0")
    r = rows(out)[0]
    assert code == EXIT_OK and r["M"] == "6" and r["rho_db"] == "0" and "seed=11" in out


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[system]\nM = 6\nantennas = 3\n")
    code, _, err = run("mc", "--config", str(cfg))
    assert code == EXIT_INVALID and "antennas" in err
    cfg.write_text("[extras]\nM = 6\n")
    assert run("mc", "--config", str(cfg))[0] == EXIT_INVALID


def test_config_figure_section(tmp_path):
    cfg = tmp_path / "fig.ini"
    cfg.write_text("[figure]\nbetas = 0.5,1.0\nrho_db = 10\n")
    code, out, _ = run("figure", "fig1", "--config", str(cfg))
    assert code == EXIT_OK and len(rows(out)) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rci_secrecy", "deteq", "--beta", "0.5"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("# rci_secrecy")
