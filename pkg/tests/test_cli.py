import csv
import io

import pytest

from codedcache import cli
from codedcache.scenario import CURVE_COLUMNS, TRIAL_COLUMNS, Scenario, ScenarioError, parse_config


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_man_rate_curve(capsys):
    code, out, _ = run(capsys, "rate-curve", "--scheme", "man", "-p", "N=4", "-p", "K=4")
    assert code == 0
    assert out.splitlines()[0] == ",".join(CURVE_COLUMNS)
    got = [r["formula_rate_exact"] for r in rows(out)]
    assert got == ["4", "3/2", "2/3", "1/4", "0"]


def test_su_forced_partitions(capsys, tmp_path):
    cfg = tmp_path / "su.cfg"
    cfg.write_text(
        "# level example\nscheme=su\nlevels_N=100,500,1000\nlevels_users=100,50,5\n"
        "M=100\npartitions=0|0,1,2|0,1\n"
    )
    code, out, _ = run(capsys, "rate-curve", "--config", str(cfg))
    assert code == 0
    values = {r["scheme"]: r["formula_rate_exact"] for r in rows(out)}
    assert values == {"su": "10", "su[I=0]": "55", "su[I=0,1,2]": "15", "su[I=0,1]": "10"}


def test_usage_errors_exit_two(capsys):
    code, _, err = run(capsys, "rate-curve", "--scheme", "man", "-p", "N=4", "-p", "K=4", "-p", "M=")
    assert code == 2 and err.startswith("error:")
    assert run(capsys, "rate-curve", "--scheme", "nope")[0] == 2
    assert run(capsys, "rate-curve", "--scheme", "pcd", "-p", "N=4")[0] == 2
    assert run(capsys, "bogus")[0] == 2


def test_simulate_two_user(capsys):
    code, out, err = run(capsys, "simulate", "--scheme", "man", "-p", "N=2", "-p", "K=2", "-p", "M=1",
                         "--file-size", "1024")
    assert code == 0
    (row,) = rows(out)
    assert list(row) == list(TRIAL_COLUMNS)
    assert row["measured_rate_exact"] == "1/2" and row["decode_failures"] == "0"
    assert "mean=0.5" in err


def test_decode_failure_exits_one(capsys):
    code, _, err = run(capsys, "simulate", "--scheme", "man", "-p", "N=3", "-p", "K=3", "-p", "M=1",
                       "--fault-inject")
    assert code == 1 and "decode failure" in err


def test_output_file_and_determinism(capsys, tmp_path):
    args = ["simulate", "--scheme", "multiaccess", "-p", "N=5", "-p", "K=5", "-p", "d=2",
            "-p", "demand=stochastic", "--trials", "3", "--seed", "11"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + ["--out", str(a), "--workers", "1"]) == 0
    assert cli.main(args + ["--out", str(b), "--workers", "3"]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_sweep_reports_means(capsys):
    code, out, _ = run(capsys, "sweep", "--scheme", "pam", "-p", "N=16", "-p", "K=16", "-p", "d=4",
                       "-p", "rho=0.25", "-p", "t0=0.1", "-p", "M=1,8", "--trials", "4")
    assert code == 0
    r = rows(out)
    assert [x["M"] for x in r] == ["1", "8"] and all(x["std_err"] for x in r)


def test_config_parsing():
    assert parse_config("a=1\n\n# c\nb = x y # tail\n") == {"a": "1", "b": "x y"}
    with pytest.raises(ScenarioError):
        parse_config("oops")
    with pytest.raises(ScenarioError):
        Scenario("man", {}, seed=-1)
