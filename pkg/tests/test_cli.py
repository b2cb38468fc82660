import json

import numpy as np
import pytest

from bettingcs.cli import run


@pytest.fixture
def data(tmp_path):
    xs = np.random.default_rng(0).random(30)
    p = tmp_path / "data.txt"
    p.write_text("\n".join(repr(float(x)) for x in xs) + "\n")
    return p


def _out(tmp_path, name="out.csv"):
    return tmp_path / name


def test_cs_golden_format(data, tmp_path):
    out = _out(tmp_path)
    assert run(["cs", "--method", "hedged", "--alpha", "0.05", "--input", str(data),
                "--output", str(out), "--grid", "100"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,lower,upper"
    assert len(lines) == 31
    assert lines[1] == "1,0,1"
    for line in lines[1:]:
        t, lo, hi = line.split(",")
        assert len(lo.replace(".", "").lstrip("0")) <= 6
        assert 0 <= float(lo) <= float(hi) <= 1


def test_pm_h_golden_values(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("0.5\n" * 3)
    out = _out(tmp_path)
    assert run(["cs", "--method", "pm-h", "-i", str(p), "-o", str(out)]) == 0
    assert out.read_text() == "t,lower,upper\n1,0,1\n2,0,1\n3,0,1\n"


def test_ci_va_eb(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("0.5\n" * 100)
    out = _out(tmp_path)
    assert run(["ci", "--method", "va-eb", "--alpha", "0.05", "-i", str(p), "-o", str(out)]) == 0
    header, row = out.read_text().splitlines()
    assert header == "method,n,lower,upper"
    method, n, lo, hi = row.split(",")
    assert (method, n) == ("va-eb", "100") and float(lo) <= 0.5 <= float(hi)
    assert row == "va-eb,100,0.426222,0.573778"


def test_csv_column_input(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("id,x\n1,0.2\n2,0.4\n3,0.9\n")
    out = _out(tmp_path)
    assert run(["ci", "--method", "hoeffding", "-i", str(p), "--column", "x", "-o", str(out)]) == 0
    assert out.read_text().splitlines()[1].startswith("hoeffding,3,")


def test_population_overrun_exit(tmp_path, capsys):
    p = tmp_path / "d.txt"
    p.write_text("1\n" * 60)
    assert run(["wor-cs", "--N", "50", "-i", str(p)]) == 3
    assert "more observations than population" in capsys.readouterr().err


def test_out_of_range_names_line(tmp_path, capsys):
    p = tmp_path / "d.txt"
    p.write_text("0.1\n0.2\n1.7\n")
    assert run(["cs", "-i", str(p)]) == 3
    assert "line 3" in capsys.readouterr().err
    p.write_text("0.1\nabc\n")
    assert run(["cs", "-i", str(p)]) == 3


def test_usage_errors(data):
    assert run(["cs", "--method", "nope", "-i", str(data)]) == 2
    assert run(["cs", "--N", "50", "-i", str(data)]) == 2
    assert run(["cs", "--alpha", "1.5", "-i", str(data)]) == 2
    assert run(["cs", "--theta", "2", "-i", str(data)]) == 2
    assert run([]) == 2


def test_seed_reproducible(data, tmp_path):
    a, b = _out(tmp_path, "a.csv"), _out(tmp_path, "b.csv")
    for o in (a, b):
        assert run(["ci", "--method", "permuted-eb", "--seed", "3", "--B", "4", "--grid", "200",
                    "-i", str(data), "-o", str(o)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_other_subcommands(data, tmp_path):
    out = _out(tmp_path)
    assert run(["wor-ci", "--N", "100", "-i", str(data), "-o", str(out), "--grid", "100"]) == 0
    assert out.read_text().startswith("method,n,lower,upper\nhedged,30,")
    assert run(["pvalue", "--null-lo", "0.9", "--null-hi", "1", "-i", str(data),
                "-o", str(out), "--grid", "100"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,p,p_running,e" and lines[1] == "0,1,1,1" and len(lines) == 32
    q = tmp_path / "q.txt"
    q.write_text("\n".join(str(v) for v in np.random.default_rng(1).normal(size=50)))
    assert run(["quantile-cs", "-i", str(q), "-o", str(out), "--q-points", "51"]) == 0
    assert out.read_text().splitlines()[0] == "t,lower,upper"


def test_simulate_and_bench(tmp_path):
    out, js = _out(tmp_path), tmp_path / "s.json"
    assert run(["simulate", "--family", "bernoulli", "--param", "p=0.5", "--methods",
                "pm-h,trivial", "--replicates", "5", "--t-max", "50", "-o", str(out),
                "--summary", str(js)]) == 0
    assert out.read_text().splitlines()[0] == "method,miscoverage,std_error,replicates"
    assert json.loads(js.read_text())["config"]["methods"] == ["pm-h", "trivial"]
    assert run(["simulate", "--experiment", "width", "--family", "beta", "--param", "a=2",
                "--param", "b=2", "--methods", "pm-eb", "--replicates", "2", "--t-max", "50",
                "--checkpoints", "10,50", "-o", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "method,t,mean_width,std_error"
    assert run(["bench", "--methods", "hedged", "--t-max", "50", "--grid", "50",
                "-o", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "method,t_max,grid_size,seconds"
    assert run(["simulate", "--family", "bernoulli", "--param", "p=0.5",
                "--methods", "nope"]) == 2
