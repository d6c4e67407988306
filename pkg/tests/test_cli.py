"""Command line interface: parsing, outputs, exit codes, determinism."""

import math

import pytest

from statpriv.cli import (
    main,
    parse_entry,
    parse_eps,
    parse_technique,
    read_config,
)


def run(tmp_path, *argv):
    return main(list(argv))


def test_parse_entry():
    assert parse_entry("bern:0.3").as_dict == {0.0: 0.7, 1.0: 0.3}
    assert parse_entry("point:2.5").as_dict == {2.5: 1.0}
    got = parse_entry("discrete:0@0.5,2@0.25,3@0.25").as_dict
    assert got == {0.0: 0.5, 2.0: 0.25, 3.0: 0.25}
    for bad in ("bern", "bern:1.5", "gauss:1", "discrete:0@0.5"):
        with pytest.raises(Exception):
            parse_entry(bad)


def test_parse_eps():
    assert parse_eps("0.5") == (0.5,)
    assert parse_eps("0:1:0.5") == (0.0, 0.5, 1.0)
    assert parse_eps("0,0.25,1") == (0.0, 0.25, 1.0)
    assert parse_eps("ln2") == (math.log(2.0),)
    with pytest.raises(Exception):
        parse_eps("1,0.5")  # must increase
    with pytest.raises(Exception):
        parse_eps("0:1:0")


def test_parse_technique():
    assert parse_technique("none") == ("none",)
    assert parse_technique("wor:10,3") == ("wor", 10, 3)
    assert parse_technique("poisson:5,0.5") == ("poisson", 5, 0.5)
    assert parse_technique("wr:4,6") == ("wr", 4, 6)
    for bad in ("wor", "wor:1", "bootstrap:3,1", "poisson:5,2.0"):
        with pytest.raises(Exception):
            parse_technique(bad)


def test_read_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nentry=bern:0.5\nn=2\n\nquery=sum\n")
    assert read_config(str(cfg)) == {"entry": "bern:0.5", "n": "2", "query": "sum"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("entry=bern:0.5\nnot a pair\n")
    with pytest.raises(Exception) as err:
        read_config(str(bad))
    assert "2" in str(err.value)  # names the offending line


def test_curve_command(tmp_path):
    out = tmp_path / "curve.csv"
    code = run(
        tmp_path,
        "curve", "--entry", "bern:0.5", "--n", "2", "--query", "sum",
        "--eps", "0:1:0.5", "--out", str(out),
    )
    assert code == 0
    assert out.read_text() == "epsilon,delta\n0,0.5\n0.5,0.5\n1,0.5\n"


def test_curve_rejects_sampling_technique(tmp_path):
    out = tmp_path / "x.csv"
    code = run(
        tmp_path,
        "curve", "--entry", "bern:0.5", "--n", "2", "--query", "sum",
        "--technique", "wor:2,1", "--eps", "0", "--out", str(out),
    )
    assert code == 1


def test_amplify_without_replacement(tmp_path):
    out = tmp_path / "amp.csv"
    code = run(
        tmp_path,
        "amplify", "--entry", "bern:0.5", "--n", "2", "--query", "sum",
        "--technique", "wor:2,1", "--eps", "0,ln2", "--out", str(out),
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "epsilon,eps_prime,delta_prime"
    assert lines[1] == "0,0,0.5"
    assert lines[2].startswith("0.6931471805599453,0.4054651081081644,0.5")


def test_amplify_poisson(tmp_path):
    out = tmp_path / "poisson.csv"
    code = run(
        tmp_path,
        "amplify", "--entry", "bern:0.5", "--n", "2", "--query", "sum",
        "--technique", "poisson:2,0.5", "--eps", "0,0.5", "--out", str(out),
    )
    assert code == 0


def test_amplify_wr_gate_refusal_exit_code(tmp_path):
    out = tmp_path / "wr.csv"
    code = run(
        tmp_path,
        "amplify", "--entry", "bern:0.3", "--n", "2", "--query", "sum",
        "--technique", "wr:2,2", "--eps", "0,0.5,1", "--out", str(out),
    )
    assert code == 3
    assert not out.exists()


def test_budget_exit_code(tmp_path):
    out = tmp_path / "big.csv"
    code = run(
        tmp_path,
        "curve", "--entry", "bern:0.5", "--n", "40", "--query", "mean",
        "--eps", "0", "--out", str(out), "--budget", "1000",
    )
    assert code == 2


def test_usage_exit_code(tmp_path):
    assert run(tmp_path, "curve", "--entry", "bern:2", "--n", "2",
               "--query", "sum", "--eps", "0", "--out", str(tmp_path / "u.csv")) == 1
    assert run(tmp_path, "frobnicate") == 1


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    out = tmp_path / "cfg.csv"
    cfg.write_text(
        f"entry=bern:0.5\nn=2\nquery=sum\neps=0\nout={out}\n"
    )
    code = run(tmp_path, "curve", "--config", str(cfg))
    assert code == 0
    assert out.read_text() == "epsilon,delta\n0,0.5\n"
    # a flag beats the file value
    out2 = tmp_path / "cfg2.csv"
    code = run(tmp_path, "curve", "--config", str(cfg), "--out", str(out2))
    assert code == 0
    assert out2.read_text() == out.read_text()


def test_config_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("entry=bern:0.5\nnn=2\n")
    assert run(tmp_path, "curve", "--config", str(cfg)) == 1


def test_figures_fig1(tmp_path):
    stem = tmp_path / "fig1.csv"
    code = run(
        tmp_path,
        "figures", "fig1", "--entry", "bern:0.5", "--query", "count",
        "--eps", "0.3", "--out", str(stem),
    )
    assert code == 0
    made = sorted(p.name for p in tmp_path.glob("fig1_eps*.csv"))
    assert made == ["fig1_eps0.3.csv"]
    lines = (tmp_path / "fig1_eps0.3.csv").read_text().splitlines()
    assert lines[0] == "n,delta"
    assert len(lines) == 21  # n = 10..200 step 10


def test_figures_fig2_small(tmp_path):
    stem = tmp_path / "fig2.csv"
    code = run(
        tmp_path,
        "figures", "fig2", "--entry", "bern:0.5", "--query", "count",
        "--n", "20", "--eps", "0.1", "--out", str(stem),
    )
    assert code == 0
    lines = (tmp_path / "fig2_eps0.1.csv").read_text().splitlines()
    assert lines[0] == "lambda,ratio"
    assert len(lines) == 11
    last = lines[-1].split(",")
    assert last[0] == "1" and float(last[1]) == 1.0


def test_verify_clean_and_faulty(tmp_path):
    out = tmp_path / "verify.csv"
    assert run(tmp_path, "verify", "--max-n", "2", "--out", str(out)) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "case,quantity,pipeline,oracle,abs_diff,pass"
    assert all(r.endswith(",1") for r in rows[1:])
    bad = tmp_path / "verify_bad.csv"
    assert run(tmp_path, "verify", "--max-n", "2", "--out", str(bad),
               "--inject-fault") == 3
    assert any(r.endswith(",0") for r in bad.read_text().splitlines()[1:])


def test_compare_poisson(tmp_path):
    out = tmp_path / "cmp.csv"
    code = run(
        tmp_path,
        "compare", "--entry", "bern:0.5", "--n", "2", "--query", "sum",
        "--technique", "poisson:2,0.5", "--eps", "0.5", "--out", str(out),
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "epsilon,delta_classic,delta_sized"
    assert lines[1] == "0.5,0.25,0.25"
    # compare refuses non-poisson techniques
    assert run(
        tmp_path,
        "compare", "--entry", "bern:0.5", "--n", "2", "--query", "sum",
        "--technique", "wor:2,1", "--eps", "0.5", "--out", str(out),
    ) == 1


@pytest.mark.parametrize("argv", [
    ("curve", "--entry", "bern:0.5", "--n", "3", "--query", "sum",
     "--eps", "0:1:0.25"),
    ("amplify", "--entry", "bern:0.3", "--n", "3", "--query", "sum",
     "--technique", "wor:3,2", "--eps", "0,0.5"),
    ("amplify", "--entry", "bern:0.5", "--n", "2", "--query", "sum",
     "--technique", "poisson:2,0.5", "--eps", "0,1"),
    ("compare", "--entry", "bern:0.5", "--n", "2", "--query", "sum",
     "--technique", "poisson:2,0.5", "--eps", "0.25,0.75"),
])
def test_byte_determinism(tmp_path, argv):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert run(tmp_path, *argv, "--out", str(a)) == 0
    assert run(tmp_path, *argv, "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
