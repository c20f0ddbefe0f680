import json

import numpy as np
import pytest

from pilotwave.cli import EXIT_CONFIG, EXIT_GUARD, EXIT_OK, parse_kv_lines, run
from pilotwave.errors import ConfigError


def summary(path):
    return json.loads((path / "summary.json").read_text())


@pytest.fixture(scope="module")
def double_slit_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("ds")
    outs = []
    for name in ("a", "b"):
        assert run(["double-slit", "--seed", "42", "--n", "2000", "--out", str(base / name)]) == EXIT_OK
        outs.append(base / name)
    return outs


class TestDoubleSlit:
    def test_files_and_flags(self, double_slit_runs):
        out = double_slit_runs[0]
        s = summary(out)
        assert s["flags"]["interference_present"] is True
        assert s["flags"]["no_axis_crossings"] is True
        for name in s["files"]:
            assert (out / name).is_file()
        assert {"screen_A.csv", "screen_B.csv", "screen_C.csv", "cross_term.csv",
                "trajectories.csv"} <= set(s["files"])
        assert s["config"]["seed"] == 42

    def test_byte_identical(self, double_slit_runs):
        a, b = double_slit_runs
        for f in sorted(a.glob("*.csv")):
            assert f.read_bytes() == (b / f.name).read_bytes()

    def test_csv_dialect(self, double_slit_runs):
        raw = (double_slit_runs[0] / "screen_C.csv").read_bytes()
        assert b"\r" not in raw
        assert raw.splitlines()[0] == b"x,weight"

    def test_single_slit_cross_term_zero(self, tmp_path):
        assert run(["double-slit", "-p", "open=slit1", "--out", str(tmp_path / "o")]) == EXIT_OK
        d = np.genfromtxt(tmp_path / "o" / "cross_term.csv", delimiter=",", names=True)
        assert not np.any(d["cross_term"])
        assert summary(tmp_path / "o")["flags"]["interference_present"] is False


def test_equivariance(tmp_path):
    assert run(["equivariance", "--n", "3000", "--out", str(tmp_path / "e")]) == EXIT_OK
    s = summary(tmp_path / "e")
    assert s["flags"] == {"equivariance_pass": True, "negative_control_fails": True}


def test_pointer(tmp_path):
    assert run(["pointer", "--n", "2000", "--seed", "3", "--out", str(tmp_path / "p")]) == EXIT_OK
    s = summary(tmp_path / "p")
    assert s["flags"]["born_weights"] and s["flags"]["fapp_decoherent"]
    assert s["results"]["branch_mass_1"] == pytest.approx(0.3, abs=1e-8)


def test_no_signaling(tmp_path):
    out = tmp_path / "ns"
    assert run(["no-signaling", "-p", "n_states=50", "-p", "mc_n=2000", "--out", str(out)]) == EXIT_OK
    audit = json.loads((out / "audit.json").read_text())
    assert audit["max_discrepancy"] < 1e-12
    assert len(audit["angle_sweep"]) == 24
    header = (out / "monte_carlo.csv").read_text().splitlines()[0]
    assert header == "left_axis,right_axis,cell,count,expected"


def test_bell(tmp_path):
    assert run(["bell", "--out", str(tmp_path / "b")]) == EXIT_OK
    rep = json.loads((tmp_path / "b" / "report.json").read_text())
    assert rep["verdict"] == "VIOLATION"
    assert rep["quantum_sum_analytic"] == pytest.approx(0.75, abs=1e-12)


@pytest.mark.parametrize("fmt, expect, absent", [("json", "report.json", "pair_counts.csv"),
                                                 ("csv", "pair_counts.csv", "report.json")])
def test_format_selection(tmp_path, fmt, expect, absent):
    out = tmp_path / fmt
    assert run(["bell", "--n", "100", "--format", fmt, "--out", str(out)]) == EXIT_OK
    assert (out / expect).exists() and not (out / absent).exists()
    assert (out / "summary.json").exists()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# bell run\nn = 500\nseed = 9\nangles_deg = 0,90,180\n")
    out = tmp_path / "o"
    assert run(["bell", "--config", str(cfg), "--seed", "10", "--out", str(out)]) == EXIT_OK
    s = summary(out)
    assert s["config"]["seed"] == 10
    assert s["config"]["params"]["n"] == 500
    assert s["results"]["verdict"] == "NO-VIOLATION"


def test_json_key_order_stable(tmp_path):
    run(["bell", "--n", "100", "--out", str(tmp_path / "o")])
    text = (tmp_path / "o" / "report.json").read_text()
    data = json.loads(text)
    assert list(data) == sorted(data)


@pytest.mark.parametrize("argv", [
    ["bell", "-p", "bogus=1"],
    ["bell", "-p", "n=abc"],
    ["bell", "-p", "angles_deg=0,1"],
    ["bell", "--seed", "-1"],
    ["bell", "--config", "/nonexistent/cfg"],
    ["pointer", "-p", "points=1000"],
    ["pointer", "-p", "c1_sq=1.5"],
    ["equivariance", "-p", "dt=0"],
    ["double-slit", "-p", "open=slit3"],
    ["nonsense"],
])
def test_config_errors_exit_2(tmp_path, argv):
    out = tmp_path / "o"
    assert run(argv + ["--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()
    assert not list(tmp_path.glob(".pilotwave-*"))


def test_guard_failure_exit_3(tmp_path):
    out = tmp_path / "o"
    argv = ["pointer", "-p", "lower=-12", "-p", "upper=12", "-p", "points=256", "--out", str(out)]
    assert run(argv) == EXIT_GUARD
    assert not out.exists()
    assert not list(tmp_path.glob(".pilotwave-*"))


def test_rerun_replaces_previous_output(tmp_path):
    out = tmp_path / "o"
    run(["bell", "--n", "100", "--out", str(out)])
    run(["bell", "--n", "100", "--format", "json", "--out", str(out)])
    assert not (out / "pair_counts.csv").exists()


def test_refuses_foreign_directory(tmp_path):
    out = tmp_path / "o"
    out.mkdir()
    (out / "precious.txt").write_text("keep")
    assert run(["bell", "--n", "100", "--out", str(out)]) == EXIT_CONFIG
    assert (out / "precious.txt").read_text() == "keep"


def test_parse_kv_lines():
    assert parse_kv_lines("a=1\n\n# c\nb-c = x # trailing\n") == {"a": "1", "b_c": "x"}
    with pytest.raises(ConfigError):
        parse_kv_lines("novalue")
