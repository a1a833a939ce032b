import configparser
import json
import math
from pathlib import Path

import pytest

import BergUrbanikCLI as cli
import determinacy
import selftest
from bernstein import Identity
from errors import ParameterError


@pytest.fixture
def run(tmp_path):
    def _run(*argv):
        return cli.run([*argv, "--log-file", str(tmp_path / "cli.log")])
    return _run


def test_threshold_json(run, capsys):
    assert run("threshold", "--family", "identity") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["lower"] == 2.0 and payload["upper"] == 2.0
    assert payload["sharp"] is True
    assert payload["family"] == {"family": "identity"}


def test_threshold_renders_infinity(run, capsys):
    assert run("threshold", "--family", "log lambda=1") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["lower"] == "inf" and payload["upper"] == "inf"


def test_moments_to_file(run, tmp_path):
    out = tmp_path / "moments.csv"
    assert run("moments", "--family", "identity", "--t", "1", "--nmax", "4", "-o", str(out)) == 0
    assert out.read_text() == "1,1,2,6,24\n"


def test_density_json(run, capsys):
    assert run("density", "--x", "1", "--tol", "1e-8", "--format", "json") == 0
    [row] = json.loads(capsys.readouterr().out)
    assert row["x"] == 1.0
    assert row["value"] == pytest.approx(math.exp(-1.0), abs=1e-7)


def test_density_csv_header(run, tmp_path):
    out = tmp_path / "density.csv"
    assert run("density", "--family", "identity", "--t", "1", "--x", "1", "-o", str(out)) == 0
    header, row = out.read_text().splitlines()
    assert header.split(",") == ["x", "t", "n", "value", "abs_error", "contour_c", "contour_B"]
    x, t, n = row.split(",")[:3]
    assert (float(x), float(t), int(n)) == (1.0, 1.0, 0)


def test_density_csv_is_deterministic(run, tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (first, second):
        assert run("density", "--t", "2", "--x", "0.5,1,2", "-o", str(out)) == 0
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    assert lines[0] == "x,t,n,value,abs_error,contour_c,contour_B"
    assert len(lines) == 4


def test_verdict_round_trip(run, capsys):
    assert run("verdict", "--family", "identity", "--times", "2,2.5") == 0
    payload = json.loads(capsys.readouterr().out)
    parsed = [determinacy.DeterminacyVerdict.from_dict(item) for item in payload]
    assert parsed == [determinacy.verdict(Identity(), 2.0), determinacy.verdict(Identity(), 2.5)]


def test_power_verdict(run, capsys):
    assert run("power-verdict", "--family", "identity", "--t", "2.1") == 0
    [item] = json.loads(capsys.readouterr().out)
    assert item["verdict"] == "indeterminate"


def test_config_file(run, tmp_path, capsys):
    ini = tmp_path / "root.ini"
    ini.write_text("[family]\nfamily = power_shifted\nalpha = 0.5\nm = 0\n\n[run]\nt = 3\n")
    assert run("threshold", "--config", str(ini)) == 0
    assert json.loads(capsys.readouterr().out)["lower"] == pytest.approx(4.0)
    assert run("power-verdict", "--config", str(ini)) == 0
    assert json.loads(capsys.readouterr().out)[0]["verdict"] == "determinate"


def test_missing_config_is_a_parameter_error(run, tmp_path, capsys):
    assert run("threshold", "--config", str(tmp_path / "absent.ini")) == 2
    captured = capsys.readouterr()
    assert captured.out == ""
    assert captured.err.startswith("code=2 op=config detail=")


@pytest.mark.parametrize("body", [
    "[family]\nfamily = log\n\n[run]\nt = two\n",
    "[family]\nfamily = log\n\n[run]\nnmax = 2.5\n",
    "family = log\n",
])
def test_malformed_config_is_a_parameter_error(run, tmp_path, capsys, body):
    ini = tmp_path / "bad.ini"
    ini.write_text(body)
    assert run("threshold", "--config", str(ini)) == 2
    captured = capsys.readouterr()
    assert captured.out == ""
    assert "op=config" in captured.err


def test_config_manager_raises_on_malformed_values(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[run]\ntol = tight\n")
    with pytest.raises(ParameterError):
        cli.ConfigManager(str(ini))
    assert cli.ConfigManager().get_config()["run"]["tol"] > 0


def test_save_config(run, tmp_path):
    saved = tmp_path / "saved.ini"
    out = tmp_path / "moments.csv"
    assert run("moments", "--family", "constant k=2", "--nmax", "3", "-o", str(out),
               "--save-config", str(saved)) == 0
    assert out.read_text() == "1,2,4,8\n"
    parser = configparser.ConfigParser()
    parser.read(saved)
    assert dict(parser["family"]) == {"family": "constant", "k": "2"}
    assert parser["run"]["nmax"] == "3"
    assert parser["run"]["t"] == "1"


def test_unknown_subcommand(run):
    assert run("integrate") == 2


def test_bad_family_reports_on_stderr(run, capsys):
    assert run("threshold", "--family", "bogus") == 2
    err = capsys.readouterr().err
    assert err.startswith("code=2 op=family_from_config detail=")


def test_non_positive_tolerance(run, capsys):
    assert run("density", "--x", "1", "--tol", "0") == 2
    assert "op=run" in capsys.readouterr().err


def test_unknown_format_for_json_only_command(run, capsys):
    assert run("threshold", "--format", "csv") == 2


def test_examples_tables(run, capsys):
    assert run("examples", "--format", "json") == 0
    tables = json.loads(capsys.readouterr().out)
    assert set(tables) == {name for name, _, _ in selftest.examples_tables()}


def test_selftest_subset():
    results = selftest.run_selftest(names=["threshold-table", "composer", "flatness-suite"])
    assert [r.name for r in results] == ["threshold-table", "composer", "flatness-suite"]
    for result in results:
        assert result.passed, result.detail


@pytest.mark.parametrize("name", ["identity", "gauss_laguerre", "log_family", "gamma_ratio_threshold", "sum"])
def test_bundled_configs_load(name):
    path = Path(cli.__file__).parent / "res" / f"{name}.ini"
    config = cli.ConfigManager(str(path)).get_config()
    assert config["run"]["tol"] > 0
    assert cli.bernstein.family_from_config(config["family"]).family != ""


def test_full_selftest():
    results = selftest.run_selftest()
    assert [r.name for r in results] == [name for name, _ in selftest.CRITERIA]
    failed = [f"{r.name}: {r.detail}" for r in results if not r.passed]
    assert not failed
