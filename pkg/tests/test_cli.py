import json
import subprocess
import sys

import numpy as np
import pytest

from coassoc import cli
from coassoc.errors import ConfigError
from coassoc.groups import Case
from coassoc.solutions import alpha_C


def run(argv, tmp_path, capsys):
    code = cli.main([*argv, "--out", str(tmp_path)])
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_defaults(monkeypatch):
    monkeypatch.delenv(cli.CONFIG_ENV, raising=False)
    cfg = cli.load_config()
    assert cfg.lam == 1.0 and cfg.format == "csv" and cfg.seed == 0
    assert cfg.tolerances == cli.DEFAULT_TOLERANCES


def test_config_precedence(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# sample\nlambda = 2.5\nseed = 9  # trailing\ntol.ode_tol = 1e-8\nformat = json\n")
    env = {cli.CONFIG_ENV: str(conf)}
    cfg = cli.load_config(None, env)
    assert (cfg.lam, cfg.seed, cfg.tol("ode_tol"), cfg.format) == (2.5, 9, 1e-8, "json")
    args = cli.build_parser().parse_args(["verify-g2", "--lambda", "0.5", "--tol.ode_tol", "1e-6"])
    cfg = cli.load_config(args, env)
    assert (cfg.lam, cfg.seed, cfg.tol("ode_tol")) == (0.5, 9, 1e-6)


@pytest.mark.parametrize(
    "text",
    ["colour = red\n", "lambda = big\n", "tol.nonsense = 1\n", "tol.ode_tol = -1\n", "lambda\n", "cone = maybe\n",
     "format = xml\n", "seed = -3\n", "lambda = 0\n"],
)
def test_bad_config_rejected(text, tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text(text)
    with pytest.raises(ConfigError):
        cli.load_config(None, {cli.CONFIG_ENV: str(conf)})


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        cli.load_config(None, {cli.CONFIG_ENV: str(tmp_path / "absent.conf")})


def test_cone_flag_allows_zero_lambda():
    assert cli.RunConfig(lam=0.0, cone=True).params.cone
    with pytest.raises(ConfigError):
        cli.RunConfig(lam=0.0)


def test_config_errors_exit_2(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv(cli.CONFIG_ENV, raising=False)
    assert cli.main(["verify-g2", "--lambda", "0", "--points", "1"]) == cli.EXIT_CONFIG
    assert "lambda = 0" in capsys.readouterr().err
    conf = tmp_path / "bad.conf"
    conf.write_text("colour = red\n")
    monkeypatch.setenv(cli.CONFIG_ENV, str(conf))
    assert cli.main(["verify-g2", "--points", "1"]) == cli.EXIT_CONFIG


def test_csv_format_roundtrip():
    rows = np.array([[0.1, 1 / 3], [np.pi, -2e-17]])
    text = cli.csv_text(Case.SU2, 1.0, (0.5,), "r > 0", ("x5", "r"), [0.0, 1.0], rows)
    lines = text.splitlines()
    assert lines[0] == cli.HEADER
    assert lines[1] == "# SU2,1,0.5,r > 0"
    assert lines[2] == "t,x5,r"
    assert lines[3].split(",")[2] == "0.33333333333333331"
    tab = cli.parse_csv(text)
    assert np.array_equal(tab.rows, rows)
    assert tab.constants == (0.5,) and tab.stratum == "r > 0"
    with pytest.raises(ConfigError):
        cli.parse_csv("a,b\n1,2\n")


def test_trace_su2(tmp_path, capsys):
    code, summary = run(["trace", "su2", "--C", "1"], tmp_path, capsys)
    assert code == 0 and summary["n_components"] == 1
    tab = cli.parse_csv((tmp_path / "trace_SU2.csv").read_text())
    assert tab.rows[0] == pytest.approx([-1.0, alpha_C("SU2", 1.0, 1.0)], abs=1e-15)
    assert (tmp_path / "trace_SU2_summary.json").exists()


def test_trace_so3xso2_zero_level_files(tmp_path, capsys):
    code, summary = run(["trace", "so3xso2", "--C", "0", "--resolution", "64"], tmp_path, capsys)
    assert code == 0 and summary["n_components"] == 3
    assert sorted(summary["written"]) == sorted([f"trace_SO3xSO2_{i}.csv" for i in range(3)] + ["trace_SO3xSO2_summary.json"])


def test_trace_so3_needs_three_constants(tmp_path, capsys):
    assert cli.main(["trace", "so3std", "--C", "1", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    code, summary = run(["trace", "so3std", "--C", "0", "--D", "0", "--E", "0", "--resolution", "32"], tmp_path, capsys)
    assert code == 0 and summary["n_components"] == 1


def test_empty_level_set_is_not_an_error(tmp_path, capsys, monkeypatch):
    def empty(*args, **kwargs):
        raise cli.NoRootError("empty")

    monkeypatch.setattr(cli, "trace_level", empty)
    code, summary = run(["trace", "su2", "--C", "1"], tmp_path, capsys)
    assert code == 0 and summary["n_components"] == 0 and summary["written"] == ["trace_SU2_summary.json"]


def test_classify(capsys):
    assert cli.main(["classify", "so4", "--point", "0,0,0,0,1", "--fiber", "1,0,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["label"] == "S²" and out["dimension"] == 2
    assert cli.main(["classify", "so4", "--point", "0,0,0,1"]) == cli.EXIT_CONFIG


def test_asymptote(tmp_path, capsys):
    code, summary = run(["asymptote", "su2", "--C", "2", "--window", "1,5"], tmp_path, capsys)
    assert code == 0
    tab = cli.parse_csv((tmp_path / "asymptote_SU2.csv").read_text())
    for x5, r in tab.rows:
        assert (1 - 3 * x5) * r**0.75 == pytest.approx(2.0, abs=1e-12)


def test_integrate_irr(tmp_path, capsys):
    code, summary = run(["integrate", "so3irr", "--seed", "3", "--length", "1"], tmp_path, capsys)
    assert code == 0
    assert summary["max_coassoc_residual"] < 1e-7
    assert summary["sweep_checked"] > 0


def test_integrate_explicit_state(tmp_path, capsys):
    code, summary = run(["integrate", "so3std", "--state", "0.6,0.48,0.64,0.3,0.9", "--length", "2"], tmp_path, capsys)
    assert code == 0 and summary["conserved_drift"] < 1e-8
    assert cli.main(["integrate", "so3std", "--state", "0.6,0.48", "--out", str(tmp_path)]) == cli.EXIT_FAIL


def test_coarse_fd_step_is_reported(capsys):
    code = cli.main(["verify-g2", "--points", "5", "--tol.fd_step", "1e-2"])
    out = json.loads(capsys.readouterr().out)
    assert code in (0, 1)
    assert out["fd_step"] == 1e-2
    assert out["max_torsion"] > 0


def test_verify_commands(capsys):
    assert cli.main(["verify-g2", "--points", "5"]) == 0
    assert json.loads(capsys.readouterr().out)["pass"]
    assert cli.main(["verify-lemmas", "--points", "3"]) == 0
    assert json.loads(capsys.readouterr().out)["pass"]


def test_roundtrip_csv_and_json(tmp_path, capsys):
    run(["trace", "su2", "--C", "-1", "--resolution", "64"], tmp_path, capsys)
    run(["integrate", "so3xso2", "--seed", "1", "--length", "1", "--format", "json"], tmp_path, capsys)
    files = [str(tmp_path / "trace_SU2.csv"), str(tmp_path / "integrate_SO3xSO2.json")]
    code, summary = run(["roundtrip", *files], tmp_path / "rt.json", capsys)
    assert code == 0 and summary["pass"]
    assert summary["max_residual"] < 1e-6


def test_roundtrip_detects_tampering(tmp_path, capsys):
    run(["trace", "su2", "--C", "1", "--resolution", "64"], tmp_path, capsys)
    path = tmp_path / "trace_SU2.csv"
    lines = path.read_text().splitlines()
    vals = lines[10].split(",")
    vals[1] = cli.fmt(float(vals[1]) + 1e-3)
    lines[10] = ",".join(vals)
    path.write_text("\n".join(lines) + "\n")
    code, summary = run(["roundtrip", str(path)], tmp_path / "rt.json", capsys)
    assert code == cli.EXIT_FAIL and not summary["pass"]


def test_json_format(tmp_path, capsys):
    code, summary = run(["trace", "so3xso2", "--C", "1", "--format", "json", "--resolution", "64"], tmp_path, capsys)
    doc = json.loads((tmp_path / "trace_SO3xSO2.json").read_text())
    tables = cli.parse_json((tmp_path / "trace_SO3xSO2.json").read_text())
    assert len(tables) == doc["n_components"] == summary["n_components"]
    assert max(cli.table_residual(t) for t in tables) < 1e-9


def test_deterministic_subprocess(tmp_path):
    outs = []
    for i in range(2):
        d = tmp_path / str(i)
        cmd = [sys.executable, "-m", "coassoc.cli", "integrate", "su2", "--seed", "5", "--length", "1", "--out", str(d)]
        res = subprocess.run(cmd, capture_output=True, text=True, check=True)
        outs.append((res.stdout.replace(str(d), ""), (d / "integrate_SU2.csv").read_text()))
    assert outs[0] == outs[1]
