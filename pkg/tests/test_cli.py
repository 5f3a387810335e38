import csv
import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from multisle import __version__
from multisle.cli import ConfigError, build_config, load_schema, main
from multisle.experiments import DEFAULTS, sub_seed

ROOT = Path(__file__).resolve().parents[1]


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_cfg(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


# --------------------------------------------------------------- schema


def test_schema_is_valid_draft():
    schema = load_schema()
    jsonschema.Draft202012Validator.check_schema(schema)
    assert schema["additionalProperties"] is False


def test_docs_schema_matches_package_copy():
    doc = ROOT / "docs" / "experiment_config.schema.json"
    assert json.loads(doc.read_text()) == load_schema()


@pytest.mark.parametrize("kind", sorted(DEFAULTS))
def test_defaults_validate(kind):
    cfg = build_config(kind)
    assert cfg["seed"] == 0 and cfg["jobs"] == 1


@pytest.mark.parametrize("bad", [
    {"colour": 1},
    {"seed": -1},
    {"seed": 2**64},
    {"N": [0]},
    {"schema_version": "2.0"},
    {"n_configs": "many"},
])
def test_schema_rejects(bad):
    with pytest.raises(ConfigError):
        build_config("gff", bad)


def test_config_for_other_experiment_rejected():
    with pytest.raises(ConfigError, match="not 'gff'"):
        build_config("gff", {"experiment": "bounds"})


def test_precedence_defaults_file_flags():
    cfg = build_config("terminal", {"samples": 10, "seed": 4}, {"seed": 5, "samples": None})
    assert cfg["samples"] == 10 and cfg["seed"] == 5
    assert cfg["batch_size"] == DEFAULTS["terminal"]["batch_size"]


def test_sub_seed_is_stable():
    assert sub_seed(0, 1) == sub_seed(0, 1)
    assert sub_seed(0, 1) != sub_seed(0, 2) != sub_seed(1, 1)
    assert 0 <= sub_seed(2**64 - 1, 7) < 2**63


# --------------------------------------------------------------- exit codes and outputs


def test_gff_defaults_exit_zero(tmp_path, capsys):
    assert main(["gff", "--out", str(tmp_path), "-q"]) == 0
    r = rows(tmp_path / "gff.csv")
    assert r and all(x["pass"] == "1" for x in r)
    assert list(r[0]) == ["config_id", "N", "check_name", "lhs", "rhs", "margin", "pass"]
    doc = json.loads((tmp_path / "gff.json").read_text())
    assert doc["experiment"] == "gff" and doc["error"] is None
    assert doc["summary"]["failures"] == []
    assert "jobs" not in doc["config"] and "out" not in doc["config"]
    assert capsys.readouterr().out == ""


def test_identities_one_link(tmp_path):
    cfg = write_cfg(tmp_path, {"experiment": "identities", "N": [1], "n_configs": 20})
    assert main(["identities", "--config", cfg, "--out", str(tmp_path), "-q"]) == 0


def test_impossible_tolerance_exits_one(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"N": [3], "n_configs": 10, "tol": 1e-20})
    assert main(["identities", "--config", cfg, "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "first failing row" in err


def test_invalid_config_exits_two(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"N": [3], "colour": "blue"})
    assert main(["gff", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "colour" in capsys.readouterr().err
    assert not (tmp_path / "gff.csv").exists()
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["gff", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_runtime_error_exits_two_and_writes_partial(tmp_path):
    # kappa other than 3 is outside the cascade estimator for two links
    cfg = write_cfg(tmp_path, {"points": [[0.0, 1.0, 2.0, 3.0]], "kappa": 2.0, "samples": 2, "batch_size": 2})
    assert main(["cascade", "--config", cfg, "--out", str(tmp_path), "-q"]) == 2
    doc = json.loads((tmp_path / "cascade.json").read_text())
    assert "kappa" in doc["error"]
    assert (tmp_path / "cascade.csv").exists()


def test_bounds_single_point(tmp_path):
    cfg = write_cfg(tmp_path, {"N": [], "points": [[0.0, 1.0, 2.0, 3.0]]})
    assert main(["bounds", "--config", cfg, "--out", str(tmp_path), "-q"]) == 0
    r = {x["check_name"]: x for x in rows(tmp_path / "bounds.csv")}
    lower = r["ising_lower_abs"]
    upper = r["ising_upper_abs"]
    assert float(lower["margin"]) == pytest.approx(13 / 12 - 4 / (3 * 2**0.5))
    assert float(upper["margin"]) == pytest.approx(4 - 13 / 12)


def test_terminal_one_link(tmp_path):
    cfg = write_cfg(tmp_path, {"points": [[0.0, 1.0]], "samples": 4, "batch_size": 4})
    assert main(["terminal", "--config", cfg, "--out", str(tmp_path), "-q"]) == 0
    r = {x["check_name"]: x for x in rows(tmp_path / "terminal.csv")}
    assert float(r["p_terminal_2"]["lhs"]) == 1.0
    assert (tmp_path / "terminal_samples_0.csv").exists()


def test_out_dir_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("OUT_DIR", str(tmp_path / "env"))
    cfg = write_cfg(tmp_path, {"N": [1], "n_configs": 5, "out": str(tmp_path / "cfg")})
    assert main(["gff", "--config", cfg, "-q"]) == 0
    assert (tmp_path / "env" / "gff.csv").exists()
    assert main(["gff", "--config", cfg, "-q", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "gff.csv").exists()
    monkeypatch.delenv("OUT_DIR")
    assert main(["gff", "--config", cfg, "-q"]) == 0
    assert (tmp_path / "cfg" / "gff.csv").exists()


def test_floats_written_round_trip(tmp_path):
    cfg = write_cfg(tmp_path, {"N": [2], "n_configs": 5})
    main(["gff", "--config", cfg, "--out", str(tmp_path), "-q"])
    for x in rows(tmp_path / "gff.csv"):
        v = float(x["lhs"])
        assert repr(v) == repr(float(format(v, ".17g")))
        assert len(x["lhs"].replace("-", "").replace(".", "").lstrip("0")) <= 17


def test_same_seed_same_bytes(tmp_path):
    cfg = write_cfg(tmp_path, {"points": [[0.0, 2.0, 3.0, 6.0]], "samples": 6, "batch_size": 3})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["terminal", "--config", cfg, "--seed", "0x11", "--out", str(a), "-q"]) in (0, 1)
    assert main(["terminal", "--config", cfg, "--seed", "17", "--jobs", "2", "--out", str(b), "-q"]) in (0, 1)
    for name in ("terminal.csv", "terminal.json", "terminal_samples_0.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_ising_flags(tmp_path):
    assert main(["ising", "-L", "8", "-L", "12", "--samples", "20", "--seed", "3",
                 "--out", str(tmp_path), "-q"]) in (0, 1)
    assert (tmp_path / "ising_L8.csv").exists() and (tmp_path / "ising_L12.csv").exists()
    doc = json.loads((tmp_path / "ising.json").read_text())
    assert doc["config"]["L"] == [8, 12] and doc["config"]["samples"] == 20


@pytest.mark.parametrize("argv", [["gff", "--seed", "-1"], ["gff", "--jobs", "0"], ["terminal", "--dt", "0"],
                                  ["bogus"], ["gff", "-L", "8"]])
def test_bad_flags(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "multisle.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
