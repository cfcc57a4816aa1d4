import csv
import json

import pytest

from skewtrich.basespace import TrajectoryForm
from skewtrich.cli import main
from skewtrich.errors import ConfigError, ParamError
from skewtrich.report import Config, parse_config, parse_report, run_report, serialize
from skewtrich.scenarios import build_scenario


def test_example2_params():
    sc = build_scenario("example2")
    assert sc.spaces[0].generator(0.0) == 2.0 and sc.params["mu"] == 3.0
    with pytest.raises(ParamError, match="mu > f\\(0\\)"):
        build_scenario("example2", {"mu": 1.5})


def test_example3_spaces():
    sc = build_scenario("example3", {"n_list": [1, 2, 5, 10]})
    assert len(sc.spaces) == 4
    for space, n in zip(sc.spaces, (1, 2, 5, 10)):
        g = space.generator
        assert g.form is TrajectoryForm.INTERVAL_DECAY
        assert 1 / (2 * n + 1) < g(0.0) < 1 / (2 * n) and g.level == 1 / (2 * n + 1)


def test_unknown_scenario():
    with pytest.raises(ParamError):
        build_scenario("example9")


def test_config_rejects_unknown_fields():
    with pytest.raises(ConfigError) as info:
        parse_config('{"grid": {"preset": "small", "stride": 2}}')
    assert info.value.field == "grid.stride"
    with pytest.raises(ConfigError) as info:
        parse_config('{\n "seed": 1,\n "scenario": }')
    assert info.value.line == 3
    with pytest.raises(ConfigError):
        parse_config('{"analyses": ["axioms", "dance"]}')
    with pytest.raises(ConfigError):
        parse_config('{"schema_version": 99}')


def test_empty_analysis_list():
    r = run_report(parse_config('{"scenario": "example1", "analyses": []}'))
    assert r.passed and r.exit_code == 0 and r.sections == {}
    assert r.scenario["name"] == "example1"


def test_example3_falsification_report():
    cfg = parse_config('{"scenario": {"name": "example3", "params": {"n_list": [1, 2, 5, 10]}},'
                       ' "analyses": ["falsify"], "probes": "basis"}')
    r = run_report(cfg)
    sec = r.sections["falsify"]
    assert sec["verdict"] == "falsified" and len(sec["certificates"]) == 4


def test_report_round_trip_and_csv(tmp_path):
    cfg = parse_config('{"scenario": "example2", "grid": {"preset": "small"}, "analyses": ["axioms", "verify"]}')
    out, table = tmp_path / "r.json", tmp_path / "m.csv"
    r = run_report(cfg, out=str(out), csv_path=str(table))
    assert parse_report(serialize(r)) == r
    assert parse_report(out.read_text()) == r
    rows = list(csv.reader(table.open()))
    assert rows[0] == ["t", "s", "t0", "probe_id", "label", "log_margin"] and len(rows) > 1
    assert not list(tmp_path.glob(".tmp-*"))


def test_numeric_errors_are_embedded():
    # the "stable" family carries a growing law, so the U1 tail cannot be bounded
    params = {"generator": {"form": "constant", "c": 1.0},
              "laws": [{"kind": "+x"}, {"kind": "-x"}, {"kind": "-x(0)+x"}],
              "families": [[3], [1], [2]]}
    cfg = Config(scenario="custom", params=params, analyses=["integrals"], grid={"preset": "small"},
                 options={"certificate": {"N": [2.0] * 3, "nu": [1.0] * 3, "mode": "global"}})
    r = run_report(cfg)
    err = r.sections["integrals"]["error"]
    assert err["type"] == "TailUnboundedError" and err["numeric"]
    assert r.exit_code == 3


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "a.json"
    assert main(["axioms", "--scenario", "example1", "--grid-preset", "small", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["sections"]["axioms"]["pass"] is True
    cert = tmp_path / "c.json"
    cert.write_text(json.dumps({"scenario": "example2", "grid": {"preset": "small"}, "probes": "basis",
                                "options": {"certificate": {"N": [1.000000001] * 3, "nu": [2.0, 1.5, 1.0]}}}))
    assert main(["verify", "--config", str(cert), "--out", str(out)]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"colour": 1}')
    assert main(["compat", "--config", str(bad)]) == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
    capsys.readouterr()


def test_cli_stdout(capsys):
    assert main(["axioms", "--scenario", "example1", "--grid-preset", "small", "--seed", "3"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["config"]["seed"] == 3 and doc["schema_version"] == 1
