from __future__ import annotations

import json

import pytest

from stablesde import cli
from stablesde.experiments import ANCHOR_BETA_NEGATIVE, ANCHORS, EXPERIMENTS, Verdict, preset_config, run_experiment
from stablesde.report import emit_report, verdict_csv, verdict_json

QUICK_FAST = ("validate-sampler", "strong-law", "counterexample", "simulate")
ALL_ANCHORS = set(ANCHORS.values()) | {ANCHOR_BETA_NEGATIVE}


def run(argv, capsys=None):
    code = cli.main(argv)
    out = capsys.readouterr().out if capsys else ""
    return code, out


@pytest.mark.parametrize("exp", QUICK_FAST)
def test_quick_runs_write_reports(exp, tmp_path, capsys):
    code, out = run([exp, "--quick", "--out", str(tmp_path)], capsys)
    assert code == 0, out
    d = json.loads((tmp_path / f"{exp}.json").read_text())
    assert d["experiment"] == exp and d["schema_version"] == 1
    assert "timing" not in json.dumps(d)
    for c in d["claims"]:
        assert f"criterion {c['criterion']} {exp}:{c['name']}" in out
        assert c["anchor"] in ALL_ANCHORS
    for suffix in ("csv", "dat", "timing.json"):
        assert (tmp_path / f"{exp}.{suffix}").exists()


def test_simulate_dumps_paths(tmp_path, capsys):
    run(["simulate", "--quick", "--paths", "3", "--out", str(tmp_path)], capsys)
    lines = (tmp_path / "simulate.paths.csv").read_text().splitlines()
    assert lines[0] == "path_index,t,x"
    assert {ln.split(",")[0] for ln in lines[1:]} == {"0", "1", "2"}


def test_out_of_window_beta_is_refused(tmp_path, capsys):
    code = cli.main(["strong-law", "--quick", "--beta", "-0.7", "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 2
    assert "β∈(1−α, 1/(1+α))" in err
    assert not (tmp_path / "strong-law.json").exists()


def test_bad_scheme_flag():
    with pytest.raises(SystemExit):
        cli.main(["simulate", "--scheme", "euler"])


def test_reruns_are_byte_identical(tmp_path, capsys):
    for sub in ("a", "b"):
        run(["strong-law", "--quick", "--seed", "99", "--out", str(tmp_path / sub)], capsys)
    for suffix in ("json", "csv", "dat"):
        assert (tmp_path / "a" / f"strong-law.{suffix}").read_bytes() == (tmp_path / "b" / f"strong-law.{suffix}").read_bytes()


def test_seed_changes_results(tmp_path, capsys):
    run(["strong-law", "--quick", "--seed", "1", "--out", str(tmp_path / "a")], capsys)
    run(["strong-law", "--quick", "--seed", "2", "--out", str(tmp_path / "b")], capsys)
    assert (tmp_path / "a" / "strong-law.json").read_bytes() != (tmp_path / "b" / "strong-law.json").read_bytes()


def test_config_echo_round_trip(tmp_path, capsys):
    run(["strong-law", "--quick", "--seed", "5", "--paths", "20", "--out", str(tmp_path / "a")], capsys)
    verdict = tmp_path / "a" / "strong-law.json"
    run(["strong-law", "--config", str(verdict), "--out", str(tmp_path / "b")], capsys)
    assert verdict.read_bytes() == (tmp_path / "b" / "strong-law.json").read_bytes()
    echo = json.loads(verdict.read_text())["config"]
    assert echo["master_seed"] == 5 and echo["run"]["n_paths"] == 20


def test_toml_config_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('experiment = "strong-law"\nmaster_seed = 7\n[run]\nn_paths = 12\n[model]\nbeta = 0.3\n')
    run(["strong-law", "--quick", "--config", str(cfg), "--paths", "15", "--out", str(tmp_path)], capsys)
    echo = json.loads((tmp_path / "strong-law.json").read_text())["config"]
    assert echo["master_seed"] == 7
    assert echo["model"]["beta"] == 0.3
    assert echo["run"]["n_paths"] == 15


def test_config_for_another_experiment_is_rejected(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('experiment = "fclt"\n')
    assert cli.main(["strong-law", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_verify_all_quick_summary(tmp_path, capsys):
    code, out = run(["verify-all", "--quick", "--out", str(tmp_path)], capsys)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary["experiments"]) == set(EXPERIMENTS) - {"simulate"}
    claims = [c for e in summary["experiments"].values() for c in e["claims"]]
    assert sorted({c["criterion"] for c in claims}) == list(range(1, 10))
    assert code in (0, 3)
    assert (code == 0) == all(e["passed"] for e in summary["experiments"].values())


def test_emit_report_with_no_claims(tmp_path):
    v = Verdict("simulate", {"experiment": "simulate"}, [])
    emit_report(v, tmp_path)
    d = json.loads((tmp_path / "simulate.json").read_text())
    assert d["claims"] == [] and d["passed"] is True
    assert (tmp_path / "simulate.csv").read_text() == "lambda,t,statistic,value\n"
    with pytest.raises(ValueError):
        emit_report(v, tmp_path, formats=("xml",))


def test_csv_rows_and_idempotent_emission(tmp_path):
    v = run_experiment(preset_config("strong-law", quick=True))
    assert verdict_csv(v).count("\n") == 1 + len(v.rows)
    first = emit_report(v, tmp_path)
    snap = {p.name: p.read_bytes() for p in first if not p.name.endswith("timing.json")}
    emit_report(v, tmp_path)
    assert snap == {n: (tmp_path / n).read_bytes() for n in snap}
    assert verdict_json(v) == verdict_json(v)
