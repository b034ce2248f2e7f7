import hashlib
from dataclasses import replace

import numpy as np
import pytest

from assistive_bandit.bandit import BanditInstance, ValidationError, make_reference_instances
from assistive_bandit.cli import main
from assistive_bandit.harness import (OUTPUT_ENV, ExperimentConfig, config_from_parser,
                                      config_to_parser, load_config, report_text, run_experiment,
                                      run_trial, summary_csv, transcripts_csv, write_config)
from assistive_bandit.policies import RobotConfig

D1, D2 = make_reference_instances()
SMALL = dict(horizon=40, trials=4, mc_draws=2000, robot=RobotConfig(refit_period=5))


@pytest.fixture(autouse=True)
def no_env_override(monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)


def test_degenerate_instance_returns():
    inst = BanditInstance.from_values(["x", "y"], [0.5, 1.0], [[1.0, 0.0], [1.0, 0.0]])
    s = run_experiment(ExperimentConfig(inst, horizon=30, trials=1, mc_draws=100))
    for trial in s.results:
        assert [r.ret for r in trial] == [15.0, 15.0, 15.0]


def test_reruns_are_byte_identical():
    cfg = ExperimentConfig(D1, **SMALL)
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert transcripts_csv(a) == transcripts_csv(b)
    assert summary_csv(a) == summary_csv(b)
    assert report_text(a) == report_text(b)


def test_worker_count_does_not_change_outputs():
    cfg = ExperimentConfig(D1, **SMALL)
    a, b = run_experiment(cfg), run_experiment(replace(cfg, workers=2))
    assert transcripts_csv(a) == transcripts_csv(b)


def test_seed_changes_transcripts():
    a = run_experiment(ExperimentConfig(D1, **SMALL))
    b = run_experiment(ExperimentConfig(D1, master_seed=1, **SMALL))
    assert transcripts_csv(a) != transcripts_csv(b)


@pytest.mark.parametrize("seed", [0, 3])
def test_paired_streams(seed):
    cfg = ExperimentConfig(D1, master_seed=seed, horizon=60, trials=1, robot=RobotConfig(refit_period=5))
    results = run_trial(cfg, 0)
    seqs = []
    for r in results:
        tr = r.transcript
        executed = tr.robot_action if r.agent == "hr_team" else tr.human_action
        seqs.append({a: list(tr.cls[executed == a]) for a in range(2)})
    for a in range(2):
        for s1 in seqs:
            for s2 in seqs:
                n = min(len(s1[a]), len(s2[a]))
                assert s1[a][:n] == s2[a][:n]


def test_transcript_sums_and_counts():
    s = run_experiment(ExperimentConfig(D2, **SMALL))
    for trial in s.results:
        for r in trial:
            assert r.ret == pytest.approx(r.transcript.value.sum(), abs=1e-9)
            assert r.arm_pull_counts.sum() == SMALL["horizon"]
            assert np.all(np.isin(r.transcript.value, D2.values))


def test_csv_formats():
    s = run_experiment(ExperimentConfig(D1, **SMALL))
    lines = transcripts_csv(s).split("\n")
    assert lines[0] == "trial,t,agent,human_action,robot_action,class,value"
    assert len(lines) == 1 + 4 * 3 * 40 + 1 and lines[-1] == ""
    assert lines[1].startswith("0,1,ucb,0,,")
    summary = summary_csv(s).splitlines()
    assert summary[0] == "mab,agent,mean,std,n"
    assert [row.split(",")[1] for row in summary[1:]] == ["ucb", "rab_ucb", "hr_team"]
    assert "\r" not in summary_csv(s)
    report = report_text(s)
    assert "One-way ANOVA" in report and "HR Team" in report


def test_summary_statistics():
    s = run_experiment(ExperimentConfig(D1, **SMALL))
    for name, g in s.groups.items():
        x = s.returns(name)
        assert g.mean == pytest.approx(x.mean()) and g.std == pytest.approx(x.std(ddof=1))
        assert g.n == 4


def test_config_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig(D1, trials=0)
    with pytest.raises(ValidationError):
        ExperimentConfig(D1, agents=("ucb", "greedy"))
    with pytest.raises(ValidationError):
        ExperimentConfig(D1, robot=RobotConfig(warmup_steps=1))


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(D2, horizon=50, trials=7, master_seed=9, agents=("ucb", "hr_team"),
                           robot=RobotConfig(refit_period=3, r0=0.25, warmup_steps=4, smoothing_pseudocount=0.5),
                           output_dir=tmp_path / "out")
    write_config(cfg, tmp_path / "exp.ini")
    back = load_config(tmp_path / "exp.ini")
    assert back == cfg
    parser = config_to_parser(cfg)
    assert config_from_parser(parser, tmp_path) == cfg


def test_config_with_instance_file(tmp_path):
    assert main(["reference", "--out", str(tmp_path)]) == 0
    cfg = load_config(tmp_path / "experiment-safe-better.ini")
    assert cfg.instance == D2
    assert (cfg.horizon, cfg.trials) == (300, 300)


def test_output_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    run_experiment(ExperimentConfig(D1, horizon=10, trials=2, mc_draws=100))
    assert (tmp_path / "env" / "summary.csv").exists()


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_cli_reference_then_run(tmp_path, capsys):
    assert main(["reference", "--out", str(tmp_path)]) == 0
    args = ["run", "--config", str(tmp_path / "experiment.ini"), "--trials", "3", "--horizon", "30"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("summary.csv", "report.txt", "transcripts.csv"):
        assert (tmp_path / "a" / name).exists()
    assert sha(tmp_path / "a" / "summary.csv") == sha(tmp_path / "b" / "summary.csv")
    assert "avg. return" in capsys.readouterr().out


def test_cli_unknown_flag(capsys):
    assert main(["run", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_cli_missing_subcommand():
    assert main([]) == 1


def test_cli_bad_config(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\ntrials = many\n[classes]\na = 0\n[arm.0]\np0 = 1\n[arm.1]\np0 = 1\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 2


def test_cli_selftest(capsys):
    assert main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out
