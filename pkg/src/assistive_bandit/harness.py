"""Paired multi-trial experiments: every agent replays the same reward stream per trial.

Seeds are derived, never shared: the stream of trial ``i`` comes from
``(master_seed, i)`` and each agent's own randomness from
``(master_seed, i, crc32(agent))``. Trials can therefore run in any order or
in parallel, and outputs are written in trial order.
"""

from __future__ import annotations

import configparser
import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bandit import (BanditInstance, ValidationError, _new_parser, derive_seed, instance_from_parser,
                     instance_to_parser, load_instance, make_rng, name_key, pull, sample_stream)
from .cpt import REFERENCE_PARAMS, CptParams
from .optim import MinimizeOptions
from .policies import (ROBOT_MINIMIZE, BiasedHuman, RobotConfig, RobotPolicy, TeamState, UcbAgent,
                       team_step)
from .stats import (AnovaResult, GroupSummary, TukeyResult, one_way_anova, summarize, tukey_hsd)

log = logging.getLogger(__name__)

AGENTS = ("ucb", "rab_ucb", "hr_team")
DISPLAY = {"ucb": "UCB", "rab_ucb": "RAB UCB", "hr_team": "HR Team"}
OUTPUT_ENV = "ASSISTIVE_BANDIT_OUTPUT_DIR"
TRANSCRIPT_HEADER = ("trial", "t", "agent", "human_action", "robot_action", "class", "value")
SUMMARY_HEADER = ("mab", "agent", "mean", "std", "n")


@dataclass(frozen=True)
class ExperimentConfig:
    instance: BanditInstance
    horizon: int = 300
    trials: int = 300
    master_seed: int = 0
    human: CptParams = REFERENCE_PARAMS
    robot: RobotConfig = RobotConfig()
    agents: tuple[str, ...] = AGENTS
    output_dir: Path | None = None
    workers: int = 1
    mc_draws: int = 200_000
    alpha: float = 0.05

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.horizon < 1:
            raise ValidationError("horizon must be >= 1")
        if not self.agents:
            raise ValidationError("at least one agent is required")
        unknown = set(self.agents) - set(AGENTS)
        if unknown:
            raise ValidationError(f"unknown agents: {sorted(unknown)}; choose from {AGENTS}")
        try:
            self.robot.validate(self.instance.n_arms)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc


@dataclass
class Transcript:
    human_action: np.ndarray
    robot_action: np.ndarray  # -1 for agents without a robot
    cls: np.ndarray
    value: np.ndarray


@dataclass
class TrialResult:
    trial: int
    agent: str
    ret: float
    arm_pull_counts: np.ndarray
    transcript: Transcript = field(repr=False)


@dataclass
class ExperimentSummary:
    mab: str
    groups: dict[str, GroupSummary]
    anova: AnovaResult | None
    tukey: TukeyResult | None
    results: list[list[TrialResult]] = field(repr=False, default_factory=list)

    def returns(self, agent: str) -> np.ndarray:
        return np.array([r.ret for trial in self.results for r in trial if r.agent == agent])


# ---------------------------------------------------------------------------
# single trial


def agent_seed(master_seed: int, trial: int, agent: str) -> int:
    return derive_seed(master_seed, trial, name_key(agent))


def _solo(agent, stream, horizon: int, n_arms: int) -> Transcript:
    acts = np.empty(horizon, dtype=np.int64)
    classes = np.empty(horizon, dtype=np.int64)
    values = np.empty(horizon)
    counts = np.zeros(n_arms, dtype=np.int64)
    for t in range(1, horizon + 1):
        a = agent.choose(t)
        k, v = pull(stream, a, int(counts[a]))
        counts[a] += 1
        agent.update(a, k, v)
        acts[t - 1], classes[t - 1], values[t - 1] = a, k, v
    return Transcript(acts, np.full(horizon, -1, dtype=np.int64), classes, values)


def _team(cfg: ExperimentConfig, stream, trial: int) -> Transcript:
    inst = cfg.instance
    human = BiasedHuman(inst.n_arms, inst.values, cfg.human,
                        make_rng(agent_seed(cfg.master_seed, trial, "hr_team/human")))
    robot = RobotPolicy(inst.n_arms, inst.values, cfg.robot,
                        make_rng(agent_seed(cfg.master_seed, trial, "hr_team/robot")))
    state = TeamState(human, robot, np.zeros(inst.n_arms, dtype=np.int64))
    rows = [team_step(stream, state, t) for t in range(1, cfg.horizon + 1)]
    h, r, k, v = zip(*rows)
    return Transcript(np.array(h), np.array(r), np.array(k), np.array(v, dtype=float))


def run_trial(cfg: ExperimentConfig, trial: int) -> list[TrialResult]:
    inst = cfg.instance
    stream = sample_stream(inst, cfg.horizon, derive_seed(cfg.master_seed, trial))
    out = []
    for name in cfg.agents:
        if name == "ucb":
            tr = _solo(UcbAgent(inst.n_arms, inst.values), stream, cfg.horizon, inst.n_arms)
        elif name == "rab_ucb":
            human = BiasedHuman(inst.n_arms, inst.values, cfg.human,
                                make_rng(agent_seed(cfg.master_seed, trial, name)))
            tr = _solo(human, stream, cfg.horizon, inst.n_arms)
        else:
            tr = _team(cfg, stream, trial)
        executed = tr.robot_action if name == "hr_team" else tr.human_action
        counts = np.bincount(executed, minlength=inst.n_arms)
        out.append(TrialResult(trial, name, float(tr.value.sum()), counts, tr))
    return out


def _run_trial_star(args):
    return run_trial(*args)


# ---------------------------------------------------------------------------
# experiment


def run_trials(cfg: ExperimentConfig) -> list[list[TrialResult]]:
    jobs = [(cfg, i) for i in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_run_trial_star, jobs, chunksize=max(1, cfg.trials // (4 * cfg.workers))))
    return [run_trial(*job) for job in jobs]


def analyze(cfg: ExperimentConfig, results: list[list[TrialResult]]) -> ExperimentSummary:
    returns = {a: [] for a in cfg.agents}
    for trial in results:
        for r in trial:
            returns[r.agent].append(r.ret)
    groups, anova, tukey = {}, None, None
    if cfg.trials >= 2:
        groups = {a: summarize(a, returns[a]) for a in cfg.agents}
        if len(cfg.agents) >= 2:
            samples = [returns[a] for a in cfg.agents]
            anova = one_way_anova(samples)
            tukey = tukey_hsd(samples, cfg.alpha, cfg.mc_draws,
                              derive_seed(cfg.master_seed, name_key("tukey")), names=list(cfg.agents))
    else:
        groups = {a: GroupSummary(a, 1, float(returns[a][0]), float("nan")) for a in cfg.agents}
    return ExperimentSummary(cfg.instance.name, groups, anova, tukey, results)


def run_experiment(cfg: ExperimentConfig) -> ExperimentSummary:
    """Run every trial, analyze the returns and, if ``output_dir`` is set, write the outputs."""
    log.info("running %d trials of %s (T=%d, agents=%s)", cfg.trials, cfg.instance.name,
             cfg.horizon, ",".join(cfg.agents))
    summary = analyze(cfg, run_trials(cfg))
    out = output_dir(cfg)
    if out is not None:
        write_outputs(summary, out, cfg)
    return summary


def output_dir(cfg: ExperimentConfig) -> Path | None:
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env)
    return cfg.output_dir


# ---------------------------------------------------------------------------
# outputs


def fmt(x: float) -> str:
    return f"{x:.6g}"


def transcripts_csv(summary: ExperimentSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRANSCRIPT_HEADER)
    for trial in summary.results:
        for r in trial:
            tr = r.transcript
            for t in range(len(tr.value)):
                ra = int(tr.robot_action[t])
                w.writerow((r.trial, t + 1, r.agent, int(tr.human_action[t]),
                            ra if ra >= 0 else "", int(tr.cls[t]), fmt(tr.value[t])))
    return buf.getvalue()


def summary_csv(summary: ExperimentSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for name, g in summary.groups.items():
        w.writerow((summary.mab, name, fmt(g.mean), fmt(g.std), g.n))
    return buf.getvalue()


def report_text(summary: ExperimentSummary, alpha: float = 0.05) -> str:
    lines = [f"{'MAB':<14} {'Agent':<9} {'avg. return':>12} {'std.':>10}"]
    for i, (name, g) in enumerate(summary.groups.items()):
        mab = summary.mab if i == 0 else ""
        lines.append(f"{mab:<14} {DISPLAY[name]:<9} {fmt(g.mean):>12} {fmt(g.std):>10}")
    lines.append("")
    a = summary.anova
    if a is not None:
        lines.append(f"One-way ANOVA: F = {fmt(a.f_statistic)}, df = ({a.df_between}, {a.df_within}), "
                     f"p = {fmt(a.p_value)}")
    if summary.tukey is not None:
        lines.append(f"Tukey HSD (alpha = {fmt(alpha)}):")
        for p in summary.tukey.pairs:
            verdict = "reject" if p.reject_at_05 else "no difference"
            lines.append(f"  {DISPLAY[p.group_i]} vs {DISPLAY[p.group_j]}: diff = {fmt(p.mean_diff)}, "
                         f"q = {fmt(p.q_statistic)}, p = {fmt(p.p_value)}, {verdict}")
    return "\n".join(lines) + "\n"


def write_outputs(summary: ExperimentSummary, out: Path, cfg: ExperimentConfig) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for fname, text in (("transcripts.csv", transcripts_csv(summary)),
                        ("summary.csv", summary_csv(summary)),
                        ("report.txt", report_text(summary, cfg.alpha))):
        with open(out / fname, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# config files


def _section(parser: configparser.ConfigParser, name: str) -> dict[str, str]:
    return dict(parser.items(name)) if parser.has_section(name) else {}


def _as_int(d: dict, key: str, default: int) -> int:
    try:
        return int(d.get(key, default))
    except ValueError as exc:
        raise ValidationError(f"{key}: expected an integer, got {d[key]!r}") from exc


def _as_float(d: dict, key: str, default: float) -> float:
    try:
        return float(d.get(key, default))
    except ValueError as exc:
        raise ValidationError(f"{key}: expected a number, got {d[key]!r}") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    parser = _new_parser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    return config_from_parser(parser, path.parent)


def config_from_parser(parser: configparser.ConfigParser, base: Path = Path(".")) -> ExperimentConfig:
    exp = _section(parser, "experiment")
    if "instance" in exp:
        inst_path = Path(exp["instance"])
        inst = load_instance(inst_path if inst_path.is_absolute() else base / inst_path)
        if "name" in exp:
            inst = replace(inst, name=exp["name"])
    else:
        inst = instance_from_parser(parser, name=exp.get("name", "mab"))
    try:
        human = CptParams.from_dict(_section(parser, "human")) if parser.has_section("human") else REFERENCE_PARAMS
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"[human]: {exc}") from exc

    rob = _section(parser, "robot")
    minimize = ROBOT_MINIMIZE
    try:
        minimize = MinimizeOptions(
            max_iterations=_as_int(rob, "max_iterations", minimize.max_iterations),
            max_evaluations=_as_int(rob, "max_evaluations", minimize.max_evaluations),
            x_tolerance=_as_float(rob, "x_tolerance", minimize.x_tolerance),
            f_tolerance=_as_float(rob, "f_tolerance", minimize.f_tolerance),
            restarts=_as_int(rob, "restarts", minimize.restarts),
            restart_scale=_as_float(rob, "restart_scale", minimize.restart_scale),
        )
        robot = RobotConfig(
            human_params=human,
            r0=_as_float(rob, "r0", RobotConfig.r0),
            warmup_steps=_as_int(rob, "warmup_steps", 0) or None,
            refit_period=_as_int(rob, "refit_period", RobotConfig.refit_period),
            smoothing_pseudocount=_as_float(rob, "smoothing_pseudocount", RobotConfig.smoothing_pseudocount),
            weighting=rob.get("weighting", RobotConfig.weighting),
            minimize=minimize,
        )
    except ValueError as exc:
        raise ValidationError(f"[robot]: {exc}") from exc
    if robot.weighting not in ("cumulative", "simple"):
        raise ValidationError(f"[robot] weighting must be 'cumulative' or 'simple', got {robot.weighting!r}")

    agents = tuple(a.strip() for a in exp.get("agents", ",".join(AGENTS)).split(",") if a.strip())
    out = exp.get("output_dir")
    return ExperimentConfig(
        instance=inst,
        horizon=_as_int(exp, "horizon", 300),
        trials=_as_int(exp, "trials", 300),
        master_seed=_as_int(exp, "master_seed", 0),
        human=human,
        robot=robot,
        agents=agents,
        output_dir=(Path(out) if Path(out).is_absolute() else base / out) if out else None,
        workers=_as_int(exp, "workers", 1),
        mc_draws=_as_int(exp, "mc_draws", 200_000),
        alpha=_as_float(exp, "alpha", 0.05),
    )


def config_to_parser(cfg: ExperimentConfig, instance_file: str | None = None) -> configparser.ConfigParser:
    parser = _new_parser()
    exp = {
        "name": cfg.instance.name,
        "horizon": str(cfg.horizon),
        "trials": str(cfg.trials),
        "master_seed": str(cfg.master_seed),
        "agents": ", ".join(cfg.agents),
        "workers": str(cfg.workers),
        "mc_draws": str(cfg.mc_draws),
        "alpha": repr(cfg.alpha),
    }
    if cfg.output_dir is not None:
        exp["output_dir"] = str(cfg.output_dir)
    if instance_file is not None:
        exp["instance"] = instance_file
    parser["experiment"] = exp
    parser["human"] = {k: repr(v) for k, v in cfg.human.to_dict().items()}
    r, m = cfg.robot, cfg.robot.minimize
    parser["robot"] = {
        "r0": repr(r.r0),
        "warmup_steps": str(r.warmup(cfg.instance.n_arms)),
        "refit_period": str(r.refit_period),
        "smoothing_pseudocount": repr(r.smoothing_pseudocount),
        "weighting": r.weighting,
        "restarts": str(m.restarts),
        "restart_scale": repr(m.restart_scale),
        "x_tolerance": repr(m.x_tolerance),
        "f_tolerance": repr(m.f_tolerance),
        "max_iterations": str(m.max_iterations),
        "max_evaluations": str(m.max_evaluations),
    }
    if instance_file is None:
        instance_to_parser(cfg.instance, parser)
    return parser


def write_config(cfg: ExperimentConfig, path: str | Path, instance_file: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        config_to_parser(cfg, instance_file).write(fh)
