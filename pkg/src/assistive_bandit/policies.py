"""Bandit agents: rational UCB, the risk-averse biased human, and the assistive robot.

The robot watches the human's intended arm and the reward class of every
executed pull. It fits latent class rewards under which a CPT-biased,
argmax-choosing human would have acted as observed, undoes the value
transform, and then plays the arm with the best de-biased expectation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bandit import RewardStream, pull
from .cpt import CptParams, Prospect, bias_probability_rows, value_inverse, value_transform
from .optim import MinimizeOptions, powell_minimize


class ArmStatistic:
    """Per-arm pull counts, class counts and reward sums."""

    def __init__(self, n_arms: int, class_values: Sequence[float]):
        self.class_values = np.asarray(class_values, dtype=float)
        self.pulls = np.zeros(n_arms, dtype=np.int64)
        self.class_counts = np.zeros((n_arms, len(self.class_values)), dtype=np.int64)
        self.sums = np.zeros(n_arms)

    @property
    def n_arms(self) -> int:
        return len(self.pulls)

    def update(self, arm: int, cls: int, value: float) -> None:
        self.pulls[arm] += 1
        self.class_counts[arm, cls] += 1
        self.sums[arm] += value

    def mean(self, arm: int) -> float:
        return self.sums[arm] / self.pulls[arm]

    def empirical_probs(self, arm: int) -> np.ndarray:
        return self.class_counts[arm] / self.pulls[arm]

    def prospect(self, arm: int) -> Prospect:
        probs = self.empirical_probs(arm)
        keep = probs > 0
        return Prospect.from_outcomes(zip(self.class_values[keep], probs[keep]))


def rab_ucb_update(stat: ArmStatistic, arm: int, cls: int, value: float) -> None:
    stat.update(arm, cls, value)


def exploration_bonus(n: int, t: int) -> float:
    return math.sqrt(2.0 * math.log(t) / n)


def ucb_index(stat: ArmStatistic, arm: int, t: int) -> float:
    """Empirical mean plus ``sqrt(2 ln t / n)``; ``inf`` for an unpulled arm."""
    n = int(stat.pulls[arm])
    if n == 0:
        return math.inf
    return stat.mean(arm) + exploration_bonus(n, t)


def _first_unpulled(stat: ArmStatistic) -> int | None:
    idle = np.flatnonzero(stat.pulls == 0)
    return int(idle[0]) if idle.size else None


def ucb_choose(stat: ArmStatistic, t: int) -> int:
    arm = _first_unpulled(stat)
    if arm is not None:
        return arm
    # np.argmax returns the lowest index among ties
    return int(np.argmax([ucb_index(stat, a, t) for a in range(stat.n_arms)]))


def rab_ucb_values(stat: ArmStatistic, p: CptParams, t: int) -> np.ndarray:
    """CPT value of each arm's empirical prospect plus the UCB exploration bonus."""
    # zero-probability classes get zero decision weight, so the full class
    # grid gives the same value as the canonical prospect
    probs = stat.class_counts / stat.pulls[:, None]
    pi = bias_probability_rows(probs, stat.class_values, p)
    cpt = pi @ value_transform(stat.class_values, p)
    return cpt + np.sqrt(2.0 * math.log(t) / stat.pulls)


def noisy_rational_choice(values: np.ndarray, theta: float, rng: np.random.Generator) -> int:
    """Sample an index with probability proportional to ``exp(theta * value)``."""
    z = theta * (np.asarray(values, dtype=float) - np.max(values))
    w = np.exp(z)
    cdf = np.cumsum(w / w.sum())
    return int(min(np.searchsorted(cdf, rng.random(), side="right"), len(cdf) - 1))


def rab_ucb_choose(stat: ArmStatistic, p: CptParams, t: int, rng: np.random.Generator) -> int:
    arm = _first_unpulled(stat)
    if arm is not None:
        return arm
    return noisy_rational_choice(rab_ucb_values(stat, p, t), p.theta, rng)


# ---------------------------------------------------------------------------
# agents with their own statistics


class UcbAgent:
    name = "ucb"

    def __init__(self, n_arms: int, class_values):
        self.stat = ArmStatistic(n_arms, class_values)

    def choose(self, t: int) -> int:
        return ucb_choose(self.stat, t)

    def update(self, arm: int, cls: int, value: float) -> None:
        self.stat.update(arm, cls, value)


class BiasedHuman:
    """Risk-averse biased UCB (RAB UCB) with a noisy-rational final choice."""

    name = "rab_ucb"

    def __init__(self, n_arms: int, class_values, params: CptParams, rng: np.random.Generator):
        self.stat = ArmStatistic(n_arms, class_values)
        self.params = params
        self.rng = rng

    def choose(self, t: int) -> int:
        return rab_ucb_choose(self.stat, self.params, t, self.rng)

    def update(self, arm: int, cls: int, value: float) -> None:
        rab_ucb_update(self.stat, arm, cls, value)


# ---------------------------------------------------------------------------
# robot


@dataclass
class InteractionHistory:
    """Records ``(t, human_action, robot_action, class)`` with t = 1, 2, ..."""

    n_arms: int
    n_classes: int
    records: list[tuple[int, int, int, int]] = field(default_factory=list)

    def append(self, t: int, human_action: int, robot_action: int, cls: int) -> None:
        last = self.records[-1][0] if self.records else 0
        if t != last + 1:
            raise ValueError(f"steps must increase by one: expected {last + 1}, got {t}")
        if not (0 <= human_action < self.n_arms and 0 <= robot_action < self.n_arms):
            raise ValueError("action out of range")
        if not 0 <= cls < self.n_classes:
            raise ValueError("class out of range")
        self.records.append((t, human_action, robot_action, cls))

    def __len__(self) -> int:
        return len(self.records)

    @property
    def human_actions(self) -> np.ndarray:
        return np.array([r[1] for r in self.records], dtype=np.int64)


def build_probability_statistics(history: InteractionHistory, upto: int, pseudocount: float = 1.0,
                                 ) -> np.ndarray:
    """Stack of smoothed class-frequency matrices ``P_1 .. P_upto``.

    ``P_i[a, k] = (c + s) / (n + M s)`` counted over records with step < i on
    executed arm ``a``; unplayed arms get the uniform row.
    """
    if upto > len(history) + 1:
        raise ValueError(f"upto={upto} exceeds the available information ({len(history)} records)")
    n, m = history.n_arms, history.n_classes
    counts = np.zeros((max(upto, 0), n, m))
    if upto > 1:
        recs = np.asarray(history.records[: upto - 1], dtype=np.int64).reshape(-1, 4)
        incr = np.zeros((upto - 1, n, m))
        incr[np.arange(upto - 1), recs[:, 2], recs[:, 3]] = 1.0
        counts[1:] = np.cumsum(incr, axis=0)
    return (counts + pseudocount) / (counts.sum(axis=2, keepdims=True) + m * pseudocount)


def mismatch_objective(biased_P: np.ndarray, human_actions: np.ndarray):
    """Callable counting steps where ``argmax_a biased_P[i] @ R`` differs from the human's arm."""
    biased_P = np.asarray(biased_P, dtype=float)
    actions = np.asarray(human_actions, dtype=np.int64)
    if biased_P.shape[1] == 2:
        p0 = np.ascontiguousarray(biased_P[:, 0, :])
        p1 = np.ascontiguousarray(biased_P[:, 1, :])
        chose_1 = actions == 1

        def count2(r: np.ndarray) -> float:
            # ties go to arm 0, as with argmax
            return float(np.count_nonzero((p1 @ r > p0 @ r) != chose_1))
        return count2

    t, n, m = biased_P.shape
    flat = biased_P.reshape(t * n, m)

    def count(r: np.ndarray) -> float:
        return float(np.count_nonzero((flat @ r).reshape(t, n).argmax(axis=1) != actions))
    return count


def fit_reward_values(biased_P: np.ndarray, human_actions: Sequence[int], r0: float,
                      opts: MinimizeOptions | None = None, start: np.ndarray | None = None,
                      ) -> np.ndarray:
    """Class rewards that best explain the human's choices under an argmax model.

    Minimizes the number of mismatches with Powell's method, starting from
    ``start`` (all ``r0`` by default). Returns the start when there is no
    history to fit.
    """
    biased_P = np.asarray(biased_P, dtype=float)
    actions = np.asarray(human_actions, dtype=np.int64)
    if len(biased_P) != len(actions):
        raise ValueError("biased_P and human_actions must have equal length")
    m = biased_P.shape[-1] if biased_P.ndim == 3 else None
    x0 = np.array(start, dtype=float) if start is not None else None
    if len(actions) == 0:
        if x0 is None:
            raise ValueError("cannot infer the number of classes from an empty history")
        return x0
    if x0 is None:
        x0 = np.full(m, float(r0))
    opts = opts if opts is not None else ROBOT_MINIMIZE
    return powell_minimize(mismatch_objective(biased_P, actions), x0, opts).x_best


ROBOT_MINIMIZE = MinimizeOptions(f_tolerance=0.5, x_tolerance=1e-3)


@dataclass(frozen=True)
class RobotConfig:
    human_params: CptParams = CptParams()
    r0: float = 1.0
    warmup_steps: int | None = None  # None: one round-robin pass over the arms
    refit_period: int = 1
    smoothing_pseudocount: float = 1.0
    weighting: str = "cumulative"
    minimize: MinimizeOptions = ROBOT_MINIMIZE

    def warmup(self, n_arms: int) -> int:
        return n_arms if self.warmup_steps is None else self.warmup_steps

    def validate(self, n_arms: int) -> None:
        if self.warmup(n_arms) < n_arms:
            raise ValueError(f"warmup_steps must be >= N ({n_arms})")
        if self.refit_period < 1:
            raise ValueError("refit_period must be >= 1")
        if self.smoothing_pseudocount <= 0:
            raise ValueError("smoothing_pseudocount must be > 0")


def debiased_choice(P_row_stack: np.ndarray, debiased_rewards: np.ndarray) -> int:
    """``argmax_a P[a] @ R`` with ties to the lowest arm index."""
    return int(np.argmax(np.asarray(P_row_stack) @ np.asarray(debiased_rewards)))


class RobotPolicy:
    """Assistive robot keeping the interaction history and the latest reward fit."""

    name = "hr_team"

    def __init__(self, n_arms: int, class_values: Sequence[float], cfg: RobotConfig,
                 rng: np.random.Generator | None = None):
        cfg.validate(n_arms)
        self.cfg = cfg
        self.class_values = np.asarray(class_values, dtype=float)
        self.history = InteractionHistory(n_arms, len(self.class_values))
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.reward_fit: np.ndarray | None = None  # pre-inverse R-hat
        self._biased: list[np.ndarray] = []  # biased P_i, i = 1, 2, ...
        self._counts = np.zeros((n_arms, len(self.class_values)))

    @property
    def n_arms(self) -> int:
        return self.history.n_arms

    def _smoothed(self) -> np.ndarray:
        s = self.cfg.smoothing_pseudocount
        return (self._counts + s) / (self._counts.sum(axis=1, keepdims=True) + len(self.class_values) * s)

    def choose(self, t: int) -> int:
        warmup = self.cfg.warmup(self.n_arms)
        if t <= warmup:
            return (t - 1) % self.n_arms
        due = (t - warmup - 1) % self.cfg.refit_period == 0
        if self.reward_fit is None or due:
            self.refit()
        return debiased_choice(self._smoothed(), self.debiased_rewards())

    def refit(self) -> np.ndarray:
        """Refit the latent class rewards on every recorded step."""
        cfg = self.cfg
        actions = self.history.human_actions
        start = None
        if self.reward_fit is not None and cfg.refit_period > 1:
            start = self.reward_fit
        opts = cfg.minimize.with_(seed=int(self.rng.integers(2**63)))
        biased = np.array(self._biased) if self._biased else np.zeros((0, self.n_arms, len(self.class_values)))
        if start is None:
            start = np.full(len(self.class_values), float(cfg.r0))
        self.reward_fit = fit_reward_values(biased, actions, cfg.r0, opts, start=start)
        return self.reward_fit

    def debiased_rewards(self) -> np.ndarray:
        return value_inverse(self.reward_fit, self.cfg.human_params)

    def observe(self, t: int, human_action: int, robot_action: int, cls: int) -> None:
        # P_t is what the human knew when choosing at step t
        self._biased.append(bias_probability_rows(self._smoothed(), self.class_values,
                                                  self.cfg.human_params, self.cfg.weighting))
        self.history.append(t, human_action, robot_action, cls)
        self._counts[robot_action, cls] += 1


def robot_choose(history: InteractionHistory, cfg: RobotConfig, class_values: Sequence[float],
                 t: int, rng: np.random.Generator | None = None) -> int:
    """Stateless version of :meth:`RobotPolicy.choose`: fits from ``r0`` on ``history[:t-1]``."""
    if t <= cfg.warmup(history.n_arms):
        return (t - 1) % history.n_arms
    P = build_probability_statistics(history, t, cfg.smoothing_pseudocount)
    biased = bias_probability_rows(P[:-1], class_values, cfg.human_params, cfg.weighting)
    rng = rng if rng is not None else np.random.default_rng(0)
    opts = cfg.minimize.with_(seed=int(rng.integers(2**63)))
    fit = fit_reward_values(biased, history.human_actions[: t - 1], cfg.r0, opts)
    return debiased_choice(P[-1], value_inverse(fit, cfg.human_params))


@dataclass
class TeamState:
    human: BiasedHuman
    robot: RobotPolicy
    pull_counts: np.ndarray


def team_step(stream: RewardStream, state: TeamState, t: int) -> tuple[int, int, int, float]:
    """One round: robot commits, human's intent is recorded, robot's arm is executed."""
    a_r = state.robot.choose(t)
    a_h = state.human.choose(t)
    cls, value = pull(stream, a_r, int(state.pull_counts[a_r]))
    state.pull_counts[a_r] += 1
    state.human.update(a_r, cls, value)
    state.robot.observe(t, a_h, a_r, cls)
    return a_h, a_r, cls, value
