"""Cumulative prospect theory: value function, probability weighting, decision weights.

Functional forms follow Tversky & Kahneman (1992)::

    v(x) = x**alpha                 x >= 0
    v(x) = -lam * (-x)**beta        x < 0
    w(p) = p**g / (p**g + (1 - p)**g)**(1 / g)

Outcomes of value exactly 0 count as gains.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

WEIGHTING_MODES = ("cumulative", "simple")


@dataclass(frozen=True)
class CptParams:
    alpha: float = 0.5
    beta: float = 0.5
    lam: float = 2.0
    gamma: float = 0.5
    delta: float = 0.5
    theta: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        if self.lam < 1:
            raise ValueError(f"lambda must be >= 1, got {self.lam}")
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")

    @classmethod
    def unbiased(cls, theta: float = 1.0) -> "CptParams":
        """All transforms reduce to the identity."""
        return cls(1.0, 1.0, 1.0, 1.0, 1.0, theta)

    def to_dict(self) -> dict[str, float]:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d) -> "CptParams":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        return cls(**{k: float(v) for k, v in d.items()})


REFERENCE_PARAMS = CptParams(alpha=0.5, beta=0.5, lam=2.0, gamma=0.5, delta=0.5, theta=1.0)


def value_transform(x, p: CptParams):
    x = np.asarray(x, dtype=float)
    gain = np.abs(np.where(x >= 0, x, 0.0)) ** p.alpha
    loss = -p.lam * np.abs(np.where(x < 0, x, 0.0)) ** p.beta
    out = np.where(x >= 0, gain, loss)
    return float(out) if out.ndim == 0 else out


def value_inverse(y, p: CptParams):
    y = np.asarray(y, dtype=float)
    gain = np.abs(np.where(y >= 0, y, 0.0)) ** (1.0 / p.alpha)
    loss = -(np.abs(np.where(y < 0, y, 0.0)) / p.lam) ** (1.0 / p.beta)
    out = np.where(y >= 0, gain, loss)
    return float(out) if out.ndim == 0 else out


def probability_weight(prob, exponent: float):
    prob = np.asarray(prob, dtype=float)
    if np.any((prob < 0) | (prob > 1)) or np.any(np.isnan(prob)):
        raise ValueError("probabilities must lie in [0, 1]")
    g = exponent
    num = prob ** g
    den = (num + (1.0 - prob) ** g) ** (1.0 / g)
    out = num / den
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Prospect:
    """A discrete lottery, canonicalized to strictly ascending outcome values."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    @classmethod
    def from_outcomes(cls, outcomes: Iterable[tuple[float, float]], tol: float = 1e-9) -> "Prospect":
        merged: dict[float, float] = {}
        for value, prob in outcomes:
            if prob < 0:
                raise ValueError("probabilities must be nonnegative")
            merged[float(value)] = merged.get(float(value), 0.0) + float(prob)
        total = sum(merged.values())
        if abs(total - 1.0) > tol:
            raise ValueError(f"probabilities sum to {total}, not 1")
        keys = sorted(merged)
        return cls(tuple(keys), tuple(merged[k] for k in keys))

    @classmethod
    def sure(cls, value: float) -> "Prospect":
        return cls((float(value),), (1.0,))

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))


def _rank_weights(values: np.ndarray, probs: np.ndarray, gamma: float, delta: float) -> np.ndarray:
    """Rank-dependent decision weights for outcomes sorted ascending by value."""
    probs = np.asarray(probs, dtype=float)
    pi = np.zeros_like(probs)
    gains = values >= 0
    losses = ~gains
    if gains.any():
        p = probs[gains]
        # decumulative sums: P(outcome >= x_i) within the gains block
        tail = np.cumsum(p[::-1])[::-1]
        tail_next = np.append(tail[1:], 0.0)
        pi[gains] = (probability_weight(np.clip(tail, 0, 1), gamma)
                     - probability_weight(np.clip(tail_next, 0, 1), gamma))
    if losses.any():
        p = probs[losses]
        head = np.cumsum(p)
        head_prev = np.insert(head[:-1], 0, 0.0)
        pi[losses] = (probability_weight(np.clip(head, 0, 1), delta)
                      - probability_weight(np.clip(head_prev, 0, 1), delta))
    return np.maximum(pi, 0.0)


def decision_weights(pr: Prospect, p: CptParams) -> np.ndarray:
    return _rank_weights(np.asarray(pr.values), np.asarray(pr.probs), p.gamma, p.delta)


def cpt_value(pr: Prospect, p: CptParams) -> float:
    pi = decision_weights(pr, p)
    return float(np.dot(pi, value_transform(np.asarray(pr.values), p)))


def bias_probability_row(probs: Sequence[float], class_values: Sequence[float], p: CptParams,
                         mode: str = "cumulative") -> np.ndarray:
    """Decision weights for a probability row over ordered reward classes.

    Only the class order and the sign of each class value are used. The
    result is not renormalized. ``mode="simple"`` weights each entry
    independently, ``w(p_k)``, instead of through cumulative differences.
    """
    probs = np.asarray(probs, dtype=float)
    class_values = np.asarray(class_values, dtype=float)
    if mode == "cumulative":
        return _rank_weights(class_values, probs, p.gamma, p.delta)
    if mode == "simple":
        exps = np.where(class_values >= 0, p.gamma, p.delta)
        return np.array([probability_weight(q, e) for q, e in zip(np.clip(probs, 0, 1), exps)])
    raise ValueError(f"unknown weighting mode {mode!r}; expected one of {WEIGHTING_MODES}")


def bias_probability_rows(rows: np.ndarray, class_values: Sequence[float], p: CptParams,
                          mode: str = "cumulative") -> np.ndarray:
    """Vectorized :func:`bias_probability_row` over the last axis of ``rows``."""
    rows = np.asarray(rows, dtype=float)
    class_values = np.asarray(class_values, dtype=float)
    flat = rows.reshape(-1, rows.shape[-1])
    if mode == "simple":
        exps = np.where(class_values >= 0, p.gamma, p.delta)
        out = _weight_columns(np.clip(flat, 0, 1), exps)
        return out.reshape(rows.shape)
    if mode != "cumulative":
        raise ValueError(f"unknown weighting mode {mode!r}; expected one of {WEIGHTING_MODES}")
    out = np.zeros_like(flat)
    gains = class_values >= 0
    if gains.any():
        g = flat[:, gains]
        tail = np.clip(np.cumsum(g[:, ::-1], axis=1)[:, ::-1], 0, 1)
        tail_next = np.concatenate([tail[:, 1:], np.zeros((len(g), 1))], axis=1)
        out[:, gains] = probability_weight(tail, p.gamma) - probability_weight(tail_next, p.gamma)
    if (~gains).any():
        q = flat[:, ~gains]
        head = np.clip(np.cumsum(q, axis=1), 0, 1)
        head_prev = np.concatenate([np.zeros((len(q), 1)), head[:, :-1]], axis=1)
        out[:, ~gains] = probability_weight(head, p.delta) - probability_weight(head_prev, p.delta)
    return np.maximum(out, 0.0).reshape(rows.shape)


def _weight_columns(probs: np.ndarray, exps: np.ndarray) -> np.ndarray:
    out = np.empty_like(probs)
    for k, e in enumerate(exps):
        out[:, k] = probability_weight(probs[:, k], e)
    return out
