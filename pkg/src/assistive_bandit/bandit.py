"""Bandit instances with discrete reward classes and replayable reward streams.

All compared agents replay the same :class:`RewardStream`. Draws are
pre-sampled per (arm, pull count), so the k-th pull of arm ``a`` always
yields ``draws[a, k - 1]`` no matter when in the episode it happens.

Randomness comes from numpy's PCG64 bit generator seeded through
:class:`numpy.random.SeedSequence`; both are portable across platforms.
"""

from __future__ import annotations

import configparser
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

ROW_TOL = 1e-12
FILE_ROW_TOL = 1e-9


class ValidationError(ValueError):
    """Raised for malformed instances, configs or instance files."""


class StreamExhausted(IndexError):
    """Raised when an arm is pulled more often than the stream horizon."""


@dataclass(frozen=True)
class RewardClass:
    index: int
    label: str
    value: float


@dataclass(frozen=True, eq=False)
class BanditInstance:
    """``N`` arms sharing ``M`` reward classes.

    ``arm_probs[a, k]`` is the probability that arm ``a`` yields class ``k``.
    Classes are kept sorted ascending by value; construct through
    :meth:`from_values` when the input order is arbitrary.
    """

    classes: tuple[RewardClass, ...]
    arm_probs: np.ndarray
    arm_names: tuple[str, ...] = ()
    name: str = "mab"

    def __post_init__(self):
        probs = np.array(self.arm_probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "arm_probs", probs)
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.arm_names:
            names = tuple(f"arm{a}" for a in range(probs.shape[0] if probs.ndim == 2 else 0))
            object.__setattr__(self, "arm_names", names)
        self.validate()

    def __eq__(self, other):
        if not isinstance(other, BanditInstance):
            return NotImplemented
        return (self.classes, self.arm_names, self.name) == (other.classes, other.arm_names, other.name) \
            and np.array_equal(self.arm_probs, other.arm_probs)

    def __hash__(self):
        return hash((self.classes, self.arm_names, self.name, self.arm_probs.tobytes()))

    @classmethod
    def from_values(cls, labels: Sequence[str], values: Sequence[float],
                    arm_probs, arm_names: Sequence[str] = (), name: str = "mab",
                    tol: float = ROW_TOL) -> "BanditInstance":
        """Build an instance from classes in any order; columns are permuted to match."""
        order = np.argsort(np.asarray(values, dtype=float), kind="stable")
        probs = np.asarray(arm_probs, dtype=float)
        if probs.ndim != 2 or probs.shape[1] != len(values):
            raise ValidationError("arm_probs must be an N x M matrix matching the classes")
        _check_rows(probs, tol)
        probs = probs / probs.sum(axis=1, keepdims=True)
        classes = tuple(RewardClass(i, str(labels[j]), float(values[j]))
                        for i, j in enumerate(order))
        return cls(classes, probs[:, order], tuple(arm_names), name)

    def validate(self, tol: float = ROW_TOL) -> None:
        probs = self.arm_probs
        if probs.ndim != 2:
            raise ValidationError("arm_probs must be two-dimensional")
        n_arms, n_classes = probs.shape
        if n_arms < 2 or n_classes < 2:
            raise ValidationError(f"need N >= 2 and M >= 2, got N={n_arms}, M={n_classes}")
        if len(self.classes) != n_classes:
            raise ValidationError("number of classes does not match arm_probs columns")
        if [c.index for c in self.classes] != list(range(n_classes)):
            raise ValidationError("class indices must be 0..M-1 without gaps")
        if len({c.label for c in self.classes}) != n_classes:
            raise ValidationError("class labels must be unique")
        values = self.values
        if np.any(np.diff(values) < 0):
            raise ValidationError("classes must be sorted ascending by value")
        if len(self.arm_names) != n_arms:
            raise ValidationError("arm_names must have one entry per arm")
        _check_rows(probs, tol)

    @property
    def n_arms(self) -> int:
        return self.arm_probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.arm_probs.shape[1]

    @property
    def values(self) -> np.ndarray:
        return np.array([c.value for c in self.classes])

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.classes]

    def true_means(self) -> np.ndarray:
        return self.arm_probs @ self.values

    def best_arm(self) -> int:
        return int(np.argmax(self.true_means()))


def _check_rows(probs: np.ndarray, tol: float) -> None:
    if not np.all(np.isfinite(probs)) or np.any(probs < 0):
        raise ValidationError("arm probabilities must be finite and nonnegative")
    sums = probs.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        raise ValidationError(f"arm {int(bad[0])} probabilities sum to {sums[bad[0]]!r}, not 1")


@dataclass(frozen=True)
class RewardStream:
    draws: np.ndarray  # N x T class indices
    seed: int
    horizon: int
    values: np.ndarray = field(repr=False)

    def pull(self, arm: int, pull_index: int) -> tuple[int, float]:
        return pull(self, arm, pull_index)


def seed_sequence(master_seed: int, *keys: int) -> np.random.SeedSequence:
    """Hash ``(master_seed, *keys)`` into an independent seed sequence."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys))


def derive_seed(master_seed: int, *keys: int) -> int:
    """A 64-bit integer seed derived from ``(master_seed, *keys)``."""
    return int(seed_sequence(master_seed, *keys).generate_state(1, dtype=np.uint64)[0])


def name_key(name: str) -> int:
    """Stable integer key for an agent name (used in seed derivation)."""
    return zlib.crc32(name.encode("utf-8"))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed)))


def sample_stream(instance: BanditInstance, horizon: int, seed: int) -> RewardStream:
    """Pre-sample ``horizon`` i.i.d. class draws for every arm."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    instance.validate()
    rng = make_rng(seed)
    u = rng.random((instance.n_arms, horizon))
    draws = np.empty((instance.n_arms, horizon), dtype=np.int64)
    last = instance.n_classes - 1
    for a, row in enumerate(instance.arm_probs):
        cdf = np.cumsum(row)
        cdf[-1] = 1.0
        draws[a] = np.minimum(np.searchsorted(cdf, u[a], side="right"), last)
    draws.setflags(write=False)
    values = instance.values
    values.setflags(write=False)
    return RewardStream(draws, int(seed), int(horizon), values)


def pull(stream: RewardStream, arm: int, pull_index: int) -> tuple[int, float]:
    """Class index and value delivered at the ``pull_index``-th (0-based) pull of ``arm``."""
    if pull_index >= stream.horizon or pull_index < 0:
        raise StreamExhausted(
            f"arm {arm} pulled {pull_index + 1} times but the stream holds {stream.horizon}")
    k = int(stream.draws[arm, pull_index])
    return k, float(stream.values[k])


def make_reference_instances() -> tuple[BanditInstance, BanditInstance]:
    """The two-arm, three-class instances ``risky-better`` (D1) and ``safe-better`` (D2).

    Both use class values (-1.0, 0.5, 2.0). Arm 0 always pays 0.5. In D1 the
    risky arm has mean 1.1 but a low CPT value, so a risk-averse human picks
    the worse arm; in D2 the risky arm has mean 0.35 and the bias helps.
    """
    labels = ("loss", "small", "big")
    values = (-1.0, 0.5, 2.0)
    d1 = BanditInstance.from_values(labels, values, [[0, 1, 0], [0.3, 0, 0.7]],
                                    ("safe", "risky"), "risky-better")
    d2 = BanditInstance.from_values(labels, values, [[0, 1, 0], [0.55, 0, 0.45]],
                                    ("safe", "risky"), "safe-better")
    return d1, d2


# ---------------------------------------------------------------------------
# INI instance files


def _new_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    return parser


def instance_from_parser(parser: configparser.ConfigParser, name: str | None = None) -> BanditInstance:
    """Read ``[classes]`` and ``[arm.<i>]`` sections.

    ``p<k>`` refers to the k-th class in ascending-value order; missing
    entries are zero.
    """
    if not parser.has_section("classes"):
        raise ValidationError("missing [classes] section")
    labels, values = [], []
    for label, raw in parser.items("classes"):
        try:
            values.append(float(raw))
        except ValueError as exc:
            raise ValidationError(f"class {label!r}: bad value {raw!r}") from exc
        labels.append(label)
    order = np.argsort(values, kind="stable")
    labels = [labels[i] for i in order]
    values = [values[i] for i in order]

    arm_sections = [s for s in parser.sections() if s.startswith("arm.")]
    try:
        arm_ids = sorted(int(s.split(".", 1)[1]) for s in arm_sections)
    except ValueError as exc:
        raise ValidationError("arm sections must be named [arm.<integer>]") from exc
    if arm_ids != list(range(len(arm_ids))):
        raise ValidationError("arm sections must be numbered 0..N-1")

    probs = np.zeros((len(arm_ids), len(values)))
    arm_names = []
    for a in arm_ids:
        sec = parser[f"arm.{a}"]
        arm_names.append(sec.get("name", f"arm{a}"))
        for key, raw in sec.items():
            if key == "name":
                continue
            if not (key.startswith("p") and key[1:].isdigit()):
                raise ValidationError(f"[arm.{a}]: unknown key {key!r}")
            k = int(key[1:])
            if k >= len(values):
                raise ValidationError(f"[arm.{a}]: class index {k} out of range")
            try:
                probs[a, k] = float(raw)
            except ValueError as exc:
                raise ValidationError(f"[arm.{a}] {key}: bad probability {raw!r}") from exc
    if name is None:
        name = parser.get("experiment", "name", fallback=None) or parser.get(
            "instance", "name", fallback="mab")
    # columns are already in ascending order
    return BanditInstance.from_values(labels, values, probs, arm_names, name, tol=FILE_ROW_TOL)


def load_instance(path: str | Path) -> BanditInstance:
    parser = _new_parser()
    with open(path, encoding="utf-8") as fh:
        try:
            parser.read_file(fh)
        except configparser.Error as exc:
            raise ValidationError(f"{path}: {exc}") from exc
    return instance_from_parser(parser)


def instance_to_parser(instance: BanditInstance, parser: configparser.ConfigParser | None = None,
                       ) -> configparser.ConfigParser:
    parser = parser if parser is not None else _new_parser()
    if not parser.has_section("experiment"):
        parser["instance"] = {"name": instance.name}
    parser["classes"] = {c.label: repr(c.value) for c in instance.classes}
    for a, row in enumerate(instance.arm_probs):
        sec = {"name": instance.arm_names[a]}
        sec.update({f"p{k}": repr(float(p)) for k, p in enumerate(row)})
        parser[f"arm.{a}"] = sec
    return parser


def dump_instance(instance: BanditInstance, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        instance_to_parser(instance).write(fh)
