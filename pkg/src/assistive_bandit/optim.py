"""Powell's conjugate direction method with a bracketing golden-section line search.

No derivatives are used anywhere, so the minimizer also works on the
piecewise-constant mismatch count the robot policy fits. Multi-start
restarts (seeded uniform perturbations of the incumbent) help it leave
flat plateaus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
INV_GOLDEN = 1.0 / GOLDEN
XSCALE = 1.0


@dataclass(frozen=True)
class MinimizeOptions:
    max_iterations: int = 100
    max_evaluations: int = 10_000
    x_tolerance: float = 1e-8
    f_tolerance: float = 1e-10
    restarts: int = 4
    restart_scale: float = 1.0
    seed: int = 0
    initial_step: float = 1.0
    max_expansions: int = 60

    def __post_init__(self):
        if self.x_tolerance <= 0 or self.f_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")

    def with_(self, **kw) -> "MinimizeOptions":
        return replace(self, **kw)


@dataclass
class MinimizeResult:
    x_best: np.ndarray
    f_best: float
    evaluations: int
    converged: bool
    iterations: int = 0
    trace: list[float] = field(default_factory=list, repr=False)


class _Budget(Exception):
    pass


class _Counted:
    """Objective wrapper that counts calls and enforces the evaluation cap."""

    def __init__(self, fn: Callable[[np.ndarray], float], limit: int):
        self.fn = fn
        self.limit = limit
        self.calls = 0

    def __call__(self, x: np.ndarray) -> float:
        if self.calls >= self.limit:
            raise _Budget
        self.calls += 1
        f = float(self.fn(x))
        return f if not math.isnan(f) else math.inf


def line_minimize(objective: Callable[[np.ndarray], float], origin, direction,
                  opts: MinimizeOptions = MinimizeOptions(), f_origin: float | None = None,
                  ) -> tuple[float, float]:
    """Minimize ``objective(origin + s * direction)`` over the step ``s``.

    A minimum is bracketed by geometric expansion from ``opts.initial_step``
    and then refined by golden-section search down to ``opts.x_tolerance``.
    The returned ``f`` never exceeds ``f(origin)``; when no bracket is found
    within the evaluation budget the step is 0.
    """
    fn = objective if isinstance(objective, _Counted) else _Counted(objective, opts.max_evaluations)
    return _line_minimize(fn, np.asarray(origin, dtype=float), np.asarray(direction, dtype=float),
                          opts, f_origin)


def _line_minimize(fn: _Counted, origin: np.ndarray, direction: np.ndarray,
                   opts: MinimizeOptions, f0: float | None) -> tuple[float, float]:
    if not np.any(direction):
        raise ValueError("direction must be nonzero")
    if f0 is None:
        f0 = fn(origin)
    best_s, best_f = 0.0, f0

    def f(s: float) -> float:
        nonlocal best_s, best_f
        val = fn(origin + s * direction)
        if val < best_f:
            best_s, best_f = s, val
        return val

    try:
        h = opts.initial_step
        fb = f(h)
        if fb < f0:
            a, b = 0.0, h
        else:
            fm = f(-h)
            if fm >= f0:
                # origin is the lowest of three points: bracket found
                _golden(f, -h, 0.0, h, f0, opts.x_tolerance)
                return best_s, best_f
            a, b, fb = 0.0, -h, fm
        c = b + GOLDEN * (b - a)
        fc = f(c)
        expansions = 0
        while fc < fb:
            expansions += 1
            if expansions > opts.max_expansions or not math.isfinite(c):
                return 0.0, f0
            a, b, fb = b, c, fc
            c = b + GOLDEN * (b - a)
            fc = f(c)
        _golden(f, a, b, c, fb, opts.x_tolerance)
    except _Budget:
        pass
    return best_s, best_f


def _golden(f, a: float, b: float, c: float, fb: float, tol: float) -> None:
    """Shrink the bracket ``a, b, c`` (either orientation) around its interior minimum."""
    lo, hi = min(a, c), max(a, c)
    x, fx = b, fb
    while hi - lo > tol * (1.0 + abs(x)):
        if x - lo > hi - x:
            u = x - (1.0 - INV_GOLDEN) * (x - lo)
            fu = f(u)
            if fu < fx:
                hi, x, fx = x, u, fu
            else:
                lo = u
        else:
            u = x + (1.0 - INV_GOLDEN) * (hi - x)
            fu = f(u)
            if fu < fx:
                lo, x, fx = x, u, fu
            else:
                hi = u


def powell_minimize(objective: Callable[[np.ndarray], float], x0,
                    opts: MinimizeOptions = MinimizeOptions()) -> MinimizeResult:
    """Minimize ``objective`` from ``x0`` with Powell's method plus seeded restarts.

    Each iteration line-minimizes along every direction of the set, then
    along the net displacement, which replaces the direction that gave the
    largest decrease (unless Powell's test says the set would degenerate).
    The set is reset to the coordinate axes every ``len(x0)`` iterations.
    The result is never worse than ``x0``.
    """
    x0 = np.array(x0, dtype=float).ravel()
    if x0.size < 1:
        raise ValueError("x0 must have dimension >= 1")
    fn = _Counted(objective, opts.max_evaluations)
    f0 = fn(x0)
    if not math.isfinite(f0):
        raise ValueError(f"objective is not finite at x0 (got {f0})")
    best = _Incumbent(x0.copy(), f0)
    try:
        iterations, converged = _powell_run(fn, best, opts)
    except _Budget:
        return MinimizeResult(best.x, best.f, fn.calls, False, opts.max_iterations, best.trace)
    rng = np.random.default_rng(opts.seed)
    for _ in range(opts.restarts):
        start = best.x + rng.uniform(-opts.restart_scale, opts.restart_scale, size=x0.size)
        local = None
        try:
            fs = fn(start)
            if not math.isfinite(fs):
                continue
            local = _Incumbent(start, fs, trace=None)
            its, conv = _powell_run(fn, local, opts)
            iterations += its
        except _Budget:
            conv = False
        if local is not None and local.f < best.f:
            best.accept(local.x, local.f)
            converged = conv
        if fn.calls >= fn.limit:
            break
    return MinimizeResult(best.x, best.f, fn.calls, converged, iterations, best.trace)


class _Incumbent:
    def __init__(self, x: np.ndarray, f: float, trace: list | None = ...):
        self.x, self.f = x, f
        self.trace = [f] if trace is ... else trace

    def accept(self, x: np.ndarray, f: float) -> None:
        if f < self.f:
            self.x, self.f = x, f
            if self.trace is not None:
                self.trace.append(f)


def _powell_run(fn: _Counted, inc: _Incumbent, opts: MinimizeOptions) -> tuple[int, bool]:
    n = inc.x.size
    dirs = np.eye(n)
    for it in range(1, opts.max_iterations + 1):
        if it > 1 and (it - 1) % n == 0:
            dirs = np.eye(n)
        x_start, f_start = inc.x.copy(), inc.f
        big_drop, big_i = 0.0, 0
        for i in range(n):
            f_before = inc.f
            s, f_new = _line_minimize(fn, inc.x, dirs[i], opts, inc.f)
            inc.accept(inc.x + s * dirs[i], f_new)
            if f_before - inc.f > big_drop:
                big_drop, big_i = f_before - inc.f, i
        disp = inc.x - x_start
        norm = float(np.linalg.norm(disp))
        if norm > 0:
            f_ext = fn(inc.x + disp)
            if f_ext < f_start:
                test = (2.0 * (f_start - 2.0 * inc.f + f_ext) * (f_start - inc.f - big_drop) ** 2
                        - big_drop * (f_start - f_ext) ** 2)
                if test < 0:
                    d = disp / norm
                    s, f_new = _line_minimize(fn, inc.x, d, opts, inc.f)
                    inc.accept(inc.x + s * d, f_new)
                    dirs[big_i] = dirs[-1]
                    dirs[-1] = d
        step = float(np.linalg.norm(inc.x - x_start))
        if f_start - inc.f < opts.f_tolerance and step <= XSCALE * opts.x_tolerance * (1.0 + float(np.linalg.norm(inc.x))):
            return it, True
    return opts.max_iterations, False
