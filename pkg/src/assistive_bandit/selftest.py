"""Analytic examples and quick property sweeps runnable without pytest."""

from __future__ import annotations

import numpy as np

from . import cpt, optim, stats
from .bandit import make_reference_instances, sample_stream
from .cpt import REFERENCE_PARAMS, CptParams, Prospect


def _checks():
    p = REFERENCE_PARAMS
    yield "v(4) = 2", abs(cpt.value_transform(4.0, p) - 2.0) < 1e-12
    yield "v(-4) = -4", abs(cpt.value_transform(-4.0, p) + 4.0) < 1e-12
    xs = np.linspace(-100, 100, 2001)
    err = np.abs(cpt.value_inverse(cpt.value_transform(xs, p), p) - xs) / np.maximum(1, np.abs(xs))
    yield "value round trip on [-100, 100]", float(err.max()) <= 1e-9
    yield "w(0.5) at gamma 0.5", abs(cpt.probability_weight(0.5, 0.5) - 0.35355) < 1e-5
    yield "w(0.01) at gamma 0.5", abs(cpt.probability_weight(0.01, 0.5) - 0.08340) < 1e-5
    risky = Prospect.from_outcomes([(-1.0, 0.3), (2.0, 0.7)])
    yield "CPT value of the risky reference arm", abs(cpt.cpt_value(risky, p) - 0.04578) < 1e-3
    yield "CPT value of a sure 0.5", abs(cpt.cpt_value(Prospect.sure(0.5), p) - 0.70711) < 1e-5
    rng = np.random.default_rng(7)
    flat = CptParams.unbiased()
    ok = True
    for _ in range(200):
        vals = np.sort(rng.normal(size=3) * 3)
        probs = rng.dirichlet(np.ones(3))
        pr = Prospect.from_outcomes(zip(vals, probs))
        ok &= abs(cpt.cpt_value(pr, flat) - pr.mean()) < 1e-9
    yield "bias disabled gives the expectation", bool(ok)

    res = optim.powell_minimize(lambda x: (x[0] - 1) ** 2 + (x[1] - 2) ** 2, [0.0, 0.0])
    yield "Powell on a shifted paraboloid", bool(np.allclose(res.x_best, [1, 2], atol=1e-6))
    rosen = optim.powell_minimize(lambda x: (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2,
                                  [-1.2, 1.0], optim.MinimizeOptions(restarts=0))
    yield "Powell on Rosenbrock", bool(np.allclose(rosen.x_best, [1, 1], atol=1e-5))
    yield "Powell trace is monotone", bool(np.all(np.diff(rosen.trace) <= 0))

    yield "summary std of (2,4,4,4,5,5,7,9)", abs(stats.summarize("x", [2, 4, 4, 4, 5, 5, 7, 9]).std - 2.13809) < 1e-4
    a = stats.one_way_anova([[1, 2, 3], [4, 5, 6]])
    # F(1, 4) tail at 13.5 equals the two-sided t(4) tail at sqrt(13.5)
    yield "ANOVA F = 13.5", abs(a.f_statistic - 13.5) < 1e-12
    yield "F tail via incomplete beta", abs(a.p_value - 0.0213116411) < 1e-8

    d1, d2 = make_reference_instances()
    yield "reference means", bool(np.allclose(d1.true_means(), [0.5, 1.1]) and np.allclose(d2.true_means(), [0.5, 0.35]))
    s1, s2 = sample_stream(d1, 50, 3), sample_stream(d1, 50, 3)
    yield "stream determinism", bool(np.array_equal(s1.draws, s2.draws))
    yield "degenerate arm stream", bool(np.all(s1.draws[0] == 1))


def run_selftest(verbose: bool = True) -> bool:
    passed = True
    for name, ok in _checks():
        passed &= bool(ok)
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return passed


if __name__ == "__main__":
    raise SystemExit(0 if run_selftest() else 1)
