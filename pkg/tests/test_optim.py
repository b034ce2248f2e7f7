import numpy as np
import pytest

from assistive_bandit.optim import MinimizeOptions, line_minimize, powell_minimize

NO_RESTART = MinimizeOptions(restarts=0)


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def random_spd(rng, n):
    """SPD matrix with eigenvalues in [0.5, 5] and a random orientation."""
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q @ np.diag(rng.uniform(0.5, 5.0, size=n)) @ q.T


def test_line_minimize_parabola():
    s, f = line_minimize(lambda x: (x[0] - 3) ** 2, [0.0], [1.0])
    assert s == pytest.approx(3.0, abs=1e-6)
    assert f == pytest.approx(0.0, abs=1e-10)


def test_line_minimize_flat():
    s, f = line_minimize(lambda x: 7.0, [0.0], [1.0])
    assert (s, f) == (0.0, 7.0)


def test_line_minimize_kink():
    s, _ = line_minimize(lambda x: abs(x[0] - 2), [0.0], [1.0])
    assert s == pytest.approx(2.0, abs=1e-4)


def test_line_minimize_negative_direction():
    s, _ = line_minimize(lambda x: (x[0] + 5) ** 2, [0.0], [1.0])
    assert s == pytest.approx(-5.0, abs=1e-6)


def test_line_minimize_never_worse():
    rng = np.random.default_rng(3)
    for _ in range(50):
        c = rng.normal(size=4)
        fn = lambda x: float(np.sin(3 * x @ c) + 0.1 * x @ x)  # noqa: E731
        origin, d = rng.normal(size=4), rng.normal(size=4)
        _, f = line_minimize(fn, origin, d)
        assert f <= fn(origin)


def test_line_minimize_unbounded_returns_zero_step():
    s, f = line_minimize(lambda x: -x[0], [0.0], [1.0], MinimizeOptions(max_expansions=10))
    assert (s, f) == (0.0, 0.0)


def test_line_minimize_zero_direction():
    with pytest.raises(ValueError):
        line_minimize(lambda x: x @ x, [1.0], [0.0])


def test_powell_paraboloid():
    res = powell_minimize(lambda x: x[0] ** 2 + x[1] ** 2, [1.0, 1.0])
    assert np.allclose(res.x_best, 0.0, atol=1e-8)


def test_powell_shifted_paraboloid():
    res = powell_minimize(lambda x: (x[0] - 1) ** 2 + (x[1] - 2) ** 2, [0.0, 0.0])
    assert np.allclose(res.x_best, [1, 2], atol=1e-6)


@pytest.mark.parametrize("opts", [NO_RESTART, MinimizeOptions()])
def test_powell_rosenbrock(opts):
    res = powell_minimize(rosenbrock, [-1.2, 1.0], opts)
    assert np.allclose(res.x_best, [1, 1], atol=1e-5)
    assert res.converged
    assert res.f_best == pytest.approx(rosenbrock(res.x_best))


@pytest.mark.parametrize("seed", range(10))
def test_powell_spd_quadratics(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    a, b = random_spd(rng, n), rng.normal(size=n)
    x_star = -0.5 * np.linalg.solve(a, b)
    res = powell_minimize(lambda x: x @ a @ x + b @ x, rng.normal(size=n), NO_RESTART)
    assert np.max(np.abs(res.x_best - x_star)) <= 1e-6


def test_powell_trace_monotone():
    res = powell_minimize(rosenbrock, [-1.2, 1.0])
    assert res.trace[0] == pytest.approx(rosenbrock([-1.2, 1.0]))
    assert all(b <= a for a, b in zip(res.trace, res.trace[1:]))


def test_powell_deterministic():
    fn = lambda x: float(np.floor(3 * np.abs(x - [0.3, -1.7, 2.2])).sum())  # noqa: E731
    r1 = powell_minimize(fn, [0.0, 0.0, 0.0], MinimizeOptions(seed=5))
    r2 = powell_minimize(fn, [0.0, 0.0, 0.0], MinimizeOptions(seed=5))
    assert np.array_equal(r1.x_best, r2.x_best)
    assert (r1.f_best, r1.evaluations) == (r2.f_best, r2.evaluations)


def test_powell_piecewise_constant_never_worse():
    rng = np.random.default_rng(0)
    for k in range(20):
        w = rng.normal(size=(40, 3))
        y = rng.random(40) < 0.5
        fn = lambda r: float(np.count_nonzero((w @ r > 0) != y))  # noqa: E731
        x0 = rng.normal(size=3)
        res = powell_minimize(fn, x0, MinimizeOptions(f_tolerance=0.5, x_tolerance=1e-3, seed=k))
        assert res.f_best <= fn(x0)
        assert res.f_best == fn(res.x_best)


def test_powell_evaluation_cap():
    res = powell_minimize(rosenbrock, [-1.2, 1.0], MinimizeOptions(max_evaluations=50))
    assert res.evaluations <= 50
    assert not res.converged
    assert res.f_best <= rosenbrock([-1.2, 1.0])


def test_powell_rejects_nonfinite_start():
    with pytest.raises(ValueError):
        powell_minimize(lambda x: float("inf"), [0.0])


def test_options_validation():
    with pytest.raises(ValueError):
        MinimizeOptions(x_tolerance=0)
    with pytest.raises(ValueError):
        MinimizeOptions(restarts=-1)
