import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from assistive_bandit.cpt import (REFERENCE_PARAMS, CptParams, Prospect, bias_probability_row,
                                  bias_probability_rows, cpt_value, decision_weights,
                                  probability_weight, value_inverse, value_transform)

P = REFERENCE_PARAMS
CLASS_VALUES = (-1.0, 0.5, 2.0)


def w_scalar(p, g):
    if p == 0:
        return 0.0
    return p ** g / (p ** g + (1 - p) ** g) ** (1 / g)


def brute_weights(values, probs, gamma, delta):
    """pi_i from tail probabilities, one outcome at a time."""
    out = []
    for x, _ in zip(values, probs):
        if x >= 0:
            ge = sum(q for v, q in zip(values, probs) if v >= x)
            gt = sum(q for v, q in zip(values, probs) if v > x)
            out.append(w_scalar(min(ge, 1), gamma) - w_scalar(min(gt, 1), gamma))
        else:
            le = sum(q for v, q in zip(values, probs) if v <= x)
            lt = sum(q for v, q in zip(values, probs) if v < x)
            out.append(w_scalar(min(le, 1), delta) - w_scalar(min(lt, 1), delta))
    return np.array(out)


def test_value_transform_examples():
    assert value_transform(0.0, P) == 0.0
    assert value_transform(4.0, P) == pytest.approx(2.0)
    assert value_transform(-4.0, P) == pytest.approx(-4.0)


def test_value_inverse_examples():
    assert value_inverse(2.0, P) == pytest.approx(4.0)
    assert value_inverse(-4.0, P) == pytest.approx(-4.0)
    assert value_inverse(0.0, P) == 0.0


def test_value_transform_vectorized_matches_scalar():
    xs = np.array([-3.0, -0.2, 0.0, 0.7, 9.0])
    assert np.allclose(value_transform(xs, P), [value_transform(float(x), P) for x in xs])


@given(st.floats(-100, 100, allow_nan=False))
def test_value_round_trip(x):
    assert abs(value_inverse(value_transform(x, P), P) - x) <= 1e-9 * max(1.0, abs(x))


@given(st.floats(1e-6, 100))
def test_loss_aversion(x):
    assert value_transform(-x, P) <= -value_transform(x, P)


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_value_transform_increasing(a, b):
    lo, hi = sorted((a, b))
    assert value_transform(lo, P) <= value_transform(hi, P)


def test_probability_weight_examples():
    assert probability_weight(0.0, 0.5) == 0.0
    assert probability_weight(1.0, 0.5) == 1.0
    assert probability_weight(0.5, 0.5) == pytest.approx(0.35355, abs=1e-5)
    w = probability_weight(0.01, 0.5)
    assert w == pytest.approx(0.08340, abs=1e-5)
    assert w > 0.01


@pytest.mark.parametrize("p", [-0.1, 1.0001, float("nan")])
def test_probability_weight_domain(p):
    with pytest.raises(ValueError):
        probability_weight(p, 0.5)


# the weighting function loses monotonicity for exponents below ~0.28
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.3, 1.0))
def test_probability_weight_monotone(p, q, g):
    lo, hi = sorted((p, q))
    assert probability_weight(lo, g) <= probability_weight(hi, g) + 1e-15


def test_decision_weights_examples():
    assert np.allclose(decision_weights(Prospect.sure(0.5), P), [1.0])
    pi = decision_weights(Prospect.from_outcomes([(-1, 0.3), (2, 0.7)]), P)
    assert np.allclose(pi, [0.28579, 0.43656], atol=1e-4)
    pi = decision_weights(Prospect.from_outcomes([(1, 0.5), (2, 0.5)]), P)
    assert np.allclose(pi, [0.64645, 0.35355], atol=1e-4)


@settings(max_examples=200)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(0.01, 1)), min_size=1, max_size=5))
def test_decision_weights_match_brute_force(outcomes):
    total = sum(p for _, p in outcomes)
    pr = Prospect.from_outcomes([(v, p / total) for v, p in outcomes])
    assert np.allclose(decision_weights(pr, P), brute_weights(pr.values, pr.probs, 0.5, 0.5), atol=1e-12)


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0, 1))
def test_two_gain_weights_sum_to_one(a, b, p):
    if a == b:
        return
    pr = Prospect.from_outcomes([(a, p), (b, 1 - p)])
    assert decision_weights(pr, P).sum() == pytest.approx(1.0, abs=1e-12)


def test_cpt_value_examples():
    assert cpt_value(Prospect.sure(0.5), P) == pytest.approx(0.70711, abs=1e-5)
    assert cpt_value(Prospect.from_outcomes([(-1, 0.3), (2, 0.7)]), P) == pytest.approx(0.04578, abs=1e-3)
    assert cpt_value(Prospect.from_outcomes([(0.0, 0.4), (0.0, 0.6)]), P) == 0.0


def test_cpt_value_hand_computation():
    # 0.43656 * sqrt(2) - 0.28579 * 2, from the closed-form weights
    wp = math.sqrt(0.7) / (math.sqrt(0.7) + math.sqrt(0.3)) ** 2
    wm = math.sqrt(0.3) / (math.sqrt(0.3) + math.sqrt(0.7)) ** 2
    expected = wp * math.sqrt(2) - wm * 2
    assert cpt_value(Prospect.from_outcomes([(-1, 0.3), (2, 0.7)]), P) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=200)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(0.01, 1)), min_size=1, max_size=5))
def test_unbiased_params_give_expectation(outcomes):
    total = sum(p for _, p in outcomes)
    pr = Prospect.from_outcomes([(v, p / total) for v, p in outcomes])
    assert cpt_value(pr, CptParams.unbiased()) == pytest.approx(pr.mean(), abs=1e-9)


def test_prospect_canonicalization():
    pr = Prospect.from_outcomes([(2, 0.25), (-1, 0.5), (2, 0.25)])
    assert pr.values == (-1.0, 2.0)
    assert pr.probs == (0.5, 0.5)
    with pytest.raises(ValueError):
        Prospect.from_outcomes([(1, 0.5), (2, 0.4)])
    with pytest.raises(ValueError):
        Prospect.from_outcomes([(1, 1.5), (2, -0.5)])


def test_bias_probability_row_examples():
    assert np.allclose(bias_probability_row([0, 1, 0], CLASS_VALUES, P), [0, 1, 0])
    assert np.allclose(bias_probability_row([0.3, 0, 0.7], CLASS_VALUES, P), [0.28579, 0, 0.43656], atol=1e-4)


def test_bias_probability_rows_nonnegative_and_match_single_rows():
    rng = np.random.default_rng(11)
    rows = rng.dirichlet(np.ones(3) * 0.7, size=1000)
    rows[:100, 1] = 0.0
    rows /= rows.sum(axis=1, keepdims=True)
    out = bias_probability_rows(rows, CLASS_VALUES, P)
    assert np.all(out >= 0)
    for row, got in zip(rows[:50], out[:50]):
        assert np.allclose(got, bias_probability_row(row, CLASS_VALUES, P))
        assert np.allclose(got, brute_weights(CLASS_VALUES, row, 0.5, 0.5), atol=1e-12)


def test_simple_weighting_mode():
    out = bias_probability_row([0.3, 0, 0.7], CLASS_VALUES, P, mode="simple")
    assert np.allclose(out, [w_scalar(0.3, 0.5), 0.0, w_scalar(0.7, 0.5)])
    with pytest.raises(ValueError):
        bias_probability_row([0.3, 0, 0.7], CLASS_VALUES, P, mode="other")


@pytest.mark.parametrize("kw", [dict(alpha=0), dict(beta=1.5), dict(lam=0.5), dict(gamma=0), dict(theta=-1)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        CptParams(**kw)


def test_params_dict_round_trip():
    d = P.to_dict()
    assert d["lambda"] == 2.0
    assert CptParams.from_dict(d) == P
