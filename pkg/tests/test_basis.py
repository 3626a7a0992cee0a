import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rlhaar.basis import (
    GAMMA_5_2,
    BasisIndex,
    RLParams,
    drift_term,
    eval_H,
    eval_H_asymptotic,
    eval_haar,
    gamma_fn,
    integrated_haar,
    integrated_haar_level,
    second_difference_power,
)

P32 = RLParams(1.5)


def mp_second_difference(x, h, alpha):
    mpmath.mp.dps = 50
    x, h, a = mpmath.mpf(x), mpmath.mpf(h), mpmath.mpf(alpha)
    plus = lambda v: v**a if v > 0 else mpmath.mpf(0)
    return plus(x) - 2 * plus(x - h) + plus(x - 2 * h)


@pytest.mark.parametrize(
    "j,k,t,expected",
    [(0, 0, 0.25, 1.0), (0, 0, 0.5, -1.0), (2, 1, 0.3, 2.0), (0, 0, 0.0, 1.0), (3, 7, 1.0, 0.0)],
)
def test_haar_values(j, k, t, expected):
    assert eval_haar(j, k, t) == expected


def test_haar_vanishes_at_one_for_every_pair():
    for j in range(8):
        assert not np.any(eval_haar(j, (1 << j) - 1, np.array([1.0])))


def test_haar_rejects_bad_shift():
    with pytest.raises(ValueError):
        eval_haar(2, 4, 0.5)
    with pytest.raises(ValueError):
        BasisIndex(3, -1)


def test_haar_orthonormal_exact():
    # Every h_{j,k} with j <= 6 is constant on the 128 cells of level 7, so
    # the midpoint rule on that partition is the exact integral.
    mids = (np.arange(128) + 0.5) / 128
    rows = [eval_haar(j, k, mids) for j in range(7) for k in range(1 << j)]
    V = np.array(rows)
    gram = V @ V.T / 128
    assert np.max(np.abs(gram - np.eye(len(rows)))) < 1e-12


@pytest.mark.parametrize(
    "t,expected", [(0.0, 0.0), (-3.0, 0.0), (1.0, 1.0), (2.0, 2**1.5 - 2), (100.0, 0.07537831683569311)]
)
def test_H_values(t, expected):
    assert eval_H(t) == pytest.approx(expected, rel=1e-13, abs=1e-15)


def test_H_100_close_to_shifted_asymptote():
    assert abs(eval_H(100.0) / (0.75 * 99**-0.5) - 1) < 1e-3


def test_H_asymptotic_form():
    assert eval_H_asymptotic(4.0) == 0.375
    assert eval_H_asymptotic(100.0) == 0.075
    assert abs(eval_H(10000.0) / eval_H_asymptotic(10000.0) - 1) < 1e-3
    with pytest.raises(ValueError):
        eval_H_asymptotic(1.9)


@pytest.mark.parametrize("t", [2.5, 7.0, 15.9, 16.0, 16.1, 40.0, 999.0, 2048.0, 1e4, 3.3e5, 1e8])
def test_H_against_high_precision(t):
    ref = float(mp_second_difference(t, 1, 1.5))
    assert eval_H(t) == pytest.approx(ref, rel=1e-14)


@given(
    x=st.floats(1e-3, 1e6),
    h=st.floats(1e-4, 1.0),
    alpha=st.floats(0.55, 4.0),
)
def test_second_difference_matches_mpmath(x, h, alpha):
    ref = float(mp_second_difference(x, h, alpha))
    got = float(second_difference_power(x, h, alpha))
    scale = max(abs(ref), 1e-300)
    # direct branch may lose ~1/u^2 = 256 ulps near the switch
    assert abs(got - ref) <= 1e-12 * scale + 1e-15 * abs(x) ** alpha


def test_H_nonnegative_and_decreasing():
    t = np.linspace(0, 50, 20001)
    assert np.all(eval_H(t) >= 0)
    g = np.geomspace(2.01, 1e6, 4000)
    assert np.all(np.diff(eval_H(g)) < 0)


def test_H_asymptotic_band():
    t = np.geomspace(200, 1e8, 500)
    assert np.max(np.abs(eval_H(t) / (0.75 * t**-0.5) - 1)) <= 0.01


def test_integrated_haar_examples():
    assert integrated_haar(P32, 0, 0, 1.0) == pytest.approx((1 - 2 * 0.5**1.5) / GAMMA_5_2, rel=1e-14)
    assert integrated_haar(P32, 0, 0, 1.0) == pytest.approx(0.2203297, abs=5e-8)
    lhs = integrated_haar(P32, 3, 5, 0.9)
    rhs = eval_H(2**4 * 0.9 - 10) / (2 ** (1.5 + 3) * GAMMA_5_2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@given(j=st.integers(0, 10), data=st.data(), alpha=st.floats(0.51, 3.0))
def test_integrated_haar_support(j, data, alpha):
    k = data.draw(st.integers(0, (1 << j) - 1))
    edge = 2 * k / 2 ** (j + 1)
    t = np.linspace(0, edge, 50)
    assert np.all(integrated_haar(RLParams(alpha), j, k, t) == 0.0)


@pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5, 2.5])
def test_integrated_haar_continuous(alpha):
    p = RLParams(alpha)
    delta = 1e-5
    t = np.arange(0, 1 + delta / 2, delta)
    for j, k in [(0, 0), (2, 1), (5, 17)]:
        v = integrated_haar(p, j, k, t)
        jump = np.max(np.abs(np.diff(v)))
        # |phi(t+d) - phi(t)| <= C d^{min(alpha,1)}, C ~ 2^{j/2} 2^{j(1-min)}.
        const = 4 * 2 ** (j / 2) * 2 ** (j * max(0.0, 1 - min(alpha, 1))) / p.gamma_alpha_plus_1
        assert jump < const * delta ** min(alpha, 1.0)


def test_level_matrix_matches_pointwise():
    t = np.linspace(0, 1, 33)
    p = RLParams(2.2)
    M = integrated_haar_level(p, 3, t)
    for k in range(8):
        np.testing.assert_allclose(M[k], integrated_haar(p, 3, k, t), rtol=0, atol=1e-16)


def test_drift_values():
    assert drift_term(P32, 0.0) == 0.0
    assert drift_term(P32, 1.0) == pytest.approx(1 / (3 * math.sqrt(math.pi) / 4), rel=1e-15)
    assert drift_term(P32, 1.0) == pytest.approx(0.7522528, abs=1e-7)
    assert drift_term(RLParams(1.0), 0.5) == 0.5


@given(alpha=st.floats(0.5000001, 12.0))
def test_params_gamma_relation(alpha):
    p = RLParams(alpha)
    assert abs(p.gamma_alpha_plus_1 / (alpha * p.gamma_alpha) - 1) < 1e-12


@pytest.mark.parametrize("alpha", [0.5, 0.2, -1.0, float("nan"), float("inf")])
def test_params_reject(alpha):
    with pytest.raises(ValueError):
        RLParams(alpha)


@pytest.mark.parametrize("x", [0.5, 1.5, 2.5, 3.0, 7.5, 0.75, 1.37, 11.0, 20.5])
def test_gamma_accuracy(x):
    mpmath.mp.dps = 30
    assert gamma_fn(x) == pytest.approx(float(mpmath.gamma(x)), rel=1e-13)


def test_gamma_5_2_exact():
    assert RLParams(1.5).gamma_alpha_plus_1 == GAMMA_5_2


@given(code=st.integers(0, 2**30))
def test_basis_index_code_roundtrip(code):
    ix = BasisIndex.from_code(code)
    assert ix.code == code
    if code:
        assert 0 <= ix.k < 2**ix.j


def test_basis_index_drift():
    d = BasisIndex.drift()
    assert d.is_drift and d.code == 0 and str(d) == "drift"
    with pytest.raises(ValueError):
        BasisIndex(-1, 3)
