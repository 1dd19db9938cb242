import math

import numpy as np
import pytest

from skim.analysis import estimate_strf, reverse_correlate, score_attention_confusion, xcorr, zero_lag
from skim.errors import ParameterError, ShapeError
from skim.kernels import KernelSpec
from skim.network import HiddenLayer, SkimModel, init_random


def brute_xcorr(f, g, max_lag):
    n = len(f)
    out = []
    for lag in range(-max_lag, max_lag + 1):
        s = 0.0
        for t in range(n):
            if 0 <= t + lag < n:
                s += f[t] * g[t + lag]
        out.append(s)
    return np.array(out)


def single_unit_model(delta_t=70.0, sigma=5.0):
    spec = KernelSpec("delayed_gaussian", delta_t=delta_t, sigma=sigma)
    peak = math.tanh(1.0 / (sigma * math.sqrt(2 * math.pi)))
    return SkimModel(HiddenLayer(np.eye(1), [spec], 1), np.ones((1, 1)), [peak * 0.99])


def test_pulse_autocorrelation():
    x = np.zeros(100)
    x[40:50] = 1
    c = xcorr(x, x, 15)
    assert zero_lag(c) == 10
    expect = np.maximum(10 - np.abs(c.lags), 0)
    assert np.array_equal(c.values, expect)


def test_disjoint_support():
    a, b = np.zeros(50), np.zeros(50)
    a[:10], b[30:] = 1, 1
    assert not xcorr(a, b, 15).values.any()


def test_xcorr_brute_force(rng):
    f = (rng.random(300) < 0.1).astype(float)
    g = (rng.random(300) < 0.2).astype(float)
    c = xcorr(f, g, 40)
    assert np.max(np.abs(c.values - brute_xcorr(f, g, 40))) < 1e-9


def test_xcorr_normalization_and_errors():
    x = np.zeros(40)
    x[5:15] = 1
    assert zero_lag(xcorr(x, x, 3, "unit-peak-autocorr")) == 1.0
    with pytest.raises(ParameterError):
        xcorr(x, x, 3, "bogus")
    with pytest.raises(ShapeError):
        xcorr(x, x[:-1], 3)


def test_reverse_correlate_known_offsets():
    x = np.zeros((2, 50))
    x[1, [10, 30]] = 1
    sta, used = reverse_correlate(x, np.array([2, 13, 33]), 5)
    assert used == 2  # trigger at 2 is too early for 5 lags
    assert sta[1, 3] == 1.0 and sta.sum() == 1.0


def test_strf_zero_triggers():
    h = init_random(2, 2, 5, "alpha", seed=0)
    m = SkimModel(h, np.ones((1, 5)), [100.0])
    (s,) = estimate_strf(m, 0.05, 2000, 20, seed=1)
    assert s.n_trigger_events == 0 and not s.field.any()


def test_strf_single_kernel_delay():
    (s,) = estimate_strf(single_unit_model(), 0.05, 30000, 110, seed=3)
    assert s.n_trigger_events > 20
    assert abs(int(np.argmax(s.field[0])) - 70) <= 5
    assert np.all(s.field >= -s.baseline[:, None] - 1e-12)
    assert np.all(s.field <= 1 - s.baseline[:, None] + 1e-12)


def test_strf_validation():
    with pytest.raises(ParameterError):
        estimate_strf(single_unit_model(), 1.5, 100, 10)


def _regimes(T=2000, period=500):
    att = np.where((np.arange(T) // period) % 2 == 0, 1.0, -1.0)
    ta, tb = np.zeros(T), np.zeros(T)
    for s in range(50, T, 200):
        ta[s : s + 10] = 1
        tb[s + 100 : s + 110] = 1
    return ta, tb, att


def test_confusion_perfect_output():
    ta, tb, att = _regimes()
    out = np.where(att > 0, ta, tb)
    sc = score_attention_confusion(ta, tb, out, att, 20)
    assert set(sc.curves) == {"A|+", "B|+", "A|-", "B|-"}
    assert all(v == 0 for v in sc.incorrect_zero_lag.values())
    assert sc.summary > 10
    assert zero_lag(sc.references["A|+"]) == sc.correct_zero_lag["A|+"]


def test_confusion_zero_output():
    ta, tb, att = _regimes()
    sc = score_attention_confusion(ta, tb, np.zeros_like(ta), att, 20)
    assert all(not c.values.any() for c in sc.curves.values())
    assert sc.summary == 1.0


def test_confusion_constant_attention_flagged():
    ta, tb, _ = _regimes()
    sc = score_attention_confusion(ta, tb, ta, np.ones_like(ta), 20)
    assert len(sc.curves) == 2 and sc.flags
    assert sc.summary == pytest.approx((100 + 1) / (0 + 1))
