import numpy as np
import pytest

from skim import solver
from skim.bench import ModelParams, ScenarioConfig, build_scenario, make_hidden
from skim.errors import ParameterError, ShapeError
from skim.events import ContinuousSignal, EventStream, to_dense
from skim.kernels import KernelSpec
from skim.network import HiddenLayer, forward, iter_hidden
from skim.trainer import (
    TargetSpec,
    fit_threshold,
    match_detections,
    pulse_windows,
    train,
    widen_targets,
)


def test_widen_identity(rng):
    s = EventStream.from_pairs(2, 50, [(3, 0), (10, 1), (49, 1)])
    assert np.array_equal(widen_targets(TargetSpec(s, widen=1)), to_dense(s))


def test_widen_pulse_and_clip():
    T = 40
    y = widen_targets(TargetSpec(EventStream.from_pairs(1, T, [(5, 0), (T - 3, 0)]), widen=10))
    expect = np.zeros(T)
    expect[5:15] = 1
    expect[T - 3 :] = 1
    assert np.array_equal(y[0], expect)


def test_widen_overlap_stays_binary():
    y = widen_targets(TargetSpec(EventStream.from_pairs(1, 30, [(0, 0), (4, 0)]), widen=10, amplitude=2.5))
    assert set(np.unique(y)) == {0.0, 2.5}
    assert np.count_nonzero(y) == 14


def test_target_spec_validation():
    with pytest.raises(ParameterError):
        TargetSpec(EventStream.empty(1, 5), widen=0)
    with pytest.raises(ParameterError):
        TargetSpec(EventStream.empty(1, 5), amplitude=0)


def test_pulse_windows_and_matching():
    mask = np.array([0, 1, 1, 0, 0, 1, 0, 0, 0, 0], bool)
    wins = pulse_windows(mask)
    assert wins == [(1, 3), (5, 6)]
    z = np.array([0, 0, 1, 0, 0, 0, 0, 1, 1, 0], bool)
    hits, fa = match_detections(z, wins)
    assert (hits, fa) == (1, 1)
    # an output run that starts inside a window and spills out counts the spill once
    z2 = np.array([0, 1, 1, 1, 1, 0, 0, 0, 0, 0], bool)
    assert match_detections(z2, wins) == (1, 1)


def test_threshold_midpoint():
    fit = fit_threshold(np.array([[0, 0, 1, 1, 0.0]]), np.array([[0, 0, 1, 1, 0.0]]))
    assert fit.theta[0] == pytest.approx(0.5)
    assert fit.separable[0]


def test_threshold_no_pulses_never_fires():
    y = np.array([[0.1, 0.7, -0.2]])
    fit = fit_threshold(y, np.zeros((1, 3)))
    assert fit.theta[0] == pytest.approx(1.7)
    assert fit.flags


def test_threshold_degenerate_flagged():
    tgt = np.zeros((1, 20))
    tgt[0, 5:10] = 1
    fit = fit_threshold(np.zeros((1, 20)), tgt)
    assert not fit.separable[0]
    assert any("degenerate" in f for f in fit.flags)


def _midpoint_oracle(y, tgt):
    # written independently: walk the sequence, collect pulse peaks and off-target max
    peaks, off, cur = [], -np.inf, None
    for v, inside in zip(y, tgt > 0):
        if inside:
            cur = v if cur is None else max(cur, v)
        else:
            if cur is not None:
                peaks.append(cur)
                cur = None
            off = max(off, v)
    if cur is not None:
        peaks.append(cur)
    return (min(peaks) + off) / 2


def test_threshold_random_separable(rng):
    for _ in range(20):
        T = 300
        tgt = np.zeros(T)
        for s in rng.choice(np.arange(0, T - 10, 20), size=5, replace=False):
            tgt[s : s + 10] = 1
        y = rng.uniform(-1, 0.3, size=T)
        y[tgt > 0] = rng.uniform(-1, 0.3, size=int(tgt.sum()))
        for a, b in pulse_windows(tgt > 0):
            y[a + rng.integers(b - a)] = rng.uniform(0.5, 2)
        fit = fit_threshold(y[None], tgt[None])
        assert fit.separable[0]
        assert abs(fit.theta[0] - _midpoint_oracle(y, tgt)) < 1e-9


def test_threshold_shape_error():
    with pytest.raises(ShapeError):
        fit_threshold(np.zeros((1, 4)), np.zeros((2, 4)))


def _small_hidden(seed=0):
    p = ModelParams(n_hidden=40, seed=seed)
    return make_hidden(p, 5, 1)


def test_train_zero_targets():
    scn = build_scenario(ScenarioConfig(n_steps=3000, seed=2))
    h = _small_hidden()
    model, rep = train(h, scn.inputs, scn.attention, TargetSpec(EventStream.empty(1, 3000)))
    assert not model.w2.any()
    assert len(forward(model, scn.inputs, scn.attention).z) == 0
    assert rep.zero_residual == 0.0


def test_self_target_solver():
    # one hidden unit asked to reproduce its own output
    h = HiddenLayer(np.eye(1), [KernelSpec("alpha", tau=10)], 1)
    ev = EventStream.from_pairs(1, 2000, [(t, 0) for t in range(0, 2000, 37)])
    blocks = list(iter_hidden(h, ev, chunk=500))
    st_ = solver.solve_stream(iter(blocks), iter(blocks), 1e-9)
    a = np.hstack(blocks)
    resid = np.linalg.norm(st_.W @ a - a) / np.linalg.norm(a)
    assert resid < 1e-6
    assert st_.W[0, 0] == pytest.approx(1.0, abs=1e-6)


def test_train_beats_zero_predictor():
    scn = build_scenario(ScenarioConfig(n_steps=20000, seed=4))
    h = make_hidden(ModelParams(seed=4), 5, 1)
    _, rep = train(h, scn.inputs, scn.attention, TargetSpec(scn.composite_target, widen=10))
    assert rep.train_residual < rep.zero_residual


def test_train_length_mismatch():
    h = _small_hidden()
    with pytest.raises(ShapeError):
        train(h, EventStream.empty(5, 100), ContinuousSignal(np.zeros((1, 100))),
              TargetSpec(EventStream.empty(1, 90)))
