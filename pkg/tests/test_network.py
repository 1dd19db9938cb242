import numpy as np
import pytest

from skim.errors import ParameterError, ShapeError
from skim.events import ContinuousSignal, EventStream, poisson_generate
from skim.kernels import KernelFamily, KernelSpec
from skim.network import (
    HiddenLayer,
    SkimModel,
    forward,
    forward_streaming,
    hidden_activity,
    init_random,
    iter_hidden,
    threshold_events,
)


def test_init_desk_shape():
    h = init_random(6, 5, 250, "delayed_gaussian", seed=0)
    assert h.w1.shape == (250, 6)
    assert len(h.kernels) == 250
    assert {k.family for k in h.kernels} == {KernelFamily.DELAYED_GAUSSIAN}


def test_init_degenerate_ranges():
    h = init_random(2, 2, 1, "delayed_alpha", param_ranges={"tau": (7, 7), "delta_t": (30, 30)}, seed=3)
    k = h.kernels[0]
    assert (k.family, k.tau, k.delta_t) == (KernelFamily.DELAYED_ALPHA, 7.0, 30.0)


def test_init_deterministic_and_mixed():
    fams = {"alpha": 1, "leaky_integrator": 1, "damped_resonant": 2}
    a = init_random(4, 3, 40, fams, seed=9)
    b = init_random(4, 3, 40, fams, seed=9)
    assert np.array_equal(a.w1, b.w1)
    assert a.kernels == b.kernels
    assert len({k.family for k in a.kernels}) == 3


def test_init_errors():
    with pytest.raises(ParameterError):
        init_random(2, 2, 5, {}, seed=0)
    with pytest.raises(ParameterError):
        init_random(2, 2, 5, "alpha", param_ranges={"tau": (9, 3)}, seed=0)
    with pytest.raises(ParameterError):
        init_random(2, 2, 5, "alpha", param_ranges={"gain": (1, 2)}, seed=0)


def test_hidden_layer_validation():
    k = [KernelSpec("alpha", tau=3)] * 2
    with pytest.raises(ParameterError):
        HiddenLayer(np.array([[1.0, 0.0], [0.0, 0.0]]), k, 2)
    with pytest.raises(ShapeError):
        HiddenLayer(np.ones((3, 2)), k, 2)


def test_forward_empty_input():
    h = init_random(3, 3, 20, "alpha", seed=1)
    m = SkimModel(h, np.ones((1, 20)), [0.5])
    tr = forward(m, EventStream.empty(3, 200))
    assert not tr.hidden_out.any() and not tr.y.any() and len(tr.z) == 0


def test_forward_single_alpha_unit():
    spec = KernelSpec("alpha", tau=20)
    m = SkimModel(HiddenLayer(np.eye(1), [spec], 1), np.ones((1, 1)), [10.0])
    T = 200
    tr = forward(m, EventStream.from_pairs(1, T, [(0, 0)]))
    t = np.arange(T)
    np.testing.assert_allclose(tr.y[0], np.tanh((t / 20) * np.exp(-t / 20)), rtol=0, atol=1e-15)


def test_forward_continuous_only_is_plain_elm(rng):
    L, M, T = 4, 30, 500
    h = init_random(L, 0, M, "alpha", seed=2)
    w2 = rng.normal(size=(2, M))
    X = rng.normal(size=(L, T))
    m = SkimModel(h, w2, [0.0, 0.0])
    tr = forward(m, EventStream.empty(0, T), ContinuousSignal(X))
    # reference ELM, one column at a time
    ref = np.column_stack([w2 @ np.tanh(h.w1 @ X[:, t]) for t in range(T)])
    np.testing.assert_allclose(tr.y, ref, rtol=0, atol=1e-12)


def test_forward_channel_mismatch():
    h = init_random(3, 3, 5, "alpha", seed=1)
    m = SkimModel(h, np.ones((1, 5)), [0.5])
    with pytest.raises(ShapeError):
        forward(m, EventStream.empty(2, 10))
    h2 = init_random(4, 3, 5, "alpha", seed=1)
    with pytest.raises(ShapeError):
        forward(SkimModel(h2, np.ones((1, 5)), [0.5]), EventStream.empty(3, 10))


def test_chunking_and_streaming_agree():
    fams = {"alpha": 1, "delayed_gaussian": 1, "leaky_integrator": 1, "damped_resonant": 1}
    h = init_random(3, 2, 25, fams, seed=5)
    ev = poisson_generate(2, 1500, 0.02, seed=6)
    cont = ContinuousSignal(np.sin(np.arange(1500) / 50.0)[None, :])
    m = SkimModel(h, np.random.default_rng(0).normal(size=(1, 25)), [0.1])
    a = hidden_activity(h, ev, cont)
    b = np.hstack(list(iter_hidden(h, ev, cont, chunk=97)))
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
    s = forward_streaming(m, ev, cont)
    np.testing.assert_allclose(s.hidden_out, a, rtol=0, atol=1e-12)


def test_threshold_events():
    assert len(threshold_events(np.zeros((1, 6)), 0.5)) == 0
    z = threshold_events(np.array([[0.2, 0.9, 0.4]]), 0.5)
    assert z.pairs() == [(1, 0)]
    assert len(threshold_events(np.zeros((2, 7)), -1e300)) == 14
    # strict comparison
    assert len(threshold_events(np.array([[0.5]]), 0.5)) == 0
