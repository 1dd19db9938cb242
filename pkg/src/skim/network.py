"""Feedforward network: random input weights, kernel bank, squashing, linear readout.

Per timestep ``t`` and hidden unit ``j``::

    u = sum_i w1[j, i] * x_i(t)              (event channels)
    s = kernel_j(u)                          (synaptic filter)
    v = s + sum_c w1[j, c] * cont_c(t)       (continuous channels, post-filter)
    a[j, t] = nonlinearity(v)

and the readout is ``y = w2 @ a`` with events ``z = y > theta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy.special import expit

from .errors import ParameterError, ShapeError
from .events import ContinuousSignal, EventStream
from .kernels import FAMILY_PARAMS, KernelBank, KernelFamily, KernelSpec

NONLINEARITIES = {"tanh": np.tanh, "logistic": expit}

# ranges used by init_random when a parameter is not given
DEFAULT_PARAM_RANGES = {
    "tau": (5.0, 50.0),
    "delta_t": (0.0, 100.0),
    "sigma": (2.0, 10.0),
    "omega": (0.02, 0.3),
}


@dataclass(eq=False)
class HiddenLayer:
    """Input weights ``w1`` (``M x L``) and one kernel per hidden unit.

    The first ``n_event_inputs`` columns of ``w1`` weight event channels; the
    remaining columns weight continuous channels.
    """

    w1: np.ndarray
    kernels: list[KernelSpec]
    n_event_inputs: int
    nonlinearity: str = "tanh"

    def __post_init__(self):
        self.w1 = np.array(self.w1, dtype=np.float64, ndmin=2)
        m, n_in = self.w1.shape
        if len(self.kernels) != m:
            raise ShapeError(f"{len(self.kernels)} kernels for {m} hidden units")
        if not 0 <= self.n_event_inputs <= n_in:
            raise ShapeError(f"n_event_inputs={self.n_event_inputs} not in [0, {n_in}]")
        if not np.all(np.isfinite(self.w1)):
            raise ParameterError("w1 must be finite")
        if np.any(~self.w1.any(axis=1)):
            raise ParameterError("every hidden unit needs at least one nonzero input weight")
        if self.nonlinearity not in NONLINEARITIES:
            raise ParameterError(f"unknown nonlinearity {self.nonlinearity!r}")

    @property
    def n_inputs(self) -> int:
        return self.w1.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.w1.shape[0]

    @property
    def n_continuous(self) -> int:
        return self.n_inputs - self.n_event_inputs


@dataclass(eq=False)
class SkimModel:
    hidden: HiddenLayer
    w2: np.ndarray
    theta: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.w2 = np.array(self.w2, dtype=np.float64, ndmin=2)
        self.theta = np.array(self.theta, dtype=np.float64, ndmin=1)
        if self.w2.shape[1] != self.hidden.n_hidden:
            raise ShapeError(f"w2 has {self.w2.shape[1]} columns, expected {self.hidden.n_hidden}")
        if self.theta.shape != (self.w2.shape[0],):
            raise ShapeError(f"theta shape {self.theta.shape} != ({self.w2.shape[0]},)")
        if not np.all(np.isfinite(self.w2)):
            raise ParameterError("w2 must be finite")

    @property
    def n_outputs(self) -> int:
        return self.w2.shape[0]


@dataclass(eq=False)
class ForwardTrace:
    hidden_out: np.ndarray
    y: np.ndarray
    z: EventStream


def init_random(
    n_inputs: int,
    n_event_inputs: int,
    n_hidden: int,
    families,
    param_ranges=None,
    seed=None,
    weight_range=(-1.0, 1.0),
    nonlinearity: str = "tanh",
    continuous_weight_range=None,
) -> HiddenLayer:
    """Draw a random hidden layer.

    ``families`` is a family name, a sequence of names (equal weights) or a
    mapping from name to relative weight. Kernel parameters are drawn uniformly
    from ``param_ranges`` (``{name: (lo, hi)}``), falling back to
    ``DEFAULT_PARAM_RANGES``. Input weights are uniform in ``weight_range``;
    the columns for continuous channels use ``continuous_weight_range`` when
    given.
    """
    if n_hidden < 1:
        raise ParameterError("n_hidden must be >= 1")
    if isinstance(families, (str, KernelFamily)):
        families = {families: 1.0}
    elif not isinstance(families, dict):
        families = {f: 1.0 for f in families}
    if not families:
        raise ParameterError("family set is empty")
    names = [KernelFamily(f) for f in families]
    probs = np.array([float(w) for w in families.values()])
    if np.any(probs < 0) or probs.sum() <= 0:
        raise ParameterError("family weights must be non-negative with a positive sum")
    probs = probs / probs.sum()
    ranges = dict(DEFAULT_PARAM_RANGES)
    for k, v in (param_ranges or {}).items():
        if k not in ranges:
            raise ParameterError(f"unknown kernel parameter {k!r}")
        lo, hi = map(float, v)
        if lo > hi:
            raise ParameterError(f"range for {k} has min > max")
        ranges[k] = (lo, hi)

    rng = np.random.default_rng(seed)
    lo, hi = weight_range
    w1 = rng.uniform(lo, hi, size=(n_hidden, n_inputs))
    if continuous_weight_range is not None and n_inputs > n_event_inputs:
        w1[:, n_event_inputs:] = rng.uniform(
            *continuous_weight_range, size=(n_hidden, n_inputs - n_event_inputs)
        )
    zero_rows = ~w1.any(axis=1)
    while zero_rows.any():
        w1[zero_rows] = rng.uniform(lo, hi, size=(zero_rows.sum(), n_inputs))
        zero_rows = ~w1.any(axis=1)
    choice = rng.choice(len(names), size=n_hidden, p=probs)
    kernels = []
    for j in range(n_hidden):
        fam = names[choice[j]]
        params = {p: float(rng.uniform(*ranges[p])) for p in FAMILY_PARAMS[fam]}
        kernels.append(KernelSpec(fam, **params))
    return HiddenLayer(w1, kernels, n_event_inputs, nonlinearity)


def _check_inputs(hidden: HiddenLayer, events: EventStream, continuous):
    if events.n_channels != hidden.n_event_inputs:
        raise ShapeError(
            f"events have {events.n_channels} channels, model expects {hidden.n_event_inputs}"
        )
    if continuous is None:
        if hidden.n_continuous:
            raise ShapeError(f"model expects {hidden.n_continuous} continuous channels")
        return None
    cont = continuous.values if isinstance(continuous, ContinuousSignal) else np.asarray(continuous)
    if cont.shape != (hidden.n_continuous, events.n_steps):
        raise ShapeError(
            f"continuous input shape {cont.shape} != ({hidden.n_continuous}, {events.n_steps})"
        )
    return cont


def iter_hidden(
    hidden: HiddenLayer, events: EventStream, continuous=None, chunk: int = 4096
) -> Iterator[np.ndarray]:
    """Yield hidden-layer outputs in column blocks of at most ``chunk`` steps.

    Kernel states start at zero and carry across blocks, so concatenating the
    blocks gives the same result as one pass.
    """
    cont = _check_inputs(hidden, events, continuous)
    bank = KernelBank(hidden.kernels)
    f = NONLINEARITIES[hidden.nonlinearity]
    w_ev = hidden.w1[:, : hidden.n_event_inputs]
    w_ct = hidden.w1[:, hidden.n_event_inputs :]
    n_steps = events.n_steps
    # events sorted by t, so each block is a contiguous slice
    bounds = np.searchsorted(events.t, np.arange(0, n_steps + chunk, chunk))
    for b, t0 in enumerate(range(0, n_steps, chunk)):
        t1 = min(t0 + chunk, n_steps)
        lo, hi = bounds[b], bounds[b + 1]
        x = np.zeros((hidden.n_event_inputs, t1 - t0))
        x[events.c[lo:hi], events.t[lo:hi] - t0] = 1.0
        v = bank.process(w_ev @ x)
        if cont is not None and cont.shape[0]:
            v += w_ct @ cont[:, t0:t1]
        yield f(v)


def hidden_activity(hidden: HiddenLayer, events: EventStream, continuous=None) -> np.ndarray:
    """The full ``M x T`` matrix of hidden outputs."""
    return np.hstack(list(iter_hidden(hidden, events, continuous)))


def threshold_events(y, theta) -> EventStream:
    """Event at ``(t, n)`` wherever ``y[n, t] > theta[n]`` (strict)."""
    y = np.array(y, dtype=np.float64, ndmin=2)
    theta = np.broadcast_to(np.asarray(theta, dtype=np.float64), (y.shape[0],))
    n, t = np.nonzero(y > theta[:, None])
    return EventStream(y.shape[0], y.shape[1], t, n)


def forward(model: SkimModel, events: EventStream, continuous=None) -> ForwardTrace:
    a = hidden_activity(model.hidden, events, continuous)
    y = model.w2 @ a
    return ForwardTrace(a, y, threshold_events(y, model.theta))


def forward_streaming(model: SkimModel, events: EventStream, continuous=None) -> ForwardTrace:
    """Timestep-at-a-time forward pass; same result as :func:`forward`."""
    hidden = model.hidden
    cont = _check_inputs(hidden, events, continuous)
    bank = KernelBank(hidden.kernels)
    f = NONLINEARITIES[hidden.nonlinearity]
    w_ev = hidden.w1[:, : hidden.n_event_inputs]
    w_ct = hidden.w1[:, hidden.n_event_inputs :]
    a = np.empty((hidden.n_hidden, events.n_steps))
    bounds = np.searchsorted(events.t, np.arange(events.n_steps + 1))
    x = np.zeros(hidden.n_event_inputs)
    for t in range(events.n_steps):
        x[:] = 0.0
        x[events.c[bounds[t] : bounds[t + 1]]] = 1.0
        v = bank.step(w_ev @ x)
        if cont is not None and cont.shape[0]:
            v = v + w_ct @ cont[:, t]
        a[:, t] = f(v)
    y = model.w2 @ a
    return ForwardTrace(a, y, threshold_events(y, model.theta))
