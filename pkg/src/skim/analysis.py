"""Receptive-field estimation and cross-correlation scoring."""

from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

from . import network
from .errors import ParameterError, ShapeError
from .events import ContinuousSignal, poisson_generate, to_dense

log = logging.getLogger(__name__)


@dataclass(eq=False)
class Strf:
    """Event-triggered input average minus the mean input rate.

    ``field[c, l]`` is the mean of ``x_c(t - l)`` over output events at ``t``,
    less ``baseline[c]``.
    """

    field: np.ndarray
    baseline: np.ndarray
    n_trigger_events: int
    output: int = 0

    @property
    def n_channels(self) -> int:
        return self.field.shape[0]

    @property
    def n_lags(self) -> int:
        return self.field.shape[1]


@dataclass(eq=False)
class XcorrCurve:
    lags: np.ndarray
    values: np.ndarray
    normalization: str = "raw"


@dataclass(eq=False)
class ConfusionScore:
    curves: dict[str, XcorrCurve]
    references: dict[str, XcorrCurve]
    correct_zero_lag: dict[str, float]
    incorrect_zero_lag: dict[str, float]
    summary: float
    flags: list[str] = field(default_factory=list)


def reverse_correlate(x: np.ndarray, triggers: np.ndarray, n_lags: int) -> tuple[np.ndarray, int]:
    """Spike-triggered average of a ``C x T`` raster over trigger times.

    Triggers earlier than ``n_lags - 1`` are skipped so every lag averages
    over the same set of events. Returns ``(sta, n_used)``.
    """
    triggers = np.asarray(triggers, dtype=np.int64)
    triggers = triggers[triggers >= n_lags - 1]
    sta = np.zeros((x.shape[0], n_lags))
    if triggers.size == 0:
        return sta, 0
    for lag in range(n_lags):
        sta[:, lag] = x[:, triggers - lag].sum(axis=1)
    return sta / triggers.size, int(triggers.size)


def estimate_strf(
    model: network.SkimModel,
    noise_rate: float,
    n_steps: int,
    n_lags: int,
    attention_value=None,
    seed=None,
) -> list[Strf]:
    """Probe ``model`` with Poisson noise and reverse-correlate its output events.

    Continuous channels are held at ``attention_value`` (zero when absent).
    Returns one field per output channel.
    """
    if not 0.0 < noise_rate < 1.0:
        raise ParameterError(f"noise_rate must lie in (0, 1), got {noise_rate}")
    if n_lags < 1:
        raise ParameterError("n_lags must be >= 1")
    hidden = model.hidden
    noise = poisson_generate(hidden.n_event_inputs, n_steps, noise_rate, seed)
    cont = None
    if hidden.n_continuous:
        level = 0.0 if attention_value is None else attention_value
        vals = np.broadcast_to(np.asarray(level, dtype=np.float64).reshape(-1, 1),
                               (hidden.n_continuous, n_steps))
        cont = ContinuousSignal(vals.copy())
    trace = network.forward(model, noise, cont)
    x = to_dense(noise)
    baseline = x.mean(axis=1)
    out = []
    for n in range(model.n_outputs):
        trig = trace.z.t[trace.z.c == n]
        sta, used = reverse_correlate(x, trig, n_lags)
        if used == 0:
            log.warning("output %d produced no usable trigger events; field is zero", n)
            fld = np.zeros_like(sta)
        else:
            fld = sta - baseline[:, None]
        out.append(Strf(fld, baseline, used, n))
    return out


def xcorr(target, output, max_lag: int, normalization: str = "raw") -> XcorrCurve:
    """``values[l] = sum_t target(t) * output(t + l)`` for ``l`` in ``[-max_lag, max_lag]``.

    ``normalization="unit-peak-autocorr"`` divides by the target's zero-lag
    autocorrelation.
    """
    f = np.asarray(target, dtype=np.float64).ravel()
    g = np.asarray(output, dtype=np.float64).ravel()
    if f.shape != g.shape:
        raise ShapeError(f"target length {f.size} != output length {g.size}")
    n = f.size
    lags = np.arange(-max_lag, max_lag + 1)
    vals = np.zeros(lags.size)
    for i, lag in enumerate(lags):
        if lag >= 0:
            vals[i] = f[: n - lag] @ g[lag:] if lag < n else 0.0
        else:
            vals[i] = f[-lag:] @ g[: n + lag] if -lag < n else 0.0
    if normalization == "unit-peak-autocorr":
        ref = float(f @ f)
        vals = vals / ref if ref else vals
    elif normalization != "raw":
        raise ParameterError(f"unknown normalization {normalization!r}")
    return XcorrCurve(lags, vals, normalization)


def zero_lag(curve: XcorrCurve) -> float:
    return float(curve.values[curve.lags == 0][0])


def score_attention_confusion(
    target_a, target_b, output, attention, max_lag: int
) -> ConfusionScore:
    """Cross-correlate output with each word's target inside each attention regime.

    Positive attention selects word A and negative attention word B. Curve
    keys are ``"<word>|<regime>"``, e.g. ``"A|+"``. The summary is the worst
    ratio of correct zero-lag overlap to the largest incorrect one, with +1
    smoothing on both sides.
    """
    att = attention.values[0] if isinstance(attention, ContinuousSignal) else np.ravel(attention)
    ta, tb, out = (np.asarray(v, dtype=np.float64).ravel() for v in (target_a, target_b, output))
    if not (ta.size == tb.size == out.size == att.size):
        raise ShapeError("targets, output and attention must have equal length")
    regimes = {"+": att > 0, "-": att < 0}
    correct_word = {"+": "A", "-": "B"}
    targets = {"A": ta, "B": tb}
    curves, refs, correct, incorrect = {}, {}, {}, {}
    flags = []
    for r, mask in regimes.items():
        if not mask.any():
            flags.append(f"attention never {'positive' if r == '+' else 'negative'}")
            continue
        o = out * mask
        for w, tgt in targets.items():
            key = f"{w}|{r}"
            curves[key] = xcorr(tgt * mask, o, max_lag)
            (correct if w == correct_word[r] else incorrect)[key] = zero_lag(curves[key])
        cw = targets[correct_word[r]] * mask
        refs[f"{correct_word[r]}|{r}"] = xcorr(cw, cw, max_lag)
    if correct and incorrect:
        summary = (min(correct.values()) + 1.0) / (max(incorrect.values()) + 1.0)
    else:
        summary = float("nan")
    for f in flags:
        log.warning(f)
    return ConfusionScore(curves, refs, correct, incorrect, summary, flags)
