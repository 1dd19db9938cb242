"""Supervised training: widened targets, streaming solve, threshold fit."""

from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

from . import network, solver
from .errors import ParameterError, ShapeError
from .events import EventStream

log = logging.getLogger(__name__)

N_SWEEP = 256


@dataclass(frozen=True)
class TargetSpec:
    raw_targets: EventStream
    widen: int = 10
    amplitude: float = 1.0

    def __post_init__(self):
        if int(self.widen) < 1:
            raise ParameterError(f"widen must be >= 1, got {self.widen}")
        if not self.amplitude > 0:
            raise ParameterError(f"amplitude must be > 0, got {self.amplitude}")


@dataclass(eq=False)
class ThresholdFit:
    theta: np.ndarray
    margin: np.ndarray
    separable: np.ndarray
    flags: list[str] = field(default_factory=list)


@dataclass(eq=False)
class TrainReport:
    W: np.ndarray
    theta: np.ndarray
    train_residual: float
    zero_residual: float
    margin: np.ndarray
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "train_residual": self.train_residual,
            "zero_residual": self.zero_residual,
            "theta": self.theta.tolist(),
            "margin": self.margin.tolist(),
            "flags": list(self.flags),
        }


def widen_targets(spec: TargetSpec, n_steps: int | None = None) -> np.ndarray:
    """Dense ``N x T`` target: each raw event at ``t`` becomes a pulse on
    ``[t, t + widen)`` clipped to the sequence; overlapping pulses take the max."""
    raw = spec.raw_targets
    n_steps = raw.n_steps if n_steps is None else n_steps
    if spec.widen > n_steps:
        raise ParameterError(f"widen={spec.widen} exceeds n_steps={n_steps}")
    out = np.zeros((raw.n_channels, n_steps))
    # difference array: +1 at start, -1 at end, cumsum > 0 inside a pulse
    diff = np.zeros((raw.n_channels, n_steps + 1))
    np.add.at(diff, (raw.c, raw.t), 1)
    np.add.at(diff, (raw.c, np.minimum(raw.t + spec.widen, n_steps)), -1)
    out[np.cumsum(diff, axis=1)[:, :n_steps] > 0] = spec.amplitude
    return out


def pulse_windows(mask) -> list[tuple[int, int]]:
    """Maximal runs of a Boolean vector as half-open ``(start, stop)`` pairs."""
    m = np.asarray(mask, dtype=bool).astype(np.int8)
    d = np.diff(np.concatenate([[0], m, [0]]))
    return list(zip(np.nonzero(d == 1)[0].tolist(), np.nonzero(d == -1)[0].tolist()))


def match_detections(z, windows, ignore=None) -> tuple[int, int]:
    """Window-level matching of output events against target windows.

    A window counts as hit when at least one output event falls inside it. A
    false alarm is a maximal run of output events outside every window (and
    outside ``ignore``, when given), so output that spills across a window
    edge is charged for the part outside. Returns ``(hits, false_alarms)``.
    """
    z = np.asarray(z, dtype=bool)
    n = z.size
    if windows:
        starts = np.array([w[0] for w in windows])
        stops = np.array([w[1] for w in windows])
        cz = np.concatenate([[0], np.cumsum(z)])
        hits = int(np.count_nonzero(cz[stops] - cz[starts]))
    else:
        hits = 0
    covered = np.zeros(n, dtype=bool)
    for a, b in windows:
        covered[a:b] = True
    if ignore is not None:
        covered |= np.asarray(ignore, dtype=bool)
    return hits, _runs_outside(z, covered)


def _runs_outside(z: np.ndarray, covered: np.ndarray) -> int:
    out = z & ~covered
    return int(np.count_nonzero(out[1:] & ~out[:-1]) + (1 if out.size and out[0] else 0))


def _f1_sweep(y: np.ndarray, windows, covered: np.ndarray) -> tuple[float, float]:
    grid = np.linspace(y.min(), y.max(), N_SWEEP)
    q = np.array([y[a:b].max() for a, b in windows])
    scores = np.empty(N_SWEEP)
    for i, th in enumerate(grid):
        z = y > th
        hits = int(np.count_nonzero(q > th))
        fa = _runs_outside(z, covered)
        denom = 2 * hits + (len(windows) - hits) + fa
        scores[i] = 2 * hits / denom if denom else 0.0
    best = scores.max()
    # centre of the first plateau of best scores
    i0 = int(np.argmax(scores))
    i1 = i0
    while i1 + 1 < N_SWEEP and scores[i1 + 1] == best:
        i1 += 1
    return float(0.5 * (grid[i0] + grid[i1])), float(best)


def fit_threshold(y, widened_targets) -> ThresholdFit:
    """Per-output threshold separating target pulses from the rest.

    When every pulse peak exceeds the largest off-target output the threshold
    is the midpoint of that gap; otherwise it is picked by a pulse-level F1
    sweep. Channels without any target pulse get a threshold that never fires.
    """
    y = np.array(y, dtype=np.float64, ndmin=2)
    tgt = np.array(widened_targets, dtype=np.float64, ndmin=2)
    if y.shape != tgt.shape:
        raise ShapeError(f"y shape {y.shape} != targets shape {tgt.shape}")
    n_out = y.shape[0]
    theta = np.empty(n_out)
    margin = np.full(n_out, np.nan)
    separable = np.zeros(n_out, dtype=bool)
    flags = []
    for n in range(n_out):
        row = y[n]
        covered = tgt[n] > 0
        windows = pulse_windows(covered)
        if not windows:
            theta[n] = row.max() + 1.0
            flags.append(f"output {n}: no target pulses; threshold set to never fire")
            continue
        q_min = min(row[a:b].max() for a, b in windows)
        p = row[~covered].max() if (~covered).any() else -np.inf
        margin[n] = q_min - p
        if q_min > p:
            separable[n] = True
            theta[n] = 0.5 * (p + q_min) if np.isfinite(p) else np.nextafter(q_min, -np.inf)
            continue
        theta[n], best = _f1_sweep(row, windows, covered)
        if best == 0.0:
            flags.append(f"output {n}: degenerate threshold (F1 = 0)")
    for f in flags:
        log.warning(f)
    return ThresholdFit(theta, margin, separable, flags)


def train(
    hidden: network.HiddenLayer,
    events: EventStream,
    continuous,
    targets: TargetSpec,
    eps: float | None = None,
    chunk: int = 4096,
):
    """Fit output weights and thresholds on one training sequence.

    Hidden outputs are produced in blocks and fed straight into the online
    solver; a second pass with the solved weights gives the training outputs
    for the threshold fit. Returns ``(SkimModel, TrainReport)``.
    """
    n_steps = events.n_steps
    if targets.raw_targets.n_steps != n_steps:
        raise ShapeError(
            f"targets span {targets.raw_targets.n_steps} steps, inputs span {n_steps}"
        )
    eps = solver.default_eps(hidden.n_hidden) if eps is None else float(eps)
    Y = widen_targets(targets, n_steps)
    y_blocks = (Y[:, s : s + chunk] for s in range(0, n_steps, chunk))
    state = solver.solve_stream(
        network.iter_hidden(hidden, events, continuous, chunk), y_blocks, eps,
        M=hidden.n_hidden, N=Y.shape[0],
    )
    W = state.W
    y_out = np.empty_like(Y)
    for i, a in enumerate(network.iter_hidden(hidden, events, continuous, chunk)):
        y_out[:, i * chunk : i * chunk + a.shape[1]] = W @ a
    energy = float(np.sum(Y**2))
    resid = float(np.sqrt(np.sum((y_out - Y) ** 2) / energy)) if energy else 0.0
    zero_resid = 1.0 if energy else 0.0
    fit = fit_threshold(y_out, Y)
    model = network.SkimModel(hidden, W, fit.theta, meta={"eps": eps, "train_residual": resid})
    report = TrainReport(W, fit.theta, resid, zero_resid, fit.margin, fit.flags)
    return model, report
