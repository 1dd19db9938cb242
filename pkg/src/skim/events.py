"""Event streams and continuous signals on a discrete, unitless time grid.

An event is a Boolean occurrence at ``(t, channel)``. Streams are stored
sparsely as two sorted index arrays; the canonical order is by ``(t, c)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
import re

import numpy as np

from .errors import FormatError, NumericError, ParameterError, ShapeError


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EventStream:
    """Sparse Boolean events on ``n_channels`` channels over ``n_steps`` steps."""

    n_channels: int
    n_steps: int
    t: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_channels < 0 or self.n_steps < 1:
            raise ParameterError(
                f"need n_channels >= 0 and n_steps >= 1, got {self.n_channels}, {self.n_steps}"
            )
        t = np.asarray(self.t, dtype=np.int64).ravel()
        c = np.asarray(self.c, dtype=np.int64).ravel()
        if t.shape != c.shape:
            raise ShapeError("t and c index arrays differ in length")
        if t.size:
            if t.min() < 0 or t.max() >= self.n_steps:
                raise ParameterError("event time outside [0, n_steps)")
            if c.min() < 0 or c.max() >= self.n_channels:
                raise ParameterError("event channel outside [0, n_channels)")
        # canonical order + dedupe via flat cell index
        flat = np.unique(t * max(self.n_channels, 1) + c)
        t, c = np.divmod(flat, max(self.n_channels, 1))
        object.__setattr__(self, "t", _frozen(t))
        object.__setattr__(self, "c", _frozen(c))

    @classmethod
    def empty(cls, n_channels: int, n_steps: int) -> EventStream:
        return cls(n_channels, n_steps, np.empty(0, np.int64), np.empty(0, np.int64))

    @classmethod
    def from_pairs(cls, n_channels: int, n_steps: int, pairs) -> EventStream:
        arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        return cls(n_channels, n_steps, arr[:, 0], arr[:, 1])

    def __len__(self) -> int:
        return int(self.t.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.n_channels == other.n_channels
            and self.n_steps == other.n_steps
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.c, other.c)
        )

    __hash__ = None

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.t.tolist(), self.c.tolist()))

    def counts(self) -> np.ndarray:
        """Events per channel."""
        return np.bincount(self.c, minlength=self.n_channels)

    def window(self, start: int, stop: int) -> EventStream:
        """Events with ``start <= t < stop``, re-based to ``t - start``."""
        keep = (self.t >= start) & (self.t < stop)
        return EventStream(self.n_channels, stop - start, self.t[keep] - start, self.c[keep])


@dataclass(frozen=True, eq=False)
class ContinuousSignal:
    """Dense real-valued signal, shape ``(n_channels, n_steps)``."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, ndmin=2)
        if v.ndim != 2 or v.shape[1] < 1:
            raise ShapeError(f"continuous values must be 2-D with n_steps >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NumericError("continuous signal contains non-finite values")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def empty(cls, n_steps: int) -> ContinuousSignal:
        return cls(np.zeros((0, n_steps)))

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ContinuousSignal):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


def poisson_generate(n_channels: int, n_steps: int, rate_per_step: float, seed) -> EventStream:
    """Independent Bernoulli(``rate_per_step``) event in every cell.

    This is the unit-grid approximation of a homogeneous Poisson process with
    at most one event per cell.
    """
    if not 0.0 <= rate_per_step <= 1.0:
        raise ParameterError(f"rate_per_step must lie in [0, 1], got {rate_per_step}")
    rng = np.random.default_rng(seed)
    hit = rng.random((n_steps, n_channels)) < rate_per_step
    t, c = np.nonzero(hit)
    return EventStream(n_channels, n_steps, t, c)


def merge(a: EventStream, b: EventStream) -> EventStream:
    """Cellwise Boolean OR of two streams of equal shape."""
    if (a.n_channels, a.n_steps) != (b.n_channels, b.n_steps):
        raise ShapeError(
            f"cannot merge {a.n_channels}x{a.n_steps} with {b.n_channels}x{b.n_steps}"
        )
    return EventStream(
        a.n_channels, a.n_steps, np.concatenate([a.t, b.t]), np.concatenate([a.c, b.c])
    )


def to_dense(s: EventStream, dtype=np.float64) -> np.ndarray:
    r = np.zeros((s.n_channels, s.n_steps), dtype=dtype)
    r[s.c, s.t] = 1
    return r


def from_dense(raster) -> EventStream:
    r = np.asarray(raster)
    if r.ndim != 2:
        raise ShapeError(f"raster must be 2-D, got shape {r.shape}")
    if not np.all((r == 0) | (r == 1)):
        raise FormatError("raster entries must be exactly 0 or 1")
    c, t = np.nonzero(r)
    return EventStream(r.shape[0], r.shape[1], t, c)


# ---------------------------------------------------------------------------
# file I/O

_HEADER_RE = re.compile(r"^#?\s*channels\s*=\s*(\d+)\s*[, ]\s*steps\s*=\s*(\d+)\s*$")


def write_events(s: EventStream, path) -> None:
    lines = [f"# channels={s.n_channels} steps={s.n_steps}", "t,channel"]
    lines += [f"{t},{c}" for t, c in zip(s.t.tolist(), s.c.tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_events(path) -> EventStream:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise FormatError(f"{path}: line 1: missing '# channels=<L> steps=<T>' header")
    m = _HEADER_RE.match(text[0].strip())
    if m is None:
        raise FormatError(f"{path}: line 1: bad header {text[0]!r}")
    n_channels, n_steps = int(m.group(1)), int(m.group(2))
    if len(text) < 2 or text[1].strip().replace(" ", "") != "t,channel":
        raise FormatError(f"{path}: line 2: expected column header 't,channel'")
    ts, cs = [], []
    for lineno, line in enumerate(text[2:], start=3):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        try:
            t, c = (int(p) for p in parts)
        except ValueError:
            raise FormatError(f"{path}: line {lineno}: malformed event {line!r}") from None
        if not (0 <= t < n_steps and 0 <= c < n_channels):
            raise FormatError(f"{path}: line {lineno}: event ({t}, {c}) out of range")
        ts.append(t)
        cs.append(c)
    return EventStream(n_channels, n_steps, np.array(ts, np.int64), np.array(cs, np.int64))


def write_continuous(sig: ContinuousSignal, path) -> None:
    head = ",".join(["t"] + [f"ch{i}" for i in range(sig.n_channels)])
    rows = [head]
    for t in range(sig.n_steps):
        rows.append(",".join([str(t)] + [repr(float(v)) for v in sig.values[:, t]]))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def read_continuous(path) -> ContinuousSignal:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: line 1: missing header")
    cols = lines[0].strip().split(",")
    if cols[0] != "t":
        raise FormatError(f"{path}: line 1: first column must be 't'")
    n_channels = len(cols) - 1
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != n_channels + 1:
            raise FormatError(f"{path}: line {lineno}: expected {n_channels + 1} fields")
        try:
            t = int(parts[0])
            vals = [float(p) for p in parts[1:]]
        except ValueError:
            raise FormatError(f"{path}: line {lineno}: malformed row {line!r}") from None
        if t != len(rows):
            raise FormatError(f"{path}: line {lineno}: expected t={len(rows)}, got {t}")
        rows.append(vals)
    if not rows:
        raise FormatError(f"{path}: no timesteps")
    return ContinuousSignal(np.array(rows, dtype=np.float64).reshape(len(rows), n_channels).T)
