"""Attentional-switching benchmark.

Two random spike "words" are embedded at random non-overlapping positions
in a few event channels together with Poisson noise. A square-wave
attention signal selects which word the network has to report: word A while
attention is positive, word B while it is negative.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import time

import numpy as np

from . import analysis, network, trainer
from .errors import ParameterError
from .kernels import KernelFamily
from .events import ContinuousSignal, EventStream, merge, poisson_generate, to_dense


@dataclass(frozen=True, eq=False)
class WordPattern:
    n_channels: int
    duration: int
    events: tuple  # ((t_offset, channel), ...) sorted

    def __post_init__(self):
        ev = tuple(sorted({(int(t), int(c)) for t, c in self.events}))
        if not ev:
            raise ParameterError("a word needs at least one event")
        for t, c in ev:
            if not (0 <= t < self.duration and 0 <= c < self.n_channels):
                raise ParameterError(f"word event ({t}, {c}) outside {self.duration}x{self.n_channels}")
        object.__setattr__(self, "events", ev)

    def __eq__(self, other):
        if not isinstance(other, WordPattern):
            return NotImplemented
        return (self.n_channels, self.duration, self.events) == (
            other.n_channels, other.duration, other.events)

    __hash__ = None

    def raster(self) -> np.ndarray:
        r = np.zeros((self.n_channels, self.duration))
        for t, c in self.events:
            r[c, t] = 1.0
        return r

    def to_dict(self) -> dict:
        return {"n_channels": self.n_channels, "duration": self.duration,
                "events": [list(e) for e in self.events]}

    @classmethod
    def from_dict(cls, d: dict) -> WordPattern:
        return cls(int(d["n_channels"]), int(d["duration"]), tuple(map(tuple, d["events"])))


def random_word(n_channels: int, duration: int, n_events: int, seed=None) -> WordPattern:
    """``n_events`` distinct cells drawn uniformly from the ``duration x n_channels`` grid."""
    n_cells = n_channels * duration
    if not 1 <= n_events <= n_cells:
        raise ParameterError(f"cannot place {n_events} events in {n_cells} cells")
    rng = np.random.default_rng(seed)
    cells = rng.choice(n_cells, size=n_events, replace=False)
    t, c = np.divmod(cells, n_channels)
    return WordPattern(n_channels, duration, tuple(zip(t.tolist(), c.tolist())))


@dataclass
class ScenarioConfig:
    n_event_channels: int = 5
    word_duration: int = 100
    word_events: int = 10
    word_a: WordPattern | None = None
    word_b: WordPattern | None = None
    word_rate: float = 5.0  # words per 1000 steps
    word_a_fraction: float = 0.5  # probability that a placed word is A
    attention_period: int = 1000  # steps between sign flips
    noise_rate: float = 0.01
    n_steps: int = 20000
    target_widen: int = 10
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def bad(name, why):
            raise ParameterError(f"{name}: {why}")

        if self.n_event_channels < 1:
            bad("n_event_channels", "must be >= 1")
        if self.word_duration < 1:
            bad("word_duration", "must be >= 1")
        if not 1 <= self.word_events <= self.n_event_channels * self.word_duration:
            bad("word_events", "must fit in the word raster")
        if not 0.0 <= self.noise_rate <= 1.0:
            bad("noise_rate", f"must lie in [0, 1], got {self.noise_rate}")
        if not 0.0 <= self.word_a_fraction <= 1.0:
            bad("word_a_fraction", f"must lie in [0, 1], got {self.word_a_fraction}")
        if self.word_rate < 0:
            bad("word_rate", "must be >= 0")
        if self.attention_period < 1:
            bad("attention_period", "must be >= 1")
        if self.n_steps < self.word_duration:
            bad("n_steps", "shorter than one word")
        if self.target_widen < 1:
            bad("target_widen", "must be >= 1")
        if self.n_words * self.word_duration > self.n_steps:
            bad("word_rate", "words do not fit in the timeline without overlap")
        for name in ("word_a", "word_b"):
            w = getattr(self, name)
            if w is not None and (w.n_channels != self.n_event_channels
                                  or w.duration != self.word_duration):
                bad(name, "shape does not match n_event_channels/word_duration")

    @property
    def n_words(self) -> int:
        return int(round(self.word_rate * self.n_steps / 1000.0))

    def words(self) -> tuple[WordPattern, WordPattern]:
        """The configured words, generating any that are missing from ``seed``."""
        ss = np.random.SeedSequence([self.seed, 0x57])
        sa, sb = ss.spawn(2)
        a = self.word_a or random_word(self.n_event_channels, self.word_duration, self.word_events, sa)
        b = self.word_b or random_word(self.n_event_channels, self.word_duration, self.word_events, sb)
        return a, b

    def to_dict(self) -> dict:
        d = asdict(self)
        wa, wb = self.words()
        d["word_a"], d["word_b"] = wa.to_dict(), wb.to_dict()
        return d


@dataclass(eq=False)
class Scenario:
    inputs: EventStream
    attention: ContinuousSignal
    targets: EventStream  # channel 0: word A ends, channel 1: word B ends
    composite_target: EventStream
    word_log: list[tuple[int, int]]  # (start, 0 for A / 1 for B)
    words: tuple[WordPattern, WordPattern]
    word_events: int = 0
    config: ScenarioConfig | None = field(default=None, repr=False)

    @property
    def n_steps(self) -> int:
        return self.inputs.n_steps

    def noise_fraction(self) -> float:
        n = len(self.inputs)
        return (n - self.word_events) / n if n else 0.0


def attention_wave(n_steps: int, period: int) -> np.ndarray:
    """``+1`` on the first ``period`` steps, ``-1`` on the next, and so on."""
    return np.where((np.arange(n_steps) // period) % 2 == 0, 1.0, -1.0)


def stamp_words(words, word_log, n_channels: int, n_steps: int) -> EventStream:
    """Noiseless input stream rebuilt from a word log."""
    ts, cs = [], []
    for start, which in word_log:
        for t, c in words[which].events:
            ts.append(start + t)
            cs.append(c)
    return EventStream(n_channels, n_steps, np.array(ts, np.int64), np.array(cs, np.int64))


def build_scenario(config: ScenarioConfig, words=None) -> Scenario:
    config.validate()
    words = tuple(words) if words is not None else config.words()
    dur, T = config.word_duration, config.n_steps
    n = config.n_words
    ss = np.random.SeedSequence([config.seed, 0x5C])
    s_place, s_noise = ss.spawn(2)
    rng = np.random.default_rng(s_place)
    # uniform non-overlapping placement: sorted offsets in the free space
    free = T - n * dur
    offs = np.sort(rng.integers(0, free + 1, size=n))
    starts = offs + dur * np.arange(n)
    which = (rng.random(n) >= config.word_a_fraction).astype(np.int64)
    word_log = list(zip(starts.tolist(), which.tolist()))

    clean = stamp_words(words, word_log, config.n_event_channels, T)
    noise = poisson_generate(config.n_event_channels, T, config.noise_rate, s_noise)
    inputs = merge(clean, noise)

    att = attention_wave(T, config.attention_period)
    ends = starts + dur - 1
    targets = EventStream(2, T, ends, which)
    gated = np.where(which == 0, att[ends] > 0, att[ends] < 0)
    composite = EventStream(1, T, ends[gated], np.zeros(int(gated.sum()), np.int64))
    return Scenario(inputs, ContinuousSignal(att[None, :]), targets, composite, word_log,
                    words, len(clean), config)


# ---------------------------------------------------------------------------
# experiment harness


@dataclass
class ModelParams:
    n_hidden: int = 250
    families: dict = field(default_factory=lambda: {"delayed_gaussian": 1.0})
    param_ranges: dict = field(default_factory=lambda: {"delta_t": [0.0, 110.0], "sigma": [2.0, 8.0]})
    # unit-area Gaussians peak near 0.05-0.2, so event weights are scaled up to
    # reach the compressive part of tanh; attention keeps unit weights
    weight_range: tuple = (-10.0, 10.0)
    continuous_weight_range: tuple | None = (-1.0, 1.0)
    nonlinearity: str = "tanh"
    eps: float | None = None
    widen: int = 10
    amplitude: float = 1.0
    train_steps: int = 50000
    test_steps: int = 20000
    seed: int = 1

    def validate(self) -> None:
        if self.n_hidden < 1:
            raise ParameterError("n_hidden: must be >= 1")
        if self.widen < 1:
            raise ParameterError("widen: must be >= 1")
        if self.eps is not None and self.eps <= 0:
            raise ParameterError("eps: must be > 0")
        if self.train_steps < 1 or self.test_steps < 1:
            raise ParameterError("train_steps/test_steps: must be >= 1")
        for name in ("weight_range", "continuous_weight_range"):
            r = getattr(self, name)
            if r is not None and (len(r) != 2 or r[0] > r[1]):
                raise ParameterError(f"{name}: expected [min, max]")
        if not self.families:
            raise ParameterError("families: empty")
        for fam in self.families:
            try:
                KernelFamily(fam)
            except ValueError:
                raise ParameterError(f"families: unknown kernel family {fam!r}") from None
        for k, v in self.param_ranges.items():
            if k not in network.DEFAULT_PARAM_RANGES:
                raise ParameterError(f"param_ranges: unknown parameter {k!r}")
            if len(v) != 2 or v[0] > v[1]:
                raise ParameterError(f"param_ranges: {k} must be [min, max]")


def make_hidden(params: ModelParams, n_event: int, n_cont: int) -> network.HiddenLayer:
    return network.init_random(
        n_event + n_cont, n_event, params.n_hidden, params.families, params.param_ranges,
        seed=params.seed, weight_range=tuple(params.weight_range),
        nonlinearity=params.nonlinearity,
        continuous_weight_range=(
            None if params.continuous_weight_range is None
            else tuple(params.continuous_weight_range)
        ),
    )


def word_windows(scn: Scenario, which: int, regime: int, widen: int) -> list[tuple[int, int]]:
    """Target windows ``[end, end + widen)`` for one word inside one attention regime."""
    att = scn.attention.values[0]
    out = []
    for start, w in scn.word_log:
        end = start + scn.words[w].duration - 1
        if w == which and np.sign(att[end]) == regime:
            out.append((end, min(end + widen, scn.n_steps)))
    return out


def detection_stats(scn: Scenario, z: np.ndarray, widen: int) -> dict:
    """Hit rates per (word, regime) and spurious detections per 1000 steps.

    A spurious detection is a run of output events that overlaps no word
    target window of either word.
    """
    stats = {}
    all_windows = []
    for w, wname in enumerate("AB"):
        for regime, rname in ((1, "+"), (-1, "-")):
            win = word_windows(scn, w, regime, widen)
            all_windows += win
            hits, _ = trainer.match_detections(z, win)
            stats[f"hit_rate_{wname}|{rname}"] = hits / len(win) if win else None
            stats[f"n_{wname}|{rname}"] = len(win)
    _, fa = trainer.match_detections(z, all_windows)
    stats["false_alarms"] = fa
    stats["false_alarm_per_1000"] = 1000.0 * fa / scn.n_steps
    attended = [stats["hit_rate_A|+"], stats["hit_rate_B|-"]]
    unattended = [stats["hit_rate_B|+"], stats["hit_rate_A|-"]]
    stats["attended_hit_rate"] = min(v for v in attended if v is not None) if any(
        v is not None for v in attended) else None
    stats["unattended_hit_rate"] = max(v for v in unattended if v is not None) if any(
        v is not None for v in unattended) else None
    return stats


@dataclass(eq=False)
class ExperimentResult:
    report: dict
    model: network.SkimModel
    train: Scenario
    test: Scenario
    y_test: np.ndarray
    z_test: np.ndarray
    confusion: analysis.ConfusionScore
    wall_time_s: float


def run_experiment(config: ScenarioConfig, params: ModelParams | None = None,
                   max_lag: int = 50) -> ExperimentResult:
    """Train on one scenario and score a fresh one built from the same words."""
    params = params or ModelParams()
    params.validate()
    t0 = time.perf_counter()
    words = config.words()
    train_cfg = _replace_cfg(config, n_steps=params.train_steps, seed=config.seed)
    test_cfg = _replace_cfg(config, n_steps=params.test_steps, seed=config.seed + 1_000_003)
    train_scn = build_scenario(train_cfg, words)
    test_scn = build_scenario(test_cfg, words)

    hidden = make_hidden(params, config.n_event_channels, 1)
    tspec = trainer.TargetSpec(train_scn.composite_target, params.widen, params.amplitude)
    model, rep = trainer.train(hidden, train_scn.inputs, train_scn.attention, tspec, params.eps)

    trace = network.forward(model, test_scn.inputs, test_scn.attention)
    z = to_dense(trace.z)[0]
    # scoring always uses the scenario's window, whatever width training used
    win = config.target_widen
    widened = trainer.widen_targets(trainer.TargetSpec(test_scn.targets, win), test_scn.n_steps)
    conf = analysis.score_attention_confusion(widened[0], widened[1], z, test_scn.attention, max_lag)
    stats = detection_stats(test_scn, z.astype(bool), win)
    elapsed = time.perf_counter() - t0

    report = {
        "scenario": config.to_dict(),
        "model": _params_dict(params),
        "train": {
            **rep.to_dict(),
            "n_steps": train_scn.n_steps,
            "n_words": len(train_scn.word_log),
            "n_input_events": len(train_scn.inputs),
            "noise_fraction": train_scn.noise_fraction(),
        },
        "test": {
            "n_steps": test_scn.n_steps,
            "n_words": len(test_scn.word_log),
            "n_input_events": len(test_scn.inputs),
            "n_output_events": int(z.sum()),
            "n_target_events": len(test_scn.composite_target),
            "noise_fraction": test_scn.noise_fraction(),
            **stats,
        },
        "confusion": {
            "correct_zero_lag": conf.correct_zero_lag,
            "incorrect_zero_lag": conf.incorrect_zero_lag,
            "summary": conf.summary,
            "flags": conf.flags,
        },
    }
    return ExperimentResult(report, model, train_scn, test_scn, trace.y, z, conf, elapsed)


def _replace_cfg(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    d = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    d.update(kw)
    return ScenarioConfig(**d)


def _params_dict(p: ModelParams) -> dict:
    d = asdict(p)
    d["weight_range"] = list(p.weight_range)
    if p.continuous_weight_range is not None:
        d["continuous_weight_range"] = list(p.continuous_weight_range)
    return d
