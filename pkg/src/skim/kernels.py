"""Synaptic kernels: impulse responses, truncation and streaming filters.

Four families are finite-impulse-response filters evaluated on the integer
lag grid and truncated where the response has decayed to ``TRUNC_REL_TOL``
of its peak. The leaky integrator is a nonlinear recurrence with a scalar
state and has no impulse response.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from .errors import NumericError, ParameterError, UnsupportedOperation

TRUNC_REL_TOL = 1e-6


class KernelFamily(str, Enum):
    LEAKY_INTEGRATOR = "leaky_integrator"
    ALPHA = "alpha"
    DAMPED_RESONANT = "damped_resonant"
    DELAYED_ALPHA = "delayed_alpha"
    DELAYED_GAUSSIAN = "delayed_gaussian"

    @property
    def is_fir(self) -> bool:
        return self is not KernelFamily.LEAKY_INTEGRATOR


# parameters each family reads
FAMILY_PARAMS = {
    KernelFamily.LEAKY_INTEGRATOR: ("tau",),
    KernelFamily.ALPHA: ("tau",),
    KernelFamily.DAMPED_RESONANT: ("tau", "omega"),
    KernelFamily.DELAYED_ALPHA: ("tau", "delta_t"),
    KernelFamily.DELAYED_GAUSSIAN: ("sigma", "delta_t"),
}


def _response(family: KernelFamily, tau, delta_t, sigma, omega, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if family is KernelFamily.ALPHA:
        return (t / tau) * np.exp(-t / tau)
    if family is KernelFamily.DAMPED_RESONANT:
        return np.exp(-t / tau) * np.sin(omega * t)
    if family is KernelFamily.DELAYED_ALPHA:
        s = np.maximum(t - delta_t, 0.0) / tau
        return np.where(t >= delta_t, s * np.exp(-s), 0.0)
    if family is KernelFamily.DELAYED_GAUSSIAN:
        g = np.exp(-((t - delta_t) ** 2) / (2.0 * sigma**2)) / (sigma * math.sqrt(2.0 * math.pi))
        return np.where(t >= delta_t, g, 0.0)
    raise UnsupportedOperation(f"{family.value} has no closed-form impulse response")


def _trunc_cap(family: KernelFamily, tau, delta_t, sigma) -> int:
    scale = sigma if family is KernelFamily.DELAYED_GAUSSIAN else tau
    return int(math.ceil(20.0 * scale + delta_t))


@dataclass(frozen=True)
class KernelSpec:
    """One synaptic kernel: a family plus the parameters it uses.

    Times are in steps and ``omega`` in radians per step. ``trunc_len`` is
    derived with :func:`default_trunc_len` when omitted.
    """

    family: KernelFamily
    tau: float = 1.0
    delta_t: float = 0.0
    sigma: float = 1.0
    omega: float = 1.0
    trunc_len: int | None = field(default=None)

    def __post_init__(self):
        fam = KernelFamily(self.family)
        object.__setattr__(self, "family", fam)
        for name in ("tau", "delta_t", "sigma", "omega"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ParameterError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if "tau" in FAMILY_PARAMS[fam] and self.tau <= 0:
            raise ParameterError(f"tau must be > 0, got {self.tau}")
        if fam is KernelFamily.LEAKY_INTEGRATOR and self.tau < 1:
            # leak factor 1 - 1/(tau (1 + g^2)) must stay in [0, 1)
            raise ParameterError(f"leaky integrator needs tau >= 1, got {self.tau}")
        if self.delta_t < 0:
            raise ParameterError(f"delta_t must be >= 0, got {self.delta_t}")
        if self.sigma <= 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if self.omega <= 0:
            raise ParameterError(f"omega must be > 0, got {self.omega}")
        if not fam.is_fir:
            if self.trunc_len is not None and int(self.trunc_len) < 1:
                raise ParameterError("trunc_len must be >= 1")
            return
        if self.trunc_len is None:
            object.__setattr__(self, "trunc_len", default_trunc_len(self))
            return
        n = int(self.trunc_len)
        if n < 1:
            raise ParameterError("trunc_len must be >= 1")
        object.__setattr__(self, "trunc_len", n)
        peak = _peak_magnitude(self)
        tail = abs(float(self._raw(np.array([n]))[0]))
        if tail > TRUNC_REL_TOL * peak:
            raise ParameterError(
                f"trunc_len={n} cuts the {fam.value} response at {tail:.3g} "
                f"(> {TRUNC_REL_TOL:g} x peak {peak:.3g})"
            )

    def _raw(self, t: np.ndarray) -> np.ndarray:
        return _response(self.family, self.tau, self.delta_t, self.sigma, self.omega, t)

    def taps(self) -> np.ndarray:
        """Truncated impulse response ``h[0 .. trunc_len-1]``."""
        return impulse_response(self, np.arange(self.trunc_len))

    def to_dict(self) -> dict:
        d = {"family": self.family.value}
        for name in FAMILY_PARAMS[self.family]:
            d[name] = getattr(self, name)
        if self.family.is_fir:
            d["trunc_len"] = self.trunc_len
        return d

    @classmethod
    def from_dict(cls, d: dict) -> KernelSpec:
        d = dict(d)
        fam = KernelFamily(d.pop("family"))
        allowed = set(FAMILY_PARAMS[fam]) | {"trunc_len"}
        unknown = set(d) - allowed
        if unknown:
            raise ParameterError(f"unknown parameters for {fam.value}: {sorted(unknown)}")
        return cls(fam, **d)


def _peak_magnitude(spec: KernelSpec) -> float:
    cap = _trunc_cap(spec.family, spec.tau, spec.delta_t, spec.sigma)
    return float(np.max(np.abs(spec._raw(np.arange(cap + 1)))))


def default_trunc_len(spec: KernelSpec) -> int:
    """Smallest ``T`` with ``|h(t)| <= 1e-6 * max|h|`` for every ``t >= T``.

    The scan is capped at ``20 * tau + delta_t`` (``sigma`` stands in for
    ``tau`` in the Gaussian family, which has no time constant).
    """
    if not spec.family.is_fir:
        raise UnsupportedOperation("leaky integrator has no truncation length")
    cap = _trunc_cap(spec.family, spec.tau, spec.delta_t, spec.sigma)
    h = np.abs(spec._raw(np.arange(cap + 1)))
    above = np.nonzero(h > TRUNC_REL_TOL * h.max())[0]
    if above.size == 0:
        return 1
    return int(min(above[-1] + 1, cap))


def impulse_response(spec: KernelSpec, t):
    """Unit-impulse response at integer lag(s) ``t``; zero from ``trunc_len`` on."""
    if not spec.family.is_fir:
        raise UnsupportedOperation("leaky integrator has no closed-form impulse response")
    scalar = np.ndim(t) == 0
    t = np.asarray(t)
    if np.any(t < 0):
        raise ParameterError("lag must be non-negative")
    h = np.where(t < spec.trunc_len, spec._raw(t), 0.0)
    return float(h) if scalar else h


# ---------------------------------------------------------------------------
# single-kernel streaming


@dataclass
class KernelState:
    """Mutable filter state for one kernel.

    FIR families keep a ring buffer of pending response contributions; the
    leaky integrator keeps its scalar accumulator ``g``.
    """

    buffer: np.ndarray | None = None
    pos: int = 0
    g: float = 0.0
    taps: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def for_spec(cls, spec: KernelSpec) -> KernelState:
        if spec.family.is_fir:
            return cls(buffer=np.zeros(spec.trunc_len), taps=spec.taps())
        return cls()


def leaky_update(g, u, tau):
    """One step of the nonlinear-leak integrator (works elementwise on arrays)."""
    return g * (1.0 - 1.0 / (tau * (1.0 + g * g))) + u


def step(spec: KernelSpec, state: KernelState, weighted_input: float):
    """Advance ``state`` by one timestep and return ``(state, output)``.

    The state is updated in place.
    """
    x = float(weighted_input)
    if not math.isfinite(x):
        raise NumericError(f"non-finite kernel input {weighted_input!r}")
    if not spec.family.is_fir:
        state.g = float(leaky_update(state.g, x, spec.tau))
        return state, state.g
    buf, n = state.buffer, state.buffer.size
    if x != 0.0:
        idx = (state.pos + np.arange(n)) % n
        buf[idx] += x * state.taps
    out = float(buf[state.pos])
    buf[state.pos] = 0.0
    state.pos = (state.pos + 1) % n
    return state, out


def filter_sequence(spec: KernelSpec, u) -> np.ndarray:
    """Filter a whole input sequence from a zero initial state."""
    u = np.asarray(u, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        raise NumericError("non-finite kernel input")
    if spec.family.is_fir:
        return np.convolve(u, spec.taps())[: u.size]
    out = np.empty_like(u)
    g = 0.0
    for i, x in enumerate(u):
        g = leaky_update(g, x, spec.tau)
        out[i] = g
    return out


# ---------------------------------------------------------------------------
# bank of kernels, vectorized over hidden units


class KernelBank:
    """Filters for ``M`` hidden units, processed block by block.

    FIR units are filtered by overlap-add: each block is convolved with the
    tap matrix and the tail beyond the block is carried into the next one, so
    block boundaries do not change the result. Leaky units are stepped in a
    vectorized loop.
    """

    def __init__(self, specs):
        self.specs = list(specs)
        fam = np.array([s.family.is_fir for s in self.specs], dtype=bool)
        self.fir_idx = np.nonzero(fam)[0]
        self.leaky_idx = np.nonzero(~fam)[0]
        n_taps = max((s.trunc_len for s in self.specs if s.family.is_fir), default=1)
        self.taps = np.zeros((self.fir_idx.size, n_taps))
        for row, j in enumerate(self.fir_idx):
            h = self.specs[j].taps()
            self.taps[row, : h.size] = h
        self.leaky_tau = np.array([self.specs[j].tau for j in self.leaky_idx])
        self.reset()

    def __len__(self) -> int:
        return len(self.specs)

    def reset(self) -> None:
        self.carry = np.zeros((self.fir_idx.size, self.taps.shape[1] - 1))
        self.g = np.zeros(self.leaky_idx.size)

    def process(self, u: np.ndarray) -> np.ndarray:
        """Filter a block ``u`` of shape ``(M, b)``; returns the same shape."""
        from scipy.signal import oaconvolve

        u = np.asarray(u, dtype=np.float64)
        if not np.all(np.isfinite(u)):
            raise NumericError("non-finite kernel input")
        m, b = u.shape
        out = np.empty((m, b))
        if self.fir_idx.size:
            full = np.zeros((self.fir_idx.size, b + self.carry.shape[1]))
            uf = u[self.fir_idx]
            if np.any(uf):
                full[:, : b + self.taps.shape[1] - 1] = oaconvolve(
                    uf, self.taps, mode="full", axes=1
                )
            full[:, : self.carry.shape[1]] += self.carry
            out[self.fir_idx] = full[:, :b]
            self.carry = full[:, b:].copy()
        if self.leaky_idx.size:
            g = self.g
            ul = u[self.leaky_idx]
            for i in range(b):
                g = leaky_update(g, ul[:, i], self.leaky_tau)
                out[self.leaky_idx, i] = g
            self.g = g
        return out

    def step(self, u: np.ndarray) -> np.ndarray:
        return self.process(np.asarray(u, dtype=np.float64).reshape(-1, 1))[:, 0]

