"""Synaptic-kernel networks for recognising spatio-temporal event patterns.

Event inputs pass through random input weights into a bank of synaptic
kernels, a compressive nonlinearity and a linear readout whose weights are
solved by (online) regularized pseudoinverse.
"""

from .errors import (
    FormatError,
    NumericError,
    ParameterError,
    ShapeError,
    SkimError,
    UnsupportedOperation,
)
from .events import ContinuousSignal, EventStream, from_dense, merge, poisson_generate, to_dense
from .kernels import KernelFamily, KernelSpec, impulse_response
from .network import HiddenLayer, SkimModel, forward, init_random, threshold_events
from .solver import batch_solve, online_init, online_update, solve_stream
from .trainer import TargetSpec, fit_threshold, train, widen_targets

__version__ = "0.1.0"
