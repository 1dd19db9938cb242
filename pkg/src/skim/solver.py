"""Output-weight solvers for ``W A = Y``.

``batch_solve`` returns the ridge-regularized right pseudoinverse solution
``W = Y A^T (A A^T + eps I)^-1``. The online solver is recursive least
squares on the same regularized normal equations: starting from
``P = I / eps`` and ``W = 0``, absorbing every column reproduces the batch
answer up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg

from .errors import NumericError, ParameterError, ShapeError


def default_eps(n_hidden: int) -> float:
    return 1e-6 * n_hidden


def _as_2d(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericError(f"{name} contains non-finite values")
    return x


def batch_solve(A, Y, eps: float) -> np.ndarray:
    """Minimizer of ``||W A - Y||_F^2 + eps ||W||_F^2`` for ``A`` (M x k), ``Y`` (N x k)."""
    A = _as_2d(A, "A")
    Y = _as_2d(Y, "Y")
    if eps <= 0:
        raise ParameterError(f"eps must be > 0, got {eps}")
    if A.shape[1] != Y.shape[1]:
        raise ShapeError(f"A has {A.shape[1]} columns but Y has {Y.shape[1]}")
    if A.shape[1] < 1:
        raise ShapeError("need at least one column")
    gram = A @ A.T
    gram[np.diag_indices_from(gram)] += eps
    return scipy.linalg.solve(gram, A @ Y.T, assume_a="pos").T


@dataclass(eq=False)
class SolverState:
    """Running RLS state: ``P = (A A^T + eps I)^-1`` and current ``W``."""

    P: np.ndarray
    W: np.ndarray
    eps: float
    k: int = 0

    @property
    def M(self) -> int:
        return self.P.shape[0]

    @property
    def N(self) -> int:
        return self.W.shape[0]


def online_init(M: int, N: int, eps: float) -> SolverState:
    if eps <= 0:
        raise ParameterError(f"eps must be > 0, got {eps}")
    return SolverState(P=np.eye(M) / eps, W=np.zeros((N, M)), eps=float(eps))


def online_update(state: SolverState, a, y) -> SolverState:
    """Absorb one column pair ``(a, y)``. Updates ``state`` in place and returns it."""
    a = np.asarray(a, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if a.size != state.M or y.size != state.N:
        raise ShapeError(f"expected a of length {state.M} and y of length {state.N}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(y))):
        raise NumericError("non-finite column")
    Pa = state.P @ a
    g = Pa / (1.0 + a @ Pa)
    W = state.W + np.outer(y - state.W @ a, g)
    P = state.P - np.outer(g, Pa)
    P = 0.5 * (P + P.T)
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(P))):
        raise NumericError("non-finite solver update")
    state.W, state.P = W, P
    state.k += 1
    return state


def online_update_block(state: SolverState, A, Y, max_block: int = 256) -> SolverState:
    """Absorb the columns of ``A``/``Y`` (Woodbury form of repeated rank-one updates).

    Blocks wider than ``max_block`` are absorbed in slices to keep the inner
    ``b x b`` solve cheap.
    """
    A = _as_2d(A, "A")
    Y = _as_2d(Y, "Y")
    if A.shape[0] != state.M or Y.shape[0] != state.N or A.shape[1] != Y.shape[1]:
        raise ShapeError(f"block shapes {A.shape}, {Y.shape} do not fit M={state.M}, N={state.N}")
    for s in range(0, A.shape[1], max_block):
        _woodbury(state, A[:, s : s + max_block], Y[:, s : s + max_block])
    return state


def _woodbury(state: SolverState, A: np.ndarray, Y: np.ndarray) -> None:
    G = state.P @ A
    S = A.T @ G
    S[np.diag_indices_from(S)] += 1.0
    K = scipy.linalg.solve(S, G.T, assume_a="pos").T
    W = state.W + (Y - state.W @ A) @ K.T
    P = state.P - K @ G.T
    P = 0.5 * (P + P.T)
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(P))):
        raise NumericError("non-finite solver update")
    state.W, state.P = W, P
    state.k += A.shape[1]


def solve_stream(
    hidden_out: Iterable, targets: Iterable, eps: float, M: int | None = None, N: int | None = None
) -> SolverState:
    """Drive the online solver from two column providers.

    Each provider yields either single columns (1-D) or blocks of columns
    (2-D, one column per timestep); matching items must hold the same number
    of columns. Blocks go through :func:`online_update_block`.
    """
    state = None
    it_a, it_y = iter(hidden_out), iter(targets)
    while True:
        a = next(it_a, None)
        y = next(it_y, None)
        if a is None and y is None:
            break
        if a is None or y is None:
            raise ShapeError("hidden_out and targets providers have different lengths")
        a = np.asarray(a, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if state is None:
            state = online_init(a.shape[0], y.shape[0], eps)
        if a.ndim == 1:
            if y.ndim != 1:
                raise ShapeError("column/block mismatch between providers")
            online_update(state, a, y)
        else:
            if y.ndim != 2 or y.shape[1] != a.shape[1]:
                raise ShapeError("hidden_out and targets blocks differ in length")
            online_update_block(state, a, y)
    if state is None:
        if M is None or N is None:
            raise ShapeError("empty providers and no M/N given")
        state = online_init(M, N, eps)
    return state
