"""Classical online subspace trackers: Oja's method and full-data GROUSE."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import orthonormalize

DEGENERATE_TOL = 1e-14


@dataclass(frozen=True)
class BaselineState:
    basis: np.ndarray
    step: int = 0

    def __post_init__(self):
        x = np.asarray(self.basis, dtype=float)
        if x.ndim != 2:
            raise ValueError("basis must be an n x d matrix")
        object.__setattr__(self, "basis", x)


def oja_step(state: BaselineState, y, tau: float) -> BaselineState:
    """``X <- orth(X + tau * y (y^T X))``."""
    x = state.basis
    y = np.asarray(y, dtype=float)
    return BaselineState(orthonormalize(x + tau * np.outer(y, y @ x)), state.step + 1)


def grouse_step(state: BaselineState, y, tau: float) -> BaselineState:
    """Rank-one geodesic step of the basis toward ``y``.

    With ``w = X^T y``, ``p = X w`` and ``r = y - p`` the basis is rotated by
    ``theta = tau ||r|| ||p||`` in the plane of ``p`` and ``r``.  If either
    norm is below ``DEGENERATE_TOL`` the basis is returned unchanged.
    """
    x = state.basis
    y = np.asarray(y, dtype=float)
    w = x.T @ y
    p = x @ w
    r = y - p
    rn, pn = np.linalg.norm(r), np.linalg.norm(p)
    if rn < DEGENERATE_TOL or pn < DEGENERATE_TOL:
        return BaselineState(x.copy(), state.step + 1)
    theta = tau * rn * pn
    wn = w / np.linalg.norm(w)
    direction = (math.cos(theta) - 1) * p / pn + math.sin(theta) * r / rn
    return BaselineState(x + np.outer(direction, wn), state.step + 1)


def run(step_fn, state: BaselineState, samples, tau: float, callback=None, every: int = 1) -> BaselineState:
    """Feed an iterable of samples through ``step_fn``.

    ``callback(k, state)`` is invoked after every ``every``-th step.
    """
    for y in samples:
        state = step_fn(state, y, tau)
        if callback is not None and state.step % every == 0:
            callback(state.step, state)
    return state
