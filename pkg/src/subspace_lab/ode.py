"""Deterministic macroscopic ODE for large-lambda GAN training, and its integrator.

State variables are the overlap matrices of :class:`~subspace_lab.model.MacroState`.
The drift is

    dP = tt (Q R^T Lt + P L)
    dQ = tau (Lam Q - P Lt R + Q H)
    dR = tau (P^T Lam Q - S Lt R + R H) + tt (Lt + L) R
    dS = tt (R R^T Lt + Lt R R^T + S L + L S)
    dZ = 0

with ``L = -diag(R R^T Lt)`` and
``H = (1 - tau eta_G / 2) R^T Lt R - (1 + tau eta_T / 2) Q^T Lam Q - tau (eta_G^2 + eta_T^2) / 2 I``.
``H`` is ``q x q`` and acts on the discriminator index, so it multiplies ``Q``
and ``R`` from the right; for square commuting states this equals ``H Q``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import MacroState, Trajectory, _as_diag_vector

REGIMES = ("converged", "oscillating", "collapsed", "not-learning")


class OdeDivergenceError(FloatingPointError):
    def __init__(self, t: float):
        super().__init__(f"ODE integration produced a non-finite state at t={t:.6g}")
        self.t = t


@dataclass(frozen=True)
class OdeSystem:
    """Coefficients of the macroscopic ODE.

    ``signal_cov`` and ``gen_cov`` are the diagonals of Lambda and Lambda-tilde
    (a diagonal matrix is also accepted).
    """

    signal_cov: np.ndarray
    gen_cov: np.ndarray
    tau: float
    tau_tilde: float
    eta_t: float
    eta_g: float

    def __post_init__(self):
        object.__setattr__(self, "signal_cov", _as_diag_vector(self.signal_cov, "signal_cov"))
        object.__setattr__(self, "gen_cov", _as_diag_vector(self.gen_cov, "gen_cov"))
        if self.tau < 0 or self.tau_tilde < 0:
            raise ValueError("learning rates must be non-negative")
        if self.eta_t < 0 or self.eta_g < 0:
            raise ValueError("noise levels must be non-negative")


@dataclass(frozen=True)
class OdeCoefficients:
    L: np.ndarray
    H: np.ndarray


def coefficients(state: MacroState, sys: OdeSystem) -> OdeCoefficients:
    lt = sys.gen_cov
    lam = sys.signal_cov
    R, Q = state.R, state.Q
    L = np.diag(-lt * np.sum(R**2, axis=1))
    q = R.shape[1]
    H = (
        (1 - sys.tau * sys.eta_g / 2) * (R.T * lt) @ R
        - (1 + sys.tau * sys.eta_t / 2) * (Q.T * lam) @ Q
        - sys.tau * (sys.eta_g**2 + sys.eta_t**2) / 2 * np.eye(q)
    )
    return OdeCoefficients(L, H)


def _check_dims(state: MacroState, sys: OdeSystem):
    d, p, _ = state.dims
    if sys.signal_cov.size != d or sys.gen_cov.size != p:
        raise ValueError(
            f"state has d={d}, p={p} but the system has {sys.signal_cov.size} signal and "
            f"{sys.gen_cov.size} generator variances"
        )


def _drift(P, Q, R, S, sys: OdeSystem):
    lam, lt = sys.signal_cov, sys.gen_cov
    tau, tt = sys.tau, sys.tau_tilde
    l_diag = -lt * np.sum(R**2, axis=1)
    H = (
        (1 - tau * sys.eta_g / 2) * (R.T * lt) @ R
        - (1 + tau * sys.eta_t / 2) * (Q.T * lam) @ Q
        - tau * (sys.eta_g**2 + sys.eta_t**2) / 2 * np.eye(R.shape[1])
    )
    dP = tt * ((Q @ R.T) * lt + P * l_diag)
    dQ = tau * (lam[:, None] * Q - (P * lt) @ R + Q @ H)
    dR = tau * ((P.T * lam) @ Q - (S * lt) @ R + R @ H) + tt * (lt + l_diag)[:, None] * R
    rrt = R @ R.T
    dS = tt * (rrt * lt + lt[:, None] * rrt + S * l_diag + l_diag[:, None] * S)
    return dP, dQ, dR, dS


def rhs(state: MacroState, sys: OdeSystem) -> MacroState:
    """Time derivative of the macroscopic state."""
    _check_dims(state, sys)
    P, Q, R, S, Z = state.parts()
    return MacroState(*_drift(P, Q, R, S, sys), np.zeros_like(Z))


def _axpy(a: float, x: tuple, y: tuple) -> tuple:
    return tuple(yi + a * xi for xi, yi in zip(x, y))


def integrate(m0: MacroState, sys: OdeSystem, t_end: float, dt: float, recorder: Trajectory | None = None,
              record_every: int = 1) -> Trajectory:
    """Classical fixed-step RK4 from ``t=0`` to ``t_end``.

    The state is recorded at ``t=0`` and after every ``record_every`` steps.
    ``Z`` is carried through unchanged.  A non-finite state aborts with
    :class:`OdeDivergenceError`.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    traj = Trajectory() if recorder is None else recorder
    steps = int(round(t_end / dt))
    if abs(steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError("t_end must be a multiple of dt")

    z = m0.Z
    dims = m0.dims
    _check_dims(m0, sys)

    def f(y):
        return _drift(*y, sys)

    y = m0.parts()[:4]
    traj.append(0.0, m0)
    for k in range(1, steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = f(y)
            k2 = f(_axpy(dt / 2, k1, y))
            k3 = f(_axpy(dt / 2, k2, y))
            k4 = f(_axpy(dt, k3, y))
            y = tuple(yi + dt / 6 * (a + 2 * b + 2 * c + e) for yi, a, b, c, e in zip(y, k1, k2, k3, k4))
        if not all(np.all(np.isfinite(m)) for m in y):
            raise OdeDivergenceError(k * dt)
        if k % record_every == 0 or k == steps:
            traj.append(k * dt, MacroState(*y, z))
    assert traj.states[-1].dims == dims
    return traj


def classify_regime(traj: Trajectory, tail_fraction: float = 0.2) -> str:
    """Label a trajectory from tail statistics of ``diag(P)``.

    ``not-learning`` if the tail mean of ``min |diag P|`` is below 0.15;
    ``oscillating`` if any diagonal's tail peak-to-peak exceeds 0.1;
    ``collapsed`` if a diagonal ends more than 50% below its running maximum;
    otherwise ``converged``.
    """
    if len(traj) < 100:
        raise ValueError(f"classify_regime needs at least 100 samples, got {len(traj)}")
    diag = traj.diagonals("P")
    tail = diag[int(np.floor((1 - tail_fraction) * len(diag))):]
    if np.mean(np.min(np.abs(tail), axis=1)) < 0.15:
        return "not-learning"
    if np.max(np.ptp(tail, axis=0)) > 0.1:
        return "oscillating"
    peak = np.max(np.abs(diag), axis=0)
    if np.any(np.abs(diag[-1]) < 0.5 * peak):
        return "collapsed"
    return "converged"
