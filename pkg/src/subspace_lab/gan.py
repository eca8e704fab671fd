"""Single-layer GAN trained by online SGD as a subspace learner.

Generator ``y~ = V c~ + sqrt(eta_G) a~``; discriminator sees ``W^T y``; loss

    L = 1/2 ||W^T y||^2 - 1/2 ||W^T y~||^2 - lam/2 tr logcosh(W^T W - I) + lam/2 tr logcosh(V^T V - I)

with the generator descending and the discriminator ascending, both with the
``1/n`` step-size factor.  With ``lam = inf`` the discriminator is projected
back onto orthonormal columns after every step and the generator carries the
column-norm damping ``V L`` with ``L = -diag(R R^T Lt)``, ``R = V^T W``.

Two simulators share one update kernel:

* :func:`train` runs the full ``n``-dimensional recursion.
* :func:`simulate_macro` runs the same recursion in a moving orthonormal frame
  of ``span[U, V, W]`` plus the two directions the noise vectors add in each
  step.  The law is rotation invariant, so the overlap matrices it produces
  have exactly the distribution of the full recursion while each step costs
  ``O((d+p+q)^2)`` instead of ``O(n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import orthonormalize, polar
from .model import MacroState, SpikedModel, Trajectory, _as_diag_vector, coordinates_from_gram

INFINITE = math.inf
_CHUNK = 512


@dataclass(frozen=True)
class GanConfig:
    n: int
    d: int
    p: int
    q: int
    tau: float
    tau_tilde: float
    lam: float = INFINITE
    gen_noise: float = 0.0
    gen_cov_sqrt: np.ndarray | None = None
    # re-orthonormalization of W in the infinite-lambda limit
    projection: str = "polar"

    def __post_init__(self):
        if not (self.tau >= 0 and self.tau_tilde >= 0):
            raise ValueError("learning rates must be non-negative")
        if not self.lam > 0:
            raise ValueError("lam must be positive or infinite")
        if not (1 <= self.d <= self.n and 1 <= self.q <= self.p <= self.n):
            raise ValueError(f"need 1 <= d, q <= p <= n, got d={self.d} p={self.p} q={self.q} n={self.n}")
        if self.gen_noise < 0:
            raise ValueError("gen_noise must be non-negative")
        cov = np.ones(self.p) if self.gen_cov_sqrt is None else _as_diag_vector(self.gen_cov_sqrt, "gen_cov_sqrt")
        if cov.shape != (self.p,):
            raise ValueError(f"gen_cov_sqrt needs {self.p} entries")
        object.__setattr__(self, "gen_cov_sqrt", cov)
        if self.projection not in ("polar", "qr"):
            raise ValueError("projection must be 'polar' or 'qr'")

    @property
    def infinite(self) -> bool:
        return math.isinf(self.lam)

    @property
    def gen_cov(self) -> np.ndarray:
        return self.gen_cov_sqrt**2


@dataclass(frozen=True)
class GanState:
    generator: np.ndarray
    discriminator: np.ndarray
    step: int = 0


def sample_fake(V, cfg: GanConfig, rng: np.random.Generator):
    """One generator draw ``(y~, c~)``."""
    g = rng.standard_normal(cfg.p)
    a = rng.standard_normal(V.shape[0])
    c = g * cfg.gen_cov_sqrt
    return V @ c + math.sqrt(cfg.gen_noise) * a, c


def _logcosh(x):
    # stable for large |x|
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2 * ax)) - math.log(2)


def loss(y, y_fake, V, W, cfg: GanConfig) -> float:
    if cfg.infinite:
        raise ValueError("the loss is undefined in the infinite-lambda limit")
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    wy = W.T @ y
    wyf = W.T @ y_fake
    reg_w = np.sum(_logcosh(W.T @ W - np.eye(W.shape[1])))
    reg_v = np.sum(_logcosh(V.T @ V - np.eye(V.shape[1])))
    return float(0.5 * wy @ wy - 0.5 * wyf @ wyf - cfg.lam / 2 * reg_w + cfg.lam / 2 * reg_v)


def gradients(y, y_fake, latent_fake, V, W, cfg: GanConfig):
    """``(dL/dV, dL/dW)`` for finite lambda, with ``y~ = V c~ + noise``."""
    if cfg.infinite:
        raise ValueError("gradients are only defined for finite lambda")
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    wy = W.T @ y
    wyf = W.T @ y_fake
    grad_w = np.outer(y, wy) - np.outer(y_fake, wyf) - cfg.lam * W @ np.tanh(W.T @ W - np.eye(W.shape[1]))
    grad_v = -np.outer(W @ wyf, latent_fake) + cfg.lam * V @ np.tanh(V.T @ V - np.eye(V.shape[1]))
    return grad_v, grad_w


def _mT(x):
    return np.swapaxes(x, -1, -2)


def _update(V, W, y, yf, cf, cfg: GanConfig):
    """One SGD step on stacked arrays.

    Shapes: ``V (..., r, p)``, ``W (..., r, q)``, ``y, yf (..., r)``,
    ``cf (..., p)``.  The step size uses ``cfg.n`` rather than ``r`` so the
    kernel also runs in a reduced coordinate frame.
    """
    n = cfg.n
    wy = np.einsum("...rq,...r->...q", W, y)
    wyf = np.einsum("...rq,...r->...q", W, yf)
    push = y[..., :, None] * wy[..., None, :] - yf[..., :, None] * wyf[..., None, :]
    wwyf = np.einsum("...rq,...q->...r", W, wyf)
    pull = wwyf[..., :, None] * cf[..., None, :]
    if cfg.infinite:
        R = _mT(V) @ W
        l_diag = -cfg.gen_cov * np.sum(R**2, axis=-1)
        V_new = V + (cfg.tau_tilde / n) * (pull + V * l_diag[..., None, :])
        W_raw = W + (cfg.tau / n) * push
        W_new = polar(W_raw) if cfg.projection == "polar" else orthonormalize(W_raw)
    else:
        q, p = W.shape[-1], V.shape[-1]
        reg_w = W @ np.tanh(_mT(W) @ W - np.eye(q))
        reg_v = V @ np.tanh(_mT(V) @ V - np.eye(p))
        V_new = V + (cfg.tau_tilde / n) * (pull - cfg.lam * reg_v)
        W_new = W + (cfg.tau / n) * (push - cfg.lam * reg_w)
    return V_new, W_new


def sgd_step(state: GanState, y, y_fake, latent_fake, cfg: GanConfig) -> GanState:
    """Simultaneous generator descent / discriminator ascent on one sample pair."""
    latent_fake = np.asarray(latent_fake, dtype=float)
    if latent_fake.shape != (state.generator.shape[1],) or latent_fake.shape[0] != cfg.p:
        raise ValueError(f"latent_fake has shape {latent_fake.shape}, generator rank is {state.generator.shape[1]}")
    V, W = _update(state.generator, state.discriminator, np.asarray(y, float), np.asarray(y_fake, float),
                   latent_fake, cfg)
    return GanState(V, W, state.step + 1)


def _macro(U, V, W):
    return MacroState(U.T @ V, U.T @ W, V.T @ W, V.T @ V, W.T @ W)


def _true_stream(model: SpikedModel, steps: int, rng):
    """Model samples drawn chunk-wise: latents then ambient noise per chunk."""
    done = 0
    eta = math.sqrt(model.noise_level)
    while done < steps:
        m = min(_CHUNK, steps - done)
        c = rng.standard_normal((m, model.d)) * model.signal_cov_sqrt
        a = rng.standard_normal((m, model.n))
        yield from c @ model.basis.T + eta * a
        done += m


def _column_similarity(U, V):
    """Cosine between each generator column and the true subspace, ``||U^T v_j|| / ||v_j||``."""
    norms = np.linalg.norm(V, axis=0)
    return np.linalg.norm(U.T @ V, axis=0) / np.where(norms > 0, norms, 1.0)


def train_stream(state: GanState, samples, cfg: GanConfig, rng: np.random.Generator, basis=None,
                 recorder: Trajectory | None = None, record_every: int | None = None, schedule=None,
                 callback=None, callback_every: int | None = None) -> GanState:
    """SGD over an iterable of true samples, one fresh fake sample per step.

    Fake latents and noise are drawn from ``rng`` in fixed-size chunks.  When
    ``recorder`` is given, the macroscopic state relative to ``basis`` is
    appended after every ``record_every`` steps (default ``n``) at time
    ``k / n``.  ``schedule`` (see :class:`PlateauRoundRobin`) restricts the
    generator update to its active columns.  ``callback(k, V, W)`` runs after
    every ``callback_every`` steps.
    """
    V, W = state.generator.copy(), state.discriminator.copy()
    n = V.shape[0]
    if n != cfg.n or V.shape[1] != cfg.p or W.shape[1] != cfg.q:
        raise ValueError(f"state shapes {V.shape}, {W.shape} do not match the config")
    record_every = cfg.n if record_every is None else record_every
    callback_every = record_every if callback_every is None else callback_every
    if (recorder is not None or schedule is not None) and basis is None:
        raise ValueError("recording and scheduling need the true basis")
    eta_g = math.sqrt(cfg.gen_noise)
    k = state.step
    it = iter(samples)
    buf_cf = buf_af = None
    pos = _CHUNK
    mask = None if schedule is None else schedule.mask
    for y in it:
        if pos == _CHUNK:
            buf_cf = rng.standard_normal((_CHUNK, cfg.p)) * cfg.gen_cov_sqrt
            buf_af = rng.standard_normal((_CHUNK, n))
            pos = 0
        cf = buf_cf[pos]
        yf = V @ cf + eta_g * buf_af[pos]
        pos += 1
        with np.errstate(over="ignore", invalid="ignore"):
            V_new, W = _update(V, W, np.asarray(y, dtype=float), yf, cf, cfg)
        V = V_new if mask is None else V + (V_new - V) * mask
        k += 1
        if not (np.isfinite(V).all() and np.isfinite(W).all()):
            raise FloatingPointError(f"GAN training diverged at step {k}")
        if schedule is not None and k % schedule.window == 0:
            mask = schedule.update(k, _column_similarity(basis, V))
        if recorder is not None and k % record_every == 0:
            recorder.append(k / cfg.n, _macro(basis, V, W))
        if callback is not None and k % callback_every == 0:
            callback(k, V, W)
    return GanState(V, W, k)


def train(state: GanState, true_model: SpikedModel, cfg: GanConfig, steps: int, recorder: Trajectory | None,
          rng: np.random.Generator, record_every: int | None = None, schedule=None) -> GanState:
    """Run ``steps`` SGD steps on fresh draws from ``true_model``.

    ``rng`` is split into a true-sample stream and a fake-sample stream.  The
    macroscopic state is recorded after every ``record_every`` steps (default
    ``n``, unit time); ``t = 0`` is not recorded.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    true_rng, fake_rng = rng.spawn(2)
    return train_stream(state, _true_stream(true_model, steps, true_rng), cfg, fake_rng, true_model.basis,
                        recorder, record_every, schedule)


class PlateauRoundRobin:
    """Sequential generator schedule: one column trained at a time.

    Every ``window`` steps the active column's similarity with its target is
    compared with its value one window earlier; when the change is below
    ``tol`` the next column (round robin) becomes active.
    """

    def __init__(self, p: int, window: int = 500, tol: float = 1e-2):
        self.p = p
        self.window = window
        self.tol = tol
        self.active = 0
        self._anchor = None
        self.switch_steps: list[int] = []

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.p)
        m[self.active] = 1.0
        return m

    def update(self, k: int, similarity) -> np.ndarray:
        s = float(abs(similarity[self.active]))
        if self._anchor is not None and abs(s - self._anchor) < self.tol:
            self.active = (self.active + 1) % self.p
            self.switch_steps.append(k)
            s = float(abs(similarity[self.active]))
        self._anchor = s
        return self.mask


# --- reduced-frame simulation -------------------------------------------------


def _reduced_noise(rng, count, m, d, p, n, signal_std, gen_std):
    """Per-step variates for the reduced frame, in a fixed draw order."""
    c = rng.standard_normal((count, d)) * signal_std
    alpha = rng.standard_normal((count, m))
    chi_a = rng.chisquare(n - m, size=count)
    cf = rng.standard_normal((count, p)) * gen_std
    alpha_f = rng.standard_normal((count, m))
    g = rng.standard_normal(count)
    chi_f = rng.chisquare(n - m - 1, size=count)
    return c, alpha, chi_a, cf, alpha_f, g, chi_f


def _reduced_samples(X, d, p, noise, eta_t, eta_g):
    """Coordinates of ``y`` and ``y~`` in the frame ``[basis, e1, e2]``.

    ``X (B, m, m)`` holds the coordinates of ``[U V W]`` in an orthonormal
    basis ``B`` of a space containing them.  The noise splits into its
    ``B``-component and an orthogonal remainder; the true-noise remainder
    defines ``e1`` and the fake-noise remainder has a component ``g`` along
    ``e1`` and the rest along ``e2``.
    """
    c, alpha, chi_a, cf, alpha_f, g, chi_f = noise
    Uc = X[..., :d]
    Vc = X[..., d:d + p]
    bsz, m = X.shape[0], X.shape[1]
    y = np.zeros((bsz, m + 2))
    yf = np.zeros((bsz, m + 2))
    st, sg = math.sqrt(eta_t), math.sqrt(eta_g)
    y[:, :m] = np.einsum("bmd,bd->bm", Uc, c) + st * alpha
    y[:, m] = st * np.sqrt(chi_a)
    yf[:, :m] = np.einsum("bmp,bp->bm", Vc, cf) + sg * alpha_f
    yf[:, m] = sg * g
    yf[:, m + 1] = sg * np.sqrt(chi_f)
    return y, yf


def _gram_to_macro(G, d, p):
    return MacroState(G[:d, d:d + p], G[:d, d + p:], G[d:d + p, d + p:], G[d:d + p, d:d + p], G[d + p:, d + p:])


def reduced_step(X, cfg: GanConfig, noise, eta_t: float, mask=None):
    """Advance frame coordinates ``X (B, m, m)`` by one SGD step.

    Returns new ``(B, m, m)`` coordinates (re-compressed by QR).  ``mask``
    ``(B, p)`` freezes generator columns where it is zero.
    """
    d, p = cfg.d, cfg.p
    bsz, m, _ = X.shape
    y, yf = _reduced_samples(X, d, p, noise, eta_t, cfg.gen_noise)
    Xa = np.zeros((bsz, m + 2, m))
    Xa[:, :m] = X
    V, W = _update(Xa[..., d:d + p], Xa[..., d + p:], y, yf, noise[3], cfg)
    if mask is not None:
        V = Xa[..., d:d + p] + (V - Xa[..., d:d + p]) * mask[:, None, :]
    Xa[..., d:d + p] = V
    Xa[..., d + p:] = W
    return np.linalg.qr(Xa, mode="r")


def simulate_macro(m0: MacroState, signal_cov_sqrt, noise_level: float, cfg: GanConfig, steps: int,
                   rngs, record_every: int | None = None, schedule_factory=None) -> list[Trajectory]:
    """Exact-in-law simulation of the macroscopic trajectory of :func:`train`.

    One run per generator in ``rngs``; runs are batched but each draws from
    its own stream.  Each trajectory holds ``t=0`` and every ``record_every``
    steps.  ``schedule_factory()`` builds one sequential column schedule per
    run, driven by the per-column similarity ``||P_:j|| / sqrt(S_jj)``.
    """
    d, p, q = m0.dims
    if (d, p, q) != (cfg.d, cfg.p, cfg.q):
        raise ValueError("m0 dimensions do not match the config")
    m = d + p + q
    if cfg.n < m + 2:
        raise ValueError("n must exceed d + p + q + 1")
    signal_std = _as_diag_vector(signal_cov_sqrt, "signal_cov_sqrt")
    record_every = cfg.n if record_every is None else record_every
    rngs = list(rngs)
    bsz = len(rngs)
    X = np.repeat(coordinates_from_gram(m0.block())[None], bsz, axis=0)
    trajs = [Trajectory() for _ in range(bsz)]
    for tr in trajs:
        tr.append(0.0, m0)
    schedules = None if schedule_factory is None else [schedule_factory() for _ in range(bsz)]
    mask = None if schedules is None else np.stack([s.mask for s in schedules])
    done = 0
    while done < steps:
        cnt = min(_CHUNK, steps - done)
        per_run = [_reduced_noise(r, cnt, m, d, p, cfg.n, signal_std, cfg.gen_cov_sqrt) for r in rngs]
        stacked = [np.stack([pr[j] for pr in per_run], axis=1) for j in range(7)]
        for i in range(cnt):
            noise = tuple(a[i] for a in stacked)
            with np.errstate(over="ignore", invalid="ignore"):
                X = reduced_step(X, cfg, noise, noise_level, mask)
            k = done + i + 1
            if not np.isfinite(X).all():
                raise FloatingPointError(f"GAN training diverged at step {k}")
            if schedules is not None and k % schedules[0].window == 0:
                G = _mT(X) @ X
                rows = []
                for b, sch in enumerate(schedules):
                    mac = _gram_to_macro(G[b], d, p)
                    sims = np.linalg.norm(mac.P, axis=0) / np.sqrt(np.maximum(np.diag(mac.S), 1e-300))
                    rows.append(sch.update(k, sims))
                mask = np.stack(rows)
            if k % record_every == 0:
                G = _mT(X) @ X
                for b in range(bsz):
                    trajs[b].append(k / cfg.n, _gram_to_macro(G[b], d, p))
        done += cnt
    return trajs


# --- conditional drift ----------------------------------------------------------


@dataclass
class DriftReport:
    empirical_v: np.ndarray
    empirical_q: np.ndarray
    analytic_v: np.ndarray
    analytic_q: np.ndarray
    stderr_v: np.ndarray
    stderr_q: np.ndarray
    max_abs_error: float
    max_z: float


def analytic_drift(state: GanState, true_model: SpikedModel, cfg: GanConfig):
    """Leading-order one-step expected increments of ``V`` and ``Q``."""
    U, V, W = true_model.basis, state.generator, state.discriminator
    mac = _macro(U, V, W)
    from .ode import OdeSystem, coefficients

    sys = OdeSystem(true_model.signal_cov_sqrt**2, cfg.gen_cov, cfg.tau, cfg.tau_tilde,
                    true_model.noise_level, cfg.gen_noise)
    co = coefficients(mac, sys)
    lt = cfg.gen_cov
    lam = true_model.signal_cov_sqrt**2
    dv = (cfg.tau_tilde / cfg.n) * ((W @ mac.R.T) * lt + V * np.diag(co.L))
    dq = (cfg.tau / cfg.n) * (lam[:, None] * mac.Q - (mac.P * lt) @ mac.R + mac.Q @ co.H)
    return dv, dq


def drift_check(state: GanState, true_model: SpikedModel, cfg: GanConfig, mc_samples: int,
                rng: np.random.Generator, batch: int = 20000) -> DriftReport:
    """Monte-Carlo estimate of ``E_k[V_{k+1} - V_k]`` and ``E_k[Q_{k+1} - Q_k]``.

    Each sample is an actual SGD step from ``state`` on fresh ``(y, y~)``,
    evaluated in an orthonormal frame of ``span[U, V, W]`` extended by the two
    noise directions; this is exact in distribution for any ``n``.
    """
    if not cfg.infinite:
        raise ValueError("drift_check is defined for the infinite-lambda mode only")
    if mc_samples < 10_000:
        raise ValueError("drift_check needs at least 1e4 Monte-Carlo samples")
    U, V, W = true_model.basis, state.generator, state.discriminator
    d, p, q = U.shape[1], V.shape[1], W.shape[1]
    m = d + p + q
    basis, X = np.linalg.qr(np.hstack([U, V, W]))
    dv_an, dq_an = analytic_drift(state, true_model, cfg)

    sum_v = np.zeros((m, p))
    outer_v = np.zeros((p, m, m))
    sum_q = np.zeros((d, q))
    sq_q = np.zeros((d, q))
    q0 = U.T @ W
    done = 0
    while done < mc_samples:
        b = min(batch, mc_samples - done)
        noise = _reduced_noise(rng, b, m, d, p, cfg.n, true_model.signal_cov_sqrt, cfg.gen_cov_sqrt)
        Xb = np.broadcast_to(X, (b, m, m))
        y, yf = _reduced_samples(Xb, d, p, noise, true_model.noise_level, cfg.gen_noise)
        Xa = np.zeros((b, m + 2, m))
        Xa[:, :m] = Xb
        V_new, W_new = _update(Xa[..., d:d + p], Xa[..., d + p:], y, yf, noise[3], cfg)
        dv = V_new[:, :m] - Xa[:, :m, d:d + p]
        dq = np.einsum("md,bmq->bdq", X[:, :d], W_new[:, :m]) - q0
        sum_v += dv.sum(0)
        outer_v += np.einsum("bip,bjp->pij", dv, dv)
        sum_q += dq.sum(0)
        sq_q += (dq**2).sum(0)
        done += b
    N = mc_samples
    mean_v_c = sum_v / N
    cov_v_c = outer_v / N - np.einsum("ip,jp->pij", mean_v_c, mean_v_c)
    emp_v = basis @ mean_v_c
    # ambient-coordinate variances from the frame covariance, column by column
    var_v = np.einsum("ni,pij,nj->np", basis, cov_v_c, basis)
    se_v = np.sqrt(np.maximum(var_v, 0) / N)
    emp_q = sum_q / N
    se_q = np.sqrt(np.maximum(sq_q / N - emp_q**2, 0) / N)
    err_v = np.abs(emp_v - dv_an)
    err_q = np.abs(emp_q - dq_an)
    max_abs = float(max(err_v.max(), err_q.max()))
    with np.errstate(divide="ignore", invalid="ignore"):
        z_v = np.where(se_v > 0, err_v / se_v, np.where(err_v > 1e-15, np.inf, 0.0))
        z_q = np.where(se_q > 0, err_q / se_q, np.where(err_q > 1e-15, np.inf, 0.0))
    return DriftReport(emp_v, emp_q, dv_an, dq_an, se_v, se_q, max_abs, float(max(z_v.max(), z_q.max())))


def with_projection(cfg: GanConfig, projection: str) -> GanConfig:
    return replace(cfg, projection=projection)
