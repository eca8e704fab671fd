"""Experiment runners: each takes a validated config, writes its outputs and returns a report dict."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import baselines, data, gan, geometry
from ..model import MacroState, SpikedModel, Trajectory, make_rng, matched_init, scaled_random_init, split_rng
from ..ode import OdeSystem, classify_regime, integrate
from . import io, plots
from .config import ExperimentConfig

THREADS_ENV = "SUBSPACE_LAB_THREADS"


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def map_seeds(fn, seeds):
    """``[fn(s) for s in seeds]``, in parallel when ``SUBSPACE_LAB_THREADS`` > 1; order is by seed."""
    seeds = sorted(seeds)
    workers = min(thread_count(), len(seeds))
    if workers <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


# --- shared construction -----------------------------------------------------


def _block(values, rows, cols):
    return np.asarray(values, dtype=float).reshape(rows, cols)


def initial_state(cfg: ExperimentConfig, q: int | None = None, init: float | None = None) -> MacroState:
    """Initial macroscopic state from the config.

    Explicit ``p0``/``q0``/``r0``/``s0`` blocks win.  Otherwise the diagonal
    value ``init`` fills ``diag(P0)`` and ``diag(Q0)``; ``R0 = P0^T Q0``,
    ``S0 = I``, ``Z0 = I``.  With ``init_offdiag`` every entry of P0, Q0, R0
    and the off-diagonal of S0 equal ``init``.
    """
    d, p = cfg.d, cfg.p
    q = cfg.q if q is None else q
    x = cfg.init if init is None else init
    if cfg.init_offdiag:
        P = np.full((d, p), x)
        Q = np.full((d, q), x)
        R = np.full((p, q), x)
        S = np.eye(p) + x * (np.ones((p, p)) - np.eye(p))
    else:
        P = x * np.eye(d, p)
        Q = x * np.eye(d, q)
        R = P.T @ Q
        S = np.eye(p)
    if cfg.p0:
        P = _block(cfg.p0, d, p)
    if cfg.q0 and q == cfg.q:
        Q = _block(cfg.q0, d, q)
    if cfg.r0 and q == cfg.q:
        R = _block(cfg.r0, p, q)
    elif cfg.p0 or cfg.q0:
        R = P.T @ Q
    if cfg.s0:
        S = _block(cfg.s0, p, p)
    return MacroState(P, Q, R, S, np.eye(q))


def ode_system(cfg: ExperimentConfig) -> OdeSystem:
    return OdeSystem(cfg.signal_cov, cfg.gen_cov, cfg.tau, cfg.tau_tilde, cfg.eta_t, cfg.eta_g)


def gan_config(cfg: ExperimentConfig, n: int | None = None, q: int | None = None) -> gan.GanConfig:
    return gan.GanConfig(
        n=cfg.n if n is None else n, d=cfg.d, p=cfg.p, q=cfg.q if q is None else q, tau=cfg.tau,
        tau_tilde=cfg.tau_tilde, lam=cfg.lam, gen_noise=cfg.eta_g, gen_cov_sqrt=np.sqrt(cfg.gen_cov),
        projection=cfg.projection,
    )


def _record_every(cfg: ExperimentConfig, n: int) -> int:
    if cfg.record_every:
        return cfg.record_every
    return max(1, int(round(cfg.record_time * n)))


def _out(cfg: ExperimentConfig) -> Path:
    if not cfg.out:
        raise ValueError("no output directory configured")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(cfg, out, t0, report):
    extra = {k: v for k, v in report.items() if isinstance(v, (int, float, str, bool))}
    io.write_manifest(out, cfg.to_lines(), cfg.seeds, time.perf_counter() - t0, extra)
    return report


# --- ODE ---------------------------------------------------------------------


def run_ode(cfg: ExperimentConfig) -> dict:
    t0 = time.perf_counter()
    out = _out(cfg)
    traj = integrate(initial_state(cfg), ode_system(cfg), cfg.t_end, cfg.dt, record_every=cfg.ode_record_every)
    io.write_trajectory(out / "trajectory.csv", traj)
    svg = plots.emit_plot(plots.trajectory_series(traj), title="ODE", ylabel="overlap")
    io.atomic_write_text(out / "ode.svg", svg)
    report = {"final_min_diag_P": float(np.min(np.diag(traj.states[-1].P)))}
    if len(traj) >= 100:
        report["regime"] = classify_regime(traj, cfg.tail_fraction)
    return _finish(cfg, out, t0, report)


# --- GAN ---------------------------------------------------------------------


def _gan_full(cfg: ExperimentConfig, gcfg: gan.GanConfig, m0: MacroState, seed: int, steps: int,
              record_every: int) -> Trajectory:
    basis_rng, init_rng, train_rng = split_rng(make_rng(seed), 3)
    U = geometry.orthonormalize(basis_rng.standard_normal((gcfg.n, gcfg.d)))
    V0, W0 = matched_init(U, m0, init_rng)
    model = SpikedModel(U, np.sqrt(cfg.signal_cov), cfg.eta_t)
    traj = Trajectory()
    traj.append(0.0, gan._macro(U, V0, W0))
    gan.train(gan.GanState(V0, W0), model, gcfg, steps, traj, train_rng, record_every)
    return traj


def simulate(cfg: ExperimentConfig, n: int, seeds, q: int | None = None, m0: MacroState | None = None,
             schedule_factory=None) -> list[Trajectory]:
    """Empirical macroscopic trajectories for ``seeds`` at dimension ``n`` (ordered by seed)."""
    gcfg = gan_config(cfg, n=n, q=q)
    m0 = initial_state(cfg, q=q) if m0 is None else m0
    steps = int(round(cfg.t_end * n))
    rec = _record_every(cfg, n)
    seeds = sorted(seeds)
    if cfg.engine == "full":
        if schedule_factory is not None:
            raise ValueError("sequential schedules are only wired into the reduced engine for synthetic runs")
        return map_seeds(lambda s: _gan_full(cfg, gcfg, m0, s, steps, rec), seeds)
    rngs = [make_rng((s, n)) for s in seeds]
    return gan.simulate_macro(m0, np.sqrt(cfg.signal_cov), cfg.eta_t, gcfg, steps, rngs, rec, schedule_factory)


def run_gan(cfg: ExperimentConfig) -> dict:
    t0 = time.perf_counter()
    out = _out(cfg)
    trajs = simulate(cfg, cfg.n, cfg.seeds)
    z_dev = 0.0
    for seed, tr in zip(sorted(cfg.seeds), trajs):
        io.write_trajectory(out / f"trajectory_seed{seed}.csv", tr)
        z_dev = max(z_dev, max(np.linalg.norm(s.Z - np.eye(s.Z.shape[0])) for s in tr.states))
    series = plots.trajectory_series(trajs[0], prefix="sgd ")
    if cfg.lam == math.inf:
        ode = integrate(initial_state(cfg), ode_system(cfg), cfg.t_end, cfg.dt, record_every=cfg.ode_record_every)
        series += plots.trajectory_series(ode, dashed=True, prefix="ode ")
    io.atomic_write_text(out / "gan.svg", plots.emit_plot(series, title=f"GAN n={cfg.n}", ylabel="overlap"))
    report = {"max_Z_deviation": z_dev, "final_min_diag_P": float(np.min(np.diag(trajs[0].states[-1].P)))}
    return _finish(cfg, out, t0, report)


# --- baselines ---------------------------------------------------------------


def _baseline_run(cfg: ExperimentConfig, step_fn, tau: float, seed: int):
    basis_rng, init_rng, data_rng = split_rng(make_rng(seed), 3)
    U = geometry.orthonormalize(basis_rng.standard_normal((cfg.n, cfg.d)))
    model = SpikedModel(U, np.sqrt(cfg.signal_cov), cfg.eta_t)
    X0 = geometry.orthonormalize(init_rng.standard_normal((cfg.n, cfg.d)))
    steps = cfg.steps or int(round(cfg.t_end * cfg.n))
    every = _record_every(cfg, cfg.n)
    rows = [[0, 0.0, geometry.grassmann_distance(U, X0)]]

    def record(k, st):
        rows.append([k, k / cfg.n, geometry.grassmann_distance(U, st.basis)])

    final = baselines.run(step_fn, baselines.BaselineState(X0), data.spiked_stream(model, steps, data_rng), tau,
                          record, every)
    return np.array(rows), final.basis


def _run_baseline(cfg: ExperimentConfig, name: str, step_fn, tau: float) -> dict:
    t0 = time.perf_counter()
    out = _out(cfg)
    results = map_seeds(lambda s: _baseline_run(cfg, step_fn, tau, s), cfg.seeds)
    series = []
    for seed, (rows, basis) in zip(sorted(cfg.seeds), results):
        io.write_matrix(out / f"distance_seed{seed}.csv", rows, ["step", "t", "grassmann_distance"])
        io.write_matrix(out / f"basis_seed{seed}.csv", basis)
        series.append(plots.Series(f"seed {seed}", rows[:, 1], rows[:, 2]))
    io.atomic_write_text(out / f"{name}.svg", plots.emit_plot(series, title=name, ylabel="Grassmann distance"))
    report = {"final_distance_mean": float(np.mean([r[-1, 2] for r, _ in results]))}
    return _finish(cfg, out, t0, report)


def run_oja(cfg: ExperimentConfig) -> dict:
    return _run_baseline(cfg, "oja", baselines.oja_step, cfg.tau_oja)


def run_grouse(cfg: ExperimentConfig) -> dict:
    return _run_baseline(cfg, "grouse", baselines.grouse_step, cfg.tau_grouse)


# --- scaling comparison ------------------------------------------------------


def sup_deviation(emp: Trajectory, ode: Trajectory) -> float:
    """``max_t ||M_emp(t) - M_ode(t)||_F`` over a shared time grid."""
    if len(emp) != len(ode) or np.max(np.abs(emp.t - ode.t)) > 1e-9:
        raise ValueError("trajectories are not on the same time grid")
    return max((a - b).norm() for a, b in zip(emp.states, ode.states))


def run_compare(cfg: ExperimentConfig) -> dict:
    """Empirical-vs-ODE deviation for each ``n`` in ``cfg.ns`` and its log-log slope."""
    t0 = time.perf_counter()
    out = _out(cfg)
    m0 = initial_state(cfg)
    ode_every = int(round(cfg.record_time / cfg.dt))
    if abs(ode_every * cfg.dt - cfg.record_time) > 1e-9:
        raise ValueError("record_time must be a multiple of dt")
    ode = integrate(m0, ode_system(cfg), cfg.t_end, cfg.dt, record_every=ode_every)
    io.write_trajectory(out / "ode.csv", ode)
    rows = []
    seeds = sorted(cfg.seeds)
    per_n = {}
    for n in cfg.ns:
        trajs = simulate(cfg, n, seeds, m0=m0)
        devs = np.array([sup_deviation(tr, ode) for tr in trajs])
        per_n[n] = (devs, trajs)
        rows.append([n, devs.mean(), devs.std(ddof=1) if len(devs) > 1 else 0.0, *devs])
        io.write_trajectory(out / f"trajectory_n{n}_seed{seeds[0]}.csv", trajs[0])
    table = np.array(rows)
    header = ["n", "mean_sup_deviation", "std_sup_deviation"] + [f"seed_{s}" for s in seeds]
    io.write_matrix(out / "compare.csv", table, header)
    slope = float(np.polyfit(np.log(table[:, 0]), np.log(table[:, 1]), 1)[0])
    decreasing = bool(np.all(np.diff(table[:, 1]) < 0))
    n_big = cfg.ns[-1]
    series = plots.trajectory_series(per_n[n_big][1][0], prefix=f"n={n_big} ")
    series += plots.trajectory_series(ode, dashed=True, prefix="ode ")
    io.atomic_write_text(out / "compare.svg", plots.emit_plot(series, title="SGD vs ODE", ylabel="overlap"))
    io.atomic_write_text(out / "scaling.svg", plots.emit_plot(
        [plots.Series("mean sup deviation", np.log10(table[:, 0]), np.log10(table[:, 1]))],
        title=f"slope {slope:.3f}", xlabel="log10 n", ylabel="log10 deviation"))
    report = {"slope": slope, "decreasing": decreasing,
              "ns": list(cfg.ns), "mean_deviation": table[:, 1].tolist(), "std_deviation": table[:, 2].tolist()}
    return _finish(cfg, out, t0, report)


# --- off-diagonal study ------------------------------------------------------


def _min_diag_stats(traj: Trajectory, tail_fraction: float, threshold: float = 0.5):
    m = np.min(traj.diagonals("P"), axis=1)
    start = int(np.floor((1 - tail_fraction) * len(m)))
    steady = float(np.mean(m[start:]))
    hit = np.nonzero(m >= threshold)[0]
    t_hit = float(traj.t[hit[0]]) if hit.size else math.inf
    return steady, t_hit


def run_offdiagonal_study(cfg: ExperimentConfig) -> dict:
    """Multi-feature (q = d) versus single-feature (q = 1) discriminators over initial scales.

    Every component of the initial overlaps is set to the scale (see
    :func:`initial_state` with ``init_offdiag``).  Both discriminators get
    the same horizon, i.e. the same number of samples.  In ``empirical`` mode
    the single-feature generator follows the plateau round-robin schedule.
    """
    t0 = time.perf_counter()
    out = _out(cfg)
    cfg = replace(cfg, init_offdiag=True, p0=[], q0=[], r0=[], s0=[])
    sys = ode_system(cfg)
    rows = []
    series = []
    for x in cfg.inits:
        for q in (cfg.d, 1):
            m0 = initial_state(cfg, q=q, init=x)
            if cfg.offdiag_mode == "ode":
                trajs = [integrate(m0, sys, cfg.t_end, cfg.dt, record_every=cfg.ode_record_every)]
            else:
                factory = None
                if q == 1 and cfg.schedule == "plateau":
                    def factory():
                        return gan.PlateauRoundRobin(cfg.p, cfg.schedule_window, cfg.schedule_tol)
                trajs = simulate(cfg, cfg.n, cfg.seeds, q=q, m0=m0, schedule_factory=factory)
            stats = np.array([_min_diag_stats(tr, cfg.tail_fraction) for tr in trajs])
            steady = float(np.mean(stats[:, 0]))
            t_half = float(np.mean(stats[:, 1]))
            rows.append([x, q, steady, t_half])
            tag = "multi" if q == cfg.d else "single"
            io.write_trajectory(out / f"trajectory_{tag}_init{x!r}.csv", trajs[0])
            series.append(plots.Series(f"{tag} {x:g}", trajs[0].t, np.min(trajs[0].diagonals("P"), axis=1),
                                       dashed=(tag == "single")))
    table = np.array(rows)
    io.write_matrix(out / "offdiag.csv", table, ["init", "q", "steady_min_diag_P", "time_to_half"])
    io.atomic_write_text(out / "offdiag.svg", plots.emit_plot(series, title="off-diagonal initialization",
                                                             ylabel="min diag P"))
    multi = table[table[:, 1] == cfg.d][:, 2]
    single = table[table[:, 1] == 1][:, 2]
    gaps = (multi - single).tolist()
    report = {"inits": list(cfg.inits), "multi_steady": multi.tolist(), "single_steady": single.tolist(),
              "gaps": gaps, "multi_wins": bool(np.all(multi > single)),
              "gap_monotone": bool(np.all(np.diff(gaps) >= 0))}
    return _finish(cfg, out, t0, report)


# --- real data ---------------------------------------------------------------


def _load_dataset(cfg: ExperimentConfig) -> data.DatasetMatrix:
    if cfg.dataset_format == "idx":
        ds = data.load_idx_images(cfg.dataset)
    else:
        ds = data.load_csv_matrix(cfg.dataset)
        if cfg.image_rows and cfg.image_cols:
            ds = data.DatasetMatrix(ds.samples, ds.mean, ds.centered, (cfg.image_rows, cfg.image_cols))
    if cfg.max_samples and cfg.max_samples < ds.samples.shape[0]:
        ds = data.DatasetMatrix(ds.samples[: cfg.max_samples], ds.mean, False, ds.image_shape)
    return ds


def _broadcast(values, k: int, name: str) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.size == k:
        return v
    if np.all(v == v[0]):
        return np.full(k, v[0])
    raise ValueError(f"{name} needs {k} entries for k={k}")


def _learned_basis(V) -> np.ndarray:
    u, _, _ = np.linalg.svd(V, full_matrices=False)
    return u


def _safe_distance(U, X) -> float:
    try:
        return geometry.grassmann_distance(U, X)
    except geometry.RankDeficiencyError:
        return math.nan


def _gan_on_data(cfg, ds, stream_ds, U, q: int, epochs: int, seed: int, sequential: bool):
    n, k = ds.samples.shape[1], U.shape[1]
    gcfg = gan.GanConfig(n=n, d=k, p=k, q=q, tau=cfg.tau, tau_tilde=cfg.tau_tilde, lam=math.inf,
                         gen_noise=cfg.eta_g, gen_cov_sqrt=np.sqrt(_broadcast(cfg.gen_cov, k, "gen_cov")),
                         projection=cfg.projection)
    init_rng, order_rng, fake_rng = split_rng(make_rng(seed), 3)
    V0 = scaled_random_init(n, k, cfg.init_scale, init_rng)
    W0 = geometry.orthonormalize(init_rng.standard_normal((n, q)))
    every = _record_every(cfg, n) if cfg.record_every else 1000
    rows = [[0, 0.0, _safe_distance(U, V0)]]
    N = stream_ds.samples.shape[0]

    def record(step, V, W):
        rows.append([step, step / N, _safe_distance(U, V)])

    schedule = gan.PlateauRoundRobin(k, cfg.schedule_window, cfg.schedule_tol) if sequential else None
    state = gan.train_stream(gan.GanState(V0, W0), data.shuffled_epochs(stream_ds, epochs, order_rng), gcfg,
                             fake_rng, basis=U, schedule=schedule, callback=record, callback_every=every)
    if state.step % every:
        record(state.step, state.generator, state.discriminator)
    return np.array(rows), _learned_basis(state.generator)


def _baseline_on_data(cfg, ds, U, step_fn, tau, epochs, seed):
    n, k = ds.samples.shape[1], U.shape[1]
    init_rng, order_rng = split_rng(make_rng(seed), 2)
    X0 = geometry.orthonormalize(init_rng.standard_normal((n, k)))
    every = cfg.record_every or 1000
    N = ds.samples.shape[0]
    rows = [[0, 0.0, geometry.grassmann_distance(U, X0)]]

    def record(step, st):
        rows.append([step, step / N, geometry.grassmann_distance(U, st.basis)])

    final = baselines.run(step_fn, baselines.BaselineState(X0), data.shuffled_epochs(ds, epochs, order_rng), tau,
                          record, every)
    if final.step % every:
        record(final.step, final)
    return np.array(rows), final.basis


def run_real_data(cfg: ExperimentConfig) -> dict:
    """GAN (multi- and single-feature), Oja and GROUSE against a PCA surrogate basis.

    Distances are Grassmann distances between the top-``k`` principal
    subspace of the centered data and each learner's current basis.  The GAN
    streams raw samples unless ``center_for_gan``; the baselines stream the
    centered samples.
    """
    t0 = time.perf_counter()
    out = _out(cfg)
    raw = _load_dataset(cfg)
    centered = data.center(raw)
    U = data.pca_surrogate(centered, cfg.k)
    gan_ds = centered if cfg.center_for_gan else raw
    seed = sorted(cfg.seeds)[0]
    runs = {
        "gan_multi": _gan_on_data(cfg, raw, gan_ds, U, cfg.k, cfg.epochs_multi, seed, False),
        "gan_single": _gan_on_data(cfg, raw, gan_ds, U, 1, cfg.epochs_single, seed,
                                   cfg.schedule == "plateau"),
        "oja": _baseline_on_data(cfg, centered, U, baselines.oja_step, cfg.tau_oja, cfg.epochs_baseline, seed),
        "grouse": _baseline_on_data(cfg, centered, U, baselines.grouse_step, cfg.tau_grouse, cfg.epochs_baseline,
                                    seed),
    }
    io.write_matrix(out / "surrogate_basis.csv", U)
    series = []
    report = {"n": int(raw.samples.shape[1]), "samples": int(raw.samples.shape[0]), "k": cfg.k}
    for name, (rows, basis) in runs.items():
        io.write_matrix(out / f"distance_{name}.csv", rows, ["step", "epoch", "grassmann_distance"])
        io.write_matrix(out / f"basis_{name}.csv", basis)
        series.append(plots.Series(name, rows[:, 1], rows[:, 2]))
        report[f"final_distance_{name}"] = float(rows[-1, 2])
        if raw.image_shape is not None:
            r, c = raw.image_shape
            io.atomic_write_text(out / f"features_{name}.svg", plots.image_grid(basis, r, c))
    io.atomic_write_text(out / "distances.svg", plots.emit_plot(series, title="Grassmann distance to PCA basis",
                                                                xlabel="epoch", ylabel="distance"))
    return _finish(cfg, out, t0, report)


# --- uplift ------------------------------------------------------------------


def uplift_states(cfg: ExperimentConfig):
    """Square uplifted initial state and the plain ``d = p = q`` initial state.

    The true, generator and discriminator bases are realized on leading
    coordinates of ``R^n``, so the coordinate padding added by
    :func:`~subspace_lab.geometry.uplift` is orthogonal to all of them.
    """
    d, p, q = cfg.d, cfg.p, cfg.q
    lead = d + p + q
    n = max(cfg.n, lead + 2 * p)
    plain = replace(cfg, p=d, q=d, gen_cov=list(cfg.gen_cov[:d]), p0=[], q0=[], r0=[], s0=[])
    m_plain = initial_state(plain)
    m_full = initial_state(replace(cfg, p0=[], q0=[], r0=[], s0=[]))
    rng = make_rng(sorted(cfg.seeds)[0])
    U_lead = np.eye(lead, d)
    V_lead, W_lead = matched_init(U_lead, m_full, rng)
    U = np.zeros((n, d))
    V = np.zeros((n, p))
    W = np.zeros((n, q))
    U[:lead], V[:lead], W[:lead] = U_lead, V_lead, W_lead
    U_up = geometry.uplift(U, p)
    W_up = geometry.uplift(W, p)
    m_up = MacroState(U_up.T @ V, U_up.T @ W_up, V.T @ W_up, V.T @ V, W_up.T @ W_up)
    return m_up, m_plain


def run_uplift_demo(cfg: ExperimentConfig) -> dict:
    t0 = time.perf_counter()
    out = _out(cfg)
    d, p = cfg.d, cfg.p
    m_up, m_plain = uplift_states(cfg)
    sys_up = OdeSystem(list(cfg.signal_cov) + [0.0] * (p - d), cfg.gen_cov, cfg.tau, cfg.tau_tilde, cfg.eta_t,
                       cfg.eta_g)
    sys_plain = OdeSystem(cfg.signal_cov, cfg.gen_cov[:d], cfg.tau, cfg.tau_tilde, cfg.eta_t, cfg.eta_g)
    up = integrate(m_up, sys_up, cfg.t_end, cfg.dt, record_every=cfg.ode_record_every)
    plain = integrate(m_plain, sys_plain, cfg.t_end, cfg.dt, record_every=cfg.ode_record_every)
    max_dev = 0.0
    min_eig = math.inf
    for a, b in zip(up.states, plain.states):
        for name in "PQRS":
            max_dev = max(max_dev, float(np.max(np.abs(getattr(a, name)[:d, :d] - getattr(b, name)))))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(a.block()).min()))
    io.write_trajectory(out / "uplifted.csv", up)
    io.write_trajectory(out / "plain.csv", plain)
    series = plots.trajectory_series(plain, prefix="plain ") + plots.trajectory_series(up, dashed=True,
                                                                                      prefix="uplifted ")
    io.atomic_write_text(out / "uplift.svg", plots.emit_plot(series, title="uplift", ylabel="overlap"))
    report = {"max_block_deviation": max_dev, "min_gram_eigenvalue": min_eig}
    return _finish(cfg, out, t0, report)


RUNNERS = {
    "ode": run_ode,
    "gan": run_gan,
    "oja": run_oja,
    "grouse": run_grouse,
    "compare": run_compare,
    "offdiag": run_offdiagonal_study,
    "real-data": run_real_data,
    "uplift": run_uplift_demo,
}


def run(cfg: ExperimentConfig) -> dict:
    return RUNNERS[cfg.kind](cfg)
