import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gan_loss_scalar
from subspace_lab.gan import (
    GanConfig,
    GanState,
    PlateauRoundRobin,
    _macro,
    _reduced_noise,
    _update,
    drift_check,
    gradients,
    loss,
    reduced_step,
    sample_fake,
    sgd_step,
    simulate_macro,
    train,
    train_stream,
    with_projection,
)
from subspace_lab.geometry import orthonormalize
from subspace_lab.model import MacroState, SpikedModel, Trajectory, make_rng, matched_init


def basis(seed, n, d):
    return orthonormalize(np.random.default_rng(seed).standard_normal((n, d)))


# configuration and loss


def test_config_validation():
    with pytest.raises(ValueError):
        GanConfig(10, 2, 1, 2, 0.1, 0.1)  # q > p
    with pytest.raises(ValueError):
        GanConfig(10, 2, 2, 2, -0.1, 0.1)
    with pytest.raises(ValueError):
        GanConfig(10, 2, 2, 2, 0.1, 0.1, lam=0.0)
    with pytest.raises(ValueError):
        GanConfig(10, 2, 2, 2, 0.1, 0.1, projection="svd")
    with pytest.raises(ValueError):
        GanConfig(10, 2, 2, 2, 0.1, 0.1, gen_cov_sqrt=[1.0, 2.0, 3.0])
    cfg = GanConfig(10, 2, 2, 2, 0.1, 0.1, gen_cov_sqrt=[1.0, 2.0])
    assert np.array_equal(cfg.gen_cov, [1.0, 4.0]) and cfg.infinite


def test_loss_hand_examples():
    cfg = GanConfig(2, 1, 1, 1, 0.1, 0.1, lam=2.0)
    V = np.array([[1.0], [0.0]])
    W = np.array([[1.0], [0.0]])
    # regularizers vanish on unit columns
    assert loss(np.array([3.0, 1.0]), np.array([1.0, 5.0]), V, W, cfg) == pytest.approx(4.5 - 0.5)
    W2 = np.array([[2.0], [0.0]])
    expected = 0.5 * 36 - 0.5 * 4 - 1.0 * math.log(math.cosh(3.0))
    assert loss(np.array([3.0, 1.0]), np.array([1.0, 5.0]), V, W2, cfg) == pytest.approx(expected)
    with pytest.raises(ValueError):
        loss(np.zeros(2), np.zeros(2), V, W, GanConfig(2, 1, 1, 1, 0.1, 0.1))


def test_logcosh_is_stable_for_large_arguments():
    cfg = GanConfig(2, 1, 1, 1, 0.1, 0.1, lam=1.0)
    V = np.array([[30.0], [0.0]])
    val = loss(np.zeros(2), np.zeros(2), V, np.array([[1.0], [0.0]]), cfg)
    assert val == pytest.approx(0.5 * (899 - math.log(2)))


@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(1, 3))
@settings(max_examples=25)
def test_loss_matches_scalar_oracle(seed, p, q):
    q = min(p, q)
    rng = np.random.default_rng(seed)
    n = 6
    y, yf = rng.standard_normal(n), rng.standard_normal(n)
    V, W = rng.standard_normal((n, p)), rng.standard_normal((n, q))
    cfg = GanConfig(n, 1, p, q, 0.1, 0.1, lam=0.7)
    assert loss(y, yf, V, W, cfg) == pytest.approx(gan_loss_scalar(y, yf, V, W, 0.7), rel=1e-12, abs=1e-12)


def _fd_gradients(y, c, noise, V, W, cfg, h=1e-6):
    def f(Vx, Wx):
        return loss(y, Vx @ c + noise, Vx, Wx, cfg)

    gv, gw = np.zeros_like(V), np.zeros_like(W)
    for idx in np.ndindex(V.shape):
        e = np.zeros_like(V)
        e[idx] = h
        gv[idx] = (f(V + e, W) - f(V - e, W)) / (2 * h)
    for idx in np.ndindex(W.shape):
        e = np.zeros_like(W)
        e[idx] = h
        gw[idx] = (f(V, W + e) - f(V, W - e)) / (2 * h)
    return gv, gw


@pytest.mark.parametrize("seed", range(5))
def test_gradients_match_central_differences(seed):
    rng = np.random.default_rng(seed)
    n, p, q = 5, 3, 2
    cfg = GanConfig(n, 1, p, q, 0.1, 0.1, lam=1.3, gen_noise=0.5)
    V, W = 0.7 * rng.standard_normal((n, p)), 0.7 * rng.standard_normal((n, q))
    y, c, noise = rng.standard_normal(n), rng.standard_normal(p), math.sqrt(0.5) * rng.standard_normal(n)
    gv, gw = gradients(y, V @ c + noise, c, V, W, cfg)
    fv, fw = _fd_gradients(y, c, noise, V, W, cfg)
    scale = max(1.0, np.abs(gv).max(), np.abs(gw).max())
    assert np.max(np.abs(gv - fv)) < 1e-6 * scale
    assert np.max(np.abs(gw - fw)) < 1e-6 * scale


def test_gradients_reject_infinite_lambda():
    cfg = GanConfig(3, 1, 1, 1, 0.1, 0.1)
    with pytest.raises(ValueError):
        gradients(np.zeros(3), np.zeros(3), np.zeros(1), np.ones((3, 1)), np.ones((3, 1)), cfg)


def test_finite_lambda_step_is_gradient_step():
    rng = np.random.default_rng(3)
    n = 4
    cfg = GanConfig(n, 1, 2, 1, 0.3, 0.2, lam=0.8)
    V, W = rng.standard_normal((n, 2)), rng.standard_normal((n, 1))
    y, c = rng.standard_normal(n), rng.standard_normal(2)
    yf = V @ c
    gv, gw = gradients(y, yf, c, V, W, cfg)
    out = sgd_step(GanState(V, W), y, yf, c, cfg)
    assert np.allclose(out.generator, V - 0.2 / n * gv, atol=1e-14)
    assert np.allclose(out.discriminator, W + 0.3 / n * gw, atol=1e-14)
    assert out.step == 1


# infinite-lambda step


def test_infinite_lambda_scalar_hand_step():
    n = 3
    cfg = GanConfig(n, 1, 1, 1, tau=0.6, tau_tilde=0.3, gen_cov_sqrt=[2.0])
    V = np.array([[0.5], [0.5], [0.0]])
    W = np.array([[1.0], [0.0], [0.0]])
    y = np.array([1.0, 2.0, 0.0])
    c = np.array([1.0])
    yf = V @ c  # (0.5, 0.5, 0)
    out = sgd_step(GanState(V, W), y, yf, c, cfg)
    # wy = 1, wyf = 0.5, R = 0.5, L = -4 * 0.25 = -1
    v_expected = V[:, 0] + 0.1 * (np.array([1.0, 0, 0]) * 0.5 * 1.0 - V[:, 0])
    w_raw = W[:, 0] + 0.2 * (y * 1.0 - yf * 0.5)  # (1.15, 0.35, 0)
    w_expected = w_raw / math.hypot(1.15, 0.35)
    assert np.allclose(out.generator[:, 0], v_expected, atol=1e-15)
    assert np.allclose(out.discriminator[:, 0], w_expected, atol=1e-15)


def test_zero_rates_leave_state_unchanged():
    rng = np.random.default_rng(4)
    n = 7
    cfg = GanConfig(n, 2, 2, 2, 0.0, 0.0)
    V, W = rng.standard_normal((n, 2)), basis(5, n, 2)
    out = sgd_step(GanState(V, W), rng.standard_normal(n), rng.standard_normal(n), rng.standard_normal(2), cfg)
    assert np.array_equal(out.generator, V)
    assert np.allclose(out.discriminator, W, atol=1e-14)


@pytest.mark.parametrize("projection", ["polar", "qr"])
def test_single_discriminator_column_is_normalized(projection):
    rng = np.random.default_rng(6)
    n = 5
    cfg = GanConfig(n, 1, 1, 1, 0.5, 0.1, projection=projection)
    V, W = rng.standard_normal((n, 1)), basis(7, n, 1)
    y, c = rng.standard_normal(n), rng.standard_normal(1)
    out = sgd_step(GanState(V, W), y, V @ c, c, cfg)
    raw = W[:, 0] + 0.1 * (y * (W[:, 0] @ y) - (V @ c) * (W[:, 0] @ (V @ c)))
    assert np.allclose(out.discriminator[:, 0], raw / np.linalg.norm(raw), atol=1e-14)


def test_discriminator_stays_orthonormal():
    n = 50
    model = SpikedModel(basis(8, n, 2), np.sqrt([3.0, 5.0]), 1.0)
    cfg = GanConfig(n, 2, 2, 2, 0.2, 0.04, gen_cov_sqrt=np.sqrt([3.0, 5.0]), gen_noise=1.0)
    st = GanState(0.1 * basis(9, n, 2), basis(10, n, 2))
    out = train(st, model, cfg, 500, None, make_rng(0))
    W = out.discriminator
    assert np.linalg.norm(W.T @ W - np.eye(2)) < 1e-12
    assert out.step == 500


def test_sgd_step_rejects_bad_latent():
    cfg = GanConfig(4, 1, 2, 1, 0.1, 0.1)
    with pytest.raises(ValueError):
        sgd_step(GanState(np.ones((4, 2)), basis(0, 4, 1)), np.zeros(4), np.zeros(4), np.zeros(3), cfg)


def test_sample_fake_statistics():
    n = 4
    cfg = GanConfig(n, 1, 2, 1, 0.1, 0.1, gen_noise=0.25, gen_cov_sqrt=[2.0, 1.0])
    V = np.eye(n)[:, :2]
    rng = make_rng(1)
    ys = np.array([sample_fake(V, cfg, rng)[0] for _ in range(20000)])
    assert np.allclose(ys.var(axis=0), [4.25, 1.25, 0.25, 0.25], rtol=0.05)


# training driver


def standard_setup(n, seed=0):
    U = basis(seed, n, 2)
    model = SpikedModel(U, np.sqrt([3.0, 5.0]), 1.0)
    cfg = GanConfig(n, 2, 2, 2, 0.2, 0.04, gen_cov_sqrt=np.sqrt([3.0, 5.0]), gen_noise=1.0)
    target = MacroState(0.1 * np.eye(2), 0.1 * np.eye(2), 0.01 * np.eye(2), np.eye(2), np.eye(2))
    V, W = matched_init(U, target, make_rng(seed))
    return model, cfg, GanState(V, W)


def test_train_zero_steps():
    model, cfg, st = standard_setup(40)
    rec = Trajectory()
    out = train(st, model, cfg, 0, rec, make_rng(0))
    assert len(rec) == 0
    assert np.array_equal(out.generator, st.generator)
    with pytest.raises(ValueError):
        train(st, model, cfg, -1, rec, make_rng(0))


def test_train_records_unit_time():
    model, cfg, st = standard_setup(40)
    rec = Trajectory()
    train(st, model, cfg, 200, rec, make_rng(0))
    assert np.allclose(rec.t, [1, 2, 3, 4, 5])
    rec2 = Trajectory()
    train(st, model, cfg, 200, rec2, make_rng(0), record_every=4)
    assert rec2.t[-1] == pytest.approx(5.0) and len(rec2) == 50


@pytest.mark.slow
def test_train_reaches_final_time_at_n_2000():
    model, cfg, st = standard_setup(2000)
    rec = Trajectory()
    out = train(st, model, cfg, 50 * 2000, rec, make_rng(1), record_every=200)
    assert rec.t[-1] == pytest.approx(50.0)
    assert out.step == 100_000
    assert np.all(np.isfinite(rec.as_matrix()))


def test_training_is_deterministic():
    model, cfg, st = standard_setup(30)
    a = train(st, model, cfg, 300, None, make_rng(11))
    b = train(st, model, cfg, 300, None, make_rng(11))
    c = train(st, model, cfg, 300, None, make_rng(12))
    assert np.array_equal(a.generator, b.generator) and np.array_equal(a.discriminator, b.discriminator)
    assert not np.array_equal(a.generator, c.generator)


def test_train_stream_requires_basis_for_recording():
    model, cfg, st = standard_setup(20)
    with pytest.raises(ValueError):
        train_stream(st, [np.zeros(20)], cfg, make_rng(0), recorder=Trajectory())
    with pytest.raises(ValueError):
        train_stream(GanState(np.zeros((21, 2)), st.discriminator), [], cfg, make_rng(0))


def test_train_stream_callback():
    model, cfg, st = standard_setup(20)
    seen = []
    samples = (np.ones(20) for _ in range(50))
    train_stream(st, samples, cfg, make_rng(0), callback=lambda k, V, W: seen.append(k), callback_every=20)
    assert seen == [20, 40]


def test_divergence_is_reported():
    n = 5
    cfg = GanConfig(n, 1, 1, 1, 0.1, 1e6)
    st = GanState(1e200 * np.ones((n, 1)), basis(0, n, 1))
    with pytest.raises(FloatingPointError):
        train_stream(st, [np.ones(n)] * 5, cfg, make_rng(0))


# sequential schedule


def test_plateau_round_robin_switching():
    sch = PlateauRoundRobin(3, window=10, tol=0.05)
    assert sch.mask.tolist() == [1, 0, 0]
    sch.update(10, [0.1, 0.0, 0.0])
    sch.update(20, [0.5, 0.0, 0.0])  # still improving
    assert sch.active == 0
    sch.update(30, [0.52, 0.0, 0.0])  # plateau
    assert sch.active == 1 and sch.switch_steps == [30]
    sch.update(40, [0.5, 0.3, 0.0])
    sch.update(50, [0.5, 0.31, 0.0])
    sch.update(60, [0.5, 0.31, 0.2])
    sch.update(70, [0.5, 0.31, 0.21])
    assert sch.active == 0  # wraps around
    assert sch.switch_steps == [30, 50, 70]


def test_schedule_freezes_inactive_columns():
    model, cfg, st = standard_setup(40)
    sch = PlateauRoundRobin(2, window=10_000)
    out = train(st, model, cfg, 300, None, make_rng(0), schedule=sch)
    assert np.array_equal(out.generator[:, 1], st.generator[:, 1])
    assert not np.array_equal(out.generator[:, 0], st.generator[:, 0])


# reduced-frame simulator


def test_reduced_step_equals_full_step_on_coupled_noise():
    rng = np.random.default_rng(5)
    n, d, p, q = 12, 2, 2, 2
    m = d + p + q
    U = basis(1, n, d)
    V, W = rng.standard_normal((n, p)), basis(2, n, q)
    cfg = GanConfig(n, d, p, q, 0.7, 0.5, gen_cov_sqrt=[1.3, 0.8], gen_noise=0.6)
    eta_t = 1.4
    B, X = np.linalg.qr(np.hstack([U, V, W]))
    comp = np.linalg.qr(np.hstack([B, rng.standard_normal((n, 2))]))[0][:, m:]
    noise = _reduced_noise(rng, 1, m, d, p, n, np.array([1.5, 0.9]), cfg.gen_cov_sqrt)
    c, alpha, chi_a, cf, alpha_f, g, chi_f = (x[0] for x in noise)
    a = B @ alpha + math.sqrt(chi_a) * comp[:, 0]
    af = B @ alpha_f + g * comp[:, 0] + math.sqrt(chi_f) * comp[:, 1]
    y = U @ c + math.sqrt(eta_t) * a
    yf = V @ cf + math.sqrt(cfg.gen_noise) * af
    V1, W1 = _update(V, W, y, yf, cf, cfg)
    full = _macro(U, V1, W1)
    Xr = reduced_step(X[None], cfg, tuple(x[:1] for x in noise), eta_t)[0]
    G = Xr.T @ Xr
    red = MacroState(G[:d, d:d + p], G[:d, d + p:], G[d:d + p, d + p:], G[d:d + p, d:d + p], G[d + p:, d + p:])
    for x, y_ in zip(full.parts(), red.parts()):
        assert np.max(np.abs(x - y_)) < 1e-12


def test_reduced_and_full_engines_agree_in_distribution():
    n, seeds, steps = 40, 300, 80
    model, cfg, st = standard_setup(n)
    m0 = _macro(model.basis, st.generator, st.discriminator)
    full = []
    for s in range(seeds):
        rec = Trajectory()
        train(st, model, cfg, steps, rec, make_rng((s, 1)), record_every=steps)
        full.append(rec.states[-1].flat())
    red = [tr.states[-1].flat() for tr in simulate_macro(
        m0, model.signal_cov_sqrt, 1.0, cfg, steps, [make_rng((s, 2)) for s in range(seeds)], record_every=steps)]
    full, red = np.array(full), np.array(red)
    se = np.sqrt(full.var(axis=0) / seeds + red.var(axis=0) / seeds)
    z = np.abs(full.mean(axis=0) - red.mean(axis=0)) / np.where(se > 0, se, 1.0)
    assert z.max() < 4.5
    # spreads agree too
    ok = (full.std(axis=0) < 1e-12) | (np.abs(np.log(full.std(axis=0) / red.std(axis=0) + 1e-300)) < 0.3)
    assert ok.all()


def test_simulate_macro_records_and_validates():
    model, cfg, st = standard_setup(30)
    m0 = _macro(model.basis, st.generator, st.discriminator)
    trajs = simulate_macro(m0, model.signal_cov_sqrt, 1.0, cfg, 90, [make_rng(0), make_rng(1)])
    assert len(trajs) == 2 and np.allclose(trajs[0].t, [0, 1, 2, 3])
    assert np.allclose(trajs[0].states[0].P, 0.1 * np.eye(2))
    for tr in trajs:
        assert np.allclose(tr.states[-1].Z, np.eye(2), atol=1e-12)
    with pytest.raises(ValueError):
        simulate_macro(m0, model.signal_cov_sqrt, 1.0, GanConfig(30, 2, 2, 1, 0.1, 0.1), 1, [make_rng(0)])
    small = GanConfig(7, 2, 2, 2, 0.1, 0.1)
    with pytest.raises(ValueError):
        simulate_macro(m0, model.signal_cov_sqrt, 1.0, small, 1, [make_rng(0)])


def test_simulate_macro_schedule_freezes_columns():
    model, cfg, st = standard_setup(30)
    m0 = _macro(model.basis, st.generator, st.discriminator)
    tr = simulate_macro(m0, model.signal_cov_sqrt, 1.0, cfg, 60, [make_rng(0)],
                        schedule_factory=lambda: PlateauRoundRobin(2, window=10_000))[0]
    assert np.allclose(tr.states[-1].P[:, 1], m0.P[:, 1], atol=1e-12)
    assert tr.states[-1].S[1, 1] == pytest.approx(1.0, abs=1e-12)


# conditional drift


def test_drift_check_agrees_with_analytic_drift():
    model, cfg, st = standard_setup(100)
    rep = drift_check(st, model, cfg, 100_000, make_rng(3))
    assert rep.max_z < 5
    assert rep.empirical_v.shape == (100, 2) and rep.empirical_q.shape == (2, 2)


def test_drift_check_zero_generator():
    n = 30
    model = SpikedModel(basis(0, n, 1), [1.5], 1.0)
    cfg = GanConfig(n, 1, 1, 1, 0.2, 0.04)
    st = GanState(np.zeros((n, 1)), basis(1, n, 1))
    rep = drift_check(st, model, cfg, 20_000, make_rng(0))
    assert np.all(rep.analytic_v == 0)
    assert rep.max_z < 5


def test_drift_check_guards():
    model, cfg, st = standard_setup(30)
    with pytest.raises(ValueError):
        drift_check(st, model, GanConfig(30, 2, 2, 2, 0.1, 0.1, lam=1.0), 20_000, make_rng(0))
    with pytest.raises(ValueError):
        drift_check(st, model, cfg, 100, make_rng(0))


def test_qr_projection_biases_drift_on_non_diagonal_states():
    # n large enough that the O(1/n^2) remainder is well below Monte-Carlo error
    n = 400
    U = basis(0, n, 2)
    model = SpikedModel(U, np.sqrt([3.0, 5.0]), 1.0)
    cfg = GanConfig(n, 2, 2, 2, 0.2, 0.04, gen_cov_sqrt=np.sqrt([3.0, 5.0]), gen_noise=1.0)
    target = MacroState(np.array([[0.4, 0.3], [0.1, 0.5]]), np.array([[0.5, 0.2], [-0.3, 0.4]]),
                        np.array([[0.3, 0.1], [0.2, 0.4]]), np.eye(2), np.eye(2))
    V, W = matched_init(U, target, make_rng(0))
    st = GanState(V, W)
    polar_rep = drift_check(st, model, cfg, 100_000, make_rng(1))
    qr_rep = drift_check(st, model, with_projection(cfg, "qr"), 100_000, make_rng(1))
    assert polar_rep.max_z < 5
    assert qr_rep.max_z > 10
