import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from oracles import ode_rhs_loops
from subspace_lab.model import MacroState, Trajectory
from subspace_lab.ode import (
    OdeDivergenceError,
    OdeSystem,
    classify_regime,
    coefficients,
    integrate,
    rhs,
)

STANDARD_SYS = OdeSystem([math.sqrt(3), math.sqrt(5)], [math.sqrt(3), math.sqrt(5)], 0.2, 0.04, 2.0, 2.0)


def diag_state(x, d=2):
    e = np.eye(d)
    return MacroState(x * e, x * e, x * x * e, e.copy(), e.copy())


def random_state(rng, d, p, q, scale=0.5):
    return MacroState(
        scale * rng.standard_normal((d, p)),
        scale * rng.standard_normal((d, q)),
        scale * rng.standard_normal((p, q)),
        np.eye(p) + 0.1 * (lambda a: a + a.T)(rng.standard_normal((p, p))),
        np.eye(q),
    )


def test_scalar_drift_frozen_values():
    # hand computation: L = -0.25, H = 0.25 - 0.25 = 0 with no noise
    sys = OdeSystem([1.0], [1.0], 1.0, 1.0, 0.0, 0.0)
    m = MacroState(*(np.array([[0.5]]) for _ in range(4)), np.array([[1.0]]))
    c = coefficients(m, sys)
    assert c.L[0, 0] == pytest.approx(-0.25) and c.H[0, 0] == pytest.approx(0.0)
    out = rhs(m, sys)
    got = [out.P[0, 0], out.Q[0, 0], out.R[0, 0], out.S[0, 0]]
    assert got == pytest.approx([0.125, 0.25, 0.375, 0.25], abs=1e-15)
    assert out.Z[0, 0] == 0.0


@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(1, 3), st.integers(1, 3),
       st.floats(0, 2), st.floats(0, 2))
def test_drift_matches_index_loops(seed, d, p, q, eta_t, eta_g):
    rng = np.random.default_rng(seed)
    sys = OdeSystem(rng.uniform(0.5, 3, d), rng.uniform(0.5, 3, p), 0.2, 0.04, eta_t, eta_g)
    m = random_state(rng, d, p, q)
    out = rhs(m, sys)
    ref = ode_rhs_loops(m.P, m.Q, m.R, m.S, sys.signal_cov, sys.gen_cov, 0.2, 0.04, eta_t, eta_g)
    for a, b in zip(out.parts()[:4], ref):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_right_multiplication_reduces_to_left_for_commuting_states():
    m = diag_state(0.3)
    out = rhs(m, STANDARD_SYS)
    H = coefficients(m, STANDARD_SYS).H
    left = STANDARD_SYS.tau * (STANDARD_SYS.signal_cov[:, None] * m.Q - (m.P * STANDARD_SYS.gen_cov) @ m.R + H @ m.Q)
    assert np.allclose(out.Q, left, atol=1e-15)


def test_zero_state_is_fixed_point():
    z = MacroState(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2), np.eye(2))
    out = rhs(z, STANDARD_SYS)
    assert not any(np.any(x) for x in out.parts())
    traj = integrate(z, STANDARD_SYS, 5.0, 0.01)
    assert np.array_equal(traj.states[-1].P, np.zeros((2, 2)))


def test_z_is_conserved_exactly():
    traj = integrate(diag_state(0.1), STANDARD_SYS, 5.0, 0.01, record_every=50)
    for s in traj.states:
        assert np.array_equal(s.Z, np.eye(2))


def test_recording_schedule():
    traj = integrate(diag_state(0.1), STANDARD_SYS, 1.0, 0.1, record_every=3)
    assert np.allclose(traj.t, [0, 0.3, 0.6, 0.9, 1.0])
    assert integrate(diag_state(0.1), STANDARD_SYS, 0.0, 0.1).t.tolist() == [0.0]


def test_integrate_argument_errors():
    with pytest.raises(ValueError):
        integrate(diag_state(0.1), STANDARD_SYS, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate(diag_state(0.1), STANDARD_SYS, 1.0, 0.3)
    with pytest.raises(ValueError, match="generator"):
        integrate(diag_state(0.1, d=3), STANDARD_SYS, 1.0, 0.1)


def _final(dt, t_end=2.0):
    rng = np.random.default_rng(1)
    m0 = random_state(rng, 2, 2, 2, scale=0.3)
    return integrate(m0, STANDARD_SYS, t_end, dt).states[-1].flat()


def test_rk4_fourth_order_convergence():
    coarse, mid, fine = _final(0.1), _final(0.05), _final(0.025)
    ratio = np.linalg.norm(coarse - mid) / np.linalg.norm(mid - fine)
    assert 12 < ratio < 20  # 2^4 = 16


def test_rk4_matches_scipy_reference():
    rng = np.random.default_rng(1)
    m0 = random_state(rng, 2, 2, 2, scale=0.3)
    dims = m0.dims

    def f(_, y):
        return rhs(MacroState.from_flat(y, *dims), STANDARD_SYS).flat()

    ref = solve_ivp(f, (0, 2.0), m0.flat(), method="DOP853", rtol=1e-12, atol=1e-12).y[:, -1]
    assert np.max(np.abs(_final(0.01) - ref)) < 1e-8


def test_divergence_raises():
    sys = OdeSystem([1.0, 1.0], [1.0, 1.0], 5.0, 5.0, 0.0, 0.0)
    m = diag_state(30.0)
    with pytest.raises(OdeDivergenceError) as info:
        integrate(m, sys, 50.0, 0.1)
    assert isinstance(info.value, FloatingPointError)
    assert info.value.t > 0


def test_system_validation():
    with pytest.raises(ValueError):
        OdeSystem([1.0], [1.0], -0.1, 0.1, 0, 0)
    with pytest.raises(ValueError):
        OdeSystem([1.0], [1.0], 0.1, 0.1, -1, 0)


def _traj_from_diag(values):
    tr = Trajectory()
    for t, v in enumerate(values):
        v = np.atleast_1d(v)
        e = np.diag(v)
        tr.append(float(t), MacroState(e, e, e, np.eye(len(v)), np.eye(len(v))))
    return tr


@pytest.mark.parametrize("series, label", [
    (np.full(200, 0.05), "not-learning"),
    (0.6 + 0.2 * np.sin(np.arange(200) / 3), "oscillating"),
    # flat tail, so only the drop from the running peak triggers
    (np.concatenate([np.linspace(0, 0.9, 100), np.linspace(0.9, 0.3, 50), np.full(50, 0.3)]), "collapsed"),
    (np.concatenate([np.linspace(0, 0.8, 100), np.full(100, 0.8)]), "converged"),
])
def test_classify_regime_synthetic(series, label):
    assert classify_regime(_traj_from_diag(series)) == label


def test_classify_regime_needs_enough_samples():
    with pytest.raises(ValueError):
        classify_regime(_traj_from_diag(np.ones(10)))


def test_learning_threshold_in_one_dimension():
    # linearization: overlaps grow iff Lambda > tau * eta^2
    for lam, eta, grows in [(1.0, 1.0, True), (0.5, 2.0, False)]:
        sys = OdeSystem([lam], [lam], 0.2, 0.04, eta, eta)
        traj = integrate(diag_state(0.01, d=1), sys, 20.0, 0.05)
        assert (abs(traj.states[-1].Q[0, 0]) > 0.01) == grows
