import numpy as np
import pytest
from sklearn.base import clone

from exoflex.bas import AlignedWrench, bas_torques
from exoflex.chain import BINDINGS, N_JOINTS, forward_kinematics, jacobian
from exoflex.controller import (
    ControllerConfig,
    ControllerMode,
    ControllerStates,
    DifferentiationState,
    ExoController,
    control_step,
    differentiate,
    torque_limit,
)
from exoflex.dynamics import FrictionParams, gravity_torques
from exoflex.errors import ConfigurationError
from exoflex.fcm import IntentMode

MODES = list(ControllerMode)
Q0 = np.array([0.1, -0.1, 0.3, 0.2, 0.2, 1.0, 0.1, 0.2, -0.1])


def tick(mode, q, raw, states, model, inertials, cfg=None):
    cfg = cfg or ControllerConfig()
    return control_step(mode, cfg, model, inertials, FrictionParams(), q, raw, states)


def random_raw(rng, scale=5.0):
    return {b: scale * rng.standard_normal(6) for b in BINDINGS}


def test_mode_parse():
    assert ControllerMode.parse("BAS_FCM") is ControllerMode.BAS_FCM
    assert ControllerMode.parse("bas-only") is ControllerMode.BAS_ONLY
    assert ControllerMode.parse(ControllerMode.FF) is ControllerMode.FF
    with pytest.raises(ConfigurationError):
        ControllerMode.parse("vmc")


@pytest.mark.parametrize("mode", MODES)
def test_exact_sums_every_tick(mode, model, inertials, rng):
    states = ControllerStates.initial(ControllerConfig())
    for k in range(30):
        q = Q0 + 0.05 * np.sin(0.3 * k) * np.ones(N_JOINTS)
        out = tick(mode, q, random_raw(rng), states, model, inertials)
        np.testing.assert_array_equal(out.tau_ft, out.tau_bas + out.tau_fcm)
        np.testing.assert_array_equal(out.tau_cmd, out.tau_com + out.tau_ft)
        if mode in (ControllerMode.FF, ControllerMode.BAS_ONLY):
            assert not out.tau_fcm.any()


@pytest.mark.parametrize("mode", MODES)
def test_static_zero_wrench_gives_gravity(mode, model, inertials):
    states = ControllerStates.initial(ControllerConfig())
    zero = {b: np.zeros(6) for b in BINDINGS}
    g = gravity_torques(model, inertials, Q0)
    for _ in range(5):
        out = tick(mode, Q0, zero, states, model, inertials)
        np.testing.assert_allclose(out.tau_cmd, g, atol=1e-12)


def test_first_tick_estimates_zero(model, inertials):
    states = ControllerStates.initial(ControllerConfig())
    out = tick("bas-fcm", Q0, {b: np.zeros(6) for b in BINDINGS}, states, model, inertials)
    assert not out.qd_est.any() and not out.qdd_est.any()


def test_differentiation_backward_differences():
    st = DifferentiationState(dt=0.1, cutoff=None)
    assert differentiate(st, [0.0] * 9)[0].sum() == 0
    qd, qdd = differentiate(st, [0.1] * 9)
    np.testing.assert_allclose(qd, 1.0)
    np.testing.assert_allclose(qdd, 0.0)
    qd, qdd = differentiate(st, [0.3] * 9)
    np.testing.assert_allclose(qd, 2.0)
    np.testing.assert_allclose(qdd, 10.0)


def test_mode_reduction_tick_by_tick(model, inertials, rng):
    """No AC, no CC and MC under every threshold: BAS_FCM is k_f-scaled MC."""
    cfg = ControllerConfig()
    states = ControllerStates.initial(cfg)
    for k in range(40):
        raw = {}
        for b in BINDINGS:
            w = np.zeros(6)
            w[1:3] = rng.uniform(-2.5, 2.5, 2)  # below the 3 N thresholds
            raw[b] = w
        out = tick("bas-fcm", Q0, raw, states, model, inertials, cfg)
        assert out.elbow_mode is IntentMode.JOINT and out.wrist_mode is IntentMode.JOINT
        expected = {}
        for b in BINDINGS:
            vec = np.zeros(6)
            for ch, i in (("Fy", 1), ("Fz", 2)):
                vec[i] = out.bas_gains[b][ch][0] * out.filtered[b][i]
            expected[b] = AlignedWrench(b, vec)
        np.testing.assert_allclose(out.tau_bas, bas_torques(model, Q0, expected, cfg.bas), atol=1e-12)
        # FCM contributes only the shoulder Fx channel, which is zero here
        np.testing.assert_allclose(out.tau_fcm, 0.0, atol=1e-15)


def test_ff_uses_raw_major_components(model, inertials, rng):
    states = ControllerStates.initial(ControllerConfig())
    raw = random_raw(rng)
    out = tick("ff", Q0, raw, states, model, inertials)
    kin = forward_kinematics(model, Q0)
    expected = np.zeros(N_JOINTS)
    for b, (first, last) in {"UA": (2, 4), "FA": (5, 6), "HA": (7, 9)}.items():
        mc = np.zeros(6)
        mc[1:3] = raw[b][1:3]
        if b == "HA":
            mc[3] = raw[b][3]
        R = kin.points[b][1]
        J = jacobian(model, Q0, first, b)
        expected[first - 1 : last] += J.T @ np.concatenate([R @ mc[:3], R @ mc[3:]])
    np.testing.assert_allclose(out.tau_ft, expected, atol=1e-12)


def test_torque_limit_examples():
    lim = np.full(N_JOINTS, 5.0)
    tau = np.linspace(-4, 4, N_JOINTS)
    out, sat = torque_limit(tau, lim)
    np.testing.assert_array_equal(out, tau)
    assert not sat.any()
    out, sat = torque_limit(2 * lim, lim)
    np.testing.assert_array_equal(out, lim)
    assert sat.all()
    out, sat = torque_limit(tau * 1e9, np.full(N_JOINTS, np.inf))
    np.testing.assert_array_equal(out, tau * 1e9)
    with pytest.raises(ConfigurationError):
        torque_limit(tau, np.zeros(N_JOINTS))


def test_saturation_recorded(model, inertials):
    cfg = ControllerConfig(torque_limits=np.full(N_JOINTS, 0.01))
    states = ControllerStates.initial(cfg)
    out = tick("ff", Q0, {b: np.zeros(6) for b in BINDINGS}, states, model, inertials, cfg)
    assert out.saturated.any()
    np.testing.assert_array_less(np.abs(out.tau_out), 0.01 + 1e-15)
    assert np.abs(out.tau_cmd).max() > 0.01


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ControllerConfig(cutoff=45.0)
    with pytest.raises(ConfigurationError):
        ControllerConfig(dt=0.0)
    with pytest.raises(ConfigurationError):
        ControllerConfig(rc_attenuation=1.5)
    with pytest.raises(ConfigurationError):
        ControllerConfig(torque_limits=-1.0)


def test_estimator_predict_and_replay(rng):
    X = np.column_stack([Q0 + 0.01 * rng.standard_normal((25, N_JOINTS)), rng.standard_normal((25, 18))])
    est = ExoController(mode="bas-fcm").fit()
    a = est.predict(X)
    b = clone(est).fit().predict(X)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (25, N_JOINTS)
    outs = est.replay(X)
    np.testing.assert_array_equal(np.array([o.tau_out for o in outs]), a)
    # stepping a fresh controller gives the same sequence
    est.reset()
    stepped = [
        est.step(row[:N_JOINTS], {bnd: row[N_JOINTS + 6 * i : N_JOINTS + 6 * i + 6] for i, bnd in enumerate(BINDINGS)})
        for row in X
    ]
    np.testing.assert_array_equal(np.array([o.tau_out for o in stepped]), a)
    with pytest.raises(ConfigurationError):
        est.predict(X[:, :20])
    assert est.get_params()["mode"] == "bas-fcm"
