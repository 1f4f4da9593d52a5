import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from exoflex.bas import (
    BASConfig,
    apply_bas,
    bas_gains,
    bas_torques,
    check_span,
    major_wrench,
    span_torques,
)
from exoflex.chain import BINDINGS, N_JOINTS, forward_kinematics, jacobian
from exoflex.classify import classify
from exoflex.errors import ConfigurationError


def test_gain_anchors():
    assert bas_gains(0.0, 30.0) == pytest.approx((0.5, 1.0))
    assert bas_gains(15.0, 30.0) == pytest.approx((1.0, 0.5))
    assert bas_gains(-15.0, 30.0) == pytest.approx((1.0, 0.5))
    assert bas_gains(30.0, 30.0) == pytest.approx((0.5, 0.0), abs=1e-15)
    assert bas_gains(7.5, 30.0) == pytest.approx(((np.sin(np.pi / 4) + 1) / 2, (np.cos(np.pi / 4) + 1) / 2))


@given(st.floats(-1e3, 1e3), st.floats(0.1, 100))
def test_gains_bounded_even_and_clamped(f, f_max):
    k_f, k_t = bas_gains(f, f_max)
    eps = 1e-12
    assert 0.5 - eps <= k_f <= 1.0 and -eps <= k_t <= 1.0
    assert bas_gains(-f, f_max) == (k_f, k_t)
    if abs(f) >= f_max:
        assert (k_f, k_t) == bas_gains(f_max, f_max)


def test_torque_gain_decreasing_on_half_range():
    fs = np.linspace(0, 30, 301)
    kt = np.array([bas_gains(f, 30.0)[1] for f in fs])
    assert np.all(np.diff(kt) < 0)


def test_gain_rejects_bad_threshold():
    with pytest.raises(ConfigurationError):
        bas_gains(1.0, 0.0)


def test_apply_bas_worked_example():
    w = np.array([9.0, 15.0, -40.0, 0.7, 2.0, 3.0])
    aw = apply_bas(classify("UA", w), BASConfig())
    # Fy paired with Tz, Fz with Ty; Fz is clamped to the threshold first
    np.testing.assert_allclose(aw.vector, [0, 15.0, 0.5 * -30.0, 0, 0.0, 0.5 * 3.0], atol=1e-12)
    assert aw.gains["Fy"] == pytest.approx((1.0, 0.5))


def test_apply_bas_hand_keeps_pronation():
    w = np.array([0, 0, 0, 0.4, 1.0, 1.0])
    aw = apply_bas(classify("HA", w), BASConfig())
    np.testing.assert_allclose(aw.vector, [0, 0, 0, 0.4, 1.0, 1.0])


def test_major_wrench():
    w = np.arange(1.0, 7.0)
    np.testing.assert_array_equal(major_wrench(classify("UA", w)).vector, [0, 2, 3, 0, 0, 0])
    np.testing.assert_array_equal(major_wrench(classify("HA", w)).vector, [0, 2, 3, 4, 0, 0])


def test_config_validation():
    with pytest.raises(ConfigurationError):
        BASConfig(f_max={"UA": {"Fy": 0.0, "Fz": 30.0}})
    with pytest.raises(ConfigurationError):
        BASConfig(pairing={"Fy": "Tz", "Fz": "Tz"})
    with pytest.raises(ConfigurationError):
        BASConfig(pairing={"Fx": "Tz"})


def test_span_must_end_at_parent(model):
    check_span(model, (2, 4), "UA")
    with pytest.raises(ConfigurationError):
        check_span(model, (2, 5), "UA")
    with pytest.raises(ConfigurationError):
        check_span(model, (0, 4), "UA")


@given(st.lists(st.floats(-2, 2), min_size=N_JOINTS, max_size=N_JOINTS), st.lists(st.floats(-20, 20), min_size=6, max_size=6))
def test_span_torques_equal_explicit_jacobian_transpose(q, w):
    from exoflex.chain import default_chain

    model = default_chain()
    q, w = np.array(q), np.array(w)
    kin = forward_kinematics(model, q)
    for point, span in BASConfig().spans.items():
        R = kin.points[point][1]
        J = jacobian(model, q, span[0], point)
        expected = J.T @ np.concatenate([R @ w[:3], R @ w[3:]])
        np.testing.assert_allclose(span_torques(kin, span, point, w), expected, atol=1e-10)


def test_bas_torques_scatter_into_spans(model, rng):
    q = rng.uniform(-1, 1, N_JOINTS)
    cfg = BASConfig()
    aligned = {b: apply_bas(classify(b, rng.standard_normal(6) * 5), cfg) for b in BINDINGS}
    tau = bas_torques(model, q, aligned, cfg)
    assert tau[0] == 0.0
    kin = forward_kinematics(model, q)
    only_ua = bas_torques(model, q, {"UA": aligned["UA"]}, cfg, kin=kin)
    assert not only_ua[4:].any()
    total = sum(bas_torques(model, q, {b: aligned[b]}, cfg, kin=kin) for b in BINDINGS)
    np.testing.assert_allclose(tau, total, atol=1e-12)
