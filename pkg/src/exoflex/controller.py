"""Per-tick control pipeline.

filter -> classify -> BAS -> intention distinction / FCM -> tau_ft, then
tau_cmd = tau_com + tau_ft and a final per-joint torque clamp. The FF mode is
the decoupled baseline: segment-local Jacobian transpose of the major
components with no gain shaping, no assistant and no coordination terms.
"""

import enum
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .bas import BASConfig, apply_bas, bas_torques, check_span, major_wrench
from .chain import BINDINGS, N_JOINTS, default_chain, forward_kinematics
from .classify import FilterState, Wrench, classify, lowpass_alpha, lowpass_step
from .dynamics import GRAVITY, FrictionParams, default_inertials, feedforward, stack_inertials
from .errors import ConfigurationError
from .fcm import CoordinationWrench, FCMConfig, IntentMode, fcm_torques, intention_distinction
from .validation import check_vector

DEFAULT_TORQUE_LIMITS = np.array([40.0, 40.0, 40.0, 40.0, 20.0, 20.0, 8.0, 8.0, 8.0])


class ControllerMode(enum.Enum):
    FF = "ff"
    BAS_ONLY = "bas"
    FCM_ONLY = "fcm"
    BAS_FCM = "bas-fcm"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-")
        aliases = {"bas-only": "bas", "fcm-only": "fcm"}
        key = aliases.get(key, key)
        for m in cls:
            if m.value == key:
                return m
        raise ConfigurationError(
            f"unknown controller mode {value!r}; expected one of {[m.value for m in cls]}"
        )


@dataclass
class ControllerConfig:
    bas: BASConfig = field(default_factory=BASConfig)
    fcm: FCMConfig = field(default_factory=FCMConfig)
    dt: float = 1.0 / 80.0
    cutoff: float = 10.0  # Hz, wrench and derivative smoothing
    torque_limits: np.ndarray = field(default_factory=lambda: DEFAULT_TORQUE_LIMITS.copy())
    rc_attenuation: float = 0.0
    gravity: np.ndarray = field(default_factory=lambda: GRAVITY.copy())
    armature: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("control period must be positive")
        self.torque_limits = check_vector(
            np.broadcast_to(np.asarray(self.torque_limits, dtype=float), (N_JOINTS,)),
            N_JOINTS,
            "torque_limits",
            finite=False,
        )
        if np.any(np.isnan(self.torque_limits)) or np.any(self.torque_limits <= 0):
            raise ConfigurationError("torque limits must be > 0")
        self.gravity = check_vector(self.gravity, 3, "gravity")
        self.armature = check_vector(
            np.broadcast_to(np.asarray(self.armature, dtype=float), (N_JOINTS,)), N_JOINTS, "armature"
        )
        if np.any(self.armature < 0):
            raise ConfigurationError("armature inertia must be >= 0")
        if not 0.0 <= self.rc_attenuation <= 1.0:
            raise ConfigurationError("rc_attenuation must lie in [0, 1]")
        # validates the cutoff against the sample rate
        FilterState(self.cutoff, self.dt)


@dataclass
class DifferentiationState:
    """Backward-difference velocity/acceleration estimator with optional smoothing.

    Velocity is (q_k - q_{k-1}) / dt, acceleration the second backward
    difference (q_k - 2 q_{k-1} + q_{k-2}) / dt^2; both are zero until enough
    samples exist and are then passed through a first-order low-pass when
    ``cutoff`` is set.
    """

    dt: float = 1.0 / 80.0
    cutoff: float = None
    history: list = field(default_factory=list)
    qd: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    qdd: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))

    @property
    def alpha(self):
        return 1.0 if self.cutoff is None else lowpass_alpha(self.cutoff, self.dt)


def differentiate(state, q):
    q = np.array(q, dtype=float)
    h = state.history
    h.insert(0, q)
    del h[3:]
    if len(h) == 1:
        return state.qd.copy(), state.qdd.copy()
    qd_raw = (h[0] - h[1]) / state.dt
    qdd_raw = (h[0] - 2.0 * h[1] + h[2]) / state.dt**2 if len(h) == 3 else np.zeros_like(q)
    a = state.alpha
    state.qd = state.qd + a * (qd_raw - state.qd)
    state.qdd = state.qdd + a * (qdd_raw - state.qdd)
    return state.qd.copy(), state.qdd.copy()


@dataclass
class ControllerStates:
    filters: dict
    diff: DifferentiationState
    stage: object = None  # previous StageResult

    @classmethod
    def initial(cls, cfg):
        return cls(
            filters={b: FilterState(cfg.cutoff, cfg.dt) for b in BINDINGS},
            diff=DifferentiationState(cfg.dt, cfg.cutoff),
        )


@dataclass
class ControlOutput:
    tau_cmd: np.ndarray  # tau_com + tau_ft, before limiting
    tau_com: np.ndarray
    tau_bas: np.ndarray
    tau_fcm: np.ndarray
    tau_ft: np.ndarray
    tau_out: np.ndarray  # tau_cmd after the per-joint clamp
    saturated: np.ndarray
    elbow_mode: IntentMode
    wrist_mode: IntentMode
    k_e: float
    k_w: float
    bas_gains: dict  # binding -> {force channel: (k_f, k_t)}
    filtered: dict  # binding -> filtered 6-vector
    qd_est: np.ndarray
    qdd_est: np.ndarray


def torque_limit(tau, limits):
    tau = np.asarray(tau, dtype=float)
    limits = np.asarray(limits, dtype=float)
    if np.any(np.isnan(limits)) or np.any(limits <= 0):
        raise ConfigurationError("torque limits must be > 0")
    out = np.clip(tau, -limits, limits)
    return out, np.abs(tau) > limits


def check_controller_setup(model, cfg):
    """Fail at startup on span / binding mismatches rather than mid-run."""
    for b in BINDINGS:
        check_span(model, cfg.bas.spans[b], b)
        check_span(model, cfg.fcm.spans[b], b)
        if b not in cfg.bas.f_max:
            raise ConfigurationError(f"bas.f_max has no entry for {b}")
        if b not in cfg.fcm.thresholds or b not in cfg.fcm.normalizers:
            raise ConfigurationError(f"fcm thresholds/normalizers missing {b}")
    if len(cfg.fcm.thresholds["UA"]) != 2 or len(cfg.fcm.thresholds["FA"]) != 2:
        raise ConfigurationError("UA and FA thresholds need 2 entries (Fy, Fz)")
    if len(cfg.fcm.thresholds["HA"]) != 3:
        raise ConfigurationError("HA thresholds need 3 entries (Tx, Fy, Fz)")


def _as_array(w):
    return w.as_array() if isinstance(w, Wrench) else check_vector(w, 6, "wrench")


def control_step(mode, cfg, model, inertials, friction, q, raw, states):
    """One controller tick. ``raw`` maps binding -> sensor-frame wrench."""
    mode = ControllerMode.parse(mode)
    q = check_vector(q, N_JOINTS, "q")
    filtered = {b: lowpass_step(states.filters[b], _as_array(raw[b])) for b in BINDINGS}
    comps = {b: classify(b, filtered[b], cfg.rc_attenuation) for b in BINDINGS}
    qd_est, qdd_est = differentiate(states.diff, q)

    kin = forward_kinematics(model, q)
    tau_com = feedforward(model, inertials, friction, q, qd_est, qdd_est, cfg.gravity, kin=kin)
    tau_com = tau_com + cfg.armature * qdd_est

    stage = intention_distinction(comps, cfg.fcm, states.stage)
    states.stage = stage

    if mode in (ControllerMode.BAS_ONLY, ControllerMode.BAS_FCM):
        aligned = {b: apply_bas(comps[b], cfg.bas) for b in BINDINGS}
    elif mode is ControllerMode.FF:
        # traditional decoupling works on the unfiltered sensor reading
        aligned = {
            b: major_wrench(classify(b, _as_array(raw[b]), cfg.rc_attenuation)) for b in BINDINGS
        }
    else:
        aligned = {b: major_wrench(comps[b]) for b in BINDINGS}
    tau_bas = bas_torques(model, q, aligned, cfg.bas, kin=kin)

    if mode in (ControllerMode.FCM_ONLY, ControllerMode.BAS_FCM):
        cc = CoordinationWrench.from_components(comps)
        tau_fcm = fcm_torques(
            model, q, cc, (stage.elbow_mode, stage.wrist_mode), (stage.k_e, stage.k_w), cfg.fcm, kin=kin
        )
    else:
        tau_fcm = np.zeros(N_JOINTS)

    tau_ft = tau_bas + tau_fcm
    tau_cmd = tau_com + tau_ft
    tau_out, saturated = torque_limit(tau_cmd, cfg.torque_limits)
    return ControlOutput(
        tau_cmd=tau_cmd,
        tau_com=tau_com,
        tau_bas=tau_bas,
        tau_fcm=tau_fcm,
        tau_ft=tau_ft,
        tau_out=tau_out,
        saturated=saturated,
        elbow_mode=stage.elbow_mode,
        wrist_mode=stage.wrist_mode,
        k_e=stage.k_e,
        k_w=stage.k_w,
        bas_gains={b: aligned[b].gains for b in BINDINGS},
        filtered=filtered,
        qd_est=qd_est,
        qdd_est=qdd_est,
    )


class ExoController(BaseEstimator):
    """Stateful controller with an estimator-style interface.

    ``fit`` resolves defaults and validates the setup; ``step`` advances one
    tick; ``predict`` replays a whole sequence from a fresh state. Input rows
    for ``predict`` are ``[q (9), UA wrench (6), FA wrench (6), HA wrench (6)]``.
    """

    def __init__(
        self,
        mode="bas-fcm",
        model=None,
        inertials=None,
        friction=None,
        config=None,
    ):
        self.mode = mode
        self.model = model
        self.inertials = inertials
        self.friction = friction
        self.config = config

    def fit(self, X=None, y=None):
        self.mode_ = ControllerMode.parse(self.mode)
        self.model_ = self.model if self.model is not None else default_chain()
        self.inertials_ = stack_inertials(
            self.inertials if self.inertials is not None else default_inertials(self.model_)
        )
        self.friction_ = self.friction if self.friction is not None else FrictionParams()
        self.config_ = self.config if self.config is not None else ControllerConfig()
        check_controller_setup(self.model_, self.config_)
        self.states_ = ControllerStates.initial(self.config_)
        self.n_features_in_ = N_JOINTS + 6 * len(BINDINGS)
        return self

    def reset(self):
        check_is_fitted(self, "states_")
        self.states_ = ControllerStates.initial(self.config_)
        return self

    def step(self, q, wrenches):
        check_is_fitted(self, "states_")
        return control_step(
            self.mode_, self.config_, self.model_, self.inertials_, self.friction_, q, wrenches, self.states_
        )

    def _replay(self, X):
        check_is_fitted(self, "states_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ConfigurationError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        states = ControllerStates.initial(self.config_)
        for row in X:
            w = {b: row[N_JOINTS + 6 * i : N_JOINTS + 6 * (i + 1)] for i, b in enumerate(BINDINGS)}
            yield control_step(
                self.mode_, self.config_, self.model_, self.inertials_, self.friction_, row[:N_JOINTS], w, states
            )

    def predict(self, X):
        """Limited command torques for each row of ``X``, shape (n, 9)."""
        return np.array([out.tau_out for out in self._replay(X)])

    def replay(self, X):
        """Full :class:`ControlOutput` records for each row of ``X``."""
        return list(self._replay(X))
