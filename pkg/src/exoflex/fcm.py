"""Full-arm coordination with intention distinction.

Two coordination stages are evaluated each tick. The elbow stage compares the
forearm (FA) major components against the upper arm (UA); the wrist stage
compares the hand (HA) against UA and FA together. A stage in joint-oriented
mode contributes nothing; in target-oriented mode its coordination wrench is
scaled by an arctan gain and mapped through a base-anchored Jacobian.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .bas import check_span, scatter, span_torques
from .chain import forward_kinematics
from .errors import ConfigurationError, DegenerateRatioError

FCM_SPANS = {"UA": (1, 4), "FA": (2, 6), "HA": (2, 9)}


class IntentMode(enum.Enum):
    JOINT = "joint"
    TARGET = "target"


def _default_thresholds():
    return {"UA": [3.0, 3.0], "FA": [3.0, 3.0], "HA": [0.3, 3.0, 3.0]}


def _default_normalizers():
    return {"UA": 10.0, "FA": 10.0, "HA": 10.0}


@dataclass
class FCMConfig:
    """Thresholds follow each binding's MC channel order (HA: Tx, Fy, Fz)."""

    thresholds: dict = field(default_factory=_default_thresholds)
    normalizers: dict = field(default_factory=_default_normalizers)
    lambda_e: float = 2.0
    lambda_w: float = 2.0
    hysteresis: float = 0.1  # band as a fraction of each threshold
    spans: dict = field(default_factory=lambda: dict(FCM_SPANS))

    def __post_init__(self):
        self.thresholds = {b: np.asarray(v, dtype=float) for b, v in self.thresholds.items()}
        for b, th in self.thresholds.items():
            if np.any(th <= 0):
                raise ConfigurationError(f"thresholds[{b}] must be > 0")
        for b, c in self.normalizers.items():
            if not c > 0:
                raise ConfigurationError(f"normalizers[{b}] must be > 0")
        if not (self.lambda_e > 0 and self.lambda_w > 0):
            raise ConfigurationError("lambda_e and lambda_w must be > 0")
        if self.hysteresis < 0:
            raise ConfigurationError("hysteresis must be >= 0")


def classify_intent(mc_local, mc_proximal, th_local, th_proximal, prev=None, hysteresis=0.0):
    """Joint- vs target-oriented intent from major-component magnitudes.

    Joint-oriented when every local channel or every proximal channel is below
    its threshold; target-oriented when both sides have a channel at or above
    it. Leaving the previous mode requires crossing the threshold by
    ``hysteresis * threshold``.
    """
    local = np.abs(np.asarray(mc_local, dtype=float))
    prox = np.abs(np.asarray(mc_proximal, dtype=float))
    th_l = np.asarray(th_local, dtype=float)
    th_p = np.asarray(th_proximal, dtype=float)
    if prev is IntentMode.JOINT:
        up_l, up_p = th_l * (1 + hysteresis), th_p * (1 + hysteresis)
        if np.any(local >= up_l) and np.any(prox >= up_p):
            return IntentMode.TARGET
        return IntentMode.JOINT
    if prev is IntentMode.TARGET:
        lo_l, lo_p = th_l * (1 - hysteresis), th_p * (1 - hysteresis)
        if np.all(local < lo_l) or np.all(prox < lo_p):
            return IntentMode.JOINT
        return IntentMode.TARGET
    if np.all(local < th_l) or np.all(prox < th_p):
        return IntentMode.JOINT
    return IntentMode.TARGET


def _ratio(a_dist, a_prox):
    if a_dist == 0.0 or a_prox == 0.0:
        raise DegenerateRatioError(f"zero magnitude in ratio ({a_dist}, {a_prox})")
    r = a_dist / a_prox
    if r < 1.0:
        return 1.0 - a_prox / a_dist
    return r - 1.0


def magnitude_ratio_elbow(mc_e, mc_s, cfg):
    a_e = np.linalg.norm(mc_e) / cfg.normalizers["FA"]
    a_s = np.linalg.norm(mc_s) / cfg.normalizers["UA"]
    return _ratio(a_e, a_s)


def magnitude_ratio_wrist(mc_w, mc_e, mc_s, cfg):
    a_w = np.linalg.norm(mc_w) / cfg.normalizers["HA"]
    a_es = np.linalg.norm(mc_e) / cfg.normalizers["FA"] + np.linalg.norm(mc_s) / cfg.normalizers["UA"]
    return _ratio(a_w, a_es)


def coordination_gain(p, lam):
    return 2.0 / np.pi * np.arctan(lam * p) + 1.0


@dataclass
class CoordinationWrench:
    shoulder: np.ndarray
    elbow: np.ndarray
    wrist: np.ndarray

    @classmethod
    def from_components(cls, comps):
        """Build the three coordination wrenches from UA/FA/HA component sets."""
        ua, fa, ha = comps["UA"], comps["FA"], comps["HA"]
        sh = np.zeros(6)
        sh[0] = ua.cc_uncoupled["Fx"]
        el = np.zeros(6)
        el[0] = fa.cc_uncoupled["Fx"]
        el[1], el[2] = fa.cc_coupled["Fy"], fa.cc_coupled["Fz"]
        wr = np.zeros(6)
        wr[0] = ha.cc_uncoupled["Fx"]
        wr[1], wr[2] = ha.cc_coupled["Fy"], ha.cc_coupled["Fz"]
        return cls(sh, el, wr)


@dataclass
class StageResult:
    elbow_mode: IntentMode
    wrist_mode: IntentMode
    k_e: float
    k_w: float


def intention_distinction(comps, cfg, prev=None):
    """Modes and coordination gains for the elbow and wrist stages.

    ``prev`` is the previous :class:`StageResult` (or None on the first tick).
    A degenerate magnitude ratio forces that stage to joint-oriented.
    """
    mc_s = comps["UA"].mc_vector()
    mc_e = comps["FA"].mc_vector()
    mc_w = comps["HA"].mc_vector()
    th = cfg.thresholds
    prev_e = prev.elbow_mode if prev is not None else None
    prev_w = prev.wrist_mode if prev is not None else None

    mode_e = classify_intent(mc_e, mc_s, th["FA"], th["UA"], prev_e, cfg.hysteresis)
    k_e = 1.0
    if mode_e is IntentMode.TARGET:
        try:
            k_e = coordination_gain(magnitude_ratio_elbow(mc_e, mc_s, cfg), cfg.lambda_e)
        except DegenerateRatioError:
            mode_e = IntentMode.JOINT

    prox = np.concatenate([mc_s, mc_e])
    th_prox = np.concatenate([th["UA"], th["FA"]])
    mode_w = classify_intent(mc_w, prox, th["HA"], th_prox, prev_w, cfg.hysteresis)
    k_w = 1.0
    if mode_w is IntentMode.TARGET:
        try:
            k_w = coordination_gain(magnitude_ratio_wrist(mc_w, mc_e, mc_s, cfg), cfg.lambda_w)
        except DegenerateRatioError:
            mode_w = IntentMode.JOINT
    return StageResult(mode_e, mode_w, k_e, k_w)


def fcm_torques(model, q, cc, modes, gains, cfg, kin=None):
    """Coordination torques from the three base-anchored chains.

    ``modes`` is ``(elbow_mode, wrist_mode)`` and ``gains`` is ``(k_e, k_w)``.
    The shoulder stage is never gated.
    """
    if kin is None:
        kin = forward_kinematics(model, q)
    spans = cfg.spans
    for point in ("UA", "FA", "HA"):
        check_span(model, spans[point], point)
    mode_e, mode_w = modes
    k_e, k_w = gains
    tau = scatter(spans["UA"], span_torques(kin, spans["UA"], "UA", cc.shoulder))
    if mode_e is IntentMode.TARGET:
        tau += scatter(spans["FA"], span_torques(kin, spans["FA"], "FA", k_e * cc.elbow))
    if mode_w is IntentMode.TARGET:
        tau += scatter(spans["HA"], span_torques(kin, spans["HA"], "HA", k_w * cc.wrist))
    return tau
