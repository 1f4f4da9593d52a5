"""Binding alignment: trade major-component authority against assistant torques.

Each major force channel is clamped to its threshold and produces a gain pair:
the sine-shaped force gain peaks at half the threshold, the cosine-shaped
torque gain is 1 at rest and falls to 0 at the threshold. The paired assistant
torque is scaled by the torque gain.
"""

from dataclasses import dataclass, field

import numpy as np

from .chain import forward_kinematics
from .classify import CHANNEL_INDEX
from .errors import ConfigurationError

DEFAULT_F_MAX = 30.0

# major force channel -> assistant torque channel
DEFAULT_PAIRING = {"Fy": "Tz", "Fz": "Ty"}

BAS_SPANS = {"UA": (2, 4), "FA": (5, 6), "HA": (7, 9)}


def _default_f_max():
    return {b: {"Fy": DEFAULT_F_MAX, "Fz": DEFAULT_F_MAX} for b in ("UA", "FA", "HA")}


@dataclass
class BASConfig:
    f_max: dict = field(default_factory=_default_f_max)
    pairing: dict = field(default_factory=lambda: dict(DEFAULT_PAIRING))
    spans: dict = field(default_factory=lambda: dict(BAS_SPANS))

    def __post_init__(self):
        for b, chans in self.f_max.items():
            for c, v in chans.items():
                if not v > 0:
                    raise ConfigurationError(f"f_max[{b}][{c}] must be > 0, got {v}")
        for fch, tch in self.pairing.items():
            if fch not in ("Fy", "Fz") or tch not in ("Ty", "Tz"):
                raise ConfigurationError(f"invalid MC/AC pairing {fch}->{tch}")
        if sorted(self.pairing.values()) != ["Ty", "Tz"]:
            raise ConfigurationError("pairing must map onto Ty and Tz exactly once")


@dataclass
class AlignedWrench:
    binding: str
    vector: np.ndarray  # sensor-frame [Fx, Fy, Fz, Tx, Ty, Tz]
    gains: dict = field(default_factory=dict)  # force channel -> (k_f, k_t)


def bas_gains(f, f_max):
    """Force and torque gains for a major-component reading ``f``."""
    if not f_max > 0:
        raise ConfigurationError(f"f_max must be > 0, got {f_max}")
    f = float(np.clip(f, -f_max, f_max))
    phase = abs(np.pi * f / f_max)
    k_f = (np.sin(phase) + 1.0) / 2.0
    k_t = (np.cos(phase) + 1.0) / 2.0
    return k_f, k_t


def apply_bas(cs, cfg):
    vec = np.zeros(6)
    gains = {}
    f_max = cfg.f_max[cs.binding]
    for fch, tch in cfg.pairing.items():
        limit = f_max[fch]
        f = float(np.clip(cs.mc[fch], -limit, limit))
        k_f, k_t = bas_gains(f, limit)
        vec[CHANNEL_INDEX[fch]] = k_f * f
        vec[CHANNEL_INDEX[tch]] = k_t * cs.ac[tch]
        gains[fch] = (k_f, k_t)
    if "Tx" in cs.mc:
        # the hand's pronation torque has no assistant partner
        vec[CHANNEL_INDEX["Tx"]] = cs.mc["Tx"]
    return AlignedWrench(cs.binding, vec, gains)


def major_wrench(cs):
    """Raw major components only, placed in a sensor-frame 6-vector."""
    vec = np.zeros(6)
    for ch, v in cs.mc.items():
        vec[CHANNEL_INDEX[ch]] = v
    return AlignedWrench(cs.binding, vec)


def check_span(model, span, point):
    first, last = span
    parent = model.binding_points[point].parent
    if last != parent or not 1 <= first <= last:
        raise ConfigurationError(f"span {span} does not end at the parent joint {parent} of {point}")


def span_torques(kin, span, point, sensor_wrench):
    """Jacobian-transpose torques of a sensor-frame wrench over a 1-based joint span.

    The wrench is rotated into base coordinates with the cuff's sensor frame
    before the base-frame Jacobian is applied.
    """
    first, last = span
    p, R = kin.points[point]
    idx = slice(first - 1, last)
    z = kin.axes[idx]
    f = R @ sensor_wrench[:3]
    t = R @ sensor_wrench[3:]
    # J^T [f; t] with columns [z x (p - p_i); z]
    return np.cross(z, p - kin.positions[idx]) @ f + z @ t


def scatter(span, values, n=9):
    out = np.zeros(n)
    out[span[0] - 1 : span[1]] = values
    return out


def bas_torques(model, q, aligned, cfg, kin=None):
    if kin is None:
        kin = forward_kinematics(model, q)
    tau = np.zeros(9)
    for binding, aw in aligned.items():
        span = cfg.spans[binding]
        check_span(model, span, binding)
        tau += scatter(span, span_torques(kin, span, binding, aw.vector))
    return tau
