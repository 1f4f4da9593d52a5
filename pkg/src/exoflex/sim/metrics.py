"""Aggregate statistics over a run: MAV / MAD per channel, AC peaks, speeds."""

from dataclasses import dataclass

import numpy as np

from ..chain import BINDINGS
from ..classify import CHANNEL_INDEX, ROUTING
from ..errors import DomainError

MC_CHANNELS = tuple((b, c) for b in BINDINGS for c in ROUTING[b]["mc"])
AC_CHANNELS = tuple((b, c) for b in BINDINGS for c in ROUTING[b]["ac"])


def channel_name(binding, channel):
    return f"{binding}.{channel}"


@dataclass
class ChannelStats:
    mav: float  # mean of |x|
    mad: float  # standard deviation of |x|
    max: float  # max of |x|


def channel_stats(x):
    a = np.abs(np.asarray(x, dtype=float))
    if a.size == 0:
        raise DomainError("no samples to aggregate")
    return ChannelStats(float(a.mean()), float(a.std()), float(a.max()))


@dataclass
class Metrics:
    mc: dict  # "UA.Fy" -> ChannelStats
    ac: dict  # "UA.Tz" -> ChannelStats
    peak_joint_speed: float  # rad/s, over all joints
    peak_endpoint_speed: float  # m/s, exo hand cuff
    window_start: float

    def rows(self):
        """(channel, stats) pairs, MC channels first."""
        return list(self.mc.items()) + list(self.ac.items())


def window(trace, start=0.5):
    mask = trace.t >= start - 1e-12
    if not np.any(mask):
        raise DomainError(f"trace of {len(trace.t)} ticks has no samples after {start} s")
    return mask


def signal(trace, binding, channel, source="filtered"):
    arr = getattr(trace, source)
    return arr[:, BINDINGS.index(binding), CHANNEL_INDEX[channel]]


def compute_metrics(trace, window_start=0.5, source="filtered"):
    """Per-channel statistics over the samples at or after ``window_start``."""
    if len(trace.t) == 0:
        raise DomainError("empty trace")
    m = window(trace, window_start)
    mc = {channel_name(b, c): channel_stats(signal(trace, b, c, source)[m]) for b, c in MC_CHANNELS}
    ac = {channel_name(b, c): channel_stats(signal(trace, b, c, source)[m]) for b, c in AC_CHANNELS}
    qd = trace.qd[m]
    hand = trace.hand_position
    if len(hand) > 1:
        v = np.linalg.norm(np.diff(hand, axis=0), axis=1) / trace.dt
        v = v[m[1:]] if np.any(m[1:]) else v
        peak_v = float(v.max()) if v.size else 0.0
    else:
        peak_v = 0.0
    return Metrics(mc, ac, float(np.abs(qd).max()), peak_v, window_start)


def sign_changes(x, band=0.0):
    """Count sign reversals of ``x``, ignoring excursions inside ``(-band, band)``.

    With ``band = 0`` every strict sign flip counts; a positive band acts as a
    Schmitt trigger so sensor noise around zero is not counted as oscillation.
    """
    x = np.asarray(x, dtype=float)
    state = 0
    count = 0
    for v in x:
        s = 1 if v > band else (-1 if v < -band else 0)
        if s == 0:
            continue
        if state != 0 and s != state:
            count += 1
        state = s
    return count
