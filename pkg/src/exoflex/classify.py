"""Wrench filtering and the MC / AC / CC / RC decomposition of cuff readings."""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ConfigurationError, DomainError
from .validation import check_vector

CHANNELS = ("Fx", "Fy", "Fz", "Tx", "Ty", "Tz")
CHANNEL_INDEX = {c: i for i, c in enumerate(CHANNELS)}

# binding -> category -> channels
ROUTING = {
    "UA": {
        "mc": ("Fy", "Fz"),
        "ac": ("Ty", "Tz"),
        "cc_uncoupled": ("Fx",),
        "cc_coupled": (),
        "rc": ("Tx",),
    },
    "FA": {
        "mc": ("Fy", "Fz"),
        "ac": ("Ty", "Tz"),
        "cc_uncoupled": ("Fx",),
        "cc_coupled": ("Fy", "Fz"),
        "rc": ("Tx",),
    },
    "HA": {
        "mc": ("Tx", "Fy", "Fz"),
        "ac": ("Ty", "Tz"),
        "cc_uncoupled": ("Fx",),
        "cc_coupled": ("Fy", "Fz"),
        "rc": (),
    },
}


@dataclass
class Wrench:
    f: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        self.f = check_vector(self.f, 3, "force")
        self.t = check_vector(self.t, 3, "torque")

    @classmethod
    def from_array(cls, w):
        w = np.asarray(w, dtype=float)
        return cls(w[:3], w[3:6])

    @classmethod
    def zero(cls):
        return cls(np.zeros(3), np.zeros(3))

    def as_array(self):
        return np.concatenate([self.f, self.t])

    def __getitem__(self, channel):
        return self.as_array()[CHANNEL_INDEX[channel]]


@dataclass
class ComponentSet:
    binding: str
    mc: dict
    ac: dict
    cc_uncoupled: dict
    cc_coupled: dict
    rc: dict
    rc_attenuation: float = 0.0

    @property
    def rc_effective(self):
        return {k: self.rc_attenuation * v for k, v in self.rc.items()}

    def mc_vector(self):
        return np.array(list(self.mc.values()))


def classify(binding, w, rc_attenuation=0.0):
    """Route the six channels of ``w`` into major, assistant, coordination and redundant parts.

    Values are copied unchanged; coupled coordination channels repeat the
    matching major-component values. Redundant channels are kept as read and
    attenuated only through :attr:`ComponentSet.rc_effective`.
    """
    if binding not in ROUTING:
        raise DomainError(f"unknown binding {binding!r}")
    arr = w.as_array() if isinstance(w, Wrench) else check_vector(w, 6, "wrench")
    route = ROUTING[binding]
    pick = lambda names: {n: float(arr[CHANNEL_INDEX[n]]) for n in names}  # noqa: E731
    return ComponentSet(
        binding=binding,
        mc=pick(route["mc"]),
        ac=pick(route["ac"]),
        cc_uncoupled=pick(route["cc_uncoupled"]),
        cc_coupled=pick(route["cc_coupled"]),
        rc=pick(route["rc"]),
        rc_attenuation=rc_attenuation,
    )


def lowpass_alpha(cutoff, dt):
    return dt / (dt + 1.0 / (2.0 * np.pi * cutoff))


@dataclass
class FilterState:
    """First-order low-pass state for one binding's six channels."""

    cutoff: float = 10.0
    dt: float = 1.0 / 80.0
    y: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigurationError("sample period must be positive")
        if not 0 < self.cutoff < 0.5 / self.dt:
            raise ConfigurationError(
                f"cutoff {self.cutoff} Hz must lie in (0, {0.5 / self.dt:g}) Hz"
            )
        self.y = np.array(self.y, dtype=float)

    @property
    def alpha(self):
        return lowpass_alpha(self.cutoff, self.dt)


def lowpass_step(state, raw):
    """Advance ``state`` by one sample and return the filtered wrench."""
    x = raw.as_array() if isinstance(raw, Wrench) else np.asarray(raw, dtype=float)
    state.y = state.y + state.alpha * (x - state.y)
    if isinstance(raw, Wrench):
        return Wrench.from_array(state.y)
    return state.y.copy()


class LowPassFilter(TransformerMixin, BaseEstimator):
    """Exponential low-pass filter over the rows of a time series.

    ``fit`` only records the channel count; ``transform`` filters a sequence
    from a zero initial state. Use :meth:`step` for sample-by-sample use.
    """

    def __init__(self, cutoff=10.0, dt=1.0 / 80.0):
        self.cutoff = cutoff
        self.dt = dt

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=1)
        self.n_features_in_ = X.shape[1]
        self.state_ = FilterState(self.cutoff, self.dt, np.zeros(self.n_features_in_))
        return self

    def transform(self, X):
        check_is_fitted(self, "state_")
        X = check_array(X)
        state = FilterState(self.cutoff, self.dt, np.zeros(X.shape[1]))
        out = np.empty_like(X)
        for k, row in enumerate(X):
            out[k] = lowpass_step(state, row)
        return out

    def step(self, x):
        check_is_fitted(self, "state_")
        return lowpass_step(self.state_, x)

    def reset(self):
        check_is_fitted(self, "state_")
        self.state_.y[:] = 0.0
        return self
