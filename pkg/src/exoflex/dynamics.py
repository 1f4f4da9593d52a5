"""Rigid-body dynamics of the chain and the smoothed friction model.

Spatial vectors are Plücker coordinates in the base frame, angular part
first, linear part referred to the base origin. Because every quantity lives
in one frame, the recursions reduce to cumulative sums along the chain.
"""

from dataclasses import dataclass, field

import numpy as np

from .chain import N_JOINTS, forward_kinematics
from .errors import ConfigurationError
from .validation import check_vector

GRAVITY = np.array([0.0, 0.0, -9.81])


@dataclass(frozen=True)
class LinkInertial:
    mass: float
    com: np.ndarray
    inertia: np.ndarray

    def __post_init__(self):
        I = np.asarray(self.inertia, dtype=float)
        if not self.mass > 0:
            raise ConfigurationError("link mass must be positive")
        if np.max(np.abs(I - I.T)) > 1e-10:
            raise ConfigurationError("link inertia must be symmetric")
        if np.min(np.linalg.eigvalsh(I)) <= 0:
            raise ConfigurationError("link inertia must be positive definite")


def default_inertials(model=None, scale=1.0):
    """Masses from 1.5 kg (proximal) to 0.3 kg (distal), COMs along each segment."""
    masses = [1.5, 1.3, 1.2, 1.0, 0.8, 0.7, 0.5, 0.4, 0.3]
    coms = [
        (0.0, -0.02, 0.0),
        (0.0, -0.08, 0.0),
        (0.0, 0.0, -0.03),
        (0.0, 0.0, -0.12),
        (0.0, 0.0, -0.04),
        (0.0, 0.0, -0.10),
        (0.0, 0.0, -0.03),
        (0.0, 0.0, -0.01),
        (0.0, 0.0, -0.05),
    ]
    out = []
    for m, c in zip(masses, coms):
        m = m * scale
        # solid-cylinder-like tensor with a 4 cm radius, 10 cm length, plus a small isotropic floor
        r, h = 0.04, 0.10
        Ixx = m * (3 * r * r + h * h) / 12.0
        Izz = m * r * r / 2.0
        I = np.diag([Ixx, Ixx, Izz]) + 1e-4 * scale * np.eye(3)
        out.append(LinkInertial(m, np.array(c), I))
    return tuple(out)


@dataclass
class FrictionParams:
    """Per-joint friction levels.

    ``v_eps`` is the width of the smooth sign used on the Stribeck term; it
    sits far below ``a`` so the model matches the plain sign function for
    any velocity that matters while staying continuous through zero.
    """

    f_c: np.ndarray = field(default_factory=lambda: np.full(N_JOINTS, 0.5))
    f_s: np.ndarray = field(default_factory=lambda: np.full(N_JOINTS, 1.0))
    v_s: np.ndarray = field(default_factory=lambda: np.full(N_JOINTS, 0.05))
    a: np.ndarray = field(default_factory=lambda: np.full(N_JOINTS, 0.01))
    v_eps: np.ndarray = field(default_factory=lambda: np.full(N_JOINTS, 1e-4))

    def __post_init__(self):
        for name in ("f_c", "f_s", "v_s", "a", "v_eps"):
            val = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (N_JOINTS,)).copy()
            setattr(self, name, val)
        if np.any(self.f_c < 0) or np.any(self.f_s < self.f_c):
            raise ConfigurationError("friction levels must satisfy f_s >= f_c >= 0")
        if np.any(self.v_s <= 0) or np.any(self.a <= 0) or np.any(self.v_eps <= 0):
            raise ConfigurationError("v_s, a and v_eps must be positive")

    def scaled(self, factor):
        return FrictionParams(self.f_c * factor, self.f_s * factor, self.v_s, self.a, self.v_eps)


def smooth_sign(v, eps):
    """Odd, C1 sign function: tanh((v/eps)|v/eps|); 0 at v = 0."""
    x = np.asarray(v, dtype=float) / eps
    return np.tanh(x * np.abs(x))


def friction_compensation(params, v):
    """Smoothed Coulomb + Stribeck friction torque per joint."""
    v = np.asarray(v, dtype=float)
    return 2.0 * params.f_c / np.pi * np.arctan(v / params.a) + (params.f_s - params.f_c) * np.exp(
        -np.abs(v / params.v_s)
    ) * smooth_sign(v, params.v_eps)


def friction_slope(params, v):
    """d(friction)/dv."""
    v = np.asarray(v, dtype=float)
    coulomb = 2.0 * params.f_c / np.pi * params.a / (params.a**2 + v**2)
    x = v / params.v_eps
    sig = np.tanh(x * np.abs(x))
    dsig = (1.0 - sig**2) * 2.0 * np.abs(x) / params.v_eps
    e = np.exp(-np.abs(v / params.v_s))
    stribeck = (params.f_s - params.f_c) * e * (dsig - np.sign(v) / params.v_s * sig)
    return coulomb + stribeck


class StackedInertials:
    """Link parameters stacked into arrays for the vectorized recursions."""

    def __init__(self, inertials):
        self.links = tuple(inertials)
        self.mass = np.array([link.mass for link in self.links])
        self.com = np.array([link.com for link in self.links], dtype=float)
        self.inertia = np.array([link.inertia for link in self.links], dtype=float)

    def __iter__(self):
        return iter(self.links)

    def __len__(self):
        return len(self.links)

    def __getitem__(self, i):
        return self.links[i]


def stack_inertials(inertials):
    if isinstance(inertials, StackedInertials):
        return inertials
    return StackedInertials(inertials)


def _batched_skew(c):
    C = np.zeros(c.shape[:-1] + (3, 3))
    C[..., 0, 1], C[..., 0, 2] = -c[..., 2], c[..., 1]
    C[..., 1, 0], C[..., 1, 2] = c[..., 2], -c[..., 0]
    C[..., 2, 0], C[..., 2, 1] = -c[..., 1], c[..., 0]
    return C


def _spatial_inertias(kin, inertials):
    """6x6 base-frame spatial inertias about the base origin, shape (9, 6, 6)."""
    st = stack_inertials(inertials)
    R = kin.rotations
    c = kin.positions + np.einsum("kij,kj->ki", R, st.com)
    Ic = R @ st.inertia @ R.transpose(0, 2, 1)
    C = _batched_skew(c)
    m = st.mass[:, None, None]
    out = np.empty((N_JOINTS, 6, 6))
    out[:, :3, :3] = Ic + m * (C @ C.transpose(0, 2, 1))
    out[:, :3, 3:] = m * C
    out[:, 3:, :3] = m * C.transpose(0, 2, 1)
    out[:, 3:, 3:] = m * np.eye(3)
    return out


def _cross(a, b):
    # np.cross carries noticeable per-call overhead on tiny arrays
    return np.stack(
        [
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ],
        axis=-1,
    )


def _motion_subspaces(kin):
    z = kin.axes
    return np.hstack([z, _cross(kin.positions, z)])


def _cross_motion(v, m):
    """Batched spatial motion cross product v x m."""
    w, v0 = v[..., :3], v[..., 3:]
    mw, mv = m[..., :3], m[..., 3:]
    return np.concatenate([_cross(w, mw), _cross(w, mv) + _cross(v0, mw)], axis=-1)


def _cross_force(v, f):
    """Batched spatial force cross product v x* f."""
    w, v0 = v[..., :3], v[..., 3:]
    n, fl = f[..., :3], f[..., 3:]
    return np.concatenate([_cross(w, n) + _cross(v0, fl), _cross(w, fl)], axis=-1)


def rnea(kin, inertials, qd, qdd, gravity=GRAVITY):
    """Recursive Newton-Euler inverse dynamics on precomputed kinematics."""
    S = _motion_subspaces(kin)
    I6 = _spatial_inertias(kin, inertials)
    v = np.cumsum(S * qd[:, None], axis=0)
    a0 = np.concatenate([np.zeros(3), -np.asarray(gravity, dtype=float)])
    a = a0 + np.cumsum(S * qdd[:, None] + _cross_motion(v, S * qd[:, None]), axis=0)
    f = np.einsum("kij,kj->ki", I6, a) + _cross_force(v, np.einsum("kij,kj->ki", I6, v))
    f_tail = np.cumsum(f[::-1], axis=0)[::-1]
    return np.einsum("ki,ki->k", S, f_tail)


def crba(kin, inertials):
    """Composite-rigid-body mass matrix on precomputed kinematics."""
    S = _motion_subspaces(kin)
    I6 = _spatial_inertias(kin, inertials)
    Ic = np.cumsum(I6[::-1], axis=0)[::-1]
    F = np.einsum("kij,kj->ki", Ic, S)  # F[j] = Ic[j] S[j]
    upper = S @ F.T  # upper[i, j] = S_i . Ic[j] S_j, valid for i <= j
    M = np.triu(upper)
    return M + np.triu(M, 1).T


def inverse_dynamics(model, inertials, q, qd, qdd, gravity=GRAVITY):
    """Joint torques M(q) qdd + h(q, qd) + g(q)."""
    q = check_vector(q, N_JOINTS, "q")
    qd = check_vector(qd, N_JOINTS, "qd")
    qdd = check_vector(qdd, N_JOINTS, "qdd")
    return rnea(forward_kinematics(model, q), inertials, qd, qdd, gravity)


def gravity_torques(model, inertials, q, gravity=GRAVITY):
    z = np.zeros(N_JOINTS)
    return inverse_dynamics(model, inertials, q, z, z, gravity)


def mass_matrix(model, inertials, q):
    q = check_vector(q, N_JOINTS, "q")
    return crba(forward_kinematics(model, q), inertials)


def potential_energy(model, inertials, q, gravity=GRAVITY):
    kin = forward_kinematics(model, q)
    V = 0.0
    for i, link in enumerate(inertials):
        c = kin.positions[i] + kin.rotations[i] @ link.com
        V -= link.mass * np.dot(gravity, c)
    return V


def kinetic_energy(model, inertials, q, qd):
    M = mass_matrix(model, inertials, q)
    return 0.5 * qd @ M @ qd


def feedforward(model, inertials, friction, q, qd_est, qdd_est, gravity=GRAVITY, kin=None):
    """Model-based compensation torque: inverse dynamics plus friction."""
    if kin is None:
        kin = forward_kinematics(model, q)
    qd_est = np.asarray(qd_est, dtype=float)
    qdd_est = np.asarray(qdd_est, dtype=float)
    return rnea(kin, inertials, qd_est, qdd_est, gravity) + friction_compensation(friction, qd_est)
