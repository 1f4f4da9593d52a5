"""Scripted human arm: a kinematic reference chain plus intent profiles.

The human does not have dynamics of its own. Each intent is turned into a
joint trajectory of the human chain sampled on a fine grid; the binding
springs then transmit whatever force is needed (up to a cap) to drag the
exoskeleton along.
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from ..chain import (
    BINDINGS,
    LABELS,
    N_JOINTS,
    PlanarTwoLink,
    default_chain,
    forward_kinematics,
    jacobian_from_kinematics,
    make_transform,
)
from ..errors import ConfigurationError, DomainError
from ..offset import OffsetGeometry, solve_planar_angles

SPEED_GRID = tuple(np.round(np.arange(0.5, 3.51, 0.5), 10))

# planar sagittal angles <-> chain joints: theta1 = q_SH1 - pi/2, theta2 = q_EL2
SH1, EL2 = LABELS.index("SH1"), LABELS.index("EL2")


def human_chain(upper_arm=0.332, forearm=0.273, hand=0.08, shoulder_offset=(0.0, 0.0, 0.0)):
    """Human reference chain with the exoskeleton's joint layout.

    ``shoulder_offset`` shifts the glenohumeral centre relative to the
    exoskeleton's shoulder joints.
    """
    base = default_chain(upper_arm, forearm, hand)
    joints = list(base.joints)
    sh1 = joints[SH1]
    origin = sh1.origin.copy()
    origin[:3, 3] += np.asarray(shoulder_offset, dtype=float)
    joints[SH1] = dataclasses.replace(sh1, origin=origin)
    return dataclasses.replace(base, joints=tuple(joints))


def sagittal_to_joints(theta1, theta2, base):
    q = np.array(base, dtype=float)
    q[SH1] = theta1 + np.pi / 2
    q[EL2] = theta2
    return q


def joints_to_sagittal(q):
    return q[SH1] - np.pi / 2, q[EL2]


def minimum_jerk(tau):
    tau = np.clip(tau, 0.0, 1.0)
    return tau**3 * (10 - 15 * tau + 6 * tau**2)


@dataclass
class HoldIntent:
    """No movement: the human keeps ``posture``."""

    posture: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    force_cap: float = 80.0
    torque_cap: float = 8.0

    def __post_init__(self):
        self.posture = np.asarray(self.posture, dtype=float)

    def trajectory(self, t, human):
        return np.tile(self.posture, (len(np.asarray(t)), 1))


@dataclass
class JointIntent:
    """Joint-oriented back-and-forth movement of one or more joints.

    ``speed`` is the peak angular speed (rad/s) and ``amplitude`` the full
    excursion (rad). Each listed joint moves by ``sign * amplitude``.
    """

    joints: tuple = ("EL2",)
    speed: float = 1.0
    amplitude: float = 0.8
    signs: tuple = None
    profile: str = "sinusoid"  # or "trapezoid"
    posture: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    delay: float = 0.0  # hold still this long before moving
    force_cap: float = 80.0
    torque_cap: float = 8.0

    def __post_init__(self):
        self.joints = tuple(self.joints)
        for j in self.joints:
            if j not in LABELS:
                raise ConfigurationError(f"unknown joint {j!r}")
        if self.signs is None:
            self.signs = tuple(1.0 for _ in self.joints)
        if len(self.signs) != len(self.joints):
            raise ConfigurationError("signs must match joints")
        if not self.speed > 0 or not self.amplitude > 0:
            raise ConfigurationError("speed and amplitude must be > 0")
        if self.profile not in ("sinusoid", "trapezoid"):
            raise ConfigurationError(f"unknown profile {self.profile!r}")
        if self.delay < 0:
            raise ConfigurationError("delay must be >= 0")
        self.posture = np.asarray(self.posture, dtype=float)

    @property
    def period(self):
        """Duration of one forth-and-back cycle."""
        if self.profile == "sinusoid":
            return np.pi * self.amplitude / self.speed
        return 2 * self.amplitude / (self.speed * 0.8)

    def displacement(self, t):
        """Excursion as a fraction of ``amplitude`` (0 at rest, 1 at the far end)."""
        t = np.maximum(np.asarray(t, dtype=float) - self.delay, 0.0)
        A = self.amplitude
        if self.profile == "sinusoid":
            # amplitude/2 * (1 - cos(w t)) peaks at speed = w * amplitude/2
            w = 2.0 * self.speed / A
            return 0.5 * (1.0 - np.cos(w * t))
        # trapezoidal velocity, 20% ramps, forth and back
        ramp = 0.2
        half = A / (self.speed * (1.0 - ramp))
        phase = np.mod(t, 2 * half) / half
        s = np.where(phase < 1.0, phase, phase - 1.0)
        v = np.interp(s, [0.0, ramp, 1.0 - ramp, 1.0], [0.0, 1.0, 1.0, 0.0])
        v = np.where(phase < 1.0, v, -v) * self.speed
        x = cumulative_trapezoid(v, t, initial=0.0)
        return x / A

    def trajectory(self, t, human):
        t = np.asarray(t, dtype=float)
        x = self.displacement(t)
        q = np.tile(self.posture, (len(t), 1))
        for j, s in zip(self.joints, self.signs):
            q[:, LABELS.index(j)] += s * self.amplitude * x
        return q


def rounded_square(center, side, radius, u, v, n=400):
    """Closed, arc-length-resampled rounded square in the plane spanned by ``u``, ``v``.

    Starts at the middle of the bottom edge and runs counter-clockwise in (u, v).
    """
    if not 0 <= radius < side / 2:
        raise ConfigurationError("corner radius must be below half the side length")
    h = side / 2 - radius
    pts = [(0.0, -side / 2), (h, -side / 2)]
    corners = [((h, -h), -np.pi / 2), ((h, h), 0.0), ((-h, h), np.pi / 2), ((-h, -h), np.pi)]
    for i, ((cx, cy), a0) in enumerate(corners):
        a = a0 + np.linspace(0, np.pi / 2, 24)
        pts.extend(zip(cx + radius * np.cos(a), cy + radius * np.sin(a)))
        nxt = [(side / 2, h), (-h, side / 2), (-side / 2, -h), (0.0, -side / 2)][i]
        pts.append(nxt)
    pts = np.array(pts)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 1e-12])
    pts = pts[keep]
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    grid = np.linspace(0.0, s[-1], n)
    xy = np.column_stack([np.interp(grid, s, pts[:, 0]), np.interp(grid, s, pts[:, 1])])
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.asarray(center, dtype=float) + np.outer(xy[:, 0], u) + np.outer(xy[:, 1], v)


@dataclass
class TargetIntent:
    """Target-oriented hand movement along a closed path.

    The hand point follows ``path`` (base frame, first point = start) with
    minimum-jerk timing per lap while its orientation is held. Joint angles
    of the human chain come from damped least-squares inverse kinematics.
    """

    path: np.ndarray
    lap_time: float = 4.0
    laps: int = 1
    posture: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    hold_orientation: bool = True
    force_cap: float = 80.0
    torque_cap: float = 8.0

    def __post_init__(self):
        self.path = np.asarray(self.path, dtype=float)
        if self.path.ndim != 2 or self.path.shape[1] != 3 or len(self.path) < 2:
            raise ConfigurationError("path must be an (n, 3) array with n >= 2")
        if not self.lap_time > 0 or self.laps < 1:
            raise ConfigurationError("lap_time must be > 0 and laps >= 1")
        self.posture = np.asarray(self.posture, dtype=float)

    def hand_path(self, t):
        seg = np.linalg.norm(np.diff(self.path, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        t = np.asarray(t, dtype=float)
        lap = np.floor(t / self.lap_time)
        frac = np.where(lap >= self.laps, 1.0, t / self.lap_time - lap)
        arc = minimum_jerk(frac) * s[-1]
        return np.column_stack([np.interp(arc, s, self.path[:, k]) for k in range(3)])

    def trajectory(self, t, human, tick=1.0 / 80.0):
        t = np.asarray(t, dtype=float)
        coarse = np.arange(0.0, t[-1] + tick, tick)
        targets = self.hand_path(coarse)
        q = solve_hand_path(human, self.posture, targets, self.hold_orientation)
        return CubicSpline(coarse, q, axis=0)(t)


def solve_hand_path(human, q0, targets, hold_orientation=True, iters=20, damping=1e-4):
    """Track hand-point targets with damped least squares, warm-starting each sample.

    Only the shoulder (SH1, SH2), elbow and wrist joints move; a weak pull
    toward ``q0`` settles the arm's redundant swivel.
    """
    active = np.arange(2, N_JOINTS)
    q = np.array(q0, dtype=float)
    kin = forward_kinematics(human, q)
    R_ref = kin.points["HA"][1]
    out = np.empty((len(targets), N_JOINTS))
    rows = slice(0, 6) if hold_orientation else slice(0, 3)
    for k, target in enumerate(targets):
        for _ in range(iters):
            kin = forward_kinematics(human, q)
            p, R = kin.points["HA"]
            err = np.zeros(6)
            err[:3] = target - p
            E = R_ref @ R.T
            err[3:] = 0.5 * np.array([E[2, 1] - E[1, 2], E[0, 2] - E[2, 0], E[1, 0] - E[0, 1]])
            if np.linalg.norm(err[rows]) < 1e-10:
                break
            J = jacobian_from_kinematics(kin, 0, N_JOINTS - 1, p)[rows][:, active]
            JJt = J @ J.T + damping * np.eye(J.shape[0])
            dq = J.T @ np.linalg.solve(JJt, err[rows])
            null = np.eye(len(active)) - J.T @ np.linalg.solve(JJt, J)
            dq += 0.05 * null @ (np.asarray(q0)[active] - q[active])
            q[active] += dq
        kin = forward_kinematics(human, q)
        if np.linalg.norm(target - kin.points["HA"][0]) > 1e-4:
            raise DomainError(f"hand target {k} at {target} is out of reach of the human chain")
        out[k] = q
    return out


@dataclass
class PlanarReachIntent:
    """Whole-arm forward extension in the sagittal plane, back and forth.

    The wrist centre moves on a straight line between ``start`` and ``end``
    (planar coordinates relative to the shoulder: x forward, y up) with
    minimum-jerk timing; the human joint angles come from the planar
    two-link solution on the human segment lengths.
    """

    start: tuple = (0.25, -0.35)
    end: tuple = (0.52, 0.05)
    move_time: float = 1.0
    posture: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    force_cap: float = 80.0
    torque_cap: float = 8.0

    def __post_init__(self):
        if not self.move_time > 0:
            raise ConfigurationError("move_time must be > 0")
        self.posture = np.asarray(self.posture, dtype=float)

    def endpoint(self, t):
        t = np.asarray(t, dtype=float)
        cycle = np.mod(t, 2 * self.move_time) / self.move_time
        s = np.where(cycle < 1.0, minimum_jerk(cycle), 1.0 - minimum_jerk(cycle - 1.0))
        a, b = np.asarray(self.start, dtype=float), np.asarray(self.end, dtype=float)
        return a + s[:, None] * (b - a)

    def trajectory(self, t, human):
        geom = planar_geometry(human)
        pts = self.endpoint(t)
        q = np.empty((len(pts), N_JOINTS))
        for k, p in enumerate(pts):
            th1, th2 = solve_planar_angles(geom, p)
            q[k] = sagittal_to_joints(th1, th2, self.posture)
        return q


def planar_geometry(model):
    """Upper-arm and forearm lengths (shoulder-elbow, elbow-wrist) of a chain."""
    kin = forward_kinematics(model, np.zeros(N_JOINTS))
    l1 = np.linalg.norm(kin.positions[EL2] - kin.positions[SH1])
    l2 = np.linalg.norm(kin.positions[LABELS.index("WR2")] - kin.positions[EL2])
    return PlanarTwoLink(l1, l2)


def offset_geometry(human, exo):
    return OffsetGeometry(planar_geometry(human), planar_geometry(exo))


@dataclass
class HumanTrajectory:
    """Human joint motion sampled on the plant's half-substep grid."""

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray


def sample_trajectory(intent, human, t):
    """Joint positions and velocities of ``intent`` at times ``t``."""
    q = intent.trajectory(t, human)
    qd = np.gradient(q, t, axis=0, edge_order=2) if len(t) > 2 else np.zeros_like(q)
    return HumanTrajectory(np.asarray(t), q, qd)


def attachments(human, q_human, exo, q_exo):
    """Cuff transforms in the human link frames that coincide with the exo cuffs.

    Returns binding -> (parent index (0-based), 4x4 offset).
    """
    kh = forward_kinematics(human, q_human)
    ke = forward_kinematics(exo, q_exo)
    out = {}
    for b in BINDINGS:
        k = exo.binding_points[b].parent - 1
        T_link = make_transform(kh.rotations[k], kh.positions[k])
        p, R = ke.points[b]
        out[b] = (k, np.linalg.solve(T_link, make_transform(R, p)))
    return out
