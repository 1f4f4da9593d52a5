"""Kinematics of the 9-joint exoskeleton chain.

Joint indices in the public API are 1-based (``SC1`` is joint 1) or joint
labels; arrays are 0-based internally. Jacobians are expressed in base
coordinates with translational rows first: column ``i`` is
``[axis_i x (p_point - p_i); axis_i]``.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, DomainError, SingularConfigurationError
from .validation import check_vector

LABELS = ("SC1", "SC2", "SH1", "SH2", "EL1", "EL2", "WR1", "WR2", "WR3")
BINDINGS = ("UA", "FA", "HA")
N_JOINTS = 9

# |sin(theta2)| at or below this is treated as singular
SINGULAR_TOL = 1e-6


def skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def axis_rotation(axis, angle):
    """Rodrigues rotation about a unit ``axis``."""
    K = skew(axis)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def make_transform(R=None, p=None):
    T = np.eye(4)
    if R is not None:
        T[:3, :3] = R
    if p is not None:
        T[:3, 3] = p
    return T


# Sensor frame used at every binding in the default chain: x along the limb
# (distal), y in the flexion plane, z along the flexion axis.
SENSOR_ROTATION = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, -1.0], [-1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class Joint:
    label: str
    axis: np.ndarray
    origin: np.ndarray  # fixed 4x4 transform from the previous joint frame
    limits: tuple = (-np.pi, np.pi)


@dataclass(frozen=True)
class BindingPoint:
    parent: int  # 1-based joint index
    offset: np.ndarray  # fixed 4x4 transform in the parent joint frame


@dataclass(frozen=True)
class ChainModel:
    joints: tuple
    binding_points: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.joints) != N_JOINTS:
            raise ConfigurationError(f"chain must have {N_JOINTS} joints, got {len(self.joints)}")
        for j in self.joints:
            if abs(np.linalg.norm(j.axis) - 1.0) > 1e-12:
                raise ConfigurationError(f"axis of {j.label} is not unit-norm")
            if j.limits[0] >= j.limits[1]:
                raise ConfigurationError(f"limits of {j.label} are empty")
        allowed = {"UA": (3, 4), "FA": (5, 6), "HA": (9,)}
        for name, bp in self.binding_points.items():
            if name not in allowed:
                raise ConfigurationError(f"unknown binding point {name!r}")
            if bp.parent not in allowed[name]:
                raise ConfigurationError(
                    f"binding {name} must hang off joint(s) {allowed[name]}, got {bp.parent}"
                )
        if set(self.binding_points) != set(BINDINGS):
            raise ConfigurationError("binding points UA, FA and HA are all required")

    @cached_property
    def _arrays(self):
        axes = np.array([j.axis for j in self.joints])
        K = np.array([skew(a) for a in axes])
        return {
            "axes": axes,
            "K": K,
            "K2": K @ K,
            "origin_R": np.array([j.origin[:3, :3] for j in self.joints]),
            "origin_p": np.array([j.origin[:3, 3] for j in self.joints]),
            "plain_origin": all(np.array_equal(j.origin[:3, :3], np.eye(3)) for j in self.joints),
        }

    @property
    def labels(self):
        return tuple(j.label for j in self.joints)

    @property
    def lower_limits(self):
        return np.array([j.limits[0] for j in self.joints])

    @property
    def upper_limits(self):
        return np.array([j.limits[1] for j in self.joints])

    def joint_index(self, joint):
        """0-based index from a label or a 1-based integer."""
        if isinstance(joint, str):
            try:
                return self.labels.index(joint)
            except ValueError:
                raise DomainError(f"unknown joint {joint!r}") from None
        joint = int(joint)
        if not 1 <= joint <= N_JOINTS:
            raise DomainError(f"joint index {joint} outside 1..{N_JOINTS}")
        return joint - 1


def default_chain(upper_arm=0.318, forearm=0.261, hand=0.08):
    """Default 2-2-2-3 chain of a right arm hanging down at q = 0.

    Base frame: x forward, y left, z up.
    """
    y = np.array([0.0, 1.0, 0.0])
    x = np.array([1.0, 0.0, 0.0])
    z = np.array([0.0, 0.0, 1.0])
    lim = (-np.pi, np.pi)
    joints = (
        Joint("SC1", z, make_transform(), (-0.5, 0.5)),
        Joint("SC2", x, make_transform(p=[0.0, -0.03, 0.0]), (-0.5, 0.5)),
        Joint("SH1", -y, make_transform(p=[0.0, -0.15, 0.0]), lim),
        Joint("SH2", -x, make_transform(), lim),
        Joint("EL1", z, make_transform(p=[0.0, 0.0, -0.75 * upper_arm]), lim),
        Joint("EL2", -y, make_transform(p=[0.0, 0.0, -0.25 * upper_arm]), (-0.2, 2.8)),
        Joint("WR1", z, make_transform(p=[0.0, 0.0, -0.75 * forearm]), lim),
        Joint("WR2", -y, make_transform(p=[0.0, 0.0, -0.25 * forearm]), (-1.4, 1.4)),
        Joint("WR3", x, make_transform(), (-1.0, 1.0)),
    )
    bindings = {
        "UA": BindingPoint(4, make_transform(SENSOR_ROTATION, [0.0, 0.0, -0.6 * upper_arm])),
        "FA": BindingPoint(6, make_transform(SENSOR_ROTATION, [0.0, 0.0, -0.6 * forearm])),
        "HA": BindingPoint(9, make_transform(SENSOR_ROTATION, [0.0, 0.0, -hand])),
    }
    return ChainModel(joints, bindings)


@dataclass
class Kinematics:
    """Forward-kinematics result for one configuration."""

    positions: np.ndarray  # (9, 3) joint frame origins
    rotations: np.ndarray  # (9, 3, 3) joint frame orientations
    axes: np.ndarray  # (9, 3) joint axes in base coordinates
    points: dict  # binding id -> (position, rotation)

    def frame(self, name):
        if name in self.points:
            return self.points[name]
        i = LABELS.index(name)
        return self.positions[i], self.rotations[i]


@dataclass
class JointState:
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray

    def __post_init__(self):
        self.q = check_vector(self.q, N_JOINTS, "q")
        self.qd = check_vector(self.qd, N_JOINTS, "qd")
        self.qdd = check_vector(self.qdd, N_JOINTS, "qdd")


def forward_kinematics(model, q):
    """Frames of every joint and binding point at configuration ``q``."""
    q = check_vector(q, N_JOINTS, "q")
    arr = model._arrays
    local = (
        np.eye(3)
        + np.sin(q)[:, None, None] * arr["K"]
        + (1.0 - np.cos(q))[:, None, None] * arr["K2"]
    )
    positions = np.empty((N_JOINTS, 3))
    rotations = np.empty((N_JOINTS, 3, 3))
    R = np.eye(3)
    p = np.zeros(3)
    plain = arr["plain_origin"]
    pre = np.empty((N_JOINTS, 3, 3))
    for i in range(N_JOINTS):
        p = p + R @ arr["origin_p"][i]
        if not plain:
            R = R @ arr["origin_R"][i]
        pre[i] = R
        R = R @ local[i]
        positions[i] = p
        rotations[i] = R
    axes = np.einsum("kij,kj->ki", pre, arr["axes"])
    points = {}
    for name, bp in model.binding_points.items():
        Rp = rotations[bp.parent - 1]
        points[name] = (positions[bp.parent - 1] + Rp @ bp.offset[:3, 3], Rp @ bp.offset[:3, :3])
    return Kinematics(positions, rotations, axes, points)


def jacobian_from_kinematics(kin, first, last, point):
    """Columns ``first..last`` (0-based, inclusive) of the Jacobian of ``point``."""
    idx = np.arange(first, last + 1)
    z = kin.axes[idx]
    lin = np.cross(z, point - kin.positions[idx])
    return np.vstack([lin.T, z.T])


def jacobian(model, q, first_joint, point, kin=None):
    """6 x k geometric Jacobian of binding ``point`` over joints ``first_joint``..parent.

    ``first_joint`` is a label or 1-based index.
    """
    if point not in model.binding_points:
        raise DomainError(f"unknown binding point {point!r}")
    first = model.joint_index(first_joint)
    last = model.binding_points[point].parent - 1
    if first > last:
        raise DomainError(
            f"joint {model.labels[first]} lies beyond the parent "
            f"{model.labels[last]} of binding {point}"
        )
    if kin is None:
        kin = forward_kinematics(model, q)
    return jacobian_from_kinematics(kin, first, last, kin.points[point][0])


@dataclass(frozen=True)
class PlanarTwoLink:
    l1: float
    l2: float

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0):
            raise ConfigurationError("planar link lengths must be positive")


def planar_forward(geom, theta1, theta2):
    return np.array(
        [
            geom.l1 * np.cos(theta1) + geom.l2 * np.cos(theta1 + theta2),
            geom.l1 * np.sin(theta1) + geom.l2 * np.sin(theta1 + theta2),
        ]
    )


def planar_jacobian(geom, theta1, theta2):
    l1, l2 = geom.l1, geom.l2
    s1, c1 = np.sin(theta1), np.cos(theta1)
    s12, c12 = np.sin(theta1 + theta2), np.cos(theta1 + theta2)
    return np.array([[-l1 * s1 - l2 * s12, -l2 * s12], [l1 * c1 + l2 * c12, l2 * c12]])


def planar_jacobian_inverse(geom, theta1, theta2, tol=SINGULAR_TOL):
    """Closed-form inverse of :func:`planar_jacobian`.

    Raises SingularConfigurationError when ``|sin(theta2)| <= tol``.
    """
    l1, l2 = geom.l1, geom.l2
    s2 = np.sin(theta2)
    if abs(s2) <= tol:
        raise SingularConfigurationError(f"|sin(theta2)| = {abs(s2):.3g} <= {tol:g}")
    s1, c1 = np.sin(theta1), np.cos(theta1)
    s12, c12 = np.sin(theta1 + theta2), np.cos(theta1 + theta2)
    return np.array(
        [
            [c12 / (l1 * s2), s12 / (l1 * s2)],
            [-(l2 * c12 + l1 * c1) / (l1 * l2 * s2), -(l2 * s12 + l1 * s1) / (l1 * l2 * s2)],
        ]
    )
