"""Cuff spring-damper coupling and the force/torque sensor reading it produces."""

from dataclasses import dataclass, field

import numpy as np

from ..classify import Wrench
from ..errors import ConfigurationError
from ..validation import check_rotation, check_vector


@dataclass
class BindingInterface:
    """One cuff: 6-DoF diagonal spring-damper plus the sensor mounted on it.

    Stiffness/damping are ordered like the wrench channels (Fx, Fy, Fz, Tx,
    Ty, Tz) in the cuff frame. ``mount_offset`` places the sensor origin in
    the cuff frame and ``mount_rotation`` orients it; a non-zero offset leaks
    force into the torque channels through the lever arm.
    """

    stiffness: np.ndarray = field(
        default_factory=lambda: np.array([1500.0, 2000.0, 2000.0, 8.0, 15.0, 15.0])
    )
    damping: np.ndarray = field(default_factory=lambda: np.array([45.0, 60.0, 60.0, 0.3, 0.9, 0.9]))
    mount_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    mount_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    noise_force: float = 0.1
    noise_torque: float = 0.01
    range_force: float = 50.0
    range_torque: float = 5.0

    def __post_init__(self):
        self.stiffness = check_vector(self.stiffness, 6, "stiffness")
        self.damping = check_vector(self.damping, 6, "damping")
        if np.any(self.stiffness < 0) or np.any(self.damping < 0):
            raise ConfigurationError("stiffness and damping must be >= 0")
        self.mount_offset = check_vector(self.mount_offset, 3, "mount_offset")
        self.mount_rotation = check_rotation(self.mount_rotation, name="mount_rotation")
        if self.noise_force < 0 or self.noise_torque < 0:
            raise ConfigurationError("sensor noise must be >= 0")
        if not (self.range_force > 0 and self.range_torque > 0):
            raise ConfigurationError("sensor ranges must be > 0")

    @property
    def ranges(self):
        return np.array([self.range_force] * 3 + [self.range_torque] * 3)


@dataclass
class SensorReading:
    wrench: Wrench  # what the sensor reports
    saturated: np.ndarray  # per-channel clamp flags
    physical: np.ndarray  # cuff-frame wrench acting on the exoskeleton


def rotation_error(R_ref, R):
    """Small-angle rotation from ``R`` to ``R_ref`` expressed in ``R``'s frame."""
    E = R.T @ R_ref
    return 0.5 * np.array([E[2, 1] - E[1, 2], E[0, 2] - E[2, 0], E[1, 0] - E[0, 1]])


def spring_damper(human_frame, human_twist, exo_frame, exo_twist, iface):
    """Cuff-frame wrench from pose and twist errors (human minus exo)."""
    p_h, R_h = human_frame
    p_e, R_e = exo_frame
    v_h, w_h = human_twist
    v_e, w_e = exo_twist
    err = np.concatenate([R_e.T @ (np.asarray(p_h) - p_e), rotation_error(R_h, R_e)])
    derr = np.concatenate([R_e.T @ (np.asarray(v_h) - v_e), R_e.T @ (np.asarray(w_h) - w_e)])
    return iface.stiffness * err + iface.damping * derr


def sensor_view(physical, iface):
    """Map a cuff-frame wrench onto the sensor's origin and axes."""
    f, t = physical[:3], physical[3:]
    t = t - np.cross(iface.mount_offset, f)
    Rm = iface.mount_rotation
    return np.concatenate([Rm.T @ f, Rm.T @ t])


def measure(physical, iface, rng=None):
    """Sensor reading of a physical cuff wrench: mounting, noise, range clamp."""
    w = sensor_view(physical, iface)
    if rng is not None:
        w = w + np.concatenate(
            [rng.normal(0.0, iface.noise_force, 3), rng.normal(0.0, iface.noise_torque, 3)]
        )
    ranges = iface.ranges
    saturated = np.abs(w) > ranges
    return SensorReading(Wrench.from_array(np.clip(w, -ranges, ranges)), saturated, np.array(physical))


def binding_wrench(human_frame, human_twist, exo_frame, exo_twist, iface, rng=None):
    """Sensor reading for one cuff given both frames and twists.

    Frames are ``(position, rotation)`` and twists ``(linear, angular)``
    velocities, all in base coordinates. Pass ``rng=None`` for noise-free
    readings.
    """
    physical = spring_damper(human_frame, human_twist, exo_frame, exo_twist, iface)
    return measure(physical, iface, rng)
