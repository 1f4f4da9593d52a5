"""Built-in scenarios: square track, sagittal reach, single/compound sweep movements."""

from dataclasses import dataclass

import numpy as np

from ..chain import LABELS, N_JOINTS, forward_kinematics, jacobian_from_kinematics
from ..errors import ConfigurationError, DomainError
from .human import (
    SPEED_GRID,
    HoldIntent,
    JointIntent,
    PlanarReachIntent,
    TargetIntent,
    human_chain,
    rounded_square,
)
from .scenario import ScenarioConfig


def _posture(**angles):
    q = np.zeros(N_JOINTS)
    for label, value in angles.items():
        q[LABELS.index(label)] = value
    return q


def reach_posture(human, target, guess, iters=200, damping=1e-4):
    """Joint angles placing the hand point at ``target`` (position only)."""
    q = np.array(guess, dtype=float)
    active = np.arange(2, N_JOINTS)
    for _ in range(iters):
        kin = forward_kinematics(human, q)
        p = kin.points["HA"][0]
        err = np.asarray(target, dtype=float) - p
        if np.linalg.norm(err) < 1e-12:
            break
        J = jacobian_from_kinematics(kin, 0, N_JOINTS - 1, p)[:3][:, active]
        q[active] += J.T @ np.linalg.solve(J @ J.T + damping * np.eye(3), err)
    if np.linalg.norm(err) > 1e-8:
        raise DomainError(f"target {target} is out of reach")
    return q


# square on a vertical board in front of the right shoulder (base frame: x forward, y left, z up)
SQUARE_CENTER = (0.36, -0.20, -0.12)
SQUARE_SIDE = 0.40
SQUARE_RADIUS = 0.10
SQUARE_GUESS = _posture(SH1=0.5, EL2=1.2)


def square_track(mode="bas-fcm", seed=0, lap_time=20.0, laps=1, **overrides):
    """The hand slides a handle once around a 40 cm rounded square."""
    geom = overrides.pop("human_geometry", None)
    human = human_chain(**geom) if geom else human_chain()
    path = rounded_square(SQUARE_CENTER, SQUARE_SIDE, SQUARE_RADIUS, u=(0.0, -1.0, 0.0), v=(0.0, 0.0, 1.0))
    q0 = reach_posture(human, path[0], SQUARE_GUESS)
    intent = TargetIntent(path, lap_time=lap_time, laps=laps, posture=q0, hold_orientation=False)
    kwargs = dict(name="square-track", mode=mode, intent=intent, duration=lap_time * laps, seed=seed)
    if geom:
        kwargs["human_geometry"] = geom
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)


def sagittal_reach(mode="ff", seed=0, duration=2.0, move_time=0.5, **overrides):
    """Repeated whole-arm forward extension in the sagittal plane."""
    intent = PlanarReachIntent(move_time=move_time)
    kwargs = dict(name="sagittal-reach", mode=mode, intent=intent, duration=duration, seed=seed)
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)


def hold(mode="bas-fcm", seed=0, duration=2.0, posture=None, **overrides):
    """The human keeps still."""
    intent = HoldIntent(np.zeros(N_JOINTS) if posture is None else posture)
    kwargs = dict(name="hold", mode=mode, intent=intent, duration=duration, seed=seed)
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)


@dataclass(frozen=True)
class Movement:
    """A sweep movement: which joints move and which AC channels it loads."""

    name: str
    joints: tuple
    signs: tuple
    ac_channels: tuple  # (binding, channel) pairs whose magnitudes are summed
    posture: tuple

    @property
    def compound(self):
        return len(self.ac_channels) > 1


MOVEMENTS = {
    "el-flex": Movement("el-flex", ("EL2",), (1.0,), (("FA", "Tz"),), tuple(_posture(EL2=0.3))),
    "sh-flex": Movement("sh-flex", ("SH1",), (1.0,), (("UA", "Tz"),), tuple(_posture(EL2=0.3))),
    "sh-rot": Movement(
        "sh-rot", ("EL1",), (1.0,), (("FA", "Ty"),), tuple(_posture(EL1=-0.3, EL2=np.pi / 2))
    ),
    "sh-abd": Movement("sh-abd", ("SH2",), (1.0,), (("UA", "Ty"),), tuple(_posture(SH2=0.1, EL2=0.3))),
    "lift": Movement(
        "lift", ("SH1", "EL2"), (1.0, 1.0), (("FA", "Tz"), ("UA", "Tz")), tuple(_posture(EL2=0.3))
    ),
    "swing": Movement(
        "swing",
        ("SH2", "EL1"),
        (1.0, 1.0),
        (("FA", "Ty"), ("UA", "Ty")),
        tuple(_posture(SH2=0.1, EL1=-0.3, EL2=np.pi / 2)),
    ),
}

# single-joint movements whose channels make up each compound
COMPOUND_PARTS = {"lift": ("el-flex", "sh-flex"), "swing": ("sh-rot", "sh-abd")}

SWEEP_AMPLITUDE = 0.6
SWEEP_LEAD_IN = 0.5


def sweep_movement(name, speed, mode="ff", seed=0, amplitude=SWEEP_AMPLITUDE, **overrides):
    """One forth-and-back cycle of a sweep movement at peak joint speed ``speed``."""
    if name not in MOVEMENTS:
        raise ConfigurationError(f"unknown movement {name!r}; expected one of {sorted(MOVEMENTS)}")
    mv = MOVEMENTS[name]
    intent = JointIntent(
        joints=mv.joints,
        speed=speed,
        amplitude=amplitude,
        signs=mv.signs,
        posture=np.array(mv.posture),
        delay=SWEEP_LEAD_IN,
    )
    duration = SWEEP_LEAD_IN + intent.period
    kwargs = dict(name=f"{name}@{speed:g}", mode=mode, intent=intent, duration=duration, seed=seed)
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)


__all__ = [
    "MOVEMENTS",
    "COMPOUND_PARTS",
    "SPEED_GRID",
    "Movement",
    "hold",
    "reach_posture",
    "sagittal_reach",
    "square_track",
    "sweep_movement",
]
