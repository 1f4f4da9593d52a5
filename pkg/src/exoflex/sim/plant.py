"""Rigid-body exoskeleton plant coupled to the human through the cuffs."""

from dataclasses import dataclass, field

import numpy as np

from ..chain import BINDINGS, N_JOINTS, forward_kinematics
from ..dynamics import GRAVITY, FrictionParams, crba, potential_energy, stack_inertials
from ..errors import ConfigurationError, SimulationAbort
from ..validation import check_vector
from . import _kernels


def default_armature():
    """Reflected actuator inertia per joint (kg m^2), larger at the shoulder."""
    return np.array([0.05, 0.05, 0.05, 0.05, 0.03, 0.03, 0.01, 0.01, 0.01])


def chain_arrays(model):
    arr = model._arrays
    parents = np.array([model.binding_points[b].parent - 1 for b in BINDINGS], dtype=np.int64)
    off_R = np.array([model.binding_points[b].offset[:3, :3] for b in BINDINGS])
    off_p = np.array([model.binding_points[b].offset[:3, 3] for b in BINDINGS])
    return arr["axes"], arr["origin_R"], arr["origin_p"], parents, off_R, off_p


@dataclass
class PlantParams:
    model: object
    inertials: object
    friction: FrictionParams = field(default_factory=FrictionParams)
    armature: np.ndarray = field(default_factory=default_armature)
    gravity: np.ndarray = field(default_factory=lambda: GRAVITY.copy())
    free: np.ndarray = field(default_factory=lambda: np.ones(N_JOINTS, dtype=bool))

    def __post_init__(self):
        self.inertials = stack_inertials(self.inertials)
        self.armature = check_vector(
            np.broadcast_to(np.asarray(self.armature, dtype=float), (N_JOINTS,)), N_JOINTS, "armature"
        )
        if np.any(self.armature < 0):
            raise ConfigurationError("armature inertia must be >= 0")
        self.gravity = check_vector(self.gravity, 3, "gravity")
        self.free = np.asarray(self.free, dtype=bool)
        if self.free.shape != (N_JOINTS,):
            raise ConfigurationError("free mask must have 9 entries")


@dataclass
class Coupling:
    """Human cuff frames at the start and midpoint of a step plus cuff impedances.

    Frame arrays are stacked over the bindings UA, FA, HA.
    """

    p0: np.ndarray
    R0: np.ndarray
    v0: np.ndarray
    w0: np.ndarray
    p1: np.ndarray
    R1: np.ndarray
    v1: np.ndarray
    w1: np.ndarray
    stiffness: np.ndarray  # (3, 6)
    damping: np.ndarray  # (3, 6)
    cap_force: np.ndarray  # (3,)
    cap_torque: np.ndarray  # (3,)

    @classmethod
    def detached(cls):
        z3 = np.zeros((3, 3))
        eye = np.array([np.eye(3)] * 3)
        z6 = np.zeros((3, 6))
        big = np.full(3, np.inf)
        return cls(z3, eye, z3, z3, z3, eye, z3, z3, z6, z6, big, big)


@dataclass
class PlantState:
    q: np.ndarray
    qd: np.ndarray
    t: float = 0.0
    steps: int = 0
    human_q: np.ndarray = None
    seed: int = None
    rng: object = None  # numpy Generator; its state is the stream position

    def __post_init__(self):
        self.q = check_vector(self.q, N_JOINTS, "q")
        self.qd = check_vector(self.qd, N_JOINTS, "qd")


@dataclass
class StepInfo:
    cuff_wrenches: np.ndarray  # (3, 6) cuff-frame wrenches on the exo at the midpoint
    tau_interaction: np.ndarray
    friction: np.ndarray  # friction torque applied over the step


class Plant:
    """Prepared kernel arguments for repeated stepping of one model."""

    def __init__(self, params):
        self.params = params
        self._chain = chain_arrays(params.model)
        st = params.inertials
        fr = params.friction
        self._inertial = (st.mass, st.com, st.inertia, params.armature, params.gravity)
        self._friction = (fr.f_c, fr.f_s, fr.v_s, fr.a, fr.v_eps)
        self._limits = (params.model.lower_limits, params.model.upper_limits)

    def step(self, q, qd, tau, dt, coupling):
        c = coupling
        q_new, qd_new, wrenches, tau_int, fric = _kernels.substep(
            q, qd, np.asarray(tau, dtype=float), dt, *self._chain, *self._inertial, *self._friction,
            self.params.free, *self._limits,
            c.p0, c.R0, c.v0, c.w0, c.p1, c.R1, c.v1, c.w1,
            c.stiffness, c.damping, c.cap_force, c.cap_torque,
        )
        return q_new, qd_new, StepInfo(wrenches, tau_int, fric)

    def interaction(self, q, qd, p, R, v, w, coupling):
        wrenches, tau, *_ = _kernels.interaction(
            q, qd, *self._chain, p, R, v, w,
            coupling.stiffness, coupling.damping, coupling.cap_force, coupling.cap_torque,
        )
        return wrenches, tau


def plant_step(state, tau_cmd, params, dt_sub, coupling=None, plant=None):
    """Advance the plant by one substep under a held actuator torque.

    Returns a new :class:`PlantState`. Raises :class:`SimulationAbort` when
    the state stops being finite.
    """
    if not dt_sub > 0:
        raise ConfigurationError("dt_sub must be positive")
    plant = plant or Plant(params)
    coupling = coupling or Coupling.detached()
    tau_cmd = np.asarray(tau_cmd, dtype=float)
    if not np.all(np.isfinite(tau_cmd)):
        raise SimulationAbort("non-finite actuator torque", tick=state.steps, quantity="tau_cmd")
    q, qd, _ = plant.step(state.q, state.qd, tau_cmd, dt_sub, coupling)
    for name, val in (("q", q), ("qd", qd)):
        if not np.all(np.isfinite(val)):
            raise SimulationAbort(f"non-finite {name}", tick=state.steps, quantity=name)
    return PlantState(q, qd, state.t + dt_sub, state.steps + 1, state.human_q, state.seed, state.rng)


def mechanical_energy(params, q, qd):
    """Kinetic (including actuator armature) plus gravitational energy."""
    kin = forward_kinematics(params.model, q)
    M = crba(kin, params.inertials) + np.diag(params.armature)
    return 0.5 * qd @ M @ qd + potential_energy(params.model, params.inertials, q, params.gravity)
