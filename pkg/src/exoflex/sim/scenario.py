"""Closed-loop scenario: scripted human, cuffs, controller at 80 Hz, plant at 800 Hz."""

from dataclasses import dataclass, field

import numpy as np

from ..chain import BINDINGS, N_JOINTS, default_chain, forward_kinematics
from ..controller import ControllerConfig, ControllerMode, ExoController
from ..dynamics import FrictionParams, default_inertials
from ..errors import ConfigurationError, SimulationAbort
from . import _kernels
from .human import HoldIntent, attachments, human_chain, sample_trajectory
from .interface import BindingInterface, measure
from .plant import Coupling, Plant, PlantParams, default_armature, mechanical_energy


@dataclass
class ScenarioConfig:
    """Everything needed to run one deterministic closed-loop scenario."""

    name: str = "scenario"
    mode: object = ControllerMode.BAS_FCM
    intent: object = field(default_factory=lambda: HoldIntent())
    duration: float = 2.0
    seed: int = 0
    exo_geometry: dict = field(default_factory=lambda: {"upper_arm": 0.318, "forearm": 0.261, "hand": 0.08})
    human_geometry: dict = field(
        default_factory=lambda: {
            "upper_arm": 0.332,
            "forearm": 0.273,
            "hand": 0.08,
            "shoulder_offset": (0.0, 0.0, 0.0),
        }
    )
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    friction: FrictionParams = field(default_factory=FrictionParams)
    inertial_scale: float = 1.0  # controller's link masses relative to the nominal set
    plant_mass_scale: float = 1.05
    plant_friction_scale: float = 1.2
    armature: np.ndarray = field(default_factory=default_armature)
    interfaces: dict = field(default_factory=lambda: {b: BindingInterface() for b in BINDINGS})
    substeps: int = 10
    initial_posture: np.ndarray = None  # exo start; defaults to the human start

    def __post_init__(self):
        self.mode = ControllerMode.parse(self.mode)
        if not self.duration > 0:
            raise ConfigurationError("duration must be > 0")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ConfigurationError("substeps must be a positive integer")
        if set(self.interfaces) != set(BINDINGS):
            raise ConfigurationError("interfaces must be given for UA, FA and HA")
        if not (self.plant_mass_scale > 0 and self.plant_friction_scale >= 0 and self.inertial_scale > 0):
            raise ConfigurationError("model scale factors must be positive")

    @property
    def dt(self):
        return self.controller.dt

    @property
    def n_ticks(self):
        return int(round(self.duration / self.dt))

    def exo_model(self):
        return default_chain(**self.exo_geometry)

    def human_model(self):
        return human_chain(**self.human_geometry)


@dataclass
class Trace:
    """Per-tick record of one run. Arrays are indexed by tick."""

    name: str
    mode: ControllerMode
    seed: int
    dt: float
    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    human_q: np.ndarray
    tau_cmd: np.ndarray
    tau_out: np.ndarray
    tau_com: np.ndarray
    tau_bas: np.ndarray
    tau_fcm: np.ndarray
    raw: np.ndarray  # (n, 3, 6) sensor readings
    filtered: np.ndarray  # (n, 3, 6)
    physical: np.ndarray  # (n, 3, 6) cuff wrench on the exo at the sample instant
    elbow_mode: np.ndarray  # 1 = target-oriented
    wrist_mode: np.ndarray
    k_e: np.ndarray
    k_w: np.ndarray
    bas_gains: np.ndarray  # (n, 3, 4): k_f(Fy), k_t(Fy), k_f(Fz), k_t(Fz)
    torque_saturated: np.ndarray  # (n, 9)
    sensor_saturated: np.ndarray  # (n, 3, 6)
    hand_position: np.ndarray  # (n, 3) exo hand cuff
    work_in: np.ndarray  # (n,) actuator + cuff work over the tick
    work_friction: np.ndarray  # (n,) friction work over the tick
    energy: np.ndarray  # (n,) mechanical energy at the tick start

    def __len__(self):
        return len(self.t)


def _empty_trace(cfg, n):
    z = lambda *shape: np.zeros((n,) + shape)  # noqa: E731
    return Trace(
        name=cfg.name,
        mode=cfg.mode,
        seed=cfg.seed,
        dt=cfg.dt,
        t=np.arange(n) * cfg.dt,
        q=z(N_JOINTS),
        qd=z(N_JOINTS),
        human_q=z(N_JOINTS),
        tau_cmd=z(N_JOINTS),
        tau_out=z(N_JOINTS),
        tau_com=z(N_JOINTS),
        tau_bas=z(N_JOINTS),
        tau_fcm=z(N_JOINTS),
        raw=z(3, 6),
        filtered=z(3, 6),
        physical=z(3, 6),
        elbow_mode=np.zeros(n, dtype=int),
        wrist_mode=np.zeros(n, dtype=int),
        k_e=z(),
        k_w=z(),
        bas_gains=z(3, 4),
        torque_saturated=np.zeros((n, N_JOINTS), dtype=bool),
        sensor_saturated=np.zeros((n, 3, 6), dtype=bool),
        hand_position=z(3),
        work_in=z(),
        work_friction=z(),
        energy=z(),
    )


class ScenarioRunner:
    """Builds the models and the human reference for a scenario, then runs it."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.exo = cfg.exo_model()
        self.human = cfg.human_model()
        self.plant_params = PlantParams(
            self.exo,
            default_inertials(self.exo, scale=cfg.plant_mass_scale),
            cfg.friction.scaled(cfg.plant_friction_scale),
            cfg.armature,
            cfg.controller.gravity,
        )
        self.plant = Plant(self.plant_params)
        self.dt_sub = cfg.dt / cfg.substeps
        n_half = 2 * cfg.n_ticks * cfg.substeps + 1
        grid = np.arange(n_half) * (0.5 * self.dt_sub)
        self.reference = sample_trajectory(cfg.intent, self.human, grid)
        q_h0 = self.reference.q[0]
        self.q0 = q_h0.copy() if cfg.initial_posture is None else np.asarray(cfg.initial_posture, dtype=float)
        att = attachments(self.human, q_h0, self.exo, self.q0)
        arr = self.human._arrays
        parents = np.array([att[b][0] for b in BINDINGS], dtype=np.int64)
        off_R = np.array([att[b][1][:3, :3] for b in BINDINGS])
        off_p = np.array([att[b][1][:3, 3] for b in BINDINGS])
        self.frames = _kernels.cuff_frames(
            arr["axes"], arr["origin_R"], arr["origin_p"], parents, off_R, off_p,
            self.reference.q, self.reference.qd,
        )
        ifs = [cfg.interfaces[b] for b in BINDINGS]
        self.stiffness = np.array([i.stiffness for i in ifs])
        self.damping = np.array([i.damping for i in ifs])
        cap_f = getattr(cfg.intent, "force_cap", np.inf)
        cap_t = getattr(cfg.intent, "torque_cap", np.inf)
        self.cap_force = np.full(3, float(cap_f))
        self.cap_torque = np.full(3, float(cap_t))

    def controller(self, mode=None):
        cfg = self.cfg
        inertials = default_inertials(self.exo, scale=cfg.inertial_scale)
        ctrl_cfg = cfg.controller
        return ExoController(mode or cfg.mode, self.exo, inertials, cfg.friction, ctrl_cfg).fit()

    def _coupling(self, i0, i1):
        P, R, V, W = self.frames
        return Coupling(
            P[i0], R[i0], V[i0], W[i0], P[i1], R[i1], V[i1], W[i1],
            self.stiffness, self.damping, self.cap_force, self.cap_torque,
        )

    def run(self, mode=None):
        cfg = self.cfg
        mode = ControllerMode.parse(mode or cfg.mode)
        rng = np.random.default_rng(cfg.seed)
        ctrl = self.controller(mode)
        n = cfg.n_ticks
        trace = _empty_trace(cfg, n)
        trace.mode = mode
        ifs = [cfg.interfaces[b] for b in BINDINGS]
        energy_of = _energy_function(self.plant_params)
        q = self.q0.copy()
        qd = np.zeros(N_JOINTS)
        P, R, V, W = self.frames
        subs = cfg.substeps
        for k in range(n):
            i = 2 * k * subs
            phys, _ = self.plant.interaction(q, qd, P[i], R[i], V[i], W[i], self._coupling(i, i))
            readings = [measure(phys[b], ifs[b], rng) for b in range(3)]
            out = ctrl.step(q, {b: readings[j].wrench for j, b in enumerate(BINDINGS)})
            _record(trace, k, q, qd, self.reference.q[i], out, readings, phys)
            trace.energy[k] = energy_of(q, qd)
            trace.hand_position[k] = _hand(self.plant_params.model, q)
            if not np.all(np.isfinite(out.tau_out)):
                raise SimulationAbort(f"non-finite actuator torque at tick {k}", tick=k, quantity="tau_cmd")
            w_in = 0.0
            w_fr = 0.0
            for s in range(subs):
                j = i + 2 * s
                try:
                    q_new, qd_new, info = self.plant.step(
                        q, qd, out.tau_out, self.dt_sub, self._coupling(j, j + 1)
                    )
                except np.linalg.LinAlgError:
                    raise SimulationAbort(f"plant dynamics went non-finite at tick {k}", tick=k, quantity="q") from None
                for name, val in (("q", q_new), ("qd", qd_new)):
                    if not np.all(np.isfinite(val)):
                        raise SimulationAbort(f"non-finite {name} at tick {k}", tick=k, quantity=name)
                dq = q_new - q
                w_in += (out.tau_out + info.tau_interaction) @ dq
                w_fr += info.friction @ dq
                q, qd = q_new, qd_new
            trace.work_in[k] = w_in
            trace.work_friction[k] = w_fr
        self.final_state = (q, qd)
        return trace


def _energy_function(params):
    return lambda q, qd: mechanical_energy(params, q, qd)


def _hand(model, q):
    return forward_kinematics(model, q).points["HA"][0]


def _record(trace, k, q, qd, human_q, out, readings, phys):
    trace.q[k] = q
    trace.qd[k] = qd
    trace.human_q[k] = human_q
    trace.tau_cmd[k] = out.tau_cmd
    trace.tau_out[k] = out.tau_out
    trace.tau_com[k] = out.tau_com
    trace.tau_bas[k] = out.tau_bas
    trace.tau_fcm[k] = out.tau_fcm
    trace.torque_saturated[k] = out.saturated
    trace.elbow_mode[k] = int(out.elbow_mode.value == "target")
    trace.wrist_mode[k] = int(out.wrist_mode.value == "target")
    trace.k_e[k] = out.k_e
    trace.k_w[k] = out.k_w
    for j, b in enumerate(BINDINGS):
        trace.raw[k, j] = readings[j].wrench.as_array()
        trace.sensor_saturated[k, j] = readings[j].saturated
        trace.filtered[k, j] = out.filtered[b]
        trace.physical[k, j] = phys[j]
        g = out.bas_gains[b]
        trace.bas_gains[k, j] = [*g.get("Fy", (1.0, 0.0)), *g.get("Fz", (1.0, 0.0))]


def run_scenario(cfg, mode=None):
    """Run ``cfg`` (optionally overriding its mode) and return the :class:`Trace`."""
    return ScenarioRunner(cfg).run(mode)
