"""JSON scenario documents: schema, validation and conversion to ScenarioConfig.

A document looks like::

    {"schema": 1, "name": "square", "mode": "bas-fcm", "seed": 7,
     "intent": {"type": "square", "lap_time": 20.0}}

Every block rejects unknown keys. Errors carry the dotted path of the first
offending key.
"""

import json
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .bas import BASConfig
from .chain import BINDINGS, LABELS, N_JOINTS
from .controller import ControllerConfig, ControllerMode
from .dynamics import FrictionParams
from .errors import ConfigurationError, DomainError
from .fcm import FCMConfig
from .sim.human import JointIntent, PlanarReachIntent
from .sim.interface import BindingInterface
from .sim.library import MOVEMENTS, hold, square_track, sweep_movement
from .sim.scenario import ScenarioConfig

ALL_MODES = tuple(m.value for m in ControllerMode)
METRICS_WARMUP = 0.5

Scalar9 = Union[float, List[float]]
Posture = Union[List[float], Dict[str, float]]
Vector6 = Annotated[List[Annotated[float, Field(ge=0)]], Field(min_length=6, max_length=6)]


class ScenarioFileError(ConfigurationError):
    """Invalid scenario document; ``path`` names the offending key."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ArmGeometry(_Block):
    upper_arm: float = Field(0.318, gt=0)
    forearm: float = Field(0.261, gt=0)
    hand: float = Field(0.08, gt=0)


class HumanGeometry(_Block):
    upper_arm: float = Field(0.332, gt=0)
    forearm: float = Field(0.273, gt=0)
    hand: float = Field(0.08, gt=0)
    shoulder_offset: Tuple[float, float, float] = (0.0, 0.0, 0.0)


class BASBlock(_Block):
    f_max: Optional[Dict[str, Dict[str, float]]] = None


class FCMBlock(_Block):
    thresholds: Optional[Dict[str, List[float]]] = None
    normalizers: Optional[Dict[str, float]] = None
    lambda_e: float = Field(2.0, gt=0)
    lambda_w: float = Field(2.0, gt=0)
    hysteresis: float = Field(0.1, ge=0)


class ControllerBlock(_Block):
    dt: float = Field(1.0 / 80.0, gt=0)
    cutoff: float = Field(10.0, gt=0)
    torque_limits: Optional[Scalar9] = None
    rc_attenuation: float = Field(0.0, ge=0, le=1)
    bas: BASBlock = BASBlock()
    fcm: FCMBlock = FCMBlock()


class FrictionBlock(_Block):
    f_c: Scalar9 = 0.5
    f_s: Scalar9 = 1.0
    v_s: Scalar9 = 0.05
    a: Scalar9 = 0.01
    v_eps: Scalar9 = 1e-4


class PlantBlock(_Block):
    mass_scale: float = Field(1.05, gt=0)
    friction_scale: float = Field(1.2, ge=0)
    armature: Optional[Scalar9] = None
    substeps: int = Field(10, ge=1)


class InterfaceBlock(_Block):
    stiffness: Optional[Vector6] = None
    damping: Optional[Vector6] = None
    mount_offset: Optional[Tuple[float, float, float]] = None
    mount_rotation: Optional[List[List[float]]] = None
    noise_force: float = Field(0.1, ge=0)
    noise_torque: float = Field(0.01, ge=0)
    range_force: float = Field(50.0, gt=0)
    range_torque: float = Field(5.0, gt=0)


class HoldBlock(_Block):
    type: Literal["hold"]
    posture: Optional[Posture] = None


class JointBlock(_Block):
    type: Literal["joint"]
    joints: List[str]
    speed: float = Field(gt=0)
    amplitude: float = Field(0.8, gt=0)
    signs: Optional[List[float]] = None
    profile: Literal["sinusoid", "trapezoid"] = "sinusoid"
    posture: Optional[Posture] = None
    delay: float = Field(0.0, ge=0)
    force_cap: float = Field(80.0, gt=0)
    torque_cap: float = Field(8.0, gt=0)


class SquareBlock(_Block):
    type: Literal["square"]
    lap_time: float = Field(20.0, gt=0)
    laps: int = Field(1, ge=1)


class ReachBlock(_Block):
    type: Literal["reach"]
    start: Tuple[float, float] = (0.25, -0.35)
    end: Tuple[float, float] = (0.52, 0.05)
    move_time: float = Field(0.5, gt=0)


class MovementBlock(_Block):
    type: Literal["movement"]
    movement: Literal[tuple(MOVEMENTS)]
    speed: float = Field(gt=0)
    amplitude: float = Field(0.6, gt=0)


Intent = Annotated[
    Union[HoldBlock, JointBlock, SquareBlock, ReachBlock, MovementBlock], Field(discriminator="type")
]


class ScenarioDocument(_Block):
    schema_: Literal[1] = Field(alias="schema")
    name: str = "scenario"
    mode: Union[str, List[str]] = "bas-fcm"
    seed: int = 0
    duration: Optional[float] = Field(None, gt=0)
    intent: Intent = HoldBlock(type="hold")
    exo_geometry: ArmGeometry = ArmGeometry()
    human_geometry: HumanGeometry = HumanGeometry()
    controller: ControllerBlock = ControllerBlock()
    friction: FrictionBlock = FrictionBlock()
    plant: PlantBlock = PlantBlock()
    inertial_scale: float = Field(1.0, gt=0)
    interfaces: Dict[Literal["UA", "FA", "HA"], InterfaceBlock] = {}
    initial_posture: Optional[Posture] = None
    output_dir: Optional[str] = None


def _first_error(err):
    e = err.errors()[0]
    loc = [str(p) for p in e["loc"]]
    # tagged-union members show up as an extra path element named after the tag
    if len(loc) >= 2 and loc[0] == "intent" and loc[1] in ("hold", "joint", "square", "reach", "movement"):
        loc = [loc[0]] + loc[2:]
    return ".".join(loc), e["msg"]


def parse_document(data):
    """Validate a mapping against the schema; raises :class:`ScenarioFileError`."""
    if not isinstance(data, dict):
        raise ScenarioFileError("", "scenario document must be a JSON object")
    if "schema" not in data:
        raise ScenarioFileError("schema", "missing schema version (expected 1)")
    try:
        return ScenarioDocument.model_validate(data)
    except ValidationError as err:
        path, msg = _first_error(err)
        raise ScenarioFileError(path, msg) from None


def read_document(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioFileError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFileError("", f"{path} is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    return parse_document(data)


def _posture(value, path):
    if value is None:
        return None
    if isinstance(value, dict):
        q = np.zeros(N_JOINTS)
        for label, angle in value.items():
            if label not in LABELS:
                raise ScenarioFileError(f"{path}.{label}", f"unknown joint; expected one of {list(LABELS)}")
            q[LABELS.index(label)] = angle
        return q
    if len(value) != N_JOINTS:
        raise ScenarioFileError(path, f"expected {N_JOINTS} joint angles, got {len(value)}")
    return np.asarray(value, dtype=float)


def _vector9(value, path):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1 and arr.size != N_JOINTS:
        raise ScenarioFileError(path, f"expected a scalar or {N_JOINTS} values, got {arr.size}")
    return np.broadcast_to(arr, (N_JOINTS,)).copy()


def parse_modes(mode):
    """Mode field or flag -> tuple of ControllerMode; ``all`` expands to every mode."""
    items = mode.split(",") if isinstance(mode, str) else list(mode)
    items = [m.strip() if isinstance(m, str) else m for m in items]
    if any(str(m).lower() == "all" for m in items):
        return tuple(ControllerMode)
    return tuple(ControllerMode.parse(m) for m in items)


def _guarded(path, build):
    try:
        return build()
    except ScenarioFileError:
        raise
    except (ConfigurationError, DomainError, ValueError) as exc:
        raise ScenarioFileError(path, str(exc)) from None


def _controller(block):
    bas = _guarded("controller.bas", lambda: BASConfig(**({"f_max": block.bas.f_max} if block.bas.f_max else {})))
    f = block.fcm
    fcm_kw = dict(lambda_e=f.lambda_e, lambda_w=f.lambda_w, hysteresis=f.hysteresis)
    if f.thresholds is not None:
        fcm_kw["thresholds"] = f.thresholds
    if f.normalizers is not None:
        fcm_kw["normalizers"] = f.normalizers
    fcm = _guarded("controller.fcm", lambda: FCMConfig(**fcm_kw))
    kw = dict(bas=bas, fcm=fcm, dt=block.dt, cutoff=block.cutoff, rc_attenuation=block.rc_attenuation)
    if block.torque_limits is not None:
        kw["torque_limits"] = _vector9(block.torque_limits, "controller.torque_limits")
    return _guarded("controller", lambda: ControllerConfig(**kw))


def _interfaces(blocks):
    out = {}
    for b in BINDINGS:
        blk = blocks.get(b)
        if blk is None:
            out[b] = BindingInterface()
            continue
        kw = blk.model_dump(exclude_none=True)
        out[b] = _guarded(f"interfaces.{b}", lambda kw=kw: BindingInterface(**kw))
    return out


def _joint_intent(it):
    return JointIntent(
        joints=tuple(it.joints),
        speed=it.speed,
        amplitude=it.amplitude,
        signs=None if it.signs is None else tuple(it.signs),
        profile=it.profile,
        posture=np.zeros(N_JOINTS) if it.posture is None else _posture(it.posture, "intent.posture"),
        delay=it.delay,
        force_cap=it.force_cap,
        torque_cap=it.torque_cap,
    )


def build_config(doc, mode=None, seed=None):
    """ScenarioConfig for a validated document; ``mode``/``seed`` override the file."""
    modes = _guarded("mode", lambda: parse_modes(mode if mode is not None else doc.mode))
    seed = doc.seed if seed is None else int(seed)
    fr = doc.friction
    friction = _guarded(
        "friction",
        lambda: FrictionParams(
            *(_vector9(getattr(fr, k), f"friction.{k}") for k in ("f_c", "f_s", "v_s", "a", "v_eps"))
        ),
    )
    common = dict(
        mode=modes[0],
        seed=seed,
        exo_geometry=doc.exo_geometry.model_dump(),
        human_geometry=doc.human_geometry.model_dump(),
        controller=_controller(doc.controller),
        friction=friction,
        inertial_scale=doc.inertial_scale,
        plant_mass_scale=doc.plant.mass_scale,
        plant_friction_scale=doc.plant.friction_scale,
        substeps=doc.plant.substeps,
        interfaces=_interfaces(doc.interfaces),
    )
    if doc.plant.armature is not None:
        common["armature"] = _vector9(doc.plant.armature, "plant.armature")
    if doc.initial_posture is not None:
        common["initial_posture"] = _posture(doc.initial_posture, "initial_posture")
    if doc.duration is not None:
        common["duration"] = doc.duration

    it = doc.intent
    if it.type == "hold":
        build = lambda: hold(posture=_posture(it.posture, "intent.posture"), **common)  # noqa: E731
    elif it.type == "square":
        build = lambda: square_track(lap_time=it.lap_time, laps=it.laps, **common)  # noqa: E731
    elif it.type == "reach":
        intent = _guarded("intent", lambda: PlanarReachIntent(start=it.start, end=it.end, move_time=it.move_time))
        common.setdefault("duration", 2.0)
        build = lambda: ScenarioConfig(intent=intent, **common)  # noqa: E731
    elif it.type == "movement":
        build = lambda: sweep_movement(it.movement, it.speed, amplitude=it.amplitude, **common)  # noqa: E731
    else:
        intent = _guarded("intent", lambda: _joint_intent(it))
        common.setdefault("duration", it.delay + intent.period)
        build = lambda: ScenarioConfig(intent=intent, **common)  # noqa: E731
    cfg = _guarded("intent", build)
    if cfg.duration <= METRICS_WARMUP:
        # metrics skip the warm-up, so a shorter run has nothing to report
        raise ScenarioFileError("duration", f"must exceed the {METRICS_WARMUP:g} s metrics warm-up, got {cfg.duration:g}")
    cfg.name = doc.name
    return cfg, modes


def load_scenario(path, mode=None, seed=None):
    """Read, validate and convert a scenario file; returns ``(config, modes, document)``."""
    doc = read_document(path)
    cfg, modes = build_config(doc, mode=mode, seed=seed)
    return cfg, modes, doc


__all__ = [
    "ALL_MODES",
    "ScenarioDocument",
    "ScenarioFileError",
    "build_config",
    "load_scenario",
    "parse_document",
    "parse_modes",
    "read_document",
]
