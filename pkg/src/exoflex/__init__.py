"""Transparency control for a 9-DoF upper-limb exoskeleton.

Force/torque readings at three cuffs are split into major, assistant,
coordination and redundant parts; binding alignment reshapes the major and
assistant parts, and the coordination stage spreads target-oriented forces
over the whole arm. A desk-scale simulator closes the loop.
"""

from .bas import BASConfig, apply_bas, bas_gains, bas_torques
from .chain import BINDINGS, LABELS, N_JOINTS, ChainModel, default_chain, forward_kinematics, jacobian
from .classify import LowPassFilter, Wrench, classify, lowpass_step
from .controller import ControllerConfig, ControllerMode, ExoController, control_step
from .dynamics import FrictionParams, default_inertials, feedforward, friction_compensation, inverse_dynamics
from .errors import ConfigurationError, DomainError, ExoflexError, SimulationAbort
from .fcm import FCMConfig, IntentMode, coordination_gain, intention_distinction

__version__ = "0.1.0"

__all__ = [
    "BASConfig",
    "BINDINGS",
    "ChainModel",
    "ConfigurationError",
    "ControllerConfig",
    "ControllerMode",
    "DomainError",
    "ExoController",
    "ExoflexError",
    "FCMConfig",
    "FrictionParams",
    "IntentMode",
    "LABELS",
    "LowPassFilter",
    "N_JOINTS",
    "SimulationAbort",
    "Wrench",
    "apply_bas",
    "bas_gains",
    "bas_torques",
    "classify",
    "control_step",
    "coordination_gain",
    "default_chain",
    "default_inertials",
    "feedforward",
    "forward_kinematics",
    "friction_compensation",
    "intention_distinction",
    "inverse_dynamics",
    "jacobian",
    "lowpass_step",
]
