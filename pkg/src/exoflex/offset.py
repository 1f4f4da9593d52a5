"""Coupled donning-offset model for two planar two-link arms.

A human arm and an exoskeleton arm with slightly different segment lengths
hold the same endpoint. Their joint angles differ, which twists the upper-arm
(UA) and forearm (FA) cuffs; the cuffs act as torsional spring-dampers.
"""

from dataclasses import dataclass

import numpy as np

from .chain import PlanarTwoLink, planar_jacobian_inverse
from .errors import ConfigurationError, DomainError, SingularConfigurationError
from .validation import check_positive, check_vector

REACH_TOL = 1e-9


@dataclass(frozen=True)
class OffsetGeometry:
    human: PlanarTwoLink
    exo: PlanarTwoLink

    def __post_init__(self):
        reach_h = self.human.l1 + self.human.l2
        reach_e = self.exo.l1 + self.exo.l2
        if abs(reach_h - reach_e) >= min(reach_h, reach_e):
            raise ConfigurationError("human and exoskeleton workspaces do not overlap")

    def swapped(self):
        return OffsetGeometry(self.exo, self.human)


@dataclass(frozen=True)
class BindingImpedance:
    K_UA: float = 300.0
    D_UA: float = 5.0
    K_FA: float = 300.0
    D_FA: float = 5.0

    def __post_init__(self):
        check_positive([self.K_UA, self.D_UA, self.K_FA, self.D_FA], "binding impedance", strict=False)


@dataclass
class OffsetState:
    theta_H1: float
    theta_H2: float
    theta_E1: float
    theta_E2: float
    theta_err_UA: float
    theta_err_FA: float
    thetad_err_UA: float = 0.0
    thetad_err_FA: float = 0.0


def solve_planar_angles(geom, endpoint, branch="elbow-down"):
    """Analytic inverse kinematics of a planar two-link arm.

    ``elbow-down`` returns ``theta2 >= 0``; ``elbow-up`` returns ``theta2 <= 0``.
    """
    x, y = check_vector(endpoint, 2, "endpoint")
    if branch not in ("elbow-down", "elbow-up"):
        raise DomainError(f"unknown branch {branch!r}")
    l1, l2 = geom.l1, geom.l2
    r = np.hypot(x, y)
    r_max = l1 + l2
    r_min = abs(l1 - l2)
    if r > r_max + REACH_TOL:
        raise DomainError(f"endpoint distance {r:.6g} m exceeds reach l1+l2 = {r_max:.6g} m")
    if r < r_min - REACH_TOL or r == 0.0:
        raise DomainError(f"endpoint distance {r:.6g} m is below |l1-l2| = {r_min:.6g} m")
    c2 = np.clip((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0)
    theta2 = np.arccos(c2)
    if branch == "elbow-up":
        theta2 = -theta2
    theta1 = np.arctan2(y, x) - np.arctan2(l2 * np.sin(theta2), l1 + l2 * np.cos(theta2))
    return float(theta1), float(theta2)


def _solve_both(geom, endpoint, branch):
    try:
        h = solve_planar_angles(geom.human, endpoint, branch)
    except DomainError as exc:
        raise DomainError(f"human chain: {exc}") from exc
    try:
        e = solve_planar_angles(geom.exo, endpoint, branch)
    except DomainError as exc:
        raise DomainError(f"exoskeleton chain: {exc}") from exc
    return h, e


def offset_angles(geom, endpoint, branch="elbow-down"):
    (h1, h2), (e1, e2) = _solve_both(geom, endpoint, branch)
    return OffsetState(
        theta_H1=h1,
        theta_H2=h2,
        theta_E1=e1,
        theta_E2=e2,
        theta_err_UA=e1 - h1,
        theta_err_FA=(e1 + e2) - (h1 + h2),
    )


def offset_rates(geom, endpoint, endpoint_velocity, branch="elbow-down", form="cleaned"):
    """Rates of the UA and FA offset angles.

    ``form="cleaned"`` differentiates the offset angles exactly: each chain's
    joint rates come from its inverse Jacobian applied to the endpoint
    velocity, and the UA rate error feeds the cumulative FA rate.
    ``form="raw"`` applies the inverse-Jacobian difference to the endpoint
    *position* instead of its velocity, plus the UA rate term. It is kept for
    comparison only.
    """
    v = check_vector(endpoint_velocity, 2, "endpoint_velocity")
    p = check_vector(endpoint, 2, "endpoint")
    (h1, h2), (e1, e2) = _solve_both(geom, p, branch)
    try:
        inv_h = planar_jacobian_inverse(geom.human, h1, h2)
    except SingularConfigurationError as exc:
        raise SingularConfigurationError(f"human chain: {exc}") from exc
    try:
        inv_e = planar_jacobian_inverse(geom.exo, e1, e2)
    except SingularConfigurationError as exc:
        raise SingularConfigurationError(f"exoskeleton chain: {exc}") from exc
    diff = inv_e - inv_h
    if form == "cleaned":
        rate_ua = diff[0] @ v
        rate_fa = diff[1] @ v + rate_ua
    elif form == "raw":
        rate_ua = diff[0] @ p
        rate_fa = diff[1] @ p + rate_ua
    else:
        raise DomainError(f"unknown form {form!r}")
    return float(rate_ua), float(rate_fa)


def offset_state(geom, endpoint, endpoint_velocity, branch="elbow-down"):
    state = offset_angles(geom, endpoint, branch)
    state.thetad_err_UA, state.thetad_err_FA = offset_rates(geom, endpoint, endpoint_velocity, branch)
    return state


def disturbance_torques(state, imp):
    """Torsional spring-damper torques at the UA and FA cuffs (N m)."""
    t_ua = imp.K_UA * state.theta_err_UA + imp.D_UA * state.thetad_err_UA
    t_fa = imp.K_FA * state.theta_err_FA + imp.D_FA * state.thetad_err_FA
    return t_ua, t_fa
