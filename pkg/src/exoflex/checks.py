"""Invariant suites behind ``exoflex check``.

Each suite returns ``(ok, detail)``. Suites look up the functions they test
through their modules at call time so a patched implementation is what gets
checked.
"""

import dataclasses

import numpy as np

from . import bas, chain, fcm
from .dynamics import FrictionParams, default_inertials
from .sim import plant as plant_mod
from .sim.library import sagittal_reach
from .sim.scenario import ScenarioRunner


def unlimited(model, bound=1e3):
    """Copy of ``model`` whose joint limits never engage."""
    joints = tuple(dataclasses.replace(j, limits=(-bound, bound)) for j in model.joints)
    return dataclasses.replace(model, joints=joints)


def _vee_rate(R_plus, R_minus, R, h):
    W = (R_plus - R_minus) / (2 * h) @ R.T
    return np.array([W[2, 1] - W[1, 2], W[0, 2] - W[2, 0], W[1, 0] - W[0, 1]]) / 2.0


def fd_jacobian(model, q, first, point, h=1e-6):
    """Central-difference 6 x k Jacobian of a binding frame over joints ``first``..parent."""
    lo = model.joint_index(first)
    hi = model.binding_points[point].parent - 1
    R0 = chain.forward_kinematics(model, q).points[point][1]
    cols = []
    for j in range(lo, hi + 1):
        dq = np.zeros(chain.N_JOINTS)
        dq[j] = h
        p1, R1 = chain.forward_kinematics(model, q + dq).points[point]
        p0, Rm = chain.forward_kinematics(model, q - dq).points[point]
        cols.append(np.concatenate([(p1 - p0) / (2 * h), _vee_rate(R1, Rm, R0, h)]))
    return np.array(cols).T


def check_jacobian(n=200, seed=0, tol=1e-6):
    """Analytic binding Jacobians against central finite differences."""
    model = chain.default_chain()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        q = rng.uniform(-np.pi, np.pi, chain.N_JOINTS)
        for point in chain.BINDINGS:
            J = chain.jacobian(model, q, 1, point)
            Jn = fd_jacobian(model, q, 1, point)
            err = np.max(np.abs(J - Jn)) / max(np.max(np.abs(Jn)), 1e-12)
            worst = max(worst, err)
    return worst < tol, f"worst relative error {worst:.2e} over {n} configurations (tol {tol:g})"


def check_gains(n=10_000):
    """BAS and coordination gains stay in range and keep their anchor values."""
    f_max = 30.0
    fs = np.linspace(-2 * f_max, 2 * f_max, n)
    kf, kt = np.array([bas.bas_gains(f, f_max) for f in fs]).T
    problems = []
    if np.any((kf < 0) | (kf > 1) | (kt < 0) | (kt > 1)):
        problems.append("BAS gains outside [0, 1]")
    anchors = [bas.bas_gains(0.0, f_max), bas.bas_gains(f_max / 2, f_max), bas.bas_gains(f_max, f_max)]
    if abs(anchors[0][0] - 0.5) > 1e-12 or abs(anchors[0][1] - 1) > 1e-12:
        problems.append("BAS gains at zero force")
    if abs(anchors[1][0] - 1) > 1e-12 or abs(anchors[2][1]) > 1e-12:
        problems.append("BAS gains at the threshold")
    p = np.linspace(-50, 50, n)
    kc = np.array([fcm.coordination_gain(x, 2.0) for x in p])
    if np.any((kc <= 0) | (kc >= 2)):
        problems.append("coordination gain outside (0, 2)")
    if np.any(np.diff(kc) < 0):
        problems.append("coordination gain not monotone")
    odd = np.max(np.abs(kc + kc[::-1] - 2))
    if odd > 1e-12:
        problems.append(f"coordination gain symmetry off by {odd:.1e}")
    ok = not problems
    return ok, "all bounds hold" if ok else "; ".join(problems)


def check_energy(duration=2.0, dt=1.0 / 800.0, seed=0, tol=1e-3):
    """Free, frictionless chain under gravity conserves mechanical energy."""
    model = unlimited(chain.default_chain())
    zero = FrictionParams(f_c=0.0, f_s=0.0)
    params = plant_mod.PlantParams(model, default_inertials(model), zero)
    plant = plant_mod.Plant(params)
    coupling = plant_mod.Coupling.detached()
    rng = np.random.default_rng(seed)
    q = rng.uniform(-0.4, 0.4, chain.N_JOINTS)
    qd = rng.uniform(-1.0, 1.0, chain.N_JOINTS)
    E0 = plant_mod.mechanical_energy(params, q, qd)
    # drift is measured against the largest kinetic energy reached, which does
    # not depend on where the potential is zeroed
    drift = 0.0
    k_peak = E0 - plant_mod.mechanical_energy(params, q, np.zeros_like(qd))
    for _ in range(int(round(duration / dt))):
        q, qd, _ = plant.step(q, qd, np.zeros(chain.N_JOINTS), dt, coupling)
        E = plant_mod.mechanical_energy(params, q, qd)
        drift = max(drift, abs(E - E0))
        k_peak = max(k_peak, E - plant_mod.mechanical_energy(params, q, np.zeros_like(qd)))
    worst = drift / k_peak
    return worst < tol, f"max relative energy drift {worst:.2e} over {duration:g} s (tol {tol:g})"


def check_determinism(seed=3):
    """Same scenario and seed give identical traces."""
    cfg = sagittal_reach(mode="bas-fcm", seed=seed, duration=0.5)
    a = ScenarioRunner(cfg).run()
    b = ScenarioRunner(cfg).run()
    fields = ("q", "qd", "tau_cmd", "raw", "filtered")
    diff = [f for f in fields if not np.array_equal(getattr(a, f), getattr(b, f))]
    return not diff, "traces identical" if not diff else f"traces differ in {', '.join(diff)}"


SUITES = {
    "jacobian": check_jacobian,
    "gains": check_gains,
    "energy": check_energy,
    "determinism": check_determinism,
}


def run_suite(name):
    try:
        return SUITES[name]()
    except Exception as exc:  # a crashing suite is a failed suite, reported by name
        return False, f"raised {type(exc).__name__}: {exc}"
