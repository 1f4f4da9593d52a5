"""Compiled inner-loop kernels for the plant.

These mirror :mod:`exoflex.chain` and :mod:`exoflex.dynamics` (world-frame
spatial algebra) but run without per-call numpy overhead, which matters at
800 Hz over long sweeps. The numpy versions remain the reference; the test
suite checks the two against each other.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def fk(axes, origin_R, origin_p, q):
    """Joint origins, orientations and world axes."""
    n = q.shape[0]
    pos = np.empty((n, 3))
    rot = np.empty((n, 3, 3))
    z = np.empty((n, 3))
    R = np.eye(3)
    p = np.zeros(3)
    for i in range(n):
        p = p + R @ origin_p[i]
        R = R @ origin_R[i]
        a = axes[i]
        z[i] = R @ a
        K = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
        R = R @ (np.eye(3) + np.sin(q[i]) * K + (1.0 - np.cos(q[i])) * (K @ K))
        pos[i] = p
        rot[i] = R
    return pos, rot, z


@njit(cache=True)
def points(pos, rot, parents, off_R, off_p):
    nb = parents.shape[0]
    pp = np.empty((nb, 3))
    pR = np.empty((nb, 3, 3))
    for b in range(nb):
        k = parents[b]
        pp[b] = pos[k] + rot[k] @ off_p[b]
        pR[b] = rot[k] @ off_R[b]
    return pp, pR


@njit(cache=True)
def point_twist(pos, z, parent, p, qd):
    """Linear and angular velocity of a point rigidly attached to link ``parent``."""
    v = np.zeros(3)
    w = np.zeros(3)
    for i in range(parent + 1):
        w += z[i] * qd[i]
        v += _cross(z[i], p - pos[i]) * qd[i]
    return v, w


@njit(cache=True)
def spatial_inertias(pos, rot, mass, com, inertia):
    n = pos.shape[0]
    out = np.zeros((n, 6, 6))
    for k in range(n):
        R = rot[k]
        c = pos[k] + R @ com[k]
        Ic = R @ inertia[k] @ R.T
        C = np.array([[0.0, -c[2], c[1]], [c[2], 0.0, -c[0]], [-c[1], c[0], 0.0]])
        m = mass[k]
        out[k, :3, :3] = Ic + m * (C @ C.T)
        out[k, :3, 3:] = m * C
        out[k, 3:, :3] = m * C.T
        for j in range(3):
            out[k, 3 + j, 3 + j] = m
    return out


@njit(cache=True)
def _subspaces(pos, z):
    n = pos.shape[0]
    S = np.empty((n, 6))
    for i in range(n):
        S[i, :3] = z[i]
        S[i, 3:] = _cross(pos[i], z[i])
    return S


@njit(cache=True)
def _crm(v, m):
    out = np.empty(6)
    out[:3] = _cross(v[:3], m[:3])
    out[3:] = _cross(v[:3], m[3:]) + _cross(v[3:], m[:3])
    return out


@njit(cache=True)
def _crf(v, f):
    out = np.empty(6)
    out[:3] = _cross(v[:3], f[:3]) + _cross(v[3:], f[3:])
    out[3:] = _cross(v[:3], f[3:])
    return out


@njit(cache=True)
def rnea(pos, z, I6, qd, qdd, gravity):
    n = pos.shape[0]
    S = _subspaces(pos, z)
    v = np.zeros(6)
    a = np.zeros(6)
    a[3:] = -gravity
    f = np.empty((n, 6))
    for i in range(n):
        vj = S[i] * qd[i]
        v = v + vj
        a = a + S[i] * qdd[i] + _crm(v, vj)
        f[i] = I6[i] @ a + _crf(v, I6[i] @ v)
    tau = np.empty(n)
    acc = np.zeros(6)
    for i in range(n - 1, -1, -1):
        acc = acc + f[i]
        tau[i] = S[i] @ acc
    return tau


@njit(cache=True)
def crba(pos, z, I6):
    n = pos.shape[0]
    S = _subspaces(pos, z)
    M = np.empty((n, n))
    Ic = np.zeros((6, 6))
    for j in range(n - 1, -1, -1):
        Ic = Ic + I6[j]
        F = Ic @ S[j]
        for i in range(j + 1):
            M[i, j] = S[i] @ F
            M[j, i] = M[i, j]
    return M


@njit(cache=True)
def friction(f_c, f_s, v_s, a, v_eps, v):
    n = v.shape[0]
    out = np.empty(n)
    slope = np.empty(n)
    for i in range(n):
        e = np.exp(-abs(v[i] / v_s[i]))
        x = v[i] / v_eps[i]
        sig = np.tanh(x * abs(x))
        dsig = (1.0 - sig * sig) * 2.0 * abs(x) / v_eps[i]
        s = 0.0
        if v[i] > 0:
            s = 1.0
        elif v[i] < 0:
            s = -1.0
        out[i] = 2.0 * f_c[i] / np.pi * np.arctan(v[i] / a[i]) + (f_s[i] - f_c[i]) * e * sig
        slope[i] = 2.0 * f_c[i] / np.pi * a[i] / (a[i] * a[i] + v[i] * v[i]) + (
            f_s[i] - f_c[i]
        ) * e * (dsig - s / v_s[i] * sig)
    return out, slope


@njit(cache=True)
def spring_wrench(p_h, R_h, v_h, w_h, p_e, R_e, v_e, w_e, K, D):
    """Cuff-frame spring-damper wrench pulling the exo cuff toward the human frame."""
    e_p = R_e.T @ (p_h - p_e)
    E = R_e.T @ R_h
    e_r = 0.5 * np.array([E[2, 1] - E[1, 2], E[0, 2] - E[2, 0], E[1, 0] - E[0, 1]])
    de_p = R_e.T @ (v_h - v_e)
    de_r = R_e.T @ (w_h - w_e)
    w = np.empty(6)
    for j in range(3):
        w[j] = K[j] * e_p[j] + D[j] * de_p[j]
        w[3 + j] = K[3 + j] * e_r[j] + D[3 + j] * de_r[j]
    return w


@njit(cache=True)
def cap_wrench(w, cap_f, cap_t):
    out = w.copy()
    nf = np.sqrt(w[0] ** 2 + w[1] ** 2 + w[2] ** 2)
    nt = np.sqrt(w[3] ** 2 + w[4] ** 2 + w[5] ** 2)
    if nf > cap_f:
        out[:3] *= cap_f / nf
    if nt > cap_t:
        out[3:] *= cap_t / nt
    return out


@njit(cache=True)
def interaction(q, qd, axes, origin_R, origin_p, parents, off_R, off_p,
                hp, hR, hv, hw, K, D, cap_f, cap_t):
    """Cuff wrenches (cuff frame) and the joint torques they exert on the exo."""
    pos, rot, z = fk(axes, origin_R, origin_p, q)
    pp, pR = points(pos, rot, parents, off_R, off_p)
    nb = parents.shape[0]
    n = q.shape[0]
    wrenches = np.empty((nb, 6))
    tau = np.zeros(n)
    for b in range(nb):
        v_e, w_e = point_twist(pos, z, parents[b], pp[b], qd)
        w = spring_wrench(hp[b], hR[b], hv[b], hw[b], pp[b], pR[b], v_e, w_e, K[b], D[b])
        w = cap_wrench(w, cap_f[b], cap_t[b])
        wrenches[b] = w
        f = pR[b] @ w[:3]
        t = pR[b] @ w[3:]
        for i in range(parents[b] + 1):
            tau[i] += z[i] @ (_cross(pp[b] - pos[i], f) + t)
    return wrenches, tau, pos, rot, z


@njit(cache=True)
def _terms(q, qd, axes, origin_R, origin_p, parents, off_R, off_p, mass, com, inertia,
           armature, gravity, f_c, f_s, v_s, a_fr, v_eps, hp, hR, hv, hw, K, D, cap_f, cap_t):
    wrenches, tau_int, pos, rot, z = interaction(
        q, qd, axes, origin_R, origin_p, parents, off_R, off_p, hp, hR, hv, hw, K, D, cap_f, cap_t
    )
    I6 = spatial_inertias(pos, rot, mass, com, inertia)
    M = crba(pos, z, I6)
    for i in range(q.shape[0]):
        M[i, i] += armature[i]
    bias = rnea(pos, z, I6, qd, np.zeros(q.shape[0]), gravity)
    fr, slope = friction(f_c, f_s, v_s, a_fr, v_eps, qd)
    for i in range(q.shape[0]):
        slope[i] = max(slope[i], 0.0)
    return M, bias, fr, slope, tau_int, wrenches


@njit(cache=True)
def _solve_free(M, slope, h, rhs, free):
    """Velocity increment from (M + h*diag(slope)) dv = rhs over the unlocked joints."""
    n = rhs.shape[0]
    idx = np.nonzero(free)[0]
    m = idx.shape[0]
    dv = np.zeros(n)
    if m == 0:
        return dv
    A = np.empty((m, m))
    b = np.empty(m)
    for r in range(m):
        i = idx[r]
        b[r] = rhs[i]
        for c in range(m):
            A[r, c] = M[i, idx[c]]
        A[r, r] += h * slope[i]
    sol = np.linalg.solve(A, b)
    for r in range(m):
        dv[idx[r]] = sol[r]
    return dv


@njit(cache=True)
def substep(q, qd, tau_cmd, dt, axes, origin_R, origin_p, parents, off_R, off_p,
            mass, com, inertia, armature, gravity, f_c, f_s, v_s, a_fr, v_eps, free, lower, upper,
            hp0, hR0, hv0, hw0, hp1, hR1, hv1, hw1, K, D, cap_f, cap_t):
    """Two-stage semi-implicit step (second order).

    Stage one is a semi-implicit Euler half step to the midpoint; stage two
    advances the velocity with the midpoint acceleration and the position
    with the mean of old and new velocity. The friction slope is linearized
    implicitly in both stages (backward-Euler form), which keeps the stiff
    arctan region near zero velocity stable. Human frames are given at the
    start (``*0``) and midpoint (``*1``) of the step.

    Returns new (q, qd), midpoint cuff wrenches, midpoint interaction
    torques and the friction torque actually applied over the step.
    """
    h = 0.5 * dt
    M, bias, fr, slope, tau_int, wrenches = _terms(
        q, qd, axes, origin_R, origin_p, parents, off_R, off_p, mass, com, inertia, armature,
        gravity, f_c, f_s, v_s, a_fr, v_eps, hp0, hR0, hv0, hw0, K, D, cap_f, cap_t,
    )
    rhs = h * (tau_cmd + tau_int - bias - fr)
    v_m = qd + _solve_free(M, slope, h, rhs, free)
    q_m = q + h * v_m

    M, bias, fr, slope, tau_int, wrenches = _terms(
        q_m, v_m, axes, origin_R, origin_p, parents, off_R, off_p, mass, com, inertia, armature,
        gravity, f_c, f_s, v_s, a_fr, v_eps, hp1, hR1, hv1, hw1, K, D, cap_f, cap_t,
    )
    rhs = dt * (tau_cmd + tau_int - bias - fr - slope * (qd - v_m))
    dv = _solve_free(M, slope, dt, rhs, free)
    n = q.shape[0]
    qd_new = np.zeros(n)
    applied_friction = np.zeros(n)
    for i in range(n):
        if free[i]:
            qd_new[i] = qd[i] + dv[i]
            applied_friction[i] = fr[i] + slope[i] * (qd_new[i] - v_m[i])
    q_new = q + h * (qd + qd_new)
    _limit_impulses(q_new, qd_new, M, free, lower, upper)
    return q_new, qd_new, wrenches, tau_int, applied_friction


@njit(cache=True)
def _limit_impulses(q, qd, M, free, lower, upper):
    """Clamp joints at their stops and remove the outward velocity with a plastic impulse.

    The impulse acts along the joint coordinate, so it changes the other
    velocities through M^-1 and never adds kinetic energy.
    """
    n = q.shape[0]
    for _ in range(3):
        hit = False
        for i in range(n):
            if not free[i]:
                continue
            out = 0.0
            if q[i] <= lower[i]:
                q[i] = lower[i]
                out = min(qd[i], 0.0)
            elif q[i] >= upper[i]:
                q[i] = upper[i]
                out = max(qd[i], 0.0)
            if out == 0.0:
                continue
            hit = True
            e = np.zeros(n)
            e[i] = 1.0
            x = _solve_free(M, np.zeros(n), 0.0, e, free)
            lam = out / x[i]
            for j in range(n):
                qd[j] -= lam * x[j]
            qd[i] = 0.0
        if not hit:
            break


@njit(cache=True)
def cuff_frames(axes, origin_R, origin_p, parents, off_R, off_p, qs, qds):
    """Cuff positions, orientations and twists along a sampled joint trajectory."""
    T = qs.shape[0]
    nb = parents.shape[0]
    P = np.empty((T, nb, 3))
    R = np.empty((T, nb, 3, 3))
    V = np.empty((T, nb, 3))
    W = np.empty((T, nb, 3))
    for k in range(T):
        pos, rot, z = fk(axes, origin_R, origin_p, qs[k])
        pp, pR = points(pos, rot, parents, off_R, off_p)
        for b in range(nb):
            P[k, b] = pp[b]
            R[k, b] = pR[b]
            v, w = point_twist(pos, z, parents[b], pp[b], qds[k])
            V[k, b] = v
            W[k, b] = w
    return P, R, V, W
