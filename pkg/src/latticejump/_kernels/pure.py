"""Numpy fallback implementation of the propagation kernel.

Integrates dpsi/dt = G psi for a sparse generator matrix G (for jump
monitoring G = -i H_eff) with an adaptive embedded Dormand-Prince 5(4)
pair, watching the squared norm for a downward crossing of a detection
threshold. The compiled backend in _core.pyx implements the same algorithm
with the same tuple contract:

    propagate(g_mat, psi, t0, t_target, threshold, dt, dt_max,
              rtol, atol, jump_tol, max_bisect)
      -> (t_out, crossed, dt_next, n_steps, n_rejected, status, jump_gap)

psi is modified in place. threshold <= 0 disables crossing detection.
status: 0 ok, 1 step size underflow, 2 squared norm grew beyond slack.
jump_gap is |‖psi‖^2 - threshold| at the located crossing (0.0 otherwise).
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"

# Dormand-Prince 5(4) tableau
_C = (0.2, 0.3, 0.8, 8.0 / 9.0, 1.0)
_A = (
    (0.2,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
)
_B = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0)
_E = (
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

_MAX_GROWTH = 5.0
_MIN_SHRINK = 0.2
_SAFETY = 0.9
_NORM_SLACK_REL = 1e-6
_NORM_SLACK_ABS = 1e-12


def _norm2(y: np.ndarray) -> float:
    return float(np.real(np.vdot(y, y)))


def _step(g_mat, y, h):
    """One trial step. Returns (y_new, err_vec)."""
    k1 = g_mat @ y
    k2 = g_mat @ (y + h * (_A[0][0] * k1))
    k3 = g_mat @ (y + h * (_A[1][0] * k1 + _A[1][1] * k2))
    k4 = g_mat @ (y + h * (_A[2][0] * k1 + _A[2][1] * k2 + _A[2][2] * k3))
    k5 = g_mat @ (y + h * (_A[3][0] * k1 + _A[3][1] * k2 + _A[3][2] * k3 + _A[3][3] * k4))
    k6 = g_mat @ (
        y + h * (_A[4][0] * k1 + _A[4][1] * k2 + _A[4][2] * k3 + _A[4][3] * k4 + _A[4][4] * k5)
    )
    y_new = y + h * (_B[0] * k1 + _B[2] * k3 + _B[3] * k4 + _B[4] * k5 + _B[5] * k6)
    k7 = g_mat @ y_new  # error-estimate stage
    err_vec = h * (
        _E[0] * k1 + _E[2] * k3 + _E[3] * k4 + _E[4] * k5 + _E[5] * k6 + _E[6] * k7
    )
    return y_new, err_vec


def _error_norm(err_vec, y, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))


def _resolution(t_target: float) -> float:
    return 1e-14 * max(1.0, abs(t_target))


def _advance(g_mat, y, t0, t_target, dt, dt_max, rtol, atol):
    """Integrate without crossing checks. Returns (y, dt_next, status, n, nrej)."""
    t = t0
    n_steps = n_rejected = 0
    res = _resolution(t_target)
    while t < t_target:
        if t_target - t <= res:  # done up to fp resolution
            break
        h = min(dt, dt_max, t_target - t)
        if h <= res:  # dt collapsed while real time remains
            return y, dt, 1, n_steps, n_rejected
        y_new, err_vec = _step(g_mat, y, h)
        err = _error_norm(err_vec, y, y_new, rtol, atol)
        if err <= 1.0:
            t += h
            y = y_new
            n_steps += 1
            factor = _MAX_GROWTH if err == 0.0 else min(_MAX_GROWTH, _SAFETY * err ** -0.2)
            dt = h * max(_MIN_SHRINK, factor)
        else:
            n_rejected += 1
            dt = h * max(_MIN_SHRINK, _SAFETY * err ** -0.2)
    return y, dt, 0, n_steps, n_rejected


def propagate(
    g_mat,
    psi: np.ndarray,
    t0: float,
    t_target: float,
    threshold: float,
    dt: float,
    dt_max: float,
    rtol: float,
    atol: float,
    jump_tol: float,
    max_bisect: int,
):
    t = float(t0)
    y = psi.copy()
    n_steps = n_rejected = 0
    norm_prev = _norm2(y)
    watching = threshold > 0.0
    res = _resolution(t_target)

    while t < t_target:
        if t_target - t <= res:
            t = t_target
            break
        h = min(dt, dt_max, t_target - t)
        if h <= res:
            psi[:] = y
            return (t, 0, dt, n_steps, n_rejected, 1, 0.0)
        y_new, err_vec = _step(g_mat, y, h)
        err = _error_norm(err_vec, y, y_new, rtol, atol)
        if err > 1.0:
            n_rejected += 1
            dt = h * max(_MIN_SHRINK, _SAFETY * err ** -0.2)
            continue
        n_steps += 1
        norm_new = _norm2(y_new)
        if norm_new > norm_prev * (1.0 + _NORM_SLACK_REL) + _NORM_SLACK_ABS:
            psi[:] = y
            return (t, 0, dt, n_steps, n_rejected, 2, 0.0)
        factor = _MAX_GROWTH if err == 0.0 else min(_MAX_GROWTH, _SAFETY * err ** -0.2)
        dt_accepted = h
        dt = h * max(_MIN_SHRINK, factor)
        if watching and norm_new < threshold:
            # crossing inside (t, t+h]: bisect, re-integrating from the left edge
            t_j, y_j, gap, status = _bisect(
                g_mat, y, t, t + dt_accepted, threshold, dt_max, rtol, atol, jump_tol, max_bisect
            )
            psi[:] = y_j
            return (t_j, 1, dt, n_steps, n_rejected, status, gap)
        t += dt_accepted
        y = y_new
        norm_prev = norm_new

    psi[:] = y
    if abs(t - t_target) <= res:
        t = t_target
    return (t, 0, dt, n_steps, n_rejected, 0, 0.0)


def _bisect(g_mat, y_lo, t_lo, t_hi, threshold, dt_max, rtol, atol, jump_tol, max_bisect):
    """Locate ‖psi‖^2 = threshold in (t_lo, t_hi]; returns the >= side."""
    gap = abs(_norm2(y_lo) - threshold)
    status = 0
    for _ in range(max_bisect):
        t_mid = 0.5 * (t_lo + t_hi)
        if not (t_lo < t_mid < t_hi):
            break
        y_mid, _, st, _, _ = _advance(
            g_mat, y_lo.copy(), t_lo, t_mid, t_mid - t_lo, dt_max, rtol, atol
        )
        if st == 2:
            status = st
            break
        if st == 1:
            break  # interval below time resolution; keep the best bracket edge
        n2 = _norm2(y_mid)
        if n2 >= threshold:
            t_lo, y_lo = t_mid, y_mid
            gap = abs(n2 - threshold)
            if gap < jump_tol:
                break
        else:
            t_hi = t_mid
            if threshold - n2 < jump_tol:
                # accept the below side only if the above side is not there yet
                if gap >= jump_tol:
                    t_lo, y_lo, gap = t_mid, y_mid, threshold - n2
                break
    return t_lo, y_lo, gap, status
