# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled propagation kernel.

Same contract as pure.py: adaptive Dormand-Prince 5(4) steps of
dpsi/dt = G psi for a sparse generator G (CSR arrays), monitoring the
squared norm for a downward threshold crossing and locating it by
bisection. The whole stepping loop runs without the GIL so trajectory
fan-out across threads scales.
"""

import numpy as np

from libc.math cimport fabs, pow, sqrt

BACKEND = "compiled"

ctypedef double complex cplx

cdef double A21 = 0.2
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0

cdef double MAX_GROWTH = 5.0
cdef double MIN_SHRINK = 0.2
cdef double SAFETY = 0.9
cdef double NORM_SLACK_REL = 1e-6
cdef double NORM_SLACK_ABS = 1e-12


cdef inline void _matvec(const cplx[::1] data, const int[::1] indices, const int[::1] indptr,
                         const cplx[::1] x, cplx[::1] out) noexcept nogil:
    cdef Py_ssize_t r, p
    cdef Py_ssize_t n = out.shape[0]
    cdef cplx acc
    for r in range(n):
        acc = 0
        for p in range(indptr[r], indptr[r + 1]):
            acc = acc + data[p] * x[indices[p]]
        out[r] = acc


cdef inline double _norm2(const cplx[::1] y) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(y.shape[0]):
        s += y[i].real * y[i].real + y[i].imag * y[i].imag
    return s


cdef inline double _cabs(cplx z) noexcept nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef double _try_step(const cplx[::1] data, const int[::1] indices, const int[::1] indptr,
                      const cplx[::1] y, double h,
                      cplx[:, ::1] k, cplx[::1] ytmp, cplx[::1] ynew,
                      double rtol, double atol) noexcept nogil:
    """Fill ynew with the 5th-order result; return the scaled error norm."""
    cdef Py_ssize_t i
    cdef Py_ssize_t n = y.shape[0]
    cdef double sc, ay, an, acc = 0.0
    cdef cplx e

    _matvec(data, indices, indptr, y, k[0])
    for i in range(n):
        ytmp[i] = y[i] + h * (A21 * k[0, i])
    _matvec(data, indices, indptr, ytmp, k[1])
    for i in range(n):
        ytmp[i] = y[i] + h * (A31 * k[0, i] + A32 * k[1, i])
    _matvec(data, indices, indptr, ytmp, k[2])
    for i in range(n):
        ytmp[i] = y[i] + h * (A41 * k[0, i] + A42 * k[1, i] + A43 * k[2, i])
    _matvec(data, indices, indptr, ytmp, k[3])
    for i in range(n):
        ytmp[i] = y[i] + h * (A51 * k[0, i] + A52 * k[1, i] + A53 * k[2, i] + A54 * k[3, i])
    _matvec(data, indices, indptr, ytmp, k[4])
    for i in range(n):
        ytmp[i] = y[i] + h * (A61 * k[0, i] + A62 * k[1, i] + A63 * k[2, i]
                              + A64 * k[3, i] + A65 * k[4, i])
    _matvec(data, indices, indptr, ytmp, k[5])
    for i in range(n):
        ynew[i] = y[i] + h * (B1 * k[0, i] + B3 * k[2, i] + B4 * k[3, i]
                              + B5 * k[4, i] + B6 * k[5, i])
    _matvec(data, indices, indptr, ynew, k[6])

    for i in range(n):
        e = h * (E1 * k[0, i] + E3 * k[2, i] + E4 * k[3, i]
                 + E5 * k[4, i] + E6 * k[5, i] + E7 * k[6, i])
        ay = _cabs(y[i])
        an = _cabs(ynew[i])
        sc = atol + rtol * (ay if ay > an else an)
        acc += (_cabs(e) / sc) ** 2
    return sqrt(acc / n)


cdef int _advance(const cplx[::1] data, const int[::1] indices, const int[::1] indptr,
                  cplx[::1] y, double t0, double t_target,
                  double* dt_io, double dt_max, double rtol, double atol,
                  cplx[:, ::1] k, cplx[::1] ytmp, cplx[::1] ynew) noexcept nogil:
    """Integrate y in place from t0 to t_target, no crossing checks."""
    cdef double t = t0
    cdef double dt = dt_io[0]
    cdef double h, err, factor
    cdef double res = 1e-14 * (1.0 if fabs(t_target) < 1.0 else fabs(t_target))
    cdef Py_ssize_t i
    cdef Py_ssize_t n = y.shape[0]
    while t < t_target:
        if t_target - t <= res:  # done up to fp resolution
            break
        h = dt
        if dt_max < h:
            h = dt_max
        if t_target - t < h:
            h = t_target - t
        if h <= res:  # dt collapsed while real time remains
            dt_io[0] = dt
            return 1
        err = _try_step(data, indices, indptr, y, h, k, ytmp, ynew, rtol, atol)
        if err <= 1.0:
            t += h
            for i in range(n):
                y[i] = ynew[i]
            factor = MAX_GROWTH if err == 0.0 else SAFETY * pow(err, -0.2)
            if factor > MAX_GROWTH:
                factor = MAX_GROWTH
            if factor < MIN_SHRINK:
                factor = MIN_SHRINK
            dt = h * factor
        else:
            factor = SAFETY * pow(err, -0.2)
            if factor < MIN_SHRINK:
                factor = MIN_SHRINK
            dt = h * factor
    dt_io[0] = dt
    return 0


def propagate(g_mat, psi, double t0, double t_target, double threshold,
              double dt, double dt_max, double rtol, double atol,
              double jump_tol, int max_bisect):
    """See pure.propagate; g_mat is a scipy CSR matrix of the generator."""
    data_arr = np.ascontiguousarray(g_mat.data, dtype=np.complex128)
    ind_arr = np.ascontiguousarray(g_mat.indices, dtype=np.int32)
    ptr_arr = np.ascontiguousarray(g_mat.indptr, dtype=np.int32)
    cdef const cplx[::1] data = data_arr
    cdef const int[::1] indices = ind_arr
    cdef const int[::1] indptr = ptr_arr
    cdef cplx[::1] y = psi
    cdef Py_ssize_t n = y.shape[0]

    ws = np.empty((7, n), dtype=np.complex128)
    cdef cplx[:, ::1] k = ws
    buf = np.empty((4, n), dtype=np.complex128)
    cdef cplx[::1] ytmp = buf[0]
    cdef cplx[::1] ynew = buf[1]
    cdef cplx[::1] ybis = buf[2]
    cdef cplx[::1] ytrial = buf[3]

    cdef double t = t0
    cdef double h, err, factor, norm_prev, norm_new, dt_accepted
    cdef double t_lo, t_hi, t_mid, gap, n2, sub_dt
    cdef double res = 1e-14 * (1.0 if fabs(t_target) < 1.0 else fabs(t_target))
    cdef long n_steps = 0, n_rejected = 0
    cdef int status = 0, crossed = 0, it, sub_status
    cdef bint watching = threshold > 0.0
    cdef Py_ssize_t i

    with nogil:
        norm_prev = _norm2(y)
        while t < t_target:
            if t_target - t <= res:
                t = t_target
                break
            h = dt
            if dt_max < h:
                h = dt_max
            if t_target - t < h:
                h = t_target - t
            if h <= res:
                status = 1
                break
            err = _try_step(data, indices, indptr, y, h, k, ytmp, ynew, rtol, atol)
            if err > 1.0:
                n_rejected += 1
                factor = SAFETY * pow(err, -0.2)
                if factor < MIN_SHRINK:
                    factor = MIN_SHRINK
                dt = h * factor
                continue
            n_steps += 1
            norm_new = _norm2(ynew)
            if norm_new > norm_prev * (1.0 + NORM_SLACK_REL) + NORM_SLACK_ABS:
                status = 2
                break
            factor = MAX_GROWTH if err == 0.0 else SAFETY * pow(err, -0.2)
            if factor > MAX_GROWTH:
                factor = MAX_GROWTH
            if factor < MIN_SHRINK:
                factor = MIN_SHRINK
            dt_accepted = h
            dt = h * factor
            if watching and norm_new < threshold:
                # bisect inside (t, t + dt_accepted], re-integrating from the left edge
                t_lo = t
                t_hi = t + dt_accepted
                for i in range(n):
                    ybis[i] = y[i]
                gap = fabs(norm_prev - threshold)
                for it in range(max_bisect):
                    t_mid = 0.5 * (t_lo + t_hi)
                    if not (t_lo < t_mid < t_hi):
                        break
                    for i in range(n):
                        ytrial[i] = ybis[i]
                    sub_dt = t_mid - t_lo
                    sub_status = _advance(data, indices, indptr, ytrial, t_lo, t_mid,
                                          &sub_dt, dt_max, rtol, atol, k, ytmp, ynew)
                    if sub_status == 2:
                        status = 2
                        break
                    if sub_status == 1:
                        break
                    n2 = _norm2(ytrial)
                    if n2 >= threshold:
                        t_lo = t_mid
                        for i in range(n):
                            ybis[i] = ytrial[i]
                        gap = fabs(n2 - threshold)
                        if gap < jump_tol:
                            break
                    else:
                        t_hi = t_mid
                        if threshold - n2 < jump_tol:
                            if gap >= jump_tol:
                                t_lo = t_mid
                                for i in range(n):
                                    ybis[i] = ytrial[i]
                                gap = threshold - n2
                            break
                if status == 0:
                    crossed = 1
                    t = t_lo
                    for i in range(n):
                        y[i] = ybis[i]
                break
            t += dt_accepted
            for i in range(n):
                y[i] = ynew[i]
            norm_prev = norm_new

    if crossed:
        return (t, 1, dt, n_steps, n_rejected, status, gap)
    if status == 0 and fabs(t - t_target) <= res:
        t = t_target
    return (t, 0, dt, n_steps, n_rejected, status, 0.0)
