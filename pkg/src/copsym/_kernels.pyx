# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled bootstrap replicate kernel.

Bit-stable twin of ``_kernels_np.replicate_stats_batch``: plain C loops with
a fixed summation order, no BLAS, so results do not depend on thread counts
or library builds.  See ``backends.replicate_stats_batch`` for the contract.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def replicate_stats_batch(
    double[:, ::1] xic,
    double[:, ::1] fu_grid,
    double[:, ::1] fv_grid,
    double[:, ::1] du_grid,
    double[:, ::1] dv_grid,
    double[:, ::1] prod_xy,
    double[:, ::1] prod_yx,
    double[:, ::1] fu_x,
    double[:, ::1] fv_y,
    double[:, ::1] fu_y,
    double[:, ::1] fv_x,
    double[::1] du_xy,
    double[::1] dv_xy,
    double[::1] du_yx,
    double[::1] dv_yx,
):
    cdef Py_ssize_t n_rep = xic.shape[0]
    cdef Py_ssize_t n_obs = xic.shape[1]
    cdef Py_ssize_t n_grid = fu_grid.shape[0]
    cdef Py_ssize_t n_pts = prod_xy.shape[0]

    r_arr = np.empty(n_rep)
    s_arr = np.empty(n_rep)
    t_arr = np.empty(n_rep)
    cdef double[::1] r_out = r_arr
    cdef double[::1] s_out = s_arr
    cdef double[::1] t_out = t_arr

    wu_arr = np.empty((n_grid, n_obs))
    bg_arr = np.empty((n_grid, n_grid))
    bu_arr = np.empty(n_grid)
    bv_arr = np.empty(n_grid)
    cdef double[:, ::1] wu = wu_arr
    cdef double[:, ::1] bg = bg_arr
    cdef double[::1] bu = bu_arr
    cdef double[::1] bv = bv_arr

    cdef Py_ssize_t h, i, j, o, q
    cdef double acc, acc_u, acc_v, w, d, sq_sum, abs_max
    cdef double m1, m2, m3, m4, m5, m6, val

    for h in range(n_rep):
        # grid part
        for i in range(n_grid):
            acc_u = 0.0
            acc_v = 0.0
            for o in range(n_obs):
                w = xic[h, o]
                wu[i, o] = fu_grid[i, o] * w
                acc_u += fu_grid[i, o] * w
                acc_v += fv_grid[i, o] * w
            bu[i] = acc_u
            bv[i] = acc_v
        for i in range(n_grid):
            for j in range(n_grid):
                acc = 0.0
                for o in range(n_obs):
                    acc += wu[i, o] * fv_grid[j, o]
                bg[i, j] = acc - du_grid[i, j] * bu[i] - dv_grid[i, j] * bv[j]
        sq_sum = 0.0
        abs_max = 0.0
        for i in range(n_grid):
            for j in range(n_grid):
                d = bg[i, j] - bg[j, i]
                sq_sum += d * d
                if d > abs_max:
                    abs_max = d
                elif -d > abs_max:
                    abs_max = -d
        r_out[h] = sq_sum / (n_grid * n_grid)
        t_out[h] = abs_max

        # point part
        sq_sum = 0.0
        for q in range(n_pts):
            m1 = 0.0
            m2 = 0.0
            m3 = 0.0
            m4 = 0.0
            m5 = 0.0
            m6 = 0.0
            for o in range(n_obs):
                w = xic[h, o]
                m1 += prod_xy[q, o] * w
                m2 += prod_yx[q, o] * w
                m3 += fu_x[q, o] * w
                m4 += fv_y[q, o] * w
                m5 += fu_y[q, o] * w
                m6 += fv_x[q, o] * w
            val = (m1 - du_xy[q] * m3 - dv_xy[q] * m4) - (m2 - du_yx[q] * m5 - dv_yx[q] * m6)
            sq_sum += val * val
        s_out[h] = sq_sum / n_pts

    return r_arr, s_arr, t_arr
