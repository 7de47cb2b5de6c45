# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled flock step kernel: the O(n^2) inner loop of the simulator.

Same arithmetic as the NumPy fallback; sums over neighbors run
sequentially in index order.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

name = "cython"


def forces(double[:, ::1] pos, double[:, ::1] prev_move, double[::1] shepherd,
           double radius, double norm_floor):
    cdef Py_ssize_t n = pos.shape[0]
    sep_arr = np.zeros((n, 2))
    ali_arr = np.zeros((n, 2))
    att_arr = np.zeros((n, 2))
    avo_arr = np.zeros((n, 2))
    cdef double[:, ::1] sep = sep_arr
    cdef double[:, ::1] ali = ali_arr
    cdef double[:, ::1] att = att_arr
    cdef double[:, ::1] avo = avo_arr

    # unit previous-move vectors, zero below the floor
    unit_prev_arr = np.zeros((n, 2))
    cdef double[:, ::1] unit_prev = unit_prev_arr
    cdef Py_ssize_t i, j
    cdef double nx, dx, dy, d, g, inv3, sx, sy, ax, ay, tx, ty
    cdef Py_ssize_t cnt
    for i in range(n):
        nx = sqrt(prev_move[i, 0] * prev_move[i, 0] + prev_move[i, 1] * prev_move[i, 1])
        if nx >= norm_floor:
            unit_prev[i, 0] = prev_move[i, 0] / nx
            unit_prev[i, 1] = prev_move[i, 1] / nx

    for i in range(n):
        cnt = 0
        sx = 0.0
        sy = 0.0
        ax = 0.0
        ay = 0.0
        tx = 0.0
        ty = 0.0
        for j in range(n):
            if j == i:
                continue
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            d = sqrt(dx * dx + dy * dy)
            if d <= radius:
                cnt += 1
                g = d if d >= norm_floor else norm_floor
                inv3 = 1.0 / (g * g * g)
                sx += dx * inv3
                sy += dy * inv3
                ax += unit_prev[j, 0]
                ay += unit_prev[j, 1]
                if d >= norm_floor:
                    tx += dx / d
                    ty += dy / d
        if cnt > 0:
            sep[i, 0] = -(sx / cnt)
            sep[i, 1] = -(sy / cnt)
            ali[i, 0] = ax / cnt
            ali[i, 1] = ay / cnt
            att[i, 0] = tx / cnt
            att[i, 1] = ty / cnt
        dx = shepherd[0] - pos[i, 0]
        dy = shepherd[1] - pos[i, 1]
        d = sqrt(dx * dx + dy * dy)
        g = d if d >= norm_floor else norm_floor
        inv3 = 1.0 / (g * g * g)
        avo[i, 0] = -(dx * inv3)
        avo[i, 1] = -(dy * inv3)

    return sep_arr, ali_arr, att_arr, avo_arr


def step(double[:, ::1] pos, double[:, ::1] prev_move, double[::1] shepherd,
         double[:, ::1] gains, double radius, double speed_cap, double norm_floor):
    cdef Py_ssize_t n = pos.shape[0]
    new_pos_arr = np.empty((n, 2))
    new_move_arr = np.empty((n, 2))
    cdef double[:, ::1] new_pos = new_pos_arr
    cdef double[:, ::1] new_move = new_move_arr

    unit_prev_arr = np.zeros((n, 2))
    cdef double[:, ::1] unit_prev = unit_prev_arr
    cdef Py_ssize_t i, j
    cdef double nx, dx, dy, d, g, inv3, sx, sy, ax, ay, tx, ty
    cdef double sep_x, sep_y, ali_x, ali_y, att_x, att_y, avo_x, avo_y
    cdef double vx, vy, speed, scale
    cdef Py_ssize_t cnt
    for i in range(n):
        nx = sqrt(prev_move[i, 0] * prev_move[i, 0] + prev_move[i, 1] * prev_move[i, 1])
        if nx >= norm_floor:
            unit_prev[i, 0] = prev_move[i, 0] / nx
            unit_prev[i, 1] = prev_move[i, 1] / nx

    for i in range(n):
        cnt = 0
        sx = 0.0
        sy = 0.0
        ax = 0.0
        ay = 0.0
        tx = 0.0
        ty = 0.0
        for j in range(n):
            if j == i:
                continue
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            d = sqrt(dx * dx + dy * dy)
            if d <= radius:
                cnt += 1
                g = d if d >= norm_floor else norm_floor
                inv3 = 1.0 / (g * g * g)
                sx += dx * inv3
                sy += dy * inv3
                ax += unit_prev[j, 0]
                ay += unit_prev[j, 1]
                if d >= norm_floor:
                    tx += dx / d
                    ty += dy / d
        if cnt > 0:
            sep_x = -(sx / cnt)
            sep_y = -(sy / cnt)
            ali_x = ax / cnt
            ali_y = ay / cnt
            att_x = tx / cnt
            att_y = ty / cnt
        else:
            sep_x = sep_y = ali_x = ali_y = att_x = att_y = 0.0
        dx = shepherd[0] - pos[i, 0]
        dy = shepherd[1] - pos[i, 1]
        d = sqrt(dx * dx + dy * dy)
        g = d if d >= norm_floor else norm_floor
        inv3 = 1.0 / (g * g * g)
        avo_x = -(dx * inv3)
        avo_y = -(dy * inv3)

        vx = gains[i, 0] * sep_x + gains[i, 1] * ali_x + gains[i, 2] * att_x + gains[i, 3] * avo_x
        vy = gains[i, 0] * sep_y + gains[i, 1] * ali_y + gains[i, 2] * att_y + gains[i, 3] * avo_y
        speed = sqrt(vx * vx + vy * vy)
        if speed > speed_cap:
            scale = speed_cap / speed
            vx *= scale
            vy *= scale
        new_move[i, 0] = vx
        new_move[i, 1] = vy
        new_pos[i, 0] = pos[i, 0] + vx
        new_pos[i, 1] = pos[i, 1] + vy

    return new_pos_arr, new_move_arr
