"""Vectorized NumPy implementation of the per-step flock kernel.

Fallback backend used when the compiled extension is unavailable. Both
backends implement the same arithmetic; they may differ in the last few
ulps because NumPy reduces sums pairwise while the compiled loop
accumulates sequentially.
"""

from __future__ import annotations

import numpy as np

name = "numpy"


def forces(
    pos: np.ndarray,
    prev_move: np.ndarray,
    shepherd: np.ndarray,
    radius: float,
    norm_floor: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Raw per-sheep force vectors (separation, alignment, attraction,
    avoidance), before gains.

    Neighbors are the other sheep at distance <= radius (boundary
    inclusive). With no neighbors the three flock forces are zero. The
    inverse-cube denominators are floored at norm_floor; unit vectors of
    near-zero arguments are zero.
    """
    n = pos.shape[0]
    diff = pos[None, :, :] - pos[:, None, :]  # [i, j] = x_j - x_i
    d = np.sqrt((diff * diff).sum(axis=2))
    neighbor = d <= radius
    np.fill_diagonal(neighbor, False)
    cnt = neighbor.sum(axis=1)
    denom_cnt = np.maximum(cnt, 1).astype(np.float64)

    guarded = np.maximum(d, norm_floor)
    inv_cube = 1.0 / (guarded * guarded * guarded)  # multiply, not divide: matches the compiled loop
    sep_terms = diff * inv_cube[:, :, None]
    sep = -np.where(neighbor[:, :, None], sep_terms, 0.0).sum(axis=1) / denom_cnt[:, None]

    prev_norm = np.sqrt((prev_move * prev_move).sum(axis=1))
    unit_prev = np.where(
        (prev_norm >= norm_floor)[:, None], prev_move / np.maximum(prev_norm, norm_floor)[:, None], 0.0
    )
    ali = np.where(neighbor[:, :, None], unit_prev[None, :, :], 0.0).sum(axis=1) / denom_cnt[:, None]

    unit_diff = np.where((d >= norm_floor)[:, :, None], diff / guarded[:, :, None], 0.0)
    att = np.where(neighbor[:, :, None], unit_diff, 0.0).sum(axis=1) / denom_cnt[:, None]

    empty = cnt == 0
    if empty.any():
        sep[empty] = 0.0
        ali[empty] = 0.0
        att[empty] = 0.0

    to_shep = shepherd[None, :] - pos
    d_shep = np.sqrt((to_shep * to_shep).sum(axis=1))
    g = np.maximum(d_shep, norm_floor)
    avo = -(to_shep * (1.0 / (g * g * g))[:, None])

    return sep, ali, att, avo


def step(
    pos: np.ndarray,
    prev_move: np.ndarray,
    shepherd: np.ndarray,
    gains: np.ndarray,
    radius: float,
    speed_cap: float,
    norm_floor: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One synchronous flock update.

    Every sheep combines its four gain-weighted forces from the pre-step
    state, the movement vector is norm-clamped to speed_cap, and positions
    advance by the clamped vector. Returns (new_pos, new_move).
    """
    sep, ali, att, avo = forces(pos, prev_move, shepherd, radius, norm_floor)
    v = (
        gains[:, 0:1] * sep
        + gains[:, 1:2] * ali
        + gains[:, 2:3] * att
        + gains[:, 3:4] * avo
    )
    speed = np.sqrt((v * v).sum(axis=1))
    over = speed > speed_cap
    if over.any():
        v[over] *= (speed_cap / speed[over])[:, None]
    return pos + v, v
