"""Flock dynamics: neighbor queries, per-sheep forces, synchronous update.

Each sheep senses the other sheep within its circle of radius R (boundary
inclusive) and combines four forces: separation (inverse-cube repulsion
from neighbors), alignment (mean unit previous-move of neighbors),
attraction (mean unit offset to neighbors), and avoidance (inverse-cube
repulsion from the shepherd). The movement vector is the gain-weighted sum,
norm-clamped to the speed cap.

The pairwise inner loop lives in a backend kernel (compiled when
available); everything here is thin glue with the same conventions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backends
from .config import WorldConfig
from .core import WorldState


@dataclass(frozen=True)
class ForceBreakdown:
    """The four raw force vectors acting on one sheep, before gains."""

    separation: np.ndarray
    alignment: np.ndarray
    attraction: np.ndarray
    avoidance: np.ndarray


def neighbor_set(state: WorldState, i: int, radius: float) -> set[int]:
    """Indices of the other sheep within radius of sheep i (inclusive)."""
    n = state.n_sheep
    if not 0 <= i < n:
        raise IndexError(f"sheep index {i} out of range for flock of {n}")
    diff = state.sheep_pos - state.sheep_pos[i]
    d = np.sqrt((diff * diff).sum(axis=1))
    idx = np.nonzero(d <= radius)[0]
    return {int(j) for j in idx if j != i}


def all_forces(
    state: WorldState, cfg: WorldConfig, kernel=None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Raw (separation, alignment, attraction, avoidance) for every sheep."""
    k = kernel if kernel is not None else backends.active
    return k.forces(
        state.sheep_pos,
        state.sheep_prev_move,
        state.shepherd_pos,
        cfg.base_gains.sense_radius,
        cfg.norm_floor,
    )


def sheep_forces(state: WorldState, i: int, cfg: WorldConfig) -> ForceBreakdown:
    """Force breakdown for sheep i under the world's sensing radius."""
    if not 0 <= i < state.n_sheep:
        raise IndexError(f"sheep index {i} out of range for flock of {state.n_sheep}")
    sep, ali, att, avo = all_forces(state, cfg)
    return ForceBreakdown(sep[i].copy(), ali[i].copy(), att[i].copy(), avo[i].copy())


def sheep_step(state: WorldState, cfg: WorldConfig, kernel=None) -> WorldState:
    """Advance every sheep one step synchronously; the shepherd stays put.

    All sheep read the pre-step positions and previous moves, so the result
    is independent of sheep ordering.
    """
    k = kernel if kernel is not None else backends.active
    gains = cfg.gain_matrix()
    new_pos, new_move = k.step(
        state.sheep_pos,
        state.sheep_prev_move,
        state.shepherd_pos,
        gains,
        cfg.base_gains.sense_radius,
        cfg.sheep_speed_cap,
        cfg.norm_floor,
    )
    return WorldState(
        k=state.k + 1,
        sheep_pos=new_pos,
        sheep_prev_move=new_move,
        shepherd_pos=state.shepherd_pos.copy(),
    )


def clamp_norm(v: np.ndarray, cap: float) -> np.ndarray:
    """Scale v down to norm cap if it exceeds it (direction preserved)."""
    n = math.sqrt(v[0] * v[0] + v[1] * v[1])
    if n > cap:
        s = cap / n
        return np.array([v[0] * s, v[1] * s])
    return v
