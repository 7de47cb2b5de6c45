"""Shepherd movement laws.

All three policies share one primitive: steer toward the sheep of a target
subset that lies farthest from a target point, with inverse-cube separation
from the nearest sheep and unit repulsion from the target point. The
heterogeneous-flock policies differ only in how they pick the target point
and subset each step:

* fat: target the true goal over all sheep.
* collect_then_guide: while some shepherd-ignoring sheep has no responsive
  flockmate nearby, herd responsive sheep toward it; once every one is
  covered, guide the whole flock to the goal.
* classify_and_guide: guide only the sheep an online trajectory-residual
  classifier currently labels normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .classifier import Classifier
from .config import (
    ClassifyAndGuidePolicy,
    CollectThenGuidePolicy,
    FatPolicy,
    WorldConfig,
)
from .core import WorldState

COLLECTING = "collecting"
GUIDING = "guiding"


@dataclass(frozen=True)
class FatParams:
    """Gains and speed cap of the shepherd, plus optional overrides that
    redirect the policy at a point other than the goal or restrict which
    sheep may be targeted."""

    gains: tuple[float, float, float]
    speed_cap: float
    target_point: Optional[np.ndarray] = None
    target_subset: Optional[np.ndarray] = None  # ascending sheep indices


def fat_step(
    state: WorldState, params: FatParams, goal: np.ndarray, norm_floor: float
) -> np.ndarray:
    """One shepherd move: attract to the farthest targeted sheep, separate
    from the nearest sheep, repel from the target point. Ties in the
    selections go to the lowest index."""
    pos = state.sheep_pos
    target = params.target_point if params.target_point is not None else goal
    subset = params.target_subset
    if subset is None:
        cand = pos
    else:
        if len(subset) == 0:
            raise ValueError("fat_step requires a nonempty target subset")
        cand = pos[subset]

    diff_t = cand - target
    d_t = np.sqrt((diff_t * diff_t).sum(axis=1))
    t_local = int(np.argmax(d_t))
    t = t_local if subset is None else int(subset[t_local])

    sx, sy = state.shepherd_pos[0], state.shepherd_pos[1]
    diff_s = pos - state.shepherd_pos
    d_s = np.sqrt((diff_s * diff_s).sum(axis=1))
    n = int(np.argmin(d_s))

    # attraction to the farthest targeted sheep
    dx = pos[t, 0] - sx
    dy = pos[t, 1] - sy
    dist = math.sqrt(dx * dx + dy * dy)
    if dist >= norm_floor:
        a1x, a1y = dx / dist, dy / dist
    else:
        a1x = a1y = 0.0

    # inverse-cube separation from the nearest sheep
    dx = pos[n, 0] - sx
    dy = pos[n, 1] - sy
    g = d_s[n] if d_s[n] >= norm_floor else norm_floor
    inv3 = 1.0 / (g * g * g)
    a2x, a2y = -(dx * inv3), -(dy * inv3)

    # unit repulsion from the target point
    dx = target[0] - sx
    dy = target[1] - sy
    dist = math.sqrt(dx * dx + dy * dy)
    if dist >= norm_floor:
        a3x, a3y = -(dx / dist), -(dy / dist)
    else:
        a3x = a3y = 0.0

    k1, k2, k3 = params.gains
    vx = k1 * a1x + k2 * a2x + k3 * a3x
    vy = k1 * a1y + k2 * a2y + k3 * a3y
    speed = math.sqrt(vx * vx + vy * vy)
    if speed > params.speed_cap:
        s = params.speed_cap / speed
        vx *= s
        vy *= s
    return np.array([vx, vy])


def resolve_collect_phase(
    state: WorldState,
    unresponsive: np.ndarray,
    responsive: np.ndarray,
    threshold: float,
    goal: np.ndarray,
    order: str = "farthest",
) -> tuple[str, Optional[int]]:
    """Decide the phase deterministically from the current state.

    Returns (GUIDING, None) when every shepherd-ignoring sheep has a
    responsive sheep within threshold (inclusive), else (COLLECTING, u)
    where u is the uncovered one farthest from the goal (or the lowest
    index, depending on order)."""
    if len(unresponsive) == 0:
        return GUIDING, None
    diff = state.sheep_pos[unresponsive][:, None, :] - state.sheep_pos[responsive][None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    uncovered = unresponsive[d.min(axis=1) > threshold]
    if len(uncovered) == 0:
        return GUIDING, None
    if order == "lowest_index":
        return COLLECTING, int(uncovered[0])
    gdiff = state.sheep_pos[uncovered] - goal
    gd = np.sqrt((gdiff * gdiff).sum(axis=1))
    return COLLECTING, int(uncovered[int(np.argmax(gd))])


class FatController:
    """Stateless policy: plain farthest-agent targeting of the goal."""

    def __init__(self, cfg: WorldConfig):
        self.params = FatParams(gains=cfg.shepherd_gains, speed_cap=cfg.shepherd_speed_cap)
        self.goal = cfg.goal()
        self.norm_floor = cfg.norm_floor
        self.failure_steps: list[int] = []
        self.classifier = None

    def step(self, state: WorldState) -> np.ndarray:
        return fat_step(state, self.params, self.goal, self.norm_floor)


class CollectThenGuideController:
    """Two-behavior policy for flocks containing shepherd-ignoring sheep.

    A sheep counts as unresponsive when its effective avoidance gain is
    exactly zero. The phase is re-evaluated every step, so the policy drops
    back to collecting whenever an unresponsive sheep loses its escort.
    """

    def __init__(self, cfg: WorldConfig):
        spec = cfg.policy
        assert isinstance(spec, CollectThenGuidePolicy)
        k4 = cfg.gain_matrix()[:, 3]
        self.unresponsive = np.nonzero(k4 == 0.0)[0]
        self.responsive = np.nonzero(k4 != 0.0)[0]
        self.threshold = (
            spec.proximity_threshold
            if spec.proximity_threshold is not None
            else cfg.base_gains.sense_radius
        )
        self.hysteresis = spec.hysteresis
        self.order = spec.collect_order
        self.goal = cfg.goal()
        self.norm_floor = cfg.norm_floor
        self._gains = cfg.shepherd_gains
        self._cap = cfg.shepherd_speed_cap
        self.phase: Optional[str] = None
        self.collect_target: Optional[int] = None
        self.failure_steps: list[int] = []
        self.classifier = None

    def step(self, state: WorldState) -> np.ndarray:
        if len(self.responsive) == 0:
            self.failure_steps.append(state.k)
            return np.zeros(2)
        thr = self.threshold + (self.hysteresis if self.phase == GUIDING else 0.0)
        phase, target = resolve_collect_phase(
            state, self.unresponsive, self.responsive, thr, self.goal, self.order
        )
        self.phase, self.collect_target = phase, target
        if phase == GUIDING:
            params = FatParams(gains=self._gains, speed_cap=self._cap)
            return fat_step(state, params, self.goal, self.norm_floor)
        params = FatParams(
            gains=self._gains,
            speed_cap=self._cap,
            target_point=state.sheep_pos[target].copy(),
            target_subset=self.responsive,
        )
        return fat_step(state, params, self.goal, self.norm_floor)


class ClassifyAndGuideController:
    """Guide only the sheep the online classifier currently labels normal.

    Sheep labeled variant are skipped by target selection but still take
    part in nearest-sheep separation, which is physical, not label-based.
    """

    def __init__(self, cfg: WorldConfig):
        spec = cfg.policy
        assert isinstance(spec, ClassifyAndGuidePolicy)
        self.classifier = Classifier(
            n_sheep=cfg.n_sheep,
            cfg=cfg.classifier_config(),
            sheep_speed_cap=cfg.sheep_speed_cap,
            norm_floor=cfg.norm_floor,
        )
        self.goal = cfg.goal()
        self.norm_floor = cfg.norm_floor
        self._gains = cfg.shepherd_gains
        self._cap = cfg.shepherd_speed_cap
        self.failure_steps: list[int] = []

    def step(self, state: WorldState) -> np.ndarray:
        self.classifier.tick(state)
        normals = np.nonzero(~self.classifier.labels)[0]
        if len(normals) == 0:
            self.failure_steps.append(state.k)
            return np.zeros(2)
        params = FatParams(gains=self._gains, speed_cap=self._cap, target_subset=normals)
        return fat_step(state, params, self.goal, self.norm_floor)


class ScriptedController:
    """Replays a fixed sequence of shepherd moves (one per step).

    Lets a recorded shepherd path be driven through the engine again, e.g.
    to verify the sheep dynamics are unaffected by how the moves were
    produced.
    """

    def __init__(self, moves: np.ndarray):
        self.moves = np.asarray(moves, dtype=np.float64)
        self.failure_steps: list[int] = []
        self.classifier = None
        self._i = 0

    def step(self, state: WorldState) -> np.ndarray:
        if self._i >= len(self.moves):
            return np.zeros(2)
        move = self.moves[self._i]
        self._i += 1
        return move


def build_controller(cfg: WorldConfig):
    if isinstance(cfg.policy, FatPolicy):
        return FatController(cfg)
    if isinstance(cfg.policy, CollectThenGuidePolicy):
        return CollectThenGuideController(cfg)
    if isinstance(cfg.policy, ClassifyAndGuidePolicy):
        return ClassifyAndGuideController(cfg)
    raise TypeError(f"unknown policy spec {cfg.policy!r}")
