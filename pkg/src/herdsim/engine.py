"""Deterministic trial loop: seeded placement, stepping, termination, export.

A trial is a pure function of its WorldConfig. Initial sheep positions come
from a counter-based Philox stream keyed by rng_seed (draw order = sheep
index), so replays are portable. Within a step the order is fixed: check
success, compute the shepherd move from the step-k state, move the sheep
(they read the step-k shepherd position), then move the shepherd.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import backends
from .classifier import Acquisition
from .config import WorldConfig, config_to_dict
from .core import WorldState, vec2
from .policies import build_controller


class PlacementError(RuntimeError):
    """Initial placement failed: region too degenerate for the flock size."""


REDRAW_ATTEMPTS = 1000


def init_world(cfg: WorldConfig) -> WorldState:
    """Seeded initial state: sheep i.i.d. uniform over the init region,
    redrawn while closer than norm_floor to an already-placed sheep."""
    rng = np.random.Generator(np.random.Philox(key=cfg.rng_seed))
    lo = cfg.init_region.lo
    span = cfg.init_region.hi - lo
    n = cfg.n_sheep
    pos = np.empty((n, 2))
    for i in range(n):
        for _ in range(REDRAW_ATTEMPTS):
            p = lo + span * rng.random(2)
            if i == 0:
                break
            diff = pos[:i] - p
            if np.sqrt((diff * diff).sum(axis=1)).min() >= cfg.norm_floor:
                break
        else:
            raise PlacementError(
                f"could not place sheep {i} after {REDRAW_ATTEMPTS} redraws; "
                "init_region is too small for the flock"
            )
        pos[i] = p
    return WorldState(
        k=0,
        sheep_pos=pos,
        sheep_prev_move=np.zeros((n, 2)),
        shepherd_pos=vec2(*cfg.shepherd_init),
    )


def _score_indices(cfg: WorldConfig) -> Optional[np.ndarray]:
    if cfg.score_subset == "all":
        return None
    normal = np.array([k.is_normal for k in cfg.kinds()], dtype=bool)
    return np.nonzero(normal)[0]


def success_condition(state: WorldState, cfg: WorldConfig) -> bool:
    """All scored sheep within goal_radius of the goal center (inclusive)."""
    idx = _score_indices(cfg)
    pos = state.sheep_pos if idx is None else state.sheep_pos[idx]
    if pos.shape[0] == 0:
        return True
    diff = pos - cfg.goal()
    d = np.sqrt((diff * diff).sum(axis=1))
    return bool((d <= cfg.goal_radius).all())


@dataclass
class Trajectory:
    """Recorded per-step positions; row t corresponds to time index ks[t]."""

    ks: np.ndarray  # (T,)
    sheep: np.ndarray  # (T, n, 2)
    shepherd: np.ndarray  # (T, 2)
    labels: Optional[np.ndarray] = None  # (T, n) bool, True = variant


@dataclass
class TrialResult:
    success: bool
    steps_used: int
    final_state: WorldState
    policy_failures: int = 0
    first_failure_step: Optional[int] = None
    label_history: Optional[list[Acquisition]] = None
    final_labels: Optional[np.ndarray] = None
    trajectory: Optional[Trajectory] = None


def run_trial(
    cfg: WorldConfig,
    record_trajectory: bool = False,
    initial_state: Optional[WorldState] = None,
    controller=None,
) -> TrialResult:
    """Run one trial to success or the time limit.

    initial_state and controller exist for replay-style experiments; by
    default both derive from the config, keeping the trial a pure function
    of it.
    """
    state = initial_state.copy() if initial_state is not None else init_world(cfg)
    if controller is None:
        controller = build_controller(cfg)
    kernel = backends.active
    gains = cfg.gain_matrix()
    radius = cfg.base_gains.sense_radius
    cap = cfg.sheep_speed_cap
    floor = cfg.norm_floor

    rec_ks: list[int] = []
    rec_sheep: list[np.ndarray] = []
    rec_shep: list[np.ndarray] = []
    rec_labels: list[np.ndarray] = []
    classifier = getattr(controller, "classifier", None)

    def record(st: WorldState) -> None:
        rec_ks.append(st.k)
        rec_sheep.append(st.sheep_pos.copy())
        rec_shep.append(st.shepherd_pos.copy())
        if classifier is not None:
            rec_labels.append(classifier.labels.copy())

    success = False
    steps = cfg.time_limit
    for k in range(cfg.time_limit):
        if success_condition(state, cfg):
            success = True
            steps = k
            break
        move = controller.step(state)
        if record_trajectory:
            record(state)
        new_pos, new_move = kernel.step(
            state.sheep_pos, state.sheep_prev_move, state.shepherd_pos,
            gains, radius, cap, floor,
        )
        state = WorldState(
            k=state.k + 1,
            sheep_pos=new_pos,
            sheep_prev_move=new_move,
            shepherd_pos=state.shepherd_pos + move,
        )
    else:
        success = success_condition(state, cfg)
        steps = cfg.time_limit

    trajectory = None
    if record_trajectory:
        record(state)
        trajectory = Trajectory(
            ks=np.array(rec_ks),
            sheep=np.stack(rec_sheep),
            shepherd=np.stack(rec_shep),
            labels=np.stack(rec_labels) if classifier is not None else None,
        )

    failures = getattr(controller, "failure_steps", [])
    return TrialResult(
        success=success,
        steps_used=steps,
        final_state=state,
        policy_failures=len(failures),
        first_failure_step=failures[0] if failures else None,
        label_history=list(classifier.history) if classifier is not None else None,
        final_labels=classifier.labels.copy() if classifier is not None else None,
        trajectory=trajectory,
    )


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def trajectory_csv(traj: Trajectory) -> str:
    """CSV rows k,agent_id,role,x,y,label for every recorded step.

    The label column carries the classifier's current verdict for sheep
    rows when a classifier ran, and is empty otherwise.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "agent_id", "role", "x", "y", "label"])
    n = traj.sheep.shape[1]
    for t, k in enumerate(traj.ks):
        for i in range(n):
            label = ""
            if traj.labels is not None:
                label = "variant" if traj.labels[t, i] else "normal"
            w.writerow([int(k), i, "sheep", repr(float(traj.sheep[t, i, 0])),
                        repr(float(traj.sheep[t, i, 1])), label])
        w.writerow([int(k), 0, "shepherd", repr(float(traj.shepherd[t, 0])),
                    repr(float(traj.shepherd[t, 1])), ""])
    return buf.getvalue()


def label_history_csv(history: list[Acquisition]) -> str:
    """Per-acquisition classifier residuals: k,sheep_id,error,label."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "sheep_id", "error", "label"])
    for acq in history:
        for i in range(len(acq.errors)):
            w.writerow([acq.k, i, repr(float(acq.errors[i])),
                        "variant" if acq.labels[i] else "normal"])
    return buf.getvalue()


def _state_to_dict(state: WorldState) -> dict:
    return {
        "k": state.k,
        "sheep_pos": state.sheep_pos.tolist(),
        "sheep_prev_move": state.sheep_prev_move.tolist(),
        "shepherd_pos": state.shepherd_pos.tolist(),
    }


def result_to_dict(result: TrialResult, cfg: WorldConfig) -> dict:
    out = {
        "success": result.success,
        "steps_used": result.steps_used,
        "final_state": _state_to_dict(result.final_state),
        "policy_failures": result.policy_failures,
        "first_failure_step": result.first_failure_step,
        "config": config_to_dict(cfg),
    }
    if result.final_labels is not None:
        out["final_labels"] = ["variant" if v else "normal" for v in result.final_labels]
        out["acquisitions"] = len(result.label_history or [])
    return out


def result_json(result: TrialResult, cfg: WorldConfig) -> str:
    return json.dumps(result_to_dict(result, cfg), indent=2, sort_keys=True) + "\n"
