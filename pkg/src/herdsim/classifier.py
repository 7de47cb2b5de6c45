"""Online discrimination of atypical sheep from trajectory residuals.

The shepherd snapshots all sheep positions, replays the flock forward with
the estimated normal-sheep gains and its own recorded path, and compares
the prediction against the actual positions at the next acquisition. Sheep
whose residual exceeds the threshold are labeled variant. The classifier
sees only positions and movement vectors, never the true sheep kinds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backends
from .config import ClassifierConfig, ThresholdRule
from .core import GainVector, WorldState


def predict_window(
    snapshot_pos: np.ndarray,
    snapshot_prev: np.ndarray,
    estimated_gains: GainVector,
    shepherd_path: list[np.ndarray],
    horizon: int,
    sheep_speed_cap: float,
    norm_floor: float,
    kernel=None,
) -> np.ndarray:
    """Positions after simulating all sheep `horizon` steps as if normal.

    shepherd_path[h] is the shepherd position the sheep saw at step h of
    the window, so its length must equal the horizon.
    """
    if len(shepherd_path) != horizon:
        raise ValueError(f"shepherd_path has {len(shepherd_path)} entries, expected {horizon}")
    k = kernel if kernel is not None else backends.active
    n = snapshot_pos.shape[0]
    gains = np.tile(estimated_gains.as_array(), (n, 1))
    pos = snapshot_pos.copy()
    prev = snapshot_prev.copy()
    for h in range(horizon):
        pos, prev = k.step(
            pos,
            prev,
            shepherd_path[h],
            gains,
            estimated_gains.sense_radius,
            sheep_speed_cap,
            norm_floor,
        )
    return pos


def update_labels(
    errors: np.ndarray, rule: ThresholdRule, abs_floor: float, latch: bool, prior: np.ndarray
) -> np.ndarray:
    """Label sheep whose residual strictly exceeds the threshold.

    The adaptive rule sets the threshold from the whole flock's residuals
    (median plus c times the median absolute deviation, floored at
    abs_floor), which tolerates a variant minority inflating the tail.
    """
    if rule.kind == "fixed":
        theta = rule.value
    else:
        med = float(np.median(errors))
        mad = float(np.median(np.abs(errors - med)))
        theta = max(abs_floor, med + rule.value * mad)
    labels = errors > theta
    if latch:
        labels |= prior
    return labels


@dataclass
class Acquisition:
    """One periodic observation: residuals and the labels they produced."""

    k: int
    errors: np.ndarray
    labels: np.ndarray  # True = variant


class Classifier:
    """Periodic predict-and-compare labeler driven once per simulation step."""

    def __init__(
        self, n_sheep: int, cfg: ClassifierConfig, sheep_speed_cap: float, norm_floor: float
    ):
        if cfg.estimated_gains is None:
            raise ValueError("classifier needs resolved estimated gains")
        self.cfg = cfg
        self.sheep_speed_cap = sheep_speed_cap
        self.norm_floor = norm_floor
        self.labels = np.zeros(n_sheep, dtype=bool)
        self.last_errors = np.zeros(n_sheep)
        self.history: list[Acquisition] = []
        self._snapshot_pos: np.ndarray | None = None
        self._snapshot_prev: np.ndarray | None = None
        self._path: list[np.ndarray] = []

    def tick(self, state: WorldState) -> None:
        """Call exactly once per simulation step, before the sheep move."""
        if self._snapshot_pos is None:
            self._snapshot_pos = state.sheep_pos.copy()
            self._snapshot_prev = state.sheep_prev_move.copy()
        elif len(self._path) == self.cfg.observation_period:
            predicted = predict_window(
                self._snapshot_pos,
                self._snapshot_prev,
                self.cfg.estimated_gains,
                self._path,
                self.cfg.observation_period,
                self.sheep_speed_cap,
                self.norm_floor,
            )
            resid = predicted - state.sheep_pos
            self.last_errors = np.sqrt((resid * resid).sum(axis=1))
            self.labels = update_labels(
                self.last_errors,
                self.cfg.threshold,
                self.cfg.abs_floor,
                self.cfg.latch,
                self.labels,
            )
            self.history.append(Acquisition(state.k, self.last_errors.copy(), self.labels.copy()))
            self._snapshot_pos = state.sheep_pos.copy()
            self._snapshot_prev = state.sheep_prev_move.copy()
            self._path = []
        self._path.append(state.shepherd_pos.copy())
