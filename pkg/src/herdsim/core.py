"""Shared primitives: planar vectors, per-sheep gain parameterization, world state.

Vectors are plain float64 numpy arrays, shape (2,) for a single point and
(n, 2) for a population. World state stored here must stay finite; the
singularity guards in the force kernels rely on that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

# Force slots, in the order gains and reception masks are indexed.
SEPARATION, ALIGNMENT, ATTRACTION, AVOIDANCE = 0, 1, 2, 3
FORCE_NAMES = ("separation", "alignment", "attraction", "avoidance")

NORMAL_MASK = "1111"
UNRESPONSIVE_MASK = "1110"
# Every reception pattern that drops at least one force but not all four.
VARIANT_MASKS = tuple(
    f"{bits:04b}" for bits in range(15, 0, -1) if f"{bits:04b}" != NORMAL_MASK
)


def vec2(x: float, y: float) -> np.ndarray:
    return np.array([x, y], dtype=np.float64)


def safe_unit(v: np.ndarray, norm_floor: float) -> np.ndarray:
    """v / ||v|| when ||v|| >= norm_floor, else the zero vector."""
    n = math.sqrt(v[0] * v[0] + v[1] * v[1])
    if n >= norm_floor:
        return np.array([v[0] / n, v[1] / n])
    return np.zeros(2)


@dataclass(frozen=True)
class GainVector:
    """Force gains of one sheep plus its sensing radius.

    k1 scales separation, k2 alignment, k3 attraction, k4 shepherd
    avoidance. Negative gains are legal (they invert the force).
    """

    k1: float
    k2: float
    k3: float
    k4: float
    sense_radius: float

    def __post_init__(self):
        vals = (self.k1, self.k2, self.k3, self.k4, self.sense_radius)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("gain vector components must be finite")
        if self.sense_radius <= 0:
            raise ValueError("sense_radius must be > 0")

    def as_array(self) -> np.ndarray:
        return np.array([self.k1, self.k2, self.k3, self.k4])


@dataclass(frozen=True)
class SheepKind:
    """Which forces a sheep receives (4-bit mask) and the gain scale applied
    to the received ones.

    Mask characters are ordered separation, alignment, attraction,
    avoidance; "1111" is a normal sheep, "1110" the shepherd-ignoring kind,
    and the 14 masks that drop one to three forces are the variant kinds.
    """

    mask: str = NORMAL_MASK
    scale: float = 1.0

    def __post_init__(self):
        if len(self.mask) != 4 or any(c not in "01" for c in self.mask):
            raise ValueError(f"kind mask must be 4 binary digits, got {self.mask!r}")
        if not math.isfinite(self.scale):
            raise ValueError("kind scale must be finite")

    @property
    def is_normal(self) -> bool:
        return self.mask == NORMAL_MASK

    @property
    def is_unresponsive(self) -> bool:
        return self.mask == UNRESPONSIVE_MASK

    @property
    def is_variant(self) -> bool:
        return self.mask != NORMAL_MASK and self.mask != "0000"

    def receives(self, force: int) -> bool:
        return self.mask[force] == "1"


def effective_gains(base: GainVector, kind: SheepKind) -> GainVector:
    """Apply a kind's reception mask and scale to base gains.

    Masked-out components become exactly 0.0; received ones are multiplied
    by the kind's scale. The sensing radius is untouched.
    """
    ks = [
        base_k * kind.scale if kind.mask[i] == "1" else 0.0
        for i, base_k in enumerate((base.k1, base.k2, base.k3, base.k4))
    ]
    return replace(base, k1=ks[0], k2=ks[1], k3=ks[2], k4=ks[3])


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle used for initial sheep placement."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("init region bounds must be finite")
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise ValueError("init region must have x_max >= x_min and y_max >= y_min")

    @property
    def lo(self) -> np.ndarray:
        return np.array([self.x_min, self.y_min])

    @property
    def hi(self) -> np.ndarray:
        return np.array([self.x_max, self.y_max])


@dataclass
class WorldState:
    """Positions and previous movement vectors at one time index.

    sheep_prev_move holds each sheep's movement vector from the previous
    step (zero at k=0, which makes the alignment force vanish initially).
    """

    k: int
    sheep_pos: np.ndarray  # (n, 2)
    sheep_prev_move: np.ndarray  # (n, 2)
    shepherd_pos: np.ndarray  # (2,)

    @property
    def n_sheep(self) -> int:
        return self.sheep_pos.shape[0]

    def copy(self) -> "WorldState":
        return WorldState(
            k=self.k,
            sheep_pos=self.sheep_pos.copy(),
            sheep_prev_move=self.sheep_prev_move.copy(),
            shepherd_pos=self.shepherd_pos.copy(),
        )

    def validate(self) -> None:
        n = self.sheep_pos.shape[0]
        if self.sheep_prev_move.shape != (n, 2) or self.sheep_pos.shape != (n, 2):
            raise ValueError("sheep_pos and sheep_prev_move must both be (n, 2)")
        if self.shepherd_pos.shape != (2,):
            raise ValueError("shepherd_pos must be a 2-vector")
        if not (
            np.isfinite(self.sheep_pos).all()
            and np.isfinite(self.sheep_prev_move).all()
            and np.isfinite(self.shepherd_pos).all()
        ):
            raise ValueError("world state contains non-finite coordinates")
        if self.k < 0:
            raise ValueError("time index must be >= 0")
