"""World configuration: defaults, strict JSON (de)serialization, overrides.

The JSON schema is strict: unknown fields are rejected with an error that
names the offending field, so a typo in an experiment config fails loudly
instead of silently running with defaults.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Union

import numpy as np

from .core import GainVector, Rect, SheepKind, vec2

# Identifier of the counter-based generator used for initial placement.
# Replays are portable to any implementation of the same stream.
RNG_ALGORITHM = "philox4x64"

SCORE_SUBSETS = ("all", "normal_only")
COLLECT_ORDERS = ("farthest", "lowest_index")


class ConfigError(ValueError):
    """Raised for malformed configs; the message names the bad field."""


@dataclass(frozen=True)
class ThresholdRule:
    """Classifier decision threshold: adaptive(c) scales a robust spread
    statistic, fixed(d) is an absolute distance."""

    kind: str  # "adaptive" | "fixed"
    value: float

    def __post_init__(self):
        if self.kind not in ("adaptive", "fixed"):
            raise ConfigError(f"threshold kind must be adaptive or fixed, got {self.kind!r}")
        if not math.isfinite(self.value) or self.value <= 0:
            raise ConfigError("threshold value must be finite and > 0")


@dataclass(frozen=True)
class ClassifierConfig:
    observation_period: int = 15
    estimated_gains: Optional[GainVector] = None  # None: use the world's base gains
    threshold: ThresholdRule = field(default_factory=lambda: ThresholdRule("adaptive", 3.0))
    abs_floor: float = 0.05
    latch: bool = False

    def __post_init__(self):
        if self.observation_period < 1:
            raise ConfigError("observation_period must be >= 1")
        if not math.isfinite(self.abs_floor) or self.abs_floor < 0:
            raise ConfigError("abs_floor must be finite and >= 0")


@dataclass(frozen=True)
class FatPolicy:
    type: str = "fat"


@dataclass(frozen=True)
class CollectThenGuidePolicy:
    type: str = "collect_then_guide"
    proximity_threshold: Optional[float] = None  # None: world sense_radius
    collect_order: str = "farthest"
    hysteresis: float = 0.0

    def __post_init__(self):
        if self.proximity_threshold is not None and not (
            math.isfinite(self.proximity_threshold) and self.proximity_threshold > 0
        ):
            raise ConfigError("proximity_threshold must be finite and > 0")
        if self.collect_order not in COLLECT_ORDERS:
            raise ConfigError(f"collect_order must be one of {COLLECT_ORDERS}")
        if not math.isfinite(self.hysteresis) or self.hysteresis < 0:
            raise ConfigError("hysteresis must be finite and >= 0")


@dataclass(frozen=True)
class ClassifyAndGuidePolicy:
    type: str = "classify_and_guide"
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)


PolicySpec = Union[FatPolicy, CollectThenGuidePolicy, ClassifyAndGuidePolicy]


@dataclass(frozen=True)
class WorldConfig:
    """Full description of one trial; every run is a pure function of this."""

    n_sheep: int = 10
    base_gains: GainVector = field(
        default_factory=lambda: GainVector(k1=3.0, k2=1.0, k3=1.0, k4=3.0, sense_radius=5.0)
    )
    kind_assignment: Optional[tuple[SheepKind, ...]] = None  # None: all normal
    goal_center: tuple[float, float] = (60.0, 60.0)
    goal_radius: float = 10.0
    time_limit: int = 4000
    sheep_speed_cap: float = 1.0
    shepherd_speed_cap: float = 1.5
    norm_floor: float = 1e-9
    shepherd_gains: tuple[float, float, float] = (2.0, 0.5, 0.5)
    init_region: Rect = field(default_factory=lambda: Rect(0.0, 20.0, 0.0, 20.0))
    shepherd_init: tuple[float, float] = (-5.0, -5.0)
    rng_seed: int = 0
    rng_algorithm: str = RNG_ALGORITHM
    policy: PolicySpec = field(default_factory=FatPolicy)
    score_subset: str = "all"

    def __post_init__(self):
        if self.n_sheep < 1:
            raise ConfigError("n_sheep must be >= 1")
        if self.kind_assignment is not None and len(self.kind_assignment) != self.n_sheep:
            raise ConfigError(
                f"kind_assignment has {len(self.kind_assignment)} entries "
                f"but n_sheep is {self.n_sheep}"
            )
        if not math.isfinite(self.goal_radius) or self.goal_radius <= 0:
            raise ConfigError("goal_radius must be finite and > 0")
        if self.time_limit < 0:
            raise ConfigError("time_limit must be >= 0")
        for name in ("sheep_speed_cap", "shepherd_speed_cap", "norm_floor"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise ConfigError(f"{name} must be finite and > 0")
        if not all(math.isfinite(g) for g in self.shepherd_gains):
            raise ConfigError("shepherd_gains must be finite")
        if not all(math.isfinite(c) for c in self.goal_center):
            raise ConfigError("goal_center must be finite")
        if not all(math.isfinite(c) for c in self.shepherd_init):
            raise ConfigError("shepherd_init must be finite")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must fit in an unsigned 64-bit integer")
        if self.rng_algorithm != RNG_ALGORITHM:
            raise ConfigError(
                f"rng_algorithm must be {RNG_ALGORITHM!r}, got {self.rng_algorithm!r}"
            )
        if self.score_subset not in SCORE_SUBSETS:
            raise ConfigError(f"score_subset must be one of {SCORE_SUBSETS}")

    # ----- derived views used by the simulation ---------------------------

    def kinds(self) -> tuple[SheepKind, ...]:
        if self.kind_assignment is None:
            return tuple(SheepKind() for _ in range(self.n_sheep))
        return self.kind_assignment

    def gain_matrix(self) -> np.ndarray:
        """(n, 4) effective per-sheep gains with kind masks applied."""
        from .core import effective_gains

        rows = [effective_gains(self.base_gains, kind).as_array() for kind in self.kinds()]
        return np.array(rows)

    def goal(self) -> np.ndarray:
        return vec2(*self.goal_center)

    def classifier_config(self) -> ClassifierConfig:
        """Classifier settings with the estimated-gains default resolved."""
        if not isinstance(self.policy, ClassifyAndGuidePolicy):
            raise ConfigError("config has no classifier policy")
        cc = self.policy.classifier
        if cc.estimated_gains is None:
            cc = ClassifierConfig(
                observation_period=cc.observation_period,
                estimated_gains=self.base_gains,
                threshold=cc.threshold,
                abs_floor=cc.abs_floor,
                latch=cc.latch,
            )
        return cc


# ---------------------------------------------------------------------------
# Strict JSON parsing
# ---------------------------------------------------------------------------


def _require_mapping(obj: Any, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    return dict(obj)


def _reject_unknown(d: dict, where: str) -> None:
    if d:
        name = sorted(d.keys())[0]
        raise ConfigError(f"unknown field {name!r} in {where}")


def _number(v: Any, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where} must be a number")
    return float(v)


def _integer(v: Any, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where} must be an integer")
    return v


def _point(v: Any, where: str) -> tuple[float, float]:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(f"{where} must be a [x, y] pair")
    return (_number(v[0], where), _number(v[1], where))


def _gains_from_json(obj: Any, where: str) -> GainVector:
    d = _require_mapping(obj, where)
    try:
        gv = GainVector(
            k1=_number(d.pop("k1", 0.0), f"{where}.k1"),
            k2=_number(d.pop("k2", 0.0), f"{where}.k2"),
            k3=_number(d.pop("k3", 0.0), f"{where}.k3"),
            k4=_number(d.pop("k4", 0.0), f"{where}.k4"),
            sense_radius=_number(d.pop("sense_radius", 5.0), f"{where}.sense_radius"),
        )
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from None
    _reject_unknown(d, where)
    return gv


def _gains_to_json(g: GainVector) -> dict:
    return {"k1": g.k1, "k2": g.k2, "k3": g.k3, "k4": g.k4, "sense_radius": g.sense_radius}


def _kind_from_json(obj: Any, where: str) -> SheepKind:
    d = _require_mapping(obj, where)
    mask = d.pop("mask", "1111")
    if not isinstance(mask, str):
        raise ConfigError(f"{where}.mask must be a string of 4 binary digits")
    scale = _number(d.pop("scale", 1.0), f"{where}.scale")
    _reject_unknown(d, where)
    try:
        return SheepKind(mask=mask, scale=scale)
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from None


def _threshold_from_json(obj: Any, where: str) -> ThresholdRule:
    d = _require_mapping(obj, where)
    kind = d.pop("type", "adaptive")
    if kind == "adaptive":
        value = _number(d.pop("c", 3.0), f"{where}.c")
    elif kind == "fixed":
        if "d" not in d:
            raise ConfigError(f"{where}.d is required for a fixed threshold")
        value = _number(d.pop("d"), f"{where}.d")
    else:
        raise ConfigError(f"{where}.type must be adaptive or fixed")
    _reject_unknown(d, where)
    return ThresholdRule(kind, value)


def _classifier_from_json(obj: Any, where: str) -> ClassifierConfig:
    d = _require_mapping(obj, where)
    est = d.pop("estimated_gains", None)
    cc = ClassifierConfig(
        observation_period=_integer(d.pop("observation_period", 15), f"{where}.observation_period"),
        estimated_gains=None if est is None else _gains_from_json(est, f"{where}.estimated_gains"),
        threshold=_threshold_from_json(d.pop("threshold", {}), f"{where}.threshold"),
        abs_floor=_number(d.pop("abs_floor", 0.05), f"{where}.abs_floor"),
        latch=bool(d.pop("latch", False)),
    )
    _reject_unknown(d, where)
    return cc


def _policy_from_json(obj: Any, where: str) -> PolicySpec:
    d = _require_mapping(obj, where)
    ptype = d.pop("type", "fat")
    if ptype == "fat":
        _reject_unknown(d, where)
        return FatPolicy()
    if ptype == "collect_then_guide":
        thr = d.pop("proximity_threshold", None)
        pol = CollectThenGuidePolicy(
            proximity_threshold=None if thr is None else _number(thr, f"{where}.proximity_threshold"),
            collect_order=d.pop("collect_order", "farthest"),
            hysteresis=_number(d.pop("hysteresis", 0.0), f"{where}.hysteresis"),
        )
        _reject_unknown(d, where)
        return pol
    if ptype == "classify_and_guide":
        pol = ClassifyAndGuidePolicy(
            classifier=_classifier_from_json(d.pop("classifier", {}), f"{where}.classifier")
        )
        _reject_unknown(d, where)
        return pol
    raise ConfigError(
        f"{where}.type must be one of fat, collect_then_guide, classify_and_guide"
    )


def _policy_to_json(p: PolicySpec) -> dict:
    if isinstance(p, FatPolicy):
        return {"type": "fat"}
    if isinstance(p, CollectThenGuidePolicy):
        return {
            "type": "collect_then_guide",
            "proximity_threshold": p.proximity_threshold,
            "collect_order": p.collect_order,
            "hysteresis": p.hysteresis,
        }
    cc = p.classifier
    thr = (
        {"type": "adaptive", "c": cc.threshold.value}
        if cc.threshold.kind == "adaptive"
        else {"type": "fixed", "d": cc.threshold.value}
    )
    return {
        "type": "classify_and_guide",
        "classifier": {
            "observation_period": cc.observation_period,
            "estimated_gains": None
            if cc.estimated_gains is None
            else _gains_to_json(cc.estimated_gains),
            "threshold": thr,
            "abs_floor": cc.abs_floor,
            "latch": cc.latch,
        },
    }


def _rect_from_json(obj: Any, where: str) -> Rect:
    d = _require_mapping(obj, where)
    try:
        r = Rect(
            x_min=_number(d.pop("x_min", 0.0), f"{where}.x_min"),
            x_max=_number(d.pop("x_max", 0.0), f"{where}.x_max"),
            y_min=_number(d.pop("y_min", 0.0), f"{where}.y_min"),
            y_max=_number(d.pop("y_max", 0.0), f"{where}.y_max"),
        )
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from None
    _reject_unknown(d, where)
    return r


def config_from_dict(obj: Any) -> WorldConfig:
    d = _require_mapping(obj, "world config")
    kinds = d.pop("kind_assignment", None)
    if kinds is not None:
        if not isinstance(kinds, list):
            raise ConfigError("kind_assignment must be a list")
        kinds = tuple(
            _kind_from_json(entry, f"kind_assignment[{i}]") for i, entry in enumerate(kinds)
        )
    gains = d.pop("shepherd_gains", [2.0, 0.5, 0.5])
    if not isinstance(gains, (list, tuple)) or len(gains) != 3:
        raise ConfigError("shepherd_gains must be a [kd1, kd2, kd3] triple")
    try:
        cfg = WorldConfig(
            n_sheep=_integer(d.pop("n_sheep", 10), "n_sheep"),
            base_gains=_gains_from_json(
                d.pop("base_gains", _gains_to_json(WorldConfig().base_gains)), "base_gains"
            ),
            kind_assignment=kinds,
            goal_center=_point(d.pop("goal_center", [60.0, 60.0]), "goal_center"),
            goal_radius=_number(d.pop("goal_radius", 10.0), "goal_radius"),
            time_limit=_integer(d.pop("time_limit", 4000), "time_limit"),
            sheep_speed_cap=_number(d.pop("sheep_speed_cap", 1.0), "sheep_speed_cap"),
            shepherd_speed_cap=_number(d.pop("shepherd_speed_cap", 1.5), "shepherd_speed_cap"),
            norm_floor=_number(d.pop("norm_floor", 1e-9), "norm_floor"),
            shepherd_gains=tuple(_number(g, "shepherd_gains") for g in gains),
            init_region=_rect_from_json(
                d.pop("init_region", {"x_min": 0.0, "x_max": 20.0, "y_min": 0.0, "y_max": 20.0}),
                "init_region",
            ),
            shepherd_init=_point(d.pop("shepherd_init", [-5.0, -5.0]), "shepherd_init"),
            rng_seed=_integer(d.pop("rng_seed", 0), "rng_seed"),
            rng_algorithm=d.pop("rng_algorithm", RNG_ALGORITHM),
            policy=_policy_from_json(d.pop("policy", {"type": "fat"}), "policy"),
            score_subset=d.pop("score_subset", "all"),
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None
    _reject_unknown(d, "world config")
    return cfg


def config_to_dict(cfg: WorldConfig) -> dict:
    return {
        "n_sheep": cfg.n_sheep,
        "base_gains": _gains_to_json(cfg.base_gains),
        "kind_assignment": None
        if cfg.kind_assignment is None
        else [{"mask": k.mask, "scale": k.scale} for k in cfg.kind_assignment],
        "goal_center": list(cfg.goal_center),
        "goal_radius": cfg.goal_radius,
        "time_limit": cfg.time_limit,
        "sheep_speed_cap": cfg.sheep_speed_cap,
        "shepherd_speed_cap": cfg.shepherd_speed_cap,
        "norm_floor": cfg.norm_floor,
        "shepherd_gains": list(cfg.shepherd_gains),
        "init_region": {
            "x_min": cfg.init_region.x_min,
            "x_max": cfg.init_region.x_max,
            "y_min": cfg.init_region.y_min,
            "y_max": cfg.init_region.y_max,
        },
        "shepherd_init": list(cfg.shepherd_init),
        "rng_seed": cfg.rng_seed,
        "rng_algorithm": cfg.rng_algorithm,
        "policy": _policy_to_json(cfg.policy),
        "score_subset": cfg.score_subset,
    }


def load_config(path: str) -> WorldConfig:
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
    return config_from_dict(raw)


def save_config(cfg: WorldConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(config_to_dict(cfg), f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# Dotted-path overrides (--set key=value)
# ---------------------------------------------------------------------------


def parse_override(text: str) -> tuple[list[str], Any]:
    """Split "a.b.c=value" into a key path and a JSON-decoded value."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value")
    key, _, raw = text.partition("=")
    key = key.strip()
    if not key:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare strings are allowed unquoted
    return key.split("."), value


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply dotted-path overrides to a raw config document.

    Paths must address fields that already exist in the schema; a path that
    introduces a new key is rejected later by the strict parser, which
    names it.
    """
    out = json.loads(json.dumps(doc))  # deep copy, JSON types only
    for text in overrides:
        path, value = parse_override(text)
        node = out
        for part in path[:-1]:
            nxt = node.get(part) if isinstance(node, dict) else None
            if not isinstance(nxt, dict):
                if isinstance(node, dict):
                    node[part] = {}
                    nxt = node[part]
                else:
                    raise ConfigError(f"override path {'.'.join(path)!r} does not address an object")
            node = nxt
        if not isinstance(node, dict):
            raise ConfigError(f"override path {'.'.join(path)!r} does not address an object")
        node[path[-1]] = value
    return out
