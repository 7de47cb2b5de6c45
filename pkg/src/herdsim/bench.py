"""Monte-Carlo evaluation: success rates over seeded initial arrangements.

A scenario sweeps flock sizes, flock compositions, and policies. Within a
(size, composition) cell every policy sees the same per-trial seeds, so
methods are compared on identical initial arrangements. Seeds derive from
a stable hash of (seed_base, size, composition, trial index), which makes
whole matrices replayable and aggregation independent of execution order.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import io
import json
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

import numpy as np

from .classifier import Acquisition
from .config import (
    ConfigError,
    PolicySpec,
    WorldConfig,
    _policy_from_json,
    _policy_to_json,
    _require_mapping,
    _reject_unknown,
    _integer,
    _number,
    config_from_dict,
    config_to_dict,
)
from .core import SheepKind
from .engine import TrialResult, run_trial


@dataclass(frozen=True)
class Composition:
    """How many sheep of which kind; unlisted sheep are normal."""

    name: str
    entries: tuple[tuple[str, int, float], ...] = ()  # (mask, count, scale)

    def key(self) -> str:
        if not self.entries:
            return "normal"
        return "+".join(f"{m}x{c}@{s:g}" for m, c, s in self.entries)

    def kinds_for(self, n_sheep: int) -> tuple[SheepKind, ...]:
        kinds: list[SheepKind] = []
        for mask, count, scale in self.entries:
            kinds.extend(SheepKind(mask=mask, scale=scale) for _ in range(count))
        if len(kinds) > n_sheep:
            raise ConfigError(
                f"composition {self.name!r} assigns {len(kinds)} sheep "
                f"but the flock has {n_sheep}"
            )
        kinds.extend(SheepKind() for _ in range(n_sheep - len(kinds)))
        return tuple(kinds)


@dataclass(frozen=True)
class Gate:
    """Pass/fail check evaluated over the finished matrix."""

    kind: str  # min_rate | dominates | monotone_nonincreasing
    params: tuple[tuple[str, Any], ...]

    def get(self, key: str, default=None):
        return dict(self.params).get(key, default)


@dataclass(frozen=True)
class ScenarioSpec:
    base: WorldConfig
    flock_sizes: tuple[int, ...] = (10,)
    compositions: tuple[Composition, ...] = (Composition("normal"),)
    policies: tuple[tuple[str, PolicySpec], ...] = ()
    trials_per_cell: int = 100
    seed_base: int = 0
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if self.trials_per_cell < 1:
            raise ConfigError("trials_per_cell must be >= 1")
        if not self.policies:
            raise ConfigError("scenario needs at least one policy")
        if not self.flock_sizes:
            raise ConfigError("scenario needs at least one flock size")
        names = [n for n, _ in self.policies]
        if len(set(names)) != len(names):
            raise ConfigError("policy names must be unique")


def derive_seed(seed_base: int, n_sheep: int, composition_key: str, trial: int) -> int:
    """Stable 64-bit trial seed; identical for every policy in a cell."""
    text = f"{seed_base}|{n_sheep}|{composition_key}|{trial}"
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def trial_config(
    spec: ScenarioSpec, n_sheep: int, comp: Composition, policy: PolicySpec, trial: int
) -> WorldConfig:
    return replace(
        spec.base,
        n_sheep=n_sheep,
        kind_assignment=comp.kinds_for(n_sheep),
        policy=policy,
        rng_seed=derive_seed(spec.seed_base, n_sheep, comp.key(), trial),
    )


@dataclass
class TrialOutcome:
    success: bool
    steps_used: int
    policy_failures: int
    final_labels: Optional[np.ndarray]
    detection_steps: Optional[dict[int, int]]  # sheep -> first acquisition k


def _outcome(result: TrialResult) -> TrialOutcome:
    detections: Optional[dict[int, int]] = None
    if result.label_history is not None:
        detections = {}
        for acq in result.label_history:
            for i in np.nonzero(acq.labels)[0]:
                detections.setdefault(int(i), int(acq.k))
    return TrialOutcome(
        success=result.success,
        steps_used=result.steps_used,
        policy_failures=result.policy_failures,
        final_labels=result.final_labels,
        detection_steps=detections,
    )


def _run_one(cfg: WorldConfig) -> TrialOutcome:
    return _outcome(run_trial(cfg))


@dataclass
class ClassifierMetrics:
    precision: float
    recall: float
    f1: float
    mean_detection_step: Optional[float]


def classifier_metrics(
    outcomes: list[TrialOutcome], kinds: tuple[SheepKind, ...]
) -> ClassifierMetrics:
    """Micro-averaged discrimination quality, variant as the positive class.

    Final labels are scored against true kinds. With no variants present
    and none predicted, precision and recall are 1 by convention.
    """
    truth = np.array([k.is_variant for k in kinds], dtype=bool)
    tp = fp = fn = 0
    detection_steps: list[int] = []
    for out in outcomes:
        if out.final_labels is None:
            raise ValueError("classifier metrics need trials with label history")
        pred = out.final_labels
        tp += int((pred & truth).sum())
        fp += int((pred & ~truth).sum())
        fn += int((~pred & truth).sum())
        if out.detection_steps:
            for i in np.nonzero(truth)[0]:
                if int(i) in out.detection_steps:
                    detection_steps.append(out.detection_steps[int(i)])
    precision = 1.0 if (tp + fp) == 0 else tp / (tp + fp)
    recall = 1.0 if (tp + fn) == 0 else tp / (tp + fn)
    f1 = 0.0 if (precision + recall) == 0 else 2 * precision * recall / (precision + recall)
    mean_det = float(np.mean(detection_steps)) if detection_steps else None
    return ClassifierMetrics(precision, recall, f1, mean_det)


@dataclass
class CellSummary:
    n_sheep: int
    composition: str
    policy: str
    trials: int
    successes: int
    success_rate: float
    mean_steps_success: Optional[float]
    median_steps_success: Optional[float]
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None
    mean_detection_step: Optional[float] = None


def _summarize(
    spec: ScenarioSpec,
    n_sheep: int,
    comp: Composition,
    policy_name: str,
    outcomes: list[TrialOutcome],
) -> CellSummary:
    successes = sum(1 for o in outcomes if o.success)
    steps = [o.steps_used for o in outcomes if o.success]
    summary = CellSummary(
        n_sheep=n_sheep,
        composition=comp.name,
        policy=policy_name,
        trials=len(outcomes),
        successes=successes,
        success_rate=successes / len(outcomes),
        mean_steps_success=float(np.mean(steps)) if steps else None,
        median_steps_success=float(np.median(steps)) if steps else None,
    )
    if outcomes and outcomes[0].final_labels is not None:
        m = classifier_metrics(outcomes, comp.kinds_for(n_sheep))
        summary.precision = m.precision
        summary.recall = m.recall
        summary.f1 = m.f1
        summary.mean_detection_step = m.mean_detection_step
    return summary


def run_matrix(
    spec: ScenarioSpec,
    jobs: int = 1,
    progress: Optional[Callable[[str], None]] = None,
) -> list[CellSummary]:
    """Run every cell of the scenario; output order and content are
    independent of worker count."""
    tasks: list[tuple[int, WorldConfig]] = []
    index: list[tuple[int, Composition, str]] = []
    for n_sheep in spec.flock_sizes:
        for comp in spec.compositions:
            for pname, pspec in spec.policies:
                cell = len(index)
                index.append((n_sheep, comp, pname))
                for j in range(spec.trials_per_cell):
                    tasks.append((cell, trial_config(spec, n_sheep, comp, pspec, j)))

    results: dict[int, list[TrialOutcome]] = {c: [] for c in range(len(index))}
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            for (cell, _), outcome in zip(tasks, pool.map(_run_one, [c for _, c in tasks], chunksize=8)):
                results[cell].append(outcome)
    else:
        done_cell = -1
        for cell, cfg in tasks:
            if progress is not None and cell != done_cell:
                n_sheep, comp, pname = index[cell]
                progress(f"cell n={n_sheep} composition={comp.name} policy={pname}")
                done_cell = cell
            results[cell].append(_run_one(cfg))

    summaries = []
    for cell, (n_sheep, comp, pname) in enumerate(index):
        summaries.append(_summarize(spec, n_sheep, comp, pname, results[cell]))
        if progress is not None:
            s = summaries[-1]
            progress(
                f"  -> n={s.n_sheep} {s.composition}/{s.policy}: "
                f"rate={s.success_rate:.2f} ({s.successes}/{s.trials})"
            )
    return summaries


# ---------------------------------------------------------------------------
# Gates
# ---------------------------------------------------------------------------


@dataclass
class GateResult:
    description: str
    passed: bool
    detail: str


def _cells_by(summaries: list[CellSummary], policy: str) -> dict[tuple[int, str], CellSummary]:
    return {(s.n_sheep, s.composition): s for s in summaries if s.policy == policy}


def evaluate_gates(spec: ScenarioSpec, summaries: list[CellSummary]) -> list[GateResult]:
    results = []
    for gate in spec.gates:
        if gate.kind == "min_rate":
            policy = gate.get("policy")
            floor = float(gate.get("min", 0.0))
            cells = [s for s in summaries if s.policy == policy]
            bad = [s for s in cells if s.success_rate < floor]
            results.append(
                GateResult(
                    description=f"min_rate({policy} >= {floor})",
                    passed=bool(cells) and not bad,
                    detail="ok"
                    if cells and not bad
                    else "; ".join(
                        f"n={s.n_sheep} {s.composition}: {s.success_rate:.2f}" for s in bad
                    )
                    or "no cells matched",
                )
            )
        elif gate.kind == "dominates":
            better = _cells_by(summaries, gate.get("better"))
            base = _cells_by(summaries, gate.get("baseline"))
            margin = float(gate.get("margin_avg", 0.0))
            shared = sorted(set(better) & set(base))
            losses = [
                key for key in shared if better[key].success_rate < base[key].success_rate
            ]
            avg = (
                float(np.mean([better[k].success_rate - base[k].success_rate for k in shared]))
                if shared
                else 0.0
            )
            ok = bool(shared) and not losses and avg >= margin
            results.append(
                GateResult(
                    description=(
                        f"dominates({gate.get('better')} >= {gate.get('baseline')}, "
                        f"avg margin >= {margin})"
                    ),
                    passed=ok,
                    detail=f"avg margin {avg:+.3f}"
                    + ("" if not losses else f"; losses at {losses}"),
                )
            )
        elif gate.kind == "monotone_nonincreasing":
            policy = gate.get("policy")
            slack = float(gate.get("slack", 0.05))
            max_inv = int(gate.get("max_inversions", 1))
            ok = True
            details = []
            for n_sheep in spec.flock_sizes:
                rates = [
                    s.success_rate
                    for comp in spec.compositions
                    for s in summaries
                    if s.policy == policy and s.n_sheep == n_sheep and s.composition == comp.name
                ]
                inversions = [
                    rates[i + 1] - rates[i]
                    for i in range(len(rates) - 1)
                    if rates[i + 1] > rates[i]
                ]
                if len(inversions) > max_inv or any(v > slack for v in inversions):
                    ok = False
                    details.append(f"n={n_sheep}: rates {rates} inversions {inversions}")
            results.append(
                GateResult(
                    description=f"monotone_nonincreasing({policy}, slack {slack})",
                    passed=ok,
                    detail="ok" if ok else "; ".join(details),
                )
            )
        else:
            results.append(GateResult(f"unknown gate {gate.kind!r}", False, "unsupported"))
    return results


# ---------------------------------------------------------------------------
# Scenario JSON
# ---------------------------------------------------------------------------


def scenario_from_dict(obj: Any) -> ScenarioSpec:
    d = _require_mapping(obj, "scenario")
    base = config_from_dict(d.pop("base", {}))
    sizes = d.pop("flock_sizes", [base.n_sheep])
    if not isinstance(sizes, list) or not all(isinstance(s, int) for s in sizes):
        raise ConfigError("flock_sizes must be a list of integers")

    comps_raw = d.pop("compositions", [{"name": "normal", "kinds": []}])
    comps = []
    for i, entry in enumerate(comps_raw):
        cd = _require_mapping(entry, f"compositions[{i}]")
        name = cd.pop("name", f"composition{i}")
        kinds_raw = cd.pop("kinds", [])
        entries = []
        for j, kr in enumerate(kinds_raw):
            kd = _require_mapping(kr, f"compositions[{i}].kinds[{j}]")
            mask = kd.pop("mask")
            count = _integer(kd.pop("count", 1), "count")
            scale = _number(kd.pop("scale", 1.0), "scale")
            _reject_unknown(kd, f"compositions[{i}].kinds[{j}]")
            SheepKind(mask=mask, scale=scale)  # validates mask
            entries.append((mask, count, scale))
        _reject_unknown(cd, f"compositions[{i}]")
        comps.append(Composition(name=name, entries=tuple(entries)))

    pols_raw = d.pop("policies", [{"type": "fat"}])
    policies = []
    seen: dict[str, int] = {}
    for i, entry in enumerate(pols_raw):
        pd = _require_mapping(entry, f"policies[{i}]")
        name = pd.pop("name", None)
        pspec = _policy_from_json(pd, f"policies[{i}]")
        if name is None:
            name = pspec.type
            if name in seen:
                seen[name] += 1
                name = f"{name}#{seen[name]}"
            else:
                seen[name] = 1
        policies.append((name, pspec))

    gates_raw = d.pop("gates", [])
    gates = []
    for i, entry in enumerate(gates_raw):
        gd = _require_mapping(entry, f"gates[{i}]")
        kind = gd.pop("kind", None)
        if kind is None:
            raise ConfigError(f"gates[{i}] needs a kind")
        gates.append(Gate(kind=kind, params=tuple(sorted(gd.items()))))

    spec = ScenarioSpec(
        base=base,
        flock_sizes=tuple(sizes),
        compositions=tuple(comps),
        policies=tuple(policies),
        trials_per_cell=_integer(d.pop("trials_per_cell", 100), "trials_per_cell"),
        seed_base=_integer(d.pop("seed_base", 0), "seed_base"),
        gates=tuple(gates),
    )
    _reject_unknown(d, "scenario")
    return spec


def load_scenario(path: str) -> ScenarioSpec:
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
    return scenario_from_dict(raw)


# ---------------------------------------------------------------------------
# Output formats
# ---------------------------------------------------------------------------

_CSV_FIELDS = [
    "n_sheep", "composition", "policy", "trials", "successes", "success_rate",
    "mean_steps_success", "median_steps_success", "precision", "recall", "f1",
    "mean_detection_step",
]


def _cell_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summaries_csv(summaries: list[CellSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_CSV_FIELDS)
    for s in summaries:
        w.writerow([_cell_value(getattr(s, f)) for f in _CSV_FIELDS])
    return buf.getvalue()


def summaries_json(spec: ScenarioSpec, summaries: list[CellSummary]) -> str:
    doc = {
        "seed_base": spec.seed_base,
        "trials_per_cell": spec.trials_per_cell,
        "base": config_to_dict(spec.base),
        "policies": [{"name": n, **_policy_to_json(p)} for n, p in spec.policies],
        "cells": [{f: getattr(s, f) for f in _CSV_FIELDS} for s in summaries],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def summaries_markdown(spec: ScenarioSpec, summaries: list[CellSummary]) -> str:
    """Success-rate comparison table, one block per flock size."""
    lines = []
    pol_names = [n for n, _ in spec.policies]
    for n_sheep in spec.flock_sizes:
        lines.append(f"### Flock size {n_sheep}")
        lines.append("")
        lines.append("| composition | " + " | ".join(pol_names) + " |")
        lines.append("|---" * (len(pol_names) + 1) + "|")
        for comp in spec.compositions:
            row = [comp.name]
            for pname in pol_names:
                cell = next(
                    (
                        s
                        for s in summaries
                        if s.n_sheep == n_sheep
                        and s.composition == comp.name
                        and s.policy == pname
                    ),
                    None,
                )
                row.append("" if cell is None else f"{cell.success_rate:.2f}")
            lines.append("| " + " | ".join(row) + " |")
        lines.append("")
    return "\n".join(lines)
