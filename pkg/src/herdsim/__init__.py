"""herdsim: deterministic shepherding simulation and benchmark toolkit."""

from .backends import active as _active_backend
from .backends import available_backends
from .bench import (
    CellSummary,
    Composition,
    ScenarioSpec,
    classifier_metrics,
    derive_seed,
    run_matrix,
)
from .classifier import Classifier, predict_window, update_labels
from .config import (
    ClassifierConfig,
    ClassifyAndGuidePolicy,
    CollectThenGuidePolicy,
    ConfigError,
    FatPolicy,
    ThresholdRule,
    WorldConfig,
    config_from_dict,
    config_to_dict,
    load_config,
)
from .core import (
    GainVector,
    Rect,
    SheepKind,
    VARIANT_MASKS,
    WorldState,
    effective_gains,
    safe_unit,
    vec2,
)
from .dynamics import ForceBreakdown, neighbor_set, sheep_forces, sheep_step
from .engine import (
    PlacementError,
    TrialResult,
    init_world,
    run_trial,
    success_condition,
)
from .policies import (
    FatParams,
    build_controller,
    fat_step,
    resolve_collect_phase,
)

__version__ = "0.1.0"


def backend_name() -> str:
    """Name of the step-kernel backend selected at import time."""
    return _active_backend.name
