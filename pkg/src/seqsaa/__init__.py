"""Adaptive sequential sample-average approximation for two-stage stochastic LPs."""

from .bundle import adaptive_tolerance, solve_sample_path
from .instances import builtin
from .model import (
    TwoStageInstance,
    build_extensive_form,
    evaluate_second_stage,
    load_instance,
    sample_average,
    save_instance,
)
from .sequential import Schedule, SeqConfig, run_nonterminating, run_with_stopping, true_gap, validate_candidate

__version__ = "0.1.0"

__all__ = [
    "Schedule",
    "SeqConfig",
    "TwoStageInstance",
    "adaptive_tolerance",
    "build_extensive_form",
    "builtin",
    "evaluate_second_stage",
    "load_instance",
    "run_nonterminating",
    "run_with_stopping",
    "sample_average",
    "save_instance",
    "solve_sample_path",
    "true_gap",
    "validate_candidate",
]
