"""Test case prioritization weighted by learned fault-proneness."""

from .data import (
    ClassFeatureVector,
    CodeUnit,
    CoverageMatrix,
    TestCase,
    TestOutcomes,
    VersionRecord,
    load_project,
    save_project,
    unit_class_scores,
)
from .defect import DefectModel, TrainConfig, TrainingSet, build_training_set, predict, predicted_bug_diagnostic, train
from .harness import ExperimentConfig, ExperimentReport, emit_report, run_experiment
from .metrics import PairedComparison, apfd, improvement, wilcoxon_signed_rank
from .prioritization import (
    PrioritizationResult,
    Strategy,
    combine_probability,
    fault_based_cover,
    prioritize,
    prioritize_additional,
    prioritize_random,
    prioritize_total,
)
from .synthetic import GenSpec, generate, generate_versions

__version__ = "0.1.0"
