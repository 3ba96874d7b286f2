"""Experiment harness: configs, replicated runs, statistics and plots."""

from .analysis import best_so_far_curve, curves_svg, phase_histogram
from .config import ExperimentConfig, load_config, parse_config
from .runner import SummaryTable, analyze, compare, load_experiment, run_experiment
from .stats import bonferroni, mann_whitney_u

__all__ = [
    "ExperimentConfig", "SummaryTable", "analyze", "best_so_far_curve", "bonferroni",
    "compare", "curves_svg", "load_config", "load_experiment", "mann_whitney_u",
    "parse_config", "phase_histogram", "run_experiment",
]
