"""Configured experiments, reports and plots."""

from capops.harness.config import ConfigError, ExperimentConfig, load_config, parse_config_text
from capops.harness.experiments import run_experiment
from capops.harness.report import ExperimentReport, Verdict, load_report

__all__ = ["ConfigError", "ExperimentConfig", "ExperimentReport", "Verdict", "load_config",
           "load_report", "parse_config_text", "run_experiment"]
