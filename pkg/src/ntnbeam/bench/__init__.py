"""Experiment configuration, scenario runner, complexity counts and CLI."""

from ntnbeam.bench.complexity import complexity_estimate, wmmse_ops
from ntnbeam.bench.config import ConfigError, default_config, resolve
from ntnbeam.bench.scenarios import run_scenario

__all__ = ["ConfigError", "complexity_estimate", "default_config", "resolve", "run_scenario", "wmmse_ops"]
