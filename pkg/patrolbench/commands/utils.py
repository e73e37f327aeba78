# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import argparse
import json
import os
import sys
from typing import Any, Dict, Optional

import patrolbench
from ..errors import ConfigError
from ..rational import Rational, format_decimal, is_infinite, rational_to_str
from ..schema import ExperimentConfig, load_experiment
from . import defaults

console = patrolbench.__console__


def add_experiment_args(parser: argparse.ArgumentParser):
    r"""Flags shared by every subcommand: the experiment file, its run overrides and logging."""
    parser.add_argument(
        "--config",
        type=str,
        default=None,
        help="""Experiment file (yaml or json).""",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="""Overrides the experiment seed.""",
    )
    parser.add_argument(
        "--out",
        type=str,
        default=None,
        help="""Overrides the output directory.""",
    )
    parser.add_argument(
        "--jobs",
        type=int,
        default=None,
        help="""Overrides the number of worker processes.""",
    )
    patrolbench.logging.add_args(parser)


def check_experiment_flag(config: "patrolbench.config"):
    if not config.get("config"):
        console.print(":cross_mark:[red]--config is required for {}[/red]".format(config.command))
        sys.exit(2)
    if config.get("jobs") is not None and config.jobs < 1:
        console.print(":cross_mark:[red]--jobs must be at least 1[/red]")
        sys.exit(2)


def load_cli_experiment(config: "patrolbench.config") -> ExperimentConfig:
    r"""Loads ``--config`` and applies the ``--seed``, ``--out`` and ``--jobs`` overrides."""
    if not config.get("config"):
        raise ConfigError("--config is required")
    experiment = load_experiment(config.config)
    if config.get("seed") is not None:
        experiment.seed = config.seed
    if config.get("out") is not None:
        experiment.output = config.out
    if config.get("jobs") is not None:
        experiment.jobs = config.jobs
    return experiment


def output_dir(experiment: ExperimentConfig, *parts: str) -> str:
    path = os.path.join(os.path.expanduser(experiment.output or defaults.output), *parts)
    os.makedirs(path, exist_ok=True)
    return path


def make_pool(experiment: ExperimentConfig) -> "patrolbench.RolloutPool":
    return patrolbench.RolloutPool(jobs=experiment.jobs)


def exact_value(value: Rational, precision: int) -> Dict[str, str]:
    return {"value": format_decimal(value, precision), "exact": rational_to_str(value)}


def write_json(path: str, data: Any):
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    patrolbench.logging.success("wrote", path)


def read_json(path: str) -> Optional[Dict[str, Any]]:
    if not os.path.isfile(path):
        return None
    with open(path) as f:
        return json.load(f)


def report_tail_start(experiment: ExperimentConfig) -> Rational:
    r"""Tail start used by reports: ``mdp.T``, clipped to the horizon (an infinite T reports the last instant)."""
    T = experiment.mdp.T
    if is_infinite(T) or T > experiment.horizon:
        return experiment.horizon
    return T
