# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import argparse
import os
from typing import Any, Dict

from rich.tree import Tree

import patrolbench
from ..oracle import OracleResult, exact_optimum
from ..rational import format_decimal, rational_to_str
from ..schema import ExperimentConfig
from . import defaults
from .utils import (
    add_experiment_args,
    check_experiment_flag,
    load_cli_experiment,
    make_pool,
    output_dir,
    write_json,
)

console = patrolbench.__console__


def oracle_report(experiment: ExperimentConfig, result: OracleResult) -> Dict[str, Any]:
    report = result.to_dict()
    report.update(
        {
            "experiment": experiment.name,
            "graph": os.path.basename(experiment.graph),
            "robots": experiment.robots,
            "delta": rational_to_str(experiment.mdp.delta),
            "kappa_max": experiment.mdp.kappa_max,
            "T": rational_to_str(experiment.mdp.T),
        }
    )
    return report


class OracleCommand:
    """
    Executes the ``oracle`` command which computes the exact optimum of the discretized problem.

    The search runs from the configured start poses with the configured waiting quantum and
    longest wait, bounded by ``oracle.depth_cap`` and the optional ``oracle.latency_cap``. The
    certificate report ``oracle.json`` holds the optimum, whether it is certified, the search
    statistics and a periodic strategy attaining the optimum.

    Optional arguments:
        - ``--config``: The experiment file.
        - ``--out``: Overrides the output directory.
        - ``--jobs``: Searches the root decisions on worker processes.

    Example usage::

        patrolcli oracle --config patrolbench/instances/experiments/triangle_oracle.yaml

    Note:
        An uncertified result is still written; ``certified`` is false when a cap cut a branch.
    """

    @staticmethod
    def run(cli):
        r"""Computes the exact optimum."""
        experiment = load_cli_experiment(cli.config)
        graph = experiment.load_graph()
        result = exact_optimum(
            graph,
            experiment.robots,
            experiment.mdp.delta,
            experiment.mdp.kappa_max,
            experiment.start_poses(graph),
            experiment.mdp.T,
            bounds=experiment.oracle.bounds(),
            pool=make_pool(experiment),
        )
        write_json(os.path.join(output_dir(experiment), defaults.files.oracle), oracle_report(experiment, result))

        precision = experiment.metrics.precision
        root = Tree("[bold white]{}[/bold white]".format(experiment.name))
        root.add("[white]J*[/white] [green]{}[/green]".format(format_decimal(result.j_star, precision)))
        root.add(
            "[white]certified[/white] {}".format(
                "[green]yes[/green]" if result.certified else "[red]no[/red]"
            )
        )
        root.add("[white]nodes expanded[/white] [cyan]{}[/cyan]".format(result.nodes_expanded))
        if result.strategy is not None:
            root.add(
                "[white]period[/white] [cyan]{}[/cyan] from t=[cyan]{}[/cyan]".format(
                    format_decimal(result.strategy.period, precision),
                    format_decimal(result.strategy.start, precision),
                )
            )
        console.print(root)

    @staticmethod
    def check_config(config: "patrolbench.config"):
        check_experiment_flag(config)

    @staticmethod
    def add_args(parser: argparse.ArgumentParser):
        oracle_parser = parser.add_parser(
            "oracle", help="""Compute the certified optimum of the discretized problem."""
        )
        add_experiment_args(oracle_parser)
