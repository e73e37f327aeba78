# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import argparse
import os

from rich.table import Table

import patrolbench
from ..oracle import verify_discretization, verify_horizon_invariance
from ..rational import rational_to_str
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


class VerifyCommand:
    """
    Executes the ``verify`` command which checks the discretization bound and the tail-start invariance on an instance.

    The discretization check compares the certified optimum at ``mdp.delta`` with the one at
    ``verify.delta_ref`` (a quarter of ``mdp.delta`` by default) against the slack ``2 w_max delta``.
    When ``verify.T_values`` is not empty, the optimum is also computed for every listed tail
    start and must agree for all of them past the transient threshold.

    Optional arguments:
        - ``--config``: The experiment file.
        - ``--out``: Overrides the output directory.
        - ``--jobs``: Searches root decisions on worker processes.

    Example usage::

        patrolcli verify --config patrolbench/instances/experiments/two_node_verify.yaml

    Note:
        ``verify.json`` is written before the exit status is decided; a failed check exits with 3.
    """

    @staticmethod
    def run(cli):
        r"""Runs the verification checks."""
        experiment = load_cli_experiment(cli.config)
        graph = experiment.load_graph()
        p0 = experiment.start_poses(graph)
        bounds = experiment.oracle.bounds()
        pool = make_pool(experiment)
        reports = [
            verify_discretization(
                graph,
                experiment.robots,
                p0,
                experiment.mdp.delta,
                experiment.delta_ref(),
                experiment.mdp.kappa_max,
                T=experiment.mdp.T,
                bounds=bounds,
                pool=pool,
            )
        ]
        if experiment.verify.T_values:
            reports.append(
                verify_horizon_invariance(
                    graph,
                    experiment.robots,
                    p0,
                    experiment.mdp.delta,
                    experiment.mdp.kappa_max,
                    experiment.verify.T_values,
                    bounds=bounds,
                    pool=pool,
                )
            )
        write_json(
            os.path.join(output_dir(experiment), defaults.files.verify),
            {
                "experiment": experiment.name,
                "delta": rational_to_str(experiment.mdp.delta),
                "passed": all(r.passed for r in reports),
                "reports": [r.to_dict() for r in reports],
            },
        )

        table = Table(show_footer=False, pad_edge=False, box=None, expand=False)
        table.add_column("[overline white]CHECK", style="bold white")
        table.add_column("[overline white]RESULT", style="white")
        for report in reports:
            table.add_row(report.name, "[green]pass[/green]" if report.passed else "[red]fail[/red]")
        console.print(table)

        for report in reports:
            report.require()

    @staticmethod
    def check_config(config: "patrolbench.config"):
        check_experiment_flag(config)

    @staticmethod
    def add_args(parser: argparse.ArgumentParser):
        verify_parser = parser.add_parser(
            "verify", help="""Check the discretization bound and tail-start invariance."""
        )
        add_experiment_args(verify_parser)
