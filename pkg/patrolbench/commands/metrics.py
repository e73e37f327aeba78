# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import argparse
import glob
import os

from rich.table import Table

import patrolbench
from ..errors import ConfigError
from ..metrics import build_report, write_series_csv, write_summary_json
from ..world import load_event_log
from . import defaults
from .utils import add_experiment_args, check_experiment_flag, load_cli_experiment, output_dir, report_tail_start

console = patrolbench.__console__


class MetricsCommand:
    """
    Executes the ``metrics`` command which recomputes metric series and summaries from saved event logs.

    Logs are replayed on the experiment's graph, so a log that does not match the instance is
    rejected. Without ``--log`` every log under ``<out>/logs`` is recomputed.

    Optional arguments:
        - ``--config``: The experiment file (graph, tail start and precision).
        - ``--log``: A single event log to recompute.
        - ``--out``: Overrides the output directory.

    Example usage::

        patrolcli metrics --config patrolbench/instances/experiments/sigma2.yaml --log results/sigma2/logs/rep_000.jsonl
    """

    @staticmethod
    def run(cli):
        r"""Recomputes metrics from event logs."""
        experiment = load_cli_experiment(cli.config)
        graph = experiment.load_graph()
        if cli.config.get("log"):
            paths = [os.path.expanduser(cli.config.log)]
        else:
            paths = sorted(glob.glob(os.path.join(output_dir(experiment), defaults.files.logs, "*.jsonl")))
        if not paths:
            raise ConfigError("no event logs found; pass --log or run simulate first")

        precision = experiment.metrics.precision
        metrics_dir = output_dir(experiment, defaults.files.metrics)
        table = Table(show_footer=False, pad_edge=False, box=None, expand=False)
        table.add_column("[overline white]LOG", style="bold white")
        table.add_column("[overline white]AGI", style="cyan")
        table.add_column("[overline white]WI", style="cyan")
        table.add_column("[overline white]TAIL WI", style="green")
        for path in paths:
            if not os.path.isfile(path):
                raise ConfigError("event log {} does not exist".format(path))
            log = load_event_log(graph, path)
            T = min(report_tail_start(experiment), log.horizon)
            report = build_report(log, T=T)
            stem = os.path.splitext(os.path.basename(path))[0]
            write_series_csv(report, os.path.join(metrics_dir, stem + ".csv"), precision)
            write_summary_json(report, os.path.join(metrics_dir, stem + ".json"), precision)
            patrolbench.logging.success("wrote", os.path.join(metrics_dir, stem + ".json"))
            summary = report.summary(precision)
            table.add_row(stem, summary["agi"], summary["wi"], summary["tail_wi"])
        console.print(table)

    @staticmethod
    def check_config(config: "patrolbench.config"):
        check_experiment_flag(config)

    @staticmethod
    def add_args(parser: argparse.ArgumentParser):
        metrics_parser = parser.add_parser(
            "metrics", help="""Recompute metrics from saved event logs."""
        )
        metrics_parser.add_argument(
            "--log",
            type=str,
            default=None,
            help="""Event log to recompute; every log under <out>/logs by default.""",
        )
        add_experiment_args(metrics_parser)
