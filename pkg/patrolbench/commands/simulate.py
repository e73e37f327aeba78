# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import argparse
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

from rich.table import Table

import patrolbench
from ..graph import MonitorGraph
from ..learning.dataset import build_demo_dataset, save_demo_dataset
from ..mdp import MdpConfig, MonitorEnv
from ..metrics import build_report, write_series_csv, write_summary_json
from ..policies import Policy
from ..rational import format_decimal, rational_to_str
from ..schema import ExperimentConfig
from ..world import EventLog, SegmentPlan, run_plan, save_event_log
from . import defaults
from .utils import (
    add_experiment_args,
    check_experiment_flag,
    load_cli_experiment,
    make_pool,
    output_dir,
    report_tail_start,
    write_json,
)

console = patrolbench.__console__


@dataclass(frozen=True)
class RepetitionJob:
    graph: MonitorGraph
    p0: Sequence[Any]
    horizon: Fraction
    seed: int
    config: MdpConfig
    policy: Optional[Policy] = None
    plan: Optional[SegmentPlan] = None
    cycle: Optional[SegmentPlan] = None


def run_repetition(job: RepetitionJob) -> EventLog:
    r"""One seeded rollout; scripted plans run on the world directly."""
    if job.plan is not None:
        return run_plan(job.graph, job.p0, job.plan, job.horizon, cycle=job.cycle)
    env = MonitorEnv(job.graph, job.p0, job.config)
    return env.rollout(job.policy, job.horizon, seed=job.seed).to_event_log()


def simulate_experiment(
    experiment: ExperimentConfig,
    graph: MonitorGraph,
    out_dir: str,
    policy: Optional[Policy] = None,
    pool: Optional["patrolbench.RolloutPool"] = None,
) -> Dict[str, Any]:
    r"""Runs every repetition of ``experiment`` and writes its logs, metrics and summary.

    Args:
        experiment (ExperimentConfig):
            Validated experiment.
        graph (MonitorGraph):
            Loaded instance.
        out_dir (str):
            Directory receiving ``logs/``, ``metrics/`` and the summary.
        policy (Policy, optional):
            Overrides the experiment policy (used to evaluate learned tables).
        pool (RolloutPool, optional):
            Runs repetitions in parallel.
    Returns:
        summary (Dict[str, Any]):
            Per-repetition metrics plus the mean and max tail worst idleness.
    """
    p0 = experiment.start_poses(graph)
    plan = cycle = None
    if policy is None:
        if experiment.policy.scripted:
            plan, cycle = experiment.scripted_plan(graph)
        else:
            policy = experiment.build_policy(graph)
    jobs = [
        RepetitionJob(
            graph=graph,
            p0=tuple(p0),
            horizon=experiment.horizon,
            seed=experiment.seed + i,
            config=experiment.mdp_config(),
            policy=policy,
            plan=plan,
            cycle=cycle,
        )
        for i in range(experiment.repetitions)
    ]
    pool = pool if pool is not None else make_pool(experiment)
    logs = pool.map(run_repetition, jobs, desc="rollouts")

    precision = experiment.metrics.precision
    T = report_tail_start(experiment)
    logs_dir = os.path.join(out_dir, defaults.files.logs)
    metrics_dir = os.path.join(out_dir, defaults.files.metrics)
    os.makedirs(logs_dir, exist_ok=True)
    os.makedirs(metrics_dir, exist_ok=True)

    runs: List[Dict[str, Any]] = []
    tails: List[Fraction] = []
    for i, (job, log) in enumerate(zip(jobs, logs)):
        stem = "rep_{:03d}".format(i)
        save_event_log(log, os.path.join(logs_dir, stem + ".jsonl"))
        report = build_report(log, T=T, H=experiment.horizon)
        write_series_csv(report, os.path.join(metrics_dir, stem + ".csv"), precision)
        write_summary_json(report, os.path.join(metrics_dir, stem + ".json"), precision)
        tails.append(report.tail_wi)
        runs.append(dict(report.summary(precision), rep=i, seed=job.seed, events=len(log)))
        patrolbench.logging.debug(
            "repetition", "rep={} events={} tail_wi={}".format(i, len(log), format_decimal(report.tail_wi))
        )

    summary: Dict[str, Any] = {
        "experiment": experiment.name,
        "policy": "plan" if plan is not None else policy.name,
        "repetitions": experiment.repetitions,
        "seed": experiment.seed,
        "T": rational_to_str(T),
        "horizon": rational_to_str(experiment.horizon),
        "runs": runs,
    }
    if tails:
        mean = sum(tails, Fraction(0)) / len(tails)
        summary["tail_wi"] = {
            "mean": format_decimal(mean, precision),
            "max": format_decimal(max(tails), precision),
            "exact": {"mean": rational_to_str(mean), "max": rational_to_str(max(tails))},
        }
    write_json(os.path.join(out_dir, defaults.files.summary), summary)
    return summary


def print_summary(summary: Dict[str, Any], title: str):
    table = Table(show_footer=True, pad_edge=False, box=None, expand=False, title=title)
    tail = summary.get("tail_wi", {})
    table.add_column("[overline white]REP", footer_style="overline white", style="bold white")
    table.add_column("[overline white]SEED", footer_style="overline white", style="white")
    table.add_column("[overline white]EVENTS", footer_style="overline white", style="cyan")
    table.add_column("[overline white]AGI", footer_style="overline white", style="cyan")
    table.add_column("[overline white]WI", footer_style="overline white", style="cyan")
    table.add_column(
        "[overline white]TAIL WI",
        "max {}".format(tail["max"]) if tail else "",
        footer_style="overline white",
        style="green",
    )
    for run in summary["runs"]:
        table.add_row(
            str(run["rep"]), str(run["seed"]), str(run["events"]), run["agi"], run["wi"], run["tail_wi"]
        )
    console.print(table)
    if tail:
        console.print("[bold white]mean tail WI[/bold white] [green]{}[/green]".format(tail["mean"]))
    else:
        console.print("[yellow]No repetitions requested.[/yellow]")


class SimulateCommand:
    """
    Executes the ``simulate`` command which rolls out the configured policy for every seeded repetition.

    Each repetition writes its event log under ``logs/``, an event-time series and a metric summary
    under ``metrics/``, and the run ends with ``summary.json`` holding the mean and max tail worst
    idleness. When ``dataset.episodes`` is positive a demonstration dataset is also recorded.

    Optional arguments:
        - ``--config``: The experiment file.
        - ``--seed``: Overrides the experiment seed.
        - ``--out``: Overrides the output directory.
        - ``--jobs``: Number of worker processes.

    Example usage::

        patrolcli simulate --config patrolbench/instances/experiments/sigma1.yaml --out results/sigma1

    Note:
        The same experiment and seed always produce byte-identical output files.
    """

    @staticmethod
    def run(cli):
        r"""Simulates an experiment."""
        experiment = load_cli_experiment(cli.config)
        graph = experiment.load_graph()
        out_dir = output_dir(experiment)
        pool = make_pool(experiment)
        summary = simulate_experiment(experiment, graph, out_dir, pool=pool)

        if experiment.dataset.episodes > 0:
            env = MonitorEnv(graph, experiment.start_poses(graph), experiment.mdp_config())
            dataset = build_demo_dataset(
                experiment.build_policy(graph),
                env,
                episodes=experiment.dataset.episodes,
                gamma=experiment.dataset.gamma,
                horizon=experiment.horizon,
                seed=experiment.seed,
                reward_mode=experiment.mdp.reward_mode,
                d_gpe=experiment.dataset.d_gpe,
                pool=pool,
            )
            path = os.path.join(out_dir, defaults.files.demos)
            save_demo_dataset(dataset, path)
            patrolbench.logging.success("wrote", path)

        print_summary(summary, experiment.name)

    @staticmethod
    def check_config(config: "patrolbench.config"):
        check_experiment_flag(config)

    @staticmethod
    def add_args(parser: argparse.ArgumentParser):
        simulate_parser = parser.add_parser(
            "simulate", help="""Roll out a policy for seeded repetitions and report metrics."""
        )
        add_experiment_args(simulate_parser)
