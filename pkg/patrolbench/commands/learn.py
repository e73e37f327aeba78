# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import argparse
import os
from typing import Any, Dict, Optional

from rich.tree import Tree

import patrolbench
from ..errors import UnsupportedHorizonError
from ..learning.qlearn import QLearnParams, smdp_q_learn
from ..mdp import MonitorEnv
from ..rational import format_decimal, is_infinite, rational_from_str, rational_to_str, to_rational
from ..schema import ExperimentConfig
from . import defaults
from .simulate import simulate_experiment
from .utils import (
    add_experiment_args,
    check_experiment_flag,
    load_cli_experiment,
    make_pool,
    output_dir,
    read_json,
    write_json,
)

console = patrolbench.__console__


def learn_params(experiment: ExperimentConfig) -> QLearnParams:
    learn = experiment.learn
    return QLearnParams(
        gamma=learn.gamma,
        alpha=learn.alpha,
        alpha_decay=learn.alpha_decay,
        epsilon=learn.epsilon,
        epsilon_decay=learn.epsilon_decay,
        epsilon_min=learn.epsilon_min,
        state_key_cap=learn.state_key_cap,
        episode_horizon=learn.episode_horizon,
        seed=experiment.seed,
        reward_mode=experiment.mdp.reward_mode,
    )


def oracle_gap(summary: Dict[str, Any], oracle: Optional[Dict[str, Any]], precision: int) -> Optional[Dict[str, str]]:
    r"""Relative gap of the evaluated mean tail worst idleness to a saved optimum; ``None`` without both."""
    if oracle is None or "tail_wi" not in summary:
        return None
    j_star = rational_from_str(oracle["j_star"])
    if is_infinite(j_star) or j_star == 0:
        return None
    mean = to_rational(summary["tail_wi"]["exact"]["mean"])
    gap = (mean - j_star) / j_star
    return {
        "value": format_decimal(gap, precision),
        "exact": rational_to_str(gap),
        "j_star": oracle["j_star"],
    }


class LearnCommand:
    """
    Executes the ``learn`` command which trains a tabular semi-Markov Q-learner and evaluates its greedy policy.

    The table is saved as ``qtable.json``. The greedy policy is then simulated for the configured
    repetitions into ``evaluation/`` and ``learn.json`` reports the evaluation. When the output
    directory already holds an ``oracle.json`` for the instance, the relative gap to the certified
    optimum is reported as well.

    Optional arguments:
        - ``--config``: The experiment file.
        - ``--seed``: Overrides the experiment seed (learning and evaluation).
        - ``--out``: Overrides the output directory.
        - ``--jobs``: Number of worker processes for the evaluation rollouts.

    Example usage::

        patrolcli oracle --config patrolbench/instances/experiments/triangle_learn.yaml --out results/triangle
        patrolcli learn --config patrolbench/instances/experiments/triangle_learn.yaml --out results/triangle

    Note:
        Learning needs a finite tail start ``mdp.T``.
    """

    @staticmethod
    def run(cli):
        r"""Learns a Q-table and evaluates it."""
        experiment = load_cli_experiment(cli.config)
        if is_infinite(experiment.mdp.T):
            raise UnsupportedHorizonError("learning needs a finite tail start mdp.T")
        graph = experiment.load_graph()
        env = MonitorEnv(graph, experiment.start_poses(graph), experiment.mdp_config())
        table, policy = smdp_q_learn(env, learn_params(experiment), budget=experiment.learn.budget)

        out_dir = output_dir(experiment)
        table_path = os.path.join(out_dir, defaults.files.qtable)
        table.save(table_path)
        patrolbench.logging.success("wrote", table_path)

        evaluation_dir = output_dir(experiment, defaults.files.evaluation)
        summary = simulate_experiment(experiment, graph, evaluation_dir, policy=policy, pool=make_pool(experiment))
        precision = experiment.metrics.precision
        report: Dict[str, Any] = {
            "experiment": experiment.name,
            "budget": experiment.learn.budget,
            "state_keys": len(table),
            "evaluation": summary.get("tail_wi"),
        }
        gap = oracle_gap(summary, read_json(os.path.join(out_dir, defaults.files.oracle)), precision)
        if gap is not None:
            report["gap"] = gap
        write_json(os.path.join(out_dir, defaults.files.learn), report)

        root = Tree("[bold white]{}[/bold white]".format(experiment.name))
        root.add("[white]state keys[/white] [cyan]{}[/cyan]".format(len(table)))
        if summary.get("tail_wi"):
            root.add("[white]mean tail WI[/white] [green]{}[/green]".format(summary["tail_wi"]["mean"]))
        if gap is not None:
            root.add("[white]gap to J*={}[/white] [green]{}[/green]".format(gap["j_star"], gap["value"]))
        console.print(root)

    @staticmethod
    def check_config(config: "patrolbench.config"):
        check_experiment_flag(config)

    @staticmethod
    def add_args(parser: argparse.ArgumentParser):
        learn_parser = parser.add_parser(
            "learn", help="""Train tabular SMDP Q-learning and evaluate the greedy policy."""
        )
        add_experiment_args(learn_parser)
