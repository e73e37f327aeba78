# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

from rich.console import Console
from rich.traceback import install

__version__ = "0.3.0"

# Version of the experiment file schema understood by this release.
__schema_version__ = 1

__console__ = Console()
__use_console__ = True

install(show_locals=False)


def turn_console_off():
    global __use_console__
    global __console__
    from io import StringIO

    __use_console__ = False
    __console__ = Console(file=StringIO(), stderr=False)


def turn_console_on():
    global __use_console__
    global __console__
    __use_console__ = True
    __console__ = Console()


turn_console_off()


def trace(on: bool = True):
    logging.set_trace(on)


def debug(on: bool = True):
    logging.set_debug(on)


from .errors import *
from .config import config as config
from . import rational as rational
from .rational import INFINITY as INFINITY
from .btlogging import logging as logging
from .pool import RolloutPool as RolloutPool
from .graph import (
    GpeTable as GpeTable,
    GraphPoint as GraphPoint,
    MonitorGraph as MonitorGraph,
    TspTour as TspTour,
    diameter as diameter,
    feasibility_bound as feasibility_bound,
    laplacian_gpe as laplacian_gpe,
    load_graph as load_graph,
    node_diameter as node_diameter,
    random_geometric_graph as random_geometric_graph,
    save_graph as save_graph,
    shortest_path as shortest_path,
    transient_threshold as transient_threshold,
    tsp_tour as tsp_tour,
)
from .world import (
    Dwell as Dwell,
    EventLog as EventLog,
    Move as Move,
    NoOp as NoOp,
    RobotPose as RobotPose,
    SegmentPlan as SegmentPlan,
    Traverse as Traverse,
    Wait as Wait,
    WorldState as WorldState,
    canonical_motion as canonical_motion,
    latency_at as latency_at,
    run_plan as run_plan,
    tail_sup as tail_sup,
    world_reset as world_reset,
    world_step as world_step,
    worst_weighted_latency as worst_weighted_latency,
)
from .mdp import (
    EventState as EventState,
    MdpConfig as MdpConfig,
    MonitorEnv as MonitorEnv,
    counterfactual_rewards as counterfactual_rewards,
    legal_actions as legal_actions,
    mdp_reset as mdp_reset,
    mdp_transition as mdp_transition,
    observe as observe,
    role_labels as role_labels,
)
from .policies import Policy as Policy, make_policy as make_policy
from . import learning as learning
from .oracle import (
    PeriodicStrategy as PeriodicStrategy,
    SearchBounds as SearchBounds,
    close_and_loop as close_and_loop,
    evaluate_periodic as evaluate_periodic,
    exact_optimum as exact_optimum,
    verify_discretization as verify_discretization,
    verify_horizon_invariance as verify_horizon_invariance,
)
from .metrics import MetricsReport as MetricsReport, build_report as build_report
from .schema import ExperimentConfig as ExperimentConfig, load_experiment as load_experiment
from .cli import cli as cli

configs = [
    RolloutPool.config(),
    logging.config(),
]
defaults = config.merge_all(configs)
