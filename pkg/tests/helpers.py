# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import os
from fractions import Fraction
from typing import Any, Dict, Sequence, Tuple

import yaml
from hypothesis import strategies as st

from patrolbench.graph import MonitorGraph, load_graph
from patrolbench.schema import INSTANCES_DIR, load_experiment
from patrolbench.world import Dwell, EventLog, RobotPose, SegmentPlan, Traverse, run_plan

EXPERIMENTS_DIR = os.path.join(INSTANCES_DIR, "experiments")


def instance_path(name: str) -> str:
    return os.path.join(INSTANCES_DIR, name)


def experiment_path(name: str) -> str:
    return os.path.join(EXPERIMENTS_DIR, name)


def load_instance(name: str) -> MonitorGraph:
    return load_graph(instance_path(name))


def get_triangle() -> MonitorGraph:
    return load_instance("triangle.json")


def get_long_edge() -> MonitorGraph:
    return load_instance("long_edge.json")


def get_two_node(length: Any = 20) -> MonitorGraph:
    return MonitorGraph([("1", 1), ("2", 1)], [("1", "2", length)])


def get_square() -> MonitorGraph:
    return MonitorGraph(
        [(str(i), 1) for i in range(1, 5)],
        [("1", "2", 1), ("2", "3", 1), ("3", "4", 1), ("4", "1", 1)],
    )


def run_scripted_experiment(name: str) -> EventLog:
    r"""Runs a bundled scripted experiment (``sigma1.yaml`` ...) straight through the world."""
    experiment = load_experiment(experiment_path(name))
    graph = experiment.load_graph()
    plan, cycle = experiment.scripted_plan(graph)
    return run_plan(graph, experiment.start_poses(graph), plan, experiment.horizon, cycle=cycle)


def write_experiment(directory, data: Dict[str, Any], name: str = "experiment.yaml") -> str:
    path = os.path.join(str(directory), name)
    with open(path, "w") as f:
        yaml.safe_dump(data, f, sort_keys=False)
    return path


def triangle_experiment(output: str, **overrides: Any) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "schema_version": 1,
        "name": "triangle",
        "graph": "bundled:triangle.json",
        "robots": 1,
        "p0": ["1"],
        "mdp": {"T": 0, "delta": "1/2", "kappa_max": 2},
        "oracle": {"depth_cap": 64},
        "horizon": 12,
        "output": output,
    }
    data.update(overrides)
    return data


WAIT_CHOICES = (Fraction(1, 2), Fraction(1))
SCRIPTED_GRAPHS = (get_triangle, get_square, get_long_edge)


def plan_from_choices(graph: MonitorGraph, starts: Sequence[int], choices: Sequence[Sequence[int]]) -> SegmentPlan:
    r"""Feasible plan where each pick selects a neighbor to traverse to or a wait length."""
    robots = []
    for node, picks in zip(starts, choices):
        segments = []
        for pick in picks:
            options = [Traverse(node, v) for v in range(graph.num_nodes) if graph.has_edge(node, v)]
            options += [Dwell(node, d) for d in WAIT_CHOICES]
            segment = options[pick % len(options)]
            segments.append(segment)
            if isinstance(segment, Traverse):
                node = segment.target
        robots.append(tuple(segments))
    return SegmentPlan(tuple(robots))


@st.composite
def scripted_plans(draw, max_robots: int = 2, max_segments: int = 12):
    r"""``(graph, start poses, plan)`` drawn over the small bundled graphs."""
    graph = SCRIPTED_GRAPHS[draw(st.integers(min_value=0, max_value=len(SCRIPTED_GRAPHS) - 1))]()
    k = draw(st.integers(min_value=1, max_value=max_robots))
    starts = [draw(st.integers(min_value=0, max_value=graph.num_nodes - 1)) for _ in range(k)]
    choices = [
        draw(st.lists(st.integers(min_value=0, max_value=7), max_size=max_segments)) for _ in range(k)
    ]
    return graph, [RobotPose.at(s) for s in starts], plan_from_choices(graph, starts, choices)


def window_from_picks(log: EventLog, first: int, second: int) -> Tuple[Fraction, Fraction]:
    r"""Two distinct event times ``alpha < beta`` of ``log`` chosen by integer picks."""
    times = log.event_times()
    i = first % (len(times) - 1)
    j = i + 1 + second % (len(times) - 1 - i)
    return times[i], times[j]
