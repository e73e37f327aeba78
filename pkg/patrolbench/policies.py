# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Heuristic monitoring policies sharing one decision interface.

A policy object is immutable. ``reset`` builds the per-rollout memory and
``decide`` maps a state to one action per robot (``NoOp`` for busy robots).
All randomness comes from the generator handed in by the rollout driver.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Any, Deque, Dict, List, Optional, Sequence, Tuple

import numpy as np

import patrolbench
from .errors import ConfigError, InfeasiblePlanError
from .graph import MonitorGraph, tsp_tour
from .mdp import EventState, MdpConfig, legal_actions
from .world import Command, Dwell, Move, NoOp, RobotPose, SegmentPlan, Traverse, Wait

# Largest team for which robot-to-slot assignments are searched exhaustively.
EXHAUSTIVE_ASSIGNMENT = 6


class Policy:
    r"""Base decision rule.

    Subclasses override ``decide`` and, when they keep per-rollout state, ``reset``.
    """

    name = "policy"

    def reset(self, state: EventState, rng: np.random.Generator) -> Any:
        return None

    def decide(self, state: EventState, memory: Any, rng: np.random.Generator) -> List[Command]:
        raise NotImplementedError

    def __repr__(self) -> str:
        return "{}()".format(type(self).__name__)


def quantized_waits(duration: Fraction, config: MdpConfig) -> List[Wait]:
    r"""Legal waits covering ``duration`` rounded up to whole quanta, longest first.

    The total overshoots ``duration`` by less than one quantum.
    """
    if duration <= 0:
        return []
    quanta = math.ceil(duration / config.delta)
    waits = [Wait(config.delta * config.kappa_max)] * (quanta // config.kappa_max)
    if quanta % config.kappa_max:
        waits.append(Wait(config.delta * (quanta % config.kappa_max)))
    return waits


def _arrival(graph: MonitorGraph, pose: RobotPose, target: int) -> Fraction:
    return pose.remaining + graph.dist[pose.to_node][target]


def _best_assignment(costs: List[List[Fraction]]) -> List[int]:
    r"""Slot for each robot minimizing the largest cost, then the total, then lexicographically."""
    k = len(costs)
    if k > EXHAUSTIVE_ASSIGNMENT:
        return list(range(k))
    best = min(
        permutations(range(k)),
        key=lambda perm: (
            max(costs[r][perm[r]] for r in range(k)),
            sum(costs[r][perm[r]] for r in range(k)),
            perm,
        ),
    )
    return list(best)


@dataclass
class WalkMemory:
    r"""Per-robot rendezvous queue, closed walk and position on that walk."""

    queues: List[Deque[Command]]
    walks: List[Optional[Tuple[int, ...]]]
    index: List[int] = field(default_factory=list)


class WalkFollower(Policy):
    r"""Shared decision step of policies that send robots around closed walks."""

    def _step(self, state: EventState, memory: WalkMemory) -> List[Command]:
        park = Wait(state.config.tau_max)
        joint: List[Command] = []
        for r, pose in enumerate(state.poses):
            if not pose.ready:
                joint.append(NoOp())
            elif memory.queues[r]:
                joint.append(memory.queues[r].popleft())
            else:
                walk = memory.walks[r]
                if walk is None or len(walk) < 2:
                    joint.append(park)
                    continue
                j = memory.index[r]
                joint.append(Move(walk[j + 1]))
                memory.index[r] = (j + 1) % (len(walk) - 1)
        return joint

    def decide(self, state: EventState, memory: WalkMemory, rng: np.random.Generator) -> List[Command]:
        return self._step(state, memory)

    @staticmethod
    def _rendezvous(
        graph: MonitorGraph, pose: RobotPose, target: int, wait: Fraction, config: MdpConfig
    ) -> Deque[Command]:
        path = graph.node_path(pose.to_node, target)
        return deque([Move(v) for v in path[1:]] + quantized_waits(wait, config))


def _check_team(policy: "WalkFollower", state: EventState):
    if state.num_robots != policy.k:
        raise ConfigError(
            "{} was built for {} robots, rollout has {}".format(policy.name, policy.k, state.num_robots)
        )


def _walk_times(graph: MonitorGraph, walk: Sequence[int]) -> List[Fraction]:
    times = [Fraction(0)]
    for a, b in zip(walk, walk[1:]):
        times.append(times[-1] + graph.length(a, b))
    return times


class TspCyclePolicy(WalkFollower):
    r"""Robots evenly spaced along one closed TSP walk.

    Robot slot i sits at walk position ``i * length / k``. Each robot is sent to the
    first walk node at or after its slot, waits so that the spacing is kept once every
    robot has arrived, and then follows the walk at full speed forever.

    Rendezvous waits are rounded up to whole quanta by :func:`quantized_waits`, so a
    robot may join the walk up to ``delta`` late and the spacing can drift by up to
    ``delta`` per robot.

    Args:
        graph (MonitorGraph):
            Graph to patrol.
        k (int):
            Number of robots.
    """

    name = "tsp_cycle"

    def __init__(self, graph: MonitorGraph, k: int):
        if k < 1:
            raise ConfigError("tsp_cycle needs at least one robot")
        self.graph = graph
        self.k = k
        self.tour = graph.tsp
        self.times = _walk_times(graph, self.tour.walk)
        m = len(self.tour.walk) - 1
        self.slots: List[Tuple[int, Fraction]] = []
        for i in range(k):
            offset = self.tour.length * i / k
            j = next((j for j in range(m + 1) if self.times[j] >= offset), 0) if m else 0
            self.slots.append((j, offset))

    def reset(self, state: EventState, rng: np.random.Generator) -> WalkMemory:
        _check_team(self, state)
        graph, walk = self.graph, self.tour.walk
        m = max(len(walk) - 1, 1)
        costs = [
            [_arrival(graph, pose, walk[j]) for j, _ in self.slots] for pose in state.poses
        ]
        assignment = _best_assignment(costs)
        start = max((costs[r][assignment[r]] for r in range(self.k)), default=Fraction(0))
        queues, index = [], []
        for r, pose in enumerate(state.poses):
            j, offset = self.slots[assignment[r]]
            due = start + self.times[j] - offset
            queues.append(
                self._rendezvous(graph, pose, walk[j], due - costs[r][assignment[r]], state.config)
            )
            index.append(j % m)
        return WalkMemory(queues=queues, walks=[walk] * self.k, index=index)


class PartitionPolicy(WalkFollower):
    r"""One robot per node cluster, each cycling its own cluster tour.

    Clusters grow from farthest-point seeds (the heaviest node first). Every other
    node joins the cluster whose cost ``w_max * tour length`` stays lowest, then single
    node moves are applied while they lower the largest cluster cost. Robots beyond
    ``|V|`` park where they stand.

    Args:
        graph (MonitorGraph):
            Graph to patrol.
        k (int):
            Number of robots.
    """

    name = "partition"

    def __init__(self, graph: MonitorGraph, k: int):
        if k < 1:
            raise ConfigError("partition needs at least one robot")
        self.graph = graph
        self.k = k
        self.clusters = self._partition(graph, min(k, graph.num_nodes))
        self.tours = [tsp_tour(graph, cluster) for cluster in self.clusters]
        patrolbench.logging.debug(
            "partition",
            "clusters={}".format(
                [[graph.node_id(v) for v in cluster] for cluster in self.clusters]
            ),
        )

    @staticmethod
    def _cost(graph: MonitorGraph, cluster: Sequence[int]) -> Fraction:
        return max(graph.weights[v] for v in cluster) * tsp_tour(graph, cluster).length

    @classmethod
    def _partition(cls, graph: MonitorGraph, k: int) -> List[List[int]]:
        dist = graph.dist
        first = min(range(graph.num_nodes), key=lambda v: (-graph.weights[v], v))
        seeds = [first]
        while len(seeds) < k:
            seeds.append(
                max(
                    (v for v in range(graph.num_nodes) if v not in seeds),
                    key=lambda v: (min(dist[s][v] for s in seeds), -v),
                )
            )
        clusters = [[s] for s in seeds]
        for v in range(graph.num_nodes):
            if v in seeds:
                continue
            c = min(
                range(k),
                key=lambda c: (cls._cost(graph, clusters[c] + [v]), dist[seeds[c]][v], c),
            )
            clusters[c].append(v)

        def score(parts: List[List[int]]) -> Tuple[Fraction, Fraction]:
            costs = [cls._cost(graph, p) for p in parts]
            return max(costs), sum(costs, Fraction(0))

        current = score(clusters)
        improved = True
        while improved:
            improved = False
            for a in range(k):
                for v in list(clusters[a]):
                    if len(clusters[a]) == 1:
                        break
                    for b in range(k):
                        if b == a:
                            continue
                        trial = [list(p) for p in clusters]
                        trial[a].remove(v)
                        trial[b].append(v)
                        candidate = score(trial)
                        if candidate < current:
                            clusters, current, improved = trial, candidate, True
                            break
                    if improved:
                        break
                if improved:
                    break
        return [sorted(c) for c in clusters]

    def reset(self, state: EventState, rng: np.random.Generator) -> WalkMemory:
        _check_team(self, state)
        graph = self.graph
        slots = len(self.tours)
        robots = list(range(min(self.k, slots)))
        costs = [
            [_arrival(graph, state.poses[r], tour.walk[0]) for tour in self.tours]
            for r in robots
        ]
        assignment = _best_assignment(costs)
        queues: List[Deque[Command]] = []
        walks: List[Optional[Tuple[int, ...]]] = []
        for r, pose in enumerate(state.poses):
            if r < len(robots):
                tour = self.tours[assignment[r]]
                queues.append(self._rendezvous(graph, pose, tour.walk[0], Fraction(0), state.config))
                walks.append(tour.walk)
            else:
                queues.append(deque())
                walks.append(None)
        return WalkMemory(queues=queues, walks=walks, index=[0] * len(walks))


class GreedyLatencyPolicy(Policy):
    r"""Each ready robot steps toward the node with the largest ``w(v) (L_v + d(pos, v))``.

    Ties go to the smaller node index. A robot only waits when its node has no neighbours.
    """

    name = "greedy"

    def __init__(self, graph: MonitorGraph):
        self.graph = graph

    def decide(self, state: EventState, memory: Any, rng: np.random.Generator) -> List[Command]:
        graph = self.graph
        joint: List[Command] = []
        for pose in state.poses:
            if not pose.ready:
                joint.append(NoOp())
                continue
            here = pose.to_node
            if not graph.neighbors[here]:
                joint.append(state.config.waits[0])
                continue
            target = min(
                (v for v in range(graph.num_nodes) if v != here),
                key=lambda v: (-graph.weights[v] * (state.latencies[v] + graph.dist[here][v]), v),
            )
            joint.append(Move(graph.node_path(here, target)[1]))
        return joint


class RandomPolicy(Policy):
    r"""Uniform draw among the legal actions of each ready robot.

    Args:
        seed (int, optional):
            Own seed; when omitted the rollout generator is used.
    """

    name = "random"

    def __init__(self, seed: Optional[int] = None):
        self.seed = seed

    def reset(self, state: EventState, rng: np.random.Generator) -> np.random.Generator:
        return np.random.default_rng(self.seed) if self.seed is not None else rng

    def decide(self, state: EventState, memory: np.random.Generator, rng: np.random.Generator) -> List[Command]:
        joint: List[Command] = []
        for r in range(state.num_robots):
            options = legal_actions(state, r).legal_actions()
            joint.append(options[int(memory.integers(len(options)))])
        return joint


class PlanPolicy(Policy):
    r"""Replays a scripted plan, then parks each robot.

    Dwell segments are split into legal waits; their durations must be whole
    multiples of the waiting quantum.
    """

    name = "plan"

    def __init__(self, plan: SegmentPlan, cycle: Optional[SegmentPlan] = None):
        self.plan = plan
        self.cycle = cycle

    def _commands(self, segments: Sequence[Any], config: MdpConfig) -> List[Command]:
        out: List[Command] = []
        for segment in segments:
            if isinstance(segment, Traverse):
                out.append(Move(segment.target))
            elif isinstance(segment, Dwell):
                if (segment.duration / config.delta).denominator != 1:
                    raise InfeasiblePlanError(
                        "wait {} is not a multiple of delta {}".format(segment.duration, config.delta)
                    )
                out.extend(quantized_waits(segment.duration, config))
        return out

    def reset(self, state: EventState, rng: np.random.Generator) -> Dict[str, Any]:
        if len(self.plan) != state.num_robots:
            raise InfeasiblePlanError(
                "plan covers {} robots, rollout has {}".format(len(self.plan), state.num_robots)
            )
        cycles = [
            self._commands(self.cycle.segments[r], state.config) if self.cycle else []
            for r in range(state.num_robots)
        ]
        return {
            "queues": [deque(self._commands(s, state.config)) for s in self.plan.segments],
            "cycles": cycles,
            "index": [0] * state.num_robots,
        }

    def decide(self, state: EventState, memory: Dict[str, Any], rng: np.random.Generator) -> List[Command]:
        joint: List[Command] = []
        for r, pose in enumerate(state.poses):
            if not pose.ready:
                joint.append(NoOp())
            elif memory["queues"][r]:
                joint.append(memory["queues"][r].popleft())
            elif memory["cycles"][r]:
                cycle = memory["cycles"][r]
                joint.append(cycle[memory["index"][r] % len(cycle)])
                memory["index"][r] += 1
            else:
                joint.append(Wait(state.config.tau_max))
        return joint


def tsp_cycle_policy(graph: MonitorGraph, k: int) -> TspCyclePolicy:
    return TspCyclePolicy(graph, k)


def partition_policy(graph: MonitorGraph, k: int) -> PartitionPolicy:
    return PartitionPolicy(graph, k)


def greedy_latency_policy(graph: MonitorGraph) -> GreedyLatencyPolicy:
    return GreedyLatencyPolicy(graph)


def random_policy(seed: Optional[int] = None) -> RandomPolicy:
    return RandomPolicy(seed)


def plan_policy(plan: SegmentPlan, cycle: Optional[SegmentPlan] = None) -> PlanPolicy:
    return PlanPolicy(plan, cycle)


POLICIES = ("tsp_cycle", "partition", "greedy", "random", "qtable")


def make_policy(
    name: str, graph: MonitorGraph, k: int, params: Optional[Dict[str, Any]] = None
) -> Policy:
    r"""Policy registry used by experiment configs.

    Args:
        name (str):
            One of ``tsp_cycle``, ``partition``, ``greedy``, ``random``, ``qtable``.
        graph (MonitorGraph):
            Graph to patrol.
        k (int):
            Number of robots.
        params (Dict[str, Any], optional):
            ``seed`` for ``random``; ``path`` (saved table) for ``qtable``.
    Raises:
        ConfigError: Unknown policy name or parameters.
    """
    params = dict(params or {})
    if name == "tsp_cycle":
        policy: Policy = TspCyclePolicy(graph, k)
    elif name == "partition":
        policy = PartitionPolicy(graph, k)
    elif name == "greedy":
        policy = GreedyLatencyPolicy(graph)
    elif name == "random":
        policy = RandomPolicy(params.pop("seed", None))
    elif name == "qtable":
        from .learning.qlearn import QTable

        if "path" not in params:
            raise ConfigError("policy 'qtable' needs a 'path' parameter")
        policy = QTable.load(params.pop("path"), graph).greedy_policy()
    else:
        raise ConfigError("unknown policy {!r}; choose from {}".format(name, POLICIES))
    if name in ("tsp_cycle", "partition", "greedy"):
        params.pop("seed", None)
    if params:
        raise ConfigError("unexpected parameters for policy {}: {}".format(name, sorted(params)))
    return policy
