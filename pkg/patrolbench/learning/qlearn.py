# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Tabular semi-Markov Q-learning over an abstracted decision state.

Each robot keeps its own decision epochs. Rewards earned between two epochs of a
robot are accumulated with a per-unit-time discount and the bootstrap term is
discounted by ``gamma ** elapsed``.
"""

import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

import patrolbench
from ..errors import LearningError, StateSpaceExplosionError
from ..graph import MonitorGraph
from ..mdp import EventState, MonitorEnv, legal_actions
from ..policies import Policy
from ..rational import rational_to_str, to_rational
from ..world import Command, NoOp
from .dataset import REWARD_MODES, team_reward

StateKey = Tuple[int, Tuple[Tuple[int, int, int], ...], Tuple[int, ...], int]


@dataclass(frozen=True)
class QLearnParams:
    r"""Learning schedule.

    Args:
        gamma (float):
            Discount per unit of physical time.
        alpha (float):
            Initial learning rate, multiplied by ``alpha_decay`` after every episode.
        epsilon (float):
            Initial exploration rate, multiplied by ``epsilon_decay`` after every
            episode and floored at ``epsilon_min``.
        state_key_cap (int):
            Largest number of distinct state keys before learning aborts.
        episode_horizon (Any):
            Physical length of one learning episode.
        seed (int):
            Seed of the exploration generator.
        reward_mode (str):
            Team reward per event: ``"time"`` pays ``-z * dt``, ``"step"`` pays ``-z``.
    """

    gamma: float = 0.99
    alpha: float = 0.5
    alpha_decay: float = 0.999
    epsilon: float = 1.0
    epsilon_decay: float = 0.995
    epsilon_min: float = 0.05
    state_key_cap: int = 200000
    episode_horizon: Any = 100
    seed: int = 0
    reward_mode: str = "time"

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise LearningError("gamma must lie in (0, 1], got {}".format(self.gamma))
        if not 0 < self.alpha <= 1:
            raise LearningError("alpha must lie in (0, 1], got {}".format(self.alpha))
        if not 0 <= self.epsilon_min <= self.epsilon <= 1:
            raise LearningError("need 0 <= epsilon_min <= epsilon <= 1")
        if self.state_key_cap < 1:
            raise LearningError("state_key_cap must be positive")
        if to_rational(self.episode_horizon) <= 0:
            raise LearningError("episode_horizon must be positive")
        if self.reward_mode not in REWARD_MODES:
            raise LearningError("unknown reward mode {!r}".format(self.reward_mode))


def latency_bucket_cap(graph: MonitorGraph, delta: Fraction) -> int:
    r"""Number of regular latency buckets: ``2 * tsp_length * w_max / w_min`` in units of ``delta``."""
    return math.ceil(2 * graph.tsp.length * graph.w_max / graph.w_min / delta)


class QTable:
    r"""Action values keyed by an abstracted per-robot state.

    A key holds the robot's node, the other robots' poses with remaining times in
    quanta, every node latency in quanta and the tracker in units of ``w_max * delta``.
    Latency and tracker buckets saturate in one overflow bucket past the cap, so the
    key set is finite.

    Args:
        graph (MonitorGraph):
            Graph the table was learned on.
        delta (Fraction):
            Bucket width, the waiting quantum.
        bucket_cap (int, optional):
            Regular buckets per latency; :func:`latency_bucket_cap` by default.
        state_key_cap (int):
            Largest number of keys the table may hold.
    """

    def __init__(
        self,
        graph: MonitorGraph,
        delta: Any,
        bucket_cap: Optional[int] = None,
        state_key_cap: int = 200000,
    ):
        self.graph = graph
        self.delta = to_rational(delta)
        self.bucket_cap = latency_bucket_cap(graph, self.delta) if bucket_cap is None else int(bucket_cap)
        self.state_key_cap = state_key_cap
        self.values: Dict[StateKey, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return "QTable(keys={}, delta={}, bucket_cap={})".format(len(self), self.delta, self.bucket_cap)

    def _bucket(self, value: Fraction) -> int:
        return min(math.floor(value / self.delta), self.bucket_cap + 1)

    def key(self, state: EventState, robot: int) -> StateKey:
        others = tuple(
            (p.from_node, p.to_node, math.ceil(p.remaining / self.delta))
            for r, p in enumerate(state.poses)
            if r != robot
        )
        return (
            state.poses[robot].to_node,
            others,
            tuple(self._bucket(l) for l in state.latencies),
            self._bucket(state.z / self.graph.w_max),
        )

    def row(self, key: StateKey, size: int) -> np.ndarray:
        r"""Values of ``key``, created as zeros on first use.

        Raises:
            StateSpaceExplosionError: The new key would exceed ``state_key_cap``.
        """
        values = self.values.get(key)
        if values is None:
            if len(self.values) >= self.state_key_cap:
                patrolbench.logging.error(
                    "state keys", "cap {} reached; coarsen delta or shrink the instance".format(self.state_key_cap)
                )
                raise StateSpaceExplosionError(
                    "more than {} state keys on a {}-node graph".format(self.state_key_cap, self.graph.num_nodes)
                )
            values = np.zeros(size, dtype=np.float64)
            self.values[key] = values
        return values

    def best_index(self, key: StateKey, size: int, rng: np.random.Generator) -> int:
        r"""Greedy action index with uniform tie-breaks; uniform when ``key`` is unknown."""
        values = self.values.get(key)
        if values is None:
            return int(rng.integers(size))
        best = np.flatnonzero(values == values.max())
        return int(best[int(rng.integers(len(best)))])

    def greedy_policy(self) -> "QTablePolicy":
        return QTablePolicy(self)

    def save(self, path: str):
        entries = [
            {"key": [key[0], [list(o) for o in key[1]], list(key[2]), key[3]], "values": values.tolist()}
            for key, values in sorted(self.values.items())
        ]
        with open(os.path.expanduser(path), "w") as f:
            json.dump(
                {
                    "schema_version": patrolbench.__schema_version__,
                    "nodes": list(self.graph.ids),
                    "delta": rational_to_str(self.delta),
                    "bucket_cap": self.bucket_cap,
                    "state_key_cap": self.state_key_cap,
                    "entries": entries,
                },
                f,
                sort_keys=True,
            )

    @classmethod
    def load(cls, path: str, graph: MonitorGraph) -> "QTable":
        r"""Reads a saved table; ``graph`` must have the node ids it was learned on."""
        try:
            with open(os.path.expanduser(path)) as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise LearningError("cannot read Q-table {}: {}".format(path, e)) from e
        if list(data.get("nodes", [])) != list(graph.ids):
            raise LearningError("Q-table {} was learned on a different graph".format(path))
        table = cls(graph, data["delta"], data["bucket_cap"], data["state_key_cap"])
        for entry in data["entries"]:
            node, others, latencies, z = entry["key"]
            key = (node, tuple(tuple(o) for o in others), tuple(latencies), z)
            table.values[key] = np.asarray(entry["values"], dtype=np.float64)
        return table


class QTablePolicy(Policy):
    r"""Greedy decisions of a learned table; ready robots on unseen keys act at random."""

    name = "qtable"

    def __init__(self, table: QTable):
        self.table = table

    def decide(self, state: EventState, memory: Any, rng: np.random.Generator) -> List[Command]:
        joint: List[Command] = []
        for r, pose in enumerate(state.poses):
            if not pose.ready:
                joint.append(NoOp())
                continue
            options = legal_actions(state, r).legal_actions()
            joint.append(options[self.table.best_index(self.table.key(state, r), len(options), rng)])
        return joint


@dataclass
class _Pending:
    key: StateKey
    index: int
    reward: float = 0.0
    discount: float = 1.0


def smdp_q_learn(
    env: MonitorEnv, params: Optional[QLearnParams] = None, budget: int = 100000
) -> Tuple[QTable, QTablePolicy]:
    r"""Learns a table with decaying epsilon-greedy exploration.

    Every event pays the team reward of ``params.reward_mode``: ``-z * dt`` (tracker
    reached, times the interval) or ``-z``.
    When a robot decides again, its previous decision is updated with

        Q(s, a) += alpha * (R + gamma ** elapsed * max_a' Q(s', a') - Q(s, a))

    where ``R`` sums the rewards since that decision, each discounted by the time
    elapsed before it. Decisions still open when an episode ends are dropped.

    Args:
        env (MonitorEnv):
            Environment fixing the graph, start poses and decision parameters.
        params (QLearnParams, optional):
            Learning schedule.
        budget (int):
            Number of table updates to perform.
    Returns:
        table (QTable):
            Learned values.
        policy (QTablePolicy):
            Greedy policy over ``table``.
    Raises:
        StateSpaceExplosionError: The abstracted key set exceeded its cap.
        LearningError: An episode finished without a single update.
    """
    params = params or QLearnParams()
    table = QTable(env.graph, env.config.delta, state_key_cap=params.state_key_cap)
    rng = np.random.default_rng(params.seed)
    horizon = to_rational(params.episode_horizon)
    alpha, epsilon = params.alpha, params.epsilon
    updates = episode = 0

    while updates < budget:
        state = env.reset()
        pending: Dict[int, _Pending] = {}
        episode_updates = 0
        while state.clock < horizon and updates < budget:
            joint: List[Command] = []
            for r, pose in enumerate(state.poses):
                if not pose.ready:
                    joint.append(NoOp())
                    continue
                options = legal_actions(state, r).legal_actions()
                key = table.key(state, r)
                values = table.row(key, len(options))
                previous = pending.pop(r, None)
                if previous is not None and updates < budget:
                    old = table.values[previous.key]
                    target = previous.reward + previous.discount * float(values.max())
                    old[previous.index] += alpha * (target - old[previous.index])
                    updates += 1
                    episode_updates += 1
                if rng.random() < epsilon:
                    index = int(rng.integers(len(options)))
                else:
                    index = table.best_index(key, len(options), rng)
                pending[r] = _Pending(key=key, index=index)
                joint.append(options[index])
            state, _, dt = env.step(joint, cap=horizon - state.clock)
            reward = team_reward(state, dt, params.reward_mode)
            for p in pending.values():
                p.reward += p.discount * reward
                p.discount *= params.gamma ** float(dt)

        episode += 1
        if episode_updates == 0 and updates < budget:
            raise LearningError(
                "episode of length {} produced no update; raise episode_horizon".format(horizon)
            )
        alpha *= params.alpha_decay
        epsilon = max(params.epsilon_min, epsilon * params.epsilon_decay)
        patrolbench.logging.debug(
            "q-learning",
            "episode={} updates={} keys={} epsilon={:.3f}".format(episode, updates, len(table), epsilon),
        )

    patrolbench.logging.info("q-learning", "episodes={} updates={} keys={}".format(episode, updates, len(table)))
    return table, table.greedy_policy()
