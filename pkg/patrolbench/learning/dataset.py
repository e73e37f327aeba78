# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Demonstration datasets: per-robot event steps with normalized Monte-Carlo returns.
"""

import json
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

import patrolbench
from ..errors import LearningError, MalformedBatchError, UnsupportedHorizonError
from ..graph import GpeTable, MonitorGraph, laplacian_gpe
from ..mdp import EventState, MdpConfig, MonitorEnv, legal_actions, observe
from ..rational import is_infinite, rational_to_str, to_rational
from .normalizer import EPSILON, ObservationNormalizer

REWARD_MODES = ("step", "time")


def team_reward(state: EventState, dt: Fraction, mode: str = "step") -> float:
    r"""Shared reward of an event step: the negated tracker, optionally weighted by the interval."""
    if mode == "step":
        return -float(state.z)
    if mode == "time":
        return -float(state.z * dt)
    raise LearningError("unknown reward mode {!r}".format(mode))


def discounted_returns(rewards: Sequence[float], gamma: float) -> torch.DoubleTensor:
    r"""``G_n = r_n + gamma * G_{n+1}``, accumulated from the end of the episode."""
    rewards = torch.as_tensor(rewards, dtype=torch.float64).tolist()
    returns = [0.0] * len(rewards)
    running = 0.0
    for n in reversed(range(len(rewards))):
        running = rewards[n] + gamma * running
        returns[n] = running
    return torch.tensor(returns, dtype=torch.float64)


def normalize_returns(
    returns: Sequence[float], mask: Optional[Sequence[float]] = None, epsilon: float = EPSILON
) -> Tuple[torch.DoubleTensor, float, float]:
    r"""Standardizes returns with the mean and population std of the masked entries.

    Args:
        returns (Sequence[float]):
            Raw returns.
        mask (Sequence[float], optional):
            1 for the entries that enter the statistics; all of them by default.
        epsilon (float):
            Added to the standard deviation.
    Returns:
        normalized (torch.DoubleTensor):
            ``(G - mean) / (std + epsilon)`` for every entry.
        mean (float):
            Mean over the masked entries.
        std (float):
            Population standard deviation over the masked entries.
    """
    returns = torch.as_tensor(returns, dtype=torch.float64)
    mask = torch.ones_like(returns) if mask is None else torch.as_tensor(mask, dtype=torch.float64)
    if mask.shape != returns.shape:
        raise MalformedBatchError("mask shape {} differs from returns {}".format(tuple(mask.shape), tuple(returns.shape)))
    valid = returns[mask > 0]
    if valid.numel() == 0:
        return returns.clone(), 0.0, 0.0
    mean = valid.mean()
    std = torch.sqrt(((valid - mean) ** 2).mean())
    return (returns - mean) / (std + epsilon), float(mean), float(std)


@dataclass
class DemoTuple:
    episode: int
    step: int
    robot: int
    observation: List[float]
    state: Dict[str, Any]
    action: int
    mask: List[bool]
    reward: float
    active: bool
    ret: float = 0.0
    normalized: float = 0.0


@dataclass
class DemoDataset:
    r"""Demonstration tuples plus the return statistics used to normalize them."""

    tuples: List[DemoTuple]
    gamma: float
    mean: float
    std: float
    epsilon: float = EPSILON
    policy: str = ""
    reward_mode: str = "step"
    normalizer: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.tuples)

    def header(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma,
            "mean": self.mean,
            "std": self.std,
            "epsilon": self.epsilon,
            "policy": self.policy,
            "reward_mode": self.reward_mode,
            "tuples": len(self.tuples),
            "normalizer": self.normalizer,
        }


def encode_state(state: EventState) -> Dict[str, Any]:
    graph = state.graph
    return {
        "poses": [p.describe(graph) for p in state.poses],
        "latencies": [rational_to_str(l) for l in state.latencies],
        "z": rational_to_str(state.z),
        "eta": rational_to_str(state.eta),
        "clock": rational_to_str(state.clock),
    }


def node_encoding(graph: MonitorGraph, d_gpe: int) -> GpeTable:
    r"""Spectral encoding capped at ``|V| - 1`` coordinates; empty for a single node."""
    if graph.num_nodes < 2:
        n = graph.num_nodes
        return GpeTable(vectors=np.zeros((n, 0)), eigenvalues=np.zeros(0), spectrum=np.zeros(n))
    return laplacian_gpe(graph, min(d_gpe, graph.num_nodes - 1))


@dataclass(frozen=True)
class EpisodeJob:
    policy: Any
    graph: MonitorGraph
    p0: Tuple[Any, ...]
    config: MdpConfig
    horizon: Fraction
    seed: int
    episode: int
    reward_mode: str
    gamma: float
    d_gpe: int


def run_demo_episode(job: EpisodeJob) -> Tuple[List[DemoTuple], Dict[str, Any]]:
    r"""One demonstration episode; module level so worker processes can run it."""
    env = MonitorEnv(job.graph, job.p0, job.config)
    trajectory = env.rollout(job.policy, job.horizon, seed=job.seed)
    gpe = node_encoding(job.graph, job.d_gpe)
    normalizer = ObservationNormalizer(job.graph.num_nodes, len(job.p0))

    rewards = [
        team_reward(state, step.dt, job.reward_mode)
        for state, step in zip(trajectory.states, trajectory.transitions)
    ]
    returns = discounted_returns(rewards, job.gamma).tolist()
    tuples: List[DemoTuple] = []
    for n, (state, joint) in enumerate(zip(trajectory.states, trajectory.actions)):
        features = observe(state, gpe, normalizer, update=True)
        encoded = encode_state(state)
        for r in range(state.num_robots):
            mask = legal_actions(state, r)
            tuples.append(
                DemoTuple(
                    episode=job.episode,
                    step=n,
                    robot=r,
                    observation=features[r].tolist(),
                    state=encoded,
                    action=mask.index(joint[r]),
                    mask=list(mask.legal),
                    reward=rewards[n],
                    active=state.poses[r].ready,
                    ret=returns[n],
                )
            )
    return tuples, normalizer.state_dict()


def build_demo_dataset(
    policy: Any,
    env: MonitorEnv,
    episodes: int,
    gamma: float,
    horizon: Any,
    seed: int = 0,
    reward_mode: str = "step",
    d_gpe: int = 2,
    pool: Optional["patrolbench.RolloutPool"] = None,
) -> DemoDataset:
    r"""Rolls out a demonstrator and stores every robot's step with its normalized return.

    Args:
        policy (Policy):
            Demonstrating policy.
        env (MonitorEnv):
            Environment that fixes the graph, the start poses and the decision parameters.
        episodes (int):
            Number of episodes; episode i uses seed ``seed + i``.
        gamma (float):
            Discount per event step.
        horizon (Any):
            Physical length of every episode.
        seed (int):
            Base seed.
        reward_mode (str):
            ``step`` or ``time`` (see :func:`team_reward`).
        d_gpe (int):
            Spectral encoding width.
        pool (RolloutPool, optional):
            Runs episodes in parallel; results are merged in episode order.
    Returns:
        dataset (DemoDataset):
            Tuples with raw and normalized returns. The statistics only use steps
            where the robot acted.
    """
    if reward_mode not in REWARD_MODES:
        raise LearningError("unknown reward mode {!r}".format(reward_mode))
    if is_infinite(env.config.T):
        raise UnsupportedHorizonError("demonstrations need a finite tail start T")
    jobs = [
        EpisodeJob(
            policy=policy,
            graph=env.graph,
            p0=tuple(env.p0),
            config=env.config,
            horizon=to_rational(horizon),
            seed=seed + i,
            episode=i,
            reward_mode=reward_mode,
            gamma=gamma,
            d_gpe=d_gpe,
        )
        for i in range(episodes)
    ]
    pool = pool if pool is not None else patrolbench.RolloutPool(jobs=1)
    results = pool.map(run_demo_episode, jobs, desc="demos")

    tuples: List[DemoTuple] = []
    merged = ObservationNormalizer(env.graph.num_nodes, len(env.p0))
    for episode_tuples, stats in results:
        tuples.extend(episode_tuples)
        merged.merge(ObservationNormalizer(env.graph.num_nodes, len(env.p0)).load_state_dict(stats))

    normalized, mean, std = normalize_returns(
        [t.ret for t in tuples], [1.0 if t.active else 0.0 for t in tuples]
    )
    for t, g in zip(tuples, normalized.tolist()):
        t.normalized = g
    patrolbench.logging.info(
        "demo dataset", "episodes={} tuples={} mean={:.6g} std={:.6g}".format(episodes, len(tuples), mean, std)
    )
    return DemoDataset(
        tuples=tuples,
        gamma=gamma,
        mean=mean,
        std=std,
        policy=getattr(policy, "name", type(policy).__name__),
        reward_mode=reward_mode,
        normalizer=merged.state_dict(),
    )


def save_demo_dataset(dataset: DemoDataset, path: str):
    r"""JSON lines: a header record with the return statistics, then one record per tuple."""
    with open(os.path.expanduser(path), "w") as f:
        f.write(json.dumps({"header": dataset.header()}, sort_keys=True) + "\n")
        for t in dataset.tuples:
            f.write(json.dumps(asdict(t), sort_keys=True) + "\n")


def load_demo_dataset(path: str) -> DemoDataset:
    with open(os.path.expanduser(path)) as f:
        lines = [json.loads(line) for line in f if line.strip()]
    if not lines or "header" not in lines[0]:
        raise LearningError("{} has no dataset header".format(path))
    header = lines[0]["header"]
    return DemoDataset(
        tuples=[DemoTuple(**entry) for entry in lines[1:]],
        gamma=header["gamma"],
        mean=header["mean"],
        std=header["std"],
        epsilon=header.get("epsilon", EPSILON),
        policy=header.get("policy", ""),
        reward_mode=header.get("reward_mode", "step"),
        normalizer=header.get("normalizer", {}),
    )
