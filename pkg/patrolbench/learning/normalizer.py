# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

from typing import Dict, Tuple, Union

import torch

EPSILON = 1e-8


class RunningNormalizer:
    r"""Streaming mean and population variance with an exact shard merge.

    Batches are folded in with the pairwise (Chan) update, so merging two normalizers
    gives the statistics of the concatenated streams.

    Args:
        shape (Tuple[int, ...]):
            Shape of one sample.
        epsilon (float):
            Added to the standard deviation when normalizing.
    """

    def __init__(self, shape: Tuple[int, ...] = (), epsilon: float = EPSILON):
        self.shape = tuple(shape)
        self.epsilon = epsilon
        self.count = 0
        self.mean = torch.zeros(self.shape, dtype=torch.float64)
        self.m2 = torch.zeros(self.shape, dtype=torch.float64)

    def __repr__(self) -> str:
        return "RunningNormalizer(shape={}, count={})".format(self.shape, self.count)

    @property
    def var(self) -> torch.DoubleTensor:
        if self.count == 0:
            return torch.zeros(self.shape, dtype=torch.float64)
        return self.m2 / self.count

    @property
    def std(self) -> torch.DoubleTensor:
        return torch.sqrt(self.var)

    def _combine(self, count: int, mean: torch.Tensor, m2: torch.Tensor):
        if count == 0:
            return
        if self.count == 0:
            self.count, self.mean, self.m2 = count, mean.clone(), m2.clone()
            return
        total = self.count + count
        delta = mean - self.mean
        self.mean = self.mean + delta * (count / total)
        self.m2 = self.m2 + m2 + delta * delta * (self.count * count / total)
        self.count = total

    def update(self, values: Union[torch.Tensor, float]) -> "RunningNormalizer":
        r"""Folds a batch of samples (leading batch dimension optional) into the statistics."""
        batch = torch.as_tensor(values, dtype=torch.float64).reshape((-1,) + self.shape)
        if batch.shape[0] == 0:
            return self
        mean = batch.mean(dim=0)
        m2 = ((batch - mean) ** 2).sum(dim=0)
        self._combine(batch.shape[0], mean, m2)
        return self

    def merge(self, other: "RunningNormalizer") -> "RunningNormalizer":
        if other.shape != self.shape:
            raise ValueError("cannot merge shapes {} and {}".format(self.shape, other.shape))
        self._combine(other.count, other.mean, other.m2)
        return self

    def normalize(self, values: Union[torch.Tensor, float]) -> torch.DoubleTensor:
        r"""``(x - mean) / (std + epsilon)``; identity until a sample has been seen."""
        values = torch.as_tensor(values, dtype=torch.float64)
        if self.count == 0:
            return values.clone()
        return (values - self.mean) / (self.std + self.epsilon)

    def state_dict(self) -> Dict[str, object]:
        return {
            "count": self.count,
            "mean": self.mean.tolist(),
            "m2": self.m2.tolist(),
            "epsilon": self.epsilon,
        }

    def load_state_dict(self, state: Dict[str, object]) -> "RunningNormalizer":
        self.count = int(state["count"])
        self.mean = torch.tensor(state["mean"], dtype=torch.float64).reshape(self.shape)
        self.m2 = torch.tensor(state["m2"], dtype=torch.float64).reshape(self.shape)
        self.epsilon = float(state.get("epsilon", EPSILON))
        return self


class ObservationNormalizer:
    r"""Running statistics behind the observation encoder: the log tracker, the
    weighted node latencies and the robots' remaining times."""

    def __init__(self, num_nodes: int, num_robots: int, epsilon: float = EPSILON):
        self.tracker = RunningNormalizer((1,), epsilon)
        self.latency = RunningNormalizer((num_nodes,), epsilon)
        self.remaining = RunningNormalizer((num_robots,), epsilon)

    def update(self, tracker: torch.Tensor, latency: torch.Tensor, remaining: torch.Tensor):
        self.tracker.update(tracker)
        self.latency.update(latency)
        self.remaining.update(remaining)

    def merge(self, other: "ObservationNormalizer") -> "ObservationNormalizer":
        self.tracker.merge(other.tracker)
        self.latency.merge(other.latency)
        self.remaining.merge(other.remaining)
        return self

    def state_dict(self) -> Dict[str, Dict[str, object]]:
        return {
            "tracker": self.tracker.state_dict(),
            "latency": self.latency.state_dict(),
            "remaining": self.remaining.state_dict(),
        }

    def load_state_dict(self, state: Dict[str, Dict[str, object]]) -> "ObservationNormalizer":
        self.tracker.load_state_dict(state["tracker"])
        self.latency.load_state_dict(state["latency"])
        self.remaining.load_state_dict(state["remaining"])
        return self


def running_normalizer(shape: Tuple[int, ...] = ()) -> RunningNormalizer:
    return RunningNormalizer(shape)
