# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Advantage estimation over event steps where an agent only acts when it is ready.

Rewards of the steps an agent does not act on are folded into its previous active
step, and that step bootstraps from the value at the agent's next active step.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import torch

from ..errors import MalformedBatchError

TensorLike = Union[torch.Tensor, Sequence[float]]


def _as_tensor(values: TensorLike, name: str) -> torch.DoubleTensor:
    tensor = torch.as_tensor(values, dtype=torch.float64)
    if tensor.dim() not in (1, 2):
        raise MalformedBatchError("{} must be 1-D or 2-D, got shape {}".format(name, tuple(tensor.shape)))
    return tensor


@dataclass
class RolloutBatch:
    r"""Aligned per-step arrays of one agent (1-D) or several agents (2-D, steps first).

    Args:
        rewards (TensorLike):
            Reward of every event step.
        values (TensorLike):
            Value estimate of every event step.
        active (TensorLike):
            1 where the agent acts, 0 elsewhere.
        dones (TensorLike):
            1 where an episode ends after the step.
        last_value (TensorLike):
            Bootstrap value after the final step (scalar or one per agent).
        gamma (float):
            Discount per event step, in (0, 1].
        lam (float):
            Trace parameter, in [0, 1].
    """

    rewards: TensorLike
    values: TensorLike
    active: TensorLike
    dones: TensorLike
    last_value: TensorLike = 0.0
    gamma: float = 0.99
    lam: float = 0.95

    def __post_init__(self):
        self.rewards = _as_tensor(self.rewards, "rewards")
        self.values = _as_tensor(self.values, "values")
        self.active = _as_tensor(self.active, "active")
        self.dones = _as_tensor(self.dones, "dones")
        shape = self.rewards.shape
        for name in ("values", "active", "dones"):
            if getattr(self, name).shape != shape:
                raise MalformedBatchError(
                    "{} has shape {} but rewards have {}".format(
                        name, tuple(getattr(self, name).shape), tuple(shape)
                    )
                )
        for name in ("active", "dones"):
            tensor = getattr(self, name)
            if not torch.all((tensor == 0) | (tensor == 1)):
                raise MalformedBatchError("{} must only hold 0 and 1".format(name))
        if not 0 < self.gamma <= 1:
            raise MalformedBatchError("gamma must lie in (0, 1], got {}".format(self.gamma))
        if not 0 <= self.lam <= 1:
            raise MalformedBatchError("lam must lie in [0, 1], got {}".format(self.lam))
        agents = 1 if len(shape) == 1 else shape[1]
        self.last_value = torch.as_tensor(self.last_value, dtype=torch.float64).expand(agents).clone()

    def columns(self):
        if self.rewards.dim() == 1:
            yield self.rewards, self.values, self.active, self.dones, float(self.last_value[0])
            return
        for a in range(self.rewards.shape[1]):
            yield (
                self.rewards[:, a],
                self.values[:, a],
                self.active[:, a],
                self.dones[:, a],
                float(self.last_value[a]),
            )


def _stack(columns: Sequence[torch.Tensor], like: torch.Tensor) -> torch.DoubleTensor:
    if like.dim() == 1:
        return columns[0]
    return torch.stack(list(columns), dim=1)


def gae(
    rewards: TensorLike,
    values: TensorLike,
    dones: TensorLike,
    last_value: float = 0.0,
    gamma: float = 0.99,
    lam: float = 0.95,
) -> Tuple[torch.DoubleTensor, torch.DoubleTensor]:
    r"""Standard generalized advantage estimation on one 1-D trajectory.

    Returns:
        advantages (torch.DoubleTensor):
            ``A_n = delta_n + gamma * lam * (1 - done_n) * A_{n+1}``.
        returns (torch.DoubleTensor):
            ``advantages + values``.
    """
    r = _as_tensor(rewards, "rewards").tolist()
    v = _as_tensor(values, "values").tolist()
    d = _as_tensor(dones, "dones").tolist()
    advantages = [0.0] * len(r)
    last_adv = 0.0
    next_value = float(last_value)
    for n in reversed(range(len(r))):
        nonterminal = 1.0 - d[n]
        delta = r[n] + gamma * next_value * nonterminal - v[n]
        last_adv = delta + gamma * lam * nonterminal * last_adv
        advantages[n] = last_adv
        next_value = v[n]
    adv = torch.tensor(advantages, dtype=torch.float64)
    return adv, adv + torch.tensor(v, dtype=torch.float64)


def _trans_gae_column(
    rewards: torch.Tensor,
    values: torch.Tensor,
    active: torch.Tensor,
    dones: torch.Tensor,
    last_value: float,
    gamma: float,
    lam: float,
) -> Tuple[torch.DoubleTensor, torch.DoubleTensor]:
    r, v = rewards.tolist(), values.tolist()
    act, d = active.tolist(), dones.tolist()
    advantages = [0.0] * len(r)
    returns = [0.0] * len(r)

    next_value = last_value
    nonterminal = 1.0
    last_adv = 0.0
    folded = 0.0  # discounted rewards of the inactive steps after the current one
    gap = 0  # number of those steps
    for n in reversed(range(len(r))):
        if d[n]:
            next_value, nonterminal, last_adv, folded, gap = 0.0, 0.0, 0.0, 0.0, 0
        if not act[n]:
            folded = r[n] + gamma * folded
            gap += 1
            continue
        reward_sum = r[n] if gap == 0 else r[n] + gamma * folded
        delta = reward_sum + gamma ** (gap + 1) * next_value * nonterminal - v[n]
        last_adv = delta + (gamma * lam) ** (gap + 1) * nonterminal * last_adv
        advantages[n] = last_adv
        returns[n] = last_adv + v[n]
        next_value, nonterminal, folded, gap = v[n], 1.0, 0.0, 0
    return (
        torch.tensor(advantages, dtype=torch.float64),
        torch.tensor(returns, dtype=torch.float64),
    )


def trans_gae(batch: RolloutBatch) -> Tuple[torch.DoubleTensor, torch.DoubleTensor]:
    r"""Advantages over the active steps of every agent in the batch.

    For an active step n with next active step n+ and ``l`` inactive steps between:

        delta_n = sum_{j=0..l} gamma^j r_{n+j} + gamma^{l+1} V(n+) - V(n)
        A_n = delta_n + (gamma lam)^{l+1} A(n+)

    With every step active this is exactly :func:`gae`.

    Args:
        batch (RolloutBatch):
            Aligned rollout arrays.
    Returns:
        advantages (torch.DoubleTensor):
            Zero at inactive steps.
        returns (torch.DoubleTensor):
            ``advantages + values`` at active steps, zero elsewhere.
    """
    advantages, returns = [], []
    for rewards, values, active, dones, last_value in batch.columns():
        adv, ret = _trans_gae_column(
            rewards, values, active, dones, last_value, batch.gamma, batch.lam
        )
        advantages.append(adv)
        returns.append(ret)
    return _stack(advantages, batch.rewards), _stack(returns, batch.rewards)
