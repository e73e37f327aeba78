# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Event-driven decision process over the monitoring world.

States add a tracker ``z`` (the worst weighted latency seen since the tail start T)
and the elapsed time ``eta`` saturating at T. When T falls inside an interval an
extra event is inserted exactly at T, so ``z`` always equals the tail supremum of
the underlying log.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING, Any, List, Optional, Sequence, Tuple

import numpy as np
import torch

import patrolbench
from .errors import ActionMaskError, ConfigError, MdpError, RobotBusyError
from .graph import GpeTable, MonitorGraph
from .rational import Rational, format_decimal, is_infinite, to_rational, to_rational_or_infinity
from .world import (
    Command,
    EventLog,
    Move,
    NoOp,
    RobotPose,
    StepOutcome,
    Wait,
    WorldState,
    advance,
    interval_contributions,
    step_outcome,
    world_reset,
)

if TYPE_CHECKING:
    from .learning.normalizer import ObservationNormalizer
    from .policies import Policy


BASELINES = ("wait",)


@dataclass(frozen=True)
class MdpConfig:
    r"""Decision process parameters.

    Args:
        T (Fraction or INFINITY):
            Tail start; ``INFINITY`` means the tracker never activates.
        delta (Fraction):
            Waiting quantum.
        kappa_max (int):
            Longest wait, in quanta.
        lambda_L (float):
            Weight of the latency part of the counterfactual reward.
        lambda_z (float):
            Weight of the tracker part of the counterfactual reward.
        baseline (str):
            Counterfactual baseline; ``"wait"`` holds the robot at its node.
    """

    T: Rational = Fraction(0)
    delta: Fraction = Fraction(1, 10)
    kappa_max: int = 8
    lambda_L: float = 1.0
    lambda_z: float = 1.0
    baseline: str = "wait"

    def __post_init__(self):
        try:
            object.__setattr__(self, "T", to_rational_or_infinity(self.T))
            object.__setattr__(self, "delta", to_rational(self.delta))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if self.T < 0:
            raise ConfigError("T must be nonnegative, got {}".format(self.T))
        if self.delta <= 0:
            raise ConfigError("delta must be positive, got {}".format(self.delta))
        if int(self.kappa_max) != self.kappa_max or self.kappa_max < 1:
            raise ConfigError("kappa_max must be a positive integer, got {}".format(self.kappa_max))
        if self.lambda_L < 0 or self.lambda_z < 0:
            raise ConfigError("counterfactual weights must be nonnegative")
        if self.baseline not in BASELINES:
            raise ConfigError("unknown baseline {!r}".format(self.baseline))

    @property
    def tau_max(self) -> Fraction:
        return self.delta * self.kappa_max

    @property
    def waits(self) -> Tuple[Wait, ...]:
        return tuple(Wait(self.delta * k) for k in range(1, self.kappa_max + 1))


@dataclass(frozen=True)
class EventState:
    r"""Decision state: joint poses, latencies, tracker ``z`` and saturating elapsed time ``eta``."""

    graph: MonitorGraph = field(repr=False, compare=False)
    config: MdpConfig = field(repr=False, compare=False)
    poses: Tuple[RobotPose, ...]
    latencies: Tuple[Fraction, ...]
    z: Fraction
    eta: Rational
    clock: Fraction
    arrivals: Tuple[Fraction, ...]
    event: int = 0

    @property
    def num_robots(self) -> int:
        return len(self.poses)

    @property
    def active(self) -> bool:
        return not is_infinite(self.config.T) and self.eta >= self.config.T

    @property
    def world(self) -> WorldState:
        return WorldState(
            graph=self.graph,
            poses=self.poses,
            latencies=self.latencies,
            clock=self.clock,
            arrivals=self.arrivals,
        )

    def ready_robots(self) -> List[int]:
        return [r for r, p in enumerate(self.poses) if p.ready]


@dataclass(frozen=True)
class ActionMask:
    actions: Tuple[Command, ...]
    legal: Tuple[bool, ...]

    def legal_actions(self) -> List[Command]:
        return [a for a, ok in zip(self.actions, self.legal) if ok]

    def index(self, action: Command) -> int:
        return self.actions.index(action)


@dataclass(frozen=True)
class Transition:
    state: EventState
    dt: Fraction
    outcome: StepOutcome


@dataclass(frozen=True)
class CounterfactualReward:
    latency: Fraction
    tracker: Fraction
    combined: float


def mdp_reset(
    graph: MonitorGraph,
    p0: Sequence[Any],
    config: MdpConfig,
    latencies: Optional[Sequence[Any]] = None,
) -> EventState:
    r"""Initial decision state with ``eta = 0``; the tracker starts at ``M(0)`` when T is 0."""
    world = world_reset(graph, p0, latencies)
    z = world.worst_weighted_latency() if config.T == 0 else Fraction(0)
    return EventState(
        graph=graph,
        config=config,
        poses=world.poses,
        latencies=world.latencies,
        z=z,
        eta=Fraction(0),
        clock=world.clock,
        arrivals=world.arrivals,
    )


def legal_actions(state: EventState, robot: int) -> ActionMask:
    r"""Action list and legality mask of one robot.

    A ready robot lists its moves (neighbours in node order), then every wait
    ``k * delta`` for ``k = 1..kappa_max``, then the no-op, which is illegal for it.
    A busy robot only has the no-op.
    """
    if not 0 <= robot < state.num_robots:
        raise MdpError("robot {} out of range".format(robot))
    pose = state.poses[robot]
    if not pose.ready:
        return ActionMask(actions=(NoOp(),), legal=(True,))
    moves = tuple(Move(v) for v in state.graph.neighbors[pose.to_node])
    waits = state.config.waits
    return ActionMask(
        actions=moves + waits + (NoOp(),),
        legal=(True,) * (len(moves) + len(waits)) + (False,),
    )


def _check_joint(state: EventState, joint: Sequence[Command]):
    if len(joint) != state.num_robots:
        raise ActionMaskError(
            "joint action has {} entries for {} robots".format(len(joint), state.num_robots),
            event=state.event,
        )
    for r, action in enumerate(joint):
        mask = legal_actions(state, r)
        if action not in mask.actions or not mask.legal[mask.index(action)]:
            raise ActionMaskError(
                "action {} is not legal for robot {} at event {}".format(action, r, state.event),
                robot=r,
                event=state.event,
            )


def _track(
    state: EventState, dt: Fraction, peak: Fraction, latencies: Sequence[Fraction]
) -> Tuple[Fraction, Rational]:
    T = state.config.T
    if is_infinite(T):
        return Fraction(0), state.eta + dt
    if state.eta >= T:
        return max(state.z, peak), T
    if state.eta + dt >= T:
        # Crossing event: the window [T, T] only holds M(T).
        return max((w * l for w, l in zip(state.graph.weights, latencies)), default=Fraction(0)), T
    return Fraction(0), state.eta + dt


def transition(
    state: EventState, joint: Sequence[Command], cap: Optional[Fraction] = None
) -> Transition:
    r"""Full transition record; ``mdp_transition`` returns its state and interval.

    Args:
        state (EventState):
            Current state.
        joint (Sequence[Command]):
            One action per robot, taken from ``legal_actions``.
        cap (Fraction, optional):
            Extra bound on the interval, used to stop rollouts at a physical horizon.
    """
    _check_joint(state, joint)
    bound = None
    if not is_infinite(state.config.T) and state.eta < state.config.T:
        bound = state.config.T - state.eta
    if cap is not None:
        bound = cap if bound is None else min(bound, cap)
    outcome = step_outcome(state.world, joint, cap=bound)
    z, eta = _track(state, outcome.dt, outcome.peak, outcome.state.latencies)
    world = outcome.state
    return Transition(
        state=EventState(
            graph=state.graph,
            config=state.config,
            poses=world.poses,
            latencies=world.latencies,
            z=z,
            eta=eta,
            clock=world.clock,
            arrivals=world.arrivals,
            event=state.event + 1,
        ),
        dt=outcome.dt,
        outcome=outcome,
    )


def mdp_transition(state: EventState, joint: Sequence[Command]) -> Tuple[EventState, Fraction]:
    r"""Deterministic event-driven transition.

    Returns:
        state (EventState):
            State at the next event.
        dt (Fraction):
            Elapsed time, cut at T while the tracker is inactive.
    Raises:
        ActionMaskError: Some robot's action is not legal.
    """
    step = transition(state, joint)
    return step.state, step.dt


def reward_step(state: EventState) -> Fraction:
    return state.z


def reward_time_normalized(state: EventState, dt: Fraction) -> Fraction:
    return state.z * dt


def counterfactual_rewards(
    state: EventState, joint: Sequence[Command], robot: int
) -> CounterfactualReward:
    r"""Difference made by ``robot``'s action against holding it at its node.

    The baseline branch replays the same interval without the robot's visits; the
    node it held is scored identically in both branches.

    Returns:
        reward (CounterfactualReward):
            ``latency = sum_v w(v) (L'_cf - L')``, ``tracker = z'_cf - z'`` and
            ``combined = lambda_L * latency + lambda_z * tracker``.
    Raises:
        RobotBusyError: ``robot`` is still executing a command.
    """
    if not 0 <= robot < state.num_robots:
        raise MdpError("robot {} out of range".format(robot))
    if not state.poses[robot].ready:
        raise RobotBusyError("robot {} is busy at event {}".format(robot, state.event))
    factual = transition(state, joint)
    graph, dt = state.graph, factual.dt
    held = state.poses[robot].to_node
    committed = factual.outcome.committed
    without = committed[:robot] + committed[robot + 1 :]

    latencies, _ = advance(graph, without, state.latencies, dt)
    latencies = list(latencies)
    latencies[held] = factual.state.latencies[held]
    contributions = interval_contributions(graph, without, state.latencies, dt)
    contributions[held] = interval_contributions(graph, committed, state.latencies, dt)[held]
    z, _ = _track(state, dt, max(contributions, default=Fraction(0)), latencies)

    latency_gap = sum(
        (w * (cf - f) for w, cf, f in zip(graph.weights, latencies, factual.state.latencies)),
        Fraction(0),
    )
    tracker_gap = z - factual.state.z
    cfg = state.config
    return CounterfactualReward(
        latency=latency_gap,
        tracker=tracker_gap,
        combined=cfg.lambda_L * float(latency_gap) + cfg.lambda_z * float(tracker_gap),
    )


def role_labels(state: EventState) -> List[int]:
    r"""Arrival-order rank of each ready robot among the ready robots on its node; 0 when busy."""
    labels = [0] * state.num_robots
    groups = {}
    for r in state.ready_robots():
        groups.setdefault(state.poses[r].to_node, []).append(r)
    for robots in groups.values():
        for rank, r in enumerate(sorted(robots, key=lambda r: (state.arrivals[r], r)), start=1):
            labels[r] = rank
    return labels


def horizon_fraction(state: EventState) -> float:
    T = state.config.T
    if is_infinite(T):
        return 0.0
    if T == 0 or state.eta >= T:
        return 1.0
    return float(state.eta / T)


def observe(
    state: EventState,
    gpe: GpeTable,
    normalizer: "ObservationNormalizer",
    update: bool = False,
) -> torch.FloatTensor:
    r"""Per-robot feature rows.

    Args:
        state (EventState):
            State to encode.
        gpe (GpeTable):
            Spectral node encoding.
        normalizer (ObservationNormalizer):
            Running statistics for the tracker, weighted latencies and remaining times.
        update (bool):
            Fold this state into the statistics before normalizing.
    Returns:
        features (torch.FloatTensor):
            ``(k, 2 d_gpe + 1 + |V| + k + 1 + k + k + 1)`` rows: encodings of the robot's
            from and to nodes, normalized ``log(1 + z)``, normalized weighted latencies,
            normalized remaining times of all robots, ``eta / T``, readiness flags of all
            robots, one-hot role label.
    """
    k = state.num_robots
    if k == 0:
        return torch.zeros((0, 0), dtype=torch.float32)
    tracker = torch.tensor([math.log1p(float(state.z))], dtype=torch.float64)
    weighted = torch.tensor(
        [float(w * l) for w, l in zip(state.graph.weights, state.latencies)], dtype=torch.float64
    )
    remaining = torch.tensor([float(p.remaining) for p in state.poses], dtype=torch.float64)
    if update:
        normalizer.update(tracker, weighted, remaining)

    shared = torch.cat(
        [
            normalizer.tracker.normalize(tracker),
            normalizer.latency.normalize(weighted),
            normalizer.remaining.normalize(remaining),
            torch.tensor([horizon_fraction(state)], dtype=torch.float64),
            torch.tensor([1.0 if p.ready else 0.0 for p in state.poses], dtype=torch.float64),
        ]
    )
    labels = role_labels(state)
    rows = []
    for r, pose in enumerate(state.poses):
        role = torch.zeros(k + 1, dtype=torch.float64)
        role[labels[r]] = 1.0
        rows.append(
            torch.cat(
                [
                    torch.from_numpy(gpe.embed(pose.from_node)),
                    torch.from_numpy(gpe.embed(pose.to_node)),
                    shared,
                    role,
                ]
            )
        )
    return torch.stack(rows).float()


@dataclass
class Trajectory:
    r"""States ``s_0..s_N`` and the ``N`` transitions between them."""

    states: List[EventState]
    transitions: List[Transition] = field(default_factory=list)
    actions: List[Tuple[Command, ...]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.transitions)

    @property
    def dts(self) -> List[Fraction]:
        return [t.dt for t in self.transitions]

    @property
    def trackers(self) -> List[Fraction]:
        return [s.z for s in self.states]

    def to_event_log(self) -> EventLog:
        log = EventLog(graph=self.states[0].graph, initial=self.states[0].world)
        for before, step in zip(self.states, self.transitions):
            log.append(step.outcome, before.world)
        return log


def average_reward_estimate(trajectory: Trajectory, mode: str = "step") -> Fraction:
    r"""Average of the trackers reached by the trajectory's transitions.

    Args:
        trajectory (Trajectory):
            Rollout with ``N >= 1`` transitions.
        mode (str):
            ``"step"`` for ``(1/N) sum z_{n+1}``; ``"time"`` for
            ``sum z_{n+1} dt_n / sum dt_n``.
    """
    if len(trajectory) == 0:
        raise MdpError("cannot average an empty trajectory")
    reached = trajectory.trackers[1:]
    if mode == "step":
        return sum(reached, Fraction(0)) / len(reached)
    if mode == "time":
        dts = trajectory.dts
        return sum((z * dt for z, dt in zip(reached, dts)), Fraction(0)) / sum(dts, Fraction(0))
    raise MdpError("unknown estimator mode {!r}".format(mode))


def waiting_crossover_steps(A: Any, delta: Any) -> int:
    r"""Largest step count at which always waiting on a two-node edge of length ``A``
    still looks no worse than shuttling (value ``2A``) under the step average.

    The step average of waiting is ``delta (N + 1) / 2``; it exceeds ``2A`` exactly
    when ``N`` is above the returned value.
    """
    A, delta = to_rational(A), to_rational(delta)
    return math.floor(4 * A / delta - 1)


class MonitorEnv:
    r"""Rollout driver over the decision process.

    Args:
        graph (MonitorGraph):
            Graph to patrol.
        p0 (Sequence):
            Start node ids or poses.
        config (MdpConfig):
            Decision process parameters.
    """

    def __init__(self, graph: MonitorGraph, p0: Sequence[Any], config: MdpConfig):
        self.graph = graph
        self.p0 = list(p0)
        self.config = config
        self.state: Optional[EventState] = None

    def reset(self, latencies: Optional[Sequence[Any]] = None) -> EventState:
        self.state = mdp_reset(self.graph, self.p0, self.config, latencies)
        return self.state

    def step(self, joint: Sequence[Command], cap: Optional[Fraction] = None) -> Tuple[EventState, Fraction, Fraction]:
        r"""Returns the next state, the reward ``z_n`` of the state acted in, and the interval."""
        if self.state is None:
            raise MdpError("call reset() before step()")
        reward = reward_step(self.state)
        result = transition(self.state, joint, cap)
        self.state = result.state
        return result.state, reward, result.dt

    def rollout(
        self,
        policy: "Policy",
        horizon: Any,
        seed: Optional[int] = None,
        max_events: Optional[int] = None,
    ) -> Trajectory:
        r"""Runs ``policy`` until the clock reaches ``horizon`` (physical time).

        Args:
            policy (Policy):
                Decision rule; its per-rollout memory is created here.
            horizon (Any):
                Physical stop time; the last interval is cut there.
            seed (int, optional):
                Seed of the rollout random generator.
            max_events (int, optional):
                Safety bound on the number of events.
        """
        horizon = to_rational(horizon)
        rng = np.random.default_rng(seed)
        state = self.reset()
        memory = policy.reset(state, rng)
        trajectory = Trajectory(states=[state])
        while state.clock < horizon:
            if max_events is not None and len(trajectory) >= max_events:
                break
            joint = tuple(policy.decide(state, memory, rng))
            step = transition(state, joint, cap=horizon - state.clock)
            trajectory.transitions.append(step)
            trajectory.actions.append(joint)
            trajectory.states.append(step.state)
            state = step.state
        self.state = state
        patrolbench.logging.debug(
            "rollout",
            "policy={} events={} clock={} z={}".format(
                policy.name, len(trajectory), format_decimal(state.clock), format_decimal(state.z)
            ),
        )
        return trajectory
