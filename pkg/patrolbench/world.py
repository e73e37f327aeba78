# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Exact event-driven simulation of robots patrolling a monitoring graph.

A node is visited when a robot arrives at it, when a robot departs from it, and
continuously while a stationary robot occupies it. Between events every latency
grows linearly, so the worst weighted latency is piecewise linear and each of its
suprema is reached at the left limit of an event time.
"""

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import patrolbench
from .errors import CommandError, HorizonError, InfeasiblePlanError, UnknownNodeError
from .graph import GraphPoint, MonitorGraph
from .rational import format_decimal, rational_to_str, to_rational


@dataclass(frozen=True)
class RobotPose:
    r"""Robot heading from ``from_node`` to ``to_node`` with ``remaining`` time left.

    ``from_node == to_node`` is a stationary robot (waiting when ``remaining > 0``).
    ``remaining == 0`` means the robot sits on ``to_node`` and must decide.
    """

    from_node: int
    to_node: int
    remaining: Fraction = Fraction(0)

    @classmethod
    def at(cls, node: int) -> "RobotPose":
        return cls(node, node, Fraction(0))

    @property
    def ready(self) -> bool:
        return self.remaining == 0

    @property
    def stationary(self) -> bool:
        return self.from_node == self.to_node

    def location(self, graph: MonitorGraph) -> GraphPoint:
        if self.stationary or self.ready:
            return GraphPoint.at(self.to_node)
        length = graph.length(self.from_node, self.to_node)
        return GraphPoint.on_edge(self.to_node, self.from_node, self.remaining, length)

    def describe(self, graph: MonitorGraph) -> List[str]:
        return [
            graph.node_id(self.from_node),
            graph.node_id(self.to_node),
            rational_to_str(self.remaining),
        ]


# Commands issued to a ready robot.
@dataclass(frozen=True)
class Move:
    target: int


@dataclass(frozen=True)
class Wait:
    duration: Fraction


@dataclass(frozen=True)
class NoOp:
    r"""Busy robots keep their motion; a ready robot given ``NoOp`` idles and does not schedule an event."""

    pass


Command = Union[Move, Wait, NoOp]


# Plan segments.
@dataclass(frozen=True)
class Traverse:
    source: int
    target: int


@dataclass(frozen=True)
class Dwell:
    node: int
    duration: Fraction


Segment = Union[Traverse, Dwell]


@dataclass(frozen=True)
class SegmentPlan:
    r"""Per-robot sequences of segments. A robot whose sequence is exhausted idles."""

    segments: Tuple[Tuple[Segment, ...], ...]

    def __len__(self) -> int:
        return len(self.segments)

    @classmethod
    def idle(cls, k: int) -> "SegmentPlan":
        return cls(tuple(() for _ in range(k)))

    @classmethod
    def from_spec(cls, graph: MonitorGraph, spec: Sequence[Sequence[Any]]) -> "SegmentPlan":
        r"""Builds a plan from node ids.

        Args:
            spec (Sequence[Sequence[Any]]):
                One list per robot. Entries are ``{"traverse": [u, v]}``, ``{"wait": [v, d]}``
                or the tuples ``("traverse", u, v)`` / ``("wait", v, d)``.
        """
        robots = []
        for entries in spec:
            segments: List[Segment] = []
            for entry in entries:
                if isinstance(entry, Mapping):
                    if len(entry) != 1:
                        raise InfeasiblePlanError("segment {} needs exactly one kind".format(entry))
                    kind, args = next(iter(entry.items()))
                else:
                    kind, args = entry[0], list(entry[1:])
                if kind == "traverse":
                    segments.append(Traverse(graph.index(args[0]), graph.index(args[1])))
                elif kind == "wait":
                    segments.append(Dwell(graph.index(args[0]), to_rational(args[1])))
                else:
                    raise InfeasiblePlanError("unknown segment kind {!r}".format(kind))
            robots.append(tuple(segments))
        return cls(tuple(robots))

    def to_spec(self, graph: MonitorGraph) -> List[List[Dict[str, List[str]]]]:
        out = []
        for segments in self.segments:
            row = []
            for s in segments:
                if isinstance(s, Traverse):
                    row.append({"traverse": [graph.node_id(s.source), graph.node_id(s.target)]})
                else:
                    row.append({"wait": [graph.node_id(s.node), rational_to_str(s.duration)]})
            out.append(row)
        return out

    def duration(self, graph: MonitorGraph, robot: int) -> Fraction:
        return sum(
            (
                graph.length(s.source, s.target) if isinstance(s, Traverse) else s.duration
                for s in self.segments[robot]
            ),
            Fraction(0),
        )


@dataclass(frozen=True)
class Visit:
    node: int
    time: Fraction


@dataclass(frozen=True)
class WorldState:
    r"""Joint robot poses and node latencies at ``clock``.

    ``arrivals[r]`` is the time robot r last arrived at the node it currently heads to
    or occupies; it orders co-located robots.
    """

    graph: MonitorGraph = field(repr=False, compare=False)
    poses: Tuple[RobotPose, ...]
    latencies: Tuple[Fraction, ...]
    clock: Fraction = Fraction(0)
    arrivals: Tuple[Fraction, ...] = ()

    @property
    def num_robots(self) -> int:
        return len(self.poses)

    def ready_robots(self) -> List[int]:
        return [r for r, p in enumerate(self.poses) if p.ready]

    def worst_weighted_latency(self) -> Fraction:
        return max(
            (w * l for w, l in zip(self.graph.weights, self.latencies)), default=Fraction(0)
        )


@dataclass(frozen=True)
class StepOutcome:
    r"""Everything a single event produces: the next state, the realized interval and
    the committed poses the interval was simulated with."""

    state: WorldState
    dt: Fraction
    peak: Fraction
    visits: Tuple[Visit, ...]
    committed: Tuple[RobotPose, ...]
    action: Tuple[Command, ...]


@dataclass(frozen=True)
class EventRecord:
    t: Fraction
    state: WorldState
    action: Tuple[Command, ...]
    dt: Fraction
    committed: Tuple[RobotPose, ...]
    peak: Fraction


@dataclass
class EventLog:
    r"""Ordered event records of one rollout plus its initial and final states."""

    graph: MonitorGraph
    initial: WorldState
    records: List[EventRecord] = field(default_factory=list)
    final: Optional[WorldState] = None

    def __post_init__(self):
        if self.final is None:
            self.final = self.initial

    def __len__(self) -> int:
        return len(self.records)

    @property
    def horizon(self) -> Fraction:
        return self.final.clock

    def append(self, outcome: StepOutcome, before: WorldState):
        self.records.append(
            EventRecord(
                t=before.clock,
                state=before,
                action=outcome.action,
                dt=outcome.dt,
                committed=outcome.committed,
                peak=outcome.peak,
            )
        )
        self.final = outcome.state

    def event_times(self) -> List[Fraction]:
        return [r.t for r in self.records] + [self.horizon]


def make_pose(graph: MonitorGraph, from_id: Any, to_id: Any, remaining: Any = 0) -> RobotPose:
    r"""Validated pose from node ids. A moving pose needs an edge and ``0 <= remaining <= length``."""
    u, v = graph.index(from_id), graph.index(to_id)
    remaining = to_rational(remaining)
    if remaining < 0:
        raise CommandError("negative remaining time {}".format(remaining))
    if u != v:
        length = graph.length(u, v)
        if remaining > length:
            raise CommandError(
                "remaining {} exceeds edge length {}".format(remaining, length)
            )
        if remaining == 0:
            return RobotPose.at(v)
    return RobotPose(u, v, remaining)


def _check_pose(graph: MonitorGraph, pose: RobotPose) -> RobotPose:
    for n in (pose.from_node, pose.to_node):
        if not 0 <= n < graph.num_nodes:
            raise UnknownNodeError("node index {} out of range".format(n))
    return make_pose(
        graph, graph.node_id(pose.from_node), graph.node_id(pose.to_node), pose.remaining
    )


def world_reset(
    graph: MonitorGraph,
    p0: Sequence[Union[Any, RobotPose]],
    latencies: Optional[Sequence[Any]] = None,
) -> WorldState:
    r"""Initial world at clock 0.

    Args:
        graph (MonitorGraph):
            Graph to patrol.
        p0 (Sequence):
            One entry per robot: a node id, or a ``RobotPose`` for a start inside an edge.
        latencies (Sequence, optional):
            Initial node latencies; all zero by default. Occupied nodes are forced to 0.
    Returns:
        state (WorldState):
            World with every robot in its start pose.
    """
    poses = tuple(
        _check_pose(graph, p) if isinstance(p, RobotPose) else RobotPose.at(graph.index(p))
        for p in p0
    )
    if latencies is None:
        initial = [Fraction(0)] * graph.num_nodes
    else:
        if len(latencies) != graph.num_nodes:
            raise CommandError("need one initial latency per node")
        initial = [to_rational(l) for l in latencies]
    for pose in poses:
        if pose.stationary:
            initial[pose.to_node] = Fraction(0)
    return WorldState(
        graph=graph,
        poses=poses,
        latencies=tuple(initial),
        clock=Fraction(0),
        arrivals=tuple(Fraction(0) for _ in poses),
    )


def _normalize_commands(
    state: WorldState, commands: Union[Mapping[int, Command], Sequence[Optional[Command]]]
) -> Tuple[Command, ...]:
    k = state.num_robots
    if isinstance(commands, Mapping):
        unknown = [r for r in commands if not 0 <= r < k]
        if unknown:
            raise CommandError("commands for unknown robots {}".format(unknown))
        listed = [commands.get(r) for r in range(k)]
    else:
        if len(commands) != k:
            raise CommandError("expected {} commands, got {}".format(k, len(commands)))
        listed = list(commands)
    out: List[Command] = []
    for r, (pose, command) in enumerate(zip(state.poses, listed)):
        if pose.ready:
            if command is None:
                raise CommandError("ready robot {} has no command".format(r))
        elif command is None or isinstance(command, NoOp):
            command = NoOp()
        else:
            raise CommandError("robot {} is busy and cannot take {}".format(r, command))
        out.append(command)
    return tuple(out)


def commit(state: WorldState, action: Sequence[Command]) -> Tuple[RobotPose, ...]:
    r"""Poses after ready robots start executing their commands."""
    graph = state.graph
    committed = []
    for r, (pose, command) in enumerate(zip(state.poses, action)):
        if not pose.ready or isinstance(command, NoOp):
            committed.append(pose)
        elif isinstance(command, Move):
            if not graph.has_edge(pose.to_node, command.target):
                raise CommandError(
                    "robot {} cannot move from {} to non-adjacent {}".format(
                        r, graph.node_id(pose.to_node), command.target
                    )
                )
            committed.append(
                RobotPose(pose.to_node, command.target, graph.length(pose.to_node, command.target))
            )
        elif isinstance(command, Wait):
            duration = to_rational(command.duration)
            if duration <= 0:
                raise CommandError("robot {} has nonpositive wait {}".format(r, duration))
            committed.append(RobotPose(pose.to_node, pose.to_node, duration))
        else:
            raise CommandError("unknown command {!r}".format(command))
    return tuple(committed)


def occupied_nodes(committed: Sequence[RobotPose]) -> set:
    return {p.to_node for p in committed if p.stationary}


def interval_contributions(
    graph: MonitorGraph,
    committed: Sequence[RobotPose],
    latencies: Sequence[Fraction],
    dt: Fraction,
) -> List[Fraction]:
    r"""Per-node supremum of ``w(v) L_v`` over ``(t, t + dt]``, left limits included.

    Nodes held by a stationary robot through the interval contribute 0.
    """
    held = occupied_nodes(committed)
    return [
        Fraction(0) if v in held else graph.weights[v] * (latencies[v] + dt)
        for v in range(graph.num_nodes)
    ]


def interval_peak(
    graph: MonitorGraph,
    committed: Sequence[RobotPose],
    latencies: Sequence[Fraction],
    dt: Fraction,
) -> Fraction:
    return max(interval_contributions(graph, committed, latencies, dt), default=Fraction(0))


def advance(
    graph: MonitorGraph,
    committed: Sequence[RobotPose],
    latencies: Sequence[Fraction],
    dt: Fraction,
) -> Tuple[Tuple[Fraction, ...], List[int]]:
    r"""Latencies after ``dt`` and the nodes visited at the end of the interval.

    Args:
        graph (MonitorGraph):
            Graph being patrolled.
        committed (Sequence[RobotPose]):
            Poses for the interval, commands already applied.
        latencies (Sequence[Fraction]):
            Latencies at the start of the interval.
        dt (Fraction):
            Interval length; no robot may have ``0 < remaining < dt``.
    Returns:
        latencies (Tuple[Fraction, ...]):
            Latencies at the end of the interval.
        visited (List[int]):
            Sorted nodes reset at the end of the interval.
    """
    visited = occupied_nodes(committed)
    for pose in committed:
        if not pose.stationary and pose.remaining == dt:
            visited.add(pose.to_node)
    return (
        tuple(Fraction(0) if v in visited else latencies[v] + dt for v in range(graph.num_nodes)),
        sorted(visited),
    )


def step_outcome(
    state: WorldState,
    commands: Union[Mapping[int, Command], Sequence[Optional[Command]]],
    cap: Optional[Fraction] = None,
) -> StepOutcome:
    r"""Applies one joint command and advances to the next event.

    The interval ends at the earliest completion among robots that are not idling,
    or at ``clock + cap`` when that comes first.
    """
    action = _normalize_commands(state, commands)
    committed = commit(state, action)
    pending = [p.remaining for p in committed if p.remaining > 0]
    if cap is not None:
        cap = to_rational(cap)
        if cap <= 0:
            raise CommandError("event cap must be positive, got {}".format(cap))
        pending.append(cap)
    if not pending:
        raise CommandError("every robot idles and no cap bounds the interval")
    dt = min(pending)

    graph = state.graph
    peak = interval_peak(graph, committed, state.latencies, dt)
    latencies, visited = advance(graph, committed, state.latencies, dt)
    clock = state.clock + dt

    poses, arrivals = [], list(state.arrivals)
    for r, pose in enumerate(committed):
        if pose.remaining == 0:
            poses.append(pose)
        elif pose.remaining == dt:
            if not pose.stationary:
                arrivals[r] = clock
            poses.append(RobotPose.at(pose.to_node))
        else:
            poses.append(RobotPose(pose.from_node, pose.to_node, pose.remaining - dt))

    return StepOutcome(
        state=WorldState(
            graph=graph,
            poses=tuple(poses),
            latencies=latencies,
            clock=clock,
            arrivals=tuple(arrivals),
        ),
        dt=dt,
        peak=peak,
        visits=tuple(Visit(v, clock) for v in visited),
        committed=committed,
        action=action,
    )


def world_step(
    state: WorldState,
    commands: Union[Mapping[int, Command], Sequence[Optional[Command]]],
    cap: Optional[Fraction] = None,
) -> Tuple[WorldState, List[Visit]]:
    r"""Advances the world to its next event.

    Args:
        state (WorldState):
            Current world.
        commands (Mapping or Sequence):
            A command for every ready robot, either indexed by robot or as a per-robot
            sequence where busy robots hold ``None`` or ``NoOp``.
        cap (Fraction, optional):
            Upper bound on the interval length.
    Returns:
        state (WorldState):
            World at the next event time.
        visits (List[Visit]):
            Nodes visited at the new event time.
    Raises:
        CommandError: A busy robot is commanded, a ready robot is not, a move
            target is not adjacent or a wait is not positive.
    """
    outcome = step_outcome(state, commands, cap)
    return outcome.state, list(outcome.visits)


class _PlanCursor:
    def __init__(self, prefix: Sequence[Segment], cycle: Sequence[Segment]):
        self.prefix = list(prefix)
        self.cycle = list(cycle)
        self.position = 0

    def next(self) -> Optional[Segment]:
        if self.position < len(self.prefix):
            segment = self.prefix[self.position]
        elif self.cycle:
            segment = self.cycle[(self.position - len(self.prefix)) % len(self.cycle)]
        else:
            return None
        self.position += 1
        return segment


def _segment_command(graph: MonitorGraph, robot: int, node: int, segment: Segment) -> Command:
    if isinstance(segment, Traverse):
        if segment.source != node or not graph.has_edge(segment.source, segment.target):
            raise InfeasiblePlanError(
                "robot {} at node {} cannot traverse ({}, {})".format(
                    robot,
                    graph.node_id(node),
                    graph.node_id(segment.source),
                    graph.node_id(segment.target),
                )
            )
        return Move(segment.target)
    if segment.node != node or segment.duration <= 0:
        raise InfeasiblePlanError(
            "robot {} at node {} cannot wait {} at {}".format(
                robot, graph.node_id(node), segment.duration, graph.node_id(segment.node)
            )
        )
    return Wait(segment.duration)


def run_plan(
    graph: MonitorGraph,
    p0: Sequence[Union[Any, RobotPose]],
    plan: SegmentPlan,
    horizon: Any,
    cycle: Optional[SegmentPlan] = None,
    latencies: Optional[Sequence[Any]] = None,
) -> EventLog:
    r"""Executes a plan from ``p0`` until the clock reaches ``horizon``.

    Args:
        graph (MonitorGraph):
            Graph to patrol.
        p0 (Sequence):
            Start node ids or poses, one per robot.
        plan (SegmentPlan):
            Segments each robot runs first.
        horizon (Any):
            Physical end time of the log.
        cycle (SegmentPlan, optional):
            Segments each robot repeats forever once its ``plan`` is exhausted.
        latencies (Sequence, optional):
            Initial latencies; zero by default.
    Returns:
        log (EventLog):
            Complete log ending exactly at ``horizon``.
    Raises:
        InfeasiblePlanError: A segment does not start where the robot is.
    """
    horizon = to_rational(horizon)
    state = world_reset(graph, p0, latencies)
    if len(plan) != state.num_robots or (cycle is not None and len(cycle) != state.num_robots):
        raise InfeasiblePlanError(
            "plan covers {} robots but {} start poses were given".format(len(plan), state.num_robots)
        )
    cursors = [
        _PlanCursor(plan.segments[r], cycle.segments[r] if cycle is not None else ())
        for r in range(state.num_robots)
    ]
    log = EventLog(graph=graph, initial=state)
    while state.clock < horizon:
        commands: Dict[int, Command] = {}
        for r in state.ready_robots():
            segment = cursors[r].next()
            if segment is None:
                commands[r] = NoOp()
            else:
                commands[r] = _segment_command(graph, r, state.poses[r].to_node, segment)
        outcome = step_outcome(state, commands, cap=horizon - state.clock)
        log.append(outcome, state)
        state = outcome.state
    patrolbench.logging.debug(
        "run_plan", "events={} horizon={}".format(len(log), format_decimal(horizon))
    )
    return log


def canonical_motion(
    graph: MonitorGraph, poses: Sequence[RobotPose], targets: Sequence[int]
) -> Tuple[SegmentPlan, Fraction]:
    r"""Steers every robot to its target node along the tie-broken shortest path.

    Robots in the middle of an edge finish it first; waiting robots stop waiting at
    once. Each robot then waits at its target until the last one arrives.

    Returns:
        plan (SegmentPlan):
            Segments issued once each robot is ready.
        arrival (Fraction):
            Synchronized arrival time, measured from now.
    """
    routes, times = [], []
    for pose, target in zip(poses, targets):
        start = pose.to_node
        offset = Fraction(0) if pose.stationary else pose.remaining
        path = graph.node_path(start, target)
        routes.append([Traverse(a, b) for a, b in zip(path, path[1:])])
        times.append(offset + graph.dist[start][target])
    arrival = max(times, default=Fraction(0))
    for route, time, target in zip(routes, times, targets):
        if time < arrival:
            route.append(Dwell(target, arrival - time))
    return SegmentPlan(tuple(tuple(r) for r in routes)), arrival


def _locate(log: EventLog, t: Fraction) -> Tuple[Optional[EventRecord], WorldState]:
    if t < 0 or t > log.horizon:
        raise HorizonError(
            "time {} outside the logged window [0, {}]".format(t, log.horizon)
        )
    if t == log.horizon:
        return None, log.final
    lo, hi = 0, len(log.records) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if log.records[mid].t <= t:
            lo = mid
        else:
            hi = mid - 1
    record = log.records[lo]
    return record, record.state


def latencies_at(log: EventLog, t: Any) -> Tuple[Fraction, ...]:
    t = to_rational(t)
    record, state = _locate(log, t)
    if record is None or t == record.t:
        return state.latencies
    held = occupied_nodes(record.committed)
    return tuple(
        Fraction(0) if v in held else l + (t - record.t) for v, l in enumerate(state.latencies)
    )


def latency_at(log: EventLog, v: Any, t: Any) -> Fraction:
    r"""Latency of node ``v`` (node id) at time ``t``: time since its last visit."""
    return latencies_at(log, t)[log.graph.index(v)]


def worst_weighted_latency(log: EventLog, t: Any) -> Fraction:
    return max(
        (w * l for w, l in zip(log.graph.weights, latencies_at(log, t))), default=Fraction(0)
    )


def tail_sup(log: EventLog, T: Any, horizon: Any) -> Fraction:
    r"""Exact ``sup { M(t) : T <= t <= horizon }`` of the worst weighted latency.

    Within an event interval M only grows, so the supremum over its part of the
    window is the value at the window start or the left limit at the window end.
    """
    T, horizon = to_rational(T), to_rational(horizon)
    if T > horizon:
        raise HorizonError("tail start {} is after the horizon {}".format(T, horizon))
    best = max(worst_weighted_latency(log, T), worst_weighted_latency(log, horizon))
    graph = log.graph
    for record in log.records:
        end = record.t + record.dt
        if end <= T:
            continue
        if record.t >= horizon:
            break
        b = min(horizon, end)
        best = max(best, interval_peak(graph, record.committed, record.state.latencies, b - record.t))
    return best


def _encode_command(graph: MonitorGraph, command: Command) -> Any:
    if isinstance(command, Move):
        return {"move": graph.node_id(command.target)}
    if isinstance(command, Wait):
        return {"wait": rational_to_str(command.duration)}
    return None


def _decode_command(graph: MonitorGraph, data: Any) -> Command:
    if data is None:
        return NoOp()
    if "move" in data:
        return Move(graph.index(data["move"]))
    return Wait(to_rational(data["wait"]))


def save_event_log(log: EventLog, path: str):
    r"""Writes a log as JSON lines: one header record then one record per event."""
    graph = log.graph
    with open(os.path.expanduser(path), "w") as f:
        header = {
            "header": {
                "p0": [p.describe(graph) for p in log.initial.poses],
                "latencies": [rational_to_str(l) for l in log.initial.latencies],
                "horizon": rational_to_str(log.horizon),
                "events": len(log),
            }
        }
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for record in log.records:
            f.write(
                json.dumps(
                    {
                        "t": rational_to_str(record.t),
                        "poses": [p.describe(graph) for p in record.state.poses],
                        "latencies": [rational_to_str(l) for l in record.state.latencies],
                        "action": [_encode_command(graph, c) for c in record.action],
                        "dt": rational_to_str(record.dt),
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_event_log(graph: MonitorGraph, path: str) -> EventLog:
    r"""Replays a saved log on ``graph``; the replay must reproduce every record."""
    with open(os.path.expanduser(path)) as f:
        lines = [json.loads(line) for line in f if line.strip()]
    if not lines or "header" not in lines[0]:
        raise HorizonError("{} has no log header".format(path))
    header = lines[0]["header"]
    p0 = [make_pose(graph, *entry) for entry in header["p0"]]
    state = world_reset(graph, p0, header.get("latencies"))
    log = EventLog(graph=graph, initial=state)
    for entry in lines[1:]:
        action = [_decode_command(graph, c) for c in entry["action"]]
        dt = to_rational(entry["dt"])
        if to_rational(entry["t"]) != state.clock:
            raise HorizonError("record at t={} does not follow clock {}".format(entry["t"], state.clock))
        outcome = step_outcome(state, action, cap=dt)
        if outcome.dt != dt:
            raise HorizonError("replayed interval {} differs from logged {}".format(outcome.dt, dt))
        log.append(outcome, state)
        state = outcome.state
    if log.horizon != to_rational(header["horizon"]):
        raise HorizonError("replay ends at {} instead of {}".format(log.horizon, header["horizon"]))
    return log
