# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Exact optima of tiny instances and periodic strategies.

The search walks joint event decisions depth first. A branch closes as soon as a
joint state (poses, exact latencies and whether the tail has started) repeats on
the current path: from there on the strategy can repeat the enclosed cycle
forever, so the branch value is known exactly.
"""

import sys
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement, product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import patrolbench
from .errors import ConfigError, NotCertifiedError, OracleError, SearchBoundsExceeded, VerificationFailure
from .graph import MonitorGraph, transient_threshold
from .mdp import EventState, MdpConfig, legal_actions, mdp_reset, transition
from .rational import (
    INFINITY,
    Rational,
    format_decimal,
    is_infinite,
    rational_to_str,
    to_rational,
    to_rational_or_infinity,
)
from .world import (
    Command,
    Dwell,
    EventLog,
    Move,
    NoOp,
    RobotPose,
    Segment,
    SegmentPlan,
    Traverse,
    WorldState,
    canonical_motion,
    latencies_at,
    make_pose,
    run_plan,
    tail_sup,
)

# Expanded nodes between two progress messages.
PROGRESS_EVERY = 10000
# Depth limit of the first deepening round.
FIRST_DEPTH = 8


@dataclass(frozen=True)
class SearchBounds:
    r"""Limits of one exact search.

    Args:
        depth_cap (int):
            Largest number of events on a branch.
        latency_cap (Fraction, optional):
            Branches whose tail tracker exceeds it are dropped.
        incumbent (Fraction, optional):
            Known upper bound on the optimum; only strictly better strategies are kept.
    """

    depth_cap: int = 1024
    latency_cap: Optional[Fraction] = None
    incumbent: Optional[Fraction] = None

    def __post_init__(self):
        if int(self.depth_cap) != self.depth_cap or self.depth_cap < 1:
            raise ConfigError("depth_cap must be a positive integer, got {}".format(self.depth_cap))
        for name in ("latency_cap", "incumbent"):
            value = getattr(self, name)
            if value is None:
                continue
            value = to_rational(value)
            if value <= 0:
                raise ConfigError("{} must be positive, got {}".format(name, value))
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class PeriodicStrategy:
    r"""Prefix segments followed by a cycle every robot repeats forever.

    Robot ``r`` runs ``prefix.segments[r]`` and then loops over ``cycle.segments[r]``.
    The joint configuration at ``start`` recurs every ``period`` time units.
    """

    graph: MonitorGraph = field(repr=False, compare=False)
    p0: Tuple[RobotPose, ...]
    latencies: Tuple[Fraction, ...]
    prefix: SegmentPlan
    cycle: SegmentPlan
    start: Fraction
    period: Fraction

    def __post_init__(self):
        if self.period <= 0:
            raise OracleError("a periodic strategy needs a positive period, got {}".format(self.period))
        if len(self.prefix) != len(self.p0) or len(self.cycle) != len(self.p0):
            raise OracleError("prefix and cycle must cover every robot")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p0": [p.describe(self.graph) for p in self.p0],
            "latencies": [rational_to_str(l) for l in self.latencies],
            "prefix": self.prefix.to_spec(self.graph),
            "cycle": self.cycle.to_spec(self.graph),
            "start": rational_to_str(self.start),
            "period": rational_to_str(self.period),
        }

    @classmethod
    def from_dict(cls, graph: MonitorGraph, data: Dict[str, Any]) -> "PeriodicStrategy":
        return cls(
            graph=graph,
            p0=tuple(make_pose(graph, *entry) for entry in data["p0"]),
            latencies=tuple(to_rational(l) for l in data["latencies"]),
            prefix=SegmentPlan.from_spec(graph, data["prefix"]),
            cycle=SegmentPlan.from_spec(graph, data["cycle"]),
            start=to_rational(data["start"]),
            period=to_rational(data["period"]),
        )


@dataclass
class OracleResult:
    r"""Outcome of :func:`exact_optimum` with its certificate."""

    j_star: Rational
    strategy: Optional[PeriodicStrategy]
    certified: bool
    nodes_expanded: int
    depth_cap_hit: bool = False
    latency_pruned: bool = False
    bounds: SearchBounds = field(default_factory=SearchBounds)

    def require_strategy(self) -> PeriodicStrategy:
        if self.strategy is None:
            raise SearchBoundsExceeded(
                "no branch closed within depth_cap={}".format(self.bounds.depth_cap)
            )
        return self.strategy

    def require_certified(self) -> "OracleResult":
        if not self.certified:
            raise NotCertifiedError(
                "search is not certified (depth cap hit: {}, latency cap pruned: {})".format(
                    self.depth_cap_hit, self.latency_pruned
                )
            )
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "j_star": rational_to_str(self.j_star),
            "certified": self.certified,
            "nodes_expanded": self.nodes_expanded,
            "depth_cap": self.bounds.depth_cap,
            "depth_cap_hit": self.depth_cap_hit,
            "latency_pruned": self.latency_pruned,
            "cycle": None if self.strategy is None else self.strategy.to_dict(),
        }


def _recurrence_key(state: EventState) -> Tuple[Any, ...]:
    return (state.poses, state.latencies, state.active)


def _transposition_key(state: EventState) -> Tuple[Any, ...]:
    # Robots are interchangeable; before the tail starts the elapsed time matters too.
    poses = tuple(sorted(state.poses, key=lambda p: (p.from_node, p.to_node, p.remaining)))
    return (poses, state.latencies, state.active, None if state.active else state.eta)


def _first_visit(state: EventState, node: int) -> Fraction:
    graph = state.graph
    best = None
    for pose in state.poses:
        if pose.stationary and pose.to_node == node:
            return Fraction(0)
        time = pose.remaining + graph.dist[pose.to_node][node]
        best = time if best is None else min(best, time)
    return best


def _lower_bound(state: EventState) -> Fraction:
    r"""No completion of ``state`` scores below this.

    Node ``v`` cannot be visited before the earliest robot arrival, so its weighted
    latency reaches ``w(v) (L_v + arrival)`` first; it counts once that moment lies
    inside the tail window.
    """
    graph, config = state.graph, state.config
    bound = state.z if state.active else Fraction(0)
    for v in range(graph.num_nodes):
        arrival = _first_visit(state, v)
        if not state.active and state.eta + arrival <= config.T:
            continue
        bound = max(bound, graph.weights[v] * (state.latencies[v] + arrival))
    return bound


def joint_actions(state: EventState) -> List[Tuple[Command, ...]]:
    r"""Joint decisions of the ready robots, one per multiset for robots that share a node."""
    groups: Dict[int, List[int]] = {}
    for r in state.ready_robots():
        groups.setdefault(state.poses[r].to_node, []).append(r)
    per_group = []
    for node in sorted(groups):
        robots = groups[node]
        options = legal_actions(state, robots[0]).legal_actions()
        per_group.append(
            [
                list(zip(robots, (options[i] for i in choice)))
                for choice in combinations_with_replacement(range(len(options)), len(robots))
            ]
        )
    joints = []
    for combo in product(*per_group):
        joint: List[Command] = [NoOp()] * state.num_robots
        for assignment in combo:
            for r, command in assignment:
                joint[r] = command
        joints.append(tuple(joint))
    return joints


@dataclass
class _Closure:
    value: Fraction
    actions: List[Tuple[Command, ...]]
    start: int


class _Search:
    def __init__(self, bounds: SearchBounds, depth: int, closure: Optional[_Closure] = None):
        self.bounds = bounds
        self.depth = depth
        self.best: Rational = bounds.incumbent if bounds.incumbent is not None else INFINITY
        self.closure = closure
        if closure is not None:
            self.best = closure.value
        self.nodes = 0
        self.depth_hit = False
        self.latency_pruned = False
        self.pruned = 0
        self.transposed = 0
        self.closed = 0
        self.table: Dict[Tuple[Any, ...], Tuple[Fraction, int, bool]] = {}
        self.on_path: Dict[Tuple[Any, ...], int] = {}

    def _dominated(self, bound: Fraction) -> bool:
        return bound > self.best or (bound == self.best and self.closure is not None)

    def _close(self, value: Fraction, actions: List[Tuple[Command, ...]], start: int):
        self.closed += 1
        if value < self.best or (value == self.best and self.closure is None):
            self.best = value
            self.closure = _Closure(value=value, actions=list(actions), start=start)

    def run(self, path: List[EventState], peaks: List[Fraction], actions: List[Tuple[Command, ...]]) -> bool:
        for i, state in enumerate(path):
            self.on_path[_recurrence_key(state)] = i
        return self._expand(path, peaks, actions)

    def _expand(self, path: List[EventState], peaks: List[Fraction], actions: List[Tuple[Command, ...]]) -> bool:
        state = path[-1]
        self.nodes += 1
        if self.nodes % PROGRESS_EVERY == 0:
            patrolbench.logging.debug(
                "oracle", "nodes={} depth={} best={}".format(self.nodes, len(actions), format_decimal(self.best))
            )
        if len(actions) >= self.depth:
            self.depth_hit = True
            return False

        complete = True
        for joint in joint_actions(state):
            step = transition(state, joint)
            child = step.state
            key = _recurrence_key(child)
            start = self.on_path.get(key)
            if start is not None:
                value = child.z if child.active else max(peaks[start:] + [step.outcome.peak])
                self._close(value, actions + [joint], start)
                continue
            if self._dominated(_lower_bound(child)):
                self.pruned += 1
                continue
            cap = self.bounds.latency_cap
            if cap is not None and child.active and child.z > cap:
                self.latency_pruned = True
                continue
            tkey = _transposition_key(child)
            seen = self.table.get(tkey)
            depth = len(actions) + 1
            if seen is not None and seen[0] <= child.z and (seen[2] or seen[1] <= depth):
                self.transposed += 1
                continue

            self.on_path[key] = len(path)
            path.append(child)
            peaks.append(step.outcome.peak)
            actions.append(joint)
            done = self._expand(path, peaks, actions)
            actions.pop()
            peaks.pop()
            path.pop()
            del self.on_path[key]

            if seen is None or child.z <= seen[0]:
                self.table[tkey] = (child.z, depth, done)
            complete = complete and done
        return complete


@dataclass(frozen=True)
class _SubtreeJob:
    root: EventState
    joint: Tuple[Command, ...]
    bounds: SearchBounds


def _deepen(
    bounds: SearchBounds,
    path: List[EventState],
    peaks: List[Fraction],
    actions: List[Tuple[Command, ...]],
) -> Tuple[_Search, bool, int, bool]:
    r"""Repeats the search with doubling depth limits up to ``bounds.depth_cap``.

    Each round starts from the best closure of the previous one, so a shallow cycle
    prunes the deep branches that would otherwise run into the cap before any
    cycle is known.

    Returns:
        search (_Search):
            Last round.
        complete (bool):
            Whether the last round closed or pruned every branch.
        nodes (int):
            Nodes expanded over all rounds.
        latency_pruned (bool):
            Whether any round dropped a branch at the latency cap.
    """
    depth = min(FIRST_DEPTH, bounds.depth_cap)
    closure: Optional[_Closure] = None
    nodes, latency_pruned = 0, False
    while True:
        search = _Search(bounds, depth, closure)
        complete = search.run(list(path), list(peaks), list(actions))
        nodes += search.nodes
        latency_pruned = latency_pruned or search.latency_pruned
        closure = search.closure
        if not search.depth_hit or depth >= bounds.depth_cap:
            return search, complete, nodes, latency_pruned
        patrolbench.logging.debug("oracle", "depth {} cut a branch; deepening".format(depth))
        depth = min(2 * depth, bounds.depth_cap)


def _search_subtree(job: _SubtreeJob) -> Tuple[Optional[_Closure], int, bool, bool, bool]:
    r"""Searches below one root decision; module level so worker processes can run it."""
    step = transition(job.root, job.joint)
    child = step.state
    if _recurrence_key(child) == _recurrence_key(job.root):
        search = _Search(job.bounds, 1)
        value = child.z if child.active else step.outcome.peak
        search._close(value, [job.joint], 0)
        return search.closure, 1, True, False, False
    search, complete, nodes, latency_pruned = _deepen(
        job.bounds, [job.root, child], [step.outcome.peak], [job.joint]
    )
    return search.closure, nodes, complete, search.depth_hit, latency_pruned


def _plan_from_actions(
    states: Sequence[EventState], actions: Sequence[Tuple[Command, ...]], lo: int, hi: int
) -> SegmentPlan:
    k = states[0].num_robots
    segments: List[List[Segment]] = [[] for _ in range(k)]
    for state, joint in zip(states[lo:hi], actions[lo:hi]):
        for r, command in enumerate(joint):
            node = state.poses[r].to_node
            if isinstance(command, Move):
                segments[r].append(Traverse(node, command.target))
            elif not isinstance(command, NoOp):
                segments[r].append(Dwell(node, command.duration))
    return SegmentPlan(tuple(tuple(s) for s in segments))


def _strategy_from_closure(root: EventState, closure: _Closure) -> PeriodicStrategy:
    states = [root]
    for joint in closure.actions:
        states.append(transition(states[-1], joint).state)
    m = len(closure.actions)
    return PeriodicStrategy(
        graph=root.graph,
        p0=root.poses,
        latencies=root.latencies,
        prefix=_plan_from_actions(states, closure.actions, 0, closure.start),
        cycle=_plan_from_actions(states, closure.actions, closure.start, m),
        start=states[closure.start].clock,
        period=states[m].clock - states[closure.start].clock,
    )


def exact_optimum(
    graph: MonitorGraph,
    k: int,
    delta: Any,
    kappa_max: int,
    p0: Sequence[Any],
    T: Any,
    bounds: Optional[SearchBounds] = None,
    pool: Optional["patrolbench.RolloutPool"] = None,
    latencies: Optional[Sequence[Any]] = None,
) -> OracleResult:
    r"""Best discretized periodic strategy reachable from ``p0``.

    Args:
        graph (MonitorGraph):
            Graph to patrol.
        k (int):
            Number of robots; ``p0`` holds one start per robot.
        delta (Any):
            Waiting quantum.
        kappa_max (int):
            Longest wait, in quanta.
        p0 (Sequence):
            Start node ids or poses.
        T (Any):
            Finite tail start.
        bounds (SearchBounds, optional):
            Depth cap, latency cap and incumbent.
        pool (RolloutPool, optional):
            Searches the subtrees below the root decisions in parallel.
        latencies (Sequence, optional):
            Initial latencies; zero by default.
    Returns:
        result (OracleResult):
            Optimum, a strategy attaining it and the certificate. The result is
            certified when no branch was cut by the depth cap or the latency cap.
    Raises:
        OracleError: ``T`` is infinite or ``p0`` does not hold ``k`` entries.
    """
    if len(p0) != k or k < 1:
        raise OracleError("need k >= 1 start poses, got k={} and {} poses".format(k, len(p0)))
    config = MdpConfig(T=T, delta=delta, kappa_max=kappa_max)
    if is_infinite(config.T):
        raise OracleError("the exact search needs a finite tail start T")
    bounds = bounds or SearchBounds()
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * bounds.depth_cap + 200))
    root = mdp_reset(graph, p0, config, latencies)

    if pool is not None and pool.jobs > 1:
        jobs = [_SubtreeJob(root=root, joint=joint, bounds=bounds) for joint in joint_actions(root)]
        results = pool.map(_search_subtree, jobs, desc="oracle")
        best: Optional[_Closure] = None
        nodes, complete, depth_hit, latency_pruned = 1, True, False, False
        for closure, n, done, hit, capped in results:
            nodes += n
            complete = complete and done
            depth_hit = depth_hit or hit
            latency_pruned = latency_pruned or capped
            if closure is not None and (best is None or closure.value < best.value):
                best = closure
    else:
        search, complete, nodes, latency_pruned = _deepen(bounds, [root], [], [])
        best, depth_hit = search.closure, search.depth_hit
        patrolbench.logging.info(
            "oracle pruning",
            "bound={} transposition={} closed={}".format(search.pruned, search.transposed, search.closed),
        )

    strategy = None if best is None else _strategy_from_closure(root, best)
    j_star = INFINITY if best is None else best.value
    capped = latency_pruned and (bounds.latency_cap is None or is_infinite(j_star) or j_star > bounds.latency_cap)
    certified = best is not None and complete and not depth_hit and not capped
    patrolbench.logging.info(
        "oracle",
        "j_star={} certified={} nodes={}".format(format_decimal(j_star), certified, nodes),
    )
    return OracleResult(
        j_star=j_star,
        strategy=strategy,
        certified=certified,
        nodes_expanded=nodes,
        depth_cap_hit=depth_hit,
        latency_pruned=latency_pruned,
        bounds=bounds,
    )


def evaluate_periodic(strategy: PeriodicStrategy, T: Any) -> Rational:
    r"""Exact tail value of a periodic strategy.

    The prefix and three cycles are simulated. Latencies repeat from the second cycle
    on, so the window from ``min(T, start + 2W)`` to the end of the third cycle holds
    the whole tail supremum.

    Returns:
        value (Fraction or INFINITY):
            ``INFINITY`` when some node is not visited during the third cycle.
    Raises:
        InfeasiblePlanError: A segment does not start where its robot is.
    """
    T = to_rational(T)
    mid = strategy.start + 2 * strategy.period
    end = mid + strategy.period
    log = run_plan(
        strategy.graph,
        strategy.p0,
        strategy.prefix,
        end,
        cycle=strategy.cycle,
        latencies=strategy.latencies,
    )
    before, after = latencies_at(log, mid), latencies_at(log, end)
    if any(b == a + strategy.period for a, b in zip(before, after)):
        return INFINITY
    return tail_sup(log, min(T, mid), end)


@dataclass
class LoopReport:
    r"""Periodic strategy closed from a log segment and its guaranteed tail bound.

    ``bound = segment_sup + w_max * (theta + mismatch)`` when every node is visited
    inside the segment; ``INFINITY`` otherwise, with those nodes in ``unvisited``.
    """

    strategy: PeriodicStrategy
    theta: Fraction
    mismatch: Fraction
    segment_sup: Fraction
    bound: Rational
    unvisited: Tuple[int, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta": rational_to_str(self.theta),
            "mismatch": rational_to_str(self.mismatch),
            "segment_sup": rational_to_str(self.segment_sup),
            "bound": rational_to_str(self.bound),
            "unvisited": [self.strategy.graph.node_id(v) for v in self.unvisited],
            "strategy": self.strategy.to_dict(),
        }


def _state_at(log: EventLog, t: Fraction) -> WorldState:
    for record in log.records:
        if record.t == t:
            return record.state
    if t == log.horizon:
        return log.final
    raise OracleError("{} is not an event time of the log".format(t))


def _window_segments(log: EventLog, start: Fraction, end: Fraction, truncate: bool) -> List[List[Segment]]:
    r"""Per-robot segments issued in ``[start, end)``; idling becomes waiting."""
    k = log.initial.num_robots
    out: List[List[Segment]] = [[] for _ in range(k)]
    idle: List[Optional[Tuple[Fraction, int]]] = [None] * k

    def dwell(r: int, node: int, a: Fraction, b: Fraction):
        a = max(a, start)
        if b > a:
            out[r].append(Dwell(node, b - a))

    for record in log.records:
        if record.t >= end:
            break
        for r, (pose, command) in enumerate(zip(record.state.poses, record.action)):
            if not pose.ready:
                continue
            if isinstance(command, NoOp):
                if idle[r] is None:
                    idle[r] = (record.t, pose.to_node)
                continue
            if idle[r] is not None:
                dwell(r, idle[r][1], idle[r][0], record.t)
                idle[r] = None
            if isinstance(command, Move):
                if record.t >= start:
                    out[r].append(Traverse(pose.to_node, command.target))
                continue
            finish = record.t + to_rational(command.duration)
            if record.t >= start:
                out[r].append(Dwell(pose.to_node, min(finish, end) - record.t if truncate else finish - record.t))
            elif truncate and finish > start:
                # Wait running across the window start: keep its remainder.
                out[r].append(Dwell(pose.to_node, min(finish, end) - start))
    for r in range(k):
        if idle[r] is not None:
            dwell(r, idle[r][1], idle[r][0], end)
    return out


def _unvisited(at_alpha: WorldState, at_beta: WorldState, span: Fraction) -> Tuple[int, ...]:
    r"""Nodes with no visit in ``[alpha, beta]``, ``span = beta - alpha``.

    A node counts as visited when a robot stands on it at ``alpha`` or when its
    latency at ``beta`` is shorter than the span. Initial latencies alone never count.
    """
    held = {p.to_node for p in at_alpha.poses if p.stationary}
    return tuple(
        v for v, l in enumerate(at_beta.latencies) if v not in held and l >= span
    )


def close_and_loop(log: EventLog, alpha: Any, beta: Any) -> LoopReport:
    r"""Turns the log segment ``[alpha, beta]`` into a periodic strategy.

    When the joint poses at ``beta`` equal those at ``alpha`` the segment itself is the
    cycle. Otherwise waits running at ``beta`` are cut there and canonical motion steers
    every robot back to the node it stands on, or heads to, at ``alpha``, taking
    ``theta`` time units. A robot inside an edge at ``alpha`` starts its cycle when it
    reaches that edge's end, so its cycle closes with a wait of its remaining time and
    every robot keeps the period ``beta - alpha + theta``.

    Args:
        log (EventLog):
            Source log.
        alpha (Any):
            Event time where the cycle starts.
        beta (Any):
            Later event time where the segment ends.
    Returns:
        report (LoopReport):
            Strategy and bound; the bound is ``INFINITY`` when the segment misses a node.
    Raises:
        OracleError: ``alpha`` or ``beta`` is not an event time or ``alpha >= beta``.
    """
    alpha, beta = to_rational(alpha), to_rational(beta)
    if alpha >= beta:
        raise OracleError("alpha {} must precede beta {}".format(alpha, beta))
    graph = log.graph
    at_alpha, at_beta = _state_at(log, alpha), _state_at(log, beta)

    start = alpha
    if at_alpha.poses == at_beta.poses:
        prefix = _window_segments(log, Fraction(0), alpha, truncate=False)
        cycle = _window_segments(log, alpha, beta, truncate=False)
        theta = Fraction(0)
    else:
        prefix = _window_segments(log, Fraction(0), alpha, truncate=True)
        cycle = _window_segments(log, alpha, beta, truncate=True)
        targets = [p.to_node for p in at_alpha.poses]
        steering, theta = canonical_motion(graph, at_beta.poses, targets)
        for r, segments in enumerate(steering.segments):
            cycle[r].extend(segments)
            lag = Fraction(0) if at_alpha.poses[r].stationary else at_alpha.poses[r].remaining
            if lag > 0:
                if cycle[r] and isinstance(cycle[r][-1], Dwell) and cycle[r][-1].node == targets[r]:
                    lag += cycle[r].pop().duration
                cycle[r].append(Dwell(targets[r], lag))
        # Every robot has entered its cycle once the last edge in progress at alpha ends.
        start = alpha + max(
            (p.remaining for p in at_alpha.poses if not p.stationary), default=Fraction(0)
        )

    strategy = PeriodicStrategy(
        graph=graph,
        p0=log.initial.poses,
        latencies=log.initial.latencies,
        prefix=SegmentPlan(tuple(tuple(s) for s in prefix)),
        cycle=SegmentPlan(tuple(tuple(s) for s in cycle)),
        start=start,
        period=beta - alpha + theta,
    )
    segment_sup = tail_sup(log, alpha, beta)
    mismatch = max(
        (abs(b - a) for a, b in zip(at_alpha.latencies, at_beta.latencies)), default=Fraction(0)
    )
    unvisited = _unvisited(at_alpha, at_beta, beta - alpha)
    if unvisited:
        patrolbench.logging.debug(
            "close_and_loop", "nodes {} unvisited in [{}, {}]".format(
                [graph.node_id(v) for v in unvisited], format_decimal(alpha), format_decimal(beta)
            )
        )
        bound: Rational = INFINITY
    else:
        bound = segment_sup + graph.w_max * (theta + mismatch)
    return LoopReport(
        strategy=strategy,
        theta=theta,
        mismatch=mismatch,
        segment_sup=segment_sup,
        bound=bound,
        unvisited=unvisited,
    )


@dataclass
class VerificationReport:
    r"""Numeric check of a structural property with the values behind it."""

    name: str
    passed: bool
    values: Dict[str, Any]

    def require(self) -> "VerificationReport":
        if not self.passed:
            patrolbench.logging.error("verification", "{} failed: {}".format(self.name, self.values))
            raise VerificationFailure("{} failed: {}".format(self.name, self.values))
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "values": self.values}


def verify_discretization(
    graph: MonitorGraph,
    k: int,
    p0: Sequence[Any],
    delta: Any,
    delta_ref: Any,
    kappa_max: int,
    T: Any = 0,
    bounds: Optional[SearchBounds] = None,
    pool: Optional["patrolbench.RolloutPool"] = None,
) -> VerificationReport:
    r"""Checks ``J(delta) <= J(delta_ref) + 2 w_max delta``.

    The reference search keeps the longest wait fixed: ``kappa_ref = kappa_max * delta / delta_ref``.

    Raises:
        ConfigError: ``delta_ref > delta / 4`` or ``delta / delta_ref`` is not an integer.
        NotCertifiedError: Either search is not certified.
    """
    delta, delta_ref = to_rational(delta), to_rational(delta_ref)
    if delta_ref <= 0 or delta_ref > delta / 4:
        raise ConfigError("delta_ref must lie in (0, delta/4], got {}".format(delta_ref))
    ratio = delta / delta_ref
    if ratio.denominator != 1:
        raise ConfigError("delta / delta_ref must be an integer, got {}".format(ratio))
    coarse = exact_optimum(graph, k, delta, kappa_max, p0, T, bounds, pool).require_certified()
    fine = exact_optimum(graph, k, delta_ref, int(kappa_max * ratio), p0, T, bounds, pool).require_certified()
    slack = 2 * graph.w_max * delta
    return VerificationReport(
        name="discretization",
        passed=coarse.j_star <= fine.j_star + slack,
        values={
            "j_delta": rational_to_str(coarse.j_star),
            "j_ref": rational_to_str(fine.j_star),
            "delta": rational_to_str(delta),
            "delta_ref": rational_to_str(delta_ref),
            "slack": rational_to_str(slack),
            "gap": rational_to_str(fine.j_star + slack - coarse.j_star),
        },
    )


def verify_horizon_invariance(
    graph: MonitorGraph,
    k: int,
    p0: Sequence[Any],
    delta: Any,
    kappa_max: int,
    T_values: Sequence[Any],
    bounds: Optional[SearchBounds] = None,
    pool: Optional["patrolbench.RolloutPool"] = None,
) -> VerificationReport:
    r"""Checks that the certified optimum is the same for every tail start past the transient threshold.

    Tail starts at or below ``transient_threshold(graph, J(T))`` are reported but not compared.

    Raises:
        NotCertifiedError: Some search is not certified.
    """
    rows = []
    compared = set()
    for T in T_values:
        T = to_rational_or_infinity(T)
        result = exact_optimum(graph, k, delta, kappa_max, p0, T, bounds, pool).require_certified()
        threshold = transient_threshold(graph, result.j_star)
        above = T > threshold
        if above:
            compared.add(result.j_star)
        rows.append(
            {
                "T": rational_to_str(T),
                "j_star": rational_to_str(result.j_star),
                "threshold": rational_to_str(threshold),
                "above_threshold": above,
            }
        )
    return VerificationReport(
        name="horizon_invariance",
        passed=len(compared) <= 1,
        values={"rows": rows},
    )
