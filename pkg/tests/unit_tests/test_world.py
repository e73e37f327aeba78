# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import os
import unittest
from fractions import Fraction

import pytest
from ddt import data, ddt, unpack
from hypothesis import given, settings, strategies as st

from patrolbench.errors import CommandError, HorizonError, InfeasiblePlanError
from patrolbench.world import (
    Dwell,
    Move,
    NoOp,
    RobotPose,
    SegmentPlan,
    Traverse,
    Wait,
    canonical_motion,
    interval_peak,
    latencies_at,
    latency_at,
    load_event_log,
    make_pose,
    run_plan,
    save_event_log,
    tail_sup,
    world_reset,
    world_step,
    worst_weighted_latency,
)
from tests.helpers import (
    get_long_edge,
    get_triangle,
    get_two_node,
    run_scripted_experiment,
    scripted_plans,
    window_from_picks,
)


class TestWorldStep:
    def test_reset_zeroes_occupied_nodes(self):
        graph = get_triangle()
        state = world_reset(graph, ["1"], latencies=[5, 2, 3])
        assert state.latencies == (0, 2, 3)
        assert state.clock == 0
        assert state.poses == (RobotPose.at(0),)

    def test_arrival_visits_target(self):
        graph = get_triangle()
        state = world_reset(graph, ["1"])
        state, visits = world_step(state, {0: Move(1)})
        assert state.clock == 1
        assert state.poses[0] == RobotPose.at(1)
        assert [v.node for v in visits] == [1]
        assert state.latencies == (1, 0, 1)

    def test_event_is_earliest_completion(self):
        graph = get_two_node(2)
        state = world_reset(graph, ["1", "2"])
        state, visits = world_step(state, [Move(1), Wait(Fraction(1, 2))])
        assert state.clock == Fraction(1, 2)
        assert state.poses[0] == RobotPose(0, 1, Fraction(3, 2))
        assert state.poses[1].ready
        # the waiting robot held node 2; node 1 was left at t=0
        assert state.latencies == (Fraction(1, 2), 0)
        assert [v.node for v in visits] == [1]

    def test_busy_robot_keeps_moving(self):
        graph = get_two_node(2)
        state = world_reset(graph, ["1", "2"])
        state, _ = world_step(state, [Move(1), Wait(Fraction(1, 2))])
        state, _ = world_step(state, [None, Wait(Fraction(1, 2))])
        assert state.clock == 1
        assert state.poses[0].remaining == 1

    def test_idle_robot_holds_its_node(self):
        graph = get_two_node(2)
        state = world_reset(graph, ["1"])
        state, visits = world_step(state, [NoOp()], cap=3)
        assert state.clock == 3
        assert state.latencies == (0, 3)
        assert [v.node for v in visits] == [0]

    def test_all_idle_without_cap(self):
        state = world_reset(get_triangle(), ["1"])
        with pytest.raises(CommandError):
            world_step(state, [NoOp()])


@ddt
class TestCommandErrors(unittest.TestCase):
    @data(
        ({},),
        ({0: Move(0)},),
        ({0: Wait(0)},),
        ({0: Wait(-1)},),
        ({0: Move(1), 3: Move(1)},),
    )
    @unpack
    def test_rejected(self, commands):
        state = world_reset(get_two_node(2), ["1"])
        with pytest.raises(CommandError):
            world_step(state, commands)

    def test_busy_robot_commanded(self):
        state = world_reset(get_two_node(2), ["1", "2"])
        state, _ = world_step(state, [Move(1), Wait(1)])
        with pytest.raises(CommandError):
            world_step(state, [Move(0), Wait(1)])

    def test_pose_validation(self):
        graph = get_two_node(2)
        assert make_pose(graph, "1", "2", "1/2") == RobotPose(0, 1, Fraction(1, 2))
        assert make_pose(graph, "1", "2", 0) == RobotPose.at(1)
        with pytest.raises(CommandError):
            make_pose(graph, "1", "2", 3)
        with pytest.raises(CommandError):
            make_pose(graph, "1", "2", -1)


class TestPeak:
    def test_peak_counts_left_limits(self):
        graph = get_triangle()
        committed = (RobotPose(0, 1, Fraction(1)),)
        assert interval_peak(graph, committed, (0, 2, 1), Fraction(1)) == 3

    def test_held_node_contributes_zero(self):
        graph = get_two_node(2)
        committed = (RobotPose(0, 0, Fraction(1)), RobotPose(1, 1, Fraction(1)))
        assert interval_peak(graph, committed, (4, 4), Fraction(1)) == 0


class TestExampleStrategies:
    def test_evenly_spaced_pair(self):
        log = run_scripted_experiment("sigma1.yaml")
        assert log.horizon == 20
        assert tail_sup(log, 0, 20) == Fraction(3, 2)
        assert latency_at(log, "4", 10) == 0

    def test_pair_after_long_transit(self):
        log = run_scripted_experiment("sigma2.yaml")
        assert tail_sup(log, 0, 20) == 5
        assert tail_sup(log, 5, 20) == Fraction(3, 2)
        assert latency_at(log, "4", Fraction(9, 2)) == Fraction(9, 2)
        assert worst_weighted_latency(log, 5) <= Fraction(3, 2)

    def test_shuttle_between_two_nodes(self):
        log = run_scripted_experiment("sigma3.yaml")
        assert tail_sup(log, 0, 20) == 5
        assert tail_sup(log, 5, 20) == 2

    def test_window_past_horizon(self):
        log = run_scripted_experiment("sigma1.yaml")
        with pytest.raises(HorizonError):
            tail_sup(log, 21, 20)
        with pytest.raises(HorizonError):
            latency_at(log, "1", 21)


class TestPlans:
    def test_plan_must_chain(self):
        graph = get_triangle()
        plan = SegmentPlan(((Traverse(1, 2),),))
        with pytest.raises(InfeasiblePlanError):
            run_plan(graph, ["1"], plan, 5)

    def test_plan_robot_count(self):
        with pytest.raises(InfeasiblePlanError):
            run_plan(get_triangle(), ["1", "2"], SegmentPlan.idle(1), 5)

    def test_spec_round_trip(self):
        graph = get_long_edge()
        spec = [[{"traverse": ["1", "4"]}, {"wait": ["4", "3/2"]}], []]
        plan = SegmentPlan.from_spec(graph, spec)
        assert plan.segments[0] == (Traverse(0, 3), Dwell(3, Fraction(3, 2)))
        assert plan.to_spec(graph) == spec
        assert plan.duration(graph, 0) == Fraction(13, 2)

    def test_log_ends_at_horizon(self):
        graph = get_triangle()
        cycle = SegmentPlan(((Traverse(0, 1), Traverse(1, 2), Traverse(2, 0)),))
        log = run_plan(graph, ["1"], SegmentPlan.idle(1), Fraction(7, 2), cycle=cycle)
        assert log.horizon == Fraction(7, 2)
        assert log.records[-1].dt == Fraction(1, 2)


class TestCanonicalMotion:
    def test_robots_arrive_together(self):
        graph = get_long_edge()
        poses = [RobotPose.at(3), RobotPose(2, 1, Fraction(1, 2))]
        plan, arrival = canonical_motion(graph, poses, [0, 0])
        assert arrival == 5
        assert plan.segments[0] == (Traverse(3, 0),)
        assert plan.segments[1] == (Traverse(1, 0), Dwell(0, Fraction(7, 2)))


class TestVisitStructure:
    @settings(max_examples=200, deadline=None)
    @given(
        scripted_plans(max_segments=20),
        st.integers(min_value=0, max_value=1000),
        st.integers(min_value=0, max_value=1000),
    )
    def test_long_window_visits_every_node(self, drawn, first, second):
        graph, p0, plan = drawn
        log = run_plan(graph, p0, plan, 16)
        alpha, beta = window_from_picks(log, first, second)
        window_sup = tail_sup(log, alpha, beta)
        if (beta - alpha) * graph.w_min > window_sup:
            assert all(l < beta - alpha for l in latencies_at(log, beta))

    @settings(max_examples=200, deadline=None)
    @given(scripted_plans(), st.lists(st.integers(min_value=0, max_value=20), min_size=4, max_size=4))
    def test_visited_nodes_forget_initial_latencies(self, drawn, initial):
        graph, p0, plan = drawn
        fresh = run_plan(graph, p0, plan, 10)
        shifted = run_plan(graph, p0, plan, 10, latencies=initial[: graph.num_nodes])
        assert fresh.event_times() == shifted.event_times()
        for t in fresh.event_times():
            for v, (a, b) in enumerate(zip(latencies_at(fresh, t), latencies_at(shifted, t))):
                if a < t:
                    assert b == a
                else:
                    assert b == shifted.initial.latencies[v] + t


class TestEventLogFiles:
    def test_saved_log_replays_exactly(self, tmp_path):
        log = run_scripted_experiment("sigma2.yaml")
        path = os.path.join(str(tmp_path), "log.jsonl")
        save_event_log(log, path)
        again = load_event_log(log.graph, path)
        assert len(again) == len(log)
        assert again.horizon == log.horizon
        assert [r.t for r in again.records] == [r.t for r in log.records]
        assert tail_sup(again, 5, 20) == Fraction(3, 2)

    def test_log_needs_header(self, tmp_path):
        path = os.path.join(str(tmp_path), "empty.jsonl")
        with open(path, "w") as f:
            f.write('{"t": "0"}\n')
        with pytest.raises(HorizonError):
            load_event_log(get_triangle(), path)
