# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import unittest
from fractions import Fraction

import pytest
from ddt import data, ddt
from hypothesis import given, settings, strategies as st

from patrolbench.errors import ActionMaskError, ConfigError, MdpError, RobotBusyError
from patrolbench.graph import laplacian_gpe
from patrolbench.learning.normalizer import ObservationNormalizer
from patrolbench.mdp import (
    MdpConfig,
    MonitorEnv,
    Trajectory,
    average_reward_estimate,
    counterfactual_rewards,
    legal_actions,
    mdp_reset,
    mdp_transition,
    observe,
    reward_step,
    reward_time_normalized,
    role_labels,
    waiting_crossover_steps,
)
from patrolbench.policies import Policy, random_policy
from patrolbench.rational import INFINITY
from patrolbench.world import Move, NoOp, Wait, tail_sup
from tests.helpers import get_long_edge, get_triangle, get_two_node


class AlwaysWait(Policy):
    name = "always_wait"

    def decide(self, state, memory, rng):
        return [state.config.waits[0] if p.ready else NoOp() for p in state.poses]


@ddt
class TestMdpConfig(unittest.TestCase):
    @data(
        {"T": -1},
        {"delta": 0},
        {"delta": "x"},
        {"kappa_max": 0},
        {"kappa_max": 1.5},
        {"lambda_L": -1.0},
        {"baseline": "leave"},
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            MdpConfig(**kwargs)

    def test_waits_and_tau(self):
        config = MdpConfig(delta="1/4", kappa_max=3)
        assert config.waits == (Wait(Fraction(1, 4)), Wait(Fraction(1, 2)), Wait(Fraction(3, 4)))
        assert config.tau_max == Fraction(3, 4)

    def test_infinite_tail_start(self):
        assert MdpConfig(T="inf").T == INFINITY


class TestActions:
    def test_ready_robot_mask(self):
        state = mdp_reset(get_long_edge(), ["1"], MdpConfig(delta="1/2", kappa_max=2))
        mask = legal_actions(state, 0)
        assert mask.actions == (Move(1), Move(2), Move(3), Wait(Fraction(1, 2)), Wait(1), NoOp())
        assert mask.legal == (True,) * 5 + (False,)
        assert NoOp() not in mask.legal_actions()

    def test_busy_robot_mask(self):
        config = MdpConfig(delta="1/2", kappa_max=2)
        state = mdp_reset(get_two_node(2), ["1", "2"], config)
        state, _ = mdp_transition(state, (Move(1), Wait(Fraction(1, 2))))
        mask = legal_actions(state, 0)
        assert mask.actions == (NoOp(),)
        assert mask.legal == (True,)

    def test_robot_out_of_range(self):
        state = mdp_reset(get_triangle(), ["1"], MdpConfig())
        with pytest.raises(MdpError):
            legal_actions(state, 1)

    def test_illegal_action_names_robot_and_event(self):
        state = mdp_reset(get_triangle(), ["1", "2"], MdpConfig(delta="1/2", kappa_max=2))
        with pytest.raises(ActionMaskError) as info:
            mdp_transition(state, (Move(1), NoOp()))
        assert info.value.robot == 1
        assert info.value.event == 0
        with pytest.raises(ActionMaskError):
            mdp_transition(state, (Move(1), Wait(Fraction(3, 2))))
        with pytest.raises(ActionMaskError):
            mdp_transition(state, (Move(1),))


class TestTracker:
    def test_event_inserted_at_tail_start(self):
        config = MdpConfig(T="1/2", delta=1, kappa_max=1)
        state = mdp_reset(get_triangle(), ["1"], config)
        assert not state.active
        state, dt = mdp_transition(state, (Move(1),))
        assert dt == Fraction(1, 2)
        assert state.active
        assert state.z == Fraction(1, 2)

    def test_never_active_with_infinite_tail_start(self):
        env = MonitorEnv(get_triangle(), ["1"], MdpConfig(T="inf", delta="1/2", kappa_max=2))
        trajectory = env.rollout(AlwaysWait(), horizon=5)
        assert all(z == 0 for z in trajectory.trackers)
        assert not trajectory.states[-1].active

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(min_value=0, max_value=6),
        st.integers(min_value=1, max_value=10),
        st.integers(min_value=1, max_value=2),
        st.integers(min_value=0, max_value=1000),
    )
    def test_tracker_equals_tail_supremum(self, half_T, half_extra, k, seed):
        graph = get_long_edge()
        T = Fraction(half_T, 2)
        horizon = T + Fraction(half_extra, 2)
        env = MonitorEnv(graph, ["1", "4"][:k], MdpConfig(T=T, delta="1/2", kappa_max=3))
        trajectory = env.rollout(random_policy(), horizon=horizon, seed=seed)
        final = trajectory.states[-1]
        assert final.clock == horizon
        assert final.z == tail_sup(trajectory.to_event_log(), T, horizon)


class TestRewards:
    def test_step_and_time_rewards(self):
        state = mdp_reset(get_triangle(), ["1"], MdpConfig(delta="1/2", kappa_max=2))
        state, dt = mdp_transition(state, (Move(1),))
        assert reward_step(state) == 1
        assert reward_time_normalized(state, Fraction(1, 2)) == Fraction(1, 2)

    def test_env_reports_reward_of_prior_state(self):
        env = MonitorEnv(get_triangle(), ["1"], MdpConfig(delta="1/2", kappa_max=2))
        with pytest.raises(MdpError):
            env.step((Move(1),))
        env.reset()
        state, reward, dt = env.step((Move(1),))
        assert (reward, state.z, dt) == (0, 1, 1)

    def test_always_waiting_closed_form(self):
        A, delta = 20, Fraction(1, 10)
        env = MonitorEnv(get_two_node(A), ["1"], MdpConfig(delta=delta, kappa_max=1))
        crossover = waiting_crossover_steps(A, delta)
        assert crossover == 799
        trajectory = env.rollout(AlwaysWait(), horizon=(crossover + 1) * delta)
        assert trajectory.trackers[:4] == [0, delta, 2 * delta, 3 * delta]
        assert average_reward_estimate(trajectory, "step") == Fraction(2 * A + delta / 2)

        head = Trajectory(
            states=trajectory.states[: crossover + 1],
            transitions=trajectory.transitions[:crossover],
        )
        assert average_reward_estimate(head, "step") == 2 * A
        assert average_reward_estimate(head, "time") == 2 * A

    def test_estimator_errors(self):
        state = mdp_reset(get_triangle(), ["1"], MdpConfig())
        with pytest.raises(MdpError):
            average_reward_estimate(Trajectory(states=[state]))
        env = MonitorEnv(get_triangle(), ["1"], MdpConfig(delta="1/2", kappa_max=2))
        trajectory = env.rollout(AlwaysWait(), horizon=1)
        with pytest.raises(MdpError):
            average_reward_estimate(trajectory, "median")


class TestCounterfactual:
    def test_waiting_robot_changes_nothing(self):
        state = mdp_reset(get_two_node(), ["1"], MdpConfig())
        reward = counterfactual_rewards(state, (Wait(Fraction(1, 10)),), 0)
        assert (reward.latency, reward.tracker, reward.combined) == (0, 0, 0.0)

    def test_visit_lowers_latency(self):
        state = mdp_reset(get_triangle(), ["1"], MdpConfig(delta="1/2", kappa_max=2))
        reward = counterfactual_rewards(state, (Move(1),), 0)
        assert reward.latency == 1
        assert reward.tracker == 0
        assert reward.combined == 1.0

    def test_busy_robot(self):
        config = MdpConfig(delta="1/2", kappa_max=2)
        state = mdp_reset(get_two_node(2), ["1", "2"], config)
        state, _ = mdp_transition(state, (Move(1), Wait(Fraction(1, 2))))
        with pytest.raises(RobotBusyError):
            counterfactual_rewards(state, (NoOp(), Wait(Fraction(1, 2))), 0)

    @settings(max_examples=100, deadline=None)
    @given(
        st.sampled_from([get_triangle, get_long_edge, lambda: get_two_node(2)]),
        st.integers(min_value=1, max_value=3),
        st.integers(min_value=0, max_value=4),
        st.integers(min_value=0, max_value=1000),
    )
    def test_credit_never_negative(self, make_graph, k, half_T, seed):
        graph = make_graph()
        p0 = [graph.node_id(r % graph.num_nodes) for r in range(k)]
        env = MonitorEnv(graph, p0, MdpConfig(T=Fraction(half_T, 2), delta="1/2", kappa_max=3))
        trajectory = env.rollout(random_policy(), horizon=30, seed=seed)
        for state, joint in zip(trajectory.states, trajectory.actions):
            for r in state.ready_robots():
                reward = counterfactual_rewards(state, joint, r)
                assert reward.latency >= 0
                assert reward.tracker >= 0


class TestObservation:
    def test_roles_follow_arrival_order(self):
        state = mdp_reset(get_triangle(), ["1", "1", "2"], MdpConfig())
        assert role_labels(state) == [1, 2, 1]

    def test_feature_shape(self):
        graph = get_triangle()
        gpe = laplacian_gpe(graph, 2)
        normalizer = ObservationNormalizer(graph.num_nodes, 2)
        state = mdp_reset(graph, ["1", "2"], MdpConfig())
        features = observe(state, gpe, normalizer, update=True)
        k, d, n = 2, 2, 3
        assert tuple(features.shape) == (k, 2 * d + 1 + n + k + 1 + k + k + 1)
        assert normalizer.latency.count == 1
