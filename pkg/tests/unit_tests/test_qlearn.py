# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import os
import unittest
from fractions import Fraction

import numpy as np
import pytest
from ddt import data, ddt

from patrolbench.commands.learn import learn_params
from patrolbench.errors import LearningError, StateSpaceExplosionError
from patrolbench.learning.qlearn import QLearnParams, QTable, latency_bucket_cap, smdp_q_learn
from patrolbench.mdp import MdpConfig, MonitorEnv, legal_actions, mdp_reset
from patrolbench.schema import experiment_from_dict
from tests.helpers import get_long_edge, get_triangle, triangle_experiment

CONFIG = MdpConfig(T=0, delta="1/2", kappa_max=2)


def triangle_env() -> MonitorEnv:
    return MonitorEnv(get_triangle(), ["1"], CONFIG)


@ddt
class TestParams(unittest.TestCase):
    @data(
        {"gamma": 0.0},
        {"gamma": 1.1},
        {"alpha": 0.0},
        {"epsilon": 0.01, "epsilon_min": 0.05},
        {"state_key_cap": 0},
        {"episode_horizon": 0},
        {"reward_mode": "episode"},
    )
    def test_rejected(self, kwargs):
        with pytest.raises(LearningError):
            QLearnParams(**kwargs)


class TestTableKeys:
    def test_bucket_cap(self):
        assert latency_bucket_cap(get_triangle(), Fraction(1, 2)) == 12

    def test_initial_key(self):
        graph = get_triangle()
        table = QTable(graph, Fraction(1, 2))
        state = mdp_reset(graph, ["1", "2"], CONFIG)
        assert table.key(state, 0) == (0, ((1, 1, 0),), (0, 0, 0), 0)

    def test_latencies_saturate(self):
        graph = get_triangle()
        table = QTable(graph, Fraction(1, 2), bucket_cap=4)
        state = mdp_reset(graph, ["1"], CONFIG, latencies=[0, 100, 1])
        assert table.key(state, 0)[2] == (0, 5, 2)

    def test_key_cap(self):
        table = QTable(get_triangle(), Fraction(1, 2), state_key_cap=1)
        table.row(("a",), 2)
        with pytest.raises(StateSpaceExplosionError):
            table.row(("b",), 2)


@ddt
class TestLearning(unittest.TestCase):
    def test_zero_budget_learns_nothing(self):
        table, policy = smdp_q_learn(triangle_env(), QLearnParams(episode_horizon=10), budget=0)
        assert len(table) == 0
        assert policy.table is table

    def test_small_budget(self):
        table, policy = smdp_q_learn(triangle_env(), QLearnParams(episode_horizon=10, seed=4), budget=200)
        assert len(table) > 0
        assert all(np.all(values <= 0) for values in table.values.values())
        state = mdp_reset(get_triangle(), ["1"], CONFIG)
        joint = policy.decide(state, None, np.random.default_rng(0))
        assert joint[0] in legal_actions(state, 0).legal_actions()

    def test_learning_is_seeded(self):
        params = QLearnParams(episode_horizon=10, seed=9)
        a, _ = smdp_q_learn(triangle_env(), params, budget=150)
        b, _ = smdp_q_learn(triangle_env(), params, budget=150)
        assert sorted(a.values) == sorted(b.values)
        assert all(np.array_equal(a.values[k], b.values[k]) for k in a.values)

    def test_episode_too_short(self):
        with pytest.raises(LearningError):
            smdp_q_learn(triangle_env(), QLearnParams(episode_horizon="1/2"), budget=10)

    def test_key_explosion(self):
        with pytest.raises(StateSpaceExplosionError):
            smdp_q_learn(triangle_env(), QLearnParams(episode_horizon=10, state_key_cap=1), budget=10)

    def test_reward_mode_changes_targets(self):
        time_table, _ = smdp_q_learn(triangle_env(), QLearnParams(episode_horizon=10, seed=4), budget=200)
        step_table, _ = smdp_q_learn(
            triangle_env(), QLearnParams(episode_horizon=10, seed=4, reward_mode="step"), budget=200
        )
        shared = set(time_table.values) & set(step_table.values)
        assert shared
        assert any(not np.array_equal(time_table.values[k], step_table.values[k]) for k in shared)

    @data("step", "time")
    def test_experiment_reward_mode_reaches_learning(self, mode):
        mdp = {"T": 0, "delta": "1/2", "kappa_max": 2, "reward_mode": mode}
        experiment = experiment_from_dict(triangle_experiment("unused", mdp=mdp))
        assert learn_params(experiment).reward_mode == mode


class TestTableFiles:
    def test_round_trip(self, tmp_path):
        table, _ = smdp_q_learn(triangle_env(), QLearnParams(episode_horizon=10), budget=50)
        path = os.path.join(str(tmp_path), "qtable.json")
        table.save(path)
        again = QTable.load(path, get_triangle())
        assert again.delta == table.delta
        assert again.bucket_cap == table.bucket_cap
        assert sorted(again.values) == sorted(table.values)

    def test_other_graph(self, tmp_path):
        table, _ = smdp_q_learn(triangle_env(), QLearnParams(episode_horizon=10), budget=20)
        path = os.path.join(str(tmp_path), "qtable.json")
        table.save(path)
        with pytest.raises(LearningError):
            QTable.load(path, get_long_edge())

    def test_unreadable(self, tmp_path):
        path = os.path.join(str(tmp_path), "qtable.json")
        with open(path, "w") as f:
            f.write("{not json")
        with pytest.raises(LearningError):
            QTable.load(path, get_triangle())
