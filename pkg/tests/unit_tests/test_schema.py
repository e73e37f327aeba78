# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import os
import shutil
from fractions import Fraction

import pytest

from patrolbench.errors import InvalidConfigFile, SchemaError
from patrolbench.rational import INFINITY
from patrolbench.schema import INSTANCES_DIR, experiment_from_dict, load_experiment, resolve_instance_path
from patrolbench.world import RobotPose
from tests.helpers import experiment_path, instance_path, triangle_experiment, write_experiment


class TestBundledExperiments:
    def test_scripted_start_poses(self):
        experiment = load_experiment(experiment_path("sigma1.yaml"))
        assert experiment.policy.scripted
        assert experiment.robots == 3
        assert experiment.horizon == 20
        graph = experiment.load_graph()
        poses = experiment.start_poses(graph)
        assert len(poses) == 3
        assert all(isinstance(pose, RobotPose) for pose in poses)

    def test_learning_section(self):
        experiment = load_experiment(experiment_path("triangle_learn.yaml"))
        assert experiment.learn.budget == 100000
        assert experiment.learn.episode_horizon == 30
        assert experiment.learn.epsilon_decay == 0.99
        assert experiment.repetitions == 3
        assert experiment.mdp_config().delta == Fraction(1, 2)


class TestDefaults:
    def test_registered_policy_and_reference_quantum(self, tmp_path):
        experiment = experiment_from_dict(triangle_experiment(str(tmp_path)))
        assert experiment.policy.name == "tsp_cycle"
        assert experiment.delta_ref() == Fraction(1, 8)
        assert experiment.graph == os.path.join(INSTANCES_DIR, "triangle.json")
        assert experiment.build_policy(experiment.load_graph()).name == "tsp_cycle"
        assert experiment.oracle.bounds().depth_cap == 64

    def test_rational_fields(self, tmp_path):
        data = triangle_experiment(
            str(tmp_path),
            mdp={"T": "inf", "delta": 0.25},
            horizon="15/2",
            verify={"delta_ref": "1/16", "T_values": [0, "inf"]},
        )
        experiment = experiment_from_dict(data)
        assert experiment.mdp.T == INFINITY
        assert experiment.mdp.delta == Fraction(1, 4)
        assert experiment.horizon == Fraction(15, 2)
        assert experiment.delta_ref() == Fraction(1, 16)
        assert experiment.verify.T_values == [0, INFINITY]

    def test_node_ids_cast_to_strings(self, tmp_path):
        experiment = experiment_from_dict(triangle_experiment(str(tmp_path), p0=[1]))
        assert experiment.p0 == ["1"]


class TestRejected:
    @pytest.mark.parametrize(
        "overrides",
        [
            {"colour": "red"},
            {"mdp": {"delta": "1/2", "gamma": 0.9}},
            {"schema_version": 2},
            {"p0": ["1", "2"]},
            {"p0": None},
            {"policy": {"name": "greedy", "plan": [[]]}},
            {"policy": {"cycle": [[]]}},
            {"mdp": {"delta": "0"}},
            {"mdp": {"reward_mode": "episode"}},
            {"horizon": -1},
            {"graph": "bundled:missing.json"},
            {"robots": 0},
            {"learn": {"gamma": 0}},
        ],
    )
    def test_schema_errors(self, tmp_path, overrides):
        with pytest.raises(SchemaError):
            experiment_from_dict(triangle_experiment(str(tmp_path), **overrides))

    def test_not_a_mapping(self):
        with pytest.raises(SchemaError):
            experiment_from_dict(["graph"])

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidConfigFile):
            load_experiment(os.path.join(str(tmp_path), "absent.yaml"))

    def test_bad_yaml(self, tmp_path):
        path = os.path.join(str(tmp_path), "broken.yaml")
        with open(path, "w") as f:
            f.write("graph: [unclosed\n")
        with pytest.raises(InvalidConfigFile):
            load_experiment(path)


class TestPaths:
    def test_relative_graph_follows_file(self, tmp_path):
        shutil.copy(instance_path("triangle.json"), os.path.join(str(tmp_path), "mine.json"))
        path = write_experiment(tmp_path, triangle_experiment("out", graph="mine.json"))
        experiment = load_experiment(path)
        assert experiment.graph == os.path.join(str(tmp_path), "mine.json")
        assert experiment.load_graph().num_nodes == 3

    def test_bundled_prefix(self):
        assert resolve_instance_path("bundled:triangle.json") == instance_path("triangle.json")
        assert resolve_instance_path("a.json", "/data") == os.path.join("/data", "a.json")
