# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import unittest

import pytest
import torch
from ddt import data, ddt
from hypothesis import given, settings, strategies as st

from patrolbench.errors import MalformedBatchError
from patrolbench.learning.gae import RolloutBatch, gae, trans_gae


class TestGae:
    def test_single_step(self):
        adv, ret = gae([1.0], [0.5], [0.0], last_value=2.0, gamma=0.5, lam=1.0)
        assert adv.tolist() == [1.0 + 0.5 * 2.0 - 0.5]
        assert ret.tolist() == [2.0]

    def test_done_cuts_bootstrap(self):
        adv, _ = gae([1.0, 1.0], [0.0, 0.0], [1.0, 0.0], last_value=10.0, gamma=1.0, lam=1.0)
        assert adv.tolist() == [1.0, 11.0]


class TestTransGae:
    def test_inactive_rewards_fold_into_previous_step(self):
        batch = RolloutBatch(
            rewards=[1.0, 2.0, 3.0],
            values=[0.0, 0.0, 0.0],
            active=[1, 0, 1],
            dones=[0, 0, 0],
            gamma=0.5,
            lam=1.0,
        )
        adv, ret = trans_gae(batch)
        assert adv.tolist() == [2.75, 0.0, 3.0]
        assert ret.tolist() == [2.75, 0.0, 3.0]

    def test_agents_are_columns(self):
        batch = RolloutBatch(
            rewards=[[1.0, 1.0], [1.0, 1.0]],
            values=[[0.0, 0.0], [0.0, 0.0]],
            active=[[1, 1], [1, 0]],
            dones=[[0, 0], [0, 0]],
            last_value=[0.0, 0.0],
            gamma=1.0,
            lam=1.0,
        )
        adv, _ = trans_gae(batch)
        assert adv.shape == (2, 2)
        assert adv[:, 0].tolist() == [2.0, 1.0]
        assert adv[:, 1].tolist() == [2.0, 0.0]

    @settings(max_examples=30, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.floats(-5, 5, allow_nan=False),
                st.floats(-5, 5, allow_nan=False),
                st.booleans(),
            ),
            min_size=1,
            max_size=12,
        ),
        st.floats(0.5, 1.0),
        st.floats(0.0, 1.0),
        st.floats(-5, 5, allow_nan=False),
    )
    def test_all_active_is_plain_gae(self, steps, gamma, lam, last_value):
        rewards = [s[0] for s in steps]
        values = [s[1] for s in steps]
        dones = [1.0 if s[2] else 0.0 for s in steps]
        batch = RolloutBatch(
            rewards=rewards,
            values=values,
            active=[1] * len(steps),
            dones=dones,
            last_value=last_value,
            gamma=gamma,
            lam=lam,
        )
        adv, ret = trans_gae(batch)
        expected_adv, expected_ret = gae(rewards, values, dones, last_value, gamma, lam)
        assert torch.allclose(adv, expected_adv)
        assert torch.allclose(ret, expected_ret)


@ddt
class TestMalformedBatch(unittest.TestCase):
    @data(
        {"values": [0.0]},
        {"active": [1, 2]},
        {"dones": [0.5, 0]},
        {"gamma": 0.0},
        {"gamma": 1.5},
        {"lam": -0.1},
        {"rewards": [[[1.0]]], "values": [[[1.0]]], "active": [[[1]]], "dones": [[[0]]]},
    )
    def test_rejected(self, overrides):
        kwargs = {"rewards": [1.0, 1.0], "values": [0.0, 0.0], "active": [1, 1], "dones": [0, 0]}
        kwargs.update(overrides)
        with pytest.raises(MalformedBatchError):
            RolloutBatch(**kwargs)
