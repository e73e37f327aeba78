# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import pytest
import torch
from hypothesis import given, settings, strategies as st

from patrolbench.learning.normalizer import ObservationNormalizer, RunningNormalizer, running_normalizer

samples = st.lists(st.floats(-100, 100, allow_nan=False), min_size=0, max_size=20)


class TestRunningNormalizer:
    def test_identity_before_first_sample(self):
        normalizer = RunningNormalizer((2,))
        values = torch.tensor([3.0, -1.0], dtype=torch.float64)
        assert torch.equal(normalizer.normalize(values), values)
        assert normalizer.var.tolist() == [0.0, 0.0]

    def test_population_statistics(self):
        normalizer = RunningNormalizer(())
        normalizer.update([1.0, 2.0, 3.0, 4.0])
        assert normalizer.count == 4
        assert normalizer.mean.item() == 2.5
        assert normalizer.var.item() == pytest.approx(1.25)
        assert normalizer.normalize(2.5).item() == 0.0

    @settings(max_examples=40, deadline=None)
    @given(samples, samples)
    def test_merge_matches_concatenated_stream(self, left, right):
        a, b, whole = RunningNormalizer(), RunningNormalizer(), RunningNormalizer()
        a.update(left)
        b.update(right)
        whole.update(left + right)
        a.merge(b)
        assert a.count == whole.count
        assert a.mean.item() == pytest.approx(whole.mean.item(), abs=1e-9)
        assert a.var.item() == pytest.approx(whole.var.item(), rel=1e-6, abs=1e-6)

    def test_merge_shape_mismatch(self):
        with pytest.raises(ValueError):
            RunningNormalizer((2,)).merge(RunningNormalizer((3,)))

    def test_state_dict_round_trip(self):
        normalizer = RunningNormalizer((3,)).update([[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]])
        again = RunningNormalizer((3,)).load_state_dict(normalizer.state_dict())
        assert again.count == 2
        assert torch.equal(again.mean, normalizer.mean)
        assert torch.equal(again.m2, normalizer.m2)


class TestObservationNormalizer:
    def test_merge_each_statistic(self):
        a, b = ObservationNormalizer(3, 2), ObservationNormalizer(3, 2)
        a.update(torch.tensor([1.0]), torch.tensor([1.0, 2.0, 3.0]), torch.tensor([0.0, 1.0]))
        b.update(torch.tensor([3.0]), torch.tensor([3.0, 2.0, 1.0]), torch.tensor([1.0, 0.0]))
        a.merge(b)
        assert a.tracker.mean.tolist() == [2.0]
        assert a.latency.mean.tolist() == [2.0, 2.0, 2.0]
        assert a.remaining.count == 2
        restored = ObservationNormalizer(3, 2).load_state_dict(a.state_dict())
        assert restored.latency.var.tolist() == a.latency.var.tolist()


class TestFactory:
    def test_constant_stream_normalizes_to_zero(self):
        normalizer = running_normalizer()
        normalizer.update([5.0, 5.0, 5.0])
        assert normalizer.normalize(5.0).item() == 0.0

    def test_two_values(self):
        normalizer = running_normalizer()
        normalizer.update([0.0, 2.0])
        assert normalizer.mean.item() == 1.0
