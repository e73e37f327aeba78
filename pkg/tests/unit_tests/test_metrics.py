# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import csv
import json
import os
from fractions import Fraction

import pytest

from patrolbench.errors import HorizonError
from patrolbench.metrics import agi, build_report, igi, iwi, tail_wi, wi, write_series_csv, write_summary_json
from patrolbench.world import SegmentPlan, Traverse, run_plan
from tests.helpers import get_triangle, get_two_node, run_scripted_experiment


def parked_log():
    return run_plan(get_two_node(2), ["1"], SegmentPlan.idle(1), 4)


def triangle_lap_log():
    cycle = SegmentPlan(((Traverse(0, 1), Traverse(1, 2), Traverse(2, 0)),))
    return run_plan(get_triangle(), ["1"], SegmentPlan.idle(1), 3, cycle=cycle)


class TestIdleness:
    def test_parked_robot(self):
        log = parked_log()
        assert igi(log, 4) == 2
        assert agi(log, 4) == 1
        assert agi(log, 2) == Fraction(1, 2)
        assert wi(log, 4) == 4
        assert iwi(log, 3) == 3

    def test_triangle_lap(self):
        log = triangle_lap_log()
        assert agi(log, 3) == Fraction(19, 18)
        assert wi(log, 3) == 3
        assert iwi(log, 3) == 2

    def test_zero_horizon_is_instantaneous(self):
        log = parked_log()
        assert agi(log, 0) == igi(log, 0) == 0

    def test_window_checks(self):
        log = parked_log()
        with pytest.raises(HorizonError):
            agi(log, 5)
        with pytest.raises(HorizonError):
            agi(log, -1)
        with pytest.raises(HorizonError):
            tail_wi(log, 3, 2)

    def test_worst_idleness_with_tail(self):
        log = run_scripted_experiment("sigma2.yaml")
        assert wi(log, 20) == 5
        assert tail_wi(log, 5, 20) == Fraction(3, 2)


class TestReport:
    def test_report_values(self):
        report = build_report(run_scripted_experiment("sigma2.yaml"), T=5)
        assert report.H == 20
        assert (report.wi, report.tail_wi) == (5, Fraction(3, 2))
        assert report.igi_series[0][0] == 0
        assert report.iwi_series[-1][0] == 20
        summary = report.summary(precision=4)
        assert summary["tail_wi"] == "1.5"
        assert summary["exact"]["tail_wi"] == "3/2"
        assert summary["exact"]["H"] == "20"

    def test_shorter_horizon(self):
        report = build_report(parked_log(), H=2)
        assert [t for t, _ in report.igi_series] == [0, 2]
        assert report.wi == 2

    def test_files(self, tmp_path):
        report = build_report(parked_log())
        series = os.path.join(str(tmp_path), "series.csv")
        summary = os.path.join(str(tmp_path), "summary.json")
        write_series_csv(report, series)
        write_summary_json(report, summary)
        with open(series) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["t", "igi", "iwi"]
        assert rows[-1] == ["4", "2", "4"]
        with open(summary) as f:
            assert json.load(f)["exact"]["agi"] == "1"
