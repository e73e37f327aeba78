# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Monitoring quality metrics computed exactly from event logs.

Between events every free node's latency grows with slope 1 and held nodes stay
at 0, so the mean weighted latency is linear on each interval and integrates in
closed form.
"""

import csv
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from .errors import HorizonError
from .rational import format_decimal, rational_to_str, to_rational
from .world import EventLog, latencies_at, occupied_nodes, tail_sup, worst_weighted_latency

Series = List[Tuple[Fraction, Fraction]]


def igi(log: EventLog, t: Any) -> Fraction:
    r"""Instantaneous graph idleness: ``(1/|V|) sum_v w(v) L_v(t)``."""
    graph = log.graph
    total = sum((w * l for w, l in zip(graph.weights, latencies_at(log, t))), Fraction(0))
    return total / graph.num_nodes


def agi(log: EventLog, H: Any) -> Fraction:
    r"""Average graph idleness over ``[0, H]``.

    Each event interval contributes ``sum_v w(v) (L_v d + d^2 / 2)`` over its free
    nodes, where ``d`` is the part of the interval inside the window.

    Raises:
        HorizonError: ``H`` is negative or beyond the logged horizon.
    """
    H = to_rational(H)
    if H < 0 or H > log.horizon:
        raise HorizonError("horizon {} outside the logged window [0, {}]".format(H, log.horizon))
    if H == 0:
        return igi(log, 0)
    graph = log.graph
    area = Fraction(0)
    for record in log.records:
        if record.t >= H:
            break
        d = min(record.t + record.dt, H) - record.t
        held = occupied_nodes(record.committed)
        for v, (w, l) in enumerate(zip(graph.weights, record.state.latencies)):
            if v not in held:
                area += w * (l * d + d * d / 2)
    return area / (graph.num_nodes * H)


def iwi(log: EventLog, t: Any) -> Fraction:
    r"""Instantaneous worst idleness: the worst weighted latency at ``t``."""
    return worst_weighted_latency(log, t)


def wi(log: EventLog, H: Any) -> Fraction:
    r"""Worst idleness over ``[0, H]``, left limits included."""
    return tail_sup(log, 0, H)


def tail_wi(log: EventLog, T: Any, H: Any) -> Fraction:
    return tail_sup(log, T, H)


@dataclass
class MetricsReport:
    r"""Event-time series and summary values of one log."""

    T: Fraction
    H: Fraction
    agi: Fraction
    wi: Fraction
    tail_wi: Fraction
    igi_series: Series = field(default_factory=list)
    iwi_series: Series = field(default_factory=list)

    def summary(self, precision: int = 12) -> Dict[str, Any]:
        return {
            "agi": format_decimal(self.agi, precision),
            "wi": format_decimal(self.wi, precision),
            "tail_wi": format_decimal(self.tail_wi, precision),
            "T": format_decimal(self.T, precision),
            "H": format_decimal(self.H, precision),
            "exact": {
                "agi": rational_to_str(self.agi),
                "wi": rational_to_str(self.wi),
                "tail_wi": rational_to_str(self.tail_wi),
                "T": rational_to_str(self.T),
                "H": rational_to_str(self.H),
            },
        }


def build_report(log: EventLog, T: Any = 0, H: Optional[Any] = None) -> MetricsReport:
    r"""All metrics of ``log`` over ``[0, H]`` with tail start ``T``.

    Args:
        log (EventLog):
            Source log.
        T (Any):
            Tail start, at most ``H``.
        H (Any, optional):
            Horizon; the log horizon by default.
    """
    H = log.horizon if H is None else to_rational(H)
    T = to_rational(T)
    times = sorted({t for t in log.event_times() if t <= H} | {H})
    return MetricsReport(
        T=T,
        H=H,
        agi=agi(log, H),
        wi=wi(log, H),
        tail_wi=tail_wi(log, T, H),
        igi_series=[(t, igi(log, t)) for t in times],
        iwi_series=[(t, iwi(log, t)) for t in times],
    )


def write_series_csv(report: MetricsReport, path: str, precision: int = 12):
    with open(os.path.expanduser(path), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["t", "igi", "iwi"])
        for (t, g), (_, w) in zip(report.igi_series, report.iwi_series):
            writer.writerow([format_decimal(t, precision), format_decimal(g, precision), format_decimal(w, precision)])


def write_summary_json(report: MetricsReport, path: str, precision: int = 12):
    with open(os.path.expanduser(path), "w") as f:
        json.dump(report.summary(precision), f, indent=2, sort_keys=True)
        f.write("\n")
