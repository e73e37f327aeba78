# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

from munch import Munch, munchify

defaults: Munch = munchify(
    {
        "output": "results",
        "jobs": 1,
        "files": {
            "logs": "logs",
            "metrics": "metrics",
            "summary": "summary.json",
            "demos": "demos.jsonl",
            "oracle": "oracle.json",
            "qtable": "qtable.json",
            "learn": "learn.json",
            "evaluation": "evaluation",
            "verify": "verify.json",
        },
        "logging": {
            "debug": False,
            "trace": False,
            "record_log": False,
            "logging_dir": "~/.patrolbench/logs",
        },
    }
)

from .simulate import SimulateCommand
from .oracle import OracleCommand
from .learn import LearnCommand
from .verify import VerifyCommand
from .metrics import MetricsCommand
