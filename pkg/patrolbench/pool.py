# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Bounded worker pool for independent rollouts, episodes and search subtrees.

Results always come back in submission order, so the outcome of a run does not
depend on the number of workers.
"""

import argparse
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Iterable, List, Optional

from tqdm import tqdm

import patrolbench


class RolloutPool:
    r"""Runs a picklable function over work items, inline or on worker processes.

    Args:
        config (patrolbench.config, optional):
            Config holding ``pool.jobs`` and ``pool.progress``.
        jobs (int, optional):
            Number of worker processes; 1 runs inline.
        progress (bool, optional):
            Show a tqdm progress bar.
    """

    def __init__(
        self,
        config: "patrolbench.config" = None,
        jobs: Optional[int] = None,
        progress: Optional[bool] = None,
    ):
        if config is None:
            config = RolloutPool.config()
        config = config.copy()
        config.pool.jobs = jobs if jobs is not None else config.pool.jobs
        config.pool.progress = progress if progress is not None else config.pool.progress
        RolloutPool.check_config(config)
        self.config = config
        self.jobs = config.pool.jobs
        self.progress = config.pool.progress

    def __repr__(self) -> str:
        return "RolloutPool(jobs={})".format(self.jobs)

    @classmethod
    def add_args(cls, parser: argparse.ArgumentParser, prefix: str = None):
        """Accept specific arguments from parser"""
        prefix_str = "" if prefix is None else prefix + "."
        try:
            default_jobs = int(os.getenv("PATROL_POOL_JOBS") or 1)
            default_progress = os.getenv("PATROL_POOL_PROGRESS") is not None
            parser.add_argument(
                "--" + prefix_str + "pool.jobs",
                type=int,
                help="""number of worker processes for independent rollouts""",
                default=default_jobs,
            )
            parser.add_argument(
                "--" + prefix_str + "pool.progress",
                action="store_true",
                help="""show a progress bar while work items run""",
                default=default_progress,
            )
        except argparse.ArgumentError:
            # re-parsing arguments.
            pass

    @classmethod
    def config(cls) -> "patrolbench.config":
        """Get config from the argument parser.

        Return: :func:`patrolbench.config` object.
        """
        parser = argparse.ArgumentParser()
        RolloutPool.add_args(parser)
        return patrolbench.config(parser, args=[])

    @classmethod
    def check_config(cls, config: "patrolbench.config"):
        assert config.pool.jobs >= 1, "pool.jobs must be at least 1"

    def map(self, fn: Callable[[Any], Any], items: Iterable[Any], desc: str = "work") -> List[Any]:
        r"""Applies ``fn`` to every item.

        Args:
            fn (Callable):
                Module-level function (it is pickled when ``jobs > 1``).
            items (Iterable):
                Work items.
            desc (str):
                Progress bar label.
        Returns:
            results (List[Any]):
                ``fn(item)`` for each item, in input order.
        """
        items = list(items)
        patrolbench.logging.debug("pool", "{} items={} jobs={}".format(desc, len(items), self.jobs))
        if self.jobs == 1 or len(items) <= 1:
            return [fn(item) for item in tqdm(items, desc=desc, disable=not self.progress)]
        with ProcessPoolExecutor(max_workers=min(self.jobs, len(items))) as executor:
            return list(
                tqdm(
                    executor.map(fn, items),
                    total=len(items),
                    desc=desc,
                    disable=not self.progress,
                )
            )
