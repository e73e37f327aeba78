# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Standardized logging for patrolbench.

Records go to stderr through loguru; stdout is left to the command tables. Messages
are written as a padded ``prefix`` followed by a free-form ``sufix``::

    patrolbench.logging.info("oracle", "nodes=10000 incumbent=3")
"""

import argparse
import copy
import os
import re
import sys
from fractions import Fraction

import torch
from loguru import logger

import patrolbench

logger = logger.opt(colors=True)
try:
    logger.remove(0)
except Exception:
    pass

PREFIX_WIDTH = 30
TRACE_LEVEL, DEBUG_LEVEL, INFO_LEVEL = 5, 10, 20

_MARKUP = re.compile(r"<.*?>")
_CONSOLE_FORMAT = "<blue>{time:YYYY-MM-DD HH:mm:ss.SSS}</blue> | <level>{level: ^16}</level> | {message}\n"
_FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | <level>{level: ^16}</level> | {message}\n"
_FILE_TRACE_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss.SSS} | <level>{level: ^16}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | {message}\n"
)


def _env_flag(name: str) -> bool:
    return os.getenv(name) is not None


class logging:
    """Loguru sinks shared by the library and the CLI. Configured once per process."""

    __has_been_inited__: bool = False
    __debug_on__: bool = False
    __trace_on__: bool = False
    __std_sink__: int = None
    __file_sink__: int = None

    def __new__(
        cls,
        config: "patrolbench.config" = None,
        debug: bool = None,
        trace: bool = None,
        record_log: bool = None,
        logging_dir: str = None,
    ):
        r"""(Re)installs the sinks.

        Args:
            config (patrolbench.config, optional):
                Config holding a ``logging`` section; ``logging.config()`` when omitted.
            debug (bool, optional):
                Show debug records.
            trace (bool, optional):
                Show trace records; file records also carry the call site.
            record_log (bool, optional):
                Also write ``patrolbench.log`` under ``logging_dir``.
            logging_dir (str, optional):
                Directory of the log file.
        """
        cls.__has_been_inited__ = True

        settings = copy.deepcopy(config if config is not None else logging.config()).logging
        overrides = {"debug": debug, "trace": trace, "record_log": record_log, "logging_dir": logging_dir}
        for key, value in overrides.items():
            if value is not None:
                settings[key] = value

        for sink in ("__std_sink__", "__file_sink__"):
            if getattr(cls, sink) is not None:
                logger.remove(getattr(cls, sink))
                setattr(cls, sink, None)

        cls.__std_sink__ = logger.add(
            sys.stderr,
            level=0,
            filter=cls.log_filter,
            colorize=True,
            backtrace=True,
            diagnose=False,
            format=lambda record: _CONSOLE_FORMAT,
        )
        cls.set_debug(bool(settings.debug))
        cls.set_trace(bool(settings.trace))

        if settings.record_log:
            cls.__file_sink__ = logger.add(
                os.path.join(os.path.expanduser(settings.logging_dir), "patrolbench.log"),
                filter=cls.log_filter,
                backtrace=True,
                diagnose=False,
                format=lambda record: _FILE_TRACE_FORMAT if cls.__trace_on__ else _FILE_FORMAT,
                rotation="25 MB",
                retention="10 days",
            )

    @classmethod
    def config(cls) -> "patrolbench.config":
        """Default logging config built from the argument parser."""
        parser = argparse.ArgumentParser()
        logging.add_args(parser)
        return patrolbench.config(parser, args=[])

    @classmethod
    def add_args(cls, parser: argparse.ArgumentParser, prefix: str = None):
        """Adds the ``--logging.*`` flags; environment variables ``PATROL_LOGGING_*`` set their defaults."""
        prefix_str = "" if prefix is None else prefix + "."
        flags = [
            ("debug", "show debug records"),
            ("trace", "show trace records and call sites"),
            ("record_log", "also write records to <logging_dir>/patrolbench.log"),
        ]
        try:
            for name, help_text in flags:
                parser.add_argument(
                    "--" + prefix_str + "logging." + name,
                    action="store_true",
                    help=help_text,
                    default=_env_flag("PATROL_LOGGING_" + name.upper()),
                )
            parser.add_argument(
                "--" + prefix_str + "logging.logging_dir",
                type=str,
                help="directory of the log file",
                default=os.getenv("PATROL_LOGGING_LOGGING_DIR") or "~/.patrolbench/logs",
            )
        except argparse.ArgumentError:
            # re-parsing arguments.
            pass

    @classmethod
    def set_debug(cls, debug_on: bool = True):
        if not cls.__has_been_inited__:
            cls()
        cls.__debug_on__ = debug_on

    @classmethod
    def set_trace(cls, trace_on: bool = True):
        if not cls.__has_been_inited__:
            cls()
        cls.__trace_on__ = trace_on

    @classmethod
    def get_level(cls) -> int:
        if cls.__trace_on__:
            return TRACE_LEVEL
        return DEBUG_LEVEL if cls.__debug_on__ else INFO_LEVEL

    @classmethod
    def log_filter(cls, record) -> bool:
        return record["level"].no >= cls.get_level()

    @staticmethod
    def _format(prefix: object, sufix: object = None) -> str:
        if isinstance(sufix, torch.Tensor):
            sufix = "shape: {} data: {}".format(tuple(sufix.shape), sufix.detach())
        elif isinstance(sufix, Fraction):
            sufix = patrolbench.rational.format_decimal(sufix)
        text = str(prefix).ljust(PREFIX_WIDTH) + ("" if sufix is None else str(sufix))
        return _MARKUP.sub("", text)

    @classmethod
    def _emit(cls, level: str, prefix: object, sufix: object = None):
        if not cls.__has_been_inited__:
            cls()
        logger.log(level, cls._format(prefix, sufix))

    @classmethod
    def success(cls, prefix: object, sufix: object = None):
        cls._emit("SUCCESS", prefix, sufix)

    @classmethod
    def error(cls, prefix: object, sufix: object = None):
        cls._emit("ERROR", prefix, sufix)

    @classmethod
    def info(cls, prefix: object, sufix: object = None):
        cls._emit("INFO", prefix, sufix)

    @classmethod
    def debug(cls, prefix: object, sufix: object = None):
        cls._emit("DEBUG", prefix, sufix)

    @classmethod
    def exception(cls, prefix: object, sufix: object = None):
        """Error record with the active traceback."""
        if not cls.__has_been_inited__:
            cls()
        logger.exception(cls._format(prefix, sufix))
