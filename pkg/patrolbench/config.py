# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

"""
Nested runtime configuration of patrolbench components, built from argparse.

Dotted flags such as ``--logging.debug`` or ``--pool.jobs`` become nested sections.
The experiment file passed with ``--config`` is validated separately by
:mod:`patrolbench.schema`; this object only carries its path.
"""

import argparse
import copy
import sys
from typing import Any, Dict, List, Optional

import yaml
from munch import DefaultMunch


class config(DefaultMunch):
    r"""Translates the passed parser into a nested patrolbench config.

    Args:
        parser (argparse.ArgumentParser):
            Command line parser object.
        args (list of str):
            Command line arguments; ``sys.argv[1:]`` when omitted.
        strict (bool):
            If ``true``, unknown command line arguments are an error.
        default (Optional[Any]):
            Value returned for undefined attributes.
    Returns:
        config (patrolbench.config):
            Nested config object created from parser arguments.
    """

    __is_set: Dict[str, bool]

    def __init__(
        self,
        parser: Optional[argparse.ArgumentParser] = None,
        args: Optional[List[str]] = None,
        strict: bool = False,
        default: Optional[Any] = None,
    ) -> None:
        super().__init__(default)

        self["__is_set"] = {}

        if parser is None:
            return None

        try:
            parser.add_argument(
                "--config",
                type=str,
                help="Experiment file (yaml or json) validated against the experiment schema.",
            )
        except argparse.ArgumentError:
            # --config was added by an earlier pass.
            pass

        try:
            parser.add_argument(
                "--strict",
                action="store_true",
                help="""If flagged, unknown command line arguments are rejected.""",
                default=False,
            )
        except argparse.ArgumentError:
            pass

        if args is None:
            args = sys.argv[1:]

        params = config.__parse_args__(args=args, parser=parser, strict=False)
        strict = params.strict or strict
        if strict:
            params = config.__parse_args__(args=args, parser=parser, strict=True)

        config.__split_params__(params=params, _config=self)

        # Reparse with every default suppressed; whatever survives was set explicitly.
        parser_no_defaults = copy.deepcopy(parser)
        default_param_args = [self.get("command")] if self.get("command") is not None else []
        all_default_args = parser.parse_args(args=default_param_args).__dict__.keys()
        defaults_as_suppress = {key: argparse.SUPPRESS for key in all_default_args}
        parser_no_defaults.set_defaults(**defaults_as_suppress)
        parser_no_defaults._defaults.clear()  # argparse keeps a second copy of defaults

        if parser_no_defaults._subparsers is not None:
            for action in parser_no_defaults._subparsers._actions:
                if isinstance(action, argparse._SubParsersAction):
                    cmd_parser: argparse.ArgumentParser
                    for cmd_parser in action.choices.values():
                        cmd_parser.set_defaults(**defaults_as_suppress)
                        cmd_parser._defaults.clear()

        params_no_defaults = config.__parse_args__(
            args=args, parser=parser_no_defaults, strict=strict
        )
        self["__is_set"] = {
            key: True
            for key, value in params_no_defaults.__dict__.items()
            if value != argparse.SUPPRESS
        }

    @staticmethod
    def __split_params__(params: argparse.Namespace, _config: "config"):
        # Splits params on dot syntax, i.e. logging.debug, into nested sections.
        for arg_key, arg_val in params.__dict__.items():
            keys = arg_key.split(".")
            head = _config
            while len(keys) > 1:
                if hasattr(head, keys[0]) and head[keys[0]] is not None:
                    head = getattr(head, keys[0])
                else:
                    head[keys[0]] = config()
                    head = head[keys[0]]
                keys = keys[1:]
            head[keys[0]] = arg_val

    @staticmethod
    def __parse_args__(
        args: List[str], parser: argparse.ArgumentParser, strict: bool = False
    ) -> argparse.Namespace:
        """Parses the passed args use the passed parser.

        Args:
            args (list[str]):
                list of arguments to parse.
            parser (argparse.ArgumentParser):
                Command line parser object.
            strict (bool):
                If ``true``, the command line arguments are strictly parsed.
        Returns:
            Namespace:
                Namespace object created from parser arguments.
        """
        if strict:
            return parser.parse_args(args=args)
        params, unrecognized = parser.parse_known_args(args=args)
        known = list(params.__dict__)
        # argparse drops boolean flags it could not attach; set them by hand.
        for unrec in unrecognized:
            if unrec.startswith("--") and unrec[2:] in known:
                setattr(params, unrec[2:], True)
        return params

    def __deepcopy__(self, memo) -> "config":
        _default = self.__default__
        config_state = self.__getstate__()
        config_copy = config()
        memo[id(self)] = config_copy
        config_copy.__setstate__(config_state)
        config_copy.__default__ = _default
        config_copy["__is_set"] = copy.deepcopy(self["__is_set"], memo)
        return config_copy

    def __repr__(self) -> str:
        return self.__str__()

    @staticmethod
    def _remove_private_keys(d: Dict[str, Any]) -> Dict[str, Any]:
        d.pop("__is_set", None)
        for value in d.values():
            if isinstance(value, dict):
                config._remove_private_keys(value)
        return d

    def __str__(self) -> str:
        visible = config._remove_private_keys(copy.deepcopy(self.toDict()))
        return "\n" + yaml.dump(visible, sort_keys=False)

    def copy(self) -> "config":
        return copy.deepcopy(self)

    @classmethod
    def _merge(cls, a, b):
        """Merge two configurations recursively; values from ``b`` win."""
        for key in b:
            if key in a and isinstance(a[key], dict) and isinstance(b[key], dict):
                a[key] = cls._merge(a[key], b[key])
            else:
                a[key] = b[key]
        return a

    def merge(self, b: "config"):
        """
        Merges another config into this one.

        Args:
            b: Another config to merge.
        """
        self._merge(self, b)

    @classmethod
    def merge_all(cls, configs: List["config"]) -> "config":
        """
        Merge all configs in the list into one config; later configs win.

        Args:
            configs (list of config):
                list of configs to be merged.

        Returns:
            config:
                Merged config object.
        """
        result = cls()
        for cfg in configs:
            result.merge(cfg)
        return result

    def is_set(self, param_name: str) -> bool:
        """
        Returns whether the parameter was given on the command line rather than defaulted.
        """
        return self.get("__is_set", {}).get(param_name, False)
