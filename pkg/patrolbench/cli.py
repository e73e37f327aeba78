# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

import argparse
import sys
from typing import List, Optional

import shtab

import patrolbench
from .errors import ConfigError, PatrolBenchError, VerificationFailure
from .commands import (
    LearnCommand,
    MetricsCommand,
    OracleCommand,
    SimulateCommand,
    VerifyCommand,
)

# Create a console instance for CLI display.
console = patrolbench.__console__

COMMANDS = {
    "simulate": SimulateCommand,
    "oracle": OracleCommand,
    "learn": LearnCommand,
    "verify": VerifyCommand,
    "metrics": MetricsCommand,
}

EXIT_CONFIG_ERROR = 2
EXIT_VERIFICATION_FAILURE = 3


class CLIErrorParser(argparse.ArgumentParser):
    """
    Custom ArgumentParser for better error messages.
    """

    def error(self, message):
        """
        This method is called when an error occurs. It prints a custom error message.
        """
        sys.stderr.write(f"Error: {message}\n")
        self.print_help()
        sys.exit(EXIT_CONFIG_ERROR)


class cli:
    """
    Implementation of the command line interface of the patrolling benchmark.

    Exit codes: 0 on success, 2 for configuration errors, 3 when a verification check
    fails and 1 for any other patrolbench error.
    """

    def __init__(
        self,
        config: Optional["patrolbench.config"] = None,
        args: Optional[List[str]] = None,
    ):
        """
        Initializes a patrolbench.cli object.

        Args:
            config (patrolbench.config, optional): The configuration settings for the CLI.
            args (List[str], optional): List of command line arguments.
        """
        # Turns on console for cli.
        patrolbench.turn_console_on()

        # If no config is provided, create a new one from args.
        if config is None:
            config = cli.create_config(args or [])

        self.config = config
        cli.check_config(self.config)
        if self.config.get("logging") is not None:
            patrolbench.logging(config=self.config)

    @staticmethod
    def __create_parser__() -> "argparse.ArgumentParser":
        """
        Creates the argument parser for the patrolbench CLI.

        Returns:
            argparse.ArgumentParser: An argument parser object for the patrolbench CLI.
        """
        parser = CLIErrorParser(
            description=f"patrolcli v{patrolbench.__version__}",
            usage="patrolcli <command> <command args>",
            add_help=True,
        )
        # Add shtab completion
        parser.add_argument(
            "--print-completion",
            choices=shtab.SUPPORTED_SHELLS,
            help="Print shell tab completion script",
        )
        cmd_parsers = parser.add_subparsers(dest="command")
        for command in COMMANDS.values():
            command.add_args(cmd_parsers)
        return parser

    @staticmethod
    def create_config(args: List[str]) -> "patrolbench.config":
        """
        Builds the CLI config from the argument parser.

        Args:
            args (List[str]): List of command line arguments.

        Returns:
            patrolbench.config: The configuration object for the CLI.
        """
        parser = cli.__create_parser__()

        # If no arguments are passed, print help text and exit the program.
        if len(args) == 0:
            parser.print_help()
            sys.exit()

        return patrolbench.config(parser, args=args)

    @staticmethod
    def check_config(config: "patrolbench.config"):
        """
        Checks the configuration of the selected command.

        Args:
            config (patrolbench.config): The configuration settings for the CLI.
        """
        if config.get("print_completion"):
            return
        if config.command in COMMANDS:
            COMMANDS[config.command].check_config(config)
        else:
            console.print(f":cross_mark:[red]Unknown command: {config.command}[/red]")
            sys.exit(EXIT_CONFIG_ERROR)

    def run(self):
        """
        Executes the command from the configuration and maps failures to exit codes.
        """
        if self.config.get("print_completion"):
            print(shtab.complete(cli.__create_parser__(), self.config.print_completion))
            return

        command = COMMANDS[self.config.command]
        try:
            command.run(self)
        except ConfigError as e:
            console.print(f":cross_mark:[red]{e}[/red]")
            sys.exit(EXIT_CONFIG_ERROR)
        except VerificationFailure as e:
            console.print(f":cross_mark:[red]{e}[/red]")
            sys.exit(EXIT_VERIFICATION_FAILURE)
        except PatrolBenchError as e:
            patrolbench.logging.exception(type(e).__name__, str(e))
            console.print(f":cross_mark:[red]{e}[/red]")
            sys.exit(1)


def main(args: Optional[List[str]] = None):
    cli(args=sys.argv[1:] if args is None else args).run()
