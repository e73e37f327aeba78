# The MIT License (MIT)
# Copyright © 2024 patrolbench developers


class PatrolBenchError(Exception):
    r"""Base error for everything raised by patrolbench."""

    pass


class ConfigError(PatrolBenchError):
    r"""Error raised when an experiment or CLI configuration cannot be used. Maps to exit code 2."""

    pass


class InvalidConfigFile(ConfigError):
    r"""Error raised when the configuration file is missing or cannot be parsed."""

    pass


class SchemaError(ConfigError):
    r"""Error raised when a configuration file violates the experiment schema (unknown keys included)."""

    pass


class UnsupportedHorizonError(ConfigError):
    r"""Error raised when an infinite tail start T is requested for a learning run."""

    pass


class GraphError(PatrolBenchError):
    r"""Base error for monitoring graph construction and queries."""

    pass


class GraphFormatError(GraphError):
    r"""Error raised when a graph file does not parse against the graph schema."""

    pass


class DisconnectedGraphError(GraphError):
    r"""Error raised when a monitoring graph is not connected."""

    pass


class InvalidWeightError(GraphError):
    r"""Error raised for a nonpositive node weight or edge length, or a self-loop."""

    pass


class DuplicateEdgeError(GraphError):
    r"""Error raised when two edges join the same unordered node pair."""

    pass


class UnknownNodeError(GraphError):
    r"""Error raised when a node id is not part of the graph."""

    pass


class PointNotOnGraphError(GraphError):
    r"""Error raised when a graph point references a missing edge or an offset outside the edge."""

    pass


class EmbeddingDimensionError(GraphError):
    r"""Error raised when more spectral coordinates are requested than the graph provides."""

    pass


class SimulationError(PatrolBenchError):
    r"""Base error for the event-driven simulator."""

    pass


class CommandError(SimulationError):
    r"""Error raised when the commands passed to a world step do not match the ready robots."""

    pass


class InfeasiblePlanError(SimulationError):
    r"""Error raised when consecutive plan segments do not chain or a segment is not executable."""

    pass


class HorizonError(SimulationError):
    r"""Error raised when a log is queried beyond the time it covers."""

    pass


class MdpError(PatrolBenchError):
    r"""Base error for the event-driven decision process."""

    pass


class ActionMaskError(MdpError):
    r"""Error raised when a joint action violates a robot's legal action mask."""

    def __init__(self, message: str, robot: int = None, event: int = None):
        super().__init__(message)
        self.robot = robot
        self.event = event


class RobotBusyError(MdpError):
    r"""Error raised when a per-robot quantity is requested for a robot that is still executing a command."""

    pass


class LearningError(PatrolBenchError):
    r"""Base error for the learning toolkit."""

    pass


class MalformedBatchError(LearningError):
    r"""Error raised when rollout arrays disagree in length or the active mask is not binary."""

    pass


class StateSpaceExplosionError(LearningError):
    r"""Error raised when tabular learning exceeds its configured state-key cap."""

    pass


class OracleError(PatrolBenchError):
    r"""Base error for the exhaustive optimality search."""

    pass


class SearchBoundsExceeded(OracleError):
    r"""Error raised when a search is too large for its bounds."""

    pass


class NotCertifiedError(OracleError):
    r"""Error raised when a certified optimum is required but the search was cut by its depth or latency cap."""

    pass


class VerificationFailure(PatrolBenchError):
    r"""Error raised when a numerical bound check fails. Maps to exit code 3."""

    pass
