# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

""" Experiment file schema.

An experiment file is YAML or JSON. Every section is a pydantic model that
forbids unknown keys, and rational fields accept ints, decimal strings and
``"p/q"`` strings.

    schema_version: 1
    graph: bundled:triangle.json
    robots: 1
    p0: ["1"]
    policy: {name: tsp_cycle}
    mdp: {T: 0, delta: "1/2", kappa_max: 2}
    horizon: 30
"""

import os
from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

import pydantic
import yaml

import patrolbench
from .errors import ConfigError, InvalidConfigFile, SchemaError
from .graph import MonitorGraph, load_graph
from .mdp import MdpConfig
from .oracle import SearchBounds
from .policies import Policy, make_policy, plan_policy
from .rational import Rational, to_rational, to_rational_or_infinity
from .world import RobotPose, SegmentPlan, make_pose

BUNDLED_PREFIX = "bundled:"
INSTANCES_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "instances")


def cast_rational(raw: Any) -> Optional[Fraction]:
    """
    Converts ints, floats, decimal strings and ``"p/q"`` strings to a Fraction, passing ``None`` through.
    """
    return to_rational(raw) if raw is not None else raw


def cast_rational_or_infinity(raw: Any) -> Rational:
    return to_rational_or_infinity(raw)


def cast_rational_list(raw: Any) -> Any:
    if raw is None or isinstance(raw, str) or not hasattr(raw, "__iter__"):
        return raw
    return [to_rational_or_infinity(v) for v in raw]


def resolve_instance_path(path: str, base_dir: Optional[str] = None) -> str:
    r"""Resolves ``bundled:<name>`` into the packaged instances and relative paths against ``base_dir``."""
    if path.startswith(BUNDLED_PREFIX):
        return os.path.join(INSTANCES_DIR, path[len(BUNDLED_PREFIX) :])
    path = os.path.expanduser(path)
    if base_dir is not None and not os.path.isabs(path):
        return os.path.normpath(os.path.join(base_dir, path))
    return path


class _Section(pydantic.BaseModel):
    class Config:
        extra = "forbid"
        validate_assignment = True
        arbitrary_types_allowed = True


class PolicySection(_Section):
    r"""Either a registered policy (``name`` + ``params``) or a scripted ``plan`` with an optional repeating ``cycle``."""

    name: Optional[str] = pydantic.Field(
        title="name",
        description="Registered policy: tsp_cycle, partition, greedy, random or qtable.",
        default=None,
    )
    params: Dict[str, Any] = pydantic.Field(
        title="params",
        description="Keyword parameters of the registered policy.",
        default_factory=dict,
    )
    plan: Optional[List[List[Any]]] = pydantic.Field(
        title="plan",
        description="Per-robot segment lists, e.g. [[{traverse: [1, 3]}, {wait: [3, 1/2]}]].",
        default=None,
    )
    cycle: Optional[List[List[Any]]] = pydantic.Field(
        title="cycle",
        description="Per-robot segments repeated once the plan is exhausted.",
        default=None,
    )

    @pydantic.root_validator(skip_on_failure=True)
    def check_one_kind(cls, values) -> dict:
        if (values.get("name") is None) == (values.get("plan") is None):
            raise ValueError("policy needs exactly one of 'name' or 'plan'")
        if values.get("cycle") is not None and values.get("plan") is None:
            raise ValueError("'cycle' is only valid together with 'plan'")
        if values.get("plan") is not None and values.get("params"):
            raise ValueError("scripted plans take no 'params'")
        return values

    @property
    def scripted(self) -> bool:
        return self.plan is not None


class MdpSection(_Section):
    T: Union[Fraction, float] = Fraction(0)
    _extract_T = pydantic.validator("T", pre=True, allow_reuse=True)(cast_rational_or_infinity)

    delta: Fraction = Fraction(1, 10)
    _extract_delta = pydantic.validator("delta", pre=True, allow_reuse=True)(cast_rational)

    kappa_max: int = 8
    lambda_L: float = 1.0
    lambda_z: float = 1.0
    baseline: str = "wait"
    reward_mode: str = pydantic.Field(
        title="reward_mode",
        description="Team reward of demonstrations and Q-learning: 'step' (-z) or 'time' (-z dt).",
        default="step",
    )

    @pydantic.root_validator(skip_on_failure=True)
    def check_decision_process(cls, values) -> dict:
        try:
            MdpConfig(
                T=values["T"],
                delta=values["delta"],
                kappa_max=values["kappa_max"],
                lambda_L=values["lambda_L"],
                lambda_z=values["lambda_z"],
                baseline=values["baseline"],
            )
        except ConfigError as e:
            raise ValueError(str(e)) from e
        if values["reward_mode"] not in ("step", "time"):
            raise ValueError("reward_mode must be 'step' or 'time'")
        return values

    def to_config(self) -> MdpConfig:
        return MdpConfig(
            T=self.T,
            delta=self.delta,
            kappa_max=self.kappa_max,
            lambda_L=self.lambda_L,
            lambda_z=self.lambda_z,
            baseline=self.baseline,
        )


class OracleSection(_Section):
    depth_cap: int = pydantic.Field(default=1024, gt=0)
    latency_cap: Optional[Fraction] = None
    _extract_latency_cap = pydantic.validator("latency_cap", pre=True, allow_reuse=True)(cast_rational)
    incumbent: Optional[Fraction] = None
    _extract_incumbent = pydantic.validator("incumbent", pre=True, allow_reuse=True)(cast_rational)

    def bounds(self) -> SearchBounds:
        try:
            return SearchBounds(
                depth_cap=self.depth_cap, latency_cap=self.latency_cap, incumbent=self.incumbent
            )
        except ConfigError as e:
            raise SchemaError(str(e)) from e


class LearnSection(_Section):
    budget: int = pydantic.Field(default=100000, ge=0)
    gamma: float = pydantic.Field(default=0.99, gt=0, le=1)
    alpha: float = pydantic.Field(default=0.5, gt=0, le=1)
    alpha_decay: float = pydantic.Field(default=0.999, gt=0, le=1)
    epsilon: float = pydantic.Field(default=1.0, ge=0, le=1)
    epsilon_decay: float = pydantic.Field(default=0.995, gt=0, le=1)
    epsilon_min: float = pydantic.Field(default=0.05, ge=0, le=1)
    state_key_cap: int = pydantic.Field(default=200000, gt=0)
    episode_horizon: Fraction = Fraction(100)
    _extract_episode_horizon = pydantic.validator("episode_horizon", pre=True, allow_reuse=True)(cast_rational)

    @pydantic.validator("episode_horizon")
    def check_episode_horizon(cls, value: Fraction) -> Fraction:
        if value <= 0:
            raise ValueError("episode_horizon must be positive")
        return value


class VerifySection(_Section):
    delta_ref: Optional[Fraction] = pydantic.Field(
        title="delta_ref",
        description="Reference quantum; a quarter of mdp.delta by default.",
        default=None,
    )
    _extract_delta_ref = pydantic.validator("delta_ref", pre=True, allow_reuse=True)(cast_rational)
    T_values: List[Union[Fraction, float]] = pydantic.Field(
        title="T_values",
        description="Tail starts of the horizon invariance check; skipped when empty.",
        default_factory=list,
    )
    _extract_T_values = pydantic.validator("T_values", pre=True, allow_reuse=True)(cast_rational_list)


class MetricsSection(_Section):
    precision: int = pydantic.Field(default=12, gt=0, le=50)


class DatasetSection(_Section):
    episodes: int = pydantic.Field(
        title="episodes",
        description="Demonstration episodes recorded by simulate; none when 0.",
        default=0,
        ge=0,
    )
    gamma: float = pydantic.Field(default=0.99, gt=0, le=1)
    d_gpe: int = pydantic.Field(default=2, ge=0)


class ExperimentConfig(_Section):
    r"""One experiment: instance, start poses, policy, decision parameters and run settings.

    ``p0`` lists start node ids. ``initial_poses`` replaces it for robots that start
    inside an edge; each entry is ``[from, to, remaining]``.
    """

    schema_version: int = pydantic.Field(
        title="schema_version",
        description="Version of this schema; only 1 is understood.",
        default=patrolbench.__schema_version__,
    )
    name: str = "experiment"
    graph: str = pydantic.Field(
        title="graph",
        description="Graph file, relative to the experiment file, or bundled:<name>.",
    )
    robots: int = pydantic.Field(gt=0)
    p0: Optional[List[str]] = None
    initial_poses: Optional[List[List[Any]]] = None
    policy: PolicySection = pydantic.Field(default_factory=lambda: PolicySection(name="tsp_cycle"))
    mdp: MdpSection = pydantic.Field(default_factory=MdpSection)
    horizon: Fraction = Fraction(100)
    _extract_horizon = pydantic.validator("horizon", pre=True, allow_reuse=True)(cast_rational)
    repetitions: int = pydantic.Field(default=1, ge=0)
    seed: int = 0
    output: str = "results"
    jobs: int = pydantic.Field(default=1, gt=0)
    oracle: OracleSection = pydantic.Field(default_factory=OracleSection)
    learn: LearnSection = pydantic.Field(default_factory=LearnSection)
    verify: VerifySection = pydantic.Field(default_factory=VerifySection)
    metrics: MetricsSection = pydantic.Field(default_factory=MetricsSection)
    dataset: DatasetSection = pydantic.Field(default_factory=DatasetSection)

    @pydantic.validator("schema_version")
    def check_schema_version(cls, value: int) -> int:
        if value != patrolbench.__schema_version__:
            raise ValueError(
                "unsupported schema_version {}; this release reads {}".format(
                    value, patrolbench.__schema_version__
                )
            )
        return value

    @pydantic.validator("graph")
    def check_graph_exists(cls, value: str) -> str:
        path = resolve_instance_path(value)
        if not os.path.isfile(path):
            raise ValueError("graph file {} does not exist".format(path))
        return path

    @pydantic.validator("p0", pre=True)
    def cast_node_ids(cls, value: Any) -> Any:
        if isinstance(value, list):
            return [str(v) for v in value]
        return value

    @pydantic.validator("horizon")
    def check_horizon(cls, value: Fraction) -> Fraction:
        if value < 0:
            raise ValueError("horizon must be nonnegative")
        return value

    @pydantic.root_validator(skip_on_failure=True)
    def check_robots(cls, values) -> dict:
        robots, p0, poses = values["robots"], values.get("p0"), values.get("initial_poses")
        if p0 is None and poses is None:
            raise ValueError("give start nodes in 'p0' or start poses in 'initial_poses'")
        for key, starts in (("p0", p0), ("initial_poses", poses)):
            if starts is not None and len(starts) != robots:
                raise ValueError("{} lists {} robots, expected {}".format(key, len(starts), robots))
        for entry in poses or []:
            if len(entry) != 3:
                raise ValueError("initial pose {} must be [from, to, remaining]".format(entry))
        policy = values["policy"]
        for key in ("plan", "cycle"):
            rows = getattr(policy, key)
            if rows is not None and len(rows) != robots:
                raise ValueError("policy {} covers {} robots, expected {}".format(key, len(rows), robots))
        return values

    def load_graph(self) -> MonitorGraph:
        return load_graph(self.graph)

    def start_poses(self, graph: MonitorGraph) -> List[Union[str, RobotPose]]:
        r"""Start entries accepted by the world: node ids or validated edge poses."""
        if self.initial_poses is not None:
            return [make_pose(graph, *entry) for entry in self.initial_poses]
        return list(self.p0)

    def mdp_config(self) -> MdpConfig:
        return self.mdp.to_config()

    def scripted_plan(self, graph: MonitorGraph):
        r"""``(plan, cycle)`` of a scripted policy; ``cycle`` may be ``None``."""
        plan = SegmentPlan.from_spec(graph, self.policy.plan)
        cycle = SegmentPlan.from_spec(graph, self.policy.cycle) if self.policy.cycle is not None else None
        return plan, cycle

    def build_policy(self, graph: MonitorGraph) -> Policy:
        if self.policy.scripted:
            return plan_policy(*self.scripted_plan(graph))
        return make_policy(self.policy.name, graph, self.robots, self.policy.params)

    def delta_ref(self) -> Fraction:
        return self.verify.delta_ref if self.verify.delta_ref is not None else self.mdp.delta / 4


def experiment_from_dict(data: Any, base_dir: Optional[str] = None) -> ExperimentConfig:
    r"""Validates a parsed experiment mapping.

    Args:
        data (Any):
            Parsed file contents.
        base_dir (str, optional):
            Directory relative graph and Q-table paths are resolved against.
    Raises:
        SchemaError: Unknown keys, wrong types or an unsupported ``schema_version``.
    """
    if not isinstance(data, dict):
        raise SchemaError("an experiment file must hold a mapping, got {}".format(type(data).__name__))
    data = dict(data)
    if isinstance(data.get("graph"), str):
        data["graph"] = resolve_instance_path(data["graph"], base_dir)
    policy = data.get("policy")
    if isinstance(policy, dict) and isinstance(policy.get("params"), dict) and "path" in policy["params"]:
        params = dict(policy["params"])
        params["path"] = resolve_instance_path(str(params["path"]), base_dir)
        data["policy"] = dict(policy, params=params)
    try:
        return ExperimentConfig(**data)
    except pydantic.ValidationError as e:
        raise SchemaError(str(e)) from e


def load_experiment(path: str) -> ExperimentConfig:
    r"""Reads and validates an experiment file.

    Args:
        path (str):
            YAML or JSON file.
    Returns:
        experiment (ExperimentConfig):
            Validated experiment with resolved file paths.
    Raises:
        InvalidConfigFile: The file is missing or is not valid YAML/JSON.
        SchemaError: The contents violate the schema.
    """
    path = os.path.expanduser(path)
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise InvalidConfigFile("cannot read experiment file {}: {}".format(path, e)) from e
    except yaml.YAMLError as e:
        raise InvalidConfigFile("cannot parse experiment file {}: {}".format(path, e)) from e
    experiment = experiment_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
    patrolbench.logging.info(
        "experiment", "{} graph={} robots={}".format(experiment.name, experiment.graph, experiment.robots)
    )
    return experiment
