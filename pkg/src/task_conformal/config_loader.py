"""Run configuration: defaults < JSON file < ``TASKCONF_*`` environment < flags.

The JSON file is validated against ``config/schema.json`` before use.
Every setting has a flat key (``alpha``, ``trials``, ``tau`` ...) shared by
the environment layer (``TASKCONF_ALPHA``) and the command-line layer, and
lives in one section of the nested file layout.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import jsonschema

from .errors import InvalidSpecError, MethodMismatchError
from .models import Method, SampleReduction
from .testbed.problem import DEFAULT_TASK_SCALE, ProblemSpec

_LOGGER = logging.getLogger(__name__)

# Bump the schema version when adding new sections or fields.
# Keep this in sync with config/schema.json.
SCHEMA_VERSION = "1.0.0"
ENV_PREFIX = "TASKCONF_"
OUTPUT_FORMATS = ("table", "json")


class ConfigError(RuntimeError):
    """Raised when the configuration cannot be loaded, parsed or validated."""


def _repository_root() -> Path:
    return Path(__file__).resolve().parents[2]


def default_schema_path() -> Path:
    return _repository_root() / "config" / "schema.json"


def load_dotenv(path: Path) -> None:
    """Load ``KEY=VALUE`` lines into ``os.environ`` without overriding.

    Blank lines and ``#`` comments are skipped; one level of matching quotes
    around the value is stripped.
    """

    if not path.is_file():
        return
    pattern = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)=(.*)$")
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        match = pattern.match(line)
        if match is None:
            continue
        key, value = match.group(1), match.group(2).strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in ("'", '"'):
            value = value[1:-1]
        os.environ.setdefault(key, value)


# ----------------------------------------------------------------------
# Settings sections
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemSettings:
    seed: int = 0
    dim: int = 16
    round_rows: Tuple[int, ...] = (2, 4, 8, 16)
    noise_std: float = 0.3
    task_scale: float = DEFAULT_TASK_SCALE
    task_bias: float = 0.0

    def spec(self) -> ProblemSpec:
        return ProblemSpec(
            dim=self.dim,
            round_rows=self.round_rows,
            noise_std=self.noise_std,
            task_scale=self.task_scale,
            task_bias=self.task_bias,
        )


@dataclass(frozen=True)
class ConformalSettings:
    methods: Tuple[Method, ...] = (Method.AR, Method.LWR, Method.CQR)
    alpha: float = 0.1
    samples_p: int = 32
    reduction: SampleReduction = SampleReduction.MEAN
    clamp: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class MonteCarloSettings:
    n_samples: int = 600
    trials: int = 2000
    cal_fraction: float = 0.7
    rounds: Optional[Tuple[int, ...]] = None
    p_sweep: Tuple[int, ...] = (2, 4, 8, 16, 32)
    sweep_round: int = 1
    workers: int = 1


@dataclass(frozen=True)
class MultiRoundSettings:
    tau: float = 0.1
    group_size: int = 8
    per_trial: bool = False
    repeats: int = 100


@dataclass(frozen=True)
class OutputSettings:
    out: str = "results"
    format: str = "table"
    dataset: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSettings = field(default_factory=ProblemSettings)
    conformal: ConformalSettings = field(default_factory=ConformalSettings)
    montecarlo: MonteCarloSettings = field(default_factory=MonteCarloSettings)
    multiround: MultiRoundSettings = field(default_factory=MultiRoundSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    sources: Mapping[str, str] = field(default_factory=dict, compare=False)

    @property
    def seed(self) -> int:
        return self.problem.seed

    def rounds(self) -> Tuple[int, ...]:
        """Requested Monte-Carlo rounds; every round when unset."""

        if self.montecarlo.rounds is not None:
            return self.montecarlo.rounds
        return tuple(range(1, len(self.problem.round_rows) + 1))

    def to_dict(self) -> Dict[str, Any]:
        """Fully resolved settings plus the layer that set each override.

        The worker count is left out; outputs must not depend on it.
        """

        data: Dict[str, Any] = {"version": SCHEMA_VERSION}
        for section in _SECTIONS:
            values = asdict(getattr(self, section))
            data[section] = {
                k: _plain(v) for k, v in values.items() if k not in _RUNTIME_KEYS
            }
        data["sources"] = {
            k: v for k, v in sorted(self.sources.items()) if k not in _RUNTIME_KEYS
        }
        return data


def _plain(value: Any) -> Any:
    if isinstance(value, (Method, SampleReduction)):
        return value.value
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


_RUNTIME_KEYS = frozenset({"workers"})
_SECTIONS = ("problem", "conformal", "montecarlo", "multiround", "output")
_SECTION_TYPES = {
    "problem": ProblemSettings,
    "conformal": ConformalSettings,
    "montecarlo": MonteCarloSettings,
    "multiround": MultiRoundSettings,
    "output": OutputSettings,
}


# ----------------------------------------------------------------------
# Value parsers (shared by the file, env and flag layers)
# ----------------------------------------------------------------------


def _split(raw: Any) -> list:
    if isinstance(raw, str):
        return [token for token in re.split(r"[,\s]+", raw.strip()) if token]
    if isinstance(raw, (list, tuple)):
        return list(raw)
    return [raw]


def _as_int(raw: Any) -> int:
    if isinstance(raw, bool):
        raise ValueError("expected an integer, got a boolean")
    if isinstance(raw, float) and not raw.is_integer():
        raise ValueError(f"expected an integer, got {raw}")
    return int(raw)


def _as_float(raw: Any) -> float:
    if isinstance(raw, bool):
        raise ValueError("expected a number, got a boolean")
    return float(raw)


def _as_bool(raw: Any) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _as_int_tuple(raw: Any) -> Tuple[int, ...]:
    return tuple(_as_int(v) for v in _split(raw))


def _as_optional_int_tuple(raw: Any) -> Optional[Tuple[int, ...]]:
    if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "all")):
        return None
    return _as_int_tuple(raw)


def _as_methods(raw: Any) -> Tuple[Method, ...]:
    tokens = _split(raw)
    if len(tokens) == 1 and str(tokens[0]).strip().lower() == "all":
        return (Method.AR, Method.LWR, Method.CQR)
    return tuple(Method.parse(t) for t in tokens)


def _as_reduction(raw: Any) -> SampleReduction:
    return SampleReduction(str(raw).strip().lower())


def _as_clamp(raw: Any) -> Optional[Tuple[float, float]]:
    if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "none")):
        return None
    values = [_as_float(v) for v in _split(raw)]
    if len(values) != 2:
        raise ValueError(f"clamp needs two bounds, got {values}")
    return (values[0], values[1])


def _as_optional_str(raw: Any) -> Optional[str]:
    return None if raw is None else str(raw)


# flat key -> (section, parser)
_KEYS: Dict[str, Tuple[str, Callable[[Any], Any]]] = {
    "seed": ("problem", _as_int),
    "dim": ("problem", _as_int),
    "round_rows": ("problem", _as_int_tuple),
    "noise_std": ("problem", _as_float),
    "task_scale": ("problem", _as_float),
    "task_bias": ("problem", _as_float),
    "methods": ("conformal", _as_methods),
    "alpha": ("conformal", _as_float),
    "samples_p": ("conformal", _as_int),
    "reduction": ("conformal", _as_reduction),
    "clamp": ("conformal", _as_clamp),
    "n_samples": ("montecarlo", _as_int),
    "trials": ("montecarlo", _as_int),
    "cal_fraction": ("montecarlo", _as_float),
    "rounds": ("montecarlo", _as_optional_int_tuple),
    "p_sweep": ("montecarlo", _as_int_tuple),
    "sweep_round": ("montecarlo", _as_int),
    "workers": ("montecarlo", _as_int),
    "tau": ("multiround", _as_float),
    "group_size": ("multiround", _as_int),
    "per_trial": ("multiround", _as_bool),
    "repeats": ("multiround", _as_int),
    "out": ("output", str),
    "format": ("output", lambda raw: str(raw).strip().lower()),
    "dataset": ("output", _as_optional_str),
}


def setting_keys() -> Tuple[str, ...]:
    return tuple(_KEYS)


def env_name(key: str) -> str:
    return ENV_PREFIX + key.upper()


def _parse(key: str, raw: Any, layer: str) -> Any:
    _, parser = _KEYS[key]
    try:
        return parser(raw)
    except (TypeError, ValueError, MethodMismatchError) as exc:
        raise ConfigError(f"Invalid value for {key!r} from {layer}: {exc}") from exc


# ----------------------------------------------------------------------
# Layers
# ----------------------------------------------------------------------


def _validate_file(data: dict, schema_path: Path) -> None:
    try:
        schema = json.loads(schema_path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"Schema file {schema_path} is missing") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"Schema file {schema_path} is not valid JSON: {exc}"
        ) from exc

    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"Configuration validation error: {exc.message}") from exc


def read_config_file(
    config_path: Path, *, schema_path: Optional[Path] = None
) -> Dict[str, Any]:
    """Load and schema-validate a run configuration file into flat keys."""

    try:
        data = json.loads(config_path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"Config file {config_path} does not exist") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"Config file {config_path} is not valid JSON: {exc}"
        ) from exc

    _validate_file(data, schema_path or default_schema_path())
    flat: Dict[str, Any] = {}
    for section in _SECTIONS:
        for key, raw in (data.get(section) or {}).items():
            if key not in _KEYS or _KEYS[key][0] != section:
                raise ConfigError(f"Unknown setting {section}.{key} in {config_path}")
            flat[key] = _parse(key, raw, f"file {config_path.name}")
    _LOGGER.info("Loaded run configuration from %s", config_path)
    return flat


def read_environment(env: Mapping[str, str]) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key in _KEYS:
        name = env_name(key)
        if name in env and env[name].strip() != "":
            flat[key] = _parse(key, env[name], f"environment {name}")
    return flat


def read_overrides(overrides: Mapping[str, Any]) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, raw in overrides.items():
        if raw is None:
            continue
        if key not in _KEYS:
            raise ConfigError(f"Unknown setting {key!r}")
        flat[key] = _parse(key, raw, "command line")
    return flat


# ----------------------------------------------------------------------
# Resolution and range checks
# ----------------------------------------------------------------------


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _check_ranges(config: RunConfig) -> None:
    prob, conf, mc, mr, out = (
        config.problem,
        config.conformal,
        config.montecarlo,
        config.multiround,
        config.output,
    )
    try:
        prob.spec()
    except InvalidSpecError as exc:
        raise ConfigError(f"Invalid problem settings: {exc}") from exc
    n_rounds = len(prob.round_rows)
    _check(0.0 < conf.alpha < 1.0, f"alpha must lie in (0, 1), got {conf.alpha}")
    _check(conf.samples_p >= 1, f"samples_p must be >= 1, got {conf.samples_p}")
    _check(len(conf.methods) >= 1, "at least one method is required")
    if conf.clamp is not None:
        _check(conf.clamp[0] < conf.clamp[1], f"clamp range is inverted: {conf.clamp}")
    _check(mc.trials >= 1, f"trials must be >= 1, got {mc.trials}")
    _check(
        0.0 < mc.cal_fraction < 1.0,
        f"cal_fraction must lie in (0, 1), got {mc.cal_fraction}",
    )
    _check(mc.workers >= 1, f"workers must be >= 1, got {mc.workers}")
    _check(all(p >= 1 for p in mc.p_sweep), f"p_sweep values must be >= 1: {mc.p_sweep}")
    _check(
        1 <= mc.sweep_round <= n_rounds,
        f"sweep_round must lie in 1..{n_rounds}, got {mc.sweep_round}",
    )
    if mc.rounds is not None:
        _check(len(mc.rounds) >= 1, "rounds must not be empty")
        _check(
            all(1 <= k <= n_rounds for k in mc.rounds),
            f"rounds must lie in 1..{n_rounds}, got {list(mc.rounds)}",
        )
    _check(mr.tau > 0.0, f"tau must be positive, got {mr.tau}")
    _check(mr.group_size >= 1, f"group_size must be >= 1, got {mr.group_size}")
    _check(mr.repeats >= 1, f"repeats must be >= 1, got {mr.repeats}")
    _check(
        out.format in OUTPUT_FORMATS,
        f"format must be one of {', '.join(OUTPUT_FORMATS)}, got {out.format!r}",
    )


def resolve_config(
    *,
    config_path: Optional[Path] = None,
    env: Optional[Mapping[str, str]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    schema_path: Optional[Path] = None,
) -> RunConfig:
    """Merge the layers in precedence order and range-check the result."""

    file_values = (
        read_config_file(config_path, schema_path=schema_path) if config_path else {}
    )
    layers = [
        ("file", file_values),
        ("env", read_environment(os.environ if env is None else env)),
        ("flag", read_overrides(overrides or {})),
    ]
    merged: Dict[str, Dict[str, Any]] = {s: {} for s in _SECTIONS}
    sources: Dict[str, str] = {}
    for layer, values in layers:
        for key, value in values.items():
            merged[_KEYS[key][0]][key] = value
            sources[key] = layer

    sections = {}
    for section in _SECTIONS:
        cls = _SECTION_TYPES[section]
        known = {f.name for f in fields(cls)}
        values = {k: v for k, v in merged[section].items() if k in known}
        sections[section] = cls(**values)
    config = RunConfig(**sections, sources=sources)
    _check_ranges(config)
    _LOGGER.debug("Resolved configuration: %s", config.to_dict())
    return config


__all__ = [
    "ConfigError",
    "ConformalSettings",
    "ENV_PREFIX",
    "MonteCarloSettings",
    "MultiRoundSettings",
    "OUTPUT_FORMATS",
    "OutputSettings",
    "ProblemSettings",
    "RunConfig",
    "SCHEMA_VERSION",
    "default_schema_path",
    "env_name",
    "load_dotenv",
    "read_config_file",
    "read_environment",
    "read_overrides",
    "resolve_config",
    "setting_keys",
]
