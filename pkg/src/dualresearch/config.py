"""Flat YAML configuration shared by the CLI, the research loop and the harness.

Key names follow the original gin parameter names where one exists
(num_searches, max_outline_generator_turns, min_query_per_blueprint,
min_query_len, max_query_len, fixed_sample_size).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .errors import ConfigError, PreconditionError
from .providers.base import SourceEngine
from .research_loop import LoopConfig

PROVIDERS = ("mock", "http")


@dataclass(frozen=True)
class Settings:
    # research loop
    exit_threshold: float = 8.0
    min_rounds: int = 2
    max_outline_generator_turns: int = 3
    num_searches: int = 10
    filter_threshold: float = 0.2
    max_workers: int = 8
    # critic
    search_engine: str = SourceEngine.GENERIC_WEB.value
    max_blueprints_len: int = 10
    max_query_len: int = 5
    min_query_per_blueprint: int = 1  # lint only
    min_query_len: int = 2  # lint only: minimum words per search query
    # generator lint targets
    min_sections: int = 7
    max_sections: int = 10
    citation_target: int = 100
    # writer
    writer_context_budget: int = 12_000
    # providers
    provider: str = "mock"
    mock_dir: Optional[str] = None
    model: str = "default"
    planner_model: Optional[str] = None
    critic_model: Optional[str] = None
    generator_model: Optional[str] = None
    writer_model: Optional[str] = None
    judge_model: Optional[str] = None
    max_in_flight: int = 8
    request_timeout: float = 120.0
    # harness
    fixed_sample_size: int = 10
    sample_seed: int = 0
    harness_rounds: int = 20
    mutation_cmd: Optional[str] = None
    benchmark: Optional[str] = None
    memory_feedback: bool = True
    # output
    out: str = "out"

    def __post_init__(self):
        if self.provider not in PROVIDERS:
            raise ConfigError(f"provider must be one of {PROVIDERS}, got {self.provider!r}")
        try:
            SourceEngine(self.search_engine)
            self.loop_config()
        except (ValueError, PreconditionError) as exc:
            raise ConfigError(str(exc)) from exc
        for name in ("max_blueprints_len", "max_query_len", "fixed_sample_size", "max_in_flight"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.harness_rounds < 0:
            raise ConfigError("harness_rounds must be non-negative")

    def loop_config(self, **overrides) -> LoopConfig:
        base = dict(
            exit_threshold=self.exit_threshold,
            min_rounds=self.min_rounds,
            max_rounds=self.max_outline_generator_turns,
            num_searches=self.num_searches,
            filter_threshold=self.filter_threshold,
            max_workers=self.max_workers,
            use_feedback=self.memory_feedback,
        )
        base.update(overrides)
        return LoopConfig(**base)

    def model_for(self, role: str) -> str:
        return getattr(self, f"{role}_model") or self.model

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def with_overrides(self, overrides: dict[str, Any]) -> "Settings":
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return replace(self, **overrides)


def load_settings(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> Settings:
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    try:
        settings = Settings().with_overrides(data)
        return settings.with_overrides({k: v for k, v in (overrides or {}).items() if v is not None})
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def dump_settings(settings: Settings) -> str:
    return yaml.safe_dump(settings.to_dict(), sort_keys=True)
