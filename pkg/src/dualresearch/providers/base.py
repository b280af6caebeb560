"""Request/response types and the two provider protocols."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Protocol, runtime_checkable

from ..errors import PreconditionError


@dataclass(frozen=True)
class CompletionRequest:
    system_prompt: str
    user_prompt: str
    temperature: float = 0.0
    max_output_tokens: int = 4096
    # `task` and `payload` never reach a live backend; mocks dispatch on them.
    task: str = ""
    payload: dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not self.system_prompt.strip() or not self.user_prompt.strip():
            raise PreconditionError("completion prompts must be non-empty")
        if self.temperature < 0:
            raise PreconditionError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise PreconditionError("max_output_tokens must be positive")

    @property
    def prompt_hash(self) -> str:
        return prompt_hash(self.system_prompt, self.user_prompt)


def prompt_hash(system_prompt: str, user_prompt: str) -> str:
    h = hashlib.sha256()
    h.update(system_prompt.encode("utf-8"))
    h.update(b"\n\x00\n")
    h.update(user_prompt.encode("utf-8"))
    return h.hexdigest()


class SourceEngine(str, Enum):
    GENERIC_WEB = "generic_web"
    REDNOTE = "rednote"
    MOCK = "mock"


@dataclass(frozen=True)
class SearchResult:
    url: str
    title: str
    content: str
    source_engine: SourceEngine = SourceEngine.MOCK

    def __post_init__(self):
        if not self.url:
            raise PreconditionError("search result url must be non-empty")


@runtime_checkable
class LLMProvider(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


@runtime_checkable
class SearchProvider(Protocol):
    def search(self, query: str, k: int) -> list[SearchResult]: ...


def check_search_args(query: str, k: int) -> None:
    if not query or not query.strip():
        raise PreconditionError("search query must be non-empty")
    if k < 1:
        raise PreconditionError("k must be a positive integer")
