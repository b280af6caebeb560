from .base import (
    CompletionRequest,
    LLMProvider,
    SearchProvider,
    SearchResult,
    SourceEngine,
    prompt_hash,
)
from .heuristic import HeuristicLLM
from .live import HTTPChatProvider, HTTPSearchProvider
from .mock import CannedProvider, FixtureSearch, ScriptedProvider, SequenceProvider
from .structured import complete_structured, parse_json_array, parse_json_object, strip_code_fences

__all__ = [
    "CannedProvider",
    "CompletionRequest",
    "FixtureSearch",
    "HTTPChatProvider",
    "HeuristicLLM",
    "HTTPSearchProvider",
    "LLMProvider",
    "ScriptedProvider",
    "SearchProvider",
    "SearchResult",
    "SequenceProvider",
    "SourceEngine",
    "complete_structured",
    "parse_json_array",
    "parse_json_object",
    "prompt_hash",
    "strip_code_fences",
]
