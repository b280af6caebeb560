"""Deterministic providers for tests and offline runs."""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from ..core_state import normalize_query
from ..errors import ProviderUnavailable
from .base import CompletionRequest, SearchResult, SourceEngine, check_search_args

DOCUMENTS_FILE = "documents.jsonl"
QUERY_MAP_FILE = "queries.jsonl"
CANNED_FILE = "llm_responses.jsonl"

_STOPWORDS = frozenset(
    "a an and are as at be by for from how in is it of on or the to what which who why with "
    "will their there they this that these those across such as vs".split()
)


def content_tokens(text: str) -> list[str]:
    return [t for t in re.findall(r"\w+", text.lower()) if t not in _STOPWORDS]


def read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


class CannedProvider:
    """Returns the stored response for a request's prompt hash."""

    def __init__(self, responses: dict[str, str], fallback=None):
        self.responses = dict(responses)
        self.fallback = fallback

    @classmethod
    def from_file(cls, path: str | Path, fallback=None) -> "CannedProvider":
        rows = read_jsonl(Path(path))
        return cls({r["prompt_sha256"]: r["response"] for r in rows}, fallback)

    def complete(self, request: CompletionRequest) -> str:
        try:
            return self.responses[request.prompt_hash]
        except KeyError:
            if self.fallback is not None:
                return self.fallback.complete(request)
            raise ProviderUnavailable(f"no canned response for prompt {request.prompt_hash[:12]}")


class ScriptedProvider:
    """Wraps a function of the request; records every request it sees."""

    def __init__(self, fn: Callable[[CompletionRequest], str]):
        self.fn = fn
        self.requests: list[CompletionRequest] = []
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.requests.append(request)
        return self.fn(request)


class SequenceProvider:
    """Hands out responses in order; the last one repeats once exhausted."""

    def __init__(self, responses: Iterable[str]):
        self.responses = list(responses)
        if not self.responses:
            raise ValueError("SequenceProvider needs at least one response")
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            i = min(self.calls, len(self.responses) - 1)
            self.calls += 1
        return self.responses[i]


@dataclass(frozen=True)
class FixtureDocument:
    id: str
    url: str
    title: str
    content: str
    tags: tuple[str, ...] = ()

    def as_result(self) -> SearchResult:
        return SearchResult(self.url, self.title, self.content, SourceEngine.MOCK)


@dataclass
class FixtureSearch:
    """Search over a fixture corpus.

    Queries listed in the mapping return exactly their scripted documents in
    mapping order. Anything else falls back to content-token overlap, ranked
    by overlap count then corpus order.
    """

    documents: list[FixtureDocument]
    mapping: dict[str, list[str]] = field(default_factory=dict)
    failing_queries: frozenset[str] = frozenset()

    def __post_init__(self):
        self._by_id = {d.id: d for d in self.documents}
        self._tokens = [
            set(content_tokens(" ".join((d.title, d.content, " ".join(d.tags)))))
            for d in self.documents
        ]
        self.mapping = {normalize_query(q): list(ids) for q, ids in self.mapping.items()}

    @classmethod
    def from_dir(cls, path: str | Path) -> "FixtureSearch":
        path = Path(path)
        docs = [
            FixtureDocument(r["id"], r["url"], r["title"], r["content"], tuple(r.get("tags", ())))
            for r in read_jsonl(path / DOCUMENTS_FILE)
        ]
        mapping = {}
        if (path / QUERY_MAP_FILE).exists():
            mapping = {r["query"]: r["doc_ids"] for r in read_jsonl(path / QUERY_MAP_FILE)}
        return cls(docs, mapping)

    def document(self, doc_id: str) -> FixtureDocument:
        return self._by_id[doc_id]

    def search(self, query: str, k: int) -> list[SearchResult]:
        check_search_args(query, k)
        key = normalize_query(query)
        if key in self.failing_queries:
            raise ProviderUnavailable(f"scripted failure for {query!r}")
        if key in self.mapping:
            return [self._by_id[i].as_result() for i in self.mapping[key][:k]]
        wanted = set(content_tokens(query))
        if not wanted:
            return []
        scored = [
            (len(wanted & toks), i) for i, toks in enumerate(self._tokens) if wanted & toks
        ]
        scored.sort(key=lambda p: (-p[0], p[1]))
        return [self.documents[i].as_result() for _, i in scored[:k]]
