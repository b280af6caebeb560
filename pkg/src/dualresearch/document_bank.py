"""Cross-round store of retrieved documents.

Every search result gets a round-scoped id `turn_{round}_{k}`, a relevance
score in [0, 1], a summary and optional evidence triples. Documents scoring
below the filter threshold are archived: kept for statistics, hidden from
the generator.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .core_state import Blueprint, Outline, extract_citations, make_doc_id, serialize_outline
from .errors import ParseFailure, PersistenceFailure, PreconditionError, ProviderError, UnknownId
from .metrics import SNIPPET_CHARS, QueryDocStats
from .providers.base import LLMProvider, SearchResult
from .providers.structured import complete_structured, parse_json_object
from .templates import PromptLibrary, default_library

logger = logging.getLogger(__name__)

DEFAULT_FILTER_THRESHOLD = 0.2


@dataclass(frozen=True)
class DocumentRecord:
    id: str
    round_introduced: int
    index_in_round: int
    url: str
    title: str
    raw_content: str
    summary: str
    snippet: str
    evidence: tuple[tuple[str, str, str], ...]
    judge_score: float
    source_query: str
    archived: bool = False
    carried_from: Optional[str] = None
    skipped: bool = False

    def __post_init__(self):
        if not 0.0 <= self.judge_score <= 1.0:
            raise PreconditionError(f"judge_score {self.judge_score} outside [0, 1]")
        if len(self.snippet) > SNIPPET_CHARS or not self.summary.startswith(self.snippet):
            raise PreconditionError("snippet must be a prefix of summary of at most 50 chars")
        object.__setattr__(self, "evidence", tuple(tuple(t) for t in self.evidence))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["evidence"] = [list(t) for t in self.evidence]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DocumentRecord":
        d = dict(d)
        d["evidence"] = tuple(tuple(t) for t in d.get("evidence", ()))
        return cls(**d)


@dataclass(frozen=True)
class ScoringContext:
    """What a document is judged against: folded query, key points, outline."""

    query_text: str
    blueprints: tuple[Blueprint, ...] = ()
    outline: Outline = None


@dataclass(frozen=True)
class ScoredDocument:
    score: float
    summary: str
    evidence: tuple[tuple[str, str, str], ...] = ()


def _clean_evidence(raw) -> tuple[tuple[str, str, str], ...]:
    out = []
    for item in raw or ():
        if isinstance(item, dict):
            item = (item.get("subject"), item.get("relation"), item.get("object"))
        if isinstance(item, (list, tuple)) and len(item) == 3 and all(isinstance(x, str) and x for x in item):
            out.append(tuple(item))
    return tuple(out)


def parse_scored(raw: str) -> ScoredDocument:
    obj = parse_json_object(raw)
    score = float(obj["score"])
    if score != score:
        raise ValueError("score is NaN")
    if not 0.0 <= score <= 1.0:
        logger.warning("document score %s clamped to [0, 1]", score)
        score = min(1.0, max(0.0, score))
    summary = " ".join(str(obj.get("summary") or "").split())
    return ScoredDocument(score, summary, _clean_evidence(obj.get("evidence")))


class DocumentScorer:
    """Relevance scoring, summarisation and evidence extraction in one call."""

    def __init__(self, provider: LLMProvider, library: PromptLibrary | None = None):
        self.provider = provider
        self.library = library or default_library()

    def score(self, context: ScoringContext, search_query: str, result: SearchResult) -> ScoredDocument:
        variables = {
            "query": context.query_text,
            "search_query": search_query,
            "blueprints": [b.to_dict() for b in context.blueprints],
            "outline": serialize_outline(context.outline),
            "title": result.title,
            "url": result.url,
            "content": result.content,
        }
        return complete_structured(
            self.provider, self.library.request("doc_score", variables), parse_scored
        )


@dataclass
class DocumentBank:
    records: dict[str, DocumentRecord] = field(default_factory=dict)
    per_query: dict[str, list[str]] = field(default_factory=dict)
    filter_threshold: float = DEFAULT_FILTER_THRESHOLD

    def __post_init__(self):
        if not 0.0 <= self.filter_threshold <= 1.0:
            raise PreconditionError("filter_threshold must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.records

    def get(self, doc_id: str) -> DocumentRecord:
        try:
            return self.records[doc_id]
        except KeyError:
            raise UnknownId(f"unknown document id {doc_id!r}") from None

    @property
    def max_round(self) -> int:
        return max((r.round_introduced for r in self.records.values()), default=-1)

    def round_ids(self, round_: int) -> list[str]:
        return [i for i, r in self.records.items() if r.round_introduced == round_]

    def next_index(self, round_: int) -> int:
        return max((r.index_in_round + 1 for r in self.records.values()
                    if r.round_introduced == round_), default=0)

    def add(self, record: DocumentRecord) -> None:
        if record.id in self.records:
            raise PreconditionError(f"duplicate document id {record.id}")
        self.records[record.id] = record

    def register_query(self, query: str) -> None:
        self.per_query.setdefault(query, [])

    # -- views ---------------------------------------------------------------

    def superseded(self) -> set[str]:
        return {r.carried_from for r in self.records.values() if r.carried_from}

    def visible(self) -> list[DocumentRecord]:
        """Generator view: unarchived records, each document once under its newest id."""
        old = self.superseded()
        return [r for r in self.records.values() if not r.archived and r.id not in old]

    def visible_ids(self) -> set[str]:
        return {r.id for r in self.visible()}

    def archived(self) -> list[DocumentRecord]:
        return [r for r in self.records.values() if r.archived]

    def latest_id(self, doc_id: str) -> str:
        """Follow carry-over copies forward to the newest id of a document."""
        forward = {r.carried_from: r.id for r in self.records.values() if r.carried_from}
        while doc_id in forward:
            doc_id = forward[doc_id]
        return doc_id

    def citation_map(self, ids: Iterable[str]) -> dict[str, str]:
        return {i: self.get(i).url for i in ids}

    def query_scores(self, query: str) -> list[DocumentRecord]:
        return [self.records[i] for i in self.per_query.get(query, ()) if not self.records[i].skipped]

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """One line per record. Queries that returned nothing are not persisted."""
        try:
            with open(path, "w", encoding="utf-8") as fh:
                for rec in self.records.values():
                    fh.write(json.dumps(rec.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
        except OSError as exc:
            raise PersistenceFailure(f"cannot write document bank to {path}: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path, filter_threshold: float = DEFAULT_FILTER_THRESHOLD) -> "DocumentBank":
        bank = cls(filter_threshold=filter_threshold)
        try:
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        bank.add(DocumentRecord.from_dict(json.loads(line)))
        except OSError as exc:
            raise PersistenceFailure(f"cannot read document bank {path}: {exc}") from exc
        for rec in bank.records.values():
            if rec.carried_from is None:
                bank.per_query.setdefault(rec.source_query, []).append(rec.id)
        return bank


def _make_record(doc_id, round_, k, query, result, scored: ScoredDocument | None,
                 threshold) -> DocumentRecord:
    if scored is None:
        return DocumentRecord(doc_id, round_, k, result.url, result.title, result.content,
                              "", "", (), 0.0, query, archived=True, skipped=True)
    summary = scored.summary or " ".join(result.title.split())
    return DocumentRecord(
        doc_id, round_, k, result.url, result.title, result.content,
        summary, summary[:SNIPPET_CHARS], scored.evidence, scored.score, query,
        archived=scored.score < threshold,
    )


def ingest_and_score(
    bank: DocumentBank,
    round_: int,
    results: Sequence[tuple[str, SearchResult]],
    context: ScoringContext,
    scorer: DocumentScorer,
    max_workers: int = 8,
) -> DocumentBank:
    """Score `results` concurrently and append them to the bank in arrival order."""
    if round_ < bank.max_round:
        raise PreconditionError(f"round {round_} precedes bank round {bank.max_round}")
    if not results:
        return bank

    def work(item):
        query, result = item
        try:
            return scorer.score(context, query, result)
        except (ProviderError, ParseFailure) as exc:
            logger.warning("scoring failed for %s (query %r): %s; record skipped", result.url, query, exc)
            return None

    with ThreadPoolExecutor(max_workers=max(1, min(max_workers, len(results)))) as pool:
        scored = list(pool.map(work, results))

    start = bank.next_index(round_)
    for offset, ((query, result), s) in enumerate(zip(results, scored)):
        k = start + offset
        rec = _make_record(make_doc_id(round_, k), round_, k, query, result, s, bank.filter_threshold)
        bank.add(rec)
        bank.per_query.setdefault(query, []).append(rec.id)
    return bank


def reindex_for_round(bank: DocumentBank, kept_ids: Iterable[str], new_round: int
                      ) -> tuple[DocumentBank, dict[str, str]]:
    """Carry `kept_ids` into `new_round` under fresh ids.

    The originals stay in place so outlines from earlier rounds still
    resolve; each copy records where it came from and keeps its score.
    """
    kept = set(kept_ids)
    missing = sorted(i for i in kept if i not in bank.records)
    if missing:
        raise UnknownId(f"cannot carry unknown ids: {missing}")
    if not kept:
        return bank, {}
    if new_round < bank.max_round:
        raise PreconditionError(f"new round {new_round} precedes bank round {bank.max_round}")
    start = bank.next_index(new_round)
    remap: dict[str, str] = {}
    ordered = [i for i in bank.records if i in kept]
    for offset, old_id in enumerate(ordered):
        old = bank.records[old_id]
        k = start + offset
        new = DocumentRecord(
            make_doc_id(new_round, k), new_round, k, old.url, old.title, old.raw_content,
            old.summary, old.snippet, old.evidence, old.judge_score, old.source_query,
            archived=old.archived, carried_from=old_id,
        )
        bank.add(new)
        remap[old_id] = new.id
    return bank, remap


def citation_rate(outline: Outline, bank: DocumentBank, round_: int) -> float:
    ids = set(bank.round_ids(round_))
    if not ids:
        return 0.0
    return len(set(extract_citations(outline)) & ids) / len(ids)


def query_doc_stats(bank: DocumentBank, queries: Iterable[str] | None = None) -> list[QueryDocStats]:
    """Per-query relevance statistics, one entry per search query.

    Skipped records (scoring failed) carry no score and are left out.
    """
    names = list(bank.per_query) if queries is None else list(dict.fromkeys(queries))
    out = []
    for q in names:
        recs = bank.query_scores(q)
        out.append(QueryDocStats(q, tuple(r.judge_score for r in recs),
                                 tuple(r.snippet for r in recs if r.snippet)))
    return out
