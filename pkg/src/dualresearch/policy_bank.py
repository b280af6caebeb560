"""Append-only memory of optimisation traces with BM25 and exact-match retrieval.

Traces live in `traces_{timestamp}.jsonl` files inside a memory directory.
Each line is either a full trace or a score update for an earlier trace;
loading replays the files in name order.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional

from .bm25 import BM25Index, tokenize
from .core_state import CriticState, GeneratorState
from .errors import PersistenceFailure
from .metrics import HarnessScore, QueryDocStats, unique_by_query

logger = logging.getLogger(__name__)

HIGH_RATIO_THRESHOLD = 0.5
FEEDBACK_GROUP_LIMIT = 5
FALLBACK_SCORE_GAP = 1.0

Clock = Callable[[], datetime]


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class TraceRecord:
    query_text: str
    round: int
    critic_state: CriticState
    generator_state: Optional[GeneratorState] = None
    per_query_doc_stats: tuple[QueryDocStats, ...] = ()
    criterion_scores: Optional[HarnessScore] = None
    timestamp: str = ""
    trace_id: str = field(default_factory=lambda: uuid.uuid4().hex)

    def __post_init__(self):
        object.__setattr__(self, "per_query_doc_stats", unique_by_query(self.per_query_doc_stats))

    @property
    def search_queries(self) -> tuple[str, ...]:
        return self.critic_state.queries

    def to_dict(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "query_text": self.query_text,
            "round": self.round,
            "timestamp": self.timestamp,
            "critic_state": self.critic_state.to_dict(),
            "generator_state": self.generator_state.to_dict() if self.generator_state else None,
            "per_query_doc_stats": [s.to_dict() for s in self.per_query_doc_stats],
            "criterion_scores": self.criterion_scores.to_dict() if self.criterion_scores else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TraceRecord":
        gen = d.get("generator_state")
        scores = d.get("criterion_scores")
        return cls(
            query_text=d["query_text"],
            round=d["round"],
            critic_state=CriticState.from_dict(d["critic_state"]),
            generator_state=GeneratorState.from_dict(gen) if gen else None,
            per_query_doc_stats=tuple(QueryDocStats.from_dict(s) for s in d.get("per_query_doc_stats", ())),
            criterion_scores=HarnessScore.from_dict(scores) if scores else None,
            timestamp=d.get("timestamp", ""),
            trace_id=d["trace_id"],
        )


class RetrievalMode(str, Enum):
    EXACT = "exact"
    BM25 = "bm25"


def trace_tokens(record: TraceRecord) -> list[str]:
    text = " ".join((record.query_text, *(s.query_text for s in record.per_query_doc_stats)))
    return tokenize(text)


class PolicyBank:
    def __init__(self, memory_dir: str | Path | None = None, clock: Clock = utc_now):
        self.memory_dir = Path(memory_dir) if memory_dir is not None else None
        self.clock = clock
        self._records: list[TraceRecord] = []
        self._lock = threading.Lock()
        self._index: BM25Index | None = None
        self._file: Path | None = None

    # -- persistence ---------------------------------------------------------

    @classmethod
    def load(cls, memory_dir: str | Path, clock: Clock = utc_now) -> "PolicyBank":
        bank = cls(memory_dir, clock)
        if not bank.memory_dir.exists():
            return bank
        by_id: dict[str, int] = {}
        for path in sorted(bank.memory_dir.glob("traces_*.jsonl")):
            try:
                lines = path.read_text(encoding="utf-8").splitlines()
            except OSError as exc:
                raise PersistenceFailure(f"cannot read {path}: {exc}") from exc
            for n, line in enumerate(lines, 1):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                    if entry.get("type") == "score_update":
                        i = by_id[entry["trace_id"]]
                        bank._records[i] = replace(
                            bank._records[i],
                            criterion_scores=HarnessScore.from_dict(entry["criterion_scores"]),
                        )
                    else:
                        rec = TraceRecord.from_dict(entry["record"])
                        by_id[rec.trace_id] = len(bank._records)
                        bank._records.append(rec)
                except (KeyError, ValueError, TypeError) as exc:
                    raise PersistenceFailure(f"{path}:{n}: bad trace line: {exc}") from exc
        return bank

    def new_session(self) -> Path | None:
        """Start a new traces file; later appends go there."""
        if self.memory_dir is None:
            return None
        stamp = self.clock().strftime("%Y%m%d_%H%M%S")
        path = self.memory_dir / f"traces_{stamp}.jsonl"
        n = 0
        while path.exists():
            n += 1
            path = self.memory_dir / f"traces_{stamp}_{n:03d}.jsonl"
        self._file = path
        return path

    def _append_line(self, entry: dict) -> None:
        if self.memory_dir is None:
            return
        try:
            self.memory_dir.mkdir(parents=True, exist_ok=True)
            if self._file is None:
                self.new_session()
            with open(self._file, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")
        except OSError as exc:
            raise PersistenceFailure(f"cannot append to trace memory: {exc}") from exc

    # -- write-back ----------------------------------------------------------

    def record_trace(self, record: TraceRecord) -> "PolicyBank":
        with self._lock:
            if not record.timestamp:
                record = replace(record, timestamp=self.clock().isoformat())
            self._append_line({"type": "trace", "record": record.to_dict()})
            self._records.append(record)
            self._index = None
        return self

    def backfill_scores(self, trace_id: str, scores: HarnessScore) -> TraceRecord:
        with self._lock:
            for i, rec in enumerate(self._records):
                if rec.trace_id == trace_id:
                    break
            else:
                raise KeyError(trace_id)
            self._append_line({"type": "score_update", "trace_id": trace_id,
                               "criterion_scores": scores.to_dict()})
            self._records[i] = replace(rec, criterion_scores=scores)
            return self._records[i]

    # -- read ----------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> tuple[TraceRecord, ...]:
        return tuple(self._records)

    def _bm25(self) -> tuple[BM25Index, tuple[TraceRecord, ...]]:
        with self._lock:
            records = tuple(self._records)
            if self._index is None or self._index.n != len(records):
                self._index = BM25Index([trace_tokens(r) for r in records])
            return self._index, records

    def bm25_rank(self, query_text: str, top_k: int) -> list[TraceRecord]:
        """Records with a positive BM25 score, best first; ties go to the newest."""
        if top_k < 1:
            raise ValueError("top_k must be >= 1")
        index, records = self._bm25()
        if not records:
            return []
        scores = index.scores(tokenize(query_text))
        order = sorted((i for i, s in enumerate(scores) if s > 0), key=lambda i: (-scores[i], -i))
        return [records[i] for i in order[:top_k]]

    def exact(self, query_text: str) -> list[TraceRecord]:
        key = query_text.strip()
        return [r for r in self._records if r.query_text.strip() == key]

    def retrieve(self, query_text: str, mode: RetrievalMode = RetrievalMode.EXACT,
                 top_k: int = 10) -> list[TraceRecord]:
        if RetrievalMode(mode) is RetrievalMode.BM25:
            return self.bm25_rank(query_text, top_k)
        return self.exact(query_text)[::-1][:top_k]

    def query_feedback(self, query_text: str, current_best_score: Optional[float] = None) -> str:
        return format_feedback(self.exact(query_text), current_best_score)


def latest_query_stats(records: Iterable[TraceRecord]) -> list[QueryDocStats]:
    """Most recent stats per search query, newest first.

    `records` must be in chronological order.
    """
    latest: dict[str, tuple[int, int, QueryDocStats]] = {}
    for ri, rec in enumerate(records):
        for si, stats in enumerate(rec.per_query_doc_stats):
            latest[stats.query_text] = (ri, si, stats)
    ordered = sorted(latest.values(), key=lambda t: (-t[0], t[1]))
    return [s for _, _, s in ordered]


def _stat_line(s: QueryDocStats) -> str:
    return (f'- "{s.query_text}": avg_relevance={s.avg_relevance:.2f}, '
            f"{s.relevant_count}/{s.doc_count} documents relevant")


def format_feedback(records: list[TraceRecord], current_best_score: Optional[float] = None,
                    limit: int = FEEDBACK_GROUP_LIMIT) -> str:
    if not records:
        return ""
    stats = latest_query_stats(records)
    if stats:
        high = [s for s in stats if s.high_relevance_ratio >= HIGH_RATIO_THRESHOLD]
        low = [s for s in stats if s.high_relevance_ratio < HIGH_RATIO_THRESHOLD]
        blocks = []
        if high:
            blocks.append("\n".join(
                [f"## High-effectiveness queries ({len(high)}, returned documents highly relevant)"]
                + [_stat_line(s) for s in high[:limit]]))
        if low:
            blocks.append("\n".join(
                [f"## Low-effectiveness queries ({len(low)}, please avoid similar queries)"]
                + [_stat_line(s) for s in low[:limit]]))
        return "\n\n".join(blocks)
    return _fallback_feedback(records, current_best_score, limit)


def _record_score(rec: TraceRecord) -> Optional[float]:
    if rec.criterion_scores is None:
        return None
    return rec.criterion_scores.search_coverage.score


def _fallback_feedback(records, current_best_score, limit) -> str:
    scored = [(r, _record_score(r)) for r in records if _record_score(r) is not None]
    if not scored:
        return ""
    best = current_best_score if current_best_score is not None else max(s for _, s in scored)
    weak = [(r, s) for r, s in scored if best - s >= FALLBACK_SCORE_GAP and r.search_queries]
    if not weak:
        return ""
    weak = weak[::-1][:limit]
    lines = [f"## Queries from low-scoring rounds ({len(weak)}, please avoid similar queries)"]
    for rec, s in weak:
        quoted = ", ".join(f'"{q}"' for q in rec.search_queries)
        lines.append(f"- round {rec.round} (search_coverage={s:.1f}): {quoted}")
    return "\n".join(lines)
