import json
import random
from datetime import datetime, timedelta, timezone

import pytest

from dualresearch.bm25 import tokenize
from dualresearch.core_state import Blueprint, CriticState
from dualresearch.errors import PersistenceFailure
from dualresearch.metrics import HarnessScore, QueryDocStats
from dualresearch.policy_bank import (
    PolicyBank, RetrievalMode, TraceRecord, format_feedback, latest_query_stats, trace_tokens,
)

from oracles import bm25_scores, top_k

HIGH = QueryDocStats("XX brand review", (0.9,) * 7 + (0.6, 0.1, 0.2))
LOW = QueryDocStats("how is XX", (0.6,) + (0.1,) * 9)


def clock():
    t = datetime(2026, 1, 1, tzinfo=timezone.utc)
    while True:
        yield t
        t += timedelta(seconds=1)


def fixed_clock():
    gen = clock()
    return lambda: next(gen)


def trace(query="q", round_=1, stats=(), queries=("s",), scores=None):
    cs = CriticState(round_, (Blueprint("b1", "c", tuple(queries)),) if queries else ())
    return TraceRecord(query, round_, cs, per_query_doc_stats=tuple(stats), criterion_scores=scores)


def test_record_appends_and_reloads(tmp_path):
    bank = PolicyBank(tmp_path, clock=fixed_clock())
    rec = trace(stats=[HIGH])
    bank.record_trace(rec)
    files = list(tmp_path.glob("traces_*.jsonl"))
    assert len(files) == 1
    loaded = PolicyBank.load(tmp_path)
    assert len(loaded) == 1
    assert loaded.records[0].trace_id == rec.trace_id
    assert loaded.records[0].per_query_doc_stats == (HIGH,)


def test_hundred_appends_give_hundred_lines(tmp_path):
    bank = PolicyBank(tmp_path, clock=fixed_clock())
    for i in range(100):
        bank.record_trace(trace(query=f"q{i}"))
    lines = next(tmp_path.glob("traces_*.jsonl")).read_text().splitlines()
    assert len(lines) == 100
    assert [r.query_text for r in PolicyBank.load(tmp_path).records] == [f"q{i}" for i in range(100)]


def test_backfill_survives_reload(tmp_path):
    bank = PolicyBank(tmp_path, clock=fixed_clock())
    rec = trace()
    bank.record_trace(rec)
    score = HarnessScore.from_scores(5, 6, 7, 6)
    bank.backfill_scores(rec.trace_id, score)
    assert PolicyBank.load(tmp_path).records[0].criterion_scores == score
    with pytest.raises(KeyError):
        bank.backfill_scores("missing", score)


def test_corrupt_line_raises(tmp_path):
    (tmp_path / "traces_20260101_000000.jsonl").write_text("{not json\n")
    with pytest.raises(PersistenceFailure):
        PolicyBank.load(tmp_path)


def test_load_missing_dir_is_empty(tmp_path):
    assert len(PolicyBank.load(tmp_path / "nope")) == 0


def test_in_memory_bank_writes_nothing(tmp_path):
    bank = PolicyBank()
    bank.record_trace(trace())
    assert len(bank) == 1


def test_exact_and_retrieve_order():
    bank = PolicyBank(clock=fixed_clock())
    for i in range(3):
        bank.record_trace(trace(query="same", round_=i + 1))
    bank.record_trace(trace(query="other"))
    assert [r.round for r in bank.exact(" same ")] == [1, 2, 3]
    assert [r.round for r in bank.retrieve("same", RetrievalMode.EXACT, top_k=2)] == [3, 2]


def test_bm25_empty_and_singleton():
    bank = PolicyBank()
    assert bank.bm25_rank("anything", 5) == []
    bank.record_trace(trace(query="elderly housing"))
    assert len(bank.bm25_rank("housing", 5)) == 1
    assert bank.bm25_rank("unrelated", 5) == []
    with pytest.raises(ValueError):
        bank.bm25_rank("x", 0)


def test_bm25_matches_oracle():
    rng = random.Random(5)
    vocab = [f"t{i}" for i in range(40)]
    bank = PolicyBank(clock=fixed_clock())
    for i in range(80):
        stats = [QueryDocStats(" ".join(rng.sample(vocab, 2)), (0.5,))]
        bank.record_trace(trace(query=" ".join(rng.sample(vocab, 3)), stats=stats))
    docs = [trace_tokens(r) for r in bank.records]
    for _ in range(20):
        q = " ".join(rng.sample(vocab, 2))
        want = top_k(bm25_scores(docs, tokenize(q)), 10)
        got = [r.trace_id for r in bank.bm25_rank(q, 10)]
        assert got == [bank.records[i].trace_id for i in want]


def test_feedback_groups_and_lines():
    text = format_feedback([trace(stats=[HIGH, LOW])])
    assert '- "XX brand review": avg_relevance=0.72, 8/10 documents relevant' in text
    assert '- "how is XX": avg_relevance=0.15, 1/10 documents relevant' in text
    assert text.index("High-effectiveness") < text.index("Low-effectiveness")


def test_feedback_threshold_is_inclusive():
    half = QueryDocStats("half", (0.9, 0.1))
    assert "High-effectiveness queries (1" in format_feedback([trace(stats=[half])])


def test_feedback_lists_five_newest_of_twelve():
    records = [trace(round_=i + 1, stats=[QueryDocStats(f"q{i}", (0.9,))]) for i in range(12)]
    text = format_feedback(records)
    lines = [l for l in text.splitlines() if l.startswith("- ")]
    assert "(12," in text
    assert [l.split('"')[1] for l in lines] == ["q11", "q10", "q9", "q8", "q7"]


def test_latest_stats_win():
    old = trace(round_=1, stats=[QueryDocStats("a", (0.1,))])
    new = trace(round_=2, stats=[QueryDocStats("a", (0.9,))])
    assert latest_query_stats([old, new]) == [QueryDocStats("a", (0.9,))]


def test_fallback_uses_score_gap():
    strong = trace(round_=1, queries=("good query",), scores=HarnessScore.from_scores(8, 8, 8, 8))
    weak = trace(round_=2, queries=("bad query",), scores=HarnessScore.from_scores(6, 6, 7.0, 6))
    close = trace(round_=3, queries=("near query",), scores=HarnessScore.from_scores(6, 6, 7.5, 6))
    text = format_feedback([strong, weak, close])
    assert '"bad query"' in text
    assert "near query" not in text and "good query" not in text


def test_fallback_empty_without_scores():
    assert format_feedback([trace()]) == ""
    assert format_feedback([]) == ""


def test_query_feedback_uses_exact_match():
    bank = PolicyBank()
    bank.record_trace(trace(query="target", stats=[HIGH]))
    bank.record_trace(trace(query="other", stats=[LOW]))
    text = bank.query_feedback("target")
    assert "XX brand review" in text and "how is XX" not in text


def test_trace_line_format(tmp_path):
    bank = PolicyBank(tmp_path, clock=fixed_clock())
    bank.record_trace(trace(stats=[HIGH]))
    entry = json.loads(next(tmp_path.glob("traces_*.jsonl")).read_text())
    record = entry["record"]
    assert entry["type"] == "trace"
    assert record["per_query_doc_stats"][0]["high_relevance_ratio"] == pytest.approx(0.8)
    assert record["timestamp"].startswith("2026-01-01")
