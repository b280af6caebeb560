import json
import random

import pytest

from dualresearch.errors import LengthViolation, PreconditionError, UnknownCategory
from dualresearch.evaluator import (
    EVAL_DIMENSIONS, TOPIC_LABELS, DimensionWeights, Evaluator, PairwiseScore, format_table,
    load_benchmark, match_label, topic_histogram, weighted_overall,
)
from dualresearch.providers import HeuristicLLM, ScriptedProvider, SequenceProvider

from conftest import CORPUS, json_responder


def calibrated_judge(request):
    """Scores 50 on every dimension when the two reports match, else by length ratio."""
    ref, cand = request.payload["reference"], request.payload["candidate"]
    if ref == cand:
        return json.dumps(dict.fromkeys(EVAL_DIMENSIONS, 50))
    share = 100 * len(cand) / (len(cand) + len(ref))
    return json.dumps(dict.fromkeys(EVAL_DIMENSIONS, share))


def test_weights_normalized_example():
    w = DimensionWeights.normalized({"comprehensiveness": 3, "insight": 3,
                                     "instruction_following": 2, "readability": 2})
    assert w.as_tuple() == pytest.approx((0.3, 0.3, 0.2, 0.2))


@pytest.mark.parametrize("raw", [
    {"comprehensiveness": 0, "insight": 0, "instruction_following": 0, "readability": 0},
    {"comprehensiveness": -1, "insight": 1, "instruction_following": 1, "readability": 1},
])
def test_weights_rejected(raw):
    with pytest.raises(ValueError):
        DimensionWeights.normalized(raw)


def test_weights_must_sum_to_one():
    with pytest.raises(PreconditionError):
        DimensionWeights(dict.fromkeys(EVAL_DIMENSIONS, 0.3))


def test_allocate_weights_normalizes_model_output():
    provider = json_responder({"weights": {"comprehensiveness": 4, "insight": 4,
                                           "instruction_following": 1, "readability": 1}})
    assert Evaluator(provider).allocate_weights("q").weights["insight"] == pytest.approx(0.4)


def test_reference_against_itself_is_fifty():
    score = Evaluator(ScriptedProvider(calibrated_judge)).pairwise_score(
        "q", "same report", "same report", DimensionWeights.uniform())
    assert score.scores == dict.fromkeys(EVAL_DIMENSIONS, 50.0)
    assert f"{score.overall:.2f}" == "50.00"


def test_heuristic_judge_is_calibrated():
    score = Evaluator(HeuristicLLM()).pairwise_score("q", "# A\ntext", "# A\ntext", DimensionWeights.uniform())
    assert score.overall == 50.0


def test_uniform_overall_example():
    scores = dict(zip(EVAL_DIMENSIONS, (60, 40, 50, 50)))
    assert PairwiseScore.combine(scores, DimensionWeights.uniform()).overall == pytest.approx(50.0)


def test_overall_is_dot_product():
    rng = random.Random(9)
    for _ in range(500):
        w = DimensionWeights.normalized({d: rng.random() + 1e-6 for d in EVAL_DIMENSIONS})
        s = {d: rng.uniform(0, 100) for d in EVAL_DIMENSIONS}
        dot = sum(w.weights[d] * s[d] for d in EVAL_DIMENSIONS)
        assert abs(weighted_overall(s, w) - dot) <= 1e-9


def test_pairwise_clamps_and_rejects_empty():
    provider = json_responder({"pairwise": dict(zip(EVAL_DIMENSIONS, (120, 50, 50, 50)))})
    ev = Evaluator(provider)
    assert ev.pairwise_score("q", "a", "b", DimensionWeights.uniform()).scores["comprehensiveness"] == 100
    with pytest.raises(PreconditionError):
        ev.pairwise_score("q", " ", "b", DimensionWeights.uniform())


def test_miner_accepts_five():
    queries = [f"query {i}" for i in range(5)]
    assert Evaluator(json_responder({"miner": queries})).mine_queries("history") == queries


def test_miner_too_few_twice_raises():
    provider = SequenceProvider([json.dumps(["a", "b"])])
    with pytest.raises(LengthViolation):
        Evaluator(provider).mine_queries("history")
    assert provider.calls == 2


def test_miner_accepts_fenced_array():
    raw = "```json\n" + json.dumps(["a", "b", "c", "d"]) + "\n```"
    assert Evaluator(SequenceProvider([raw])).mine_queries("history") == ["a", "b", "c", "d"]


@pytest.mark.parametrize("raw", ["Travel", "travel ", '"Travel"', "**Travel**"])
def test_classifier_normalizes_label(raw):
    assert Evaluator(SequenceProvider([raw])).classify_query("trip to kyoto") == "Travel"


def test_classifier_retries_then_fails():
    provider = SequenceProvider(["Cooking", "Baking"])
    with pytest.raises(UnknownCategory):
        Evaluator(provider).classify_query("q")
    assert provider.calls == 2


def test_match_label_covers_every_label():
    for label in TOPIC_LABELS:
        assert match_label(label.upper()) == label


def test_histogram_counts_every_label():
    rng = random.Random(1)
    labels = [rng.choice(TOPIC_LABELS) for _ in range(100)]
    hist = topic_histogram(labels)
    assert sum(hist.values()) == 100
    assert set(hist) == set(TOPIC_LABELS)
    assert all(hist[l] == labels.count(l) for l in TOPIC_LABELS)
    with pytest.raises(UnknownCategory):
        topic_histogram(["Nope"])


def test_load_benchmark_fixture():
    rows = load_benchmark(CORPUS / "benchmark.jsonl")
    assert len(rows) == 12 and all(r["query"] for r in rows)


def test_format_table():
    s = PairwiseScore.combine(dict.fromkeys(EVAL_DIMENSIONS, 50.0), DimensionWeights.uniform())
    table = format_table([("case", s)])
    assert table.splitlines()[-1] == "| case | 50.00 | 50.00 | 50.00 | 50.00 | 50.00 |"
