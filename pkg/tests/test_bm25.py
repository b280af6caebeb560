import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from dualresearch.bm25 import BM25Index, jaccard, tokenize

from oracles import bm25_scores, top_k

VOCAB = [f"w{i}" for i in range(30)]


def test_tokenize_lowercases_and_splits():
    assert tokenize("Elderly Housing, Japan-2024!") == ["elderly", "housing", "japan", "2024"]


def test_tokenize_cjk_bigrams():
    assert tokenize("高齢者") == ["高齢", "齢者"]
    assert tokenize("人") == ["人"]


def test_jaccard_examples():
    assert jaccard("a b c", "a b c") == 1.0
    assert jaccard("a b", "c d") == 0.0
    assert jaccard("a b c", "b c d") == pytest.approx(0.5)
    assert jaccard("", "") == 1.0


def test_empty_index_scores_nothing():
    index = BM25Index([])
    assert index.n == 0
    assert index.scores(["x"]) == []


def test_singleton_index_positive_score():
    index = BM25Index([["a", "b"]])
    # N=1, df=1: idf = ln(0.5/1.5 + 1)
    expected = math.log(0.5 / 1.5 + 1) * 1 * 2.2 / (1 + 1.2)
    assert index.scores(["a"]) == [pytest.approx(expected)]
    assert index.scores(["zzz"]) == [0.0]


def test_idf_formula_hand_computed():
    docs = [["a", "b"], ["a"], ["c", "c", "c"]]
    index = BM25Index(docs)
    assert index.idf["a"] == pytest.approx(math.log((3 - 2 + 0.5) / (2 + 0.5) + 1))
    assert index.idf["c"] == pytest.approx(math.log((3 - 1 + 0.5) / (1 + 0.5) + 1))


@settings(max_examples=200, deadline=None)
@given(
    docs=st.lists(st.lists(st.sampled_from(VOCAB[:8]), max_size=8), min_size=1, max_size=12),
    query=st.lists(st.sampled_from(VOCAB[:10]), min_size=1, max_size=5),
)
def test_scores_match_brute_force(docs, query):
    got = BM25Index(docs).scores(query)
    want = bm25_scores(docs, query)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_random_rankings_match_oracle():
    rng = random.Random(7)
    docs = [[rng.choice(VOCAB) for _ in range(rng.randint(1, 12))] for _ in range(60)]
    index = BM25Index(docs)
    for _ in range(30):
        q = [rng.choice(VOCAB) for _ in range(rng.randint(1, 4))]
        got = index.scores(q)
        assert top_k(got, 10) == top_k(bm25_scores(docs, q), 10)
