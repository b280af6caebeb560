"""Tokenizer and an Okapi BM25 index over short trace documents."""

from __future__ import annotations

import math
import re
from collections import Counter
from typing import Sequence

K1 = 1.2
B = 0.75

_WORD_RE = re.compile(r"\w+")
_CJK_RE = re.compile(r"[぀-ヿ㐀-䶿一-鿿가-힯豈-﫿]")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; tokens containing CJK become character bigrams."""
    tokens: list[str] = []
    for word in _WORD_RE.findall(text.lower()):
        if _CJK_RE.search(word):
            if len(word) == 1:
                tokens.append(word)
            else:
                tokens.extend(word[i : i + 2] for i in range(len(word) - 1))
        else:
            tokens.append(word)
    return tokens


def jaccard(a: str, b: str) -> float:
    ta, tb = set(tokenize(a)), set(tokenize(b))
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb)


class BM25Index:
    """Immutable once built; rebuild to add documents."""

    def __init__(self, documents: Sequence[Sequence[str]], k1: float = K1, b: float = B):
        self.k1 = k1
        self.b = b
        self.tf = [Counter(doc) for doc in documents]
        self.lengths = [len(doc) for doc in documents]
        self.n = len(documents)
        self.avgdl = (sum(self.lengths) / self.n) if self.n else 0.0
        df: Counter = Counter()
        for counts in self.tf:
            df.update(counts.keys())
        self.idf = {t: math.log((self.n - d + 0.5) / (d + 0.5) + 1.0) for t, d in df.items()}

    def score(self, query_tokens: Sequence[str], i: int) -> float:
        counts = self.tf[i]
        norm = self.k1 * (1 - self.b + self.b * self.lengths[i] / self.avgdl) if self.avgdl else self.k1
        total = 0.0
        for t in query_tokens:
            f = counts.get(t, 0)
            if f:
                total += self.idf[t] * f * (self.k1 + 1) / (f + norm)
        return total

    def scores(self, query_tokens: Sequence[str]) -> list[float]:
        return [self.score(query_tokens, i) for i in range(self.n)]
