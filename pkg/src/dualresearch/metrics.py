"""Per-query retrieval statistics and the harness scorer's output record."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable

from .errors import PreconditionError

logger = logging.getLogger(__name__)

RELEVANCE_BOUNDARY = 0.5
SNIPPET_CHARS = 50


@dataclass(frozen=True)
class QueryDocStats:
    """Relevance statistics for the documents one search query returned.

    Only `scores` and `snippets` are stored; every other figure is derived
    from them on access.
    """

    query_text: str
    scores: tuple[float, ...] = ()
    snippets: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        object.__setattr__(self, "snippets", tuple(self.snippets))
        if any(not 0.0 <= s <= 1.0 for s in self.scores):
            raise PreconditionError("document scores must lie in [0, 1]")
        if any(len(s) > SNIPPET_CHARS for s in self.snippets):
            raise PreconditionError("snippets are limited to 50 characters")

    @property
    def doc_count(self) -> int:
        return len(self.scores)

    @property
    def avg_relevance(self) -> float:
        return math.fsum(self.scores) / len(self.scores) if self.scores else 0.0

    @property
    def std(self) -> float:
        if not self.scores:
            return 0.0
        mu = self.avg_relevance
        return math.sqrt(math.fsum((s - mu) ** 2 for s in self.scores) / len(self.scores))

    @property
    def min(self) -> float:
        return min(self.scores, default=0.0)

    @property
    def max(self) -> float:
        return max(self.scores, default=0.0)

    @property
    def relevant_count(self) -> int:
        return sum(1 for s in self.scores if s > RELEVANCE_BOUNDARY)

    @property
    def high_relevance_ratio(self) -> float:
        return self.relevant_count / max(self.doc_count, 1)

    def to_dict(self) -> dict:
        return {
            "query_text": self.query_text,
            "doc_count": self.doc_count,
            "scores": list(self.scores),
            "avg_relevance": self.avg_relevance,
            "std": self.std,
            "min": self.min,
            "max": self.max,
            "high_relevance_ratio": self.high_relevance_ratio,
            "snippets": list(self.snippets),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QueryDocStats":
        return cls(d["query_text"], tuple(d.get("scores", ())), tuple(d.get("snippets", ())))


def unique_by_query(stats: Iterable[QueryDocStats]) -> tuple[QueryDocStats, ...]:
    out = tuple(stats)
    names = [s.query_text for s in out]
    if len(names) != len(set(names)):
        raise PreconditionError("per-query stats must have unique query texts")
    return out


CRITERIA = ("completeness", "diversity", "search_coverage", "overall")


@dataclass(frozen=True)
class CriterionScore:
    score: float
    reasoning: str = ""

    def __post_init__(self):
        if not 0.0 <= self.score <= 10.0:
            raise PreconditionError(f"criterion score {self.score} outside [0, 10]")


@dataclass(frozen=True)
class HarnessScore:
    completeness: CriterionScore
    diversity: CriterionScore
    search_coverage: CriterionScore
    overall: CriterionScore

    def score(self, criterion: str) -> float:
        return getattr(self, criterion).score

    def to_dict(self) -> dict:
        return {c: {"score": getattr(self, c).score, "reasoning": getattr(self, c).reasoning}
                for c in CRITERIA}

    @classmethod
    def from_dict(cls, d: dict) -> "HarnessScore":
        d = d.get("evaluation", d)
        return cls(*(CriterionScore(float(d[c]["score"]), str(d[c].get("reasoning", ""))) for c in CRITERIA))

    @classmethod
    def from_scores(cls, completeness, diversity, search_coverage, overall, reasoning="") -> "HarnessScore":
        return cls(*(CriterionScore(float(s), reasoning)
                     for s in (completeness, diversity, search_coverage, overall)))
