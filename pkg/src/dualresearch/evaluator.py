"""Report evaluation against a reference, plus benchmark query tooling.

Pairwise scoring gives the candidate 0-100 per dimension relative to the
reference (50 = parity) and combines them with query-specific weights.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import LengthViolation, PreconditionError, UnknownCategory
from .providers.base import LLMProvider
from .providers.structured import complete_structured, parse_json_array, parse_json_object, strip_code_fences
from .templates import PromptLibrary, default_library

logger = logging.getLogger(__name__)

EVAL_DIMENSIONS = ("comprehensiveness", "insight", "instruction_following", "readability")

TOPIC_LABELS = (
    "Finance & Business",
    "Science & Technology",
    "Software Development",
    "Education & Jobs",
    "Health",
    "Literature",
    "History",
    "Hardware",
    "Industrial",
    "Art & Design",
    "Games",
    "Crime & Law",
    "Entertainment",
    "Sports & Fitness",
    "Software",
    "Transportation",
    "Religion",
    "Home & Hobbies",
    "Travel",
    "Food & Dining",
    "Fashion & Beauty",
    "Social Life",
)
_LABEL_LOOKUP = {label.casefold(): label for label in TOPIC_LABELS}

MINED_MIN, MINED_MAX = 4, 6


@dataclass(frozen=True)
class DimensionWeights:
    weights: dict[str, float]

    def __post_init__(self):
        if set(self.weights) != set(EVAL_DIMENSIONS):
            raise PreconditionError(f"weights need exactly {EVAL_DIMENSIONS}")
        if any(w < 0 or not math.isfinite(w) for w in self.weights.values()):
            raise PreconditionError("weights must be finite and non-negative")
        if abs(math.fsum(self.weights.values()) - 1.0) > 1e-9:
            raise PreconditionError("weights must sum to 1")

    @classmethod
    def normalized(cls, raw: dict[str, float]) -> "DimensionWeights":
        values = {d: float(raw[d]) for d in EVAL_DIMENSIONS}
        if any(v < 0 or not math.isfinite(v) for v in values.values()):
            raise ValueError(f"invalid weights {values}")
        total = math.fsum(values.values())
        if total <= 0:
            raise ValueError("weights sum to zero")
        return cls({d: v / total for d, v in values.items()})

    @classmethod
    def uniform(cls) -> "DimensionWeights":
        return cls(dict.fromkeys(EVAL_DIMENSIONS, 1.0 / len(EVAL_DIMENSIONS)))

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(self.weights[d] for d in EVAL_DIMENSIONS)


@dataclass(frozen=True)
class PairwiseScore:
    scores: dict[str, float]
    overall: float

    def __post_init__(self):
        if set(self.scores) != set(EVAL_DIMENSIONS):
            raise PreconditionError(f"scores need exactly {EVAL_DIMENSIONS}")
        if any(not 0.0 <= s <= 100.0 for s in self.scores.values()):
            raise PreconditionError("pairwise scores must lie in [0, 100]")

    @classmethod
    def combine(cls, scores: dict[str, float], weights: DimensionWeights) -> "PairwiseScore":
        return cls(dict(scores), weighted_overall(scores, weights))

    def to_dict(self) -> dict:
        return {**{d: self.scores[d] for d in EVAL_DIMENSIONS}, "overall": self.overall}


def weighted_overall(scores: dict[str, float], weights: DimensionWeights) -> float:
    return math.fsum(weights.weights[d] * scores[d] for d in EVAL_DIMENSIONS)


def _parse_scores(raw: str) -> dict[str, float]:
    obj = parse_json_object(raw)
    obj = obj.get("scores", obj)
    out = {}
    for d in EVAL_DIMENSIONS:
        v = float(obj[d])
        if not math.isfinite(v):
            raise ValueError(f"{d} is not finite")
        if not 0.0 <= v <= 100.0:
            logger.warning("pairwise %s=%s clamped to [0, 100]", d, v)
            v = min(100.0, max(0.0, v))
        out[d] = v
    return out


def _parse_mined(raw: str) -> list[str]:
    items = parse_json_array(raw)
    out = [" ".join(str(x).split()) for x in items]
    if any(not q for q in out):
        raise ValueError("empty mined query")
    return out


def match_label(raw: str) -> str:
    text = strip_code_fences(raw).strip().strip("\"'`*.").strip()
    label = _LABEL_LOOKUP.get(" ".join(text.split()).casefold())
    if label is None:
        raise UnknownCategory(f"not a topic label: {raw!r}")
    return label


class Evaluator:
    def __init__(self, provider: LLMProvider, library: PromptLibrary | None = None):
        self.provider = provider
        self.library = library or default_library()

    def allocate_weights(self, query_text: str) -> DimensionWeights:
        request = self.library.request("weights", {"query": query_text})
        return complete_structured(
            self.provider, request, lambda raw: DimensionWeights.normalized(parse_json_object(raw))
        )

    def pairwise_score(self, query_text: str, reference: str, candidate: str,
                       weights: DimensionWeights) -> PairwiseScore:
        if not reference.strip() or not candidate.strip():
            raise PreconditionError("both reports must be non-empty")
        request = self.library.request(
            "pairwise",
            {"query": query_text, "weights": dict(weights.weights),
             "reference": reference, "candidate": candidate},
        )
        scores = complete_structured(self.provider, request, _parse_scores)
        return PairwiseScore.combine(scores, weights)

    def mine_queries(self, user_history: str) -> list[str]:
        if not user_history.strip():
            raise PreconditionError("user history must be non-empty")
        request = self.library.request("miner", {"user_history": user_history})
        out: list[str] = []
        for attempt in range(2):
            out = complete_structured(self.provider, request, _parse_mined)
            if MINED_MIN <= len(out) <= MINED_MAX:
                return out
            logger.warning("miner returned %d queries (attempt %d/2)", len(out), attempt + 1)
        raise LengthViolation(f"expected {MINED_MIN}-{MINED_MAX} queries, got {len(out)}")

    def classify_query(self, query_text: str) -> str:
        request = self.library.request("classifier", {"query": query_text, "labels": TOPIC_LABELS})
        last = None
        for attempt in range(2):
            raw = self.provider.complete(request)
            try:
                return match_label(raw)
            except UnknownCategory as exc:
                last = exc
                logger.warning("classifier output rejected (attempt %d/2): %s", attempt + 1, exc)
        raise last  # type: ignore[misc]


def topic_histogram(labels: Iterable[str]) -> dict[str, int]:
    counts = Counter(labels)
    unknown = set(counts) - set(TOPIC_LABELS)
    if unknown:
        raise UnknownCategory(f"labels outside the topic set: {sorted(unknown)}")
    return {label: counts.get(label, 0) for label in TOPIC_LABELS}


def load_benchmark(path: str | Path) -> list[dict]:
    """Line-delimited records with a `query` field and an optional `topic`."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            if not str(row.get("query", "")).strip():
                raise PreconditionError(f"{path}:{n}: record has no query")
            rows.append(row)
    return rows


def format_table(rows: list[tuple[str, PairwiseScore]]) -> str:
    header = "| case | " + " | ".join(EVAL_DIMENSIONS) + " | overall |"
    sep = "|" + "---|" * (len(EVAL_DIMENSIONS) + 2)
    body = [
        f"| {name} | " + " | ".join(f"{s.scores[d]:.2f}" for d in EVAL_DIMENSIONS) + f" | {s.overall:.2f} |"
        for name, s in rows
    ]
    return "\n".join([header, sep, *body])
