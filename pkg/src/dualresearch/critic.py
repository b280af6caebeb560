"""The exploration policy: rate outlines and maintain blueprints with their search queries."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .bm25 import jaccard
from .core_state import (
    Blueprint,
    CriticState,
    GeneratorState,
    QueryContext,
    dedupe_queries,
    normalize_query,
    serialize_outline,
)
from .errors import PreconditionError
from .providers.base import LLMProvider, SourceEngine
from .providers.structured import complete_structured, parse_json_object
from .templates import PromptLibrary, default_library

logger = logging.getLogger(__name__)

DIMENSIONS = (
    "instruction_adherence",
    "content_depth",
    "perspective_balance",
    "coverage_breadth",
    "evidence_support",
    "insight_value",
    "structural_logic",
)
DEFAULT_MAX_BLUEPRINTS = 10
DEFAULT_MAX_QUERIES = 5
MATCH_JACCARD = 0.6


@dataclass(frozen=True)
class RatingBreakdown:
    dimensions: dict[str, float]
    overall: float
    justification: str = ""

    def __post_init__(self):
        if set(self.dimensions) != set(DIMENSIONS):
            raise PreconditionError(f"rating needs exactly the dimensions {DIMENSIONS}")
        for name, v in self.dimensions.items():
            if not 0.0 <= v <= 10.0:
                raise PreconditionError(f"{name}={v} outside [0, 10]")
        if abs(self.overall - mean_score(self.dimensions)) > 1e-9:
            raise PreconditionError("overall must equal the mean of the dimensions")

    @classmethod
    def from_dimensions(cls, dimensions: dict[str, float], justification: str = "") -> "RatingBreakdown":
        dims = {name: float(dimensions[name]) for name in DIMENSIONS}
        return cls(dims, mean_score(dims), justification)

    @classmethod
    def zero(cls, justification: str = "empty outline") -> "RatingBreakdown":
        return cls.from_dimensions(dict.fromkeys(DIMENSIONS, 0.0), justification)

    def to_dict(self) -> dict:
        return {"dimensions": dict(self.dimensions), "overall": self.overall,
                "justification": self.justification}


def mean_score(dimensions: dict[str, float]) -> float:
    return math.fsum(dimensions[name] for name in DIMENSIONS) / len(DIMENSIONS)


def _clamp10(name: str, value) -> float:
    v = float(value)
    if v != v:
        raise ValueError(f"{name} is NaN")
    if not 0.0 <= v <= 10.0:
        logger.warning("rating %s=%s clamped to [0, 10]", name, v)
        v = min(10.0, max(0.0, v))
    return v


def parse_rating(raw: str) -> RatingBreakdown:
    obj = parse_json_object(raw)
    dims = obj.get("dimensions", obj)
    scores = {name: _clamp10(name, dims[name]) for name in DIMENSIONS}
    reported = obj.get("overall", obj.get("rating"))
    rating = RatingBreakdown.from_dimensions(scores, str(obj.get("justification") or ""))
    if reported is not None:
        try:
            drift = abs(float(reported) - rating.overall)
        except (TypeError, ValueError):
            drift = float("inf")
        if drift > 1e-6:
            logger.info("model overall %r replaced by dimension mean %.4f", reported, rating.overall)
    return rating


# --------------------------------------------------------------------------
# Blueprint maintenance
# --------------------------------------------------------------------------


@dataclass
class _Proposal:
    id: str
    content: str
    queries: list[str] = field(default_factory=list)


def _split_queries(value) -> list[str]:
    if value is None:
        return []
    if isinstance(value, str):
        return [p for p in (s.strip() for s in value.split(",")) if p]
    return [str(v).strip() for v in value if str(v).strip()]


def parse_proposals(raw: str) -> list[_Proposal]:
    obj = parse_json_object(raw)
    items = obj["blueprints"]
    if not isinstance(items, list):
        raise ValueError("blueprints must be a list")
    out = []
    for item in items:
        content = " ".join(str(item.get("content") or "").split())
        if not content:
            continue
        queries = _split_queries(item.get("search_query", item.get("search_queries")))
        out.append(_Proposal(str(item.get("id") or "").strip(), content, queries))
    if not out:
        raise ValueError("no usable blueprints in output")
    return out


def _fresh_id(used: set[str]) -> str:
    n = 1
    while f"bp{n}" in used:
        n += 1
    return f"bp{n}"


def match_ids(prev: CriticState, proposals: list[_Proposal]) -> list[_Proposal]:
    """Resolve each proposal to a previous id (echoed id, else content overlap) or a new one."""
    prev_by_id = {b.id: b for b in prev.blueprints}
    unmatched = dict(prev_by_id)
    resolved: list[_Proposal | None] = [None] * len(proposals)
    for i, p in enumerate(proposals):
        if p.id in unmatched:
            del unmatched[p.id]
            resolved[i] = _Proposal(p.id, p.content, p.queries)
    for i, p in enumerate(proposals):
        if resolved[i] is not None or not unmatched:
            continue
        best_id, best = None, MATCH_JACCARD
        for bid, bp in unmatched.items():
            sim = jaccard(p.content, bp.content)
            if sim > best:
                best_id, best = bid, sim
        if best_id is not None:
            del unmatched[best_id]
            resolved[i] = _Proposal(best_id, p.content, p.queries)
    used = set(prev_by_id) | {r.id for r in resolved if r is not None}
    for i, p in enumerate(proposals):
        if resolved[i] is None:
            new_id = _fresh_id(used)
            used.add(new_id)
            resolved[i] = _Proposal(new_id, p.content, p.queries)
    return resolved  # type: ignore[return-value]


def enforce_continuity(prev: CriticState, proposed: CriticState) -> CriticState:
    """Blueprints may be edited or added but never dropped.

    Any previous blueprint missing from `proposed` is reinstated right after
    the nearest earlier blueprint that survived, keeping its old content.
    """
    present = set(proposed.ids)
    if present >= set(prev.ids):
        return proposed
    result = list(proposed.blueprints)
    anchor = -1
    for bp in prev.blueprints:
        ids = [b.id for b in result]
        if bp.id in present:
            anchor = ids.index(bp.id)
            continue
        logger.warning("blueprint %s dropped by the critic; reinstated", bp.id)
        result.insert(anchor + 1, bp)
        anchor += 1
    return CriticState(proposed.round, tuple(result), proposed.rating, proposed.justification)


def cap_blueprints(prev: CriticState, state: CriticState, max_len: int) -> CriticState:
    """Trim newly added blueprints beyond `max_len`; previous ones always stay."""
    if len(state.blueprints) <= max_len:
        return state
    keep = set(prev.ids)
    room = max(0, max_len - sum(1 for b in state.blueprints if b.id in keep))
    kept = []
    for b in state.blueprints:
        if b.id in keep:
            kept.append(b)
        elif room > 0:
            kept.append(b)
            room -= 1
        else:
            logger.warning("blueprint cap %d reached; dropping new blueprint %s", max_len, b.id)
    return CriticState(state.round, tuple(kept), state.rating, state.justification)


class Critic:
    def __init__(
        self,
        provider: LLMProvider,
        library: PromptLibrary | None = None,
        search_engine: SourceEngine | str = SourceEngine.GENERIC_WEB,
        max_blueprints_len: int = DEFAULT_MAX_BLUEPRINTS,
        max_query_len: int = DEFAULT_MAX_QUERIES,
        min_query_per_blueprint: int = 1,
        min_query_len: int = 1,
    ):
        if max_blueprints_len < 1 or max_query_len < 1:
            raise PreconditionError("blueprint and query limits must be positive")
        self.provider = provider
        self.library = library or default_library()
        self.search_engine = SourceEngine(search_engine)
        self.max_blueprints_len = max_blueprints_len
        self.max_query_len = max_query_len
        self.min_query_per_blueprint = min_query_per_blueprint
        self.min_query_len = min_query_len

    def query_lint(self, state: CriticState) -> list[str]:
        """Soft checks on query counts and lengths; reported, never enforced."""
        findings = []
        for bp in state.blueprints:
            if len(bp.search_queries) < self.min_query_per_blueprint:
                findings.append(f"blueprint {bp.id}: {len(bp.search_queries)} queries "
                                f"(suggested at least {self.min_query_per_blueprint})")
            for q in bp.search_queries:
                if len(q.split()) < self.min_query_len:
                    findings.append(f"blueprint {bp.id}: short query {q!r}")
        return findings

    def rate_outline(
        self,
        query_ctx: QueryContext,
        gen_state: GeneratorState,
        citation_rate: float,
        blueprints: Iterable[Blueprint] = (),
        history_queries: Iterable[str] = (),
    ) -> RatingBreakdown:
        if gen_state.is_empty:
            return RatingBreakdown.zero()
        variables = {
            "query": query_ctx.text,
            "response_style": query_ctx.response_style,
            "blueprints": [b.to_dict() for b in blueprints],
            "history_queries": sorted(set(history_queries)),
            "citation_rate": float(citation_rate),
            "outline": serialize_outline(gen_state.outline),
        }
        request = self.library.request("critic_rating", variables)
        return complete_structured(self.provider, request, parse_rating)

    def propose_blueprints(
        self,
        query_ctx: QueryContext,
        gen_state: GeneratorState,
        prev: CriticState,
        history_queries: Iterable[str] = (),
        feedback: Optional[str] = None,
        assessment: Optional[RatingBreakdown] = None,
    ) -> CriticState:
        """Produce the critic state for the next round.

        `assessment` is the rating of `gen_state`; its overall score and
        justification are stored on the returned state.
        """
        if prev.round != gen_state.round:
            raise PreconditionError(f"critic round {prev.round} != generator round {gen_state.round}")
        history = sorted({normalize_query(q) for q in history_queries})
        variables = {
            "query": query_ctx.text,
            "response_style": query_ctx.response_style,
            "blueprints": [b.to_dict() for b in prev.blueprints],
            "history_queries": history,
            "justification": assessment.justification if assessment else "",
            "outline": serialize_outline(gen_state.outline),
            "feedback": feedback or "",
            "search_engine": self.search_engine.value,
            "max_blueprints_len": self.max_blueprints_len,
            "max_query_len": self.max_query_len,
        }
        request = self.library.request("critic_blueprints", variables)
        proposals = complete_structured(self.provider, request, parse_proposals)
        proposals = match_ids(prev, proposals)

        rating = assessment.overall if assessment else 0.0
        justification = assessment.justification if assessment else ""
        by_id: dict[str, _Proposal] = {}
        for p in proposals:
            if p.id in by_id:  # two proposals resolved to one id: merge
                by_id[p.id].queries.extend(p.queries)
            else:
                by_id[p.id] = p
        draft = CriticState(
            prev.round + 1,
            tuple(Blueprint(p.id, p.content) for p in by_id.values()),
            rating,
            justification,
        )
        draft = cap_blueprints(prev, enforce_continuity(prev, draft), self.max_blueprints_len)

        # Queries: fresh ones only, unique across the whole state, capped per blueprint.
        seen = set(history)
        blueprints = []
        for bp in draft.blueprints:
            raw = by_id[bp.id].queries if bp.id in by_id else list(bp.search_queries)
            kept = dedupe_queries(raw, exclude=seen)
            dropped = len(raw) - len(kept)
            if dropped:
                logger.info("blueprint %s: %d repeated query(ies) dropped", bp.id, dropped)
            kept = kept[: self.max_query_len]
            seen.update(normalize_query(q) for q in kept)
            blueprints.append(Blueprint(bp.id, bp.content, kept))
        return CriticState(draft.round, tuple(blueprints), rating, justification)
