"""The exploitation policy: run blueprint searches, then draft the next outline."""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .core_state import (
    CriticState,
    GeneratorState,
    Outline,
    QueryContext,
    extract_citations,
    is_interrogative,
    map_outline,
    parse_outline,
    serialize_outline,
)
from .critic import RatingBreakdown
from .document_bank import DocumentBank, DocumentScorer, ScoringContext, ingest_and_score
from .errors import MalformedOutline, PreconditionError, ProviderError
from .providers.base import LLMProvider, SearchProvider, SearchResult
from .providers.structured import strip_code_fences
from .templates import PromptLibrary, default_library

logger = logging.getLogger(__name__)

DEFAULT_NUM_SEARCHES = 10
OUTLINE_RETRIES = 2
PREAMBLE_HEADINGS = (
    "executive summary",
    "background",
    "introduction",
    "why this matters",
    "research significance",
)
_CHAPTER_PREFIX = re.compile(r"^(chapter\s+\d+[.:]?|\d+(\.\d+)*[.)]?)\s*", re.IGNORECASE)


@dataclass(frozen=True)
class LintConfig:
    min_sections: int = 7
    max_sections: int = 10
    citation_target: int = 100


def _strip_numbering(heading: str) -> str:
    return _CHAPTER_PREFIX.sub("", heading).strip()


def outline_lint(outline: Outline, config: LintConfig = LintConfig()) -> tuple[str, ...]:
    """Soft structural checks; findings are reported, never enforced."""
    if outline is None:
        return ("empty outline",)
    findings = []
    chapters = outline.children
    if not config.min_sections <= len(chapters) <= config.max_sections:
        findings.append(f"top-level sections: {len(chapters)} (target {config.min_sections}-{config.max_sections})")
    n_cites = sum(len(n.cite_ids) + len(n.body_cite_ids) for n in outline.walk())
    if n_cites < config.citation_target:
        findings.append(f"citations: {n_cites} (target {config.citation_target})")
    if chapters:
        first = _strip_numbering(chapters[0].heading).lower()
        if any(first.startswith(p) for p in PREAMBLE_HEADINGS):
            findings.append(f"first chapter is preamble, not an answer: {chapters[0].heading!r}")
    for node in outline.walk():
        if not node.is_leaf and is_interrogative(node.heading):
            findings.append(f"non-leaf heading phrased as a question: {node.heading!r}")
    return tuple(findings)


def search_plan(critic_state: CriticState) -> list[tuple[int, int, str]]:
    return [
        (bi, qi, q)
        for bi, bp in enumerate(critic_state.blueprints)
        for qi, q in enumerate(bp.search_queries)
    ]


def run_searches(
    critic_state: CriticState,
    bank: DocumentBank,
    round_: int,
    k: int,
    search: SearchProvider,
    scorer: DocumentScorer,
    context: ScoringContext,
    max_workers: int = 8,
) -> DocumentBank:
    """Execute every blueprint query and ingest the results.

    Results are merged by (blueprint index, query index, rank) regardless of
    completion order. A failing query contributes no results.
    """
    if k < 1:
        raise PreconditionError("k must be positive")
    plan = search_plan(critic_state)
    for _, _, q in plan:
        bank.register_query(q)
    if not plan:
        return bank

    def work(item) -> list[SearchResult]:
        _, _, q = item
        try:
            hits = list(search.search(q, k))
        except ProviderError as exc:
            logger.warning("search failed for %r: %s; continuing with no results", q, exc)
            return []
        if len(hits) > k:
            logger.warning("search for %r returned %d > %d results; truncating", q, len(hits), k)
        return hits[:k]

    with ThreadPoolExecutor(max_workers=max(1, min(max_workers, len(plan)))) as pool:
        hits = list(pool.map(work, plan))
    merged = [(q, r) for (_, _, q), rs in zip(plan, hits) for r in rs]
    return ingest_and_score(bank, round_, merged, context, scorer, max_workers)


def resolve_citations(outline: Outline, bank: DocumentBank) -> Outline:
    """Keep ids in the generator view, forward superseded ids, strip the rest."""
    visible = bank.visible_ids()

    def fix(ids):
        out: list[str] = []
        for doc_id in ids:
            target = doc_id
            if target not in visible and target in bank:
                target = bank.latest_id(doc_id)
            if target not in visible:
                logger.warning("stripping citation %r: not in the document view", doc_id)
                continue
            if target not in out:
                out.append(target)
        return out

    return map_outline(outline, cite_fn=fix)


class Generator:
    def __init__(
        self,
        provider: LLMProvider,
        library: PromptLibrary | None = None,
        lint: LintConfig = LintConfig(),
        retries: int = OUTLINE_RETRIES,
    ):
        self.provider = provider
        self.library = library or default_library()
        self.lint = lint
        self.retries = retries

    def generate_outline(
        self,
        query_ctx: QueryContext,
        prev_gen: GeneratorState,
        critic_state: CriticState,
        bank: DocumentBank,
        prev_rating: Optional[RatingBreakdown] = None,
    ) -> GeneratorState:
        if critic_state.round != prev_gen.round + 1:
            raise PreconditionError(
                f"critic round {critic_state.round} must follow generator round {prev_gen.round}"
            )
        variables = {
            "query": query_ctx.text,
            "response_style": query_ctx.response_style,
            "blueprints": [b.to_dict() for b in critic_state.blueprints],
            "prev_outline": serialize_outline(prev_gen.outline),
            "prev_evaluation": prev_rating.justification if prev_rating else "",
            "documents": [
                {"id": r.id, "title": r.title, "url": r.url, "summary": r.summary}
                for r in bank.visible()
            ],
            "min_sections": self.lint.min_sections,
            "max_sections": self.lint.max_sections,
            "citation_target": self.lint.citation_target,
        }
        request = self.library.request("generator", variables)
        outline = self._draft(request)
        outline = resolve_citations(outline, bank)
        lint = outline_lint(outline, self.lint)
        for finding in lint:
            logger.info("outline lint (round %d): %s", critic_state.round, finding)
        return GeneratorState(critic_state.round, outline, extract_citations(outline), lint)

    def _draft(self, request) -> Outline:
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            raw = self.provider.complete(request)
            try:
                outline = parse_outline(strip_code_fences(raw))
            except MalformedOutline as exc:
                last = exc
            else:
                if outline is not None:
                    return outline
                last = MalformedOutline("model returned no outline")
            logger.warning("outline rejected (attempt %d/%d): %s", attempt + 1, self.retries + 1, last)
        raise MalformedOutline(f"no valid outline after {self.retries + 1} attempts: {last}")
