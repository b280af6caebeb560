"""Chunked report writing over the selected outline.

One provider call per top-level section (with its whole subtree). Each
call sees the section outline, the documents it cites, the response style
and the sections already written.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Iterable, Optional

from .core_state import (
    CITE_TAG_RE,
    Blueprint,
    GeneratorState,
    INTERROGATIVE_MARKS,
    OutlineNode,
    QueryContext,
    Report,
    cited_ids_in_text,
    extract_citations,
    heading_sequence,
    is_interrogative,
    map_outline,
    serialize_outline,
)
from .document_bank import DocumentBank
from .errors import ParseFailure, PreconditionError, ProviderError, SectionFailure
from .providers.base import LLMProvider
from .providers.structured import complete_structured, parse_json_object
from .templates import PromptLibrary, default_library

logger = logging.getLogger(__name__)

SECTION_RETRIES = 2
DEFAULT_CONTEXT_BUDGET = 12_000  # characters of prior sections passed to the next call
RECENT_SECTIONS = 2
PLACEHOLDER = "_This section could not be generated._"

_MD_HEADING_RE = re.compile(r"^(#{1,6})[ \t]+(.*?)\s*$")
_FENCED_RE = re.compile(r"^\s*```[\w-]*\s*\n(.*)\n\s*```\s*$", re.DOTALL)


def strip_question_mark(heading: str) -> str:
    text = heading.strip()
    while text.endswith(INTERROGATIVE_MARKS):
        text = text[:-1].rstrip()
    return text or heading.strip().strip("?？") or "Untitled"


def _parse_rewrite(raw: str) -> str:
    obj = parse_json_object(raw)
    text = " ".join(str(obj["heading"]).split())
    if not text:
        raise ValueError("empty heading")
    if is_interrogative(text):
        raise ValueError(f"rewrite is still a question: {text!r}")
    if "<cite>" in text or "</cite>" in text:
        raise ValueError("rewrite contains cite tags")
    return text


def markdown_headings(text: str) -> list[tuple[int, str]]:
    """(level, text) for each markdown heading line; cite tags are ignored."""
    out = []
    in_fence = False
    for line in text.splitlines():
        if line.lstrip().startswith("```"):
            in_fence = not in_fence
            continue
        if in_fence:
            continue
        m = _MD_HEADING_RE.match(line.strip())
        if m:
            out.append((len(m.group(1)), " ".join(CITE_TAG_RE.sub(" ", m.group(2)).split())))
    return out


def _unfence(text: str) -> str:
    m = _FENCED_RE.match(text)
    return m.group(1) if m else text.strip()


def dedupe_citations(text: str, allowed: set[str]) -> tuple[str, int, list[str]]:
    """Drop unknown ids and repeat citations of one document.

    Returns (text, repeats removed, unknown ids stripped).
    """
    seen: set[str] = set()
    unknown: list[str] = []
    repeats = 0

    def sub(m: re.Match) -> str:
        nonlocal repeats
        kept = []
        for doc_id in (p.strip() for p in re.split(r"[,，]", m.group(1))):
            if not doc_id:
                continue
            if doc_id not in allowed:
                unknown.append(doc_id)
            elif doc_id in seen:
                repeats += 1
            else:
                seen.add(doc_id)
                kept.append(doc_id)
        return "<cite>" + ", ".join(kept) + "</cite>" if kept else "\x00"

    cleaned = CITE_TAG_RE.sub(sub, text)
    # a removed tag takes the whitespace in front of it along
    cleaned = re.sub(r"[ \t]*\x00", "", cleaned)
    return cleaned, repeats, unknown


def placeholder_section(node: OutlineNode) -> str:
    lines = []
    for n in node.walk():
        lines.append("#" * n.level + " " + n.heading)
        lines.append(PLACEHOLDER)
    return "\n".join(lines)


@dataclass
class WriterStats:
    repeated_citations_removed: int = 0
    unknown_citations_removed: int = 0
    failed_sections: int = 0


class Writer:
    def __init__(
        self,
        provider: LLMProvider,
        library: PromptLibrary | None = None,
        retries: int = SECTION_RETRIES,
        context_budget: int = DEFAULT_CONTEXT_BUDGET,
    ):
        self.provider = provider
        self.library = library or default_library()
        self.retries = retries
        self.context_budget = context_budget
        self.stats = WriterStats()

    # -- headings ------------------------------------------------------------

    def rewrite_heading(self, heading: str, is_leaf: bool) -> str:
        if is_leaf or not is_interrogative(heading):
            return heading
        request = self.library.request("heading_rewrite", {"heading": heading})
        try:
            return complete_structured(self.provider, request, _parse_rewrite)
        except ParseFailure:
            fallback = strip_question_mark(heading)
            logger.warning("heading rewrite failed for %r; using %r", heading, fallback)
            return fallback

    def rewrite_outline(self, outline: OutlineNode) -> OutlineNode:
        return map_outline(outline, heading_fn=lambda n: self.rewrite_heading(n.heading, n.is_leaf))

    # -- sections ------------------------------------------------------------

    def _prior_context(self, chunks: list[str]) -> str:
        text = "\n\n".join(chunks)
        if len(text) > self.context_budget:
            text = "\n\n".join(chunks[-RECENT_SECTIONS:])
        return text

    def write_section(self, query_ctx: QueryContext, node: OutlineNode, bank: DocumentBank,
                      prior: list[str], blueprints: Iterable[Blueprint] = ()) -> tuple[str, set[str]]:
        """Write one chunk; returns the cleaned markdown and the ids it may cite."""
        cited = [i for i in extract_citations(node) if i in bank]
        docs = [bank.get(i) for i in cited]
        variables = {
            "query": query_ctx.text,
            "response_style": query_ctx.response_style,
            "blueprints": [b.to_dict() for b in blueprints],
            "section_outline": serialize_outline(node),
            "documents": [{"id": d.id, "title": d.title, "url": d.url, "summary": d.summary}
                          for d in docs],
            "prior_chunks": self._prior_context(prior),
        }
        payload = dict(variables, headings=heading_sequence(node))
        request = self.library.request("writer_section", variables, payload=payload)
        expected = heading_sequence(node)
        allowed = set(cited)
        last_err = None
        for attempt in range(self.retries + 1):
            try:
                text = _unfence(self.provider.complete(request))
            except ProviderError as exc:
                last_err = exc
            else:
                got = markdown_headings(text)
                if got == expected:
                    cleaned, repeats, unknown = dedupe_citations(text, allowed)
                    if unknown:
                        logger.warning("section %r: stripped unknown citations %s", node.heading, unknown)
                    self.stats.repeated_citations_removed += repeats
                    self.stats.unknown_citations_removed += len(unknown)
                    return cleaned, allowed
                last_err = SectionFailure(f"heading structure {got} != {expected}")
            logger.warning("section %r rejected (attempt %d/%d): %s",
                           node.heading, attempt + 1, self.retries + 1, last_err)
        self.stats.failed_sections += 1
        logger.error("section %r failed after %d attempts; inserting placeholder",
                     node.heading, self.retries + 1)
        return placeholder_section(node), allowed

    def write_report(self, query_ctx: QueryContext, best: GeneratorState, bank: DocumentBank,
                     blueprints: Iterable[Blueprint] = ()) -> Report:
        if best.outline is None:
            raise PreconditionError("cannot write a report from an empty outline")
        self.stats = WriterStats()
        blueprints = tuple(blueprints)
        outline = self.rewrite_outline(best.outline)
        units = outline.children or (outline,)
        title = [] if units == (outline,) else ["# " + outline.heading]
        chunks: list[str] = []
        sections = []
        for node in units:
            chunk, _ = self.write_section(query_ctx, node, bank, chunks, blueprints)
            chunks.append(chunk)
            path = node.heading if node is outline else f"{outline.heading} / {node.heading}"
            sections.append((path, chunk))
        full = "\n\n".join(title + chunks)
        cited = dict.fromkeys(cited_ids_in_text(full))
        if self.stats.repeated_citations_removed:
            logger.info("report: removed %d repeated citation(s) across sections",
                        self.stats.repeated_citations_removed)
        return Report(tuple(sections), full, bank.citation_map(cited))


def render_report_file(report: Report) -> str:
    lines = [report.full_markdown.rstrip(), "", "---", "", "**References**", ""]
    lines += [f"- {doc_id}: {url}" for doc_id, url in report.citation_map.items()]
    return "\n".join(lines) + "\n"


def write_report(query_ctx: QueryContext, best: GeneratorState, bank: DocumentBank, *,
                 provider: LLMProvider, library: Optional[PromptLibrary] = None,
                 blueprints: Iterable[Blueprint] = ()) -> Report:
    return Writer(provider, library).write_report(query_ctx, best, bank, blueprints)
