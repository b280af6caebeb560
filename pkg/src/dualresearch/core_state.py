"""Domain types for the critic/generator states, outlines, trajectories and reports.

Everything in here is an immutable value object. The outline helpers
(`parse_outline`, `serialize_outline`, `extract_citations`) are pure.
"""

from __future__ import annotations

import logging
import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Iterator, Optional

from .errors import MalformedOutline, PreconditionError

logger = logging.getLogger(__name__)

MAX_HEADING_LEVEL = 4
INTERROGATIVE_MARKS = ("?", "？")

CITE_TAG_RE = re.compile(r"<cite>(.*?)</cite>", re.DOTALL)
CITE_ID_RE = re.compile(r"^turn_(\d+)_(\d+)$")
_HEADING_RE = re.compile(r"^(#+)(?:[ \t]+(.*))?$")


def normalize_query(text: str) -> str:
    """Trim, lowercase and collapse internal whitespace."""
    return " ".join(text.strip().lower().split())


def is_interrogative(heading: str) -> bool:
    return heading.strip().endswith(INTERROGATIVE_MARKS)


def make_doc_id(round_: int, index: int) -> str:
    return f"turn_{round_}_{index}"


def split_doc_id(doc_id: str) -> tuple[int, int] | None:
    m = CITE_ID_RE.match(doc_id)
    if m is None:
        return None
    return int(m.group(1)), int(m.group(2))


# --------------------------------------------------------------------------
# Query and plan
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ResearchQuery:
    text: str
    id: str = field(default_factory=lambda: uuid.uuid4().hex[:12])
    created_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise PreconditionError("research query text must be non-empty")


class Category(str, Enum):
    INFORMATION_SEEKING = "information_seeking"
    DECISION_MAKING = "decision_making"


class Intent(str, Enum):
    FACT_QUERY = "fact_query"
    STATUS_PROGRESS = "status_progress"
    NEWS_INFORMATION = "news_information"
    DEEP_EXPLORATION = "deep_exploration"
    RESOURCE_LOCATING = "resource_locating"
    COMPARISON_SELECTION = "comparison_selection"
    RECOMMENDATIONS = "recommendations"
    HOW_TO_GUIDE = "how_to_guide"
    TRAVEL_PLANNING = "travel_planning"
    PURCHASE_DECISION = "purchase_decision"

    @property
    def category(self) -> Category:
        return INTENT_CATEGORY[self]


INTENT_CATEGORY: dict[Intent, Category] = {
    Intent.FACT_QUERY: Category.INFORMATION_SEEKING,
    Intent.STATUS_PROGRESS: Category.INFORMATION_SEEKING,
    Intent.NEWS_INFORMATION: Category.INFORMATION_SEEKING,
    Intent.DEEP_EXPLORATION: Category.INFORMATION_SEEKING,
    Intent.RESOURCE_LOCATING: Category.INFORMATION_SEEKING,
    Intent.COMPARISON_SELECTION: Category.DECISION_MAKING,
    Intent.RECOMMENDATIONS: Category.DECISION_MAKING,
    Intent.HOW_TO_GUIDE: Category.DECISION_MAKING,
    Intent.TRAVEL_PLANNING: Category.DECISION_MAKING,
    Intent.PURCHASE_DECISION: Category.DECISION_MAKING,
}


@dataclass(frozen=True)
class Plan:
    category: Category
    intent: Intent
    response_style: str
    instructions: str = ""

    def __post_init__(self):
        if INTENT_CATEGORY[self.intent] is not self.category:
            raise PreconditionError(
                f"intent {self.intent.value} belongs to {INTENT_CATEGORY[self.intent].value}, "
                f"not {self.category.value}"
            )
        if not self.response_style.strip():
            raise PreconditionError("response_style must be non-empty")

    @classmethod
    def for_intent(cls, intent: Intent, response_style: str, instructions: str = "") -> "Plan":
        return cls(INTENT_CATEGORY[intent], intent, response_style, instructions)

    def to_dict(self) -> dict:
        return {
            "category": self.category.value,
            "intent": self.intent.value,
            "response_style": self.response_style,
            "instructions": self.instructions,
        }


@dataclass(frozen=True)
class QueryContext:
    """A query with its plan folded in, q' = [P; q]."""

    query: ResearchQuery
    plan: Optional[Plan] = None

    @property
    def text(self) -> str:
        if self.plan is None:
            return self.query.text
        lines = [
            "```plan",
            f"category: {self.plan.category.value}",
            f"intent: {self.plan.intent.value}",
            f"response_style: {self.plan.response_style}",
        ]
        if self.plan.instructions:
            lines.append(f"instructions: {self.plan.instructions}")
        lines.append("```")
        return "\n".join(lines) + "\n" + self.query.text

    @property
    def response_style(self) -> str:
        return self.plan.response_style if self.plan else ""


# --------------------------------------------------------------------------
# Critic state
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Blueprint:
    id: str
    content: str
    search_queries: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.content.strip():
            raise PreconditionError("blueprint content must be non-empty")
        object.__setattr__(self, "search_queries", tuple(self.search_queries))
        seen = set()
        for q in self.search_queries:
            key = normalize_query(q)
            if not key or key in seen:
                raise PreconditionError(f"duplicate or empty search query in blueprint {self.id}: {q!r}")
            seen.add(key)

    def to_dict(self) -> dict:
        return {"id": self.id, "content": self.content, "search_query": list(self.search_queries)}

    @classmethod
    def from_dict(cls, d: dict) -> "Blueprint":
        return cls(d["id"], d["content"], tuple(d.get("search_query", ())))


def dedupe_queries(queries, exclude=()) -> tuple[str, ...]:
    """Drop empty queries, repeats and anything in `exclude`, all compared normalized."""
    seen = {normalize_query(q) for q in exclude}
    kept = []
    for q in queries:
        q = " ".join(str(q).split())
        key = normalize_query(q)
        if not key or key in seen:
            continue
        seen.add(key)
        kept.append(q)
    return tuple(kept)


@dataclass(frozen=True)
class CriticState:
    round: int
    blueprints: tuple[Blueprint, ...] = ()
    rating: Optional[float] = None
    justification: str = ""

    def __post_init__(self):
        if self.round < 0:
            raise PreconditionError("round must be non-negative")
        object.__setattr__(self, "blueprints", tuple(self.blueprints))
        ids = [b.id for b in self.blueprints]
        if len(ids) != len(set(ids)):
            raise PreconditionError(f"blueprint ids must be unique: {ids}")
        if self.rating is not None and not 0 <= self.rating <= 10:
            raise PreconditionError(f"rating {self.rating} outside [0, 10]")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(b.id for b in self.blueprints)

    @property
    def queries(self) -> tuple[str, ...]:
        return tuple(q for b in self.blueprints for q in b.search_queries)

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "blueprints": [b.to_dict() for b in self.blueprints],
            "rating": self.rating,
            "justification": self.justification,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CriticState":
        return cls(
            d["round"],
            tuple(Blueprint.from_dict(b) for b in d.get("blueprints", ())),
            d.get("rating"),
            d.get("justification", ""),
        )


# --------------------------------------------------------------------------
# Outline
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OutlineNode:
    """One heading of an outline.

    `cite_ids` come from the heading line itself; cite tags that appear on
    body lines under the heading stay inside `body` and are exposed through
    `body_cite_ids`, so the position of every citation is recoverable.
    """

    level: int
    heading: str
    children: tuple["OutlineNode", ...] = ()
    cite_ids: tuple[str, ...] = ()
    body: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        object.__setattr__(self, "cite_ids", tuple(self.cite_ids))
        object.__setattr__(self, "body", tuple(self.body))
        if not 1 <= self.level <= MAX_HEADING_LEVEL:
            raise MalformedOutline(f"heading level {self.level} outside [1, {MAX_HEADING_LEVEL}]")
        if not self.heading or self.heading != " ".join(self.heading.split()):
            raise MalformedOutline(f"heading must be non-empty single-spaced text: {self.heading!r}")
        if "<cite>" in self.heading or "</cite>" in self.heading:
            raise MalformedOutline("heading text must not contain cite tags")
        for child in self.children:
            if child.level != self.level + 1:
                raise MalformedOutline(
                    f"child {child.heading!r} has level {child.level}, parent has {self.level}"
                )

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def body_cite_ids(self) -> tuple[str, ...]:
        ids: list[str] = []
        for line in self.body:
            ids.extend(_cite_ids_in_line(line))
        return tuple(ids)

    def walk(self) -> Iterator["OutlineNode"]:
        yield self
        for child in self.children:
            yield from child.walk()


Outline = Optional[OutlineNode]
EMPTY_OUTLINE: Outline = None


def _cite_ids_in_line(line: str) -> list[str]:
    ids: list[str] = []
    for m in CITE_TAG_RE.finditer(line):
        ids.extend(p.strip() for p in re.split(r"[,，]", m.group(1)) if p.strip())
    rest = CITE_TAG_RE.sub("", line)
    if "<cite>" in rest or "</cite>" in rest:
        raise MalformedOutline(f"unclosed cite tag in line: {line!r}")
    return ids


@dataclass
class _Draft:
    level: int
    heading: str
    cite_ids: list[str]
    body: list[str] = field(default_factory=list)
    children: list["_Draft"] = field(default_factory=list)

    def freeze(self) -> OutlineNode:
        return OutlineNode(
            self.level,
            self.heading,
            tuple(c.freeze() for c in self.children),
            tuple(self.cite_ids),
            tuple(self.body),
        )


def parse_outline(markdown: str) -> Outline:
    """Parse `#`..`####` markdown into an outline tree.

    Returns EMPTY_OUTLINE for input without headings. Raises MalformedOutline
    on a level jump of more than one, a second level-1 heading, a level
    deeper than 4, or an unclosed cite tag.
    """
    root: _Draft | None = None
    stack: list[_Draft] = []
    for raw in markdown.splitlines():
        line = raw.rstrip()
        if not line.strip():
            continue
        m = _HEADING_RE.match(line.lstrip())
        if m is None:
            if not stack:
                logger.warning("dropping text before outline root: %r", line)
                continue
            _cite_ids_in_line(line)  # validates tags
            stack[-1].body.append(line)
            continue
        level = len(m.group(1))
        text = m.group(2) or ""
        if level > MAX_HEADING_LEVEL:
            raise MalformedOutline(f"heading level {level} exceeds {MAX_HEADING_LEVEL}: {line!r}")
        ids = _cite_ids_in_line(text)
        heading = " ".join(CITE_TAG_RE.sub(" ", text).split())
        if not heading:
            raise MalformedOutline(f"empty heading: {line!r}")
        node = _Draft(level, heading, ids)
        if level == 1:
            if root is not None:
                raise MalformedOutline(f"second level-1 heading: {heading!r}")
            root = node
            stack = [node]
            continue
        if root is None:
            raise MalformedOutline(f"outline must start with a level-1 heading, got {line!r}")
        while stack and stack[-1].level >= level:
            stack.pop()
        parent = stack[-1]
        if level != parent.level + 1:
            raise MalformedOutline(f"level jump {parent.level}->{level} at {heading!r}")
        parent.children.append(node)
        stack.append(node)

    if root is None:
        return EMPTY_OUTLINE
    outline = root.freeze()
    unknown = unknown_cite_ids(outline)
    if unknown:
        logger.warning("cite ids with unrecognised format kept verbatim: %s", ", ".join(unknown))
    return outline


def serialize_outline(outline: Outline) -> str:
    if outline is None:
        return ""
    lines: list[str] = []
    for node in outline.walk():
        line = "#" * node.level + " " + node.heading
        if node.cite_ids:
            line += " <cite>" + ", ".join(node.cite_ids) + "</cite>"
        lines.append(line)
        lines.extend(node.body)
    return "\n".join(lines)


def extract_citations(outline: Outline) -> tuple[str, ...]:
    """All cite ids in document order, first occurrence wins."""
    if outline is None:
        return ()
    seen: dict[str, None] = {}
    for node in outline.walk():
        for doc_id in node.cite_ids + node.body_cite_ids:
            seen.setdefault(doc_id, None)
    return tuple(seen)


def unknown_cite_ids(outline: Outline) -> tuple[str, ...]:
    return tuple(i for i in extract_citations(outline) if not CITE_ID_RE.match(i))


def map_outline(outline: Outline, heading_fn=None, cite_fn=None) -> Outline:
    """Rebuild an outline, transforming headings and/or each node's cite list.

    `heading_fn(node) -> str`, `cite_fn(ids) -> iterable of ids`. Body lines
    have their cite tags rewritten through `cite_fn` as well; tags left empty
    are removed.
    """
    if outline is None:
        return None

    def rewrite_body(line: str) -> str:
        if cite_fn is None:
            return line

        def sub(m: re.Match) -> str:
            ids = [p.strip() for p in re.split(r"[,，]", m.group(1)) if p.strip()]
            ids = list(cite_fn(tuple(ids)))
            return "<cite>" + ", ".join(ids) + "</cite>" if ids else ""

        return " ".join(CITE_TAG_RE.sub(sub, line).split()) if CITE_TAG_RE.search(line) else line

    def rec(node: OutlineNode) -> OutlineNode:
        heading = heading_fn(node) if heading_fn else node.heading
        ids = tuple(cite_fn(node.cite_ids)) if cite_fn else node.cite_ids
        body = tuple(b for b in (rewrite_body(line) for line in node.body) if b.strip())
        return OutlineNode(node.level, heading, tuple(rec(c) for c in node.children), ids, body)

    return rec(outline)


def heading_sequence(outline: Outline) -> list[tuple[int, str]]:
    if outline is None:
        return []
    return [(n.level, n.heading) for n in outline.walk()]


# --------------------------------------------------------------------------
# Generator state, trajectory, report
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorState:
    round: int
    outline: Outline = EMPTY_OUTLINE
    reference_ids: tuple[str, ...] = ()
    lint: tuple[str, ...] = ()
    degenerate: bool = False

    def __post_init__(self):
        if self.round < 0:
            raise PreconditionError("round must be non-negative")
        object.__setattr__(self, "reference_ids", tuple(self.reference_ids))
        object.__setattr__(self, "lint", tuple(self.lint))
        refs = set(self.reference_ids)
        missing = [i for i in extract_citations(self.outline) if i not in refs]
        if missing:
            raise PreconditionError(f"outline cites ids outside reference_ids: {missing}")

    @classmethod
    def initial(cls) -> "GeneratorState":
        return cls(0)

    @property
    def is_empty(self) -> bool:
        return self.outline is None

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "outline": serialize_outline(self.outline),
            "reference_ids": list(self.reference_ids),
            "lint": list(self.lint),
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorState":
        return cls(
            d["round"],
            parse_outline(d.get("outline", "")),
            tuple(d.get("reference_ids", ())),
            tuple(d.get("lint", ())),
            d.get("degenerate", False),
        )


@dataclass(frozen=True)
class Trajectory:
    """Alternating (critic, generator) states indexed by round.

    `ratings[t]` is the critic's overall score for `steps[t][1]`, the
    generator state of round t; round 0 is the empty outline rated 0.
    """

    query: ResearchQuery
    steps: tuple[tuple[CriticState, GeneratorState], ...]
    ratings: tuple[float, ...] = ()
    terminal_round: int = 0

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "ratings", tuple(self.ratings))
        for t, (c, g) in enumerate(self.steps):
            if c.round != t or g.round != t:
                raise PreconditionError(f"step {t} holds rounds ({c.round}, {g.round})")
        if len(self.ratings) > len(self.steps):
            raise PreconditionError("more ratings than rounds")
        if self.steps and self.terminal_round != len(self.steps) - 1:
            raise PreconditionError("terminal_round must index the last step")

    def to_dict(self) -> dict:
        return {
            "query": {"id": self.query.id, "text": self.query.text},
            "steps": [{"critic": c.to_dict(), "generator": g.to_dict()} for c, g in self.steps],
            "ratings": list(self.ratings),
            "terminal_round": self.terminal_round,
        }


@dataclass(frozen=True)
class Report:
    sections: tuple[tuple[str, str], ...]
    full_markdown: str
    citation_map: dict[str, str]

    def __post_init__(self):
        object.__setattr__(self, "sections", tuple(self.sections))
        dangling = [i for i in cited_ids_in_text(self.full_markdown) if i not in self.citation_map]
        if dangling:
            raise PreconditionError(f"report cites ids missing from citation_map: {dangling}")


def cited_ids_in_text(text: str) -> list[str]:
    """Every id inside cite tags of free text, in order, with repeats."""
    ids: list[str] = []
    for m in CITE_TAG_RE.finditer(text):
        ids.extend(p.strip() for p in re.split(r"[,，]", m.group(1)) if p.strip())
    return ids
