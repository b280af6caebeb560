"""Intent classification and response-style planning."""

from __future__ import annotations

import logging
import re

from .core_state import Intent, Plan, QueryContext, ResearchQuery
from .providers.base import LLMProvider
from .providers.structured import complete_structured, parse_json_object
from .templates import PromptLibrary, default_library

logger = logging.getLogger(__name__)

# Display labels used in the prompt, plus a few common variants.
_ALIASES = {
    "recommendations_suggestions": Intent.RECOMMENDATIONS,
    "recommendation": Intent.RECOMMENDATIONS,
    "how_to": Intent.HOW_TO_GUIDE,
    "howto_guide": Intent.HOW_TO_GUIDE,
    "comparison": Intent.COMPARISON_SELECTION,
    "news": Intent.NEWS_INFORMATION,
    "fact": Intent.FACT_QUERY,
    "travel": Intent.TRAVEL_PLANNING,
    "purchase": Intent.PURCHASE_DECISION,
}


def intent_key(label: str) -> str:
    key = re.sub(r"[^a-z0-9]+", "_", label.lower()).strip("_")
    return key.replace("_and_", "_")


def coerce_intent(label: str) -> Intent:
    """Map a model-supplied label onto the taxonomy; unknown labels become deep_exploration."""
    key = intent_key(str(label))
    try:
        return Intent(key)
    except ValueError:
        pass
    if key in _ALIASES:
        return _ALIASES[key]
    logger.warning("unrecognised intent %r, using deep_exploration", label)
    return Intent.DEEP_EXPLORATION


def parse_plan(raw: str, harness_mode: bool = False) -> Plan:
    obj = parse_json_object(raw)
    intent = coerce_intent(obj["intent"])
    claimed = obj.get("category")
    if claimed and intent_key(str(claimed)) != intent.category.value:
        logger.info("category %r replaced by %s (implied by intent %s)",
                    claimed, intent.category.value, intent.value)
    style = str(obj.get("response_style") or "").strip()
    if not style:
        raise ValueError("response_style is empty")
    instructions = str(obj.get("instructions") or "").strip() if harness_mode else ""
    return Plan.for_intent(intent, style, instructions)


class Planner:
    def __init__(self, provider: LLMProvider, library: PromptLibrary | None = None):
        self.provider = provider
        self.library = library or default_library()

    def plan(self, query: ResearchQuery, harness_mode: bool = False) -> Plan:
        request = self.library.request(
            "planner", {"query": query.text, "harness_mode": harness_mode}
        )
        return complete_structured(self.provider, request, lambda raw: parse_plan(raw, harness_mode))


def plan_query(query: ResearchQuery, harness_mode: bool = False, *, provider: LLMProvider,
               library: PromptLibrary | None = None) -> Plan:
    return Planner(provider, library).plan(query, harness_mode)


def fold_plan(query: ResearchQuery, plan: Plan | None) -> QueryContext:
    return QueryContext(query, plan)
