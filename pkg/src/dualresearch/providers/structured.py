"""Pull JSON out of chatty model output, retrying the completion on failure."""

from __future__ import annotations

import json
import logging
import re
from typing import Callable, TypeVar

from ..errors import ParseFailure
from .base import CompletionRequest, LLMProvider

logger = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_RETRIES = 2

_FENCE_RE = re.compile(r"```[\w+-]*[ \t]*\n?(.*?)```", re.DOTALL)


def strip_code_fences(text: str) -> str:
    """Return the contents of the first fenced block, or the text unchanged."""
    m = _FENCE_RE.search(text)
    return m.group(1).strip() if m else text.strip()


def find_balanced(text: str, opener: str = "{") -> str | None:
    """First balanced top-level `{...}` (or `[...]`) span, string-literal aware."""
    closer = {"{": "}", "[": "]"}[opener]
    start = text.find(opener)
    while start != -1:
        depth = 0
        in_str = False
        escape = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_str:
                if escape:
                    escape = False
                elif ch == "\\":
                    escape = True
                elif ch == '"':
                    in_str = False
                continue
            if ch == '"':
                in_str = True
            elif ch == opener:
                depth += 1
            elif ch == closer:
                depth -= 1
                if depth == 0:
                    return text[start : i + 1]
        start = text.find(opener, start + 1)
    return None


def _parse(text: str, opener: str, kind: type):
    for candidate in (strip_code_fences(text), text):
        span = find_balanced(candidate, opener)
        if span is None:
            continue
        try:
            value = json.loads(span)
        except json.JSONDecodeError:
            continue
        if isinstance(value, kind):
            return value
    raise ParseFailure(f"no JSON {kind.__name__} found in model output", raw=text)


def parse_json_object(text: str) -> dict:
    return _parse(text, "{", dict)


def parse_json_array(text: str) -> list:
    return _parse(text, "[", list)


def complete_structured(
    provider: LLMProvider,
    request: CompletionRequest,
    parse: Callable[[str], T],
    retries: int = DEFAULT_RETRIES,
) -> T:
    """Call the provider and parse; re-ask up to `retries` times on bad output.

    `parse` may raise ParseFailure, ValueError, KeyError or TypeError to signal
    a non-conforming answer.
    """
    last_raw = None
    last_err: Exception | None = None
    for attempt in range(retries + 1):
        raw = provider.complete(request)
        last_raw = raw
        try:
            return parse(raw)
        except (ParseFailure, ValueError, KeyError, TypeError) as exc:
            last_err = exc
            logger.warning("%s: unparseable output (attempt %d/%d): %s",
                           request.task or "completion", attempt + 1, retries + 1, exc)
    raise ParseFailure(f"{request.task or 'completion'}: output did not conform after "
                       f"{retries + 1} attempts: {last_err}", raw=last_raw)
