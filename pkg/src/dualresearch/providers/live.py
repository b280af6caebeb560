"""HTTP clients for a generic chat-completion endpoint and a web-search endpoint."""

from __future__ import annotations

import logging
import os
import threading

import httpx

from ..errors import ProviderRefused, ProviderTimeout, ProviderUnavailable
from .base import CompletionRequest, SearchResult, SourceEngine, check_search_args

logger = logging.getLogger(__name__)

ENV_LLM_URL = "DUALRESEARCH_LLM_URL"
ENV_LLM_KEY = "DUALRESEARCH_LLM_API_KEY"
ENV_LLM_MODEL = "DUALRESEARCH_LLM_MODEL"
ENV_SEARCH_URL = "DUALRESEARCH_SEARCH_URL"
ENV_SEARCH_KEY = "DUALRESEARCH_SEARCH_API_KEY"


class _HTTPBase:
    def __init__(self, endpoint, api_key, timeout, max_in_flight, transport=None):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._transport = transport

    def _post(self, body: dict) -> dict:
        if not self.endpoint:
            raise ProviderUnavailable("no endpoint configured")
        if not self.api_key:
            raise ProviderUnavailable("missing API key")
        headers = {"Authorization": f"Bearer {self.api_key}"}
        with self._slots:
            try:
                with httpx.Client(timeout=self.timeout, transport=self._transport) as client:
                    resp = client.post(self.endpoint, json=body, headers=headers)
            except httpx.TimeoutException as exc:
                raise ProviderTimeout(str(exc)) from exc
            except httpx.HTTPError as exc:
                raise ProviderUnavailable(str(exc)) from exc
        if resp.status_code in (401, 403):
            raise ProviderUnavailable(f"authentication rejected ({resp.status_code})")
        if not 200 <= resp.status_code < 300:
            raise ProviderRefused(f"HTTP {resp.status_code}: {resp.text[:200]}", resp.status_code)
        try:
            return resp.json()
        except ValueError as exc:
            raise ProviderRefused(f"non-JSON response body: {exc}", resp.status_code) from exc


class HTTPChatProvider(_HTTPBase):
    """OpenAI-style `/chat/completions` client; bearer token from the environment."""

    def __init__(self, endpoint=None, api_key=None, model=None, timeout=120.0,
                 max_in_flight=8, transport=None):
        super().__init__(
            endpoint or os.environ.get(ENV_LLM_URL),
            api_key if api_key is not None else os.environ.get(ENV_LLM_KEY),
            timeout,
            max_in_flight,
            transport,
        )
        self.model = model or os.environ.get(ENV_LLM_MODEL, "default")

    def complete(self, request: CompletionRequest) -> str:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        data = self._post(body)
        try:
            return data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderRefused(f"unexpected completion schema: {exc}") from exc


class HTTPSearchProvider(_HTTPBase):
    """POSTs `{"q", "num", "engine"}`; accepts `results`/`items`/`organic` lists."""

    def __init__(self, endpoint=None, api_key=None, engine=SourceEngine.GENERIC_WEB,
                 timeout=30.0, max_in_flight=8, transport=None):
        super().__init__(
            endpoint or os.environ.get(ENV_SEARCH_URL),
            api_key if api_key is not None else os.environ.get(ENV_SEARCH_KEY),
            timeout,
            max_in_flight,
            transport,
        )
        self.engine = SourceEngine(engine)

    def search(self, query: str, k: int) -> list[SearchResult]:
        check_search_args(query, k)
        data = self._post({"q": query, "num": k, "engine": self.engine.value})
        rows = data.get("results") or data.get("items") or data.get("organic") or []
        out = []
        for row in rows:
            url = row.get("url") or row.get("link")
            if not url:
                continue
            content = row.get("content") or row.get("snippet") or row.get("text") or ""
            out.append(SearchResult(url, row.get("title", ""), content, self.engine))
            if len(out) == k:
                break
        return out
