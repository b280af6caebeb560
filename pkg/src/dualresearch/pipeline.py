"""Wires providers, prompts and settings into the agents of one research run."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .config import Settings
from .core_state import Plan, QueryContext, ResearchQuery
from .critic import Critic
from .document_bank import DocumentScorer
from .errors import ConfigError, PreconditionError
from .evaluator import Evaluator
from .generator import Generator, LintConfig
from .planner import Planner
from .policy_bank import PolicyBank
from .providers.base import LLMProvider, SearchProvider, SourceEngine
from .providers.heuristic import HeuristicLLM
from .providers.live import HTTPChatProvider, HTTPSearchProvider
from .providers.mock import CANNED_FILE, CannedProvider, FixtureSearch
from .research_loop import Agents, LogSink, ResearchOutcome, run_research
from .templates import PromptLibrary
from .writer import Writer

logger = logging.getLogger(__name__)

ROLES = ("planner", "critic", "generator", "writer", "judge")


@dataclass
class Providers:
    """One LLM per role plus the search backend.

    The generator's model also scores documents and, in the harness, scores
    whole runs.
    """

    planner: LLMProvider
    critic: LLMProvider
    generator: LLMProvider
    writer: LLMProvider
    judge: LLMProvider
    search: SearchProvider

    @classmethod
    def single(cls, llm: LLMProvider, search: SearchProvider) -> "Providers":
        return cls(llm, llm, llm, llm, llm, search)


def build_providers(settings: Settings) -> Providers:
    if settings.provider == "mock":
        if not settings.mock_dir:
            raise ConfigError("mock provider needs a fixture directory (--mock DIR or mock_dir)")
        root = Path(settings.mock_dir)
        if not root.is_dir():
            raise ConfigError(f"mock fixture directory not found: {root}")
        llm: LLMProvider = HeuristicLLM()
        if (root / CANNED_FILE).exists():
            llm = CannedProvider.from_file(root / CANNED_FILE, fallback=llm)
        return Providers.single(llm, FixtureSearch.from_dir(root))
    chats = {
        role: HTTPChatProvider(model=settings.model_for(role), timeout=settings.request_timeout,
                               max_in_flight=settings.max_in_flight)
        for role in ROLES
    }
    engine = SourceEngine(settings.search_engine)
    if engine is SourceEngine.MOCK:
        raise ConfigError("search_engine 'mock' requires the mock provider")
    search = HTTPSearchProvider(engine=engine, max_in_flight=settings.max_in_flight)
    return Providers(search=search, **chats)


@dataclass
class ResearchRun:
    plan: Plan
    context: QueryContext
    outcome: ResearchOutcome


class Pipeline:
    def __init__(self, providers: Providers, settings: Settings,
                 library: Optional[PromptLibrary] = None):
        self.providers = providers
        self.settings = settings
        self.library = library or PromptLibrary()
        self.planner = Planner(providers.planner, self.library)
        self.critic = Critic(
            providers.critic, self.library, settings.search_engine,
            settings.max_blueprints_len, settings.max_query_len,
            settings.min_query_per_blueprint, settings.min_query_len,
        )
        self.generator = Generator(
            providers.generator, self.library,
            LintConfig(settings.min_sections, settings.max_sections, settings.citation_target),
        )
        self.scorer = DocumentScorer(providers.generator, self.library)
        self.evaluator = Evaluator(providers.judge, self.library)

    @property
    def agents(self) -> Agents:
        return Agents(self.critic, self.generator, self.providers.search, self.scorer)

    def writer(self) -> Writer:
        return Writer(self.providers.writer, self.library,
                      context_budget=self.settings.writer_context_budget)

    def research(self, query: ResearchQuery, policy_bank: Optional[PolicyBank] = None,
                 log: Optional[LogSink] = None, harness_mode: bool = False,
                 **loop_overrides) -> ResearchRun:
        plan = self.planner.plan(query, harness_mode=harness_mode)
        ctx = QueryContext(query, plan)
        if log:
            log({"event": "plan", **plan.to_dict()})
        outcome = run_research(query, self.settings.loop_config(**loop_overrides), self.agents,
                               policy_bank, ctx, log)
        return ResearchRun(plan, ctx, outcome)

    def write(self, run: ResearchRun):
        best = run.outcome.best
        if best.outline is None:
            raise PreconditionError("no non-empty outline was produced")
        blueprints = run.outcome.trajectory.steps[-1][0].blueprints
        return self.writer().write_report(run.context, best, run.outcome.bank, blueprints)
