"""The critic-first research loop.

Round t rates the current outline g_t, decides whether to stop, and
otherwise produces c_{t+1} (critic) and g_{t+1} (generator). g_0 is the
empty outline and is rated 0 without a model call.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .core_state import (
    CriticState,
    GeneratorState,
    QueryContext,
    ResearchQuery,
    Trajectory,
    extract_citations,
    map_outline,
    normalize_query,
)
from .critic import Critic, RatingBreakdown
from .document_bank import (
    DEFAULT_FILTER_THRESHOLD,
    DocumentBank,
    DocumentScorer,
    ScoringContext,
    citation_rate,
    query_doc_stats,
    reindex_for_round,
)
from .errors import DualResearchError, EmptyTrajectory, MalformedOutline, ParseFailure, PipelineError, PreconditionError
from .generator import DEFAULT_NUM_SEARCHES, Generator, run_searches
from .policy_bank import PolicyBank, TraceRecord
from .providers.base import SearchProvider

logger = logging.getLogger(__name__)

LogSink = Callable[[dict], None]


@dataclass(frozen=True)
class LoopConfig:
    exit_threshold: float = 8.0
    min_rounds: int = 2
    max_rounds: int = 3
    num_searches: int = DEFAULT_NUM_SEARCHES
    filter_threshold: float = DEFAULT_FILTER_THRESHOLD
    max_workers: int = 8
    use_feedback: bool = True
    record_traces: bool = True

    def __post_init__(self):
        if not 0.0 <= self.exit_threshold <= 10.0:
            raise PreconditionError("exit_threshold must lie in [0, 10]")
        if self.min_rounds < 1 or self.max_rounds < 1:
            raise PreconditionError("min_rounds and max_rounds must be positive")
        if self.min_rounds > self.max_rounds:
            raise PreconditionError("min_rounds must not exceed max_rounds")
        if self.num_searches < 1:
            raise PreconditionError("num_searches must be positive")
        if not 0.0 <= self.filter_threshold <= 1.0:
            raise PreconditionError("filter_threshold must lie in [0, 1]")
        if self.max_workers < 1:
            raise PreconditionError("max_workers must be positive")


def should_exit(round_: int, rating: float, config: LoopConfig) -> bool:
    return (round_ >= config.min_rounds and rating >= config.exit_threshold) or round_ == config.max_rounds


@dataclass
class Agents:
    critic: Critic
    generator: Generator
    search: SearchProvider
    scorer: DocumentScorer


@dataclass
class ResearchOutcome:
    trajectory: Trajectory
    best: GeneratorState
    bank: DocumentBank
    assessments: list[RatingBreakdown] = field(default_factory=list)

    def __iter__(self) -> Iterator:
        return iter((self.trajectory, self.best, self.bank))


def select_best(trajectory: Trajectory) -> GeneratorState:
    """Highest-rated generator state; ties go to the latest round."""
    if not trajectory.ratings:
        raise EmptyTrajectory("no rated rounds in trajectory")
    best = max(range(len(trajectory.ratings)), key=lambda t: (trajectory.ratings[t], t))
    return trajectory.steps[best][1]


def blueprint_diff(prev: CriticState, new: CriticState) -> dict:
    old = {b.id: b for b in prev.blueprints}
    return {
        "added": [b.id for b in new.blueprints if b.id not in old],
        "modified": [b.id for b in new.blueprints if b.id in old and b.content != old[b.id].content],
        "kept": [b.id for b in new.blueprints if b.id in old and b.content == old[b.id].content],
    }


def _carry_forward(gen: GeneratorState, bank: DocumentBank, new_round: int) -> GeneratorState:
    """Move the citations of `gen` into the new round's id namespace."""
    bank, remap = reindex_for_round(bank, extract_citations(gen.outline), new_round)
    if not remap:
        return gen
    outline = map_outline(gen.outline, cite_fn=lambda ids: [remap.get(i, i) for i in ids])
    return GeneratorState(gen.round, outline, extract_citations(outline), gen.lint, gen.degenerate)


def run_research(
    query: ResearchQuery,
    config: LoopConfig,
    agents: Agents,
    policy_bank: Optional[PolicyBank] = None,
    query_ctx: Optional[QueryContext] = None,
    log: Optional[LogSink] = None,
) -> ResearchOutcome:
    ctx = query_ctx or QueryContext(query)
    emit = log or (lambda event: None)
    bank = DocumentBank(filter_threshold=config.filter_threshold)
    critic_state = CriticState(0, rating=0.0)
    gen_state = GeneratorState.initial()
    steps = [(critic_state, gen_state)]
    ratings: list[float] = []
    assessments: list[RatingBreakdown] = []
    history: set[str] = set()

    def partial() -> Trajectory:
        return Trajectory(query, steps, ratings, len(steps) - 1)

    t = 0
    try:
        while True:
            rate = citation_rate(gen_state.outline, bank, t)
            assessment = agents.critic.rate_outline(ctx, gen_state, rate, critic_state.blueprints, history)
            ratings.append(assessment.overall)
            assessments.append(assessment)
            emit({"event": "rating", "round": t, "citation_rate": rate, **assessment.to_dict()})
            if should_exit(t, assessment.overall, config):
                break

            feedback = None
            if policy_bank is not None and config.use_feedback:
                feedback = policy_bank.query_feedback(query.text) or None

            next_critic = agents.critic.propose_blueprints(
                ctx, gen_state, critic_state, history, feedback, assessment
            )
            history.update(normalize_query(q) for q in next_critic.queries)

            carried = _carry_forward(gen_state, bank, t + 1)
            context = ScoringContext(ctx.text, next_critic.blueprints, carried.outline)
            run_searches(next_critic, bank, t + 1, config.num_searches, agents.search,
                         agents.scorer, context, config.max_workers)
            stats = query_doc_stats(bank, next_critic.queries)
            if policy_bank is not None and config.record_traces:
                policy_bank.record_trace(TraceRecord(query.text, t + 1, next_critic, gen_state, tuple(stats)))

            try:
                next_gen = agents.generator.generate_outline(ctx, carried, next_critic, bank, assessment)
            except (MalformedOutline, ParseFailure) as exc:
                logger.warning("round %d: outline generation failed (%s); keeping previous outline", t + 1, exc)
                next_gen = GeneratorState(t + 1, carried.outline, carried.reference_ids,
                                          carried.lint, degenerate=True)

            round_ids = bank.round_ids(t + 1)
            emit({
                "event": "round",
                "round": t + 1,
                "blueprint_diff": blueprint_diff(critic_state, next_critic),
                "queries": list(next_critic.queries),
                "doc_counts": {
                    "round": len(round_ids),
                    "archived": sum(1 for i in round_ids if bank.get(i).archived),
                    "visible_total": len(bank.visible()),
                },
                "references": len(next_gen.reference_ids),
                "degenerate": next_gen.degenerate,
                "lint": list(next_gen.lint),
                "query_lint": agents.critic.query_lint(next_critic),
            })
            steps.append((next_critic, next_gen))
            critic_state, gen_state = next_critic, next_gen
            t += 1
    except PipelineError:
        raise
    except DualResearchError as exc:
        raise PipelineError(f"research aborted in round {t}: {exc}", partial=partial()) from exc

    trajectory = partial()
    return ResearchOutcome(trajectory, select_best(trajectory), bank, assessments)
