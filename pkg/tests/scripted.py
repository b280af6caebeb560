"""Scripted agents and random inputs shared by several test modules."""

import json
import random

from dualresearch.core_state import OutlineNode, make_doc_id
from dualresearch.document_bank import DocumentBank, DocumentRecord
from dualresearch.providers import ScriptedProvider


def doc(doc_id, url=None, score=0.9):
    return DocumentRecord(doc_id, 1, int(doc_id.rsplit("_", 1)[1]), url or f"https://ex/{doc_id}",
                          f"title {doc_id}", "raw", f"summary {doc_id}", "summary", (), score, "q")


def bank_with(n, round_=1):
    bank = DocumentBank()
    for i in range(n):
        bank.add(doc(make_doc_id(round_, i)))
    return bank


def declarative(heading):
    return "On " + heading.rstrip("?？").strip()


def writer_provider(rewrites=None, section_fn=None):
    """Rewrites questions via `rewrites` (else a fixed prefix) and echoes the expected headings."""
    rewrites = rewrites or {}

    def respond(request):
        if request.task == "heading_rewrite":
            h = request.payload["heading"]
            return json.dumps({"heading": rewrites.get(h, declarative(h))})
        if section_fn is not None:
            return section_fn(request)
        lines = []
        ids = [d["id"] for d in request.payload["documents"]]
        for k, (level, heading) in enumerate(request.payload["headings"]):
            lines.append("#" * level + " " + heading)
            cite = f" <cite>{ids[k % len(ids)]}</cite>" if ids else ""
            lines.append(f"Paragraph {k}.{cite}")
        return "\n".join(lines)

    return ScriptedProvider(respond)


def random_outline(rng: random.Random, n_docs: int, max_children=4, question_rate=0.4):
    counter = iter(range(10**6))

    def heading():
        text = f"Heading {next(counter)}"
        return text + "?" if rng.random() < question_rate else text

    def build(level):
        children = ()
        if level < 4:
            k = rng.randint(0, max_children if level > 1 else max(1, max_children))
            children = tuple(build(level + 1) for _ in range(k))
        cites = tuple(make_doc_id(1, rng.randrange(n_docs)) for _ in range(rng.randint(0, 2))) if n_docs else ()
        return OutlineNode(level, heading(), children, tuple(dict.fromkeys(cites)))

    return build(1)


def loop_agents(ratings, queries_per_round=(), generator_fn=None, search=None):
    """Agents whose critic rates round t (t >= 1) as ratings[t-1].

    Blueprints carry `queries_per_round[t]` queries (none by default), so
    no search or document scoring happens unless asked for.
    """
    from dualresearch.critic import DIMENSIONS, Critic
    from dualresearch.document_bank import DocumentScorer
    from dualresearch.generator import Generator, LintConfig
    from dualresearch.research_loop import Agents

    state = {"rated": 0, "proposed": 0, "drafted": 0}

    def critic_fn(request):
        if request.task == "critic_rating":
            r = ratings[state["rated"]]
            state["rated"] += 1
            return json.dumps({"dimensions": dict.fromkeys(DIMENSIONS, r), "justification": f"r{r}"})
        t = state["proposed"]
        state["proposed"] += 1
        qs = list(queries_per_round[t]) if t < len(queries_per_round) else []
        return json.dumps({"blueprints": [{"id": "", "content": "main topic", "search_query": qs}]})

    def gen_fn(request):
        state["drafted"] += 1
        if generator_fn is not None:
            return generator_fn(request, state["drafted"])
        ids = [d["id"] for d in request.payload["documents"]][:3]
        cite = f" <cite>{', '.join(ids)}</cite>" if ids else ""
        return f"# Outline {state['drafted']}\n## Part{cite}"

    def score_fn(request):
        return json.dumps({"score": 0.8, "summary": "s " + request.payload["title"]})

    class NoSearch:
        def search(self, query, k):
            return []

    return Agents(
        critic=Critic(ScriptedProvider(critic_fn)),
        generator=Generator(ScriptedProvider(gen_fn), lint=LintConfig(citation_target=0)),
        search=search or NoSearch(),
        scorer=DocumentScorer(ScriptedProvider(score_fn)),
    ), state


class LevelScorer:
    """A harness scorer whose search_coverage is whatever `level` currently says."""

    def __init__(self, level=5.0, fail_on=()):
        self.level = level
        self.fail_on = set(fail_on)
        self.calls = 0

    def score_run(self, query_ctx, critic_state, stats, allow_empty=False):
        from dualresearch.errors import ProviderUnavailable
        from dualresearch.metrics import HarnessScore

        self.calls += 1
        if query_ctx.query.text in self.fail_on:
            raise ProviderUnavailable("judge down")
        return HarnessScore.from_scores(6, 6, self.level, 6)
