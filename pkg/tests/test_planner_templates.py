import json

import pytest

from dualresearch.core_state import Category, Intent, ResearchQuery
from dualresearch.errors import ParseFailure
from dualresearch.planner import coerce_intent, fold_plan, parse_plan, plan_query
from dualresearch.providers import HeuristicLLM, SequenceProvider
from dualresearch.templates import TASKS, PromptLibrary, package_template_files

Q = ResearchQuery("What do elderly people in Japan spend money on?")


def test_comparison_signal_maps_to_comparison_selection():
    plan = plan_query(ResearchQuery("X vs Y, which is better?"), provider=HeuristicLLM())
    assert plan.intent is Intent.COMPARISON_SELECTION
    assert plan.category is Category.DECISION_MAKING
    assert plan.response_style


def test_fixed_conforming_object_passes_through():
    raw = json.dumps({"category": "information_seeking", "intent": "fact_query",
                      "response_style": "Lead with the number.", "instructions": "ignored"})
    plan = plan_query(Q, provider=SequenceProvider([raw]))
    assert plan.to_dict() == {"category": "information_seeking", "intent": "fact_query",
                              "response_style": "Lead with the number.", "instructions": ""}


def test_harness_mode_keeps_instructions():
    raw = json.dumps({"intent": "how_to_guide", "response_style": "Steps.", "instructions": "tips"})
    plan = plan_query(Q, harness_mode=True, provider=SequenceProvider([raw]))
    assert plan.instructions == "tips"


def test_display_label_with_wrong_category_is_coerced():
    raw = json.dumps({"category": "information_seeking", "intent": "Travel Planning",
                      "response_style": "Day by day."})
    plan = parse_plan(raw)
    assert (plan.category, plan.intent) == (Category.DECISION_MAKING, Intent.TRAVEL_PLANNING)


@pytest.mark.parametrize("intent", list(Intent))
def test_taxonomy_lookup_oracle(intent):
    display = intent.value.replace("_", " ").title()
    assert coerce_intent(display) is intent
    assert coerce_intent(intent.value) is intent


def test_unknown_intent_defaults_to_deep_exploration(caplog):
    assert coerce_intent("astrology") is Intent.DEEP_EXPLORATION
    assert "unrecognised intent" in caplog.text


def test_nonconforming_output_raises_parse_failure():
    with pytest.raises(ParseFailure):
        plan_query(Q, provider=SequenceProvider(['{"intent": "fact_query"}']))


def test_fold_contains_style_verbatim():
    plan = plan_query(Q, provider=HeuristicLLM())
    ctx = fold_plan(Q, plan)
    assert plan.response_style in ctx.text and ctx.text.endswith(Q.text)


# -- templates ------------------------------------------------------------------

def test_every_task_has_a_template_pair():
    names = {p.name for p in package_template_files()}
    for task in TASKS:
        assert f"{task}.system.j2" in names and f"{task}.user.j2" in names


def test_override_directory_shadows_single_file(tmp_path):
    (tmp_path / "planner.user.j2").write_text("OVERRIDE {{ query }}")
    system, user = PromptLibrary(tmp_path).render("planner", query="q", harness_mode=False)
    assert user == "OVERRIDE q"
    assert system == PromptLibrary().render("planner", query="q", harness_mode=False)[0]


def test_missing_variable_is_an_error():
    import jinja2

    with pytest.raises(jinja2.UndefinedError):
        PromptLibrary().render("planner")


def test_critic_prompt_engine_variants_and_feedback_slot():
    lib = PromptLibrary()
    base = dict(query="q", outline="# T", blueprints=[], history_queries=[], justification="",
                response_style="",
                max_blueprints_len=10, max_query_len=5)
    web = lib.render("critic_blueprints", search_engine="generic_web", feedback="", **base)
    red = lib.render("critic_blueprints", search_engine="rednote", feedback="", **base)
    assert web != red
    with_fb = lib.render("critic_blueprints", search_engine="generic_web",
                         feedback="## High-effectiveness queries (1, x)", **base)[1]
    assert "Historical Search Query Effectiveness Feedback" in with_fb
    assert "## High-effectiveness queries" in with_fb
