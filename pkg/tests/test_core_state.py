import pytest
from hypothesis import given, settings, strategies as st

from dualresearch.core_state import (
    Blueprint, Category, CriticState, GeneratorState, Intent, OutlineNode, Plan, QueryContext,
    Report, ResearchQuery, Trajectory, dedupe_queries, extract_citations, heading_sequence,
    is_interrogative, make_doc_id, map_outline, normalize_query, parse_outline, serialize_outline,
    split_doc_id, unknown_cite_ids,
)
from dualresearch.errors import MalformedOutline, PreconditionError


def test_parse_heading_cites_split_and_trimmed():
    outline = parse_outline("# T\n## C1 Answer <cite>turn_0_4, turn_1_8</cite>")
    assert outline.heading == "T"
    assert len(outline.children) == 1
    child = outline.children[0]
    assert child.heading == "C1 Answer"
    assert child.cite_ids == ("turn_0_4", "turn_1_8")


def test_parse_empty_is_sentinel():
    assert parse_outline("") is None
    assert parse_outline("   \n\n") is None
    assert extract_citations(None) == ()


def test_empty_outline_differs_from_childless_root():
    root = parse_outline("# Only a title")
    assert root is not None and root.is_leaf


@pytest.mark.parametrize("text", [
    "# T\n#### X",
    "# T\n## A\n#### B",
    "# A\n# B",
    "# T\n## A <cite>turn_0_1",
    "## no root",
    "# T\n##### too deep",
])
def test_parse_rejects_malformed(text):
    with pytest.raises(MalformedOutline):
        parse_outline(text)


def test_body_cites_are_recorded_with_position():
    outline = parse_outline("# T <cite>turn_0_1</cite>\nsome text <cite>turn_0_2</cite>\n## A")
    assert outline.cite_ids == ("turn_0_1",)
    assert outline.body_cite_ids == ("turn_0_2",)
    assert extract_citations(outline) == ("turn_0_1", "turn_0_2")


def test_extract_citations_dedup_first_occurrence():
    outline = parse_outline("# T <cite>a</cite>\n## X <cite>b</cite>\n## Y <cite>a</cite>")
    assert extract_citations(outline) == ("a", "b")


def test_extract_citations_preorder_oracle():
    outline = parse_outline(
        "# R <cite>turn_0_1, turn_0_2</cite>\n## A <cite>turn_0_3, turn_0_4</cite>\n"
        "### A1 <cite>turn_0_5, turn_0_6</cite>"
    )
    oracle = []
    stack = [outline]
    while stack:
        node = stack.pop()
        oracle.extend(node.cite_ids)
        stack.extend(reversed(node.children))
    assert list(extract_citations(outline)) == oracle
    assert len(oracle) == 6


def test_unknown_format_ids_kept_and_flagged():
    outline = parse_outline("# T <cite>turn_0_1, weird-id</cite>")
    assert outline.cite_ids == ("turn_0_1", "weird-id")
    assert unknown_cite_ids(outline) == ("weird-id",)


def test_doc_id_helpers():
    assert make_doc_id(1, 8) == "turn_1_8"
    assert split_doc_id("turn_1_8") == (1, 8)
    assert split_doc_id("doc-3") is None


def test_interrogative_marks():
    assert is_interrogative("Why?")
    assert is_interrogative("为什么？ ")
    assert not is_interrogative("Overview")


def test_normalize_query_idempotent_examples():
    assert normalize_query("  Elderly   HOUSING \t japan ") == "elderly housing japan"


@given(st.text())
def test_normalize_query_idempotent(text):
    once = normalize_query(text)
    assert normalize_query(once) == once


def test_blueprint_invariants():
    with pytest.raises(PreconditionError):
        Blueprint("b1", "   ")
    with pytest.raises(PreconditionError):
        Blueprint("b1", "Topic", ("Elderly housing", "elderly  HOUSING"))
    bp = Blueprint("b1", "Topic", ("a b", "c d"))
    assert Blueprint.from_dict(bp.to_dict()) == bp
    assert bp.to_dict()["search_query"] == ["a b", "c d"]


def test_dedupe_queries():
    assert dedupe_queries(["A  b", "a b", "", "c"], exclude=["C"]) == ("A b",)


def test_critic_state_invariants():
    with pytest.raises(PreconditionError):
        CriticState(0, (Blueprint("b", "x"), Blueprint("b", "y")))
    with pytest.raises(PreconditionError):
        CriticState(1, rating=10.5)
    with pytest.raises(PreconditionError):
        CriticState(-1)
    state = CriticState(2, (Blueprint("b1", "x", ("q1 a",)),), 7.5, "ok")
    assert CriticState.from_dict(state.to_dict()) == state
    assert state.ids == ("b1",) and state.queries == ("q1 a",)


def test_plan_category_must_match_intent():
    with pytest.raises(PreconditionError):
        Plan(Category.INFORMATION_SEEKING, Intent.TRAVEL_PLANNING, "style")
    plan = Plan.for_intent(Intent.TRAVEL_PLANNING, "Day by day")
    assert plan.category is Category.DECISION_MAKING


def test_query_context_folds_plan_verbatim():
    q = ResearchQuery("Where to go in Kyoto?")
    plan = Plan.for_intent(Intent.TRAVEL_PLANNING, "Give a day-by-day itinerary.", "search per day")
    text = QueryContext(q, plan).text
    assert text.endswith(q.text)
    assert "Give a day-by-day itinerary." in text
    assert "search per day" in text
    assert QueryContext(q).text == q.text


def test_research_query_requires_text():
    with pytest.raises(PreconditionError):
        ResearchQuery("  ")


def test_generator_state_reference_closure():
    outline = parse_outline("# T <cite>turn_0_1</cite>")
    with pytest.raises(PreconditionError):
        GeneratorState(1, outline, ())
    state = GeneratorState(1, outline, ("turn_0_1",))
    assert GeneratorState.from_dict(state.to_dict()) == state
    initial = GeneratorState.initial()
    assert initial.is_empty and initial.reference_ids == () and initial.round == 0


def test_trajectory_round_contiguity():
    g0 = GeneratorState.initial()
    c0 = CriticState(0, rating=0.0)
    t = Trajectory(ResearchQuery("q"), ((c0, g0),), (0.0,), 0)
    assert t.terminal_round == 0
    with pytest.raises(PreconditionError):
        Trajectory(ResearchQuery("q"), ((c0, g0), (c0, g0)), (0.0,), 1)


def test_report_citation_closure():
    Report((("A", "x <cite>turn_0_1</cite>"),), "x <cite>turn_0_1</cite>", {"turn_0_1": "u"})
    with pytest.raises(PreconditionError):
        Report((), "x <cite>turn_0_2</cite>", {"turn_0_1": "u"})


def test_map_outline_rewrites_headings_and_body_cites():
    outline = parse_outline("# T\n## Why? <cite>a, b</cite>\nbody <cite>b</cite>")
    mapped = map_outline(outline, heading_fn=lambda n: n.heading.rstrip("?"),
                         cite_fn=lambda ids: [i for i in ids if i != "b"])
    assert heading_sequence(mapped) == [(1, "T"), (2, "Why")]
    assert mapped.children[0].cite_ids == ("a",)
    assert mapped.children[0].body == ("body",)


# -- round trip ------------------------------------------------------------

_word = st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=8)
_heading = st.lists(_word, min_size=1, max_size=4).map(" ".join).map(lambda s: s.capitalize())
_cite = st.builds(lambda r, i: f"turn_{r}_{i}", st.integers(0, 5), st.integers(0, 99))
_body = st.lists(_word, min_size=1, max_size=6).map(" ".join)


def _nodes(level):
    children = st.just(()) if level == 4 else st.lists(_nodes(level + 1), max_size=2).map(tuple)
    return st.builds(
        OutlineNode,
        st.just(level),
        _heading,
        children,
        st.lists(_cite, max_size=3, unique=True).map(tuple),
        st.lists(_body, max_size=2).map(tuple),
    )


@settings(max_examples=150, deadline=None)
@given(_nodes(1))
def test_parse_serialize_round_trip(outline):
    text = serialize_outline(outline)
    assert parse_outline(text) == outline
    assert serialize_outline(parse_outline(text)) == text


@settings(max_examples=100, deadline=None)
@given(_nodes(1))
def test_extract_citations_bounded_by_node_ids(outline):
    ids = extract_citations(outline)
    all_ids = [i for n in outline.walk() for i in n.cite_ids + n.body_cite_ids]
    assert set(ids) <= set(all_ids)
    assert len(ids) <= len(all_ids)
    assert len(set(ids)) == len(ids)
