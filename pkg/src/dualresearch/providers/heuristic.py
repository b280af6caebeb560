"""A rule-based stand-in for every model role.

`HeuristicLLM` reads the structured payload that accompanies each rendered
prompt and answers with deterministic text in the format the real prompt
asks for. It exists so the whole pipeline can run offline and reproducibly;
its outputs are plausible rather than good.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter

from ..errors import ProviderRefused
from .base import CompletionRequest
from .mock import content_tokens

_PLAN_BLOCK_RE = re.compile(r"^```plan\n.*?\n```\n?", re.DOTALL)
_CITE_RE = re.compile(r"<cite>(.*?)</cite>")
_HEADING_LINE_RE = re.compile(r"^(#{1,6})\s+(.*)$")

FACETS = (
    "overview",
    "population",
    "spending",
    "housing",
    "food",
    "clothing",
    "transport",
    "healthcare",
    "finance",
    "outlook",
    "policy",
    "technology",
)
QUERY_MODIFIERS = ("", "statistics", "trends", "analysis", "cases", "survey", "forecast")

INTENT_RULES = (
    (("vs", "versus", "compare", "comparison", "difference between", " or "), "Comparison & Selection"),
    (("should i buy", "worth buying", "worth it", "how much does", "price of"), "Purchase Decision"),
    (("recommend", "best ", "top ", "what's a good"), "Recommendations"),
    (("how to", "how do i", "tutorial", "step by step", "getting started"), "How-to Guide"),
    (("itinerary", "travel", "trip", " days in "), "Travel Planning"),
    (("latest", "update", "progress", "status of"), "Status & Progress"),
    (("news", "this week", "headlines"), "News & Information"),
    (("official site", "official website", "documentation", "github", "download"), "Resource Locating"),
    (("what is", "what does", "define", "meaning of"), "Fact Query"),
)
RESPONSE_STYLES = {
    "Comparison & Selection": "Open with a one-line verdict, then a table of the deciding factors.",
    "Purchase Decision": "Open with whether to buy, who it suits and the main reason, then a product table.",
    "Recommendations": "Open with the top pick, runner-up and best value, then compare them.",
    "How-to Guide": "Open with prerequisites, core steps and time needed, then detail each step.",
    "Travel Planning": "Open with a short overview, then a day-by-day plan.",
    "Status & Progress": "Open with a dated timeline of recent changes.",
    "News & Information": "Open with the main headlines, newest first.",
    "Resource Locating": "Open with the key links, then further resources.",
    "Fact Query": "Open with a precise definition and the key points.",
    "Deep Exploration": "Open with a short framing of the topic and why it matters now, then cover each angle.",
}
TOPIC_RULES = (
    (("stock", "invest", "market", "finance", "bank", "pension", "savings", "business", "consumption", "spending"), "Finance & Business"),
    (("travel", "itinerary", "trip", "hotel", "kyoto", "tour"), "Travel"),
    (("python", "code", "programming", "api", "software development", "compiler"), "Software Development"),
    (("health", "hospital", "medical", "disease", "care", "diet"), "Health"),
    (("recipe", "restaurant", "food", "dining", "cuisine"), "Food & Dining"),
    (("game", "gaming", "console"), "Games"),
    (("fashion", "beauty", "skincare", "makeup", "clothing"), "Fashion & Beauty"),
    (("law", "court", "crime", "legal"), "Crime & Law"),
    (("job", "career", "school", "university", "education"), "Education & Jobs"),
    (("history", "dynasty", "ancient"), "History"),
    (("sofa", "furniture", "apartment", "home", "renovation", "hobby"), "Home & Hobbies"),
    (("car", "train", "transport", "flight", "commute"), "Transportation"),
    (("movie", "music", "celebrity", "show"), "Entertainment"),
    (("fitness", "sport", "running", "gym"), "Sports & Fitness"),
    (("cpu", "gpu", "hardware", "chip", "laptop"), "Hardware"),
)
QUESTION_REWRITES = (
    (re.compile(r"^why choose (.+)$", re.I), "The basis for selecting {0}"),
    (re.compile(r"^how to (.+)$", re.I), "The approach to {0}"),
    (re.compile(r"^why (?:is|are|do|does|did) (.+)$", re.I), "Reasons {0}"),
    (re.compile(r"^why (.+)$", re.I), "Reasons for {0}"),
    (re.compile(r"^what (?:is|are) (.+)$", re.I), "Overview of {0}"),
    (re.compile(r"^how (?:large|big) (?:is|are) (.+)$", re.I), "The size of {0}"),
    (re.compile(r"^how (?:does|do|did|can|will) (.+)$", re.I), "How {0}"),
    (re.compile(r"^which (.+)$", re.I), "Choosing {0}"),
    (re.compile(r"^(?:is|are|can|should|will|does|do) (.+)$", re.I), "Assessment of whether {0}"),
)


def bare_query(text: str) -> str:
    return _PLAN_BLOCK_RE.sub("", text).strip()


def topic_terms(query: str, n: int = 4) -> str:
    seen = []
    for tok in content_tokens(bare_query(query)):
        if tok not in seen and len(tok) > 2:
            seen.append(tok)
    return " ".join(seen[:n]) or "topic"


def _json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


def _outline_stats(outline: str) -> dict:
    lines = [l for l in outline.splitlines() if l.strip()]
    heads = [(len(m.group(1)), m.group(2)) for m in map(_HEADING_LINE_RE.match, lines) if m]
    cites = [i.strip() for l in lines for c in _CITE_RE.findall(l) for i in c.split(",") if i.strip()]
    chapters = sum(1 for lvl, _ in heads if lvl == 2)
    deeper = sum(1 for lvl, _ in heads if lvl >= 3)
    return {"chapters": chapters, "deeper": deeper, "cites": len(cites),
            "unique": len(set(cites)), "depth": max((lvl for lvl, _ in heads), default=0),
            "first": next((h for lvl, h in heads if lvl == 2), ""), "text": outline.lower()}


class HeuristicLLM:
    def complete(self, request: CompletionRequest) -> str:
        handler = getattr(self, f"_{request.task}", None)
        if handler is None:
            raise ProviderRefused(f"heuristic model has no rule for task {request.task!r}")
        return handler(request.payload)

    # -- planning ------------------------------------------------------------

    def _planner(self, p) -> str:
        q = " " + bare_query(p["query"]).lower() + " "
        intent = "Deep Exploration"
        for signals, label in INTENT_RULES:
            if any(s in q for s in signals):
                intent = label
                break
        out = {"intent": intent, "response_style": RESPONSE_STYLES[intent]}
        if p.get("harness_mode"):
            out["instructions"] = "Pair the core topic words with one concrete facet per query."
        return _json(out)

    # -- critic --------------------------------------------------------------

    def _critic_rating(self, p) -> str:
        st = _outline_stats(p["outline"])
        if not st["chapters"]:
            dims = dict.fromkeys(("instruction_adherence", "content_depth", "perspective_balance",
                                  "coverage_breadth", "evidence_support", "insight_value",
                                  "structural_logic"), 0.0)
            return _json({"dimensions": dims, "overall": 0, "justification": "The outline is empty."})
        words = {t for bp in p.get("blueprints", ()) for t in content_tokens(bp["content"])}
        covered = sum(1 for w in words if w in st["text"]) / len(words) if words else 0.5
        preamble = st["first"].lower().split(" ", 2)[-1].startswith(("background", "introduction", "executive"))
        rate = float(p.get("citation_rate", 0.0))
        dims = {
            "instruction_adherence": min(10.0, 6.0 + 2.0 * covered + (0.0 if preamble else 1.5)),
            "content_depth": min(10.0, 3.0 + 1.2 * st["deeper"] / max(st["chapters"], 1) + 0.5 * st["depth"]),
            "perspective_balance": min(10.0, 5.0 + 3.0 * covered),
            "coverage_breadth": min(10.0, 10.0 * st["chapters"] / 8.0),
            "evidence_support": min(10.0, 2.0 + 4.0 * rate + st["unique"] / 4.0),
            "insight_value": min(10.0, 4.0 + st["unique"] / 6.0 + 0.3 * st["chapters"]),
            "structural_logic": min(10.0, 5.0 + st["depth"]),
        }
        dims = {k: round(v, 2) for k, v in dims.items()}
        weakest = min(dims, key=dims.get)
        return _json({
            "dimensions": dims,
            "overall": round(sum(dims.values()) / len(dims), 1),
            "justification": f"Weakest dimension is {weakest}; add chapters and cite more documents.",
        })

    def _critic_blueprints(self, p) -> str:
        topic = topic_terms(p["query"])
        history = set(p.get("history_queries", ()))
        max_bp = int(p.get("max_blueprints_len", 10))
        max_q = int(p.get("max_query_len", 5))
        per_bp = min(2, max_q)
        prev = list(p.get("blueprints", ()))
        used = {bp["content"] for bp in prev}
        items = [{"id": bp["id"], "content": bp["content"]} for bp in prev]
        new_count = 4 if not prev else 2
        for facet in FACETS:
            if new_count == 0 or len(items) >= max_bp:
                break
            content = f"{facet.capitalize()} of {topic}"
            if content in used:
                continue
            items.append({"id": "", "content": content})
            new_count -= 1
        for item in items:
            facet = item["content"].split(" of ", 1)[0].lower()
            queries = []
            for mod in QUERY_MODIFIERS:
                q = " ".join(x for x in (topic, facet, mod) if x)
                if q not in history:
                    queries.append(q)
                if len(queries) == per_bp:
                    break
            item["search_query"] = queries
        return _json({"blueprints": items})

    # -- documents -----------------------------------------------------------

    def _doc_score(self, p) -> str:
        doc = set(content_tokens(p["title"] + " " + p["content"]))
        sq = set(content_tokens(p["search_query"]))
        qt = set(content_tokens(bare_query(p["query"])))
        s = len(sq & doc) / len(sq) if sq else 0.0
        q = len(qt & doc) / len(qt) if qt else 0.0
        score = round(max(s, 0.8 * q) ** 1.5, 3)
        first = re.split(r"(?<=[.!?])\s", p["content"].strip(), maxsplit=1)[0]
        evidence = [[p["title"], "reports", first[:80]]] if score > 0 else []
        return _json({"score": score, "summary": first[:240], "evidence": evidence})

    # -- generator -----------------------------------------------------------

    def _generator(self, p) -> str:
        docs = list(p.get("documents", ()))
        topic = topic_terms(p["query"], 6)
        doc_tokens = {d["id"]: set(content_tokens(d["title"] + " " + d["summary"])) for d in docs}

        order = {d["id"]: n for n, d in enumerate(docs)}
        source = {d["id"]: d.get("url") or d["id"] for d in docs}
        used_sources: set = set()

        def pick(text: str, n: int, exclude: set, focus: str = "") -> list[str]:
            """Best-overlapping documents, one per source; focus terms count double."""
            want, key = set(content_tokens(text)), set(content_tokens(focus))
            ranked = sorted(
                (d["id"] for d in docs if d["id"] not in exclude and source[d["id"]] not in used_sources),
                key=lambda i: (-(len(want & doc_tokens[i]) + 2 * len(key & doc_tokens[i])), order[i]),
            )
            chosen = []
            for i in ranked:
                if len(chosen) == n or not want & doc_tokens[i] or source[i] in used_sources:
                    continue
                chosen.append(i)
                used_sources.add(source[i])
            return chosen

        def cite(ids) -> str:
            return f" <cite>{', '.join(ids)}</cite>" if ids else ""

        lines = [f"# Research report on {topic}"]
        used: set[str] = set()
        head = pick(topic, 3, used)
        used.update(head)
        lines.append(f"## Chapter 1 Core findings on {topic}")
        lines.append(f"### 1.1 Main answer{cite(head)}")
        extra = pick(topic, 2, used)
        used.update(extra)
        lines.append(f"### 1.2 Key figures{cite(extra)}")
        for n, bp in enumerate(p.get("blueprints", ()), start=2):
            content = bp["content"]
            facet = content.split(" of ", 1)[0]
            a = pick(content, 2, used, facet)
            used.update(a)
            b = pick(content, 2, used, facet)
            used.update(b)
            lines.append(f"## Chapter {n} {content}")
            lines.append(f"### {n}.1 Evidence on {facet.lower()}{cite(a)}")
            lines.append(f"### {n}.2 What drives {facet.lower()}?{cite(b)}")
        return "\n".join(lines)

    # -- writer --------------------------------------------------------------

    def _writer_section(self, p) -> str:
        docs = {d["id"]: d for d in p.get("documents", ())}
        out = []
        for line in p["section_outline"].splitlines():
            m = _HEADING_LINE_RE.match(line)
            if not m:
                continue
            ids = [i.strip() for c in _CITE_RE.findall(m.group(2)) for i in c.split(",") if i.strip()]
            heading = " ".join(_CITE_RE.sub(" ", m.group(2)).split())
            out.append(f"{m.group(1)} {heading}")
            sentences = [f"This part sets out {heading.rstrip('?？').lower()} as it bears on the request."]
            for i in ids:
                if i in docs:
                    summary = docs[i]["summary"].rstrip(".")
                    sentences.append(f"{summary} <cite>{i}</cite>.")
            out.append(" ".join(sentences))
            out.append("")
        return "\n".join(out).strip()

    def _heading_rewrite(self, p) -> str:
        text = " ".join(p["heading"].split()).rstrip("?？ ").strip()
        for pattern, template in QUESTION_REWRITES:
            m = pattern.match(text)
            if m:
                rewritten = template.format(m.group(1))
                return _json({"heading": rewritten[0].upper() + rewritten[1:]})
        return _json({"heading": text})

    # -- harness -------------------------------------------------------------

    def _harness_score(self, p) -> str:
        stats = list(p.get("stats", ()))
        blueprints = list(p.get("blueprints", ()))
        queries = [q for bp in blueprints for q in bp.get("search_query", ())]
        tokens = [t for q in queries for t in content_tokens(q)]
        completeness = min(10.0, 3.0 + 0.7 * len(blueprints))
        diversity = 10.0 * len(set(tokens)) / len(tokens) if tokens else 0.0
        coverage = 10.0 * sum(s.high_relevance_ratio for s in stats) / len(stats) if stats else 0.0
        overall = (completeness + diversity + coverage) / 3.0
        def entry(v, why):
            return {"score": round(v, 2), "reasoning": why}
        return _json({"evaluation": {
            "completeness": entry(completeness, f"{len(blueprints)} key points planned."),
            "diversity": entry(diversity, f"{len(set(tokens))} distinct terms over {len(tokens)}."),
            "search_coverage": entry(coverage, f"mean relevant share over {len(stats)} queries."),
            "overall": entry(overall, "mean of the three criteria."),
        }})

    # -- evaluation ----------------------------------------------------------

    def _weights(self, p) -> str:
        q = bare_query(p["query"]).lower()
        w = {"comprehensiveness": 3.0, "insight": 3.0, "instruction_following": 2.0, "readability": 2.0}
        if any(s in q for s in ("compare", " vs ", "which", "should")):
            w["insight"] += 1.0
        if any(s in q for s in ("list", "all ", "every", "overview")):
            w["comprehensiveness"] += 1.0
        total = sum(w.values())
        return _json({k: v / total for k, v in w.items()})

    def _pairwise(self, p) -> str:
        ref, cand = p["reference"], p["candidate"]
        if ref == cand:
            return _json(dict.fromkeys(("comprehensiveness", "insight", "instruction_following", "readability"), 50))

        def feats(text):
            words = len(text.split())
            cites = len(set(i.strip() for c in _CITE_RE.findall(text) for i in c.split(",")))
            heads = sum(1 for l in text.splitlines() if _HEADING_LINE_RE.match(l))
            paras = [x for x in text.split("\n\n") if x.strip()]
            avg = sum(len(x.split()) for x in paras) / max(len(paras), 1)
            return words + 1, cites + 1, heads + 1, 1.0 / (avg + 1)

        def rel(c, r):
            return round(min(100.0, max(0.0, 50.0 + 50.0 * math.tanh(math.log(c / r)))), 2)

        fr, fc = feats(ref), feats(cand)
        names = ("comprehensiveness", "insight", "instruction_following", "readability")
        return _json({n: rel(c, r) for n, c, r in zip(names, fc, fr)})

    def _miner(self, p) -> str:
        lines = [l.strip(" -*\t") for l in p["user_history"].splitlines() if l.strip(" -*\t")]
        counts = Counter(t for l in lines for t in content_tokens(l) if len(t) > 3)
        themes = [t for t, _ in counts.most_common(6)] or ["daily life"]
        while len(themes) < 4:
            themes.append(themes[len(themes) % len(themes)] + " planning")
        queries = [
            f"I keep reading about {t}. Compare the main options, what real users report, "
            f"typical costs, and which choice fits someone like me best."
            for t in themes[:5]
        ]
        return _json(queries)

    def _classifier(self, p) -> str:
        q = " " + p["query"].lower() + " "
        for signals, label in TOPIC_RULES:
            if any(s in q for s in signals):
                return label
        return "Science & Technology"
