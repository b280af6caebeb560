"""Command-line entry point: `dualresearch research|harness|eval|bank`."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import Settings, load_settings
from .core_state import ResearchQuery
from .errors import ConfigError, DualResearchError
from .evaluator import format_table
from .pipeline import Pipeline, build_providers
from .policy_bank import PolicyBank, RetrievalMode
from .providers.base import SourceEngine
from .writer import render_report_file

logger = logging.getLogger("dualresearch")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config file; flags override its keys")
    p.add_argument("--mock", metavar="DIR", help="use mock providers over a fixture directory")
    p.add_argument("--provider", choices=("mock", "http"))
    p.add_argument("--search-engine", choices=[e.value for e in SourceEngine])
    p.add_argument("--max-rounds", type=int, help="maximum critic/generator rounds")
    p.add_argument("--exit-threshold", type=float, help="rating that ends the loop early")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualresearch", description="Critic/generator deep research pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("research", help="run the full pipeline for one query")
    p.add_argument("query")
    p.add_argument("--memory", metavar="DIR", help="policy-bank directory for feedback and traces")
    _common(p)

    h = sub.add_parser("harness", help="meta-optimization harness")
    hsub = h.add_subparsers(dest="action", required=True)
    hr = hsub.add_parser("run", help="evaluate, snapshot and advance until a stop condition")
    hr.add_argument("--workdir", help="harness working directory (default: <out>/harness)")
    hr.add_argument("--benchmark", help="line-delimited query file")
    hr.add_argument("--harness-rounds", type=int, help="cap on optimization rounds")
    hr.add_argument("--mutation-cmd", help="command run before each round with the version dir appended")
    hr.add_argument("--steps", type=int, help="stop after this many new rounds in this invocation")
    _common(hr)

    e = sub.add_parser("eval", help="report evaluation")
    esub = e.add_subparsers(dest="action", required=True)
    ep = esub.add_parser("pairwise", help="score a candidate report against a reference")
    ep.add_argument("--query", required=True)
    ep.add_argument("--reference", required=True, type=Path)
    ep.add_argument("--candidate", required=True, type=Path)
    ep.add_argument("--json", action="store_true", help="print JSON instead of a table")
    _common(ep)

    b = sub.add_parser("bank", help="policy-bank inspection")
    bsub = b.add_subparsers(dest="action", required=True)
    bs = bsub.add_parser("show", help="summarize stored traces")
    bs.add_argument("memory", help="policy-bank directory")
    bs.add_argument("--query", help="show retrieved traces and feedback for this query")
    bs.add_argument("--mode", choices=[m.value for m in RetrievalMode], default="bm25")
    bs.add_argument("--top-k", type=int, default=5)
    return parser


def settings_from_args(args: argparse.Namespace) -> Settings:
    overrides = {
        "mock_dir": getattr(args, "mock", None),
        "provider": getattr(args, "provider", None) or ("mock" if getattr(args, "mock", None) else None),
        "search_engine": getattr(args, "search_engine", None),
        "max_outline_generator_turns": getattr(args, "max_rounds", None),
        "exit_threshold": getattr(args, "exit_threshold", None),
        "out": getattr(args, "out", None),
        "harness_rounds": getattr(args, "harness_rounds", None),
        "mutation_cmd": getattr(args, "mutation_cmd", None),
        "benchmark": getattr(args, "benchmark", None),
    }
    return load_settings(getattr(args, "config", None), overrides)


def _query_id(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


def cmd_research(args: argparse.Namespace) -> int:
    settings = settings_from_args(args)
    out = Path(settings.out)
    out.mkdir(parents=True, exist_ok=True)
    pipeline = Pipeline(build_providers(settings), settings)
    policy_bank = PolicyBank.load(args.memory) if args.memory else None
    if policy_bank is not None:
        policy_bank.new_session()
    query = ResearchQuery(args.query, id=_query_id(args.query))
    with open(out / "run_log.jsonl", "w", encoding="utf-8") as log_fh:
        def log(event: dict) -> None:
            log_fh.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")

        log({"event": "config", "config": settings.to_dict()})
        run = pipeline.research(query, policy_bank, log)
        outcome = run.outcome
        outcome.bank.save(out / "document_bank.jsonl")
        (out / "trajectory.json").write_text(
            json.dumps(outcome.trajectory.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        report = pipeline.write(run)
        (out / "report.md").write_text(render_report_file(report), encoding="utf-8")
        log({"event": "report", "sections": len(report.sections), "citations": len(report.citation_map),
             "best_round": outcome.best.round})
    print(out / "report.md")
    return EXIT_OK


def cmd_harness_run(args: argparse.Namespace) -> int:
    from .harness import Harness

    settings = settings_from_args(args)
    workdir = Path(args.workdir) if args.workdir else Path(settings.out) / "harness"
    harness = Harness(workdir, settings)
    manifest, decision = harness.run(max_new_rounds=args.steps)
    best = manifest.best
    print(f"best_version={manifest.best_version} search_coverage_mean={best.search_coverage_mean:.3f} "
          f"versions={len(manifest.versions)} decision={decision.value}")
    return EXIT_OK


def cmd_eval_pairwise(args: argparse.Namespace) -> int:
    settings = settings_from_args(args)
    pipeline = Pipeline(build_providers(settings), settings)
    try:
        reference = args.reference.read_text(encoding="utf-8")
        candidate = args.candidate.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read report: {exc}") from exc
    weights = pipeline.evaluator.allocate_weights(args.query)
    score = pipeline.evaluator.pairwise_score(args.query, reference, candidate, weights)
    if args.json:
        print(json.dumps({"weights": dict(weights.weights), "score": score.to_dict()}, indent=2))
    else:
        print(format_table([(args.candidate.name, score)]))
    return EXIT_OK


def cmd_bank_show(args: argparse.Namespace) -> int:
    if not Path(args.memory).is_dir():
        raise ConfigError(f"no policy-bank directory at {args.memory}")
    bank = PolicyBank.load(args.memory)
    records = bank.records
    scored = sum(1 for r in records if r.criterion_scores is not None)
    queries = sorted({r.query_text for r in records})
    print(f"traces: {len(records)} (scored {scored}) over {len(queries)} distinct queries")
    if args.query is None:
        for q in queries:
            n = sum(1 for r in records if r.query_text == q)
            print(f"- {q} ({n})")
        return EXIT_OK
    hits = bank.retrieve(args.query, RetrievalMode(args.mode), args.top_k)
    for r in hits:
        cov = "n/a" if r.criterion_scores is None else f"{r.criterion_scores.score('search_coverage'):.2f}"
        print(f"- [{r.timestamp}] round {r.round}: {r.query_text} "
              f"({len(r.search_queries)} queries, search_coverage {cov})")
    feedback = bank.query_feedback(args.query)
    if feedback:
        print()
        print(feedback)
    return EXIT_OK


COMMANDS = {
    ("research", None): cmd_research,
    ("harness", "run"): cmd_harness_run,
    ("eval", "pairwise"): cmd_eval_pairwise,
    ("bank", "show"): cmd_bank_show,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(getattr(args, "verbose", 0), 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handler = COMMANDS[(args.command, getattr(args, "action", None))]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DualResearchError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
