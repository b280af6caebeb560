"""Meta-optimization harness: fixed-sample batch evaluation, versioned snapshots,
a manifest of runs, stop conditions and an external mutation hook.

Run directory layout::

    <workdir>/
      template/                 working copy of the prompt templates
      config.yaml               working configuration (tracked)
      memory/traces_*.jsonl     policy-bank traces
      optimization_runs/
        manifest.json
        fixed_indices.json
        v0_baseline/  v1/  ...  metrics.json, details.jsonl, summary.md,
                                snapshot/, changelog.md
"""

from __future__ import annotations

import json
import logging
import math
import random
import shlex
import shutil
import statistics
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional, Protocol, Sequence

from .config import Settings, dump_settings, load_settings
from .core_state import Blueprint, CriticState, QueryContext, ResearchQuery, dedupe_queries
from .document_bank import DocumentBank, query_doc_stats
from .errors import (ConfigError, DualResearchError, MissingTrackedFile, MutationFailed,
                     PersistenceFailure, PreconditionError)
from .metrics import CRITERIA, CriterionScore, HarnessScore, QueryDocStats
from .pipeline import Pipeline, Providers, build_providers
from .policy_bank import PolicyBank, TraceRecord, utc_now
from .providers.base import LLMProvider
from .providers.structured import complete_structured, parse_json_object
from .templates import PACKAGE_TEMPLATE_DIR, PromptLibrary, default_library

__all__ = [
    "HarnessScorer", "query_doc_stats", "CaseResult", "BatchResult", "batch_eval",
    "fixed_indices", "aggregate", "VersionEntry", "RunManifest", "StopDecision",
    "stop_decision", "advance", "save_snapshot", "restore_snapshot", "Harness",
]

logger = logging.getLogger(__name__)

TARGET_MEAN = 9.0
PATIENCE = 5
MAX_OPTIMIZATION_ROUNDS = 20
BASELINE = "v0_baseline"
SUMMARY_QUERY_LINES = 20
# The scorer's own prompt is never part of the mutable working copy.
FROZEN_TEMPLATES = ("harness_score.system.j2", "harness_score.user.j2")
# Parameters the mutation step may not change.
LOCKED_KEYS = ("search_engine", "num_searches", "provider", "mock_dir", "benchmark",
               "fixed_sample_size", "sample_seed", "harness_rounds", "mutation_cmd")
AGGREGATE_METRICS = ("search_coverage", "overall", "completeness", "diversity", "outline_rating",
                     "search_query_count", "doc_avg_relevance", "doc_count")


# --------------------------------------------------------------------------
# Scoring
# --------------------------------------------------------------------------


def _clamp_scores(raw: str) -> HarnessScore:
    data = parse_json_object(raw)
    data = data.get("evaluation", data)
    parsed = []
    for name in CRITERIA:
        entry = data[name]
        if not isinstance(entry, dict):
            entry = {"score": entry}
        score = float(entry["score"])
        if not math.isfinite(score):
            raise ValueError(f"{name}: non-finite score")
        if not 0.0 <= score <= 10.0:
            clamped = min(10.0, max(0.0, score))
            logger.warning("harness score %s=%s outside [0, 10]; clamped to %s", name, score, clamped)
            score = clamped
        parsed.append(CriterionScore(score, str(entry.get("reasoning", ""))))
    return HarnessScore(*parsed)


class RunScorer(Protocol):
    def score_run(self, query_ctx: QueryContext, critic_state: CriticState,
                  stats: Sequence[QueryDocStats], allow_empty: bool = False) -> HarnessScore: ...


class HarnessScorer:
    """Scores one run's blueprints and retrieval statistics.

    Runs on the generator's provider. It always reads the packaged prompt,
    so mutations of the working template copy cannot change the yardstick.
    """

    def __init__(self, provider: LLMProvider, library: PromptLibrary | None = None, retries: int = 2):
        self.provider = provider
        self.library = library or default_library()
        self.retries = retries

    def score_run(self, query_ctx: QueryContext, critic_state: CriticState,
                  stats: Sequence[QueryDocStats], allow_empty: bool = False) -> HarnessScore:
        stats = list(stats)
        if not stats and not allow_empty:
            raise PreconditionError("score_run needs retrieval statistics (pass allow_empty=True)")
        request = self.library.request(
            "harness_score",
            {"query": query_ctx.text, "blueprints": [b.to_dict() for b in critic_state.blueprints],
             "stats": stats},
            max_output_tokens=2048,
        )
        return complete_structured(self.provider, request, _clamp_scores, self.retries)


# --------------------------------------------------------------------------
# Batch evaluation
# --------------------------------------------------------------------------


def fixed_indices(path: str | Path, population: int, sample_size: int, seed: int) -> list[int]:
    """Load the persisted case sample, drawing and saving it on first use."""
    path = Path(path)
    if path.exists():
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            indices = [int(i) for i in data["indices"]]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise PersistenceFailure(f"cannot read {path}: {exc}") from exc
        if data.get("population") != population:
            logger.warning("%s was drawn from %s queries; benchmark now has %d",
                           path, data.get("population"), population)
        if any(not 0 <= i < population for i in indices):
            raise PersistenceFailure(f"{path}: indices out of range for {population} queries")
        return indices
    if population < 1:
        raise PreconditionError("benchmark is empty")
    indices = sorted(random.Random(seed).sample(range(population), min(sample_size, population)))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"seed": seed, "sample_size": sample_size, "population": population,
                                "indices": indices}, indent=2) + "\n", encoding="utf-8")
    return indices


def aggregate(values: Sequence[float]) -> dict:
    """mean/median/std/min/max; std is the population deviation."""
    if not values:
        return {"mean": None, "median": None, "std": None, "min": None, "max": None}
    return {
        "mean": statistics.fmean(values),
        "median": statistics.median(values),
        "std": statistics.pstdev(values),
        "min": min(values),
        "max": max(values),
    }


def merged_critic_state(steps) -> CriticState:
    """Final blueprints, each carrying every query issued under its id across rounds."""
    queries: dict[str, list[str]] = {}
    for critic, _ in steps:
        for bp in critic.blueprints:
            queries.setdefault(bp.id, []).extend(bp.search_queries)
    final = steps[-1][0]
    blueprints = tuple(Blueprint(bp.id, bp.content, dedupe_queries(queries[bp.id]))
                       for bp in final.blueprints)
    return replace(final, blueprints=blueprints)


@dataclass
class CaseResult:
    index: int
    query_text: str
    score: Optional[HarnessScore] = None
    details: dict = field(default_factory=dict)
    error: Optional[str] = None
    trace: Optional[TraceRecord] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def metric(self, name: str) -> float:
        if name in CRITERIA:
            return self.score.score(name)
        return float(self.details[name])

    def to_dict(self) -> dict:
        out = {"index": self.index, "query": self.query_text, "status": "ok" if self.ok else "failed"}
        if self.error is not None:
            out["error"] = self.error
        if self.score is not None:
            out["scores"] = self.score.to_dict()
        out.update(self.details)
        return out


@dataclass
class BatchResult:
    cases: list[CaseResult]

    @property
    def succeeded(self) -> list[CaseResult]:
        return [c for c in self.cases if c.ok]

    @property
    def failed(self) -> int:
        return sum(1 for c in self.cases if not c.ok)

    def metrics(self) -> dict:
        good = self.succeeded
        return {
            "cases": len(self.cases),
            "succeeded": len(good),
            "failed": self.failed,
            "metrics": {m: aggregate([c.metric(m) for c in good]) for m in AGGREGATE_METRICS},
        }

    def mean(self, metric: str) -> Optional[float]:
        return self.metrics()["metrics"][metric]["mean"]

    def metrics_summary(self) -> dict:
        return {m: self.mean(m) for m in ("search_coverage", "overall", "completeness", "diversity")}


def _bank_doc_metrics(bank: DocumentBank) -> tuple[float, int]:
    fetched = [r for r in bank.records.values() if r.carried_from is None]
    scored = [r.judge_score for r in fetched if not r.skipped]
    return (statistics.fmean(scored) if scored else 0.0), len(fetched)


def evaluate_case(index: int, query_text: str, pipeline: Pipeline, scorer: RunScorer,
                  policy_bank: Optional[PolicyBank] = None) -> CaseResult:
    try:
        query = ResearchQuery(query_text, id=f"case-{index}")
        run = pipeline.research(query, policy_bank, harness_mode=True, record_traces=False)
        trajectory = run.outcome.trajectory
        state = merged_critic_state(trajectory.steps)
        stats = query_doc_stats(run.outcome.bank, state.queries)
        score = scorer.score_run(run.context, state, stats, allow_empty=True)
    except DualResearchError as exc:
        logger.error("case %d (%r) failed: %s", index, query_text, exc)
        return CaseResult(index, query_text, error=f"{type(exc).__name__}: {exc}")
    avg_rel, doc_count = _bank_doc_metrics(run.outcome.bank)
    final = run.outcome.assessments[-1]
    details = {
        "intent": run.plan.intent.value,
        "rounds": trajectory.terminal_round,
        "outline_rating": trajectory.ratings[-1],
        "outline_justification": final.justification,
        "search_query_count": len(state.queries),
        "doc_avg_relevance": avg_rel,
        "doc_count": doc_count,
        "blueprints": [b.to_dict() for b in state.blueprints],
        "query_stats": [s.to_dict() for s in stats],
    }
    trace = TraceRecord(query_text, trajectory.terminal_round, state,
                        run.outcome.best, tuple(stats))
    return CaseResult(index, query_text, score, details, trace=trace)


def batch_eval(
    queries: Sequence[str],
    indices: Sequence[int],
    pipeline: Pipeline,
    scorer: RunScorer,
    policy_bank: Optional[PolicyBank] = None,
    max_workers: int = 4,
) -> BatchResult:
    """Run and score every sampled query; results come back in sample order.

    Traces are written after all cases finish, in sample order, first as a
    partial record and then with the scores backfilled.
    """
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        futures = [pool.submit(evaluate_case, i, queries[i], pipeline, scorer, policy_bank)
                   for i in indices]
        cases = [f.result() for f in futures]
    if policy_bank is not None:
        for case in cases:
            if case.trace is not None:
                policy_bank.record_trace(case.trace)
                policy_bank.backfill_scores(case.trace.trace_id, case.score)
    return BatchResult(cases)


# --------------------------------------------------------------------------
# Manifest and stop conditions
# --------------------------------------------------------------------------


class StopDecision(str, Enum):
    CONTINUE = "continue"
    TARGET_REACHED = "target_reached"
    CONVERGED = "converged"
    CAPPED = "capped"


STATUSES = ("baseline", "improved", "regressed")


@dataclass(frozen=True)
class VersionEntry:
    version: str
    timestamp: str
    search_coverage_mean: float
    metrics_summary: dict = field(default_factory=dict)
    parent: Optional[str] = None
    status: str = "baseline"

    def __post_init__(self):
        if self.status not in STATUSES:
            raise PreconditionError(f"unknown status {self.status!r}")
        if self.status == "baseline" and self.parent is not None:
            raise PreconditionError("the baseline entry has no parent")

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "timestamp": self.timestamp,
            "search_coverage_mean": self.search_coverage_mean,
            "metrics_summary": dict(self.metrics_summary),
            "parent": self.parent,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VersionEntry":
        return cls(d["version"], d["timestamp"], float(d["search_coverage_mean"]),
                   dict(d.get("metrics_summary", {})), d.get("parent"), d.get("status", "baseline"))


@dataclass(frozen=True)
class RunManifest:
    best_version: Optional[str] = None
    versions: tuple[VersionEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "versions", tuple(self.versions))
        labels = [v.version for v in self.versions]
        if len(labels) != len(set(labels)):
            raise PreconditionError(f"duplicate version labels: {labels}")
        if self.versions and self.best_version not in labels:
            raise PreconditionError(f"best_version {self.best_version!r} is not a recorded version")

    def entry(self, label: str) -> VersionEntry:
        for v in self.versions:
            if v.version == label:
                return v
        raise KeyError(label)

    @property
    def best(self) -> Optional[VersionEntry]:
        return self.entry(self.best_version) if self.versions else None

    @property
    def optimization_rounds(self) -> int:
        return sum(1 for v in self.versions if v.status != "baseline")

    @property
    def non_improving_streak(self) -> int:
        n = 0
        for v in reversed(self.versions):
            if v.status != "regressed":
                break
            n += 1
        return n

    def to_dict(self) -> dict:
        return {"best_version": self.best_version, "versions": [v.to_dict() for v in self.versions]}

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(d.get("best_version"), tuple(VersionEntry.from_dict(v) for v in d.get("versions", ())))

    def save(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(".json.tmp")
        try:
            tmp.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
            tmp.replace(path)
        except OSError as exc:
            raise PersistenceFailure(f"cannot write {path}: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise PersistenceFailure(f"cannot read manifest {path}: {exc}") from exc


def stop_decision(manifest: RunManifest, target: float = TARGET_MEAN, patience: int = PATIENCE,
                  max_rounds: int = MAX_OPTIMIZATION_ROUNDS) -> StopDecision:
    """Target first, then convergence, then the round cap; judged on the latest entry."""
    if not manifest.versions:
        return StopDecision.CONTINUE
    if manifest.versions[-1].search_coverage_mean >= target:
        return StopDecision.TARGET_REACHED
    if manifest.non_improving_streak >= patience:
        return StopDecision.CONVERGED
    if manifest.optimization_rounds >= max_rounds:
        return StopDecision.CAPPED
    return StopDecision.CONTINUE


def advance(manifest: RunManifest, entry: VersionEntry, target: float = TARGET_MEAN,
            patience: int = PATIENCE, max_rounds: int = MAX_OPTIMIZATION_ROUNDS
            ) -> tuple[RunManifest, StopDecision]:
    """Append an evaluated version; the best moves only on strict improvement."""
    if not manifest.versions:
        entry = replace(entry, parent=None, status="baseline")
        best = entry.version
    else:
        incumbent = manifest.best
        improved = entry.search_coverage_mean > incumbent.search_coverage_mean
        entry = replace(entry, parent=incumbent.version, status="improved" if improved else "regressed")
        best = entry.version if improved else incumbent.version
    updated = RunManifest(best, manifest.versions + (entry,))
    return updated, stop_decision(updated, target, patience, max_rounds)


# --------------------------------------------------------------------------
# Snapshots
# --------------------------------------------------------------------------


def _copy_tracked(src_root: Path, dst_root: Path, tracked: Iterable[str]) -> None:
    tracked = list(tracked)
    missing = [rel for rel in tracked if not (src_root / rel).is_file()]
    if missing:
        raise MissingTrackedFile(f"tracked files missing under {src_root}: {missing}")
    for rel in tracked:
        dst = dst_root / rel
        dst.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(src_root / rel, dst)


def save_snapshot(workdir: str | Path, snapshot_dir: str | Path, tracked: Iterable[str]) -> None:
    """Copy tracked files (paths relative to workdir) into snapshot_dir, keeping layout."""
    _copy_tracked(Path(workdir), Path(snapshot_dir), tracked)


def restore_snapshot(snapshot_dir: str | Path, workdir: str | Path, tracked: Iterable[str]) -> None:
    _copy_tracked(Path(snapshot_dir), Path(workdir), tracked)


# --------------------------------------------------------------------------
# Driver
# --------------------------------------------------------------------------


def command_mutation(cmd: str) -> Callable[[Path], None]:
    """Wrap a shell-style command; it is called with the version directory appended."""
    argv = shlex.split(cmd)

    def run(version_dir: Path) -> None:
        try:
            subprocess.run(argv + [str(version_dir)], check=True)
        except (OSError, subprocess.CalledProcessError) as exc:
            raise MutationFailed(f"mutation command failed: {exc}") from exc

    return run


def render_summary(label: str, batch: BatchResult) -> str:
    m = batch.metrics()
    lines = [f"# {label}", "", f"Cases: {m['cases']} ({m['succeeded']} scored, {m['failed']} failed)", "",
             "| metric | mean | median | std | min | max |", "|---|---|---|---|---|---|"]
    for name, agg in m["metrics"].items():
        cells = ["n/a" if v is None else f"{v:.3f}" for v in agg.values()]
        lines.append(f"| {name} | " + " | ".join(cells) + " |")
    weak = [(c.index, s) for c in batch.succeeded if c.trace is not None
            for s in c.trace.per_query_doc_stats if s.high_relevance_ratio < 0.5]
    lines += ["", "## Low-coverage search queries", ""]
    weak.sort(key=lambda item: (item[1].avg_relevance, item[0]))
    if weak:
        lines += [f"- case {i}: \"{s.query_text}\" {s.relevant_count}/{s.doc_count} relevant, "
                  f"mean {s.avg_relevance:.2f}" for i, s in weak[:SUMMARY_QUERY_LINES]]
        if len(weak) > SUMMARY_QUERY_LINES:
            lines.append(f"- ... {len(weak) - SUMMARY_QUERY_LINES} more in details.jsonl")
    else:
        lines.append("None.")
    failures = [c for c in batch.cases if not c.ok]
    if failures:
        lines += ["", "## Failed cases", ""] + [f"- case {c.index}: {c.error}" for c in failures]
    return "\n".join(lines) + "\n"


class Harness:
    def __init__(
        self,
        workdir: str | Path,
        settings: Settings,
        providers: Optional[Providers] = None,
        scorer: Optional[RunScorer] = None,
        mutation: Optional[Callable[[Path], None]] = None,
        tracked: Optional[Sequence[str]] = None,
        queries: Optional[Sequence[str]] = None,
        clock: Callable[[], datetime] = utc_now,
    ):
        self.workdir = Path(workdir)
        self.settings = settings
        self.providers = providers or build_providers(settings)
        self.scorer = scorer or HarnessScorer(self.providers.generator)
        if mutation is None and settings.mutation_cmd:
            mutation = command_mutation(settings.mutation_cmd)
        self.mutation = mutation
        self.clock = clock
        self.runs_dir = self.workdir / "optimization_runs"
        self.template_dir = self.workdir / "template"
        self.memory_dir = self.workdir / "memory"
        self.config_path = self.workdir / "config.yaml"
        self._init_workdir()
        self.tracked = list(tracked) if tracked is not None else self.default_tracked()
        self.queries = list(queries) if queries is not None else self._load_queries()

    def _init_workdir(self) -> None:
        self.template_dir.mkdir(parents=True, exist_ok=True)
        for src in sorted(PACKAGE_TEMPLATE_DIR.glob("*.j2")):
            dst = self.template_dir / src.name
            if not dst.exists():
                shutil.copyfile(src, dst)
        if not self.config_path.exists():
            self.config_path.write_text(dump_settings(self.settings), encoding="utf-8")
        self.runs_dir.mkdir(parents=True, exist_ok=True)

    def default_tracked(self) -> list[str]:
        files = [f"template/{p.name}" for p in sorted(self.template_dir.glob("*.j2"))
                 if p.name not in FROZEN_TEMPLATES]
        if self.config_path.exists():
            files.append("config.yaml")
        return files

    def _load_queries(self) -> list[str]:
        from .evaluator import load_benchmark

        if not self.settings.benchmark:
            raise ConfigError("harness needs a benchmark query file (benchmark: in config)")
        return [row["query"] for row in load_benchmark(self.settings.benchmark)]

    @property
    def manifest_path(self) -> Path:
        return self.runs_dir / "manifest.json"

    def load_manifest(self) -> RunManifest:
        return RunManifest.load(self.manifest_path) if self.manifest_path.exists() else RunManifest()

    def round_settings(self) -> Settings:
        """The working config, with parameters the mutation step may not touch pinned."""
        current = load_settings(self.config_path)
        pinned = {k: getattr(self.settings, k) for k in LOCKED_KEYS}
        changed = [k for k, v in pinned.items() if getattr(current, k) != v]
        if changed:
            logger.warning("config.yaml changed locked parameters %s; restoring them", changed)
        return current.with_overrides(pinned)

    def _stop(self, manifest: RunManifest) -> StopDecision:
        return stop_decision(manifest, max_rounds=self.settings.harness_rounds)

    def evaluate(self) -> BatchResult:
        settings = self.round_settings()
        pipeline = Pipeline(self.providers, settings, PromptLibrary(self.template_dir))
        indices = fixed_indices(self.runs_dir / "fixed_indices.json", len(self.queries),
                                settings.fixed_sample_size, settings.sample_seed)
        policy_bank = PolicyBank.load(self.memory_dir)
        policy_bank.new_session()
        return batch_eval(self.queries, indices, pipeline, self.scorer, policy_bank,
                          settings.max_workers)

    def _write_version(self, label: str, batch: BatchResult) -> Path:
        vdir = self.runs_dir / label
        vdir.mkdir(parents=True, exist_ok=True)
        (vdir / "metrics.json").write_text(json.dumps(batch.metrics(), indent=2) + "\n", encoding="utf-8")
        with open(vdir / "details.jsonl", "w", encoding="utf-8") as fh:
            for case in batch.cases:
                fh.write(json.dumps(case.to_dict(), ensure_ascii=False) + "\n")
        (vdir / "summary.md").write_text(render_summary(label, batch), encoding="utf-8")
        snap = vdir / "snapshot"
        if snap.exists():
            shutil.rmtree(snap)
        save_snapshot(self.workdir, snap, self.tracked)
        return vdir

    def _entry(self, label: str, batch: BatchResult) -> VersionEntry:
        summary = batch.metrics_summary()
        if summary["search_coverage"] is None:
            raise PreconditionError(f"{label}: every case failed; nothing to compare")
        return VersionEntry(label, self.clock().replace(microsecond=0).isoformat(),
                            summary["search_coverage"], summary)

    def run(self, max_new_rounds: Optional[int] = None) -> tuple[RunManifest, StopDecision]:
        """Evaluate the baseline if needed, then optimize until a stop condition."""
        manifest = self.load_manifest()
        if not manifest.versions:
            batch = self.evaluate()
            vdir = self._write_version(BASELINE, batch)
            (vdir / "changelog.md").write_text(f"# {BASELINE}\n\nbaseline, no changes\n", encoding="utf-8")
            manifest, decision = advance(manifest, self._entry(BASELINE, batch),
                                         max_rounds=self.settings.harness_rounds)
            manifest.save(self.manifest_path)
            logger.info("baseline search_coverage mean %.3f", manifest.best.search_coverage_mean)
        decision = self._stop(manifest)
        done = 0
        while decision is StopDecision.CONTINUE and (max_new_rounds is None or done < max_new_rounds):
            manifest, decision = self.step(manifest)
            done += 1
        return manifest, decision

    def step(self, manifest: RunManifest) -> tuple[RunManifest, StopDecision]:
        best = manifest.best_version
        label = f"v{len(manifest.versions)}"
        restore_snapshot(self.runs_dir / best / "snapshot", self.workdir, self.tracked)
        vdir = self.runs_dir / label
        vdir.mkdir(parents=True, exist_ok=True)
        changelog = vdir / "changelog.md"
        if self.mutation is not None:
            self.mutation(vdir)
        notes = changelog.read_text(encoding="utf-8").rstrip() if changelog.exists() else \
            f"# {label}\n\nNo change notes were provided."
        batch = self.evaluate()
        self._write_version(label, batch)
        incumbent = manifest.best.search_coverage_mean
        manifest, decision = advance(manifest, self._entry(label, batch),
                                     max_rounds=self.settings.harness_rounds)
        entry = manifest.entry(label)
        changelog.write_text(
            f"{notes}\n\n## Outcome\n\nParent: {best}\n\nsearch_coverage mean {entry.search_coverage_mean:.3f} "
            f"against {incumbent:.3f}: {entry.status}. Stop decision: {decision.value}.\n",
            encoding="utf-8",
        )
        manifest.save(self.manifest_path)
        logger.info("%s: search_coverage %.3f (%s); best %s; %s", label, entry.search_coverage_mean,
                    entry.status, manifest.best_version, decision.value)
        return manifest, decision
