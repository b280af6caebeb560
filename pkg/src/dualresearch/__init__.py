"""Critic/generator deep research pipeline with a document bank, a trace
memory, a chunked report writer, an optimization harness and a pairwise
evaluator."""

from .config import Settings, load_settings
from .core_state import (
    Blueprint,
    CriticState,
    GeneratorState,
    OutlineNode,
    Plan,
    QueryContext,
    Report,
    ResearchQuery,
    Trajectory,
    parse_outline,
    serialize_outline,
)
from .pipeline import Pipeline, Providers, build_providers
from .research_loop import LoopConfig, ResearchOutcome, run_research

__version__ = "0.1.0"

__all__ = [
    "Blueprint", "CriticState", "GeneratorState", "LoopConfig", "OutlineNode", "Pipeline", "Plan",
    "Providers", "QueryContext", "Report", "ResearchOutcome", "ResearchQuery", "Settings",
    "Trajectory", "build_providers", "load_settings", "parse_outline", "run_research",
    "serialize_outline",
]
