"""Prompt template loading.

Each task has a `<task>.system.j2` and `<task>.user.j2` pair. A template
directory override is searched first, so a harness working copy can shadow
the packaged prompts file by file.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import jinja2

from .providers.base import CompletionRequest

PACKAGE_TEMPLATE_DIR = Path(__file__).parent / "prompts"

TASKS = (
    "planner",
    "critic_rating",
    "critic_blueprints",
    "doc_score",
    "generator",
    "writer_section",
    "heading_rewrite",
    "harness_score",
    "weights",
    "pairwise",
    "miner",
    "classifier",
)


class PromptLibrary:
    def __init__(self, template_dir: str | Path | None = None):
        search = [str(PACKAGE_TEMPLATE_DIR)]
        if template_dir is not None:
            search.insert(0, str(template_dir))
        self.template_dir = Path(template_dir) if template_dir else None
        self.env = jinja2.Environment(
            loader=jinja2.FileSystemLoader(search),
            undefined=jinja2.StrictUndefined,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=False,
            autoescape=False,
        )

    def render(self, task: str, **variables: Any) -> tuple[str, str]:
        system = self.env.get_template(f"{task}.system.j2").render(**variables)
        user = self.env.get_template(f"{task}.user.j2").render(**variables)
        return system.strip(), user.strip()

    def request(self, task: str, variables: dict[str, Any], temperature: float = 0.0,
                max_output_tokens: int = 4096, payload: dict[str, Any] | None = None) -> CompletionRequest:
        """Render a task into a CompletionRequest.

        `payload` carries structured inputs for mock providers; it defaults
        to the template variables.
        """
        system, user = self.render(task, **variables)
        return CompletionRequest(
            system,
            user,
            temperature=temperature,
            max_output_tokens=max_output_tokens,
            task=task,
            payload=dict(variables if payload is None else payload),
        )


_DEFAULT: PromptLibrary | None = None


def default_library() -> PromptLibrary:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = PromptLibrary()
    return _DEFAULT


def package_template_files() -> list[Path]:
    return sorted(PACKAGE_TEMPLATE_DIR.glob("*.j2"))
