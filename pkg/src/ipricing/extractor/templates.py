"""Versioned prompt templates loaded from a directory of text files."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .records import PassId

PAYLOAD = "{payload}"
PRIOR_PLANS = "{prior_plans}"

REQUIRED_PLACEHOLDERS = {
    PassId.PLANS: (PAYLOAD,),
    PassId.FEATURES: (PAYLOAD, PRIOR_PLANS),
    PassId.USAGE_LIMITS: (PAYLOAD, PRIOR_PLANS),
    PassId.ADDONS_IN_TABLE: (PAYLOAD, PRIOR_PLANS),
    PassId.ADDONS_FROM_HTML: (PAYLOAD,),
}


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    id: PassId
    text: str
    version: str

    def __post_init__(self) -> None:
        missing = [p for p in REQUIRED_PLACEHOLDERS[self.id] if p not in self.text]
        if missing:
            raise TemplateError(f"template {self.id.value} lacks placeholder(s) {missing}")

    def render(self, payload: str, prior_plans: list[str] | None = None) -> str:
        # str.format would trip over the JSON examples inside the prompts
        text = self.text.replace(PRIOR_PLANS, json.dumps(prior_plans or [], ensure_ascii=False))
        return text.replace(PAYLOAD, payload)


def default_prompts_dir() -> Path:
    return Path(str(resources.files("ipricing") / "prompts" / "v1"))


def load_templates(directory: str | Path | None = None) -> dict[PassId, PromptTemplate]:
    """Read ``manifest.json`` plus one text file per pass.

    The manifest looks like ``{"version": "...", "templates": {"PLANS": "plans.txt", ...}}``
    and must cover exactly the five passes.
    """
    root = Path(directory) if directory else default_prompts_dir()
    manifest_path = root / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise TemplateError(f"no manifest.json in {root}") from None
    files = manifest.get("templates", {})
    ids = set(files)
    expected = {p.value for p in PassId}
    if ids != expected:
        raise TemplateError(f"manifest must cover exactly {sorted(expected)}, got {sorted(ids)}")
    version = str(manifest.get("version", "unversioned"))
    return {
        PassId(pid): PromptTemplate(PassId(pid), (root / fname).read_text(encoding="utf-8"), version)
        for pid, fname in files.items()
    }
