"""Pipeline configuration: YAML file plus command-line overrides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .ecosystems import DEFAULT_TAG_ALIASES, ECOSYSTEMS
from .novelty import THRESHOLD_SEMANTICS
from .users import DEFAULT_VARIANTS, Variant

STAGES = ("ingest", "extract", "novelty", "analyze", "users", "geo")


class ConfigError(ValueError):
    pass


def _default_variants():
    return [{"threshold": v.threshold, "year": v.year} for v in DEFAULT_VARIANTS]


@dataclass
class PipelineConfig:
    out_dir: str = "ecolens-out"
    input_dump: str | None = None
    input_snippets: str | None = None
    input_events: str | None = None
    user_countries: str | None = None
    langs: list[str] = field(default_factory=lambda: list(ECOSYSTEMS))
    tag_aliases: dict[str, str] = field(default_factory=dict)
    grammar_file: str | None = None
    root_depth: dict[str, int] = field(default_factory=lambda: {"java": 1, "csharp": 1})
    threshold: int = 10
    threshold_semantics: str = "total"
    adoption_threshold: int | None = None
    variants: list[dict] = field(default_factory=_default_variants)
    experience_basis: str = "qualifying"
    min_posts: int = 1000
    fit_trim: int = 100
    stages: dict[str, bool] = field(default_factory=lambda: {s: True for s in STAGES})
    plots: bool = True
    jobs: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        if isinstance(cfg.langs, str):
            cfg.langs = [s.strip() for s in cfg.langs.split(",") if s.strip()]
        # a partial stages map overrides the all-on default
        extra = set(cfg.stages) - set(STAGES)
        if extra:
            raise ConfigError(f"unknown stages: {sorted(extra)}")
        stages = {s: True for s in STAGES}
        stages.update(cfg.stages)
        cfg.stages = stages
        return cfg

    @property
    def aliases(self) -> dict[str, str]:
        merged = dict(DEFAULT_TAG_ALIASES)
        merged.update({k.lower(): v for k, v in self.tag_aliases.items()})
        return merged

    @property
    def variant_list(self) -> list[Variant]:
        return [Variant(int(v["threshold"]), v.get("year")) for v in self.variants]

    @property
    def out(self) -> Path:
        return Path(self.out_dir)

    def validate(self) -> "PipelineConfig":
        bad = [lang for lang in self.langs if lang not in ECOSYSTEMS]
        if bad or not self.langs:
            raise ConfigError(f"unknown or empty ecosystem list: {bad or self.langs}")
        for eco in self.aliases.values():
            if eco not in ECOSYSTEMS:
                raise ConfigError(f"tag alias points at unknown ecosystem {eco!r}")
        for name in ("threshold", "min_posts", "jobs"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.fit_trim < 0:
            raise ConfigError("fit_trim must be >= 0")
        if self.adoption_threshold is not None and self.adoption_threshold < 1:
            raise ConfigError("adoption_threshold must be positive")
        for v in self.variants:
            if int(v.get("threshold", 0)) < 1:
                raise ConfigError(f"variant threshold must be positive: {v}")
        if self.threshold_semantics not in THRESHOLD_SEMANTICS:
            raise ConfigError(f"threshold_semantics must be one of {THRESHOLD_SEMANTICS}")
        if self.experience_basis not in ("qualifying", "tagged"):
            raise ConfigError("experience_basis must be 'qualifying' or 'tagged'")
        if not any(self.stages.values()):
            raise ConfigError("no stage enabled")
        for name in ("input_dump", "input_snippets", "input_events", "user_countries", "grammar_file"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{name}: {path} does not exist")
        if self.stages.get("ingest") and not (self.input_dump or self.input_snippets):
            raise ConfigError("ingest stage needs input_dump or input_snippets")
        return self

    def as_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_config(path: str | Path | None = None, **overrides) -> PipelineConfig:
    data = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        data = (json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)) or {}
    data.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig.from_dict(data)
