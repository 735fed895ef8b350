"""Regex import grammars for the twelve ecosystems.

Each grammar is a list of rules plus a normalization policy. A rule's
pattern is compiled with ``re.MULTILINE`` and must define either a
``name`` group (one capture) or a ``list`` group (comma separated names,
each optionally followed by ``as alias``).

Library names are plain strings; the ecosystem travels alongside them.
"""

from __future__ import annotations

import json
import keyword
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

import yaml

from .ecosystems import ECOSYSTEMS

LibraryName = str


class ImportRejected(ValueError):
    """A captured name that normalizes to nothing usable."""

    def __init__(self, raw: str, reason: str):
        super().__init__(f"{raw!r}: {reason}")
        self.raw = raw
        self.reason = reason


@dataclass(frozen=True)
class Normalization:
    separator: str = "."
    depth: int = 1
    case_insensitive: bool = False
    strip_prefixes: tuple[str, ...] = ()
    strip_extensions: tuple[str, ...] = ()
    relative_prefixes: tuple[str, ...] = ()
    exclude_names: frozenset[str] = frozenset()
    scope_prefix: str | None = None


@dataclass(frozen=True)
class ImportRule:
    pattern: str
    role: str = "name"  # "name" or "list"
    separator: str | None = None  # overrides the grammar separator for this rule
    regex: re.Pattern = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.role not in ("name", "list"):
            raise ValueError(f"unknown capture role {self.role!r}")
        rx = re.compile(self.pattern, re.MULTILINE)
        if self.role not in rx.groupindex:
            raise ValueError(f"pattern has no {self.role!r} group: {self.pattern}")
        object.__setattr__(self, "regex", rx)


@dataclass(frozen=True)
class EcosystemGrammar:
    ecosystem: str
    rules: tuple[ImportRule, ...]
    norm: Normalization

    def with_depth(self, depth: int) -> "EcosystemGrammar":
        return replace(self, norm=replace(self.norm, depth=depth))


_ALIAS_RE = re.compile(r"\s+as\s+\w+\s*$")
_BAD_CHARS = re.compile(r"[\s'\"`]")
_PY_EXCLUDE = frozenset(keyword.kwlist)
_C_HEADERS = (".h", ".hpp", ".hh", ".hxx", ".h++", ".inl", ".ipp", ".tcc")

DEFAULT_GRAMMARS: dict[str, EcosystemGrammar] = {
    "python": EcosystemGrammar(
        "python",
        (
            ImportRule(
                r"(?:^|;)[ \t]*import[ \t]+(?P<list>[A-Za-z_][\w.]*(?:[ \t]+as[ \t]+\w+)?"
                r"(?:[ \t]*,[ \t]*[A-Za-z_][\w.]*(?:[ \t]+as[ \t]+\w+)?)*)[ \t]*(?=#|;[ \t]*\S|$)",
                role="list",
            ),
            ImportRule(r"(?:^|;)[ \t]*from[ \t]+(?P<name>\.*[\w.]*)[ \t]+import\b"),
        ),
        Normalization(separator=".", relative_prefixes=(".",), exclude_names=_PY_EXCLUDE),
    ),
    "r": EcosystemGrammar(
        "r",
        (
            ImportRule(
                r"\b(?:library|require|requireNamespace|loadNamespace)[ \t]*\([ \t]*"
                r"[\"']?(?P<name>[A-Za-z][\w.]*)[\"']?[ \t]*[,)]"
            ),
            ImportRule(r"(?<![\w.:])(?P<name>[A-Za-z][\w.]*):::?[A-Za-z_.][\w.]*[ \t]*\("),
        ),
        Normalization(separator="/"),
    ),
    "javascript": EcosystemGrammar(
        "javascript",
        (
            ImportRule(r"\brequire[ \t]*\([ \t]*(['\"`])(?P<name>[^'\"`\s]+)\1[ \t]*\)"),
            ImportRule(
                r"^[ \t]*(?:import|export)\b[\s\w{},*$]*?\bfrom[ \t]*(['\"])(?P<name>[^'\"\s]+)\1"
            ),
            ImportRule(r"^[ \t]*import[ \t]*(['\"])(?P<name>[^'\"\s]+)\1"),
        ),
        Normalization(
            separator="/",
            strip_prefixes=("node:",),
            strip_extensions=(".js", ".mjs", ".cjs"),
            relative_prefixes=(".", "/", "~"),
            scope_prefix="@",
        ),
    ),
    "java": EcosystemGrammar(
        "java",
        (
            ImportRule(
                r"^[ \t]*import[ \t]+(?:static[ \t]+)?(?P<name>[A-Za-z_$][\w$]*"
                r"(?:[ \t]*\.[ \t]*(?:[A-Za-z_$][\w$]*|\*))*)[ \t]*;"
            ),
        ),
        Normalization(separator="."),
    ),
    "cpp": EcosystemGrammar(
        "cpp",
        (ImportRule(r"^[ \t]*#[ \t]*include[ \t]*[<\"](?P<name>[^<>\"\n]+)[>\"]"),),
        Normalization(separator="/", strip_extensions=_C_HEADERS, relative_prefixes=(".", "/")),
    ),
    "php": EcosystemGrammar(
        "php",
        (
            ImportRule(
                r"^[ \t]*use[ \t]+(?:function[ \t]+|const[ \t]+)?(?P<name>\\?[A-Za-z_]\w*(?:\\[A-Za-z_]\w*)*)"
                r"(?=[ \t]*[;,]|\\\{|[ \t]+as[ \t])",
                separator="\\",
            ),
            ImportRule(
                r"^[ \t]*(?:require|include)(?:_once)?[ \t]*\(?[ \t]*(['\"])(?P<name>[^'\"\n]+)\1[ \t]*\)?[ \t]*;"
            ),
        ),
        Normalization(
            separator="/",
            case_insensitive=True,
            strip_prefixes=("\\",),
            strip_extensions=(".php", ".inc"),
            relative_prefixes=(".", "/"),
        ),
    ),
    "ruby": EcosystemGrammar(
        "ruby",
        (
            ImportRule(
                r"^[ \t]*require[ \t]*\(?[ \t]*(['\"])(?P<name>[^'\"\n]+)\1[ \t]*\)?[ \t]*(?=#|$)"
            ),
        ),
        Normalization(
            separator="/",
            strip_extensions=(".rb", ".so", ".bundle"),
            relative_prefixes=(".", "/", "~"),
        ),
    ),
    "perl": EcosystemGrammar(
        "perl",
        (
            ImportRule(
                r"^[ \t]*(?:use|require)[ \t]+(?P<name>[A-Za-z_]\w*(?:::\w+)*)"
                r"(?=[ \t]*;|[ \t]+[^;\n]*;|[ \t]*$)"
            ),
        ),
        Normalization(separator="::"),
    ),
    "rust": EcosystemGrammar(
        "rust",
        (
            ImportRule(
                r"^[ \t]*(?:pub(?:[ \t]*\([^)\n]*\))?[ \t]+)?use[ \t]+(?P<name>(?:::)?[A-Za-z_]\w*)"
                r"(?=::|[ \t]*;|[ \t]+as[ \t])"
            ),
            ImportRule(r"^[ \t]*extern[ \t]+crate[ \t]+(?P<name>[A-Za-z_]\w*)"),
        ),
        Normalization(
            separator="::",
            strip_prefixes=("::",),
            exclude_names=frozenset({"crate", "self", "super", "Self"}),
        ),
    ),
    "swift": EcosystemGrammar(
        "swift",
        (
            ImportRule(
                r"^[ \t]*(?:@\w+(?:\([^)\n]*\))?[ \t]+)*import[ \t]+"
                r"(?:(?:typealias|struct|class|enum|protocol|let|var|func)[ \t]+)?"
                r"(?P<name>[A-Za-z_]\w*(?:\.\w+)*)[ \t]*(?=//|$)"
            ),
        ),
        Normalization(separator="."),
    ),
    "objectivec": EcosystemGrammar(
        "objectivec",
        (
            ImportRule(r"^[ \t]*#[ \t]*import[ \t]*[<\"](?P<name>[^<>\"\n]+)[>\"]"),
            ImportRule(r"^[ \t]*@import[ \t]+(?P<name>[A-Za-z_]\w*(?:\.\w+)*)[ \t]*;", separator="."),
        ),
        Normalization(separator="/", strip_extensions=_C_HEADERS, relative_prefixes=(".", "/")),
    ),
    "csharp": EcosystemGrammar(
        "csharp",
        (
            ImportRule(
                r"^[ \t]*(?:global[ \t]+)?using[ \t]+(?:static[ \t]+)?(?:[A-Za-z_]\w*[ \t]*=[ \t]*)?"
                r"(?P<name>[A-Za-z_]\w*(?:[ \t]*\.[ \t]*[A-Za-z_]\w*)*)[ \t]*;"
            ),
        ),
        Normalization(separator="."),
    ),
}

assert set(DEFAULT_GRAMMARS) == set(ECOSYSTEMS)


def normalize(raw: str, grammar: EcosystemGrammar, separator: str | None = None) -> LibraryName:
    """Reduce a captured import path to its library root.

    Raises ImportRejected for relative imports, URLs, reserved names and
    captures that end up empty.
    """
    norm = grammar.norm
    sep = separator or norm.separator
    name = raw.strip().strip("'\"`")
    if "://" in name:
        raise ImportRejected(raw, "url")
    for prefix in norm.strip_prefixes:
        if name.startswith(prefix):
            name = name[len(prefix):]
    if sep == ".":
        name = re.sub(r"\s*\.\s*", ".", name)
    if any(name.startswith(p) for p in norm.relative_prefixes):
        raise ImportRejected(raw, "relative")

    parts = name.split(sep)
    depth = norm.depth
    if norm.scope_prefix and parts[0].startswith(norm.scope_prefix):
        depth += 1
    parts = [p for p in parts[:depth] if p]
    if parts and parts[-1] != "*":
        last = parts[-1]
        for ext in norm.strip_extensions:
            if last.lower().endswith(ext) and len(last) > len(ext):
                parts[-1] = last[: -len(ext)]
                break
    parts = [p for p in parts if p != "*"]
    name = sep.join(parts)
    if norm.case_insensitive:
        name = name.lower()
    if not name:
        raise ImportRejected(raw, "empty")
    if _BAD_CHARS.search(name):
        raise ImportRejected(raw, "invalid characters")
    if name in norm.exclude_names:
        raise ImportRejected(raw, "reserved name")
    return name


def _captures(rule: ImportRule, snippet: str) -> Iterable[str]:
    for m in rule.regex.finditer(snippet):
        text = m.group(rule.role)
        if text is None:
            continue
        if rule.role == "name":
            yield text
        else:
            for item in text.split(","):
                item = _ALIAS_RE.sub("", item.strip())
                if item:
                    yield item


def extract_imports(
    snippet: str,
    ecosystem: str,
    grammars: dict[str, EcosystemGrammar] | None = None,
    rejected: list[ImportRejected] | None = None,
) -> set[LibraryName]:
    """Return the deduplicated set of normalized library names in `snippet`."""
    grammar = (grammars or DEFAULT_GRAMMARS)[ecosystem]
    found = set()
    for rule in grammar.rules:
        for raw in _captures(rule, snippet):
            try:
                found.add(normalize(raw, grammar, rule.separator))
            except ImportRejected as exc:
                if rejected is not None:
                    rejected.append(exc)
    return found


def scan_post(post, grammars: dict[str, EcosystemGrammar] | None = None) -> list:
    """One ImportEvent per tagged language with a non-empty import set."""
    from .novelty import ImportEvent

    events = []
    for lang in sorted(post.languages):
        libs: set[str] = set()
        for snippet in post.snippets:
            libs |= extract_imports(snippet, lang, grammars)
        if libs:
            events.append(ImportEvent(lang, post.post_id, post.ts, post.user_id, tuple(sorted(libs))))
    return events


def load_grammars(path: str | Path) -> dict[str, EcosystemGrammar]:
    """Load grammar overrides from a YAML or JSON file.

    The file maps ecosystem ids to ``{rules: [...], normalization: {...}}``.
    Ecosystems absent from the file keep their defaults; a present
    ``rules`` list replaces the default rules wholesale, while
    ``normalization`` keys are merged into the default policy.
    """
    text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    grammars = dict(DEFAULT_GRAMMARS)
    for eco, spec in (data or {}).items():
        if eco not in grammars:
            raise ValueError(f"unknown ecosystem in grammar file: {eco}")
        base = grammars[eco]
        rules = base.rules
        if "rules" in spec:
            rules = tuple(
                ImportRule(r["pattern"], r.get("role", "name"), r.get("separator")) for r in spec["rules"]
            )
        norm = base.norm
        if "normalization" in spec:
            params = dict(spec["normalization"])
            for key in ("strip_prefixes", "strip_extensions", "relative_prefixes"):
                if key in params:
                    params[key] = tuple(params[key])
            if "exclude_names" in params:
                params["exclude_names"] = frozenset(params["exclude_names"])
            norm = replace(norm, **params)
        grammars[eco] = EcosystemGrammar(eco, rules, norm)
    return grammars


def grammars_with_depth(depths: dict[str, int], grammars: dict[str, EcosystemGrammar] | None = None):
    grammars = dict(grammars or DEFAULT_GRAMMARS)
    for eco, depth in depths.items():
        if depth < 1:
            raise ValueError(f"root depth must be >= 1, got {depth} for {eco}")
        grammars[eco] = grammars[eco].with_depth(depth)
    return grammars
