"""Share of extracted library names that exist in a canonical registry list."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .import_parser import DEFAULT_GRAMMARS, ImportRejected, normalize


@dataclass(frozen=True)
class CanonicalList:
    lang: str
    names: frozenset[str]


@dataclass
class ValidityReport:
    lang: str
    rate: float | None  # None when nothing was extracted
    hits: list[str]
    misses: list[str]

    @property
    def distinct(self) -> int:
        return len(self.hits) + len(self.misses)


def load_canonical(path: str | Path, lang: str, grammars=None) -> CanonicalList:
    """One name per line; '#' comments and blanks ignored. Names go through the import normalizer."""
    grammar = (grammars or DEFAULT_GRAMMARS)[lang]
    names = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                names.add(normalize(line, grammar))
            except ImportRejected:
                continue
    if not names:
        raise ValueError(f"canonical list {path} is empty")
    return CanonicalList(lang, frozenset(names))


def validity_rate(events: Iterable, canon: CanonicalList) -> ValidityReport:
    """Distinct extracted names found in `canon` over distinct extracted names."""
    extracted = set()
    for ev in events:
        if ev.lang == canon.lang:
            extracted.update(ev.libs)
    hits = sorted(n for n in extracted if n in canon.names)
    misses = sorted(n for n in extracted if n not in canon.names)
    rate = len(hits) / len(extracted) if extracted else None
    return ValidityReport(canon.lang, rate, hits, misses)
