"""First-occurrence detection of libraries and library pairs.

Pass 1 counts, for each library, the number of distinct posts importing
it; pass 2 walks the ordered events and records the first post in which
each eligible library (simple novelty) and each unordered pair of eligible
libraries (pair novelty) appears. Ecosystems are independent.

Library names are interned in sorted order, so for ids ``a < b`` the
names also compare ``a < b`` and pair payloads come out lexicographic.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from . import kernels

THRESHOLD_SEMANTICS = ("total", "subsequent")


class OrderError(RuntimeError):
    """Events arrived out of (ts, post_id) order."""


@dataclass(slots=True)
class ImportEvent:
    lang: str
    post_id: int
    ts: str
    user_id: int | None
    libs: tuple[str, ...]

    def to_json(self) -> str:
        return json.dumps(
            {"post_id": self.post_id, "ts": self.ts, "user_id": self.user_id, "lang": self.lang, "libs": list(self.libs)},
            ensure_ascii=False,
        )

    @classmethod
    def from_dict(cls, d: dict) -> "ImportEvent":
        return cls(d["lang"], int(d["post_id"]), d["ts"], d.get("user_id"), tuple(sorted(set(d["libs"]))))


def read_events(path: str | Path) -> Iterator[ImportEvent]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield ImportEvent.from_dict(json.loads(line))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad event record ({exc!r})") from None


def write_events(events: Iterable[ImportEvent], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ev in events:
            fh.write(ev.to_json())
            fh.write("\n")
            n += 1
    return n


class EventTable:
    """Columnar, order-checked events of one ecosystem."""

    def __init__(self, lang, post_ids, ts, user_ids, vocab, offsets, lib_ids):
        self.lang = lang
        self.post_ids = post_ids
        self.ts = ts
        self.user_ids = user_ids  # -1 marks an anonymous post
        self.vocab = vocab
        self.offsets = offsets
        self.lib_ids = lib_ids

    def __len__(self):
        return len(self.post_ids)

    @classmethod
    def from_events(cls, events: Iterable[ImportEvent], lang: str | None = None) -> "EventTable":
        b = TableBuilder(lang)
        for ev in events:
            if b.lang is None:
                b.lang = ev.lang
            elif ev.lang != b.lang:
                continue
            b.add(ev)
        return b.build()

    def libs_of(self, i: int) -> list[str]:
        return [self.vocab[j] for j in self.lib_ids[self.offsets[i]:self.offsets[i + 1]]]

    def years(self) -> np.ndarray:
        return np.fromiter((int(t[:4]) for t in self.ts), dtype=np.int32, count=len(self.ts))


class TableBuilder:
    """Streams events of one ecosystem into columnar form without keeping them.

    Names are interned in arrival order and remapped to sorted ids in
    ``build``.
    """

    def __init__(self, lang: str | None = None):
        self.lang = lang
        self.post_ids: list[int] = []
        self.ts: list[str] = []
        self.users: list[int] = []
        self.sizes: list[int] = []
        self.flat: list[int] = []
        self.index: dict[str, int] = {}
        self.prev: tuple[str, int] | None = None

    def add(self, ev: ImportEvent) -> None:
        key = (ev.ts, ev.post_id)
        if self.prev is not None and key <= self.prev:
            raise OrderError(f"{self.lang}: event {key} does not follow {self.prev}")
        self.prev = key
        self.post_ids.append(ev.post_id)
        self.ts.append(ev.ts)
        self.users.append(-1 if ev.user_id is None else ev.user_id)
        libs = set(ev.libs)
        self.sizes.append(len(libs))
        index = self.index
        for name in libs:
            i = index.get(name)
            if i is None:
                i = index[name] = len(index)
            self.flat.append(i)

    def build(self) -> EventTable:
        vocab = sorted(self.index)
        remap = np.empty(len(vocab), dtype=np.int32)
        for new, name in enumerate(vocab):
            remap[self.index[name]] = new
        offsets = np.zeros(len(self.sizes) + 1, dtype=np.int64)
        np.cumsum(self.sizes, out=offsets[1:])
        lib_ids = remap[np.asarray(self.flat, dtype=np.int64)] if self.flat else np.zeros(0, dtype=np.int32)
        # keep each event's ids ascending, like its sorted names
        owner = np.repeat(np.arange(len(self.sizes)), self.sizes)
        lib_ids = lib_ids[np.lexsort((lib_ids, owner))]
        return EventTable(
            self.lang,
            np.asarray(self.post_ids, dtype=np.int64),
            self.ts,
            np.asarray(self.users, dtype=np.int64),
            vocab,
            offsets,
            lib_ids.astype(np.int32, copy=False),
        )


def split_by_lang(events: Iterable[ImportEvent]) -> dict[str, EventTable]:
    """Columnar tables per ecosystem, built in one streaming pass."""
    builders: dict[str, TableBuilder] = {}
    for ev in events:
        b = builders.get(ev.lang)
        if b is None:
            b = builders[ev.lang] = TableBuilder(ev.lang)
        b.add(ev)
    return {lang: builders[lang].build() for lang in sorted(builders)}


def count_frequencies(events: Iterable[ImportEvent] | EventTable) -> dict[str, int]:
    """Number of distinct posts importing each library."""
    if isinstance(events, EventTable):
        counts = np.bincount(events.lib_ids, minlength=len(events.vocab))
        return {name: int(c) for name, c in zip(events.vocab, counts)}
    counts: Counter = Counter()
    for ev in events:
        counts.update(set(ev.libs))
    return dict(counts)


@dataclass(frozen=True)
class EligibilitySet:
    lang: str | None
    threshold: int
    eligible: frozenset[str]
    semantics: str = "total"

    def __contains__(self, name: str) -> bool:
        return name in self.eligible

    def __len__(self) -> int:
        return len(self.eligible)


def build_eligibility(
    counts: Mapping[str, int], threshold: int = 10, semantics: str = "total", lang: str | None = None
) -> EligibilitySet:
    """Libraries with enough importing posts to count as novelties.

    ``total``: corpus-wide post count >= threshold (threshold 1 disables
    filtering). ``subsequent``: posts after the first occurrence >= threshold.
    """
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    if semantics not in THRESHOLD_SEMANTICS:
        raise ValueError(f"unknown threshold semantics {semantics!r}")
    need = threshold if semantics == "total" else threshold + 1
    return EligibilitySet(lang, threshold, frozenset(k for k, c in counts.items() if c >= need), semantics)


@dataclass(slots=True)
class NoveltyRecord:
    post_id: int
    ts: str
    user_id: int | None
    kind: str  # "simple" or "pair"
    payload: str | tuple[str, str]


@dataclass
class NoveltySeries:
    lang: str
    n: np.ndarray  # cumulative qualifying posts, 1..len
    d: np.ndarray  # distinct eligible libraries seen
    p: np.ndarray  # distinct eligible pairs seen

    def __len__(self):
        return len(self.n)


@dataclass
class NoveltyResult:
    """Columnar output of pass 2 for one ecosystem."""

    table: EventTable
    eligibility: EligibilitySet
    simple_event: np.ndarray
    simple_lib: np.ndarray
    pair_event: np.ndarray
    pair_a: np.ndarray
    pair_b: np.ndarray

    @property
    def lang(self) -> str:
        return self.table.lang

    def simple_per_event(self) -> np.ndarray:
        return np.bincount(self.simple_event, minlength=len(self.table)).astype(np.int64)

    def pairs_per_event(self) -> np.ndarray:
        return np.bincount(self.pair_event, minlength=len(self.table)).astype(np.int64)

    def series(self) -> NoveltySeries:
        n = np.arange(1, len(self.table) + 1, dtype=np.int64)
        return NoveltySeries(self.lang, n, np.cumsum(self.simple_per_event()), np.cumsum(self.pairs_per_event()))

    def flags(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-event (has_simple_novelty, has_pair_novelty)."""
        return self.simple_per_event() > 0, self.pairs_per_event() > 0

    def _user(self, i: int) -> int | None:
        u = int(self.table.user_ids[i])
        return None if u < 0 else u

    def simple_records(self) -> Iterator[NoveltyRecord]:
        t = self.table
        for i, lib in zip(self.simple_event.tolist(), self.simple_lib.tolist()):
            yield NoveltyRecord(int(t.post_ids[i]), t.ts[i], self._user(i), "simple", t.vocab[lib])

    def pair_records(self) -> Iterator[NoveltyRecord]:
        t = self.table
        for i, a, b in zip(self.pair_event.tolist(), self.pair_a.tolist(), self.pair_b.tolist()):
            yield NoveltyRecord(int(t.post_ids[i]), t.ts[i], self._user(i), "pair", (t.vocab[a], t.vocab[b]))


def _eligible_mask(table: EventTable, elig: EligibilitySet) -> np.ndarray:
    return np.fromiter((name in elig.eligible for name in table.vocab), dtype=np.uint8, count=len(table.vocab))


def run_detection(table: EventTable, elig: EligibilitySet, pairs: bool = True) -> NoveltyResult:
    """Pass 2 over one ecosystem with the active kernel backend."""
    mask = _eligible_mask(table, elig)
    s_ev, s_lib, p_ev, p_a, p_b = kernels.detect_first_occurrences(table.offsets, table.lib_ids, mask, pairs)
    return NoveltyResult(table, elig, s_ev, s_lib, p_ev, p_a, p_b)


def _as_table(events) -> EventTable:
    return events if isinstance(events, EventTable) else EventTable.from_events(events)


def detect_novelties(events, elig: EligibilitySet) -> tuple[list[NoveltyRecord], NoveltySeries]:
    result = run_detection(_as_table(events), elig, pairs=False)
    return list(result.simple_records()), result.series()


def detect_pair_novelties(events, elig: EligibilitySet) -> tuple[list[NoveltyRecord], NoveltySeries]:
    result = run_detection(_as_table(events), elig)
    return list(result.pair_records()), result.series()


def novelty_flags_per_post(events, elig: EligibilitySet) -> list[tuple[int, bool, bool]]:
    """(post_id, has_simple_novelty, has_pair_novelty) in stream order."""
    result = run_detection(_as_table(events), elig)
    simple, pair = result.flags()
    return [(int(p), bool(s), bool(q)) for p, s, q in zip(result.table.post_ids, simple, pair)]


def analyze_ecosystem(
    table: EventTable, threshold: int = 10, semantics: str = "total", pairs: bool = True
) -> NoveltyResult:
    counts = count_frequencies(table)
    elig = build_eligibility(counts, threshold, semantics, table.lang)
    return run_detection(table, elig, pairs)
