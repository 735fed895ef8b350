"""Novelty likelihood as a function of the poster's prior experience.

Experience is the number of the user's earlier posts in the same
ecosystem, ordered by (ts, post_id). By default only import-bearing posts
count; the ``tagged`` basis counts every language-resolved post instead.
"""

from __future__ import annotations

import bisect
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .novelty import EventTable, NoveltyResult, analyze_ecosystem

BIN_LABELS = ("0", "1-10", "11-100", "101-1000", ">1000")
_BIN_LOWER = np.array([0, 1, 11, 101, 1001])


@dataclass(frozen=True)
class ExperienceBin:
    label: str
    lower: int
    upper: int | None  # inclusive; None is unbounded


EXPERIENCE_BINS = tuple(
    ExperienceBin(label, int(lo), None if i == len(BIN_LABELS) - 1 else int(_BIN_LOWER[i + 1] - 1))
    for i, (label, lo) in enumerate(zip(BIN_LABELS, _BIN_LOWER))
)


def bin_index(experience):
    """Bin position for scalar or array experience values."""
    e = np.asarray(experience)
    if np.any(e < 0):
        raise ValueError("experience must be non-negative")
    idx = np.searchsorted(_BIN_LOWER, e, side="right") - 1
    return int(idx) if idx.ndim == 0 else idx


class ExperienceIndex:
    """Per (user, ecosystem) sorted post keys for point queries."""

    def __init__(self, history: Iterable[tuple[str, int | None, str, int]]):
        # history rows: (lang, user_id, ts, post_id)
        keys: dict[tuple[str, int], list[tuple[str, int]]] = defaultdict(list)
        for lang, user, ts, post_id in history:
            if user is not None and user >= 0:
                keys[(lang, user)].append((ts, post_id))
        for v in keys.values():
            v.sort()
        self._keys = dict(keys)

    def experience_at_post(self, user_id: int | None, lang: str, ts: str, post_id: int | None = None) -> int | None:
        """Count of the user's posts in `lang` strictly before (ts, post_id); None if anonymous."""
        if user_id is None or user_id < 0:
            return None
        keys = self._keys.get((lang, user_id), [])
        probe = (ts, -1 if post_id is None else post_id)
        return bisect.bisect_left(keys, probe)


def prior_counts(user_ids: np.ndarray) -> np.ndarray:
    """Earlier occurrences of each row's user in an ordered stream; -1 for anonymous rows."""
    users = np.asarray(user_ids, dtype=np.int64)
    order = np.argsort(users, kind="stable")
    su = users[order]
    starts = np.r_[0, np.flatnonzero(su[1:] != su[:-1]) + 1] if len(su) else np.zeros(0, np.int64)
    sizes = np.diff(np.r_[starts, len(su)])
    cum = np.arange(len(su)) - np.repeat(starts, sizes)
    exp = np.empty(len(users), dtype=np.int64)
    exp[order] = cum
    exp[users < 0] = -1
    return exp


def experience_for_table(table: EventTable) -> np.ndarray:
    """Prior import-bearing posts per event; -1 for anonymous posts."""
    return prior_counts(table.user_ids)


def experience_from_history(
    ts: Sequence[str],
    post_ids: Sequence[int],
    user_ids: Sequence[int],
    history: Sequence[tuple[str, int, int | None]],
) -> np.ndarray:
    """Prior posts per row counted over an external ordered history.

    ``history`` holds (ts, post_id, user_id) for every post of the same
    ecosystem that counts as experience, sorted by (ts, post_id).
    """
    counts: dict[int, int] = defaultdict(int)
    exp = np.full(len(ts), -1, dtype=np.int64)
    j = 0
    h = len(history)
    for i in range(len(ts)):
        key = (ts[i], int(post_ids[i]))
        while j < h and (history[j][0], history[j][1]) < key:
            u = history[j][2]
            if u is not None:
                counts[u] += 1
            j += 1
        u = int(user_ids[i])
        if u >= 0:
            exp[i] = counts[u]
    return exp


@dataclass
class AnalysisRows:
    """Per-(post, ecosystem) inputs to the binned rates."""

    lang: str
    post_ids: np.ndarray
    user_ids: np.ndarray
    experience: np.ndarray
    simple: np.ndarray
    pair: np.ndarray
    years: np.ndarray

    @classmethod
    def from_result(cls, result: NoveltyResult, experience: np.ndarray) -> "AnalysisRows":
        t = result.table
        simple, pair = result.flags()
        return cls(t.lang, t.post_ids, t.user_ids, experience, simple, pair, t.years())

    def select(self, mask: np.ndarray) -> "AnalysisRows":
        return AnalysisRows(
            self.lang,
            self.post_ids[mask],
            self.user_ids[mask],
            self.experience[mask],
            self.simple[mask],
            self.pair[mask],
            self.years[mask],
        )

    def __len__(self):
        return len(self.post_ids)


@dataclass
class BinRateRow:
    lang: str
    bin: str
    posts: int
    simple_rate: float | None
    pair_rate: float | None


@dataclass
class BinRates:
    rows: list[BinRateRow]
    anonymous: dict[str, int]
    empty: bool = False

    def for_lang(self, lang: str) -> list[BinRateRow]:
        return [r for r in self.rows if r.lang == lang]


def _rates(lang: str, experience, simple, pair) -> list[BinRateRow]:
    idx = bin_index(experience) if len(experience) else np.zeros(0, dtype=np.int64)
    posts = np.bincount(idx, minlength=len(BIN_LABELS))
    s = np.bincount(idx, weights=simple.astype(np.float64), minlength=len(BIN_LABELS))
    p = np.bincount(idx, weights=pair.astype(np.float64), minlength=len(BIN_LABELS))
    out = []
    for b, label in enumerate(BIN_LABELS):
        n = int(posts[b])
        out.append(
            BinRateRow(lang, label, n, float(s[b]) / n if n else None, float(p[b]) / n if n else None)
        )
    return out


def novelty_rate_by_bin(rows: Iterable[AnalysisRows]) -> BinRates:
    """Pooled and per-ecosystem novelty rates by experience bin.

    Anonymous posts are excluded and counted per ecosystem.
    """
    rows = list(rows)
    out: list[BinRateRow] = []
    anonymous = {}
    pooled_e, pooled_s, pooled_p = [], [], []
    for r in rows:
        known = r.experience >= 0
        anonymous[r.lang] = int((~known).sum())
        e, s, p = r.experience[known], r.simple[known], r.pair[known]
        pooled_e.append(e)
        pooled_s.append(s)
        pooled_p.append(p)
        out.extend(_rates(r.lang, e, s, p))
    if rows:
        pooled = _rates("pooled", np.concatenate(pooled_e), np.concatenate(pooled_s), np.concatenate(pooled_p))
    else:
        pooled = _rates("pooled", np.zeros(0, np.int64), np.zeros(0, bool), np.zeros(0, bool))
    anonymous["pooled"] = sum(anonymous.values())
    empty = all(r.posts == 0 for r in pooled)
    return BinRates(pooled + out, anonymous, empty)


@dataclass(frozen=True)
class Variant:
    threshold: int
    year: int | None = None

    @property
    def name(self) -> str:
        return f"t{self.threshold}" + (f"_y{self.year}" if self.year is not None else "")


DEFAULT_VARIANTS = (Variant(1000), Variant(100, 2016), Variant(1000, 2016))


def robustness_variants(
    tables: Mapping[str, EventTable],
    experience: Mapping[str, np.ndarray],
    variants: Sequence[Variant] = DEFAULT_VARIANTS,
    semantics: str = "total",
) -> dict[str, BinRates]:
    """Binned rates with eligibility recomputed at each variant's threshold.

    Eligibility and experience always use the full corpus; a year
    restriction only selects which posts enter the rates. An ecosystem
    with no eligible library under a variant has no defined rates and is
    left out of that variant's table.
    """
    out = {}
    for v in variants:
        rows = []
        for lang, table in tables.items():
            result = analyze_ecosystem(table, v.threshold, semantics)
            if not len(result.eligibility):
                continue
            r = AnalysisRows.from_result(result, experience[lang])
            if v.year is not None:
                r = r.select(r.years == v.year)
            rows.append(r)
        out[v.name] = novelty_rate_by_bin(rows)
    return out
