"""Per-country novelty rates from a user -> country mapping file.

Country rates pool every (post, ecosystem) analysis row of mapped users;
the global averages are taken over all mapped rows, not over countries.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import pycountry

from .users import AnalysisRows

UserCountryMap = dict[int, str]


@dataclass
class LoadStats:
    rows: int = 0
    loaded: int = 0
    invalid_code: int = 0
    invalid_user: int = 0
    duplicate: int = 0


def valid_country(code: str) -> bool:
    return len(code) == 2 and code.isupper() and pycountry.countries.get(alpha_2=code) is not None


def load_user_countries(path: str | Path, stats: LoadStats | None = None) -> UserCountryMap:
    """Read ``user_id,country_code`` rows; a header row is optional.

    Invalid codes and ids are skipped and counted. A user listed twice
    keeps the first country. An unreadable file raises OSError.
    """
    if stats is None:
        stats = LoadStats()
    mapping: UserCountryMap = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for i, rec in enumerate(csv.reader(fh)):
            if not rec or not "".join(rec).strip():
                continue
            if i == 0 and not rec[0].strip().isdigit():
                continue
            stats.rows += 1
            if len(rec) < 2:
                stats.invalid_user += 1
                continue
            uid_text, code = rec[0].strip(), rec[1].strip()
            try:
                uid = int(uid_text)
                if uid <= 0:
                    raise ValueError
            except ValueError:
                stats.invalid_user += 1
                continue
            if not valid_country(code):
                stats.invalid_code += 1
                continue
            if uid in mapping:
                stats.duplicate += 1
                continue
            mapping[uid] = code
            stats.loaded += 1
    return mapping


def coverage(mapping: UserCountryMap, posting_users: Iterable[int]) -> float | None:
    """Share of distinct posting users that have a country."""
    users = {u for u in posting_users if u is not None and u >= 0}
    if not users:
        return None
    return sum(1 for u in users if u in mapping) / len(users)


@dataclass
class CountryRate:
    country: str
    posts: int
    simple_rate: float
    pair_rate: float


@dataclass
class GeoTable:
    countries: list[CountryRate]
    suppressed: list[CountryRate] = field(default_factory=list)
    global_simple: float | None = None
    global_pair: float | None = None
    mapped_posts: int = 0
    empty: bool = False


def country_novelty_rates(rows: Iterable[AnalysisRows], mapping: UserCountryMap, min_posts: int = 1000) -> GeoTable:
    if min_posts < 1:
        raise ValueError("min_posts must be >= 1")
    if not mapping:
        return GeoTable([], empty=True)
    codes = sorted(set(mapping.values()))
    code_idx = {c: i for i, c in enumerate(codes)}
    posts = np.zeros(len(codes), dtype=np.int64)
    simple = np.zeros(len(codes), dtype=np.int64)
    pair = np.zeros(len(codes), dtype=np.int64)
    for r in rows:
        idx = np.fromiter((code_idx.get(mapping.get(int(u)), -1) for u in r.user_ids), dtype=np.int64, count=len(r))
        ok = idx >= 0
        posts += np.bincount(idx[ok], minlength=len(codes))
        simple += np.bincount(idx[ok], weights=r.simple[ok].astype(np.float64), minlength=len(codes)).astype(np.int64)
        pair += np.bincount(idx[ok], weights=r.pair[ok].astype(np.float64), minlength=len(codes)).astype(np.int64)
    total = int(posts.sum())
    if total == 0:
        return GeoTable([], empty=True)
    shown, hidden = [], []
    for i, c in enumerate(codes):
        n = int(posts[i])
        if n == 0:
            continue
        row = CountryRate(c, n, int(simple[i]) / n, int(pair[i]) / n)
        (shown if n >= min_posts else hidden).append(row)
    return GeoTable(
        shown,
        hidden,
        global_simple=int(simple.sum()) / total,
        global_pair=int(pair.sum()) / total,
        mapped_posts=total,
        empty=not shown,
    )
