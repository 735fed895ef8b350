"""Urn-model generator of synthetic import events with known growth laws.

Post n (1-based, per ecosystem) introduces m_n brand-new libraries in
expectation: floor(m_n) for sure plus one more with probability
frac(m_n). Its remaining slots reuse libraries already in the pool.

* ``constant``: m_n = p, so E[D(N)] = p N.
* ``power``:    m_n = scale * (n**beta - (n-1)**beta), so E[D(N)] = scale * N**beta
  exactly; for m_n < 1 this is an innovation probability ~ scale * beta * n**(beta - 1).

Reuse is ``uniform`` over the pool or ``preferential`` (Polya urn: every
past occurrence is a ball). With uniform reuse and a linearly growing pool
almost every pair in a post is new, so pair novelties accrue at
E[K(K-1)/2] per post for K libraries per post.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .ingest import format_ts
from .novelty import ImportEvent

SYNTH_COUNTRIES = ("BR", "CN", "DE", "FR", "GB", "IN", "JP", "NG", "PL", "US")


@dataclass
class SynthConfig:
    posts: int = 10_000
    langs: Sequence[str] = ("python",)
    libs_per_post: Sequence[int] = (2, 3, 4)
    innovation: str = "constant"  # "constant" or "power"
    p: float = 0.1
    beta: float = 0.5
    scale: float = 1.0
    reuse: str = "uniform"  # "uniform" or "preferential"
    users: int = 1000
    user_skew: float = 1.1
    anonymous: float = 0.0
    country_coverage: float = 0.38
    start: str = "2008-08-01T00:00:00"
    years: float = 16.0
    seed: int = 0
    countries: Sequence[str] = field(default_factory=lambda: SYNTH_COUNTRIES)

    def validate(self):
        if self.posts < 1:
            raise ValueError("posts must be >= 1")
        if not self.langs:
            raise ValueError("need at least one language")
        if not self.libs_per_post or min(self.libs_per_post) < 1:
            raise ValueError("libs_per_post entries must be >= 1")
        if self.innovation not in ("constant", "power"):
            raise ValueError(f"unknown innovation process {self.innovation!r}")
        if self.innovation == "constant" and not self.p > 0:
            raise ValueError("p must be positive")
        if self.innovation == "power" and not 0 < self.beta <= 1:
            raise ValueError("beta must be in (0, 1]")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if self.reuse not in ("uniform", "preferential"):
            raise ValueError(f"unknown reuse rule {self.reuse!r}")
        if self.users < 1 or not 0 <= self.anonymous <= 1 or not 0 <= self.country_coverage <= 1:
            raise ValueError("bad user parameters")
        return self


def expected_innovations(cfg: SynthConfig, n: int) -> float:
    """Expected new libraries in post n (1-based)."""
    if cfg.innovation == "constant":
        return cfg.p
    return cfg.scale * (n**cfg.beta - (n - 1) ** cfg.beta)


def expected_distinct(cfg: SynthConfig, n) -> np.ndarray:
    """Expected libraries after n posts (off by at most one: an empty pool forces the first)."""
    n = np.asarray(n, dtype=np.float64)
    if cfg.innovation == "constant":
        return cfg.p * n
    return cfg.scale * n**cfg.beta


def asymptotic_pair_rate(cfg: SynthConfig) -> float:
    k = np.asarray(cfg.libs_per_post, dtype=np.float64)
    return float(np.mean(k * (k - 1) / 2))


class _Ecosystem:
    def __init__(self, lang: str, cfg: SynthConfig, rng: np.random.Generator):
        self.lang = lang
        self.cfg = cfg
        self.rng = rng
        self.pool: list[int] = []
        self.urn: list[int] = []
        self.n = 0

    def _reuse(self, u: float) -> int:
        if self.cfg.reuse == "uniform":
            return self.pool[int(u * len(self.pool))]
        return self.urn[int(u * len(self.urn))]

    def draw(self, k: int, n_new: int, uniforms: np.ndarray) -> list[int]:
        self.n += 1
        old = len(self.pool)
        if n_new == 0 and old == 0:
            n_new = 1
        libs = list(range(old, old + n_new))
        self.pool.extend(libs)
        want = min(max(k - n_new, 0), old)
        chosen = set(libs)
        ui = 0
        while want > 0:
            if ui >= len(uniforms):
                uniforms = self.rng.random(8)
                ui = 0
            x = self._reuse(uniforms[ui])
            ui += 1
            if x not in chosen:
                chosen.add(x)
                libs.append(x)
                want -= 1
        self.urn.extend(libs)
        return libs


def generate(cfg: SynthConfig) -> Iterator[ImportEvent]:
    """Yield events in (ts, post_id) order."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    N = cfg.posts
    ecos = {lang: _Ecosystem(lang, cfg, rng) for lang in cfg.langs}
    lang_of = [cfg.langs[i % len(cfg.langs)] for i in range(N)]

    ks = rng.choice(np.asarray(cfg.libs_per_post), size=N)
    coin = rng.random(N)
    ranks = np.arange(1, cfg.users + 1, dtype=np.float64)
    weights = ranks ** (-cfg.user_skew)
    users = rng.choice(cfg.users, size=N, p=weights / weights.sum()) + 1
    anon = rng.random(N) < cfg.anonymous
    uniforms = rng.random((N, 2 * max(cfg.libs_per_post)))

    start = datetime.fromisoformat(cfg.start)
    step_ms = max(1, int(cfg.years * 365.25 * 86400 * 1000 / N))
    per_lang_n = {lang: 0 for lang in cfg.langs}
    for i in range(N):
        lang = lang_of[i]
        per_lang_n[lang] += 1
        n = per_lang_n[lang]
        m = expected_innovations(cfg, n)
        n_new = int(m) + (coin[i] < m - int(m))
        libs = ecos[lang].draw(int(ks[i]), n_new, uniforms[i])
        ts = format_ts(start + timedelta(milliseconds=i * step_ms))
        yield ImportEvent(
            lang,
            i + 1,
            ts,
            None if anon[i] else int(users[i]),
            tuple(sorted(f"lib{x:07d}" for x in libs)),
        )


def user_countries(cfg: SynthConfig) -> dict[int, str]:
    """Deterministic country assignment for a share of the synthetic users."""
    rng = np.random.default_rng(cfg.seed + 7919)
    mapped = rng.random(cfg.users) < cfg.country_coverage
    codes = rng.choice(np.asarray(cfg.countries), size=cfg.users)
    return {u + 1: str(codes[u]) for u in range(cfg.users) if mapped[u]}


def write_user_countries(mapping: dict[int, str], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "country_code"])
        for uid in sorted(mapping):
            w.writerow([uid, mapping[uid]])
