import random

import numpy as np
import pytest

import oracles
from conftest import toy_events
from ecolens.novelty import EventTable, ImportEvent, analyze_ecosystem, split_by_lang
from ecolens.users import (
    BIN_LABELS,
    EXPERIENCE_BINS,
    AnalysisRows,
    ExperienceIndex,
    Variant,
    bin_index,
    experience_for_table,
    experience_from_history,
    novelty_rate_by_bin,
    prior_counts,
    robustness_variants,
)


def ts(i):
    return f"2014-01-01T00:{i // 60000 % 60:02d}:{i // 1000 % 60:02d}.{i % 1000:03d}"


def test_bins_partition():
    assert len(EXPERIENCE_BINS) == 5
    for e in range(0, 3000):
        i = bin_index(e)
        b = EXPERIENCE_BINS[i]
        assert b.lower <= e and (b.upper is None or e <= b.upper)
    assert [bin_index(e) for e in (0, 1, 10, 11, 100, 101, 1000, 1001, 10**9)] == [0, 1, 1, 2, 2, 3, 3, 4, 4]
    with pytest.raises(ValueError):
        bin_index(-1)


def test_experience_at_post_scoping():
    history = [("python", 7, ts(i), i) for i in range(3)] + [("r", 7, ts(i), 10 + i) for i in range(7)]
    idx = ExperienceIndex(history)
    assert idx.experience_at_post(7, "python", ts(100), 100) == 3
    assert idx.experience_at_post(7, "r", ts(100), 100) == 7
    assert idx.experience_at_post(8, "python", ts(100), 100) == 0
    assert idx.experience_at_post(None, "python", ts(100)) is None
    # strictly before: the post itself does not count
    assert idx.experience_at_post(7, "python", ts(1), 1) == 1


def test_prior_counts_match_oracle():
    rng = random.Random(4)
    rows = [(rng.choice(["python", "r"]), rng.choice([None, 1, 2, 3, 4, 5])) for _ in range(500)]
    want = oracles.experience(rows)
    for lang in ("python", "r"):
        pos = [i for i, (l, _) in enumerate(rows) if l == lang]
        users = np.array([-1 if rows[i][1] is None else rows[i][1] for i in pos])
        got = prior_counts(users)
        assert got.tolist() == [-1 if want[i] is None else want[i] for i in pos]


def test_experience_monotone_per_user():
    users = np.array([1, 2, 1, 1, 3, 2, 1])
    exp = prior_counts(users)
    for u in (1, 2, 3):
        seq = exp[users == u]
        assert seq.tolist() == list(range(len(seq)))


def test_experience_from_history():
    # history includes tagged posts without imports (ids 2 and 4)
    history = [(ts(1), 1, 9), (ts(2), 2, 9), (ts(3), 3, None), (ts(4), 4, 9), (ts(5), 5, 9)]
    got = experience_from_history([ts(1), ts(5)], [1, 5], [9, 9], history)
    assert got.tolist() == [0, 3]


def _rows(lang, users, simple, pair, years=None):
    n = len(users)
    users = np.asarray(users)
    return AnalysisRows(
        lang,
        np.arange(1, n + 1),
        users,
        prior_counts(users),
        np.asarray(simple, dtype=bool),
        np.asarray(pair, dtype=bool),
        np.asarray(years if years is not None else [2014] * n),
    )


def test_extremal_first_post_novelty():
    rng = np.random.default_rng(0)
    users = rng.integers(1, 30, size=3000)
    first = prior_counts(users) == 0
    rates = novelty_rate_by_bin([_rows("python", users, first, first)])
    pooled = {r.bin: r for r in rates.rows if r.lang == "pooled"}
    assert pooled["0"].simple_rate == 1.0 and pooled["0"].pair_rate == 1.0
    for label in BIN_LABELS[1:]:
        if pooled[label].posts:
            assert pooled[label].simple_rate == 0.0 and pooled[label].pair_rate == 0.0


def test_empty_bins_are_absent():
    rates = novelty_rate_by_bin([_rows("r", [1, 2], [True, False], [False, False])])
    by = {r.bin: r for r in rates.rows if r.lang == "pooled"}
    assert by["0"].posts == 2 and by["0"].simple_rate == 0.5
    assert by[">1000"].posts == 0 and by[">1000"].simple_rate is None


def test_pooled_is_sum_of_ecosystems_and_anonymous_excluded():
    a = _rows("python", [1, 1, -1, 2], [1, 0, 1, 0], [1, 1, 0, 0])
    b = _rows("r", [1, -1, 1], [1, 1, 0], [0, 1, 0])
    rates = novelty_rate_by_bin([a, b])
    for label in BIN_LABELS:
        pooled = [r for r in rates.rows if r.lang == "pooled" and r.bin == label][0]
        parts = [r for r in rates.rows if r.lang != "pooled" and r.bin == label]
        assert pooled.posts == sum(p.posts for p in parts)
    assert rates.anonymous == {"python": 1, "r": 1, "pooled": 2}
    assert sum(r.posts for r in rates.rows if r.lang == "pooled") == 5


def test_null_model_rates_flat():
    rng = np.random.default_rng(1)
    n = 60_000
    users = rng.integers(1, 40, size=n)
    flags = rng.random(n) < 0.2
    rates = novelty_rate_by_bin([_rows("python", users, flags, flags)])
    for r in rates.rows:
        if r.posts >= 200:
            se = np.sqrt(0.2 * 0.8 / r.posts)
            assert abs(r.simple_rate - 0.2) < 5 * se


def _brute_variant(corpus_by_lang, threshold, year):
    """Recompute binned counts by brute force: (bin -> [posts, simple, pair]) pooled."""
    out = {b: [0, 0, 0] for b in BIN_LABELS}
    for lang, rows in corpus_by_lang.items():
        corpus = [libs for _, _, libs in rows]
        simple, pairs = oracles.first_occurrences(corpus, threshold)
        if not oracles.eligible(corpus, threshold):
            continue
        s_posts = {i for i, _ in simple}
        p_posts = {i for i, _ in pairs}
        exp = oracles.experience([(lang, u) for u, _, _ in rows])
        for i, (u, y, _) in enumerate(rows):
            if u is None or (year is not None and y != year):
                continue
            b = BIN_LABELS[bin_index(exp[i])]
            out[b][0] += 1
            out[b][1] += i in s_posts
            out[b][2] += i in p_posts
    return out


def test_variant_matches_brute_force():
    rng = random.Random(8)
    names = [f"l{i}" for i in range(12)]
    corpus_by_lang = {}
    events = []
    pid = 0
    for lang in ("python", "r"):
        rows = []
        for i in range(300):
            pid += 1
            year = 2015 + i // 100
            user = rng.choice([None, 1, 2, 3, 4, 5, 6])
            libs = set(rng.sample(names, rng.randint(1, 4)))
            rows.append((user, year, libs))
            events.append(ImportEvent(lang, pid, f"{year}-01-01T00:00:{i % 60:02d}.{i:03d}", user, tuple(sorted(libs))))
        corpus_by_lang[lang] = rows
    events.sort(key=lambda e: (e.ts, e.post_id))
    tables = split_by_lang(events)
    exp = {lang: experience_for_table(t) for lang, t in tables.items()}
    # split_by_lang reorders rows by time; rebuild the brute-force rows in the same order
    for lang, t in tables.items():
        by_id = {}
        base = 0 if lang == "python" else 300
        for i, r in enumerate(corpus_by_lang[lang]):
            by_id[base + i + 1] = r
        corpus_by_lang[lang] = [by_id[int(p)] for p in t.post_ids]
    for v in (Variant(10, 2016), Variant(100), Variant(3, 2017)):
        got = robustness_variants(tables, exp, [v])[v.name]
        want = _brute_variant(corpus_by_lang, v.threshold, v.year)
        pooled = {r.bin: r for r in got.rows if r.lang == "pooled"}
        for b in BIN_LABELS:
            n, s, p = want[b]
            assert pooled[b].posts == n
            if n:
                assert pooled[b].simple_rate == pytest.approx(s / n)
                assert pooled[b].pair_rate == pytest.approx(p / n)


def test_variant_threshold_annihilates_toy():
    tables = {"python": EventTable.from_events(toy_events())}
    exp = {"python": experience_for_table(tables["python"])}
    out = robustness_variants(tables, exp, [Variant(1000)])["t1000"]
    assert out.empty
    assert all(r.simple_rate is None and r.pair_rate is None for r in out.rows)


def test_variant_year_filter_excluding_everything():
    tables = {"python": EventTable.from_events(toy_events())}
    exp = {"python": experience_for_table(tables["python"])}
    out = robustness_variants(tables, exp, [Variant(1, 1999)])["t1_y1999"]
    assert out.empty


def test_variant_names():
    assert Variant(1000).name == "t1000"
    assert Variant(100, 2016).name == "t100_y2016"


def test_from_result_uses_flags():
    table = EventTable.from_events(toy_events())
    result = analyze_ecosystem(table, 1)
    rows = AnalysisRows.from_result(result, experience_for_table(table))
    assert rows.simple.tolist() == [True, True, False]
    assert rows.experience.tolist() == [0, 0, 1]
