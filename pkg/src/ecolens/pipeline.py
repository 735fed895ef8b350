"""Stage orchestration: ingest -> extract -> novelty -> analyze -> users / geo.

Every stage reads its inputs from files (the previous stage's artifacts in
the output directory, or an external input named in the config) and writes
flat JSONL/CSV, so any stage can be rerun on its own. A manifest records
the config hash, input digests, per-stage status and counts, and a digest
of every artifact. It carries no timestamps, so identical runs produce an
identical manifest.
"""

from __future__ import annotations

import csv
import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analytics import FitError, fit_heaps, fit_linear, pareto_curve, summarize_ecosystem
from .config import STAGES, ConfigError, PipelineConfig
from .geo import LoadStats, country_novelty_rates, coverage, load_user_countries
from .import_parser import DEFAULT_GRAMMARS, grammars_with_depth, load_grammars, scan_post
from .ingest import (
    Activity,
    IngestStats,
    ingest_dump,
    order_stream,
    read_activity_jsonl,
    read_snippet_jsonl,
    write_activity_jsonl,
    write_snippet_jsonl,
)
from .io import fmt, read_csv, sha256_file, write_csv, write_json
from .novelty import NoveltyResult, analyze_ecosystem, read_events, split_by_lang, write_events
from .users import (
    BIN_LABELS,
    AnalysisRows,
    experience_from_history,
    novelty_rate_by_bin,
    prior_counts,
    robustness_variants,
)

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"

SNIPPETS = "snippets.jsonl"
ACTIVITY = "activity.jsonl"
EVENTS = "events.jsonl"
FLAGS = "flags.csv"
SERIES = "series.csv"
FREQUENCIES = "frequencies.csv"
NOVELTIES = "novelties.csv"

BIN_HEADER = ("ecosystem", "bin", "posts", "simple_rate", "pair_rate")


class StageError(RuntimeError):
    pass


def _source(cfg: PipelineConfig, artifact: str, external: str | None, upstream: str) -> Path:
    """Where a stage reads from: the upstream artifact, or an external input when upstream is off."""
    produced = cfg.out / artifact
    if external and not cfg.stages.get(upstream):
        return Path(external)
    if produced.exists():
        return produced
    if external:
        return Path(external)
    raise StageError(f"missing input {produced}; run the {upstream} stage first")


def _grammars(cfg: PipelineConfig):
    base = load_grammars(cfg.grammar_file) if cfg.grammar_file else DEFAULT_GRAMMARS
    return grammars_with_depth(cfg.root_depth, base)


# ---- ingest / extract ------------------------------------------------------


def stage_ingest(cfg: PipelineConfig) -> dict:
    out = cfg.out
    langs = set(cfg.langs)
    if cfg.input_dump:
        stats = IngestStats()
        posts, activity = ingest_dump(cfg.input_dump, cfg.aliases, langs, stats)
        write_json(out / "ingest_stats.json", stats.as_dict())
        counts = stats.as_dict()
    else:
        # pre-digested corpus: no XML rows, activity is the snippet posts themselves
        posts = []
        for p in read_snippet_jsonl(cfg.input_snippets):
            keep = p.languages & langs
            if keep and p.snippets:
                p.languages = frozenset(keep)
                posts.append(p)
        posts = order_stream(posts)
        activity = [Activity(p.post_id, p.ts, p.user_id, p.languages) for p in posts]
        counts = {}
    counts["snippet_posts"] = write_snippet_jsonl(posts, out / SNIPPETS)
    counts["activity_posts"] = write_activity_jsonl(activity, out / ACTIVITY)
    return counts


def stage_extract(cfg: PipelineConfig) -> dict:
    src = _source(cfg, SNIPPETS, cfg.input_snippets, "ingest")
    grammars = _grammars(cfg)
    langs = set(cfg.langs)
    posts = order_stream(read_snippet_jsonl(src))

    def events():
        for post in posts:
            post.languages = post.languages & langs
            yield from scan_post(post, grammars)

    n = write_events(events(), cfg.out / EVENTS)
    return {"posts_scanned": len(posts), "events": n}


# ---- novelty ---------------------------------------------------------------


def _load_tables(cfg: PipelineConfig):
    src = _source(cfg, EVENTS, cfg.input_events, "extract")
    langs = set(cfg.langs)
    return split_by_lang(ev for ev in read_events(src) if ev.lang in langs)


def _detect(args) -> NoveltyResult:
    table, threshold, semantics, backend = args
    kernels.use_backend(backend)
    return analyze_ecosystem(table, threshold, semantics)


def _detect_all(cfg: PipelineConfig, tables: dict, threshold: int) -> dict[str, NoveltyResult]:
    jobs = [(t, threshold, cfg.threshold_semantics, kernels.active()) for t in tables.values()]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(jobs))) as pool:
            results = list(pool.map(_detect, jobs))
    else:
        results = [_detect(j) for j in jobs]
    return {r.lang: r for r in results}


def _user_cell(u) -> str:
    return "" if u < 0 else str(u)


def _write_novelties(path: Path, results: dict[str, NoveltyResult]) -> tuple[int, int]:
    n_simple = n_pair = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("ecosystem", "kind", "payload", "post_id", "ts", "user_id"))
        for lang, r in results.items():
            t = r.table
            pids, users, vocab = t.post_ids.tolist(), t.user_ids.tolist(), t.vocab
            w.writerows(
                (lang, "simple", vocab[lib], pids[i], t.ts[i], _user_cell(users[i]))
                for i, lib in zip(r.simple_event.tolist(), r.simple_lib.tolist())
            )
            w.writerows(
                (lang, "pair", f"{vocab[a]}|{vocab[b]}", pids[i], t.ts[i], _user_cell(users[i]))
                for i, a, b in zip(r.pair_event.tolist(), r.pair_a.tolist(), r.pair_b.tolist())
            )
            n_simple += len(r.simple_event)
            n_pair += len(r.pair_event)
    return n_simple, n_pair


def _write_series(path: Path, results: dict[str, NoveltyResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("ecosystem", "N", "D", "P"))
        for lang, r in results.items():
            s = r.series()
            w.writerows((lang, n, d, p) for n, d, p in zip(s.n.tolist(), s.d.tolist(), s.p.tolist()))


def stage_novelty(cfg: PipelineConfig) -> dict:
    out = cfg.out
    tables = _load_tables(cfg)
    results = _detect_all(cfg, tables, cfg.threshold)

    n_simple, n_pair = _write_novelties(out / NOVELTIES, results)
    _write_series(out / SERIES, results)

    with open(out / FLAGS, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("ecosystem", "post_id", "ts", "user_id", "has_simple", "has_pair"))
        for lang, r in results.items():
            t = r.table
            simple, pair = r.flags()
            w.writerows(
                (lang, p, ts, _user_cell(u), int(s), int(q))
                for p, ts, u, s, q in zip(t.post_ids.tolist(), t.ts, t.user_ids.tolist(), simple.tolist(), pair.tolist())
            )

    def freq_rows():
        for lang, r in results.items():
            counts = np.bincount(r.table.lib_ids, minlength=len(r.table.vocab)).tolist()
            for name, c in zip(r.table.vocab, counts):
                yield (lang, name, c, int(name in r.eligibility))

    write_csv(out / FREQUENCIES, ("ecosystem", "library", "posts", "eligible"), freq_rows())

    counts = {
        "events": sum(len(t) for t in tables.values()),
        "ecosystems": len(tables),
        "eligible_libraries": {lang: len(r.eligibility) for lang, r in results.items()},
        "simple_novelties": n_simple,
        "pair_novelties": n_pair,
    }
    if cfg.adoption_threshold:
        k = cfg.adoption_threshold
        adopt = _detect_all(cfg, tables, k)
        a_simple, a_pair = _write_novelties(out / f"novelties_adopt{k}.csv", adopt)
        _write_series(out / f"series_adopt{k}.csv", adopt)
        counts[f"adopt{k}"] = {"simple_novelties": a_simple, "pair_novelties": a_pair}
    return counts


# ---- analyze ---------------------------------------------------------------


def _read_series(path: Path) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    cols: dict[str, list[list[int]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        next(r)
        for lang, n, d, p in r:
            c = cols.setdefault(lang, [[], [], []])
            c[0].append(int(n))
            c[1].append(int(d))
            c[2].append(int(p))
    return {lang: tuple(np.asarray(v, dtype=np.int64) for v in c) for lang, c in cols.items()}


def _fit(fn, n, y, trim, lang):
    try:
        return fn(n, y, trim=trim, lang=lang), ""
    except FitError as exc:
        return None, str(exc)


def stage_analyze(cfg: PipelineConfig) -> dict:
    out = cfg.out
    series = _read_series(_source(cfg, SERIES, None, "novelty"))
    counts: dict[str, dict[str, int]] = {}
    for row in read_csv(_source(cfg, FREQUENCIES, None, "novelty")):
        if row["eligible"] == "1":
            counts.setdefault(row["ecosystem"], {})[row["library"]] = int(row["posts"])

    fit_rows, table_rows, curves = [], [], {}
    for lang, (n, d, p) in series.items():
        heaps, heaps_note = _fit(fit_heaps, n, d, cfg.fit_trim, lang)
        linear, linear_note = _fit(fit_linear, n, p, cfg.fit_trim, lang)
        pair_heaps, pair_note = _fit(fit_heaps, n, p, cfg.fit_trim, lang)
        for name, kind, fit, note in (
            ("D", "heaps", heaps, heaps_note),
            ("P", "linear", linear, linear_note),
            ("P", "heaps", pair_heaps, pair_note),
        ):
            if fit is None:
                fit_rows.append((lang, name, kind, None, None, None, None, None, 0, note))
            else:
                fit_rows.append((lang, name, fit.kind, *fit.params, fit.r_squared, *fit.n_range, fit.points, ""))
        lib_counts = counts.get(lang, {})
        if not lib_counts:
            continue
        conc = pareto_curve(lib_counts, lang=lang)
        curves[lang] = (conc.x, conc.y)
        write_csv(
            out / f"pareto_{lang}.csv",
            ("rank", "library", "posts", "library_fraction", "import_share"),
            ((i + 1, name, c, conc.x[i + 1], conc.y[i + 1]) for i, (name, c) in enumerate(conc.ranked)),
        )
        report = summarize_ecosystem(lang, lib_counts, heaps, linear, conc, pair_heaps)
        if report is not None:
            table_rows.append(report.row())

    write_csv(
        out / "fits.csv",
        ("ecosystem", "series", "kind", "param", "prefactor_or_intercept", "r_squared", "n_min", "n_max", "points", "note"),
        fit_rows,
    )
    header = (
        "language", "libraries", "imports", "share_50_pct", "share_80_pct", "share_90_pct",
        "heaps_beta", "heaps_r2", "pair_slope", "pair_r2",
    )
    write_csv(out / "table1.csv", header, ([r[h] for h in header] for r in table_rows))

    lines = [
        f"ecolens {__version__}",
        f"eligibility threshold: {cfg.threshold} ({cfg.threshold_semantics})",
        f"fit window: N > {cfg.fit_trim} (first {cfg.fit_trim} posts of each series dropped); OLS, Heaps on log-log",
        "",
        "  ".join(f"{h:>12}" for h in header),
    ]
    for r in table_rows:
        lines.append("  ".join(f"{fmt(r[h]):>12}" for h in header))
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    if cfg.plots and series:
        from .plots import novelty_figure, pareto_figure

        novelty_figure(series, out / "figure1_growth.svg")
        if curves:
            pareto_figure(curves, out / "figure3_pareto.svg")
    return {"ecosystems": len(series), "table_rows": len(table_rows), "fits": len(fit_rows)}


# ---- users / geo -----------------------------------------------------------


def _read_flags(path: Path) -> dict[str, AnalysisRows]:
    cols: dict[str, tuple[list, ...]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        next(r)
        for lang, pid, ts, uid, s, q in r:
            c = cols.setdefault(lang, ([], [], [], [], []))
            c[0].append(int(pid))
            c[1].append(ts)
            c[2].append(int(uid) if uid else -1)
            c[3].append(s == "1")
            c[4].append(q == "1")
    rows = {}
    for lang, (pids, ts, users, s, q) in cols.items():
        users = np.asarray(users, dtype=np.int64)
        years = np.fromiter((int(t[:4]) for t in ts), dtype=np.int32, count=len(ts))
        r = AnalysisRows(lang, np.asarray(pids, dtype=np.int64), users, None, np.asarray(s), np.asarray(q), years)
        r.ts = ts
        rows[lang] = r
    return rows


def _experience(cfg: PipelineConfig, rows: dict[str, AnalysisRows]) -> dict[str, np.ndarray]:
    if cfg.experience_basis == "qualifying":
        return {lang: prior_counts(r.user_ids) for lang, r in rows.items()}
    path = cfg.out / ACTIVITY
    if not path.exists():
        raise StageError("experience_basis 'tagged' needs activity.jsonl from the ingest stage")
    history: dict[str, list] = {lang: [] for lang in rows}
    for a in read_activity_jsonl(path):
        for lang in a.languages:
            if lang in history:
                history[lang].append((a.ts, a.post_id, a.user_id))
    out = {}
    for lang, r in rows.items():
        h = sorted(history[lang], key=lambda x: (x[0], x[1]))
        out[lang] = experience_from_history(r.ts, r.post_ids, r.user_ids, h)
    return out


def _bin_rows(rates, only: str | None = None):
    for r in rates.rows:
        if only is None or r.lang == only:
            yield (r.lang, r.bin, r.posts, r.simple_rate, r.pair_rate)


def stage_users(cfg: PipelineConfig) -> dict:
    out = cfg.out
    rows = _read_flags(_source(cfg, FLAGS, None, "novelty"))
    experience = _experience(cfg, rows)
    for lang, r in rows.items():
        r.experience = experience[lang]
    rates = novelty_rate_by_bin(rows.values())
    write_csv(out / "user_bins.csv", BIN_HEADER, _bin_rows(rates, "pooled"))
    for lang in rows:
        write_csv(out / f"user_bins_{lang}.csv", BIN_HEADER, _bin_rows(rates, lang))

    meta = {
        "experience_basis": cfg.experience_basis,
        "bins": list(BIN_LABELS),
        "anonymous_rows": rates.anonymous,
        "empty": rates.empty,
        "variants": {},
    }
    variants = cfg.variant_list
    if variants:
        tables = _load_tables(cfg)
        # experience is a property of the full stream and does not change per variant
        exp = {lang: experience[lang] for lang in tables}
        for name, vr in robustness_variants(tables, exp, variants, cfg.threshold_semantics).items():
            write_csv(out / f"user_bins_{name}.csv", BIN_HEADER, _bin_rows(vr))
            meta["variants"][name] = {"empty": vr.empty, "anonymous_rows": vr.anonymous}
    write_json(out / "users_meta.json", meta)

    if cfg.plots:
        from .plots import user_bins_figure

        user_bins_figure(rates.rows, out / "figure4_users.svg")
    return {"rows": sum(len(r) for r in rows.values()), "anonymous": rates.anonymous.get("pooled", 0), "variants": len(variants)}


def stage_geo(cfg: PipelineConfig) -> dict:
    out = cfg.out
    if not cfg.user_countries:
        return {"skip_reason": "no user_countries mapping configured"}
    stats = LoadStats()
    mapping = load_user_countries(cfg.user_countries, stats)
    rows = _read_flags(_source(cfg, FLAGS, None, "novelty"))
    table = country_novelty_rates(rows.values(), mapping, cfg.min_posts)
    posting = set()
    for r in rows.values():
        posting.update(r.user_ids[r.user_ids >= 0].tolist())
    write_csv(
        out / "geo_rates.csv",
        ("country", "posts", "simple_rate", "pair_rate"),
        ((c.country, c.posts, c.simple_rate, c.pair_rate) for c in table.countries),
    )
    meta = {
        "min_posts": cfg.min_posts,
        "pooling": "all (post, ecosystem) rows of mapped users; global averages over all mapped rows",
        "global_simple_rate": table.global_simple,
        "global_pair_rate": table.global_pair,
        "mapped_rows": table.mapped_posts,
        "user_coverage": coverage(mapping, posting),
        "countries_shown": len(table.countries),
        "suppressed": {c.country: c.posts for c in table.suppressed},
        "empty": table.empty,
        "mapping_rows": vars(stats),
    }
    write_json(out / "geo_meta.json", meta)
    if cfg.plots and table.countries:
        from .plots import geo_figure

        geo_figure(table, out / "figure5_geo.svg")
    return {"countries": len(table.countries), "suppressed": len(table.suppressed), "empty": table.empty}


STAGE_FUNCS = {
    "ingest": stage_ingest,
    "extract": stage_extract,
    "novelty": stage_novelty,
    "analyze": stage_analyze,
    "users": stage_users,
    "geo": stage_geo,
}


# ---- manifest --------------------------------------------------------------


def _input_digests(cfg: PipelineConfig) -> dict:
    out = {}
    for name in ("input_dump", "input_snippets", "input_events", "user_countries", "grammar_file"):
        path = getattr(cfg, name)
        if path:
            out[name] = {"path": str(path), "sha256": sha256_file(path)}
    return out


def _file_digests(out_dir: Path) -> dict:
    return {
        p.relative_to(out_dir).as_posix(): sha256_file(p)
        for p in sorted(out_dir.rglob("*"))
        if p.is_file() and p.name != MANIFEST
    }


def write_manifest(cfg: PipelineConfig, stages: dict) -> dict:
    path = cfg.out / MANIFEST
    previous = {}
    if path.exists():
        try:
            previous = json.loads(path.read_text(encoding="utf-8")).get("stages", {})
        except (OSError, ValueError):
            previous = {}
    merged = {s: previous[s] for s in STAGES if s in previous}
    merged.update(stages)
    merged = {s: merged[s] for s in STAGES if s in merged}
    failed = any(v.get("status") == "FAILED" for v in merged.values())
    manifest = {
        "tool": "ecolens",
        "version": __version__,
        "kernel": kernels.active(),
        "config": cfg.as_dict(),
        "config_sha256": cfg.digest(),
        "inputs": _input_digests(cfg),
        "stages": merged,
        "status": "FAILED" if failed else "ok",
        "files": _file_digests(cfg.out),
    }
    write_json(path, manifest)
    return manifest


def run(cfg: PipelineConfig, stages=None) -> dict:
    """Run the enabled stages in order; returns the manifest.

    A failing stage stops the run; artifacts written so far stay on disk
    and the manifest marks the stage FAILED.
    """
    if stages is not None:
        cfg.stages = {s: s in stages for s in STAGES}
    cfg.validate()
    cfg.out.mkdir(parents=True, exist_ok=True)
    done: dict[str, dict] = {}
    for name in STAGES:
        if not cfg.stages.get(name):
            continue
        log.info("stage %s", name)
        try:
            counts = STAGE_FUNCS[name](cfg)
        except (StageError, ConfigError, OSError, ValueError) as exc:
            log.error("stage %s failed: %s", name, exc)
            log.debug("%s", traceback.format_exc())
            done[name] = {"status": "FAILED", "error": f"{type(exc).__name__}: {exc}"}
            break
        status = "skipped" if "skip_reason" in counts else "ok"
        done[name] = {"status": status, "counts": counts}
    return write_manifest(cfg, done)
