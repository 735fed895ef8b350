"""Command line: ``ecolens ingest|extract|novelty|analyze|users|geo|run|synth|validity``."""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from . import __version__, kernels
from .config import STAGES, ConfigError, load_config
from .pipeline import run as run_pipeline


def _overrides(out, lang, threshold, **extra):
    o = dict(extra)
    if out is not None:
        o["out_dir"] = out
    if lang is not None:
        o["langs"] = [s.strip() for s in lang.split(",") if s.strip()]
    if threshold is not None:
        o["threshold"] = threshold
    return o


def _common(f):
    f = click.option("--backend", type=click.Choice(["compiled", "python"]), default=None, help="Novelty kernel.")(f)
    f = click.option("--threshold", type=int, default=None, help="Eligibility threshold (posts).")(f)
    f = click.option("--lang", default=None, help="Comma-separated ecosystem ids.")(f)
    f = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(f)
    f = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)(f)
    return f


def _run(stages, config_path, out, lang, threshold, backend, **extra):
    if backend:
        kernels.use_backend(backend)
    try:
        cfg = load_config(config_path, **_overrides(out, lang, threshold, **extra))
        manifest = run_pipeline(cfg, stages)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    for name, info in manifest["stages"].items():
        if stages is None or name in stages:
            click.echo(f"{name}: {info['status']}" + (f" ({info['error']})" if "error" in info else ""))
    if manifest["status"] == "FAILED":
        sys.exit(1)


@click.group()
@click.version_option(__version__, prog_name="ecolens")
@click.option("-v", "--verbose", count=True)
def main(verbose):
    """Library-import novelty analysis of Q&A dumps."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@_common
@click.option("--dump", type=click.Path(exists=True, dir_okay=False), default=None, help="Posts.xml")
@click.option("--snippets", type=click.Path(exists=True, dir_okay=False), default=None, help="SnippetPost JSONL")
def ingest(config_path, out, lang, threshold, backend, dump, snippets):
    """Parse a dump (or snippet JSONL) into ordered snippet posts."""
    _run(["ingest"], config_path, out, lang, threshold, backend, input_dump=dump, input_snippets=snippets)


@main.command()
@_common
@click.option("--snippets", type=click.Path(exists=True, dir_okay=False), default=None)
def extract(config_path, out, lang, threshold, backend, snippets):
    """Scan snippets with the import grammars into events.jsonl."""
    _run(["extract"], config_path, out, lang, threshold, backend, input_snippets=snippets)


@main.command()
@_common
@click.option("--events", type=click.Path(exists=True, dir_okay=False), default=None)
def novelty(config_path, out, lang, threshold, backend, events):
    """Detect simple and pair novelties."""
    _run(["novelty"], config_path, out, lang, threshold, backend, input_events=events)


@main.command()
@_common
def analyze(config_path, out, lang, threshold, backend):
    """Growth fits, Pareto shares and the summary table."""
    _run(["analyze"], config_path, out, lang, threshold, backend)


@main.command()
@_common
@click.option("--events", type=click.Path(exists=True, dir_okay=False), default=None)
def users(config_path, out, lang, threshold, backend, events):
    """Novelty rates by poster experience, plus robustness variants."""
    _run(["users"], config_path, out, lang, threshold, backend, input_events=events)


@main.command()
@_common
@click.option("--countries", type=click.Path(exists=True, dir_okay=False), default=None)
def geo(config_path, out, lang, threshold, backend, countries):
    """Per-country novelty rates from a user -> country CSV."""
    _run(["geo"], config_path, out, lang, threshold, backend, user_countries=countries)


@main.command()
@_common
@click.option("--dump", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--snippets", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--events", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--countries", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--from-stage", type=click.Choice(STAGES), default=None, help="Resume: skip earlier stages.")
def run(config_path, out, lang, threshold, backend, dump, snippets, events, countries, from_stage):
    """Run every enabled stage end to end."""
    stages = None
    if from_stage is not None:
        stages = list(STAGES[STAGES.index(from_stage):])
    elif events and not (dump or snippets):
        stages = list(STAGES[2:])
    _run(
        stages, config_path, out, lang, threshold, backend,
        input_dump=dump, input_snippets=snippets, input_events=events, user_countries=countries,
    )


@main.command()
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Events JSONL to write.")
@click.option("--posts", type=int, default=10_000, show_default=True)
@click.option("--lang", default="python", show_default=True)
@click.option("--libs-per-post", default="2,3,4", show_default=True)
@click.option("--innovation", type=click.Choice(["constant", "power"]), default="constant", show_default=True)
@click.option("-p", "p", type=float, default=0.1, show_default=True, help="Constant innovation rate.")
@click.option("--beta", type=float, default=0.5, show_default=True)
@click.option("--scale", type=float, default=1.0, show_default=True)
@click.option("--reuse", type=click.Choice(["uniform", "preferential"]), default="uniform", show_default=True)
@click.option("--users", type=int, default=1000, show_default=True)
@click.option("--anonymous", type=float, default=0.0, show_default=True)
@click.option("--countries-out", type=click.Path(dir_okay=False), default=None, help="Also write a user -> country CSV.")
@click.option("--seed", type=int, default=0, show_default=True)
def synth(out, posts, lang, libs_per_post, innovation, p, beta, scale, reuse, users, anonymous, countries_out, seed):
    """Write a synthetic urn-model event corpus."""
    from .novelty import write_events
    from .synth import SynthConfig, generate, user_countries, write_user_countries

    cfg = SynthConfig(
        posts=posts,
        langs=tuple(s.strip() for s in lang.split(",") if s.strip()),
        libs_per_post=tuple(int(k) for k in libs_per_post.split(",")),
        innovation=innovation,
        p=p,
        beta=beta,
        scale=scale,
        reuse=reuse,
        users=users,
        anonymous=anonymous,
        seed=seed,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise click.BadParameter(str(exc))
    n = write_events(generate(cfg), out)
    click.echo(f"wrote {n} events to {out}")
    if countries_out:
        write_user_countries(user_countries(cfg), countries_out)


@main.command()
@click.option("--canon", type=click.Path(exists=True, dir_okay=False), required=True, help="One name per line.")
@click.option("--lang", required=True)
@click.option("--events", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", type=click.Path(file_okay=False), default="ecolens-out", show_default=True)
def validity(canon, lang, events, out):
    """Share of extracted names present in a canonical list; writes the miss list."""
    from .io import write_csv
    from .novelty import read_events
    from .validity import load_canonical, validity_rate

    out_dir = Path(out)
    src = Path(events) if events else out_dir / "events.jsonl"
    if not src.exists():
        raise click.UsageError(f"no events at {src}; pass --events")
    report = validity_rate(read_events(src), load_canonical(canon, lang))
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(
        out_dir / f"validity_{lang}.csv",
        ("library", "in_canon"),
        sorted([(n, 1) for n in report.hits] + [(n, 0) for n in report.misses]),
    )
    rate = "absent" if report.rate is None else f"{report.rate:.4f}"
    click.echo(f"{lang}: {len(report.hits)}/{report.distinct} names canonical, rate {rate}")


if __name__ == "__main__":
    main()
