"""Stack Exchange Posts.xml ingestion.

Rows are parsed one line at a time so a malformed row costs only itself.
Ingestion is two-pass: the first pass indexes question tags, the second
resolves answers against that index, because the dump does not guarantee
that a question precedes its answers.
"""

from __future__ import annotations

import json
import logging
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from html.parser import HTMLParser
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping

from .ecosystems import DEFAULT_TAG_ALIASES

log = logging.getLogger(__name__)

TS_FORMAT = "%Y-%m-%dT%H:%M:%S.%f"
POST_TYPES = {"1": "question", "2": "answer"}


@dataclass(slots=True)
class RawPost:
    id: int
    post_type: str
    parent_id: int | None
    creation_ts: datetime
    tags: list[str]
    body_html: str
    owner_user_id: int | None


@dataclass(slots=True)
class SnippetPost:
    post_id: int
    ts: str
    user_id: int | None
    languages: frozenset[str]
    snippets: list[str]

    def to_json(self) -> str:
        return json.dumps(
            {
                "post_id": self.post_id,
                "ts": self.ts,
                "user_id": self.user_id,
                "langs": sorted(self.languages),
                "snippets": self.snippets,
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "SnippetPost":
        d = json.loads(line)
        return cls(int(d["post_id"]), d["ts"], d.get("user_id"), frozenset(d["langs"]), list(d["snippets"]))


@dataclass
class IngestStats:
    """Row-level diagnostics. ``rows`` always equals emitted + every skip bucket."""

    rows: int = 0
    emitted: int = 0
    skipped: Counter = field(default_factory=Counter)
    orphans: int = 0

    def skip(self, reason: str):
        self.skipped[reason] += 1

    def as_dict(self) -> dict:
        return {
            "rows": self.rows,
            "emitted": self.emitted,
            "skipped": dict(sorted(self.skipped.items())),
            "orphan_answers": self.orphans,
        }


def format_ts(ts: datetime) -> str:
    """Canonical millisecond timestamp; lexicographic order is chronological."""
    return ts.strftime(TS_FORMAT)[:-3]


def parse_ts(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1]
    try:
        ts = datetime.strptime(text, TS_FORMAT)
    except ValueError:
        ts = datetime.strptime(text, "%Y-%m-%dT%H:%M:%S")
    return ts.replace(tzinfo=timezone.utc)


def parse_tags(text: str | None) -> list[str]:
    """Tags come either as ``<a><b>`` or ``|a|b|``."""
    if not text:
        return []
    text = text.strip()
    if text.startswith("<"):
        parts = text.strip("<>").split("><")
    else:
        parts = text.strip("|").split("|")
    return [p.strip().lower() for p in parts if p.strip()]


def _opt_int(value: str | None) -> int | None:
    if value is None or value == "":
        return None
    n = int(value)
    if n <= 0:
        raise ValueError(f"non-positive id {n}")
    return n


def parse_row(line: str) -> RawPost | None:
    """Parse one ``<row .../>`` line.

    Returns None for post types other than question/answer. Raises
    ValueError (or ET.ParseError) for malformed rows.
    """
    elem = ET.fromstring(line)
    if elem.tag != "row":
        raise ValueError(f"unexpected element <{elem.tag}>")
    attrs = elem.attrib
    post_type = POST_TYPES.get(attrs.get("PostTypeId", ""))
    if post_type is None:
        return None
    post_id = _opt_int(attrs.get("Id"))
    if post_id is None:
        raise ValueError("row without Id")
    try:
        ts = parse_ts(attrs["CreationDate"])
    except (KeyError, ValueError) as exc:
        raise _BadTimestamp(str(exc)) from exc
    parent = _opt_int(attrs.get("ParentId")) if post_type == "answer" else None
    if post_type == "answer" and parent is None:
        raise ValueError("answer without ParentId")
    return RawPost(
        id=post_id,
        post_type=post_type,
        parent_id=parent,
        creation_ts=ts,
        tags=parse_tags(attrs.get("Tags")) if post_type == "question" else [],
        body_html=attrs.get("Body", ""),
        owner_user_id=_opt_int(attrs.get("OwnerUserId")),
    )


class _BadTimestamp(ValueError):
    pass


def parse_dump(lines: Iterable[str | bytes], stats: IngestStats | None = None) -> Iterator[RawPost]:
    """Yield a RawPost for every question/answer row in a Posts.xml stream.

    Lines that are not ``<row`` elements (XML declaration, root tags) are
    structural and not counted as rows.
    """
    if stats is None:
        stats = IngestStats()
    for raw in lines:
        line = raw.decode("utf-8", errors="replace") if isinstance(raw, bytes) else raw
        line = line.strip()
        if not line.startswith("<row"):
            continue
        stats.rows += 1
        try:
            post = parse_row(line)
        except _BadTimestamp:
            stats.skip("bad_timestamp")
            continue
        except (ET.ParseError, ValueError):
            stats.skip("malformed")
            continue
        if post is None:
            stats.skip("other_post_type")
            continue
        stats.emitted += 1
        yield post


def resolve_languages(
    post: RawPost,
    question_tag_index: Mapping[int, Iterable[str]],
    aliases: Mapping[str, str] = DEFAULT_TAG_ALIASES,
    stats: IngestStats | None = None,
) -> frozenset[str]:
    """Map a post's effective tags onto ecosystem ids; answers use their parent's tags."""
    if post.post_type == "answer":
        tags = question_tag_index.get(post.parent_id)
        if tags is None:
            if stats is not None:
                stats.orphans += 1
            return frozenset()
    else:
        tags = post.tags
    return frozenset(aliases[t] for t in tags if t in aliases)


class _SnippetScanner(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.blocks: list[str] = []
        self._pre = 0
        self._code = 0
        self._buf: list[str] | None = None

    def handle_starttag(self, tag, attrs):
        if tag == "pre":
            self._pre += 1
        elif tag == "code" and self._pre:
            self._code += 1
            if self._code == 1:
                self._buf = []

    def handle_endtag(self, tag):
        if tag == "code" and self._code:
            self._code -= 1
            if self._code == 0:
                self._flush()
        elif tag == "pre" and self._pre:
            self._pre -= 1
            if self._pre == 0 and self._code:
                self._code = 0
                self._flush()

    def handle_data(self, data):
        if self._buf is not None:
            self._buf.append(data)

    def _flush(self):
        if self._buf is not None:
            self.blocks.append("".join(self._buf))
        self._buf = None

    def close(self):
        super().close()
        if self._code:
            self._flush()


def extract_snippets(body_html: str) -> list[str]:
    """Text of every ``<pre><code>`` block, entity-decoded, in document order."""
    if "<pre" not in body_html:
        return []
    scanner = _SnippetScanner()
    scanner.feed(body_html)
    scanner.close()
    return scanner.blocks


def order_key(post) -> tuple[str, int]:
    return (post.ts, post.post_id)


def order_stream(posts: Iterable) -> list:
    """Sort by (timestamp, post id); the id breaks timestamp ties."""
    return sorted(posts, key=order_key)


@dataclass(slots=True)
class Activity:
    """A language-resolved post, with or without snippets; feeds the 'tagged' experience basis."""

    post_id: int
    ts: str
    user_id: int | None
    languages: frozenset[str]


def _open_lines(path: str | Path) -> IO:
    return open(path, "rb")


def build_question_index(path: str | Path, aliases: Mapping[str, str] = DEFAULT_TAG_ALIASES) -> dict[int, tuple]:
    """Pass 1: question id -> language tags (only alias-map tags are retained)."""
    index: dict[int, tuple] = {}
    with _open_lines(path) as fh:
        for post in parse_dump(fh):
            if post.post_type == "question":
                index[post.id] = tuple(t for t in post.tags if t in aliases)
    return index


def ingest_dump(
    path: str | Path,
    aliases: Mapping[str, str] = DEFAULT_TAG_ALIASES,
    languages: Iterable[str] | None = None,
    stats: IngestStats | None = None,
) -> tuple[list[SnippetPost], list[Activity]]:
    """Two-pass ingestion of a Posts.xml file.

    Returns the ordered snippet-bearing posts and the ordered activity
    list of every post that resolved to at least one configured language.
    """
    if stats is None:
        stats = IngestStats()
    wanted = frozenset(languages) if languages else None
    index = build_question_index(path, aliases)
    log.info("indexed %d questions", len(index))

    posts: list[SnippetPost] = []
    activity: list[Activity] = []
    with _open_lines(path) as fh:
        for raw in parse_dump(fh, stats):
            langs = resolve_languages(raw, index, aliases, stats)
            if wanted is not None:
                langs = langs & wanted
            if not langs:
                continue
            ts = format_ts(raw.creation_ts)
            activity.append(Activity(raw.id, ts, raw.owner_user_id, langs))
            snippets = extract_snippets(raw.body_html)
            if snippets:
                posts.append(SnippetPost(raw.id, ts, raw.owner_user_id, langs, snippets))
    return order_stream(posts), order_stream(activity)


def read_snippet_jsonl(path: str | Path) -> Iterator[SnippetPost]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield SnippetPost.from_json(line)


def write_snippet_jsonl(posts: Iterable[SnippetPost], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for post in posts:
            fh.write(post.to_json())
            fh.write("\n")
            n += 1
    return n


def write_activity_jsonl(activity: Iterable[Activity], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a in activity:
            fh.write(json.dumps({"post_id": a.post_id, "ts": a.ts, "user_id": a.user_id, "langs": sorted(a.languages)}))
            fh.write("\n")
            n += 1
    return n


def read_activity_jsonl(path: str | Path) -> Iterator[Activity]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                yield Activity(int(d["post_id"]), d["ts"], d.get("user_id"), frozenset(d["langs"]))
