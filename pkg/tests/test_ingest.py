import random
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from ecolens.ingest import (
    IngestStats,
    SnippetPost,
    extract_snippets,
    format_ts,
    ingest_dump,
    order_stream,
    parse_dump,
    parse_row,
    parse_tags,
    parse_ts,
    read_snippet_jsonl,
    resolve_languages,
    write_snippet_jsonl,
)


def row(**attrs):
    body = " ".join(f'{k}="{v}"' for k, v in attrs.items())
    return f"<row {body} />"


def test_question_row():
    post = parse_row(row(Id=1, PostTypeId=1, CreationDate="2010-01-01T00:00:00.123", Tags="&lt;python&gt;&lt;pandas&gt;"))
    assert post.post_type == "question"
    assert post.tags == ["python", "pandas"]
    assert post.parent_id is None
    assert post.creation_ts == datetime(2010, 1, 1, 0, 0, 0, 123000, tzinfo=timezone.utc)


def test_answer_row_has_parent_and_no_tags():
    post = parse_row(row(Id=2, PostTypeId=2, ParentId=42, CreationDate="2010-01-01T00:00:00.000", Tags="&lt;x&gt;"))
    assert post.post_type == "answer"
    assert post.parent_id == 42
    assert post.tags == []


def test_pipe_tags():
    assert parse_tags("|python|python-3.x|") == ["python", "python-3.x"]
    assert parse_tags("<C++><Qt>") == ["c++", "qt"]
    assert parse_tags(None) == []


def test_three_row_fixture(fixtures):
    stats = IngestStats()
    with open(fixtures / "posts_three.xml", "rb") as fh:
        posts = list(parse_dump(fh, stats))
    assert [p.id for p in posts] == [1, 2]
    assert stats.rows == 3
    assert stats.emitted == 2
    assert sum(stats.skipped.values()) == 1
    assert stats.skipped["other_post_type"] == 1


def test_bad_rows_are_counted_not_fatal():
    lines = [
        "<?xml version='1.0'?>",
        "<posts>",
        row(Id=1, PostTypeId=1, CreationDate="2010-01-01T00:00:00.000"),
        row(Id=2, PostTypeId=1, CreationDate="yesterday"),
        '<row Id="3" PostTypeId="1" CreationDate="2010-01-01T00:00:00.000 />',
        row(Id=4, PostTypeId=2, CreationDate="2010-01-01T00:00:00.000"),
        row(Id=5, PostTypeId=3, CreationDate="2010-01-01T00:00:00.000"),
        "</posts>",
    ]
    stats = IngestStats()
    posts = list(parse_dump(lines, stats))
    assert [p.id for p in posts] == [1]
    assert stats.skipped == {"bad_timestamp": 1, "malformed": 2, "other_post_type": 1}
    assert stats.rows == stats.emitted + sum(stats.skipped.values())


def test_timestamp_round_trip():
    ts = parse_ts("2008-07-31T21:42:52.667")
    assert format_ts(ts) == "2008-07-31T21:42:52.667"
    assert format_ts(parse_ts("2008-07-31T21:42:52")) == "2008-07-31T21:42:52.000"


def test_resolve_languages():
    q = parse_row(row(Id=1, PostTypeId=1, CreationDate="2010-01-01T00:00:00.000", Tags="&lt;python&gt;&lt;python-3.x&gt;&lt;flask&gt;"))
    assert resolve_languages(q, {}) == {"python"}
    a = parse_row(row(Id=2, PostTypeId=2, ParentId=7, CreationDate="2010-01-01T00:00:00.000"))
    assert resolve_languages(a, {7: ["java", "android"]}) == {"java"}
    multi = parse_row(row(Id=3, PostTypeId=1, CreationDate="2010-01-01T00:00:00.000", Tags="&lt;c++&gt;&lt;python&gt;"))
    assert resolve_languages(multi, {}) == {"cpp", "python"}


def test_orphan_answer():
    stats = IngestStats()
    a = parse_row(row(Id=2, PostTypeId=2, ParentId=7, CreationDate="2010-01-01T00:00:00.000"))
    assert resolve_languages(a, {}, stats=stats) == frozenset()
    assert stats.orphans == 1


def test_extract_snippets():
    assert extract_snippets("<p>x</p><pre><code>import pandas as pd</code></pre>") == ["import pandas as pd"]
    assert extract_snippets("<p>no code</p>") == []
    assert extract_snippets("<p>inline <code>import os</code></p>") == []
    body = "<pre><code>a</code></pre><p>b</p><pre class='lang-py'><code>c &amp;&amp; d</code></pre>"
    assert extract_snippets(body) == ["a", "c && d"]


def test_extract_snippets_unclosed():
    assert extract_snippets("<pre><code>import os\nimport sys") == ["import os\nimport sys"]


def test_double_escaped_entity_in_row():
    # the dump escapes HTML once more: &amp;lt; in the attribute is &lt; in the body, "<" in the code
    line = row(
        Id=1,
        PostTypeId=1,
        CreationDate="2010-01-01T00:00:00.000",
        Body="&lt;pre&gt;&lt;code&gt;if a &amp;lt; b:&lt;/code&gt;&lt;/pre&gt;",
    )
    post = parse_row(line)
    assert post.body_html == "<pre><code>if a &lt; b:</code></pre>"
    assert extract_snippets(post.body_html) == ["if a < b:"]


def test_order_stream_tie_break():
    a = SnippetPost(7, "2010-01-01T00:00:00.000", None, frozenset({"python"}), ["x"])
    b = SnippetPost(3, "2010-01-01T00:00:00.000", None, frozenset({"python"}), ["x"])
    assert [p.post_id for p in order_stream([a, b])] == [3, 7]
    assert order_stream(order_stream([a, b])) == order_stream([a, b])


def test_order_stream_matches_oracle():
    rng = random.Random(3)
    posts = [
        SnippetPost(i, f"2010-01-{rng.randint(1, 28):02d}T00:00:00.000", None, frozenset({"r"}), ["x"])
        for i in range(1, 1001)
    ]
    rng.shuffle(posts)
    got = order_stream(posts)
    oracle = sorted(posts, key=lambda p: (p.ts, p.post_id))
    assert [p.post_id for p in got] == [p.post_id for p in oracle]
    assert sorted(p.post_id for p in got) == list(range(1, 1001))


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(1, 50)), unique_by=lambda t: t[1], max_size=40))
def test_order_stream_is_total_order(items):
    posts = [SnippetPost(pid, f"2011-01-01T00:00:0{t}.000", None, frozenset({"r"}), ["x"]) for t, pid in items]
    out = order_stream(posts)
    keys = [(p.ts, p.post_id) for p in out]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys) == len(posts)


def test_ingest_dump_inherits_tags(fixtures):
    stats = IngestStats()
    posts, activity = ingest_dump(fixtures / "posts_toy.xml", stats=stats)
    assert [p.post_id for p in posts] == [10, 12, 13]
    assert all(p.languages == {"python"} for p in posts)
    # inline code is not a snippet; entities decoded
    assert posts[0].snippets == ["import os\nimport sys\n"]
    assert "if a < b: pass" in posts[2].snippets[0]
    # the java question has no snippet but still counts as activity
    assert [a.post_id for a in activity] == [10, 12, 13, 14]
    assert stats.orphans == 1
    assert stats.skipped == {"bad_timestamp": 1, "malformed": 1, "other_post_type": 1}
    assert stats.rows == 8 == stats.emitted + sum(stats.skipped.values())


def test_ingest_dump_language_filter(fixtures):
    posts, activity = ingest_dump(fixtures / "posts_toy.xml", languages=["java"])
    assert posts == []
    assert [a.post_id for a in activity] == [14]


def test_snippet_jsonl_round_trip(tmp_path, fixtures):
    posts, _ = ingest_dump(fixtures / "posts_toy.xml")
    path = tmp_path / "s.jsonl"
    assert write_snippet_jsonl(posts, path) == 3
    back = list(read_snippet_jsonl(path))
    assert back == posts


@pytest.mark.parametrize("text", ["2010-13-01T00:00:00.000", "", "2010-01-01"])
def test_bad_timestamps(text):
    with pytest.raises(ValueError):
        parse_ts(text)
