"""Corpus parsing, preprocessing, and user-feature count matrices."""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp


class CorpusError(Exception):
    """Raised for malformed or inconsistent corpus input."""


@dataclass(frozen=True)
class Tweet:
    author: str
    tokens: tuple[str, ...] = ()
    hashtags: tuple[str, ...] = ()
    url_domains: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()
    retweet_of: str | None = None
    retweet_edited: bool = False
    timestamp: int = 0

    def __post_init__(self):
        if self.retweet_edited and self.retweet_of is None:
            raise CorpusError("retweet_edited requires retweet_of")
        for name in ("tokens", "hashtags", "url_domains", "mentions"):
            if any(s == "" for s in getattr(self, name)):
                raise CorpusError(f"empty string in {name}")


@dataclass
class Corpus:
    users: list[str] = field(default_factory=list)
    tweets: list[Tweet] = field(default_factory=list)
    word_vocab: list[str] = field(default_factory=list)
    hashtag_vocab: list[str] = field(default_factory=list)
    domain_vocab: list[str] = field(default_factory=list)

    @property
    def n_users(self) -> int:
        return len(self.users)


@dataclass
class PreprocessConfig:
    min_word_freq: int = 20
    min_hashtag_freq: int = 2
    min_domain_freq: int = 2
    max_tweets_per_user: int = 200
    stopword_file: str | None = None
    min_timestamp: int | None = None
    exclude_retweet_text: bool = False

    def __post_init__(self):
        for name in ("min_word_freq", "min_hashtag_freq", "min_domain_freq", "max_tweets_per_user"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


_JSONL_LIST_KEYS = ("tokens", "hashtags", "url_domains", "mentions")


def _tweet_from_record(rec: dict, line_no: int) -> Tweet:
    if "author" not in rec or not rec["author"]:
        raise CorpusError(f"line {line_no}: missing author")
    kwargs = {"author": rec["author"]}
    for key in _JSONL_LIST_KEYS:
        val = rec.get(key, [])
        if not isinstance(val, list) or any(not isinstance(s, str) for s in val):
            raise CorpusError(f"line {line_no}: {key} must be a list of strings")
        kwargs[key] = tuple(val)
    kwargs["retweet_of"] = rec.get("retweet_of") or None
    kwargs["retweet_edited"] = bool(rec.get("retweet_edited", False))
    ts = rec.get("timestamp", 0)
    if not isinstance(ts, (int, float)):
        raise CorpusError(f"line {line_no}: timestamp must be numeric")
    kwargs["timestamp"] = int(ts)
    try:
        return Tweet(**kwargs)
    except CorpusError as exc:
        raise CorpusError(f"line {line_no}: {exc}") from exc


def _split_cell(cell: str) -> list[str]:
    return cell.split() if cell else []


def parse_corpus(path: str, format: str = "jsonl") -> Corpus:
    """Read a corpus file into a raw (unfiltered) Corpus.

    JSONL: one object per line with keys author, tokens, hashtags,
    url_domains, mentions, retweet_of, retweet_edited, timestamp and an
    optional unique id. CSV: same columns, list cells space-separated.
    User order is first-appearance order (author, then mentions, then
    retweet target).
    """
    tweets: list[Tweet] = []
    seen_ids: set[str] = set()
    if format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
                if not isinstance(rec, dict):
                    raise CorpusError(f"line {line_no}: record is not an object")
                _check_id(rec, seen_ids, line_no)
                tweets.append(_tweet_from_record(rec, line_no))
    elif format == "csv":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for line_no, row in enumerate(reader, start=2):
                rec = {
                    "author": row.get("author", ""),
                    "retweet_of": row.get("retweet_of") or None,
                    "retweet_edited": (row.get("retweet_edited", "") or "").lower() in ("1", "true", "yes"),
                    "timestamp": int(row["timestamp"]) if row.get("timestamp") else 0,
                }
                if row.get("id"):
                    rec["id"] = row["id"]
                for key in _JSONL_LIST_KEYS:
                    rec[key] = _split_cell(row.get(key, "") or "")
                _check_id(rec, seen_ids, line_no)
                tweets.append(_tweet_from_record(rec, line_no))
    else:
        raise ValueError(f"unknown corpus format: {format!r}")

    users: dict[str, None] = {}
    words: dict[str, None] = {}
    hashtags: dict[str, None] = {}
    domains: dict[str, None] = {}
    for t in tweets:
        users.setdefault(t.author, None)
        for m in t.mentions:
            users.setdefault(m, None)
        if t.retweet_of is not None:
            users.setdefault(t.retweet_of, None)
        for w in t.tokens:
            words.setdefault(w, None)
        for h in t.hashtags:
            hashtags.setdefault(h, None)
        for d in t.url_domains:
            domains.setdefault(d, None)
    return Corpus(
        users=list(users),
        tweets=tweets,
        word_vocab=list(words),
        hashtag_vocab=list(hashtags),
        domain_vocab=list(domains),
    )


def _check_id(rec: dict, seen: set[str], line_no: int) -> None:
    tid = rec.get("id")
    if tid is None:
        return
    tid = str(tid)
    if tid in seen:
        raise CorpusError(f"line {line_no}: duplicate tweet id {tid!r}")
    seen.add(tid)


def load_stopwords(path: str) -> set[str]:
    """One lowercase token per line, UTF-8; blank lines ignored."""
    with open(path, encoding="utf-8") as fh:
        return {line.strip() for line in fh if line.strip()}


def _has_content(t: Tweet) -> bool:
    return bool(t.tokens or t.hashtags or t.url_domains or t.mentions or t.retweet_of)


def preprocess(c: Corpus, cfg: PreprocessConfig) -> Corpus:
    """Apply frequency thresholds, the per-user tweet cap, and content filters.

    Steps run once, in a fixed order: timestamp cutoff, per-user cap on most
    recent tweets, word threshold + stop list, hashtag/domain thresholds,
    removal of content-less tweets, removal of tweet-less users.
    """
    stopwords = load_stopwords(cfg.stopword_file) if cfg.stopword_file else set()

    tweets = list(c.tweets)
    if cfg.exclude_retweet_text:
        tweets = [replace(t, tokens=()) if t.retweet_of is not None else t for t in tweets]
    if cfg.min_timestamp is not None:
        tweets = [t for t in tweets if t.timestamp >= cfg.min_timestamp]

    # Per-user cap: keep the most recent tweets, later file position breaks
    # timestamp ties.
    by_user: dict[str, list[tuple[int, int, Tweet]]] = {}
    for pos, t in enumerate(tweets):
        by_user.setdefault(t.author, []).append((t.timestamp, pos, t))
    kept_pos: set[int] = set()
    for items in by_user.values():
        items.sort(key=lambda x: (x[0], x[1]))
        for _, pos, _ in items[-cfg.max_tweets_per_user:]:
            kept_pos.add(pos)
    tweets = [t for pos, t in enumerate(tweets) if pos in kept_pos]

    word_freq = Counter(w for t in tweets for w in t.tokens)
    hashtag_freq = Counter(h for t in tweets for h in t.hashtags)
    domain_freq = Counter(d for t in tweets for d in t.url_domains)
    keep_word = {w for w, f in word_freq.items() if f >= cfg.min_word_freq and w not in stopwords}
    keep_hashtag = {h for h, f in hashtag_freq.items() if f >= cfg.min_hashtag_freq}
    keep_domain = {d for d, f in domain_freq.items() if f >= cfg.min_domain_freq}

    tweets = [
        replace(
            t,
            tokens=tuple(w for w in t.tokens if w in keep_word),
            hashtags=tuple(h for h in t.hashtags if h in keep_hashtag),
            url_domains=tuple(d for d in t.url_domains if d in keep_domain),
        )
        for t in tweets
    ]
    tweets = [t for t in tweets if _has_content(t)]

    users_with_tweets = {t.author for t in tweets}
    users = [u for u in c.users if u in users_with_tweets]

    word_vocab: dict[str, None] = {}
    hashtag_vocab: dict[str, None] = {}
    domain_vocab: dict[str, None] = {}
    for t in tweets:
        for w in t.tokens:
            word_vocab.setdefault(w, None)
        for h in t.hashtags:
            hashtag_vocab.setdefault(h, None)
        for d in t.url_domains:
            domain_vocab.setdefault(d, None)

    return Corpus(
        users=users,
        tweets=tweets,
        word_vocab=list(word_vocab),
        hashtag_vocab=list(hashtag_vocab),
        domain_vocab=list(domain_vocab),
    )


def _count_matrix(c: Corpus, vocab: list[str], getter) -> sp.csr_matrix:
    user_ix = {u: i for i, u in enumerate(c.users)}
    feat_ix = {f: j for j, f in enumerate(vocab)}
    rows, cols = [], []
    for t in c.tweets:
        i = user_ix.get(t.author)
        if i is None:
            continue
        for f in getter(t):
            j = feat_ix.get(f)
            if j is not None:
                rows.append(i)
                cols.append(j)
    data = np.ones(len(rows), dtype=np.int64)
    mat = sp.coo_matrix((data, (rows, cols)), shape=(len(c.users), len(vocab)))
    return mat.tocsr()


def build_feature_matrices(c: Corpus) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """User-by-feature occurrence counts for words, hashtags, and domains.

    Rows follow c.users order, columns follow the vocab order.
    """
    x_uw = _count_matrix(c, c.word_vocab, lambda t: t.tokens)
    x_uh = _count_matrix(c, c.hashtag_vocab, lambda t: t.hashtags)
    x_ud = _count_matrix(c, c.domain_vocab, lambda t: t.url_domains)
    return x_uw, x_uh, x_ud


def write_corpus_jsonl(c: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in c.tweets:
            rec = {
                "author": t.author,
                "tokens": list(t.tokens),
                "hashtags": list(t.hashtags),
                "url_domains": list(t.url_domains),
                "mentions": list(t.mentions),
                "retweet_of": t.retweet_of,
                "retweet_edited": t.retweet_edited,
                "timestamp": t.timestamp,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
