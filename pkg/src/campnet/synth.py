"""Synthetic polarized corpora with planted community structure."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from campnet.corpus import Corpus, Tweet

logger = logging.getLogger(__name__)

TOKENS_PER_TWEET = 8
HASHTAG_RATE = 0.5
SECOND_HASHTAG_RATE = 0.2
DOMAIN_RATE = 0.3
EDITED_RETWEET_SHARE = 0.25  # fraction of mention events emitted as edited retweets


@dataclass
class SynthConfig:
    k_true: int = 4
    users_per_community: int = 50
    vocab_per_community: int = 30
    shared_vocab: int = 20
    tweets_per_user: int = 10
    inner_retweet_rate: float = 0.3
    cross_retweet_rate: float = 0.02
    inner_mention_rate: float = 0.5
    cross_mention_rate: float = 0.3
    word_noise: float = 0.1
    seed: int = 0

    def __post_init__(self):
        rates = (
            self.inner_retweet_rate,
            self.cross_retweet_rate,
            self.inner_mention_rate,
            self.cross_mention_rate,
            self.word_noise,
        )
        if any(r < 0 or r > 1 for r in rates):
            raise ValueError("rates must be in [0, 1]")
        if self.inner_retweet_rate + self.cross_retweet_rate > 1:
            raise ValueError("retweet rates must sum to at most 1")
        if self.cross_retweet_rate >= self.inner_retweet_rate:
            raise ValueError("cross_retweet_rate must be below inner_retweet_rate")
        if self.k_true < 2 or self.users_per_community < 1 or self.tweets_per_user < 1:
            raise ValueError("k_true >= 2, users_per_community >= 1, tweets_per_user >= 1")


def _pools(prefix: str, k: int, per_camp: int) -> list[list[str]]:
    return [[f"{prefix}{g}_{t}" for t in range(per_camp)] for g in range(k)]


def generate(cfg: SynthConfig) -> tuple[Corpus, dict[str, str]]:
    """Draw a corpus of k_true polarized camps plus its ground-truth labels.

    Tokens come from the author's camp vocabulary with probability
    1 - word_noise, otherwise from the shared pool or a foreign camp.
    Unedited retweets and mentions are drawn per the inner/cross rates;
    a fixed share of mention events is emitted as edited retweets so the
    mention graph carries both edge types. Deterministic per seed.
    """
    rng = np.random.default_rng(cfg.seed)
    k = cfg.k_true
    users = [f"u{i:04d}" for i in range(k * cfg.users_per_community)]
    camp_of = {u: i // cfg.users_per_community for i, u in enumerate(users)}
    labels = {u: f"camp{g}" for u, g in camp_of.items()}

    word_pools = _pools("w", k, cfg.vocab_per_community)
    shared_words = [f"ws_{t}" for t in range(cfg.shared_vocab)]
    hashtag_pools = _pools("h", k, max(2, cfg.vocab_per_community // 4))
    domain_pools = _pools("d", k, max(2, cfg.vocab_per_community // 6))

    def noisy_pick(own_pool: list[str], foreign: list[str]) -> str:
        if foreign and rng.random() < cfg.word_noise:
            return foreign[rng.integers(len(foreign))]
        return own_pool[rng.integers(len(own_pool))]

    def other_user(u: str, same_camp: bool) -> str | None:
        g = camp_of[u]
        if same_camp:
            candidates = [
                v for v in users[g * cfg.users_per_community : (g + 1) * cfg.users_per_community] if v != u
            ]
        else:
            candidates = [v for v in users if camp_of[v] != g]
        if not candidates:
            return None
        return candidates[rng.integers(len(candidates))]

    foreign_words = [
        [w for g2, pool in enumerate(word_pools) if g2 != g for w in pool] + shared_words
        for g in range(k)
    ]
    foreign_hashtags = [
        [h for g2, pool in enumerate(hashtag_pools) if g2 != g for h in pool] for g in range(k)
    ]
    foreign_domains = [
        [d for g2, pool in enumerate(domain_pools) if g2 != g for d in pool] for g in range(k)
    ]

    tweets: list[Tweet] = []
    ts = 0
    for u in users:
        g = camp_of[u]
        for _ in range(cfg.tweets_per_user):
            ts += 1
            tokens = tuple(
                noisy_pick(word_pools[g], foreign_words[g]) for _ in range(TOKENS_PER_TWEET)
            )
            hashtags = []
            if rng.random() < HASHTAG_RATE:
                hashtags.append(noisy_pick(hashtag_pools[g], foreign_hashtags[g]))
                if rng.random() < SECOND_HASHTAG_RATE:
                    hashtags.append(noisy_pick(hashtag_pools[g], foreign_hashtags[g]))
            domains = []
            if rng.random() < DOMAIN_RATE:
                domains.append(noisy_pick(domain_pools[g], foreign_domains[g]))

            retweet_of = None
            retweet_edited = False
            draw = rng.random()
            if draw < cfg.inner_retweet_rate:
                retweet_of = other_user(u, same_camp=True)
            elif draw < cfg.inner_retweet_rate + cfg.cross_retweet_rate:
                retweet_of = other_user(u, same_camp=False)

            mentions = []
            for same_camp, rate in ((True, cfg.inner_mention_rate), (False, cfg.cross_mention_rate)):
                if rng.random() >= rate:
                    continue
                target = other_user(u, same_camp=same_camp)
                if target is None:
                    continue
                if retweet_of is None and rng.random() < EDITED_RETWEET_SHARE:
                    retweet_of = target
                    retweet_edited = True
                else:
                    mentions.append(target)

            tweets.append(
                Tweet(
                    author=u,
                    tokens=tokens,
                    hashtags=tuple(hashtags),
                    url_domains=tuple(domains),
                    mentions=tuple(mentions),
                    retweet_of=retweet_of,
                    retweet_edited=retweet_edited,
                    timestamp=ts,
                )
            )

    word_vocab: dict[str, None] = {}
    hashtag_vocab: dict[str, None] = {}
    domain_vocab: dict[str, None] = {}
    interacting: set[str] = set()
    for t in tweets:
        for w in t.tokens:
            word_vocab.setdefault(w, None)
        for h in t.hashtags:
            hashtag_vocab.setdefault(h, None)
        for d in t.url_domains:
            domain_vocab.setdefault(d, None)
        if t.mentions or t.retweet_of:
            interacting.add(t.author)
            interacting.update(t.mentions)
            if t.retweet_of:
                interacting.add(t.retweet_of)
    isolated = len(users) - len(interacting)
    if isolated:
        logger.warning("%d users have no interactions under this configuration", isolated)

    corpus = Corpus(
        users=users,
        tweets=tweets,
        word_vocab=list(word_vocab),
        hashtag_vocab=list(hashtag_vocab),
        domain_vocab=list(domain_vocab),
    )
    return corpus, labels


def write_labels_csv(labels: dict[str, str], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "label"])
        for user in labels:
            writer.writerow([user, labels[user]])


def load_labels_csv(path: str) -> dict[str, str]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return {row["user_id"]: row["label"] for row in reader}
