"""Synthetic topic-mixture corpus.

Desk-scale stand-in for a real sentence corpus: each sentence samples its
content tokens from one of K topic-specific distributions over a shared
500-token vocabulary (plus a common stop-token pool), so "semantic
relatedness" is well-defined (shared topic) and a dev set with graded gold
scores can be produced without real STS data.
"""

from dataclasses import dataclass

import numpy as np

from .evaluation import LabeledPair
from .rng import stream

VOCAB_TOKENS = 500
STOP_TOKENS = 100
STOP_PROB = 0.15
MIN_SENT_LEN = 5
MAX_SENT_LEN = 20
DEV_PAIRS = 200
GOLD_NOISE_STD = 0.15


@dataclass
class SyntheticData:
    sentences: list[str]
    topics: list[int]
    dev_pairs: list[LabeledPair]


def _content_tokens(n_topics: int):
    content = [f"w{i:03d}" for i in range(VOCAB_TOKENS - STOP_TOKENS)]
    per_topic = len(content) // n_topics
    pools = []
    for k in range(n_topics):
        pool = content[k * per_topic : (k + 1) * per_topic]
        if not pool:  # more topics than content slots: wrap around
            pool = [content[k % len(content)]]
        pools.append(pool)
    return pools


def _sentence(rng, topic_pool, stop_pool, alt_pool=None, mix=0.0) -> str:
    """Sample a sentence; with alt_pool set, each content token comes from
    alt_pool with probability mix instead of topic_pool."""
    length = int(rng.integers(MIN_SENT_LEN, MAX_SENT_LEN + 1))
    tokens = []
    for _ in range(length):
        if rng.random() < STOP_PROB:
            tokens.append(stop_pool[int(rng.integers(len(stop_pool)))])
        else:
            pool = topic_pool
            if alt_pool is not None and rng.random() < mix:
                pool = alt_pool
            tokens.append(pool[int(rng.integers(len(pool)))])
    return " ".join(tokens)


def generate(seed: int, n_sentences: int = 2000, n_topics: int = 20) -> SyntheticData:
    if n_sentences < 1 or n_topics < 1:
        raise ValueError("need n_sentences >= 1 and n_topics >= 1")
    rng = stream(seed, "corpus")
    stop_pool = [f"s{i:03d}" for i in range(STOP_TOKENS)]
    pools = _content_tokens(n_topics)

    sentences, topics = [], []
    for _ in range(n_sentences):
        k = int(rng.integers(n_topics))
        sentences.append(_sentence(rng, pools[k], stop_pool))
        topics.append(k)

    dev = []
    for _ in range(DEV_PAIRS):
        ka = int(rng.integers(n_topics))
        if n_topics == 1:
            kb = ka
        else:
            kb = int(rng.integers(n_topics - 1))
            if kb >= ka:
                kb += 1
        # Graded relatedness: sentence_b mixes topic ka and a distractor
        # topic kb with proportion alpha, and gold tracks alpha. The two
        # sides draw from disjoint halves of each topic pool, so no dev
        # pair shares a content token and raw lexical overlap scores zero;
        # only learned topic structure can rank these.
        alpha = float(rng.random())
        half_a = pools[ka][: max(1, len(pools[ka]) // 2)]
        own_b = pools[ka][max(1, len(pools[ka]) // 2) :] or pools[ka]
        alt_b = pools[kb][max(1, len(pools[kb]) // 2) :] or pools[kb]
        sa = _sentence(rng, half_a, stop_pool)
        sb = _sentence(rng, own_b, stop_pool, alt_pool=alt_b, mix=1.0 - alpha)
        gold = float(np.clip(5.0 * alpha + rng.normal(0.0, GOLD_NOISE_STD), 0.0, 5.0))
        dev.append(LabeledPair(sa, sb, gold))
    return SyntheticData(sentences, topics, dev)


def write_corpus(data: SyntheticData, corpus_path, dev_path) -> None:
    with open(corpus_path, "w", encoding="utf-8", newline="\n") as fh:
        for s in data.sentences:
            fh.write(s + "\n")
    with open(dev_path, "w", encoding="utf-8", newline="\n") as fh:
        for p in data.dev_pairs:
            fh.write(f"{p.sentence_a}\t{p.sentence_b}\t{p.gold!r}\n")
