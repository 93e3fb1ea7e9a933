"""Entropy-based keyword selection.

For a topic, documents split into a positive partition (labeled with the
topic) and a negative partition (everything else). Each word gets a
per-document occurrence-probability distribution in each partition and a
Shannon entropy in bits. A word spread over many on-topic documents but
few off-topic ones is a good topic keyword.

Two selection rules are provided: the binary rule compares a word's
positive entropy against ``alpha`` times its negative entropy inside one
topic, and the cross-category rule (the pipeline default, alpha = 2)
demands that the word's entropy in the topic beat ``alpha`` times its
entropy in every other topic. Both inequalities are strict, so ties
exclude the word and raising alpha never adds keywords.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .corpus import LabeledCorpus

BINARY = "binary"
CROSS_CATEGORY = "cross-category"


@dataclass(frozen=True)
class CountMatrix:
    """Raw per-document token counts for one topic's two partitions."""

    topic: str
    n_pos: Mapping[str, np.ndarray]
    n_neg: Mapping[str, np.ndarray]
    m_pos: int
    m_neg: int


@dataclass(frozen=True)
class ProbabilityTable:
    """Per-word occurrence distributions; all-zero when a word never
    appears in a partition."""

    topic: str
    p_pos: Mapping[str, np.ndarray]
    p_neg: Mapping[str, np.ndarray]
    m_pos: int
    m_neg: int


@dataclass(frozen=True)
class EntropyTable:
    """Per-word entropies in bits, one value per partition."""

    topic: str
    h_pos: Mapping[str, float]
    h_neg: Mapping[str, float]
    m_pos: int
    m_neg: int


@dataclass(frozen=True)
class KeywordConfig:
    alpha: float = 2.0
    alpha_neg: float = 2.0
    mode: str = CROSS_CATEGORY

    def __post_init__(self) -> None:
        if self.alpha <= 1.0:
            raise ValueError("alpha must be > 1")
        if self.alpha_neg <= 1.0:
            raise ValueError("alpha_neg must be > 1")
        if self.mode not in (BINARY, CROSS_CATEGORY):
            raise ValueError(f"unknown keyword selection mode: {self.mode!r}")


@dataclass(frozen=True)
class KeywordSet:
    topic: str
    keywords: frozenset[str]


def count_occurrences(corpus: LabeledCorpus, topic: str) -> CountMatrix:
    """Token frequencies per document, split into the topic's positive and
    negative partitions. A word occurring twice in one document counts 2."""
    if topic not in corpus.topic_ids:
        raise ValueError(f"topic {topic!r} not in catalog")
    pos = corpus.positive_documents(topic)
    neg = corpus.negative_documents(topic)
    if not pos:
        raise ValueError(f"topic {topic!r} has no positive documents")
    return CountMatrix(
        topic=topic,
        n_pos=_partition_counts(pos),
        n_neg=_partition_counts(neg),
        m_pos=len(pos),
        m_neg=len(neg),
    )


def _partition_counts(docs) -> dict[str, np.ndarray]:
    m = len(docs)
    counts: dict[str, np.ndarray] = {}
    for i, doc in enumerate(docs):
        for word, c in Counter(doc.tokens).items():
            vec = counts.get(word)
            if vec is None:
                vec = np.zeros(m)
                counts[word] = vec
            vec[i] = c
    return counts


def word_probabilities(counts: CountMatrix) -> ProbabilityTable:
    """Normalize each word's count vector to a distribution over documents;
    words with zero total keep an all-zero vector."""
    return ProbabilityTable(
        topic=counts.topic,
        p_pos={w: _normalize(v) for w, v in counts.n_pos.items()},
        p_neg={w: _normalize(v) for w, v in counts.n_neg.items()},
        m_pos=counts.m_pos,
        m_neg=counts.m_neg,
    )


def _normalize(vec: np.ndarray) -> np.ndarray:
    total = vec.sum()
    if total == 0:
        return np.zeros_like(vec)
    return vec / total


def word_entropy(probs: ProbabilityTable) -> EntropyTable:
    """Shannon entropy in bits per word and partition, with 0*log2(0) == 0."""
    return EntropyTable(
        topic=probs.topic,
        h_pos={w: _entropy_bits(p) for w, p in probs.p_pos.items()},
        h_neg={w: _entropy_bits(p) for w, p in probs.p_neg.items()},
        m_pos=probs.m_pos,
        m_neg=probs.m_neg,
    )


def _entropy_bits(p: np.ndarray) -> float:
    nz = p[p > 0]
    if nz.size == 0:
        return 0.0
    return float(-(nz * np.log2(nz)).sum()) + 0.0  # avoid -0.0


def topic_entropies(corpus: LabeledCorpus, topics=None) -> dict[str, EntropyTable]:
    """count -> probability -> entropy for each requested topic."""
    topics = corpus.topic_ids if topics is None else tuple(topics)
    return {t: word_entropy(word_probabilities(count_occurrences(corpus, t))) for t in topics}


def select_keywords(
    entropies: Mapping[str, EntropyTable], config: KeywordConfig = KeywordConfig()
) -> dict[str, KeywordSet]:
    """Pick each topic's keywords.

    Binary mode keeps word j for a topic when H_pos(j) > alpha * H_neg(j).
    Cross-category mode keeps word j for topic t when its positive entropy
    in t strictly beats alpha times its positive entropy in every other
    topic (a word a topic never saw contributes entropy 0 there).
    """
    if config.mode == BINARY:
        out = {}
        for topic, table in entropies.items():
            kws = {
                w
                for w, hp in table.h_pos.items()
                if hp > config.alpha * table.h_neg.get(w, 0.0)
            }
            out[topic] = KeywordSet(topic=topic, keywords=frozenset(kws))
        return out

    if len(entropies) < 2:
        raise ValueError("cross-category selection needs at least 2 topics")
    out = {}
    for topic, table in entropies.items():
        others = [tab for t, tab in entropies.items() if t != topic]
        kws = set()
        for w, h in table.h_pos.items():
            if all(h > config.alpha * other.h_pos.get(w, 0.0) for other in others):
                kws.add(w)
        out[topic] = KeywordSet(topic=topic, keywords=frozenset(kws))
    return out


def select_negative_keywords(
    table: EntropyTable, config: KeywordConfig = KeywordConfig(mode=BINARY)
) -> KeywordSet:
    """Symmetric rule for off-topic markers: H_neg(j) > alpha_neg * H_pos(j).
    Provided for completeness; the default pipeline does not consume it."""
    kws = {
        w
        for w, hn in table.h_neg.items()
        if hn > config.alpha_neg * table.h_pos.get(w, 0.0)
    }
    return KeywordSet(topic=table.topic, keywords=frozenset(kws))


def write_keyword_csv(keyword_set: KeywordSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["topic_id", "word"])
        for w in sorted(keyword_set.keywords):
            writer.writerow([keyword_set.topic, w])


def read_keyword_csv(path: str | Path) -> KeywordSet:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["topic_id", "word"]:
            raise ValueError(f"{path.name}: expected header 'topic_id,word'")
        topics = set()
        words = set()
        for row in reader:
            if not row:
                continue
            topics.add(row[0])
            words.add(row[1])
    if len(topics) > 1:
        raise ValueError(f"{path.name}: contains multiple topic ids {sorted(topics)}")
    if topics:
        topic = topics.pop()
    else:
        # an empty set is legitimate (no word passed the threshold); fall
        # back to the keywords_<topic>.csv naming convention
        topic = path.stem.removeprefix("keywords_")
    return KeywordSet(topic=topic, keywords=frozenset(words))
