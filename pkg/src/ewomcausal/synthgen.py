"""Synthetic data with known ground truth for tests and benchmarks.

Two generators: linear structural-equation datasets (draw disturbances,
solve x = (I - B0)^-1 e) and labeled keyword corpora (topic-exclusive
vocabularies mixed with shared noise words). Both are pure functions of
their spec, so a seed pins the output byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Document, LabeledCorpus
from .topic_pipeline import ObservationMatrix

NOISE_TAGS = ("uniform", "laplace", "gaussian")


@dataclass(frozen=True)
class StructuralSpec:
    """Ground-truth strengths B0 (strictly lower-triangular under some
    order), per-variable noise (tag, scale) with scale = standard
    deviation, sample count, and seed."""

    b0: np.ndarray
    noise: tuple[tuple[str, float], ...]
    n: int
    seed: int = 0
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        b0 = np.asarray(self.b0, dtype=np.float64)
        object.__setattr__(self, "b0", b0)
        d = b0.shape[0]
        if b0.shape != (d, d):
            raise ValueError("B0 must be square")
        if len(self.noise) != d:
            raise ValueError("need one (tag, scale) noise entry per variable")
        for tag, scale in self.noise:
            if tag not in NOISE_TAGS:
                raise ValueError(f"unknown noise tag {tag!r}")
            if scale <= 0:
                raise ValueError("noise scales must be > 0")
        if self.n <= d:
            raise ValueError("need more samples than variables")
        _triangular_order(b0)  # raises if not permutable

    @classmethod
    def with_noise(
        cls, b0, n: int, seed: int = 0, tag: str = "uniform", scale: float = 1.0
    ) -> "StructuralSpec":
        d = np.asarray(b0).shape[0]
        return cls(b0=np.asarray(b0, dtype=np.float64), noise=((tag, scale),) * d, n=n, seed=seed)


def _triangular_order(b0: np.ndarray) -> list[int]:
    """Topological order of the implied DAG (parents first); error when
    B0 cannot be permuted to strictly lower triangular."""
    d = b0.shape[0]
    remaining = list(range(d))
    order: list[int] = []
    while remaining:
        root = next(
            (i for i in remaining if all(b0[i, j] == 0.0 for j in remaining if j != i)),
            None,
        )
        if root is None:
            raise ValueError("B0 is not permutable to strictly lower triangular")
        order.append(root)
        remaining.remove(root)
    return order


def _draw_noise(rng: np.random.Generator, tag: str, scale: float, n: int) -> np.ndarray:
    # each tag is parameterized so the standard deviation equals scale
    if tag == "uniform":
        half = scale * np.sqrt(3.0)
        return rng.uniform(-half, half, size=n)
    if tag == "laplace":
        return rng.laplace(0.0, scale / np.sqrt(2.0), size=n)
    return rng.normal(0.0, scale, size=n)


def generate_sem(spec: StructuralSpec) -> tuple[ObservationMatrix, np.ndarray]:
    """Sample the structural model; the last variable is the target y.

    Returns the observations plus a copy of the true B0 for oracles.
    """
    b0 = spec.b0
    d = b0.shape[0]
    rng = np.random.default_rng(spec.seed)
    e = np.empty((d, spec.n))
    for i, (tag, scale) in enumerate(spec.noise):
        e[i] = _draw_noise(rng, tag, scale, spec.n)
    x = np.linalg.solve(np.eye(d) - b0, e)
    names = spec.names or tuple(f"x{i + 1}" for i in range(d - 1)) + ("y",)
    if len(names) != d:
        raise ValueError("names length must match B0 dimension")
    obs = ObservationMatrix(
        station_ids=tuple(f"obs{i + 1:05d}" for i in range(spec.n)),
        topics=tuple(names[:-1]),
        X=x[:-1].T.copy(),
        y=x[-1].copy(),
    )
    return obs, b0.copy()


@dataclass(frozen=True)
class TopicVocab:
    topic_id: str
    words: tuple[str, ...]


@dataclass(frozen=True)
class CorpusSpec:
    """Labeled-corpus generator settings.

    Each document draws ``tokens_per_doc`` tokens; a token comes from the
    shared noise pool with probability ``noise_rate``, otherwise from the
    document's topic vocabulary. A ``multi_label_rate`` fraction of
    documents splits its on-topic tokens with a second topic and carries
    both labels.
    """

    topics: tuple[TopicVocab, ...]
    noise_words: tuple[str, ...]
    docs_per_topic: int
    noise_rate: float = 0.0
    multi_label_rate: float = 0.0
    tokens_per_doc: int = 12
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.topics:
            raise ValueError("need at least one topic")
        seen: set[str] = set()
        for tv in self.topics:
            if not tv.words:
                raise ValueError(f"topic {tv.topic_id!r} has an empty vocabulary")
            overlap = seen & set(tv.words)
            if overlap:
                raise ValueError(f"exclusive vocabularies overlap: {sorted(overlap)}")
            seen |= set(tv.words)
        if seen & set(self.noise_words):
            raise ValueError("noise words must not appear in exclusive vocabularies")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must be in [0, 1]")
        if not 0.0 <= self.multi_label_rate <= 1.0:
            raise ValueError("multi_label_rate must be in [0, 1]")
        if self.noise_rate > 0.0 and not self.noise_words:
            raise ValueError("noise_rate > 0 requires noise words")
        if self.docs_per_topic < 1 or self.tokens_per_doc < 1:
            raise ValueError("docs_per_topic and tokens_per_doc must be >= 1")


def default_corpus_spec(
    n_topics: int = 8,
    docs_per_topic: int = 125,
    words_per_topic: int = 6,
    noise_vocab: int = 40,
    noise_rate: float = 0.5,
    multi_label_rate: float = 0.1,
    tokens_per_doc: int = 12,
    seed: int = 0,
) -> CorpusSpec:
    """Synthetic catalog T1..Tn with disjoint vocabularies t<i>w<j>."""
    topics = tuple(
        TopicVocab(
            topic_id=f"T{i + 1}",
            words=tuple(f"t{i + 1}w{j + 1}" for j in range(words_per_topic)),
        )
        for i in range(n_topics)
    )
    return CorpusSpec(
        topics=topics,
        noise_words=tuple(f"noise{j + 1}" for j in range(noise_vocab)),
        docs_per_topic=docs_per_topic,
        noise_rate=noise_rate,
        multi_label_rate=multi_label_rate,
        tokens_per_doc=tokens_per_doc,
        seed=seed,
    )


def generate_corpus(spec: CorpusSpec) -> LabeledCorpus:
    """Sample a labeled corpus; documents come out segmented (tokens set)
    with text equal to the space-joined tokens."""
    rng = np.random.default_rng(spec.seed)
    docs: list[Document] = []
    labels: dict[str, frozenset[str]] = {}
    topic_ids = [tv.topic_id for tv in spec.topics]
    vocab = {tv.topic_id: tv.words for tv in spec.topics}
    counter = 0
    for tv in spec.topics:
        for _ in range(spec.docs_per_topic):
            counter += 1
            doc_id = f"doc{counter:05d}"
            label = {tv.topic_id}
            second: str | None = None
            if len(spec.topics) > 1 and rng.random() < spec.multi_label_rate:
                others = [t for t in topic_ids if t != tv.topic_id]
                second = others[int(rng.integers(len(others)))]
                label.add(second)
            tokens = []
            for _ in range(spec.tokens_per_doc):
                if spec.noise_words and rng.random() < spec.noise_rate:
                    pool: Sequence[str] = spec.noise_words
                elif second is not None and rng.random() < 0.5:
                    pool = vocab[second]
                else:
                    pool = vocab[tv.topic_id]
                tokens.append(pool[int(rng.integers(len(pool)))])
            docs.append(
                Document(
                    id=doc_id,
                    text=" ".join(tokens),
                    author=f"user{counter}",
                    tokens=tuple(tokens),
                )
            )
            labels[doc_id] = frozenset(label)
    return LabeledCorpus(
        documents=tuple(docs),
        labels=labels,
        topic_catalog=tuple((t, t) for t in topic_ids),
    )
