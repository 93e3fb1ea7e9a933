"""Hierarchical multi-label routing and per-establishment aggregation.

Routing stages, in strict precedence order:

  1   author is an official account        -> the promotional topic, stop
  1b  text contains a check-in phrase      -> the check-in topic, stop
  2   context classifiers, configured order -> first positive wins, stop
  3   remaining classifiers, descending F1 -> every positive accumulates
  fallback: nothing fired                  -> the catch-all topic

Aggregation counts, per establishment, how many documents carry each
topic (multi-label documents increment several columns) and joins the
sales figure; the catch-all topic never becomes a column.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Document
from .linear_classifier import FeatureSpace, LinearModel, featurize, predict

STAGE_OFFICIAL = "1"
STAGE_CHECKIN = "1b"
STAGE_CONTEXT = "2"
STAGE_CONTENT = "3"
STAGE_FALLBACK = "fallback"


@dataclass(frozen=True)
class PipelineConfig:
    official_accounts: frozenset[str]
    checkin_patterns: tuple[str, ...]
    stage2_topics: tuple[str, ...]
    stage3_topics: tuple[str, ...]
    models: Mapping[str, LinearModel]
    spaces: Mapping[str, FeatureSpace]
    official_topic: str = "T3"
    checkin_topic: str = "T5"
    fallback_topic: str = "T8"

    def __post_init__(self) -> None:
        overlap = set(self.stage2_topics) & set(self.stage3_topics)
        if overlap:
            raise ValueError(f"topics configured in both stages: {sorted(overlap)}")
        for t in (self.official_topic, self.checkin_topic):
            if t in self.stage2_topics or t in self.stage3_topics:
                raise ValueError(f"rule-based topic {t!r} must not carry a classifier")
        for t in (*self.stage2_topics, *self.stage3_topics):
            if t not in self.models:
                raise ValueError(f"missing model for configured topic {t!r}")
            if t not in self.spaces:
                raise ValueError(f"missing feature space for configured topic {t!r}")


@dataclass(frozen=True)
class TopicAssignment:
    doc_id: str
    topics: frozenset[str]
    stage: str

    def __post_init__(self) -> None:
        if not self.topics:
            raise ValueError("assignment must carry at least one topic")


@dataclass(frozen=True)
class ObservationMatrix:
    """Establishments as rows: topic mention counts x1..xd plus sales y.

    Aggregation produces non-negative integer counts; matrices loaded from
    CSV or generated synthetically may hold arbitrary finite reals.
    """

    station_ids: tuple[str, ...]
    topics: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.station_ids)
        if self.X.shape != (n, len(self.topics)):
            raise ValueError("X shape does not match stations x topics")
        if self.y.shape != (n,):
            raise ValueError("y length does not match station count")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("observations contain non-finite values")

    @property
    def n_observations(self) -> int:
        return len(self.station_ids)

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(f"x{i + 1}" for i in range(len(self.topics))) + ("y",)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["station_id", *self.variable_names])
            for i, sid in enumerate(self.station_ids):
                row = [sid] + [_fmt(v) for v in self.X[i]] + [_fmt(self.y[i])]
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path: str | Path, topics: Sequence[str] | None = None) -> "ObservationMatrix":
        path = Path(path)
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[0] != "station_id" or header[-1] != "y":
                raise ValueError(f"{path.name}: expected header 'station_id,x1,...,y'")
            d = len(header) - 2
            stations, rows, ys = [], [], []
            for row in reader:
                if not row:
                    continue
                if len(row) != d + 2:
                    raise ValueError(f"{path.name}:{reader.line_num}: wrong column count")
                stations.append(row[0])
                rows.append([float(v) for v in row[1 : d + 1]])
                ys.append(float(row[-1]))
        if topics is None:
            topics = header[1:-1]
        return cls(
            station_ids=tuple(stations),
            topics=tuple(topics),
            X=np.array(rows, dtype=np.float64).reshape(len(stations), d),
            y=np.array(ys, dtype=np.float64),
        )


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def route(doc: Document, config: PipelineConfig) -> TopicAssignment:
    """Assign topics to one document; a pure function of (doc, config)."""
    if doc.author in config.official_accounts:
        return TopicAssignment(doc.id, frozenset({config.official_topic}), STAGE_OFFICIAL)
    if any(pat in doc.text for pat in config.checkin_patterns):
        return TopicAssignment(doc.id, frozenset({config.checkin_topic}), STAGE_CHECKIN)
    for topic in config.stage2_topics:
        label, _ = predict(config.models[topic], featurize(doc, config.spaces[topic]))
        if label > 0:
            return TopicAssignment(doc.id, frozenset({topic}), STAGE_CONTEXT)
    positives = set()
    for topic in config.stage3_topics:
        label, _ = predict(config.models[topic], featurize(doc, config.spaces[topic]))
        if label > 0:
            positives.add(topic)
    if positives:
        return TopicAssignment(doc.id, frozenset(positives), STAGE_CONTENT)
    return TopicAssignment(doc.id, frozenset({config.fallback_topic}), STAGE_FALLBACK)


def classify_corpus(docs: Iterable[Document], config: PipelineConfig) -> list[TopicAssignment]:
    return [route(d, config) for d in docs]


@dataclass(frozen=True)
class DropReport:
    dropped_doc_ids: tuple[str, ...]

    @property
    def count(self) -> int:
        return len(self.dropped_doc_ids)


def aggregate(
    assignments: Sequence[TopicAssignment],
    docs: Sequence[Document],
    sales: Mapping[str, float],
    count_topics: Sequence[str],
) -> tuple[ObservationMatrix, DropReport]:
    """Count per-station topic mentions and join sales.

    Documents without a station are dropped and reported. Stations present
    in ``sales`` but without documents keep an all-zero row; stations with
    documents but no sales record are an error.
    """
    by_id = {d.id: d for d in docs}
    dropped = []
    seen_stations: set[str] = set()
    topic_index = {t: j for j, t in enumerate(count_topics)}
    stations = sorted(sales)
    station_index = {s: i for i, s in enumerate(stations)}
    X = np.zeros((len(stations), len(count_topics)))
    missing_sales: set[str] = set()
    for a in assignments:
        doc = by_id.get(a.doc_id)
        if doc is None:
            raise ValueError(f"assignment references unknown document {a.doc_id!r}")
        if doc.station_id is None:
            dropped.append(doc.id)
            continue
        if doc.station_id not in station_index:
            missing_sales.add(doc.station_id)
            continue
        seen_stations.add(doc.station_id)
        for t in a.topics:
            j = topic_index.get(t)
            if j is not None:
                X[station_index[doc.station_id], j] += 1
    if missing_sales:
        raise ValueError(
            "stations with documents but no sales record: " + ", ".join(sorted(missing_sales))
        )
    y = np.array([float(sales[s]) for s in stations])
    matrix = ObservationMatrix(
        station_ids=tuple(stations), topics=tuple(count_topics), X=X, y=y
    )
    return matrix, DropReport(dropped_doc_ids=tuple(dropped))


def load_sales_csv(path: str | Path) -> dict[str, float]:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["station_id", "sales"]:
            raise ValueError(f"{path.name}: expected header 'station_id,sales'")
        sales: dict[str, float] = {}
        for row in reader:
            if not row:
                continue
            if row[0] in sales:
                raise ValueError(f"{path.name}: duplicate station id {row[0]!r}")
            sales[row[0]] = float(row[1])
    return sales


def load_official_accounts(path: str | Path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())
