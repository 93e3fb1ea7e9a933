"""Document loading, segmentation, and multi-label topic annotation.

Documents arrive as JSONL (one object per line with ``id``, ``text``,
``author``, optional ``station_id``) or CSV with the same columns. Labels
arrive as a two-column CSV ``doc_id,topic_id``. Segmentation is pluggable:
the default splits on maximal runs of letters/digits and lowercases, an
external command can be configured for languages that need a real
morphological analyzer.
"""

from __future__ import annotations

import csv
import json
import re
import shlex
import subprocess
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

WHITESPACE_REGEX = "whitespace-regex"
EXTERNAL_COMMAND = "external-command"

# maximal runs of unicode letters/digits (\w minus underscore)
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    author: str = ""
    station_id: str | None = None
    tokens: tuple[str, ...] = ()


@dataclass(frozen=True)
class SegmenterSpec:
    """How to split raw text into tokens.

    ``self_sufficient_only`` drops tokens found in ``stop_words``, a cheap
    stand-in for content-word filtering when no tagger is available.
    """

    kind: str = WHITESPACE_REGEX
    command: str | None = None
    stop_words: frozenset[str] = frozenset()
    self_sufficient_only: bool = False

    def __post_init__(self) -> None:
        if self.kind not in (WHITESPACE_REGEX, EXTERNAL_COMMAND):
            raise ValueError(f"unknown segmenter kind: {self.kind!r}")
        if self.kind == EXTERNAL_COMMAND and not self.command:
            raise ValueError("external-command segmenter requires a command template")


@dataclass(frozen=True)
class LabeledCorpus:
    """Documents plus a multi-label map and the topic catalog.

    Every labeled id must exist among the documents and every topic id must
    be in the catalog; unlabeled documents are fine (prediction-time data).
    """

    documents: tuple[Document, ...]
    labels: Mapping[str, frozenset[str]]
    topic_catalog: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        ids = {d.id for d in self.documents}
        known_topics = {tid for tid, _ in self.topic_catalog}
        for doc_id, topics in self.labels.items():
            if doc_id not in ids:
                raise ValueError(f"label references unknown document id {doc_id!r}")
            for t in topics:
                if t not in known_topics:
                    raise ValueError(f"label uses unknown topic id {t!r}")

    @property
    def topic_ids(self) -> tuple[str, ...]:
        return tuple(tid for tid, _ in self.topic_catalog)

    def labels_for(self, doc_id: str) -> frozenset[str]:
        return self.labels.get(doc_id, frozenset())

    def positive_documents(self, topic: str) -> list[Document]:
        return [d for d in self.documents if topic in self.labels_for(d.id)]

    def negative_documents(self, topic: str) -> list[Document]:
        return [d for d in self.documents if topic not in self.labels_for(d.id)]


def segment(doc: Document, spec: SegmenterSpec = SegmenterSpec()) -> Document:
    """Return a copy of ``doc`` with its token list filled in.

    The regex segmenter lowercases; external segmenters pass tokens through
    untouched and split their stdout on whitespace.
    """
    if spec.kind == WHITESPACE_REGEX:
        tokens = [t.lower() for t in _TOKEN_RE.findall(doc.text)]
    else:
        proc = subprocess.run(
            shlex.split(spec.command or ""),
            input=doc.text,
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            raise RuntimeError(
                f"segmenter command failed with exit status {proc.returncode}: "
                f"{proc.stderr.strip()}"
            )
        tokens = proc.stdout.split()
    if spec.self_sufficient_only and spec.stop_words:
        tokens = [t for t in tokens if t not in spec.stop_words]
    return replace(doc, tokens=tuple(tokens))


def segment_all(docs: Iterable[Document], spec: SegmenterSpec = SegmenterSpec()) -> list[Document]:
    return [segment(d, spec) for d in docs]


def load_documents(path: str | Path, format: str = "jsonl") -> list[Document]:
    """Load documents from JSONL or CSV; ids are synthesized as
    ``<filename>:<line>`` when absent and must be unique."""
    path = Path(path)
    if format == "jsonl":
        docs = _load_jsonl(path)
    elif format == "csv":
        docs = _load_csv(path)
    else:
        raise ValueError(f"unknown document format: {format!r}")
    seen: set[str] = set()
    for d in docs:
        if d.id in seen:
            raise ValueError(f"duplicate document id {d.id!r} in {path.name}")
        seen.add(d.id)
    return docs


def _load_jsonl(path: Path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path.name}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(rec, dict) or "text" not in rec:
                raise ValueError(f"{path.name}:{lineno}: record is missing 'text'")
            docs.append(
                Document(
                    id=str(rec.get("id") or f"{path.name}:{lineno}"),
                    text=str(rec["text"]),
                    author=str(rec.get("author", "")),
                    station_id=(str(rec["station_id"]) if rec.get("station_id") else None),
                )
            )
    return docs


def _load_csv(path: Path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "text" not in reader.fieldnames:
            raise ValueError(f"{path.name}: CSV header must include a 'text' column")
        for rec in reader:
            lineno = reader.line_num
            text = rec.get("text")
            if text is None:
                raise ValueError(f"{path.name}:{lineno}: record is missing 'text'")
            docs.append(
                Document(
                    id=str(rec.get("id") or f"{path.name}:{lineno}"),
                    text=text,
                    author=rec.get("author") or "",
                    station_id=rec.get("station_id") or None,
                )
            )
    return docs


def save_documents(docs: Iterable[Document], path: str | Path) -> None:
    """Write documents as JSONL, the inverse of ``load_documents``."""
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            rec: dict = {"id": d.id, "text": d.text, "author": d.author}
            if d.station_id is not None:
                rec["station_id"] = d.station_id
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def attach_labels(
    docs: Sequence[Document],
    label_path: str | Path,
    topic_catalog: Sequence[tuple[str, str]] | None = None,
) -> LabeledCorpus:
    """Join a ``doc_id,topic_id`` CSV onto documents.

    When no catalog is given, one is derived from the distinct topic ids in
    the file (display name = id).
    """
    label_path = Path(label_path)
    pairs: list[tuple[str, str]] = []
    with open(label_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["doc_id", "topic_id"]:
            raise ValueError(f"{label_path.name}: expected header 'doc_id,topic_id'")
        for row in reader:
            if not row:
                continue
            if len(row) < 2:
                raise ValueError(f"{label_path.name}:{reader.line_num}: expected two columns")
            pairs.append((row[0], row[1]))

    ids = {d.id for d in docs}
    for doc_id, _ in pairs:
        if doc_id not in ids:
            raise ValueError(f"{label_path.name}: label references unknown document id {doc_id!r}")

    if topic_catalog is None:
        topic_catalog = [(t, t) for t in sorted({t for _, t in pairs})]
    labels: dict[str, set[str]] = {}
    for doc_id, topic in pairs:
        labels.setdefault(doc_id, set()).add(topic)
    return LabeledCorpus(
        documents=tuple(docs),
        labels={k: frozenset(v) for k, v in labels.items()},
        topic_catalog=tuple(topic_catalog),
    )


def load_stop_words(path: str | Path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())
