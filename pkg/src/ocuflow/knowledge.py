"""Lexical retrieval over a plain-text corpus, with citation grounding.

Deterministic by construction: no embeddings, no model calls. An embedding
backend can be slotted in behind the same Index surface later.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from math import log
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .core import OcuflowError, canonical_json

CHUNK_WORDS = 256
CHUNK_OVERLAP = 64
SCORE_FLOOR_FRACTION = 0.25
INDEX_FORMAT_VERSION = 1


class DuplicateSourceError(OcuflowError):
    pass


class EmptyDocumentError(OcuflowError):
    pass


class EmptyQueryError(OcuflowError):
    pass


@dataclass(frozen=True)
class Passage:
    passage_id: str
    source_id: str
    text: str
    position: tuple[int, int]  # (chunk index, word offset)


@dataclass(frozen=True)
class RetrievalHit:
    passage: Passage
    score: float
    rank: int


@dataclass(frozen=True)
class GroundingResult:
    supported: bool
    citations: tuple[tuple[str, str], ...]  # (source_id, passage_id)


_token_re = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _token_re.findall(text.lower())


def _chunk_spans(n_words: int, window: int = CHUNK_WORDS, overlap: int = CHUNK_OVERLAP) -> list[tuple[int, int]]:
    """Window starts every (window - overlap) words; the last window absorbs the tail."""
    if n_words <= window:
        return [(0, n_words)]
    stride = window - overlap
    spans: list[tuple[int, int]] = []
    start = 0
    while True:
        if start + stride + window >= n_words:
            spans.append((start, n_words))
            break
        spans.append((start, start + window))
        start += stride
    return spans


class Index:
    """Immutable after ingest; safe for unrestricted concurrent reads."""

    def __init__(self, passages: Sequence[Passage]):
        self.passages: tuple[Passage, ...] = tuple(passages)
        self._by_id = {p.passage_id: p for p in self.passages}
        self._tf: dict[str, dict[str, int]] = {}
        self._df: dict[str, int] = {}
        for p in self.passages:
            counts: dict[str, int] = {}
            for term in tokenize(p.text):
                counts[term] = counts.get(term, 0) + 1
            self._tf[p.passage_id] = counts
            for term in counts:
                self._df[term] = self._df.get(term, 0) + 1

    def __len__(self) -> int:
        return len(self.passages)

    def get(self, passage_id: str) -> Optional[Passage]:
        return self._by_id.get(passage_id)

    def _idf(self, term: str) -> float:
        # +1 in the denominator damps common terms and keeps unseen terms finite
        return log(1.0 + len(self.passages) / (1.0 + self._df.get(term, 0)))

    def _score_counts(self, query_counts: dict[str, int], doc_counts: dict[str, int]) -> float:
        return sum(qtf * doc_counts.get(term, 0) * self._idf(term) for term, qtf in query_counts.items())

    def self_match_score(self, query: str) -> float:
        counts: dict[str, int] = {}
        for term in tokenize(query):
            counts[term] = counts.get(term, 0) + 1
        return self._score_counts(counts, counts)

    def retrieve(self, query: str, k: int = 5) -> list[RetrievalHit]:
        """Top-k passages by lexical relevance; ties break by passage_id."""
        if not query or not tokenize(query):
            raise EmptyQueryError(query)
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        counts: dict[str, int] = {}
        for term in tokenize(query):
            counts[term] = counts.get(term, 0) + 1
        scored = [
            (self._score_counts(counts, self._tf[p.passage_id]), p)
            for p in self.passages
        ]
        scored = [(s, p) for s, p in scored if s > 0.0]
        scored.sort(key=lambda sp: (-sp[0], sp[1].passage_id))
        return [
            RetrievalHit(passage=p, score=s, rank=i + 1)
            for i, (s, p) in enumerate(scored[:k])
        ]

    def ground(self, claim: str, hits: Iterable[RetrievalHit]) -> GroundingResult:
        """A claim is supported iff some hit reaches the score floor (inclusive)."""
        floor = SCORE_FLOOR_FRACTION * self.self_match_score(claim)
        if floor <= 0.0:
            return GroundingResult(supported=False, citations=())
        cited = tuple(
            (h.passage.source_id, h.passage.passage_id)
            for h in hits
            if h.score >= floor
        )
        return GroundingResult(supported=bool(cited), citations=cited)

    def content_hash(self) -> str:
        doc = [
            {"passage_id": p.passage_id, "source_id": p.source_id, "text": p.text, "position": list(p.position)}
            for p in self.passages
        ]
        return hashlib.sha256(canonical_json(doc).encode()).hexdigest()

    def save(self, path: Path | str) -> None:
        doc = {
            "format_version": INDEX_FORMAT_VERSION,
            "chunk_words": CHUNK_WORDS,
            "chunk_overlap": CHUNK_OVERLAP,
            "passages": [
                {"passage_id": p.passage_id, "source_id": p.source_id,
                 "text": p.text, "position": list(p.position)}
                for p in self.passages
            ],
        }
        Path(path).write_text(json.dumps(doc, indent=1))

    @classmethod
    def load(cls, path: Path | str) -> "Index":
        doc = json.loads(Path(path).read_text())
        if doc.get("format_version") != INDEX_FORMAT_VERSION:
            raise OcuflowError(f"unsupported index format {doc.get('format_version')!r}")
        return cls([
            Passage(
                passage_id=p["passage_id"], source_id=p["source_id"],
                text=p["text"], position=tuple(p["position"]),
            )
            for p in doc["passages"]
        ])


def ingest(documents: Sequence[tuple[str, str]]) -> Index:
    """Chunk (source_id, text) documents into overlapping passages and index them."""
    seen: set[str] = set()
    passages: list[Passage] = []
    for source_id, text in documents:
        if source_id in seen:
            raise DuplicateSourceError(source_id)
        seen.add(source_id)
        words = text.split()
        if not words:
            raise EmptyDocumentError(source_id)
        for i, (start, end) in enumerate(_chunk_spans(len(words))):
            passages.append(Passage(
                passage_id=f"{source_id}:{i:04d}",
                source_id=source_id,
                text=" ".join(words[start:end]),
                position=(i, start),
            ))
    return Index(passages)


def ingest_dir(root: Path | str) -> Index:
    """Corpus directory of plain-text files; filename stem is the source_id."""
    root = Path(root)
    documents = [(p.stem, p.read_text()) for p in sorted(root.glob("*.txt"))]
    return ingest(documents)
