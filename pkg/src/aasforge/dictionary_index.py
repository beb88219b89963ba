"""Dictionary ingestion and the embedding index used for semantic retrieval.

The index stores one unit-normalized embedding vector per dictionary entry
(the entry's "fingerprint") and answers top-k queries with an exact full
scan: dictionaries at the scale this tool targets (tens of thousands of
entries) scan in milliseconds, and exactness keeps the behavior trivially
checkable against a brute-force oracle.
"""
from __future__ import annotations

import io
import json
import threading
import urllib.parse
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateEntryError,
    EmbeddingError,
    FormatError,
)
from .semantic_node import RefKind, SemanticId, is_absolute_iri

INDEX_MAGIC = "FPIDX1"

EmbedFn = Callable[[str], Sequence[float]]


@dataclass(frozen=True)
class DictionaryEntry:
    entry_id: str
    preferred_name: str
    definition: str
    unit: Optional[str] = None


@dataclass(frozen=True)
class SearchHit:
    entry: DictionaryEntry
    score: float


def indexed_text(entry: DictionaryEntry) -> str:
    """The text that gets embedded for an entry."""
    return f"{entry.preferred_name}: {entry.definition}"


def entry_semantic_id(entry_id: str) -> SemanticId:
    """External-dictionary reference for an entry.

    IRDI-like ids that are not absolute IRIs are wrapped as urn:dict:<id>.
    """
    if is_absolute_iri(entry_id):
        return SemanticId(RefKind.EXTERNAL_DICTIONARY, entry_id)
    quoted = urllib.parse.quote(entry_id, safe="")
    return SemanticId(RefKind.EXTERNAL_DICTIONARY, f"urn:dict:{quoted}")


def ingest_dictionary(lines: Union[Iterable[str], io.TextIOBase]) -> list[DictionaryEntry]:
    """Read dictionary entries from JSONL lines; blank lines are skipped."""
    entries: list[DictionaryEntry] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed JSON ({exc.msg})", line=lineno) from exc
        if not isinstance(record, dict):
            raise FormatError("record must be an object", line=lineno)
        entry_id = record.get("entryId")
        name = record.get("preferredName")
        definition = record.get("definition")
        unit = record.get("unit")
        if not isinstance(entry_id, str) or not entry_id.strip():
            raise FormatError("missing entryId", line=lineno)
        if not isinstance(name, str) or not name.strip():
            raise FormatError("missing preferredName", line=lineno)
        if not isinstance(definition, str) or not definition.strip():
            raise FormatError("missing definition", line=lineno)
        if unit is not None and not isinstance(unit, str):
            raise FormatError("unit must be a string", line=lineno)
        if entry_id in seen:
            raise DuplicateEntryError(f"duplicate entryId {entry_id!r}")
        seen.add(entry_id)
        entries.append(DictionaryEntry(entry_id, name.strip(), definition.strip(), unit))
    return entries


def load_dictionary(path) -> list[DictionaryEntry]:
    with open(path, encoding="utf-8") as fh:
        return ingest_dictionary(fh)


def cosine_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """dot(a,b) / (|a| |b|); 0.0 when either vector has zero norm."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape or va.ndim != 1:
        raise DimensionMismatchError(f"dimensions differ: {va.shape} vs {vb.shape}")
    denom = float(np.linalg.norm(va)) * float(np.linalg.norm(vb))
    if denom == 0.0:
        return 0.0
    return float(np.dot(va, vb) / denom)


def _normalized(vector: Sequence[float], dimension: int, what: str) -> np.ndarray:
    v = np.asarray(vector, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != dimension:
        raise DimensionMismatchError(
            f"{what}: expected dimension {dimension}, got shape {v.shape}"
        )
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise EmbeddingError(f"{what}: zero-norm embedding vector")
    return v / norm


class FingerprintIndex:
    """Exact top-k cosine index over dictionary entries.

    Reads may run concurrently; enrichment takes the writer lock and swaps
    the backing arrays atomically.
    """

    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self._entries: tuple[DictionaryEntry, ...] = ()
        self._matrix = np.empty((0, dimension), dtype=np.float64)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> tuple[DictionaryEntry, ...]:
        return self._entries

    @classmethod
    def build(
        cls,
        entries: Iterable[DictionaryEntry],
        embed_fn: EmbedFn,
        *,
        dimension: Optional[int] = None,
    ) -> "FingerprintIndex":
        """Embed every entry ("preferredName: definition") and normalize.

        ``dimension`` may be omitted when there is at least one entry; an
        embedding failure aborts the build naming the failing entry.
        """
        entries = list(entries)
        vectors: list[np.ndarray] = []
        for entry in entries:
            try:
                raw = embed_fn(indexed_text(entry))
            except Exception as exc:
                raise EmbeddingError(
                    f"embedding failed for entry {entry.entry_id!r}: {exc}"
                ) from exc
            if dimension is None:
                dimension = len(raw)
            vectors.append(_normalized(raw, dimension, f"entry {entry.entry_id!r}"))
        if dimension is None:
            raise ValueError("dimension is required for an empty index")
        index = cls(dimension)
        index._entries = tuple(entries)
        if vectors:
            index._matrix = np.vstack(vectors)
        return index

    def search(self, query_text: str, k: int, embed_fn: EmbedFn) -> list[SearchHit]:
        """The k highest-cosine entries, ties broken by entry_id ascending."""
        if k < 1:
            raise ValueError("k must be >= 1")
        entries, matrix = self._entries, self._matrix
        if not entries:
            return []
        try:
            raw = embed_fn(query_text)
        except Exception as exc:
            raise EmbeddingError(f"embedding failed for query: {exc}") from exc
        query = _normalized(raw, self.dimension, "query")
        scores = matrix @ query
        order = sorted(
            range(len(entries)), key=lambda i: (-scores[i], entries[i].entry_id)
        )
        hits = []
        for i in order[: min(k, len(entries))]:
            score = min(1.0, max(-1.0, float(scores[i])))
            hits.append(SearchHit(entries[i], score))
        return hits

    def enrich(self, entry: DictionaryEntry, embed_fn: EmbedFn) -> None:
        """Add one validated entry; duplicates by entry_id are rejected."""
        with self._lock:
            if any(e.entry_id == entry.entry_id for e in self._entries):
                raise DuplicateEntryError(f"duplicate entryId {entry.entry_id!r}")
            try:
                raw = embed_fn(indexed_text(entry))
            except Exception as exc:
                raise EmbeddingError(
                    f"embedding failed for entry {entry.entry_id!r}: {exc}"
                ) from exc
            vector = _normalized(raw, self.dimension, f"entry {entry.entry_id!r}")
            self._matrix = np.vstack([self._matrix, vector])
            self._entries = self._entries + (entry,)

    def save(self, path) -> None:
        """Persist as the magic line followed by a JSON document."""
        doc = {
            "dimension": self.dimension,
            "entries": [
                {
                    "entryId": e.entry_id,
                    "preferredName": e.preferred_name,
                    "definition": e.definition,
                    **({"unit": e.unit} if e.unit is not None else {}),
                    "vector": [float(x) for x in self._matrix[i]],
                }
                for i, e in enumerate(self._entries)
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(INDEX_MAGIC + "\n")
            json.dump(doc, fh, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "FingerprintIndex":
        with open(path, encoding="utf-8") as fh:
            magic = fh.readline().rstrip("\n")
            if magic != INDEX_MAGIC:
                raise FormatError(f"not a fingerprint index file (magic {magic!r})")
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"malformed index payload: {exc.msg}") from exc
        index = cls(int(doc["dimension"]))
        entries = []
        vectors = []
        seen: set[str] = set()
        for record in doc.get("entries", []):
            entry = DictionaryEntry(
                record["entryId"],
                record["preferredName"],
                record["definition"],
                record.get("unit"),
            )
            if entry.entry_id in seen:
                raise DuplicateEntryError(f"duplicate entryId {entry.entry_id!r}")
            seen.add(entry.entry_id)
            entries.append(entry)
            v = np.asarray(record["vector"], dtype=np.float64)
            if v.ndim != 1 or v.shape[0] != index.dimension:
                raise FormatError(
                    f"entry {entry.entry_id!r}: vector dimension {v.shape} does not"
                    f" match index dimension {index.dimension}"
                )
            if abs(float(np.linalg.norm(v)) - 1.0) > 1e-6:
                raise FormatError(f"entry {entry.entry_id!r}: vector is not unit-norm")
            vectors.append(v)
        index._entries = tuple(entries)
        if vectors:
            index._matrix = np.vstack(vectors)
        return index
