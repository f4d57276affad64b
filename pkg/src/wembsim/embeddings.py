"""Loading and querying pre-trained word embedding tables.

Two on-disk layouts are supported:

* text: one ``word c1 c2 ... cd`` line per word, space separated. An optional
  first line made of exactly two integers (``count dim``) is treated as a
  header and skipped (FastText style); GloVe files have no header.
* word2vec binary: ASCII header ``<count> <dim>\\n`` followed by ``count``
  records of ``<word><space><dim little-endian float32>``.

Tables are stored unnormalized and are read-only once loaded.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np


class EmbeddingFormatError(ValueError):
    """Raised when an embedding file cannot be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class EmbeddingTable:
    """Vocabulary-to-row map over a dense ``(len(vocab), dim)`` matrix."""

    name: str
    dim: int
    vocab: Dict[str, int]
    matrix: np.ndarray
    duplicates: int = 0

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if self.matrix.ndim != 2 or self.matrix.shape != (len(self.vocab), self.dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match "
                f"({len(self.vocab)}, {self.dim})"
            )
        if sorted(self.vocab.values()) != list(range(len(self.vocab))):
            raise ValueError("vocab rows must be a permutation of range(len(vocab))")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("embedding matrix contains non-finite values")
        self.matrix.setflags(write=False)

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, word: str) -> bool:
        return self.lookup(word) is not None

    def lookup(self, word: str) -> Optional[np.ndarray]:
        return lookup(self, word)

    @classmethod
    def from_vectors(cls, vectors: Dict[str, Sequence[float]], name: str = "inline") -> "EmbeddingTable":
        """Build a table from a ``word -> vector`` mapping (insertion order kept)."""
        if not vectors:
            raise ValueError("cannot build an empty embedding table")
        words = list(vectors)
        matrix = np.array([np.asarray(vectors[w], dtype=np.float64) for w in words])
        if matrix.ndim != 2:
            raise ValueError("all vectors must have the same length")
        return cls(name=name, dim=matrix.shape[1], vocab={w: i for i, w in enumerate(words)}, matrix=matrix)


@dataclass(frozen=True)
class CoverageStats:
    total_tokens: int
    in_vocab: int
    oov_tokens: List[str] = field(default_factory=list)

    @property
    def rate(self) -> float:
        return self.in_vocab / self.total_tokens if self.total_tokens else 0.0


def lookup(table: EmbeddingTable, word: str) -> Optional[np.ndarray]:
    """Return the row for ``word``, falling back to its lowercase form."""
    row = table.vocab.get(word)
    if row is None:
        lowered = word.lower()
        if lowered != word:
            row = table.vocab.get(lowered)
    if row is None:
        return None
    return table.matrix[row]


def coverage(table: EmbeddingTable, tokens: Iterable[str]) -> CoverageStats:
    total = 0
    oov = []
    for tok in tokens:
        total += 1
        if lookup(table, tok) is None:
            oov.append(tok)
    return CoverageStats(total_tokens=total, in_vocab=total - len(oov), oov_tokens=oov)


def _finish(name, words, rows, dim, duplicates):
    if not words:
        raise EmbeddingFormatError("embedding file contains no vectors")
    if duplicates:
        warnings.warn(
            f"{name}: {duplicates} duplicate word(s) ignored (first occurrence kept)",
            stacklevel=3,
        )
    matrix = np.array(rows, dtype=np.float64).reshape(len(words), dim)
    return EmbeddingTable(
        name=name,
        dim=dim,
        vocab={w: i for i, w in enumerate(words)},
        matrix=matrix,
        duplicates=duplicates,
    )


def _is_header(parts: List[str]) -> bool:
    if len(parts) != 2:
        return False
    try:
        int(parts[0])
        int(parts[1])
    except ValueError:
        return False
    return True


def load_text_vectors(path, expected_dim: Optional[int] = None, name: Optional[str] = None) -> EmbeddingTable:
    """Load a GloVe/FastText style text file.

    The dimensionality is taken from ``expected_dim`` when given, else from
    the header (if present), else from the first data line. Every subsequent
    line must match it.
    """
    if expected_dim is not None and expected_dim <= 0:
        raise ValueError("expected_dim must be positive")
    name = name or os.path.basename(os.fspath(path))
    dim = expected_dim
    header_count = None
    words: List[str] = []
    rows: List[List[float]] = []
    seen = set()
    duplicates = 0

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1 and _is_header(parts):
                header_count, header_dim = int(parts[0]), int(parts[1])
                if header_dim <= 0:
                    raise EmbeddingFormatError(f"non-positive dimension {header_dim} in header", lineno)
                if dim is not None and header_dim != dim:
                    raise EmbeddingFormatError(
                        f"header dimension {header_dim} != expected {dim}", lineno
                    )
                dim = header_dim
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                if not values:
                    raise EmbeddingFormatError("line has no vector components", lineno)
                dim = len(values)
            if len(values) != dim:
                raise EmbeddingFormatError(
                    f"expected {dim} components, found {len(values)}", lineno
                )
            try:
                vec = [float(v) for v in values]
            except ValueError as exc:
                raise EmbeddingFormatError(f"bad component ({exc})", lineno) from None
            if not all(math.isfinite(v) for v in vec):
                raise EmbeddingFormatError("non-finite vector component", lineno)
            if word in seen:
                duplicates += 1
                continue
            seen.add(word)
            words.append(word)
            rows.append(vec)

    if header_count is not None and header_count != len(words) + duplicates:
        warnings.warn(
            f"{name}: header declares {header_count} vectors, file holds {len(words) + duplicates}",
            stacklevel=2,
        )
    if dim is None:
        raise EmbeddingFormatError("empty embedding file")
    return _finish(name, words, rows, dim, duplicates)


def load_word2vec_binary(path, name: Optional[str] = None) -> EmbeddingTable:
    """Load the original word2vec binary layout (float32, little-endian)."""
    name = name or os.path.basename(os.fspath(path))
    with open(path, "rb") as fh:
        data = fh.read()

    nl = data.find(b"\n")
    if nl < 0:
        raise EmbeddingFormatError("missing header line")
    header = data[:nl].split()
    if len(header) != 2:
        raise EmbeddingFormatError(f"malformed header {data[:nl]!r}")
    try:
        count, dim = int(header[0]), int(header[1])
    except ValueError:
        raise EmbeddingFormatError(f"malformed header {data[:nl]!r}") from None
    if count <= 0 or dim <= 0:
        raise EmbeddingFormatError(f"header must declare positive count and dim, got {count} {dim}")

    vec_bytes = 4 * dim
    pos = nl + 1
    words: List[str] = []
    rows = []
    seen = set()
    duplicates = 0
    for i in range(count):
        while pos < len(data) and data[pos:pos + 1] == b"\n":
            pos += 1
        space = data.find(b" ", pos)
        if space < 0:
            raise EmbeddingFormatError(
                f"truncated file: record {i + 1} of {count} has no word terminator "
                f"(expected at least {pos + 1 + vec_bytes} bytes, got {len(data)})"
            )
        word = data[pos:space].decode("utf-8", errors="replace")
        start = space + 1
        end = start + vec_bytes
        if end > len(data):
            raise EmbeddingFormatError(
                f"truncated file: record {i + 1} of {count} needs bytes up to {end}, "
                f"file has {len(data)}"
            )
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=start)
        if not np.all(np.isfinite(vec)):
            raise EmbeddingFormatError(f"non-finite component in vector for {word!r}")
        pos = end
        if word in seen:
            duplicates += 1
            continue
        seen.add(word)
        words.append(word)
        rows.append(vec.astype(np.float64))

    return _finish(name, words, rows, dim, duplicates)


def load_embeddings(path, fmt: str = "text", expected_dim: Optional[int] = None) -> EmbeddingTable:
    if fmt == "text":
        return load_text_vectors(path, expected_dim=expected_dim)
    if fmt == "word2vec-bin":
        return load_word2vec_binary(path)
    raise ValueError(f"unknown embedding format {fmt!r}")


def save_text_vectors(table: EmbeddingTable, path, header: bool = False) -> None:
    """Write ``table`` as text using shortest round-trip float formatting."""
    words = sorted(table.vocab, key=table.vocab.__getitem__)
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"{len(words)} {table.dim}\n")
        for w in words:
            vec = table.matrix[table.vocab[w]]
            fh.write(w + " " + " ".join(repr(float(v)) for v in vec) + "\n")


def save_word2vec_binary(table: EmbeddingTable, path) -> None:
    words = sorted(table.vocab, key=table.vocab.__getitem__)
    with open(path, "wb") as fh:
        fh.write(f"{len(words)} {table.dim}\n".encode("ascii"))
        for w in words:
            fh.write(w.encode("utf-8") + b" ")
            fh.write(table.matrix[table.vocab[w]].astype("<f4").tobytes())
            fh.write(b"\n")
