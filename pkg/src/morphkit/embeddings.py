"""Pretrained word-embedding tables and precomputed contextual vectors.

Word embeddings arrive as a text file ("count dim" header, then one
whitespace-separated "word v1 ... vdim" line per entry).  Contextual vectors
arrive in the CVEC container: magic b"CVEC", version byte 1, u32-LE dim, then
per sentence a u32-LE token count followed by count*dim float32-LE values,
sentences in document order.  Both are produced offline by external tools;
this module only validates and serves them.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .conllu import Document
from .errors import DataError

CVEC_MAGIC = b"CVEC"
CVEC_VERSION = 1


@dataclass
class WordEmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]

    def get(self, word: str) -> np.ndarray | None:
        return self.vectors.get(word)

    def lookup(self, word: str) -> np.ndarray:
        """Total lookup: unseen words map to the all-zeros vector."""
        vec = self.vectors.get(word)
        if vec is None:
            return np.zeros(self.dim, dtype=np.float32)
        return vec

    def __len__(self) -> int:
        return len(self.vectors)


def load_word_embeddings(path: str) -> WordEmbeddingTable:
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not lines:
        raise DataError(f"{path}: empty embedding file")
    header = lines[0].split()
    if len(header) != 2:
        raise DataError(f"{path}: line 1: expected 'count dim' header")
    try:
        count, dim = int(header[0]), int(header[1])
    except ValueError:
        raise DataError(f"{path}: line 1: expected 'count dim' header") from None
    if count < 0 or dim <= 0:
        raise DataError(f"{path}: line 1: bad count/dim {count} {dim}")
    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise DataError(
                f"{path}: line {lineno}: expected {dim} values, got {len(parts) - 1}"
            )
        word = parts[0]
        if word in vectors:
            raise DataError(f"{path}: line {lineno}: duplicate word {word!r}")
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float32)
        except ValueError:
            raise DataError(f"{path}: line {lineno}: non-numeric value") from None
        vectors[word] = vec
    if len(vectors) != count:
        raise DataError(f"{path}: header claims {count} entries, found {len(vectors)}")
    return WordEmbeddingTable(dim=dim, vectors=vectors)


def average_last_layers(layers: list[np.ndarray], k: int) -> np.ndarray:
    """Elementwise mean of the final k layers of a per-layer stack."""
    if k <= 0:
        raise ValueError("k must be positive")
    if len(layers) < k:
        raise DataError(f"need at least {k} layers, got {len(layers)}")
    shape = layers[0].shape
    for i, layer in enumerate(layers):
        if layer.shape != shape:
            raise DataError(f"layer {i} shape {layer.shape} != layer 0 shape {shape}")
    return np.mean(np.stack(layers[-k:], axis=0), axis=0)


@dataclass(frozen=True)
class SubwordAlignment:
    # per token: (start, end) half-open range of subword row indices
    ranges: tuple[tuple[int, int], ...]

    def validate(self, n_subwords: int) -> None:
        if not self.ranges:
            raise DataError("alignment has no tokens")
        expected = 0
        for i, (start, end) in enumerate(self.ranges):
            if start != expected:
                raise DataError(f"token {i} range starts at {start}, expected {expected}")
            if end <= start:
                raise DataError(f"token {i} has empty subword range")
            expected = end
        if expected != n_subwords:
            raise DataError(f"alignment covers {expected} subwords, matrix has {n_subwords}")


def aggregate_subwords(subword_vectors: np.ndarray, alignment: SubwordAlignment) -> np.ndarray:
    """One row per token: the mean of its subword rows."""
    alignment.validate(subword_vectors.shape[0])
    rows = [subword_vectors[s:e].mean(axis=0) for s, e in alignment.ranges]
    return np.stack(rows, axis=0)


@dataclass
class ContextualVectors:
    dim: int
    per_sentence: list[np.ndarray]

    def validate_against(self, doc: Document) -> None:
        if len(self.per_sentence) != len(doc.sentences):
            raise DataError(
                f"contextual file has {len(self.per_sentence)} sentences, "
                f"document has {len(doc.sentences)}"
            )
        for i, (mat, sent) in enumerate(zip(self.per_sentence, doc.sentences)):
            if mat.shape[0] != len(sent.tokens):
                raise DataError(
                    f"sentence {i}: contextual file has {mat.shape[0]} rows, "
                    f"sentence has {len(sent.tokens)} tokens"
                )


def read_contextual_vectors(path: str, doc: Document) -> ContextualVectors:
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if len(blob) < 9:
        raise DataError(f"{path}: truncated CVEC file")
    if blob[:4] != CVEC_MAGIC:
        raise DataError(f"{path}: bad magic {blob[:4]!r}, expected {CVEC_MAGIC!r}")
    if blob[4] != CVEC_VERSION:
        raise DataError(f"{path}: unsupported CVEC version {blob[4]}")
    (dim,) = struct.unpack_from("<I", blob, 5)
    if dim == 0:
        raise DataError(f"{path}: zero dimension")
    offset = 9
    per_sentence: list[np.ndarray] = []
    for i in range(len(doc.sentences)):
        if offset + 4 > len(blob):
            raise DataError(f"{path}: truncated before sentence {i}")
        (n_tokens,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        want = len(doc.sentences[i].tokens)
        if n_tokens != want:
            raise DataError(
                f"{path}: sentence {i}: file has {n_tokens} tokens, document has {want}"
            )
        nbytes = 4 * n_tokens * dim
        if offset + nbytes > len(blob):
            raise DataError(f"{path}: truncated inside sentence {i}")
        mat = np.frombuffer(blob, dtype="<f4", count=n_tokens * dim, offset=offset)
        per_sentence.append(mat.reshape(n_tokens, dim).copy())
        offset += nbytes
    if offset != len(blob):
        raise DataError(f"{path}: {len(blob) - offset} trailing bytes after last sentence")
    return ContextualVectors(dim=int(dim), per_sentence=per_sentence)


def write_contextual_vectors(path: str, vectors: ContextualVectors) -> None:
    with open(path, "wb") as f:
        f.write(CVEC_MAGIC)
        f.write(bytes([CVEC_VERSION]))
        f.write(struct.pack("<I", vectors.dim))
        for mat in vectors.per_sentence:
            if mat.ndim != 2 or mat.shape[1] != vectors.dim:
                raise DataError(f"sentence matrix shape {mat.shape} does not match dim {vectors.dim}")
            f.write(struct.pack("<I", mat.shape[0]))
            f.write(np.ascontiguousarray(mat, dtype="<f4").tobytes())
