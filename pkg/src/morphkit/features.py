"""Vocabularies and batch assembly shared by the tagger and the NER model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conllu import Sentence
from .embeddings import ContextualVectors, WordEmbeddingTable

UNK = "<unk>"


@dataclass(frozen=True)
class Vocab:
    items: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "_index", {item: i for i, item in enumerate(self.items)})

    def id(self, item: str, default: int = 0) -> int:
        return self._index.get(item, default)  # type: ignore[attr-defined]

    def __contains__(self, item: str) -> bool:
        return item in self._index  # type: ignore[attr-defined]

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, idx: int) -> str:
        return self.items[idx]


def build_vocab(values, with_unk: bool = True) -> Vocab:
    uniq = sorted(set(values))
    if with_unk:
        return Vocab(tuple([UNK] + [v for v in uniq if v != UNK]))
    return Vocab(tuple(uniq))


def char_matrix(words: list[str], charset: Vocab) -> tuple[np.ndarray, np.ndarray]:
    """Pad per-word character ids into (n_words, max_len) plus a float mask."""
    if not words:
        return np.zeros((0, 0), dtype=np.int64), np.zeros((0, 0), dtype=np.float32)
    max_len = max(len(w) for w in words)
    ids = np.zeros((len(words), max_len), dtype=np.int64)
    mask = np.zeros((len(words), max_len), dtype=np.float32)
    for i, word in enumerate(words):
        for j, ch in enumerate(word):
            ids[i, j] = charset.id(ch)
            mask[i, j] = 1.0
    return ids, mask


def pretrained_rows(sent: Sentence, table: WordEmbeddingTable) -> np.ndarray:
    """Frozen embedding per token: exact form, lowercased fallback, else zeros."""
    rows = np.zeros((len(sent.tokens), table.dim), dtype=np.float32)
    for i, tok in enumerate(sent.tokens):
        vec = table.get(tok.form)
        if vec is None:
            vec = table.get(tok.form.lower())
        if vec is not None:
            rows[i] = vec
    return rows


@dataclass
class SentenceFeatures:
    """Per-sentence arrays computed once and reused across epochs."""

    length: int
    word_ids: np.ndarray  # (n,)
    lemma_ids: np.ndarray | None  # (n,), NER only
    forms: list[str]
    const_rows: list[np.ndarray]  # each (n, d) float32, frozen inputs


def grid(
    batch: list[SentenceFeatures], extract, pad_value: int = 0
) -> np.ndarray:
    """Stack per-sentence integer vectors into a (T, B) grid, padded."""
    max_len = max(f.length for f in batch)
    out = np.full((max_len, len(batch)), pad_value, dtype=np.int64)
    for b, feats in enumerate(batch):
        vec = extract(feats)
        out[: len(vec), b] = vec
    return out


def length_mask(batch: list[SentenceFeatures]) -> np.ndarray:
    max_len = max(f.length for f in batch)
    mask = np.zeros((max_len, len(batch)), dtype=np.float32)
    for b, feats in enumerate(batch):
        mask[: feats.length, b] = 1.0
    return mask


def const_grid(batch: list[SentenceFeatures], which: int, dim: int) -> np.ndarray:
    """(T, B, dim) grid of one frozen input across a batch."""
    max_len = max(f.length for f in batch)
    out = np.zeros((max_len, len(batch), dim), dtype=np.float32)
    for b, feats in enumerate(batch):
        rows = feats.const_rows[which]
        out[: rows.shape[0], b, :] = rows
    return out


def contextual_rows(vectors: ContextualVectors | None, index: int, n_tokens: int) -> np.ndarray:
    assert vectors is not None
    mat = vectors.per_sentence[index]
    assert mat.shape[0] == n_tokens
    return mat.astype(np.float32)
