"""Sequence-to-sequence nested NER over linearized per-token label lists.

The encoder is a bidirectional LSTM over token representations (form and
lemma embeddings, a POS one-hot, char-level bi-GRU vectors, plus optional
frozen pretrained/contextual inputs).  The decoder is an LSTM that emits one
label at a time with hard attention: each step sees exactly the encoder
state of the token currently being labeled plus the embedding of the
previous label, and moving to the next token happens when the end-of-word
label is produced (or forced once the per-token label cap is reached).
Training is teacher-forced; prediction is greedy.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import features
from .conllu import Document
from .embeddings import ContextualVectors, WordEmbeddingTable
from .errors import DataError, TrainingError
from .features import SentenceFeatures, Vocab, build_vocab
from .ner import EntitySpan, cnec_f1, decode_entities, encode_entities
from .nn import autodiff as ad
from .nn import checkpoint as ckpt
from .nn.layers import (
    Affine,
    BiLSTM,
    CharWordEncoder,
    DropoutConfig,
    Embedding,
    LSTMCell,
    word_dropout,
)
from .nn.optim import Adam, clip_global_norm
from .util import stream_rng

log = logging.getLogger("morphkit.ner")

EOW = "<eow>"


@dataclass
class NerConfig:
    form_embed_dim: int = 256
    lemma_embed_dim: int = 256
    char_embed_dim: int = 128
    char_gru_dim: int = 128
    encoder_dim: int = 256
    decoder_dim: int = 256
    label_embed_dim: int = 128
    max_labels_per_token: int = 8
    batch_size: int = 8
    dropout: float = 0.5
    word_dropout: float = 0.2
    beta1: float = 0.9
    beta2: float = 0.98
    use_pretrained_we: bool = False
    use_contextual_a: bool = False
    use_contextual_b: bool = False


@dataclass
class NerTrainingParams:
    epochs: int = 30
    learning_rate: float = 1e-3
    epsilon: float = 1e-8
    clip_norm: float = 5.0
    seed: int = 42


@dataclass
class NerExternalInputs:
    pretrained: WordEmbeddingTable | None = None
    contextual_a: ContextualVectors | None = None
    contextual_b: ContextualVectors | None = None


class NerModel:
    def __init__(
        self,
        config: NerConfig,
        vocabs: dict[str, Vocab],
        external_dims: dict[str, int],
        seed: int = 42,
        dtype=np.float32,
    ):
        self.config = config
        self.vocabs = vocabs
        self.external_dims = external_dims
        self.dtype = dtype
        rng = lambda name: stream_rng(seed, f"ner.init.{name}")

        self.form_emb = Embedding("form_emb", rng("form"), len(vocabs["form"]), config.form_embed_dim, dtype)
        self.lemma_emb = Embedding("lemma_emb", rng("lemma"), len(vocabs["lemma"]), config.lemma_embed_dim, dtype)
        self.char_enc = CharWordEncoder(
            "char", rng("char"), len(vocabs["char"]), config.char_embed_dim, config.char_gru_dim, dtype
        )
        in_dim = (
            config.form_embed_dim
            + config.lemma_embed_dim
            + len(vocabs["pos"])
            + self.char_enc.out_dim
            + external_dims.get("pretrained", 0)
            + external_dims.get("contextual_a", 0)
            + external_dims.get("contextual_b", 0)
        )
        self.encoder = BiLSTM("encoder", rng("encoder"), in_dim, config.encoder_dim, dtype)
        self.label_emb = Embedding(
            "label_emb", rng("label_emb"), len(vocabs["label"]), config.label_embed_dim, dtype
        )
        self.decoder = LSTMCell(
            "decoder", rng("decoder"), 2 * config.encoder_dim + config.label_embed_dim, config.decoder_dim, dtype
        )
        self.out = Affine("out", rng("out"), config.decoder_dim, len(vocabs["label"]), dtype)
        self.eow_id = vocabs["label"].id(EOW)

    def parameters(self) -> list[ad.Parameter]:
        params = (
            self.form_emb.parameters()
            + self.lemma_emb.parameters()
            + self.char_enc.parameters()
            + self.encoder.parameters()
            + self.label_emb.parameters()
            + self.decoder.parameters()
            + self.out.parameters()
        )
        names = [p.name for p in params]
        assert len(names) == len(set(names))
        return params

    def save(self, path: str) -> None:
        meta = {
            "kind": "ner",
            "config": asdict(self.config),
            "external_dims": self.external_dims,
            "vocabs": {name: list(v.items) for name, v in self.vocabs.items()},
        }
        ckpt.save_checkpoint(path, meta, [(p.name, p.data) for p in self.parameters()])

    @classmethod
    def load(cls, path: str) -> "NerModel":
        meta, tensors = ckpt.load_checkpoint(path)
        if meta.get("kind") != "ner":
            raise DataError(f"{path}: checkpoint is not an NER model")
        config = NerConfig(**meta["config"])
        vocabs = {name: Vocab(tuple(items)) for name, items in meta["vocabs"].items()}
        model = cls(config, vocabs, meta["external_dims"], seed=0)
        for p in model.parameters():
            if p.name not in tensors:
                raise DataError(f"{path}: missing tensor {p.name}")
            p.data = tensors[p.name].astype(model.dtype)
        return model

    # ----- featurization ---------------------------------------------------

    def featurize(self, doc: Document, external: NerExternalInputs) -> list[SentenceFeatures]:
        cfg = self.config
        if cfg.use_pretrained_we and external.pretrained is None:
            raise DataError("model uses pretrained embeddings: supply the embedding table")
        if cfg.use_contextual_a and external.contextual_a is None:
            raise DataError("model uses contextual input A: supply a contextual vector file")
        if cfg.use_contextual_b and external.contextual_b is None:
            raise DataError("model uses contextual input B: supply a contextual vector file")
        if external.contextual_a is not None:
            external.contextual_a.validate_against(doc)
        if external.contextual_b is not None:
            external.contextual_b.validate_against(doc)
        form_vocab = self.vocabs["form"]
        lemma_vocab = self.vocabs["lemma"]
        pos_vocab = self.vocabs["pos"]
        out = []
        for index, sent in enumerate(doc.sentences):
            n = len(sent.tokens)
            pos_rows = np.zeros((n, len(pos_vocab)), dtype=np.float32)
            for i, tok in enumerate(sent.tokens):
                if tok.upos in pos_vocab:
                    pos_rows[i, pos_vocab.id(tok.upos)] = 1.0
            const_rows = [pos_rows]
            if cfg.use_pretrained_we:
                const_rows.append(features.pretrained_rows(sent, external.pretrained))
            if cfg.use_contextual_a:
                const_rows.append(features.contextual_rows(external.contextual_a, index, n))
            if cfg.use_contextual_b:
                const_rows.append(features.contextual_rows(external.contextual_b, index, n))
            out.append(
                SentenceFeatures(
                    length=n,
                    word_ids=np.array(
                        [form_vocab.id(t.form.lower()) for t in sent.tokens], dtype=np.int64
                    ),
                    lemma_ids=np.array(
                        [lemma_vocab.id(t.lemma) for t in sent.tokens], dtype=np.int64
                    ),
                    forms=[t.form for t in sent.tokens],
                    const_rows=const_rows,
                )
            )
        return out

    def _encode_batch(
        self, batch: list[SentenceFeatures], train: bool, rngs
    ) -> tuple[ad.Tensor, np.ndarray]:
        """Returns encoder states flattened to (T*B, 2H) plus the (T, B) mask."""
        cfg = self.config
        mask = features.length_mask(batch)
        max_len, n_batch = mask.shape
        form_ids = features.grid(batch, lambda f: f.word_ids)
        lemma_ids = features.grid(batch, lambda f: f.lemma_ids)
        if train and cfg.word_dropout > 0:
            form_ids = word_dropout(form_ids, cfg.word_dropout, rngs["word_dropout"])
            lemma_ids = word_dropout(lemma_ids, cfg.word_dropout, rngs["word_dropout"])
        words: list[str] = []
        char_slot = np.zeros((max_len, n_batch), dtype=np.int64)
        for b, f in enumerate(batch):
            for t, form in enumerate(f.forms):
                char_slot[t, b] = len(words)
                words.append(form)
        char_ids, char_mask = features.char_matrix(words, self.vocabs["char"])
        pad_row = len(words)
        for b, f in enumerate(batch):
            char_slot[f.length :, b] = pad_row
        char_out = self.char_enc.encode_words(char_ids, char_mask)
        zero_row = ad.constant(np.zeros((1, self.char_enc.out_dim), dtype=self.dtype))
        char_all = ad.concat([char_out, zero_row], axis=0)
        const = []
        for which in range(len(batch[0].const_rows)):
            dim = batch[0].const_rows[which].shape[1]
            const.append(features.const_grid(batch, which, dim))
        rate = cfg.dropout if train else 0.0
        rng = rngs["dropout"] if train else None
        steps = []
        for t in range(max_len):
            parts = [
                self.form_emb(form_ids[t]),
                self.lemma_emb(lemma_ids[t]),
                ad.gather_rows(char_all, char_slot[t]),
            ]
            for grid_c in const:
                parts.append(ad.constant(grid_c[t]))
            steps.append(ad.dropout(ad.concat(parts, axis=1), rate, rng, train))
        seq = self.encoder.run(steps, mask)
        if train:
            seq = [ad.dropout(h, rate, rng, train) for h in seq]
        stacked = ad.stack0(seq)
        flat = ad.reshape(stacked, (max_len * n_batch, 2 * cfg.encoder_dim))
        return flat, mask

    # ----- training --------------------------------------------------------

    def loss(self, batch: list[SentenceFeatures], gold_labels: list[list[list[str]]], rngs) -> ad.Tensor:
        cfg = self.config
        label_vocab = self.vocabs["label"]
        enc_flat, mask = self._encode_batch(batch, train=True, rngs=rngs)
        n_batch = len(batch)
        streams: list[list[tuple[int, int]]] = []  # (attention token, target label id)
        for labels in gold_labels:
            stream = []
            for t, token_labels in enumerate(labels):
                for lab in token_labels:
                    stream.append((t, label_vocab.id(lab)))
                stream.append((t, self.eow_id))
            streams.append(stream)
        s_max = max(len(s) for s in streams)
        attn = np.zeros((s_max, n_batch), dtype=np.int64)
        target = np.zeros((s_max, n_batch), dtype=np.int64)
        prev = np.full((s_max, n_batch), self.eow_id, dtype=np.int64)
        stream_mask = np.zeros((s_max, n_batch), dtype=np.float32)
        for b, stream in enumerate(streams):
            for s, (tok, lab) in enumerate(stream):
                attn[s, b] = tok
                target[s, b] = lab
                stream_mask[s, b] = 1.0
                if s + 1 < s_max:
                    prev[s + 1, b] = lab
        rate = cfg.dropout
        rng = rngs["dropout"]
        h, c = self.decoder.initial_state(n_batch, self.dtype)
        logits_steps = []
        for s in range(s_max):
            enc_sel = ad.gather_rows(enc_flat, attn[s] * n_batch + np.arange(n_batch))
            x = ad.concat([enc_sel, self.label_emb(prev[s])], axis=1)
            h, c = self.decoder.step(x, (h, c))
            logits_steps.append(self.out(ad.dropout(h, rate, rng, True)))
        logits = ad.reshape(ad.stack0(logits_steps), (s_max * n_batch, len(label_vocab)))
        loss = ad.softmax_cross_entropy(logits, target.reshape(-1), stream_mask.reshape(-1))
        return ad.scale(loss, 1.0 / float(stream_mask.sum()))

    # ----- prediction ------------------------------------------------------

    def predict(
        self,
        doc: Document,
        external: NerExternalInputs | None = None,
        batch_size: int | None = None,
    ) -> list[list[EntitySpan]]:
        external = external or NerExternalInputs()
        if not doc.sentences:
            return []
        feats_all = self.featurize(doc, external)
        results: list[list[EntitySpan]] = [[] for _ in doc.sentences]
        order = [i for i in range(len(doc.sentences)) if doc.sentences[i].tokens]
        step = batch_size or self.config.batch_size
        for start in range(0, len(order), step):
            chunk = order[start : start + step]
            if not chunk:
                continue
            batch = [feats_all[i] for i in chunk]
            enc_flat, mask = self._encode_batch(batch, train=False, rngs=None)
            enc = enc_flat.data.reshape(mask.shape[0], mask.shape[1], -1)
            for b, i in enumerate(chunk):
                labels = self._greedy_decode(enc[:, b, :], feats_all[i].length)
                results[i] = decode_entities(labels)
        return results

    def _greedy_decode(self, enc_states: np.ndarray, n_tokens: int) -> list[list[str]]:
        cfg = self.config
        label_vocab = self.vocabs["label"]
        wx = self.decoder.wx.data
        wh = self.decoder.wh.data
        bias = self.decoder.bias.data
        hid = cfg.decoder_dim
        h = np.zeros(hid, dtype=self.dtype)
        c = np.zeros(hid, dtype=self.dtype)
        out_w = self.out.weight.data
        out_b = self.out.bias.data
        label_table = self.label_emb.table.data
        prev = self.eow_id
        labels: list[list[str]] = []
        for t in range(n_tokens):
            token_labels: list[str] = []
            while True:
                x = np.concatenate([enc_states[t], label_table[prev]])
                z = x @ wx + h @ wh + bias
                i_g = _sigmoid(z[:hid])
                f_g = _sigmoid(z[hid : 2 * hid])
                o_g = _sigmoid(z[2 * hid : 3 * hid])
                g_g = np.tanh(z[3 * hid :])
                c = f_g * c + i_g * g_g
                h = o_g * np.tanh(c)
                scores = h @ out_w + out_b
                best = int(scores.argmax())
                if best == self.eow_id:
                    prev = self.eow_id
                    break
                token_labels.append(label_vocab[best])
                prev = best
                if len(token_labels) >= cfg.max_labels_per_token:
                    prev = self.eow_id
                    break
            labels.append(token_labels if token_labels else ["O"])
        return labels


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def _external_dims(config, external) -> dict[str, int]:
    if config.use_pretrained_we and external.pretrained is None:
        raise DataError("model uses pretrained embeddings: supply the embedding table")
    if config.use_contextual_a and external.contextual_a is None:
        raise DataError("model uses contextual input A: supply a contextual vector file")
    if config.use_contextual_b and external.contextual_b is None:
        raise DataError("model uses contextual input B: supply a contextual vector file")
    return {
        "pretrained": external.pretrained.dim if config.use_pretrained_we else 0,
        "contextual_a": external.contextual_a.dim if config.use_contextual_a else 0,
        "contextual_b": external.contextual_b.dim if config.use_contextual_b else 0,
    }


def build_ner_vocabularies(doc: Document, all_labels: list[list[list[str]]]) -> dict[str, Vocab]:
    forms, lemmas, chars, pos = [], [], [], []
    label_set = set()
    for sent in doc.sentences:
        for tok in sent.tokens:
            forms.append(tok.form.lower())
            lemmas.append(tok.lemma)
            chars.extend(tok.form)
            pos.append(tok.upos)
    for sent_labels in all_labels:
        for token_labels in sent_labels:
            label_set.update(token_labels)
    label_set.add("O")
    return {
        "form": build_vocab(forms),
        "lemma": build_vocab(lemmas),
        "char": build_vocab(chars),
        "pos": build_vocab(pos, with_unk=False),
        "label": Vocab(tuple([EOW] + sorted(label_set))),
    }


def train_ner(
    train_doc: Document,
    train_spans: list[list[EntitySpan]],
    config: NerConfig,
    params: NerTrainingParams,
    dev_doc: Document | None = None,
    dev_spans: list[list[EntitySpan]] | None = None,
    external: NerExternalInputs | None = None,
    dev_external: NerExternalInputs | None = None,
    epoch_callback=None,
) -> NerModel:
    """Teacher-forced training with the lazy Adam settings from the config."""
    external = external or NerExternalInputs()
    if not train_doc.sentences or all(len(s.tokens) == 0 for s in train_doc.sentences):
        raise DataError("training corpus is empty")
    if len(train_spans) != len(train_doc.sentences):
        raise DataError(
            f"gold spans cover {len(train_spans)} sentences, corpus has {len(train_doc.sentences)}"
        )
    all_labels = [
        encode_entities(len(sent.tokens), spans)
        for sent, spans in zip(train_doc.sentences, train_spans)
    ]
    keep = [i for i, sent in enumerate(train_doc.sentences) if sent.tokens]
    train_doc = Document([train_doc.sentences[i] for i in keep])
    all_labels = [all_labels[i] for i in keep]

    vocabs = build_ner_vocabularies(train_doc, all_labels)
    external_dims = _external_dims(config, external)
    DropoutConfig(config.dropout, config.word_dropout, params.seed)  # validates rates
    model = NerModel(config, vocabs, external_dims, seed=params.seed)
    feats_all = model.featurize(train_doc, external)
    optimizer = Adam(
        model.parameters(),
        learning_rate=params.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=params.epsilon,
    )
    rngs = {
        "order": stream_rng(params.seed, "ner.train.order"),
        "dropout": stream_rng(params.seed, "ner.train.dropout"),
        "word_dropout": stream_rng(params.seed, "ner.train.word_dropout"),
    }
    indices = np.arange(len(train_doc.sentences))
    start_time = time.time()
    for epoch in range(1, params.epochs + 1):
        rngs["order"].shuffle(indices)
        total_loss = 0.0
        n_batches = 0
        for start in range(0, len(indices), config.batch_size):
            chunk = [int(i) for i in indices[start : start + config.batch_size]]
            loss = model.loss([feats_all[i] for i in chunk], [all_labels[i] for i in chunk], rngs)
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            optimizer.zero_grad()
            ad.backward(loss)
            clip_global_norm(optimizer.params, params.clip_norm)
            optimizer.step()
            total_loss += value
            n_batches += 1
        mean_loss = total_loss / max(n_batches, 1)
        log.info("epoch %d: mean loss %.4f (%.1fs)", epoch, mean_loss, time.time() - start_time)
        if dev_doc is not None and dev_spans is not None:
            predicted = model.predict(dev_doc, dev_external or NerExternalInputs())
            score = cnec_f1(dev_spans, predicted, level="types")
            log.info("epoch %d: dev type F1 %.2f", epoch, score.f1)
        if epoch_callback is not None and epoch_callback(model, epoch, mean_loss):
            log.info("early stop requested at epoch %d", epoch)
            break
    return model
