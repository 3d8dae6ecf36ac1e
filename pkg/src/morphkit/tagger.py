"""Joint tagger and dependency parser.

Tokens are embedded (trainable word embeddings, char-level bi-GRU vectors,
plus optional frozen pretrained and contextual inputs) and run through three
bidirectional LSTM layers.  Softmax heads over the last layer predict UPOS,
XPOS, the feature string and the lemma generation rule; a biaffine head
scores arcs and labels, decoded to a well-formed tree by maximum
arborescence.  Modes select which stacks exist: "tag_only" and "parse_only"
use one stack, "parse_with_predicted_tags" runs a tagger stack first and
feeds embedded predicted tags and lemma rules to a separate parser stack,
and "joint" shares the first two LSTM layers between the tagger and the
parser and sums the head losses.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import evaluation, features
from .conllu import Document, Sentence, Token, feats_to_string
from .dictionary import MorphDictionary, constrained_decode
from .embeddings import ContextualVectors, WordEmbeddingTable
from .errors import DataError, RuleApplicationError, TrainingError
from .features import SentenceFeatures, Vocab, build_vocab
from .lemma_rules import LemmaRule, apply_rule, build_rule, parse_rule
from .mst import mst_decode
from .nn import autodiff as ad
from .nn import checkpoint as ckpt
from .nn.layers import (
    Affine,
    BiaffineLabelScorer,
    BiaffinePairScorer,
    BiLSTM,
    CharWordEncoder,
    DropoutConfig,
    Embedding,
    word_dropout,
)
from .nn.optim import Adam, clip_global_norm
from .util import stream_rng

log = logging.getLogger("morphkit.tagger")

MODES = ("tag_only", "parse_only", "parse_with_predicted_tags", "joint")
TAG_HEADS = ("upos", "xpos", "feats", "rule")
ARC_MASK = -1e4


@dataclass
class TaggerParserConfig:
    mode: str = "joint"
    word_embed_dim: int = 64
    char_embed_dim: int = 64
    char_gru_dim: int = 256
    lstm_dim: int = 256
    lstm_layers: int = 3
    shared_lstm_layers_in_joint: int = 2
    arc_mlp_dim: int = 128
    label_mlp_dim: int = 64
    tag_embed_dim: int = 32
    use_pretrained_we: bool = False
    use_contextual_a: bool = False
    use_contextual_b: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.shared_lstm_layers_in_joint < self.lstm_layers:
            raise ValueError("shared layers must be positive and fewer than total layers")

    @property
    def tags_enabled(self) -> bool:
        return self.mode != "parse_only"

    @property
    def parser_enabled(self) -> bool:
        return self.mode != "tag_only"


@dataclass
class TrainingParams:
    epochs: int = 30
    batch_size: int = 16
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.98
    epsilon: float = 1e-8
    clip_norm: float = 5.0
    dropout: float = 0.5
    word_dropout: float = 0.2
    seed: int = 42

    def dropout_config(self) -> DropoutConfig:
        return DropoutConfig(self.dropout, self.word_dropout, self.seed)


@dataclass
class ExternalInputs:
    """Frozen inputs resolved outside the model (loaded from files)."""

    pretrained: WordEmbeddingTable | None = None
    contextual_a: ContextualVectors | None = None
    contextual_b: ContextualVectors | None = None


@dataclass
class _Batch:
    feats: list[SentenceFeatures]
    word_ids: np.ndarray  # (T, B)
    mask: np.ndarray  # (T, B)
    char_ids: np.ndarray  # (W, L)
    char_mask: np.ndarray  # (W, L)
    char_slot: np.ndarray  # (T, B) row into char output, W = padding row
    const: list[np.ndarray]  # (T, B, d) frozen inputs
    valid_flat: np.ndarray  # indices of real tokens in a flattened (T, B) grid
    targets: dict[str, np.ndarray] = field(default_factory=dict)  # per head, (n_valid,)
    gold_heads: list[np.ndarray] = field(default_factory=list)  # per sentence (n,)
    gold_deprels: list[np.ndarray] = field(default_factory=list)
    tag_inputs: dict[str, np.ndarray] = field(default_factory=dict)  # (T, B) ids


class TaggerParserModel:
    def __init__(
        self,
        config: TaggerParserConfig,
        vocabs: dict[str, Vocab],
        external_dims: dict[str, int],
        seed: int = 42,
        dtype=np.float32,
    ):
        self.config = config
        self.vocabs = vocabs
        self.external_dims = external_dims
        self.dtype = dtype
        self.train_params = TrainingParams()
        self.rules: list[LemmaRule] = [parse_rule(r) for r in vocabs["rule"].items]
        rng = lambda name: stream_rng(seed, f"init.{name}")

        cfg = config
        self.word_emb = Embedding("word_emb", rng("word_emb"), len(vocabs["word"]), cfg.word_embed_dim, dtype)
        self.char_enc = CharWordEncoder(
            "char", rng("char"), len(vocabs["char"]), cfg.char_embed_dim, cfg.char_gru_dim, dtype
        )
        base_dim = cfg.word_embed_dim + self.char_enc.out_dim
        base_dim += external_dims.get("pretrained", 0)
        base_dim += external_dims.get("contextual_a", 0)
        base_dim += external_dims.get("contextual_b", 0)
        self.base_dim = base_dim

        out_dim = 2 * cfg.lstm_dim
        self.tag_embs: dict[str, Embedding] = {}
        self.stacks: dict[str, list[BiLSTM]] = {}
        self.tag_heads: dict[str, Affine] = {}
        self.arc_scorer: BiaffinePairScorer | None = None
        self.label_scorer: BiaffineLabelScorer | None = None
        self.root_vecs: dict[str, ad.Parameter] = {}

        def make_stack(name: str, n_layers: int, in_dim: int) -> list[BiLSTM]:
            layers = []
            for i in range(n_layers):
                layer_in = in_dim if i == 0 else out_dim
                layers.append(BiLSTM(f"{name}.l{i}", rng(f"{name}.l{i}"), layer_in, cfg.lstm_dim, dtype))
            return layers

        def make_root(name: str, dim: int) -> ad.Parameter:
            p = ad.Parameter(f"root.{name}", rng(f"root.{name}").uniform(-0.1, 0.1, size=dim).astype(dtype))
            self.root_vecs[name] = p
            return p

        if cfg.mode == "tag_only":
            self.stacks["tagger"] = make_stack("tagger", cfg.lstm_layers, base_dim)
            make_root("base", base_dim)
        elif cfg.mode == "parse_only":
            self.stacks["parser"] = make_stack("parser", cfg.lstm_layers, base_dim)
            make_root("base", base_dim)
        elif cfg.mode == "parse_with_predicted_tags":
            self.stacks["tagger"] = make_stack("tagger", cfg.lstm_layers, base_dim)
            make_root("base", base_dim)
            for head in TAG_HEADS:
                self.tag_embs[head] = Embedding(
                    f"tag_emb.{head}", rng(f"tag_emb.{head}"), len(vocabs[head]), cfg.tag_embed_dim, dtype
                )
            parser_in = base_dim + len(TAG_HEADS) * cfg.tag_embed_dim
            self.stacks["parser"] = make_stack("parser", cfg.lstm_layers, parser_in)
            make_root("parser_tags", parser_in)
        else:  # joint
            shared = cfg.shared_lstm_layers_in_joint
            self.stacks["shared"] = make_stack("shared", shared, base_dim)
            self.stacks["tagger"] = make_stack("tagger_top", cfg.lstm_layers - shared, out_dim)
            self.stacks["parser"] = make_stack("parser_top", cfg.lstm_layers - shared, out_dim)
            make_root("base", base_dim)

        if cfg.tags_enabled:
            for head in TAG_HEADS:
                self.tag_heads[head] = Affine(f"head.{head}", rng(f"head.{head}"), out_dim, len(vocabs[head]), dtype)
        if cfg.parser_enabled:
            self.arc_scorer = BiaffinePairScorer("arc", rng("arc"), out_dim, cfg.arc_mlp_dim, dtype)
            self.label_scorer = BiaffineLabelScorer(
                "label", rng("label"), out_dim, cfg.label_mlp_dim, len(vocabs["deprel"]), dtype
            )

    # ----- parameters and persistence -------------------------------------

    def parameters(self) -> list[ad.Parameter]:
        params: list[ad.Parameter] = []
        params += self.word_emb.parameters()
        params += self.char_enc.parameters()
        for name in sorted(self.root_vecs):
            params.append(self.root_vecs[name])
        for head in TAG_HEADS:
            if head in self.tag_embs:
                params += self.tag_embs[head].parameters()
        for name in ("shared", "tagger", "parser"):
            for layer in self.stacks.get(name, []):
                params += layer.parameters()
        for head in TAG_HEADS:
            if head in self.tag_heads:
                params += self.tag_heads[head].parameters()
        if self.arc_scorer is not None:
            params += self.arc_scorer.parameters()
        if self.label_scorer is not None:
            params += self.label_scorer.parameters()
        names = [p.name for p in params]
        assert len(names) == len(set(names)), "duplicate parameter names"
        return params

    def save(self, path: str) -> None:
        meta = {
            "kind": "tagger_parser",
            "config": asdict(self.config),
            "external_dims": self.external_dims,
            "head_source": "last_layer",
            "vocabs": {name: list(v.items) for name, v in self.vocabs.items()},
        }
        ckpt.save_checkpoint(path, meta, [(p.name, p.data) for p in self.parameters()])

    @classmethod
    def load(cls, path: str) -> "TaggerParserModel":
        meta, tensors = ckpt.load_checkpoint(path)
        if meta.get("kind") != "tagger_parser":
            raise DataError(f"{path}: checkpoint is not a tagger-parser model")
        config = TaggerParserConfig(**meta["config"])
        vocabs = {name: Vocab(tuple(items)) for name, items in meta["vocabs"].items()}
        model = cls(config, vocabs, meta["external_dims"], seed=0)
        for p in model.parameters():
            if p.name not in tensors:
                raise DataError(f"{path}: missing tensor {p.name}")
            if tuple(tensors[p.name].shape) != p.data.shape:
                raise DataError(f"{path}: tensor {p.name} has shape {tensors[p.name].shape}")
            p.data = tensors[p.name].astype(model.dtype)
        return model

    # ----- featurization ---------------------------------------------------

    def featurize(self, doc: Document, external: ExternalInputs) -> list[SentenceFeatures]:
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
        word_vocab = self.vocabs["word"]
        out = []
        for index, sent in enumerate(doc.sentences):
            n = len(sent.tokens)
            word_ids = np.array([word_vocab.id(t.form.lower()) for t in sent.tokens], dtype=np.int64)
            const_rows = []
            if cfg.use_pretrained_we:
                const_rows.append(features.pretrained_rows(sent, external.pretrained))
            if cfg.use_contextual_a:
                const_rows.append(features.contextual_rows(external.contextual_a, index, n))
            if cfg.use_contextual_b:
                const_rows.append(features.contextual_rows(external.contextual_b, index, n))
            out.append(
                SentenceFeatures(
                    length=n,
                    word_ids=word_ids,
                    lemma_ids=None,
                    forms=[t.form for t in sent.tokens],
                    const_rows=const_rows,
                )
            )
        return out

    def _assemble(self, batch_feats: list[SentenceFeatures], sentences: list[Sentence] | None) -> _Batch:
        char_vocab = self.vocabs["char"]
        max_len = max(f.length for f in batch_feats)
        n_batch = len(batch_feats)
        words: list[str] = []
        char_slot = np.zeros((max_len, n_batch), dtype=np.int64)
        for b, f in enumerate(batch_feats):
            for t, form in enumerate(f.forms):
                char_slot[t, b] = len(words)
                words.append(form)
        char_ids, char_mask = features.char_matrix(words, char_vocab)
        pad_row = len(words)
        for b, f in enumerate(batch_feats):
            char_slot[f.length :, b] = pad_row
        mask = features.length_mask(batch_feats)
        valid_flat = np.flatnonzero(mask.reshape(-1) > 0)
        const = []
        for which in range(len(batch_feats[0].const_rows)):
            dim = batch_feats[0].const_rows[which].shape[1]
            const.append(features.const_grid(batch_feats, which, dim))
        batch = _Batch(
            feats=batch_feats,
            word_ids=features.grid(batch_feats, lambda f: f.word_ids),
            mask=mask,
            char_ids=char_ids,
            char_mask=char_mask,
            char_slot=char_slot,
            const=const,
            valid_flat=valid_flat,
        )
        if sentences is not None:
            self._attach_gold(batch, sentences)
        return batch

    def _attach_gold(self, batch: _Batch, sentences: list[Sentence]) -> None:
        cfg = self.config
        vocabs = self.vocabs
        if cfg.tags_enabled:
            per_head: dict[str, list[int]] = {h: [] for h in TAG_HEADS}
            grids = {h: np.zeros(batch.mask.shape, dtype=np.int64) for h in TAG_HEADS}
            for b, sent in enumerate(sentences):
                for t, tok in enumerate(sent.tokens):
                    ids = {
                        "upos": vocabs["upos"].id(tok.upos),
                        "xpos": vocabs["xpos"].id(tok.xpos),
                        "feats": vocabs["feats"].id(feats_to_string(tok.feats)),
                        "rule": vocabs["rule"].id(build_rule(tok.form, tok.lemma).serialize()),
                    }
                    for h in TAG_HEADS:
                        grids[h][t, b] = ids[h]
            for h in TAG_HEADS:
                per_head[h] = grids[h].reshape(-1)[batch.valid_flat]
                batch.targets[h] = np.asarray(per_head[h], dtype=np.int64)
                batch.tag_inputs[h] = grids[h]
        if cfg.parser_enabled:
            for b, sent in enumerate(sentences):
                heads = np.array([tok.head for tok in sent.tokens], dtype=np.int64)
                deprels = np.array([vocabs["deprel"].id(tok.deprel) for tok in sent.tokens], dtype=np.int64)
                batch.gold_heads.append(heads)
                batch.gold_deprels.append(deprels)

    # ----- forward ---------------------------------------------------------

    def _base_steps(self, batch: _Batch, train: bool, rngs) -> list[ad.Tensor]:
        word_ids = batch.word_ids
        if train and self.train_params.word_dropout > 0:
            word_ids = word_dropout(word_ids, self.train_params.word_dropout, rngs["word_dropout"])
        char_out = self.char_enc.encode_words(batch.char_ids, batch.char_mask)
        zero_row = ad.constant(np.zeros((1, self.char_enc.out_dim), dtype=self.dtype))
        char_all = ad.concat([char_out, zero_row], axis=0)
        steps = []
        for t in range(word_ids.shape[0]):
            parts = [self.word_emb(word_ids[t]), ad.gather_rows(char_all, batch.char_slot[t])]
            for grid_c in batch.const:
                parts.append(ad.constant(grid_c[t]))
            steps.append(ad.concat(parts, axis=1))
        return steps

    def _with_root(self, steps: list[ad.Tensor], batch: _Batch, root_name: str) -> tuple[list[ad.Tensor], np.ndarray]:
        n_batch = batch.mask.shape[1]
        root = ad.broadcast_rows(self.root_vecs[root_name], n_batch)
        mask = np.vstack([np.ones((1, n_batch), dtype=np.float32), batch.mask])
        return [root] + steps, mask

    def _run_stack(self, names: list[str], steps: list[ad.Tensor], mask: np.ndarray, train: bool, rng) -> list[ad.Tensor]:
        rate = self.train_params.dropout if train else 0.0
        seq = [ad.dropout(x, rate, rng, train) for x in steps]
        for name in names:
            for layer in self.stacks[name]:
                seq = layer.run(seq, mask)
                seq = [ad.dropout(h, rate, rng, train) for h in seq]
        return seq

    def _tag_input_steps(self, batch: _Batch, tag_ids: dict[str, np.ndarray]) -> list[ad.Tensor]:
        steps = []
        for t in range(batch.mask.shape[0]):
            parts = [self.tag_embs[h](tag_ids[h][t]) for h in TAG_HEADS]
            steps.append(ad.concat(parts, axis=1))
        return steps

    def _stack_names(self, which: str) -> list[str]:
        if self.config.mode == "joint":
            return ["shared", which]
        return [which]

    def _flat_states(self, seq: list[ad.Tensor]) -> ad.Tensor:
        stacked = ad.stack0(seq)  # (T+1, B, H)
        t_plus_1, n_batch, h = stacked.data.shape
        return ad.reshape(stacked, (t_plus_1 * n_batch, h))

    def _token_states(self, seq: list[ad.Tensor], batch: _Batch) -> ad.Tensor:
        flat = self._flat_states(seq[1:])
        return ad.gather_rows(flat, batch.valid_flat)

    @staticmethod
    def _sentence_states(flat: ad.Tensor, n_batch: int, b: int, n: int) -> ad.Tensor:
        idx = np.array([t * n_batch + b for t in range(n + 1)], dtype=np.int64)
        return ad.gather_rows(flat, idx)

    def _arc_mask(self, n: int) -> np.ndarray:
        mask = np.zeros((n + 1, n + 1), dtype=self.dtype)
        np.fill_diagonal(mask, ARC_MASK)
        mask[:, 0] = ARC_MASK
        return mask

    def loss(self, batch: _Batch, rngs) -> ad.Tensor:
        cfg = self.config
        base = self._base_steps(batch, train=True, rngs=rngs)
        rng = rngs["dropout"]
        parts: list[ad.Tensor] = []
        n_valid = len(batch.valid_flat)

        tagger_seq = None
        if cfg.tags_enabled:
            steps, mask = self._with_root(base, batch, "base")
            tagger_seq = self._run_stack(self._stack_names("tagger"), steps, mask, True, rng)
            token_states = self._token_states(tagger_seq, batch)
            for head in TAG_HEADS:
                logits = self.tag_heads[head](token_states)
                loss = ad.softmax_cross_entropy(logits, batch.targets[head])
                parts.append(ad.scale(loss, 1.0 / n_valid))

        if cfg.parser_enabled:
            if cfg.mode == "parse_with_predicted_tags":
                tag_steps = self._tag_input_steps(batch, batch.tag_inputs)
                parser_base = [ad.concat([b_t, t_t], axis=1) for b_t, t_t in zip(base, tag_steps)]
                steps, mask = self._with_root(parser_base, batch, "parser_tags")
            else:
                steps, mask = self._with_root(base, batch, "base")
            parser_seq = self._run_stack(self._stack_names("parser"), steps, mask, True, rng)
            parser_flat = self._flat_states(parser_seq)
            n_batch = batch.mask.shape[1]
            arc_sum: ad.Tensor | None = None
            label_sum: ad.Tensor | None = None
            for b, f in enumerate(batch.feats):
                n = f.length
                states = self._sentence_states(parser_flat, n_batch, b, n)
                scores = ad.add(self.arc_scorer.scores(states), ad.constant(self._arc_mask(n)))
                dep_logits = ad.narrow(ad.transpose(scores), 0, 1, n)
                arc_loss = ad.softmax_cross_entropy(dep_logits, batch.gold_heads[b])
                label_logits = self.label_scorer.scores(states, batch.gold_heads[b])
                label_loss = ad.softmax_cross_entropy(label_logits, batch.gold_deprels[b])
                arc_sum = arc_loss if arc_sum is None else ad.add(arc_sum, arc_loss)
                label_sum = label_loss if label_sum is None else ad.add(label_sum, label_loss)
            parts.append(ad.scale(arc_sum, 1.0 / n_valid))
            parts.append(ad.scale(label_sum, 1.0 / n_valid))

        total = parts[0]
        for p in parts[1:]:
            total = ad.add(total, p)
        return total

    # ----- prediction ------------------------------------------------------

    def predict(
        self,
        doc: Document,
        external: ExternalInputs | None = None,
        dictionary: MorphDictionary | None = None,
        batch_size: int = 32,
    ) -> Document:
        external = external or ExternalInputs()
        cfg = self.config
        out = Document(
            [
                Sentence(
                    tokens=[
                        Token(
                            id=t.id, form=t.form, lemma=t.lemma, upos=t.upos, xpos=t.xpos,
                            feats=t.feats, head=t.head, deprel=t.deprel, deps=t.deps, misc=t.misc,
                        )
                        for t in sent.tokens
                    ],
                    comments=list(sent.comments),
                    ranges=sent.ranges,
                )
                for sent in doc.sentences
            ]
        )
        if not out.sentences:
            return out
        feats_all = self.featurize(doc, external)
        order = [i for i in range(len(out.sentences)) if out.sentences[i].tokens]
        for start in range(0, len(order), batch_size):
            chunk = order[start : start + batch_size]
            if not chunk:
                continue
            batch = self._assemble([feats_all[i] for i in chunk], None)
            self._predict_batch(batch, [out.sentences[i] for i in chunk], dictionary)
        return out

    def _predict_batch(
        self, batch: _Batch, sentences: list[Sentence], dictionary: MorphDictionary | None
    ) -> None:
        cfg = self.config
        base = self._base_steps(batch, train=False, rngs=None)
        predicted_tag_ids: dict[str, np.ndarray] = {}

        if cfg.tags_enabled:
            steps, mask = self._with_root(base, batch, "base")
            seq = self._run_stack(self._stack_names("tagger"), steps, mask, False, None)
            token_states = self._token_states(seq, batch)
            probs = {
                head: ad.softmax_rows(self.tag_heads[head](token_states).data)
                for head in TAG_HEADS
            }
            self._fill_tags(batch, sentences, probs, dictionary)
            if cfg.mode == "parse_with_predicted_tags":
                argmax = {h: probs[h].argmax(axis=1) for h in TAG_HEADS}
                for h in TAG_HEADS:
                    grid_ids = np.zeros(batch.mask.shape, dtype=np.int64)
                    grid_ids.reshape(-1)[batch.valid_flat] = argmax[h]
                    predicted_tag_ids[h] = grid_ids

        if cfg.parser_enabled:
            if cfg.mode == "parse_with_predicted_tags":
                tag_steps = self._tag_input_steps(batch, predicted_tag_ids)
                parser_base = [ad.concat([b_t, t_t], axis=1) for b_t, t_t in zip(base, tag_steps)]
                steps, mask = self._with_root(parser_base, batch, "parser_tags")
            else:
                steps, mask = self._with_root(base, batch, "base")
            seq = self._run_stack(self._stack_names("parser"), steps, mask, False, None)
            parser_flat = self._flat_states(seq)
            n_batch = batch.mask.shape[1]
            deprel_vocab = self.vocabs["deprel"]
            for b, sent in enumerate(sentences):
                n = len(sent.tokens)
                states = self._sentence_states(parser_flat, n_batch, b, n)
                scores = self.arc_scorer.scores(states).data.astype(np.float64)
                heads = mst_decode(scores)
                label_logits = self.label_scorer.scores(states, np.array(heads, dtype=np.int64)).data
                labels = label_logits.argmax(axis=1)
                for t, tok in enumerate(sent.tokens):
                    tok.head = heads[t]
                    tok.deprel = deprel_vocab[int(labels[t])]

    def _fill_tags(
        self,
        batch: _Batch,
        sentences: list[Sentence],
        probs: dict[str, np.ndarray],
        dictionary: MorphDictionary | None,
    ) -> None:
        vocabs = self.vocabs
        feats_cache = [feats_from_cached(s) for s in vocabs["feats"].items]
        n_batch = batch.mask.shape[1]
        # token_states rows follow valid_flat, which flattens the (T, B) grid
        for row, flat in enumerate(batch.valid_flat):
            t, b = divmod(int(flat), n_batch)
            tok = sentences[b].tokens[t]
            tok.upos = vocabs["upos"][int(probs["upos"][row].argmax())]
            tok.feats = feats_cache[int(probs["feats"][row].argmax())]
            xpos_row = probs["xpos"][row]
            rule_row = probs["rule"][row]
            if dictionary is not None and dictionary.get(tok.form):
                tag_probs = {tag: float(xpos_row[i]) for i, tag in enumerate(vocabs["xpos"].items)}
                rule_probs = list(zip(self.rules, (float(x) for x in rule_row)))
                tok.xpos, tok.lemma = constrained_decode(tag_probs, rule_probs, tok.form, dictionary)
            else:
                tok.xpos = vocabs["xpos"][int(xpos_row.argmax())]
                tok.lemma = self._best_lemma(rule_row, tok.form)

    def _best_lemma(self, rule_row: np.ndarray, form: str) -> str:
        for rule_id in np.argsort(-rule_row, kind="stable"):
            try:
                return apply_rule(self.rules[int(rule_id)], form)
            except RuleApplicationError:
                continue
        return form


def feats_from_cached(serialized: str) -> tuple[tuple[str, str], ...]:
    if serialized == "_":
        return ()
    return tuple(tuple(item.split("=", 1)) for item in serialized.split("|"))  # type: ignore[return-value]


def build_vocabularies(doc: Document) -> dict[str, Vocab]:
    words = []
    chars = []
    upos, xpos, featstrs, rules, deprels = [], [], [], [], []
    for sent in doc.sentences:
        for tok in sent.tokens:
            words.append(tok.form.lower())
            chars.extend(tok.form)
            upos.append(tok.upos)
            xpos.append(tok.xpos)
            featstrs.append(feats_to_string(tok.feats))
            rules.append(build_rule(tok.form, tok.lemma).serialize())
            if tok.deprel != "_":
                deprels.append(tok.deprel)
    return {
        "word": build_vocab(words),
        "char": build_vocab(chars),
        "upos": build_vocab(upos, with_unk=False),
        "xpos": build_vocab(xpos, with_unk=False),
        "feats": build_vocab(featstrs, with_unk=False),
        "rule": build_vocab(rules, with_unk=False),
        "deprel": build_vocab(deprels if deprels else ["dep"], with_unk=False),
    }


def _validate_training_corpus(doc: Document, config: TaggerParserConfig) -> None:
    if not doc.sentences or all(len(s.tokens) == 0 for s in doc.sentences):
        raise DataError("training corpus is empty")
    if config.tags_enabled or config.mode == "parse_with_predicted_tags":
        for column, get in (("UPOS", lambda t: t.upos), ("LEMMA", lambda t: t.lemma)):
            if all(get(t) == "_" for s in doc.sentences for t in s.tokens):
                raise DataError(f"tagging head enabled but gold {column} column is entirely empty")
    if config.parser_enabled:
        for i, sent in enumerate(doc.sentences):
            for tok in sent.tokens:
                if tok.head is None:
                    raise DataError(
                        f"parser enabled but sentence {i + 1} token {tok.id} has no gold head"
                    )


def train_tagger_parser(
    train_doc: Document,
    config: TaggerParserConfig,
    params: TrainingParams,
    dev_doc: Document | None = None,
    external: ExternalInputs | None = None,
    dev_external: ExternalInputs | None = None,
    eval_mode: str = "ud",
    epoch_callback=None,
) -> TaggerParserModel:
    """Train a model; logs per-epoch dev metrics when a dev set is supplied.

    epoch_callback(model, epoch, mean_loss) may return True to stop early.
    """
    external = external or ExternalInputs()
    train_doc = Document([s for s in train_doc.sentences if s.tokens])
    _validate_training_corpus(train_doc, config)
    vocabs = build_vocabularies(train_doc)
    if config.use_pretrained_we and external.pretrained is None:
        raise DataError("model uses pretrained embeddings: supply the embedding table")
    if config.use_contextual_a and external.contextual_a is None:
        raise DataError("model uses contextual input A: supply a contextual vector file")
    if config.use_contextual_b and external.contextual_b is None:
        raise DataError("model uses contextual input B: supply a contextual vector file")
    external_dims = {
        "pretrained": external.pretrained.dim if config.use_pretrained_we else 0,
        "contextual_a": external.contextual_a.dim if config.use_contextual_a else 0,
        "contextual_b": external.contextual_b.dim if config.use_contextual_b else 0,
    }
    params.dropout_config()  # validates the rates
    model = TaggerParserModel(config, vocabs, external_dims, seed=params.seed)
    model.train_params = params
    feats_all = model.featurize(train_doc, external)
    sentences = train_doc.sentences
    optimizer = Adam(
        model.parameters(),
        learning_rate=params.learning_rate,
        beta1=params.beta1,
        beta2=params.beta2,
        epsilon=params.epsilon,
    )
    rngs = {
        "order": stream_rng(params.seed, "train.order"),
        "dropout": stream_rng(params.seed, "train.dropout"),
        "word_dropout": stream_rng(params.seed, "train.word_dropout"),
    }
    indices = np.arange(len(sentences))
    start_time = time.time()
    for epoch in range(1, params.epochs + 1):
        rngs["order"].shuffle(indices)
        total_loss = 0.0
        n_batches = 0
        for start in range(0, len(indices), params.batch_size):
            chunk = [int(i) for i in indices[start : start + params.batch_size]]
            batch = model._assemble([feats_all[i] for i in chunk], [sentences[i] for i in chunk])
            loss = model.loss(batch, rngs)
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
        if dev_doc is not None and dev_doc.sentences:
            predicted = model.predict(dev_doc, dev_external or ExternalInputs())
            log.info("epoch %d: dev %s", epoch, _dev_summary(dev_doc, predicted, config, eval_mode))
        if epoch_callback is not None and epoch_callback(model, epoch, mean_loss):
            log.info("early stop requested at epoch %d", epoch)
            break
    return model


def _dev_summary(gold: Document, predicted: Document, config: TaggerParserConfig, mode: str) -> str:
    parts = []
    if config.tags_enabled:
        for field_name in ("upos", "xpos", "lemmas"):
            acc = evaluation.tagging_accuracy(gold, predicted, field_name, mode)
            parts.append(f"{field_name}={100 * acc.ratio:.2f}")
    if config.parser_enabled and all(
        t.head is not None for s in gold.sentences for t in s.tokens
    ):
        uas, las = evaluation.attachment_scores(gold, predicted)
        parts.append(f"uas={100 * uas.ratio:.2f}")
        parts.append(f"las={100 * las.ratio:.2f}")
    return " ".join(parts)
