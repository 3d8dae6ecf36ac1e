import os

import numpy as np
import pytest

from morphkit.conllu import Document, read_conllu_file
from morphkit.errors import DataError
from morphkit.ner import cnec_f1, read_entity_file, write_entity_blocks
from morphkit.ner_model import (
    NerConfig,
    NerExternalInputs,
    NerModel,
    NerTrainingParams,
    train_ner,
)

DATA = os.path.join(os.path.dirname(__file__), "..", "data")

TINY = NerConfig(
    form_embed_dim=16,
    lemma_embed_dim=16,
    char_embed_dim=8,
    char_gru_dim=8,
    encoder_dim=16,
    decoder_dim=16,
    label_embed_dim=8,
    dropout=0.1,
    word_dropout=0.0,
)
FAST = NerTrainingParams(epochs=3, learning_rate=2e-3, seed=9)


@pytest.fixture(scope="module")
def corpus():
    doc = read_conllu_file(os.path.join(DATA, "toy_ner.conllu"))
    spans = read_entity_file(os.path.join(DATA, "toy_ner_entities.txt"))
    return doc, spans


@pytest.fixture(scope="module")
def trained(corpus):
    doc, spans = corpus
    config = NerConfig(
        form_embed_dim=32,
        lemma_embed_dim=32,
        char_embed_dim=16,
        char_gru_dim=16,
        encoder_dim=32,
        decoder_dim=32,
        label_embed_dim=16,
        dropout=0.1,
        word_dropout=0.0,
    )
    params = NerTrainingParams(epochs=30, learning_rate=2e-3, seed=0)
    return train_ner(doc, spans, config, params)


def test_overfits_flat_toy_corpus(trained, corpus):
    doc, spans = corpus
    predicted = trained.predict(doc)
    score = cnec_f1(spans, predicted)
    assert score.f1 >= 95.0


def test_prediction_is_deterministic(trained, corpus):
    doc, _ = corpus
    first = trained.predict(doc)
    second = trained.predict(doc)
    assert write_entity_blocks(first) == write_entity_blocks(second)


def test_save_load_roundtrip(tmp_path, trained, corpus):
    doc, _ = corpus
    path = str(tmp_path / "ner.model")
    trained.save(path)
    loaded = NerModel.load(path)
    assert write_entity_blocks(loaded.predict(doc)) == write_entity_blocks(trained.predict(doc))


def test_same_seed_identical_checkpoints(tmp_path, corpus):
    doc, spans = corpus
    blobs = []
    for run in range(2):
        model = train_ner(Document(doc.sentences[:8]), spans[:8], TINY, FAST)
        path = str(tmp_path / f"r{run}.model")
        model.save(path)
        with open(path, "rb") as f:
            blobs.append(f.read())
    assert blobs[0] == blobs[1]


def test_label_cap_forces_end_of_word(trained):
    # doctor the output layer so the end-of-word label can never win
    model = trained
    bias = model.out.bias.data
    original = bias.copy()
    try:
        bias[...] = 0.0
        bias[model.eow_id] = -1e9
        b_label = next(
            i for i, lab in enumerate(model.vocabs["label"].items) if lab.startswith("B-")
        )
        bias[b_label] = 1e9
        labels = model._greedy_decode(np.zeros((3, 2 * model.config.encoder_dim), np.float32), 3)
        assert all(len(token_labels) == 8 for token_labels in labels)
        assert all(lab == model.vocabs["label"][b_label] for tl in labels for lab in tl)
    finally:
        bias[...] = original


def test_missing_gold_spans_rejected(corpus):
    doc, spans = corpus
    with pytest.raises(DataError, match="spans cover"):
        train_ner(doc, spans[:-1], TINY, FAST)


def test_empty_corpus_rejected():
    with pytest.raises(DataError, match="empty"):
        train_ner(Document(), [], TINY, FAST)


def test_predict_empty_document(trained):
    assert trained.predict(Document()) == []


def test_nested_entities_roundtrip_through_training(tmp_path):
    # a corpus whose gold annotation is genuinely nested
    lines = []
    entities = []
    for i in range(12):
        lines.append(
            "1\tJan\tJan\tPROPN\tPR\t_\t3\tdep\t_\t_\n"
            "2\tNovák\tNovák\tPROPN\tPR\t_\t3\tdep\t_\t_\n"
            "3\tpřišel\tpřijít\tVERB\tVE\t_\t0\troot\t_\t_\n"
            "4\t.\t.\tPUNCT\tPU\t_\t3\tdep\t_\t_\n\n"
        )
        entities.append("1 2 P\n1 1 pf\n2 2 ps\n\n")
    from morphkit.conllu import parse_conllu
    from morphkit.ner import parse_entity_blocks

    doc = parse_conllu("".join(lines))
    spans = parse_entity_blocks("".join(entities))
    config = NerConfig(**{**TINY.__dict__, "dropout": 0.0})
    model = train_ner(doc, spans, config, NerTrainingParams(epochs=40, learning_rate=3e-3, seed=1))
    predicted = model.predict(doc)
    score = cnec_f1(spans, predicted)
    assert score.f1 >= 95.0
    assert any(len(block) == 3 for block in predicted)


def test_external_inputs_validated(corpus):
    doc, spans = corpus
    config = NerConfig(**{**TINY.__dict__, "use_pretrained_we": True})
    with pytest.raises(DataError, match="pretrained"):
        train_ner(doc, spans, config, FAST, external=NerExternalInputs())
