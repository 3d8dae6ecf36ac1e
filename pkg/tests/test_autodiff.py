"""Gradient checks: every layer against central finite differences (float64)."""

import numpy as np
import pytest

from helpers import finite_difference_gradcheck
from morphkit.nn import autodiff as ad
from morphkit.nn.layers import (
    Affine,
    BiaffineLabelScorer,
    BiaffinePairScorer,
    BiGRU,
    BiLSTM,
    CharWordEncoder,
    Embedding,
    GRUCell,
    LSTMCell,
    run_gru,
    run_lstm,
)
from morphkit.util import stream_rng

F64 = np.float64
SEEDS = range(20)


def _rng(seed):
    return stream_rng(seed, "gradcheck")


def _project(rng, out):
    """Random fixed projection making a scalar loss out of any output."""
    w = ad.constant(rng.normal(size=out.data.shape))
    prod = ad.mul(out, w)
    flat = ad.reshape(prod, (1, prod.data.size))
    ones = ad.constant(np.ones((prod.data.size, 1)))
    return ad.reshape(ad.matmul(flat, ones), ())


@pytest.mark.parametrize("seed", SEEDS)
def test_embedding_gradients(seed):
    rng = _rng(seed)
    emb = Embedding("emb", rng, 6, 3, F64)
    ids = rng.integers(0, 6, size=(4,))
    w = rng.normal(size=(4, 3))

    def loss_fn():
        return _project(np.random.default_rng(0), ad.mul(emb(ids), ad.constant(w)))

    finite_difference_gradcheck(emb.parameters(), loss_fn)


@pytest.mark.parametrize("seed", SEEDS)
def test_affine_softmax_cross_entropy_gradients(seed):
    rng = _rng(seed)
    layer = Affine("aff", rng, 4, 3, F64)
    x = ad.constant(rng.normal(size=(5, 4)))
    targets = rng.integers(0, 3, size=5)
    weights = rng.random(5) + 0.1

    def loss_fn():
        return ad.softmax_cross_entropy(layer(x), targets, weights)

    finite_difference_gradcheck(layer.parameters(), loss_fn)


@pytest.mark.parametrize("seed", SEEDS)
def test_gru_gradients(seed):
    rng = _rng(seed)
    cell = GRUCell("gru", rng, 3, 4, F64)
    xs_data = [rng.normal(size=(2, 3)) for _ in range(3)]
    mask = np.array([[1, 1], [1, 1], [1, 0]], dtype=F64)
    proj_rng = np.random.default_rng(seed)

    def loss_fn():
        outs, final = run_gru(cell, [ad.constant(x) for x in xs_data], mask)
        return _project(np.random.default_rng(seed), ad.concat(outs + [final], axis=1))

    finite_difference_gradcheck(cell.parameters(), loss_fn)


@pytest.mark.parametrize("seed", SEEDS)
def test_lstm_gradients(seed):
    rng = _rng(seed)
    cell = LSTMCell("lstm", rng, 3, 3, F64)
    xs_data = [rng.normal(size=(2, 3)) for _ in range(3)]
    mask = np.array([[1, 1], [1, 0], [1, 0]], dtype=F64)

    def loss_fn():
        outs, (h, c) = run_lstm(cell, [ad.constant(x) for x in xs_data], mask)
        return _project(np.random.default_rng(seed), ad.concat(outs + [h, c], axis=1))

    finite_difference_gradcheck(cell.parameters(), loss_fn)


@pytest.mark.parametrize("seed", SEEDS)
def test_bigru_gradients(seed):
    rng = _rng(seed)
    layer = BiGRU("bigru", rng, 2, 3, F64)
    xs_data = [rng.normal(size=(2, 2)) for _ in range(2)]
    mask = np.ones((2, 2), dtype=F64)

    def loss_fn():
        outs, final = layer.run([ad.constant(x) for x in xs_data], mask)
        return _project(np.random.default_rng(seed), ad.concat(outs + [final], axis=1))

    finite_difference_gradcheck(layer.parameters(), loss_fn)


@pytest.mark.parametrize("seed", SEEDS)
def test_bilstm_gradients(seed):
    rng = _rng(seed)
    layer = BiLSTM("bilstm", rng, 2, 2, F64)
    xs_data = [rng.normal(size=(2, 2)) for _ in range(3)]
    mask = np.array([[1, 1], [1, 1], [0, 1]], dtype=F64)

    def loss_fn():
        outs = layer.run([ad.constant(x) for x in xs_data], mask)
        return _project(np.random.default_rng(seed), ad.concat(outs, axis=1))

    finite_difference_gradcheck(layer.parameters(), loss_fn)


@pytest.mark.parametrize("seed", SEEDS)
def test_biaffine_pair_gradients(seed):
    rng = _rng(seed)
    scorer = BiaffinePairScorer("arc", rng, 3, 2, F64)
    states = rng.normal(size=(4, 3))

    def loss_fn():
        return _project(np.random.default_rng(seed), scorer.scores(ad.constant(states)))

    finite_difference_gradcheck(scorer.parameters(), loss_fn)


@pytest.mark.parametrize("seed", SEEDS)
def test_biaffine_label_gradients(seed):
    rng = _rng(seed)
    scorer = BiaffineLabelScorer("label", rng, 3, 2, 3, F64)
    states = rng.normal(size=(4, 3))
    heads = rng.integers(0, 4, size=3)

    def loss_fn():
        logits = scorer.scores(ad.constant(states), heads)
        return ad.softmax_cross_entropy(logits, np.array([0, 2, 1]))

    finite_difference_gradcheck(scorer.parameters(), loss_fn)


@pytest.mark.parametrize("seed", range(8))
def test_char_word_encoder_gradients(seed):
    rng = _rng(seed)
    enc = CharWordEncoder("char", rng, 5, 2, 2, F64)
    char_ids = rng.integers(0, 5, size=(3, 4))
    char_mask = np.array(
        [[1, 1, 0, 0], [1, 1, 1, 1], [1, 0, 0, 0]], dtype=F64
    )

    def loss_fn():
        return _project(np.random.default_rng(seed), enc.encode_words(char_ids, char_mask))

    finite_difference_gradcheck(enc.parameters(), loss_fn)


@pytest.mark.parametrize("seed", range(8))
def test_dropout_gradients_through_fixed_mask(seed):
    rng = _rng(seed)
    layer = Affine("aff", rng, 3, 2, F64)
    x = ad.constant(rng.normal(size=(4, 3)))
    targets = np.array([0, 1, 0, 1])

    def loss_fn():
        hidden = layer(x)
        dropped = ad.dropout(hidden, 0.5, stream_rng(seed, "mask"), train=True)
        return ad.softmax_cross_entropy(dropped, targets)

    finite_difference_gradcheck(layer.parameters(), loss_fn)


# ----- semantics ------------------------------------------------------------


def test_softmax_symmetry():
    probs = ad.softmax_rows(np.array([[0.0, 0.0]]))
    assert np.allclose(probs, [[0.5, 0.5]])


def test_lstm_zero_length_sequence_gives_empty_output_and_zero_gradients():
    rng = _rng(0)
    cell = LSTMCell("lstm", rng, 2, 3, F64)
    outs, (h, c) = run_lstm(cell, [], None)
    assert outs == []
    assert h.data.shape == (0, 3) and c.data.shape == (0, 3)
    for p in cell.parameters():
        assert np.all(p.grad == 0)
    gouts, gh = run_gru(GRUCell("g", rng, 2, 3, F64), [], None)
    assert gouts == [] and gh.data.shape == (0, 3)


def test_masked_positions_carry_state():
    rng = _rng(1)
    cell = LSTMCell("lstm", rng, 2, 3, F64)
    xs = [ad.constant(rng.normal(size=(1, 2))) for _ in range(3)]
    mask = np.array([[1.0], [0.0], [0.0]])
    outs, (h, _) = run_lstm(cell, xs, mask)
    assert np.allclose(outs[0].data, h.data)
    assert np.allclose(outs[1].data, outs[0].data)


def test_dropout_eval_mode_is_identity_and_consumes_no_randomness():
    rng = stream_rng(0, "d")
    x = ad.constant(np.ones((3, 3)))
    before = rng.bit_generator.state
    out = ad.dropout(x, 0.5, rng, train=False)
    assert out is x
    assert rng.bit_generator.state == before


def test_eval_forward_is_repeatable():
    rng = _rng(2)
    layer = BiLSTM("bilstm", rng, 2, 2, np.float32)
    xs = [ad.constant(rng.normal(size=(2, 2)).astype(np.float32)) for _ in range(3)]
    mask = np.ones((3, 2), dtype=np.float32)
    a = np.stack([t.data for t in layer.run(xs, mask)])
    b = np.stack([t.data for t in layer.run(xs, mask)])
    assert np.array_equal(a, b)


def test_word_dropout_bounds():
    from morphkit.nn.layers import word_dropout

    ids = np.arange(1, 10001)
    assert np.array_equal(word_dropout(ids, 0.0, stream_rng(0, "wd")), ids)
    assert np.all(word_dropout(ids, 1.0, stream_rng(0, "wd")) == 0)
    dropped = word_dropout(ids, 0.2, stream_rng(0, "wd"))
    fraction = np.mean(dropped == 0)
    assert 0.18 <= fraction <= 0.22
    again = word_dropout(ids, 0.2, stream_rng(0, "wd"))
    assert np.array_equal(dropped, again)
