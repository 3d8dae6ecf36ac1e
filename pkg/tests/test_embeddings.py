import numpy as np
import pytest

from morphkit.conllu import parse_conllu
from morphkit.embeddings import (
    ContextualVectors,
    SubwordAlignment,
    aggregate_subwords,
    average_last_layers,
    load_word_embeddings,
    read_contextual_vectors,
    write_contextual_vectors,
)
from morphkit.errors import DataError


def _write(tmp_path, text):
    path = tmp_path / "vectors.txt"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_load_basic_table(tmp_path):
    path = _write(tmp_path, "2 3\nkočka 1 2 3\npes 4 5 6\n")
    table = load_word_embeddings(path)
    assert table.dim == 3 and len(table) == 2
    assert np.allclose(table.lookup("pes"), [4, 5, 6])


def test_load_dimension_mismatch_names_line(tmp_path):
    path = _write(tmp_path, "2 3\nkočka 1 2 3\npes 4 5\n")
    with pytest.raises(DataError, match="line 3"):
        load_word_embeddings(path)


def test_load_duplicate_word(tmp_path):
    path = _write(tmp_path, "2 2\na 1 2\na 3 4\n")
    with pytest.raises(DataError, match="duplicate"):
        load_word_embeddings(path)


def test_load_count_mismatch(tmp_path):
    path = _write(tmp_path, "3 2\na 1 2\nb 3 4\n")
    with pytest.raises(DataError, match="header claims 3"):
        load_word_embeddings(path)


def test_oov_lookup_is_stable_zeros(tmp_path):
    path = _write(tmp_path, "1 2\na 1 2\n")
    table = load_word_embeddings(path)
    first = table.lookup("unseen")
    second = table.lookup("unseen")
    assert np.array_equal(first, np.zeros(2, dtype=np.float32))
    assert np.array_equal(first, second)


# ----- layer averaging ------------------------------------------------------


def test_average_of_identical_layers():
    layer = np.arange(6, dtype=np.float64).reshape(2, 3)
    assert np.array_equal(average_last_layers([layer] * 4, 4), layer)


def test_average_midpoint():
    layers = [np.array([[0.0]]), np.array([[2.0]])]
    assert average_last_layers(layers, 2) == np.array([[1.0]])


def test_average_matches_summation_oracle():
    rng = np.random.default_rng(7)
    layers = [rng.normal(size=(5, 4)) for _ in range(6)]
    got = average_last_layers(layers, 4)
    oracle = sum(layers[2:]) / 4.0
    assert np.max(np.abs(got - oracle)) < 1e-12


def test_average_requires_enough_layers():
    with pytest.raises(DataError):
        average_last_layers([np.zeros((2, 2))], 4)
    with pytest.raises(DataError, match="shape"):
        average_last_layers([np.zeros((2, 2)), np.zeros((2, 3))], 2)


# ----- subword aggregation ----------------------------------------------------


def test_single_subword_identity():
    mat = np.array([[1.0, 2.0]])
    out = aggregate_subwords(mat, SubwordAlignment(((0, 1),)))
    assert np.array_equal(out, mat)


def test_two_point_means():
    mat = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = aggregate_subwords(mat, SubwordAlignment(((0, 2),)))
    assert np.array_equal(out, np.array([[2.0, 3.0]]))


def test_aggregation_matches_per_token_oracle():
    rng = np.random.default_rng(11)
    mat = rng.normal(size=(10, 3))
    ranges = ((0, 2), (2, 3), (3, 7), (7, 10))
    out = aggregate_subwords(mat, SubwordAlignment(ranges))
    for i, (s, e) in enumerate(ranges):
        assert np.allclose(out[i], mat[s:e].mean(axis=0))


def test_alignment_coverage_errors():
    mat = np.zeros((4, 2))
    with pytest.raises(DataError):
        aggregate_subwords(mat, SubwordAlignment(((0, 2),)))  # uncovered tail
    with pytest.raises(DataError):
        aggregate_subwords(mat, SubwordAlignment(((0, 2), (3, 4))))  # gap
    with pytest.raises(DataError):
        aggregate_subwords(mat, SubwordAlignment(((0, 2), (2, 2), (2, 4))))  # empty


def test_aggregation_is_linear():
    rng = np.random.default_rng(3)
    mat = rng.normal(size=(5, 4))
    alignment = SubwordAlignment(((0, 3), (3, 5)))
    assert np.allclose(
        aggregate_subwords(3.5 * mat, alignment), 3.5 * aggregate_subwords(mat, alignment)
    )


# ----- contextual vector container ---------------------------------------------

DOC = parse_conllu(
    "1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n2\tb\t_\t_\t_\t_\t1\tdep\t_\t_\n\n"
    "1\tc\t_\t_\t_\t_\t0\troot\t_\t_\n\n"
)


def test_cvec_roundtrip_bit_identical(tmp_path):
    rng = np.random.default_rng(5)
    vectors = ContextualVectors(
        dim=4,
        per_sentence=[
            rng.normal(size=(2, 4)).astype(np.float32),
            rng.normal(size=(1, 4)).astype(np.float32),
        ],
    )
    path = str(tmp_path / "x.cvec")
    write_contextual_vectors(path, vectors)
    loaded = read_contextual_vectors(path, DOC)
    assert loaded.dim == 4
    for got, expected in zip(loaded.per_sentence, vectors.per_sentence):
        assert got.tobytes() == expected.tobytes()


def test_cvec_token_count_mismatch_names_sentence(tmp_path):
    vectors = ContextualVectors(
        dim=2,
        per_sentence=[np.zeros((2, 2), np.float32), np.zeros((3, 2), np.float32)],
    )
    path = str(tmp_path / "bad.cvec")
    write_contextual_vectors(path, vectors)
    with pytest.raises(DataError, match="sentence 1"):
        read_contextual_vectors(path, DOC)


def test_cvec_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE\x01\x02\x00\x00\x00")
    with pytest.raises(DataError, match="magic"):
        read_contextual_vectors(str(path), DOC)


def test_cvec_bad_version(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"CVEC\x07\x02\x00\x00\x00")
    with pytest.raises(DataError, match="version"):
        read_contextual_vectors(str(path), DOC)


def test_cvec_trailing_bytes(tmp_path):
    vectors = ContextualVectors(
        dim=1,
        per_sentence=[np.zeros((2, 1), np.float32), np.zeros((1, 1), np.float32)],
    )
    path = str(tmp_path / "x.cvec")
    write_contextual_vectors(path, vectors)
    with open(path, "ab") as f:
        f.write(b"junk")
    with pytest.raises(DataError, match="trailing"):
        read_contextual_vectors(path, DOC)
