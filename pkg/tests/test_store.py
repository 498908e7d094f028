"""Dataset model, synthetic generator, and on-disk formats.

The generator checksum and the default-config checksum are regression
pins: they freeze the exact bytes the fixed benchmark is built from, so
any accidental change to the generator or the checksum definition shows
up here first.
"""

import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from clickrank.store import (
    BUNDLE_FILES,
    EMBEDDING_MAGIC,
    EMBEDDING_VERSION,
    Dataset,
    EmbeddingMatrix,
    FormatError,
    Item,
    Splits,
    SynthConfig,
    UnencodableQueryError,
    Vocab,
    attribute_tokens,
    dataset_checksum,
    encode_query,
    generate_synthetic,
    ingest,
    load_bundle,
    normalize_rows,
    read_embeddings,
    read_items,
    read_splits,
    read_vocab,
    save_bundle,
    write_embeddings,
    write_items,
    write_splits,
    write_vocab,
)
from tests.conftest import TINY

# sha256 of the default-config dataset, frozen after the defaults were
# settled.  Regenerating must reproduce it bit for bit.
DEFAULT_CHECKSUM = "ccf41bff092e801b332f9b382c6e6661303813d9933b7cfb77bc6d1b4af86dab"
TINY_CHECKSUM = "17038cf32c63b5456a370aabc2d0c0762e9c2a288cc79042b93ed295e761e5db"

_HEADER = struct.Struct("<4sIIQ")


# -- attribute tokens ---------------------------------------------------


def test_attribute_tokens_are_unique_and_sized():
    for n in (1, 10, 88, 89, 200):
        toks = attribute_tokens(n)
        assert len(toks) == n
        assert len(set(toks)) == n


def test_attribute_tokens_pad_with_style_names():
    toks = attribute_tokens(150)
    assert toks[-1].startswith("style") and toks[-1][5:].isdigit()
    # a shorter request is always a prefix of a longer one
    assert attribute_tokens(88) == toks[:88]


# -- normalize_rows ------------------------------------------------------


def test_normalize_rows_unit_norm():
    rows = np.array([[3.0, 4.0], [0.5, 0.0]], dtype=np.float32)
    out = normalize_rows(rows)
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-6)
    np.testing.assert_allclose(out[0], [0.6, 0.8], atol=1e-7)


def test_normalize_rows_rejects_zero_rows():
    rows = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.float32)
    with pytest.raises(ValueError, match="zero-norm vector at row 1"):
        normalize_rows(rows)


@settings(max_examples=50)
@given(
    arrays(
        np.float32,
        st.tuples(st.integers(1, 8), st.integers(1, 8)),
        elements=st.floats(-1e3, 1e3, width=32),
    ).filter(lambda m: bool(np.all(np.linalg.norm(m.astype(np.float64), axis=1) > 1e-3)))
)
def test_normalize_rows_idempotent(rows):
    once = normalize_rows(rows)
    twice = normalize_rows(once)
    np.testing.assert_allclose(once, twice, atol=1e-6)
    np.testing.assert_allclose(np.linalg.norm(once.astype(np.float64), axis=1), 1.0, atol=1e-5)


# -- embedding matrix / vocab / splits / dataset validation --------------


def test_embedding_matrix_rejects_non_finite():
    rows = np.ones((3, 2), dtype=np.float32)
    rows[1, 0] = np.nan
    with pytest.raises(FormatError, match="non-finite value at row 1"):
        EmbeddingMatrix(rows)


def test_embedding_matrix_normalized_flag_checks_norms():
    rows = np.eye(3, dtype=np.float32) * 2.0
    with pytest.raises(ValueError, match="not unit-norm"):
        EmbeddingMatrix(rows, normalized=True)
    EmbeddingMatrix(np.eye(3, dtype=np.float32), normalized=True)


def test_embedding_matrix_is_immutable():
    mat = EmbeddingMatrix(np.eye(2, dtype=np.float32))
    with pytest.raises(ValueError):
        mat.rows[0, 0] = 5.0


def test_vocab_rejects_duplicates_and_count_mismatch():
    mat = EmbeddingMatrix(np.eye(2, dtype=np.float32), normalized=True)
    with pytest.raises(FormatError, match="duplicate token"):
        Vocab(("red", "red"), mat)
    with pytest.raises(FormatError, match="row count mismatch"):
        Vocab(("red",), mat)


def test_vocab_empty():
    v = Vocab.empty(8)
    assert v.tokens == ()
    assert v.matrix.dim == 8


def test_splits_reject_overlap():
    with pytest.raises(ValueError, match="overlap"):
        Splits((1, 2), (2, 3))


def _single_item_dataset(ids=(0,)):
    n = len(ids)
    mat = EmbeddingMatrix(np.eye(max(n, 2), dtype=np.float32)[:n], normalized=True)
    items = tuple(Item(id=i, text=f"item {i}", attributes=frozenset({"a"})) for i in ids)
    return Dataset(items, mat, mat, Vocab.empty(max(n, 2)), Splits((), tuple(range(n))))


def test_dataset_rejects_duplicate_ids():
    mat = EmbeddingMatrix(np.eye(2, dtype=np.float32), normalized=True)
    items = (Item(0, "a", frozenset()), Item(0, "b", frozenset()))
    with pytest.raises(FormatError, match="duplicate id 0"):
        Dataset(items, mat, mat, Vocab.empty(2), Splits((), ()))


def test_dataset_rejects_sparse_or_unordered_ids():
    mat = EmbeddingMatrix(np.eye(2, dtype=np.float32), normalized=True)
    items = (Item(1, "a", frozenset()), Item(2, "b", frozenset()))
    with pytest.raises(ValueError, match="dense"):
        Dataset(items, mat, mat, Vocab.empty(2), Splits((), ()))
    items = (Item(1, "a", frozenset()), Item(0, "b", frozenset()))
    with pytest.raises(ValueError, match="ordered"):
        Dataset(items, mat, mat, Vocab.empty(2), Splits((), ()))


def test_dataset_rejects_row_count_mismatch():
    mat2 = EmbeddingMatrix(np.eye(2, dtype=np.float32), normalized=True)
    items = (Item(0, "a", frozenset()),)
    with pytest.raises(FormatError, match="row count mismatch"):
        Dataset(items, mat2, mat2, Vocab.empty(2), Splits((), ()))


def test_dataset_rejects_out_of_range_split():
    ds = _single_item_dataset()
    with pytest.raises(ValueError, match="split id 5 out of range"):
        Dataset(ds.items, ds.retrieval_images, ds.preference_images, ds.vocab, Splits((), (5,)))


# -- encode_query ---------------------------------------------------------


def _toy_vocab():
    mat = EmbeddingMatrix(np.eye(3, dtype=np.float32), normalized=True)
    return Vocab(("red", "silk", "dress"), mat)


def test_encode_query_single_token_is_its_row():
    v = _toy_vocab()
    np.testing.assert_allclose(encode_query("silk", v), [0.0, 1.0, 0.0], atol=1e-7)


def test_encode_query_mean_of_tokens_normalized():
    v = _toy_vocab()
    got = encode_query("red dress", v)
    expected = np.array([1.0, 0.0, 1.0]) / np.sqrt(2.0)
    np.testing.assert_allclose(got, expected, atol=1e-6)


def test_encode_query_lowercases_and_ignores_unknown():
    v = _toy_vocab()
    np.testing.assert_allclose(
        encode_query("  RED\tvelvet ", v), encode_query("red", v), atol=0
    )


def test_encode_query_rejects_unencodable():
    v = _toy_vocab()
    with pytest.raises(UnencodableQueryError):
        encode_query("velvet hat", v)
    with pytest.raises(UnencodableQueryError):
        encode_query("   ", v)


# -- synthetic generator --------------------------------------------------


def test_generator_is_deterministic(tiny_dataset):
    again = generate_synthetic(TINY)
    assert again.retrieval_images.rows.tobytes() == tiny_dataset.retrieval_images.rows.tobytes()
    assert again.preference_images.rows.tobytes() == tiny_dataset.preference_images.rows.tobytes()
    assert again.items == tiny_dataset.items
    assert again.splits == tiny_dataset.splits


def test_generator_checksums_are_stable(tiny_dataset, default_dataset):
    assert dataset_checksum(tiny_dataset) == TINY_CHECKSUM
    assert dataset_checksum(default_dataset) == DEFAULT_CHECKSUM


def test_generator_item_shape(tiny_dataset):
    ds = tiny_dataset
    assert ds.n_items == TINY.n_items
    assert ds.dim == TINY.dim
    vocab_set = set(ds.vocab.tokens)
    combos = set()
    for item in ds.items:
        assert len(item.attributes) == TINY.attrs_per_item
        assert item.attributes <= vocab_set
        words = item.text.split()
        assert len(words) == TINY.attrs_per_item
        assert set(words) == item.attributes
        combos.add(item.attributes)
    # every item is a distinct attribute combination
    assert len(combos) == ds.n_items


def test_generator_splits(tiny_dataset):
    ds = tiny_dataset
    assert len(ds.splits.test) == max(1, TINY.n_items // 10)
    assert list(ds.splits.test) == sorted(ds.splits.test)
    assert list(ds.splits.train) == sorted(ds.splits.train)
    assert sorted(ds.splits.train + ds.splits.test) == list(range(ds.n_items))


def test_generator_zero_noise_reproduces_ground_truth():
    ds = generate_synthetic(
        SynthConfig(n_items=40, n_attributes=20, attrs_per_item=3, dim=8, noise_sigma=0.0, seed=3)
    )
    # with no noise both spaces equal the encoded item text exactly
    assert ds.retrieval_images.rows is ds.preference_images.rows or np.array_equal(
        ds.retrieval_images.rows, ds.preference_images.rows
    )
    for item in ds.items:
        np.testing.assert_array_equal(
            encode_query(item.text, ds.vocab), ds.retrieval_images.rows[item.id]
        )


def test_generator_noise_perturbs_rows(tiny_dataset):
    ds = tiny_dataset
    ground = np.stack([encode_query(it.text, ds.vocab) for it in ds.items])
    assert not np.array_equal(ds.retrieval_images.rows, ground)
    assert not np.array_equal(ds.retrieval_images.rows, ds.preference_images.rows)
    np.testing.assert_allclose(
        np.linalg.norm(ds.retrieval_images.rows.astype(np.float64), axis=1), 1.0, atol=1e-5
    )


def test_generator_rejects_impossible_combinations():
    with pytest.raises(ValueError, match="not enough attribute combinations"):
        generate_synthetic(SynthConfig(n_items=100, n_attributes=5, attrs_per_item=2))


# -- binary embedding format ----------------------------------------------


def test_embeddings_round_trip(tmp_path, rng):
    rows = rng.standard_normal((7, 5)).astype(np.float32)
    path = tmp_path / "x.emb"
    write_embeddings(path, rows)
    got = read_embeddings(path)
    assert got.tobytes() == rows.tobytes()


def test_embeddings_header_layout(tmp_path):
    rows = np.ones((2, 3), dtype=np.float32)
    path = tmp_path / "x.emb"
    write_embeddings(path, rows)
    raw = path.read_bytes()
    magic, version, dim, count = _HEADER.unpack_from(raw)
    assert (magic, version, dim, count) == (EMBEDDING_MAGIC, EMBEDDING_VERSION, 3, 2)
    assert len(raw) == _HEADER.size + 2 * 3 * 4


def _write_raw(path, magic=EMBEDDING_MAGIC, version=EMBEDDING_VERSION, dim=2, count=2, payload=None):
    if payload is None:
        payload = np.ones((count, max(dim, 1)), dtype="<f4").tobytes()
    path.write_bytes(_HEADER.pack(magic, version, dim, count) + payload)


def test_read_embeddings_error_paths(tmp_path):
    p = tmp_path / "bad.emb"

    p.write_bytes(b"CFR1")
    with pytest.raises(FormatError, match="truncated header"):
        read_embeddings(p)

    _write_raw(p, magic=b"NOPE")
    with pytest.raises(FormatError, match="magic mismatch"):
        read_embeddings(p)

    _write_raw(p, version=9)
    with pytest.raises(FormatError, match="version mismatch"):
        read_embeddings(p)

    _write_raw(p, dim=0, payload=b"")
    with pytest.raises(FormatError, match="dim must be positive"):
        read_embeddings(p)

    _write_raw(p, count=3, payload=np.ones((2, 2), dtype="<f4").tobytes())
    with pytest.raises(FormatError, match=r"row count mismatch \(header says 3, file holds 2\)"):
        read_embeddings(p)

    bad = np.ones((2, 2), dtype="<f4")
    bad[1, 1] = np.inf
    _write_raw(p, payload=bad.tobytes())
    with pytest.raises(FormatError, match="non-finite value at row 1"):
        read_embeddings(p)


# -- vocab / items / splits files ------------------------------------------


def test_vocab_round_trip(tmp_path, tiny_dataset):
    emb, toks = tmp_path / "v.emb", tmp_path / "v.emb.txt"
    write_vocab(emb, toks, tiny_dataset.vocab)
    got = read_vocab(emb, toks)
    assert got.tokens == tiny_dataset.vocab.tokens
    assert got.matrix.rows.tobytes() == tiny_dataset.vocab.matrix.rows.tobytes()


def test_read_vocab_rejects_token_count_mismatch(tmp_path, tiny_dataset):
    emb, toks = tmp_path / "v.emb", tmp_path / "v.emb.txt"
    write_vocab(emb, toks, tiny_dataset.vocab)
    toks.write_text("just-one-token\n")
    with pytest.raises(FormatError, match="row count mismatch"):
        read_vocab(emb, toks)


def test_items_round_trip(tmp_path, tiny_dataset):
    path = tmp_path / "items.jsonl"
    write_items(path, tiny_dataset.items)
    assert read_items(path) == tiny_dataset.items


def test_read_items_sorts_by_id(tmp_path):
    path = tmp_path / "items.jsonl"
    lines = [
        json.dumps({"id": 1, "text": "b", "attributes": ["x"]}),
        json.dumps({"id": 0, "text": "a", "attributes": ["y"]}),
    ]
    path.write_text("\n".join(lines) + "\n")
    items = read_items(path)
    assert [it.id for it in items] == [0, 1]
    assert items[0].attributes == frozenset({"y"})


def test_read_items_error_paths(tmp_path):
    path = tmp_path / "items.jsonl"
    path.write_text('{"id": 0, "text": "a"}\n{"id": 0, "text": "b"}\n')
    with pytest.raises(FormatError, match="duplicate id 0"):
        read_items(path)
    path.write_text("{not json}\n")
    with pytest.raises(FormatError, match="invalid JSON"):
        read_items(path)


def test_splits_round_trip(tmp_path):
    path = tmp_path / "splits.json"
    splits = Splits((0, 2, 4), (1, 3))
    write_splits(path, splits)
    assert read_splits(path) == splits


# -- bundle and ingest ------------------------------------------------------


def test_bundle_round_trip(tmp_path, tiny_dataset):
    out = save_bundle(tiny_dataset, tmp_path / "bundle")
    for name in BUNDLE_FILES.values():
        assert (out / name).exists()
    got = load_bundle(out)
    assert dataset_checksum(got) == dataset_checksum(tiny_dataset)
    assert got.retrieval_images.rows.tobytes() == tiny_dataset.retrieval_images.rows.tobytes()
    assert got.preference_images.rows.tobytes() == tiny_dataset.preference_images.rows.tobytes()
    assert got.items == tiny_dataset.items
    assert got.splits == tiny_dataset.splits


def test_ingest_minimal_defaults(tmp_path, rng):
    emb = tmp_path / "r.emb"
    meta = tmp_path / "items.jsonl"
    rows = rng.standard_normal((4, 3)).astype(np.float32)
    write_embeddings(emb, rows)
    write_items(meta, tuple(Item(i, f"item {i}", frozenset({"a"})) for i in range(4)))

    ds = ingest(emb, meta)
    # rows come back normalized, preference aliases retrieval, all-test split
    np.testing.assert_allclose(np.linalg.norm(ds.retrieval_images.rows, axis=1), 1.0, atol=1e-5)
    assert ds.preference_images is ds.retrieval_images
    assert ds.vocab.tokens == ()
    assert ds.splits.train == ()
    assert ds.splits.test == (0, 1, 2, 3)


def test_ingest_rejects_metadata_mismatch(tmp_path, rng):
    emb = tmp_path / "r.emb"
    meta = tmp_path / "items.jsonl"
    write_embeddings(emb, rng.standard_normal((4, 3)).astype(np.float32))
    write_items(meta, tuple(Item(i, f"item {i}", frozenset()) for i in range(3)))
    with pytest.raises(FormatError, match="row count mismatch"):
        ingest(emb, meta)


def test_ingest_full_bundle_equivalence(tmp_path, tiny_dataset):
    out = save_bundle(tiny_dataset, tmp_path / "bundle")
    ds = ingest(
        out / BUNDLE_FILES["retrieval"],
        out / BUNDLE_FILES["items"],
        preference_path=out / BUNDLE_FILES["preference"],
        vocab_path=out / BUNDLE_FILES["vocab"],
        splits_path=out / BUNDLE_FILES["splits"],
    )
    assert dataset_checksum(ds) == dataset_checksum(tiny_dataset)


# -- checksum sensitivity -----------------------------------------------------


def test_checksum_changes_with_any_component(tiny_dataset):
    base = dataset_checksum(tiny_dataset)

    perturbed = np.array(tiny_dataset.retrieval_images.rows)
    perturbed[0] = np.roll(perturbed[0], 1)
    ds = Dataset(
        tiny_dataset.items,
        EmbeddingMatrix(perturbed, normalized=True),
        tiny_dataset.preference_images,
        tiny_dataset.vocab,
        tiny_dataset.splits,
    )
    assert dataset_checksum(ds) != base

    items = list(tiny_dataset.items)
    items[0] = Item(0, items[0].text + " extra", items[0].attributes, items[0].image_uri)
    ds = Dataset(
        tuple(items),
        tiny_dataset.retrieval_images,
        tiny_dataset.preference_images,
        tiny_dataset.vocab,
        tiny_dataset.splits,
    )
    assert dataset_checksum(ds) != base
