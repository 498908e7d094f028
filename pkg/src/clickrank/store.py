"""Catalog, embedding matrices, file formats and the synthetic dataset.

A :class:`Dataset` bundles the item metadata with three embedding
structures: the matrix the retrieval engine scores against, a separate
matrix the feedback oracle judges with (two different "models" looking at
the same items), and a token vocabulary used to encode text queries.

Synthetic datasets stand in for a real product catalog: each item is a
small set of attribute tokens, its ground-truth vector is the normalized
mean of per-attribute basis vectors, and the two embedding spaces are
independently noised copies of that ground truth.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import seeds

EMBEDDING_MAGIC = b"CFR1"
EMBEDDING_VERSION = 1

# Rows this close to unit norm are left untouched by normalization, so a
# write/read cycle of an already-normalized matrix is bit-exact.
_UNIT_NORM_TOL = 1e-6


class FormatError(ValueError):
    """Raised when an input file violates the on-disk format contract."""


class UnencodableQueryError(ValueError):
    """Raised when a query text contains no recognized vocabulary token."""


@dataclass(frozen=True)
class Item:
    id: int
    text: str
    attributes: frozenset[str]
    image_uri: str | None = None


@dataclass(frozen=True)
class EmbeddingMatrix:
    """A dense n x d float32 matrix, optionally guaranteed row-normalized."""

    rows: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype=np.float32)
        if rows.ndim != 2:
            raise ValueError("rows must be a 2-d array")
        if rows.shape[1] <= 0:
            raise FormatError("dim must be positive")
        if not np.all(np.isfinite(rows)):
            bad = int(np.argwhere(~np.isfinite(rows).all(axis=1))[0, 0])
            raise FormatError(f"non-finite value at row {bad}")
        if self.normalized:
            norms = np.linalg.norm(rows.astype(np.float64), axis=1)
            if not np.allclose(norms, 1.0, atol=1e-5):
                bad = int(np.argmax(np.abs(norms - 1.0)))
                raise ValueError(f"row {bad} is not unit-norm (norm={norms[bad]:.6f})")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])

    @property
    def count(self) -> int:
        return int(self.rows.shape[0])


@dataclass(frozen=True)
class Vocab:
    """Token -> embedding-row lookup for query encoding."""

    tokens: tuple[str, ...]
    matrix: EmbeddingMatrix
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.tokens) != self.matrix.count:
            raise FormatError("row count mismatch between vocab tokens and matrix")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})
        if len(self.index) != len(self.tokens):
            raise FormatError("duplicate token in vocab")

    @classmethod
    def empty(cls, dim: int) -> "Vocab":
        return cls((), EmbeddingMatrix(np.zeros((0, dim), dtype=np.float32)))


@dataclass(frozen=True)
class Splits:
    train: tuple[int, ...]
    test: tuple[int, ...]

    def __post_init__(self):
        if set(self.train) & set(self.test):
            raise ValueError("train and test splits overlap")


@dataclass(frozen=True)
class Dataset:
    items: tuple[Item, ...]
    retrieval_images: EmbeddingMatrix
    preference_images: EmbeddingMatrix
    vocab: Vocab
    splits: Splits

    def __post_init__(self):
        n = len(self.items)
        ids = [it.id for it in self.items]
        if sorted(ids) != list(range(n)):
            dupes = {i for i in ids if ids.count(i) > 1}
            if dupes:
                raise FormatError(f"duplicate id {min(dupes)}")
            raise ValueError("item ids must be dense 0..n-1")
        if ids != list(range(n)):
            raise ValueError("items must be ordered by id")
        if self.retrieval_images.count != n or self.preference_images.count != n:
            raise FormatError("row count mismatch between embeddings and items")
        for split in (self.splits.train, self.splits.test):
            for qid in split:
                if not 0 <= qid < n:
                    raise ValueError(f"split id {qid} out of range")

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def dim(self) -> int:
        return self.retrieval_images.dim


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic benchmark generator.

    ``noise_sigma`` is the per-coordinate std-dev of the Gaussian
    perturbation applied independently to the retrieval and preference
    spaces.  The stock values leave stage-1 retrieval imperfect (median
    rank around 8) with roughly half the targets inside the feedback
    pool, which is the regime where click feedback has room to help.
    """

    n_items: int = 2000
    n_attributes: int = 140
    attrs_per_item: int = 5
    dim: int = 64
    noise_sigma: float = 0.35
    seed: int = 7

    def __post_init__(self):
        if self.n_items <= 0 or self.n_attributes <= 0 or self.attrs_per_item <= 0:
            raise ValueError("counts must be positive")
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.attrs_per_item > self.n_attributes:
            raise ValueError("attrs_per_item must be <= n_attributes")


# Attribute tokens for synthetic items, in priority order.  Drawn from the
# fashion-catalog register so generated texts read like product titles.
_ATTRIBUTE_WORDS = [
    "black", "white", "red", "blue", "navy", "green", "olive", "beige",
    "grey", "pink", "yellow", "brown", "purple", "orange", "teal", "ivory",
    "cotton", "denim", "wool", "silk", "leather", "linen", "suede", "velvet",
    "satin", "chiffon", "cashmere", "tweed", "jersey", "corduroy",
    "striped", "floral", "plaid", "dotted", "checked", "paisley", "solid",
    "printed", "embroidered", "quilted",
    "sleeveless", "cropped", "fitted", "oversized", "pleated", "belted",
    "ruffled", "hooded", "collared", "buttoned", "zippered", "draped",
    "blouse", "dress", "skirt", "jacket", "pants", "coat", "sweater",
    "shirt", "cardigan", "blazer", "jeans", "top", "gown", "vest",
    "parka", "tunic", "jumpsuit", "shorts", "poncho", "kimono",
]


def attribute_tokens(n: int) -> list[str]:
    """First n attribute tokens, padding with style### names past the list."""
    if n <= len(_ATTRIBUTE_WORDS):
        return _ATTRIBUTE_WORDS[:n]
    extra = [f"style{i:03d}" for i in range(n - len(_ATTRIBUTE_WORDS))]
    return _ATTRIBUTE_WORDS + extra


def normalize_rows(rows: np.ndarray) -> np.ndarray:
    """L2-normalize rows to float32, leaving near-unit rows bit-identical.

    Zero rows are rejected; rows already within _UNIT_NORM_TOL of unit norm
    pass through untouched so normalization is idempotent at the byte level.
    """
    rows32 = np.ascontiguousarray(rows, dtype=np.float32)
    norms = np.linalg.norm(rows32.astype(np.float64), axis=1)
    if np.any(norms == 0.0):
        bad = int(np.argmax(norms == 0.0))
        raise ValueError(f"zero-norm vector at row {bad}")
    needs = np.abs(norms - 1.0) > _UNIT_NORM_TOL
    if not np.any(needs):
        return rows32
    out = rows32.astype(np.float64)
    out[needs] /= norms[needs, None]
    return out.astype(np.float32)


def _mean_normalized(vectors: np.ndarray) -> np.ndarray:
    """Normalized mean of rows, float64 internally, float32 out.

    Shared by the generator's ground-truth construction and encode_query so
    a noiseless item embedding and the encoding of its text are bit-equal.
    """
    mean = vectors.astype(np.float64).mean(axis=0)
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        raise ValueError("zero-norm vector")
    return (mean / norm).astype(np.float32)


def encode_query(text: str, vocab: Vocab) -> np.ndarray:
    """Encode a text query as the normalized mean of its token vectors.

    Tokenization is whitespace splitting plus lowercasing; unknown tokens
    are ignored.  Raises UnencodableQueryError when nothing is recognized.
    """
    rows = [vocab.index[token] for token in text.lower().split() if token in vocab.index]
    if not rows:
        raise UnencodableQueryError(f"unencodable query: {text!r}")
    return _mean_normalized(vocab.matrix.rows[rows])


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Build a reproducible synthetic dataset from a :class:`SynthConfig`.

    Pure function of the config: the same config yields a byte-identical
    dataset.  Attribute sets are distinct across items so no two items share
    a ground-truth vector.
    """
    if math.comb(cfg.n_attributes, cfg.attrs_per_item) < cfg.n_items:
        raise ValueError(
            "not enough attribute combinations for distinct items; "
            "raise n_attributes or lower n_items"
        )
    tokens = attribute_tokens(cfg.n_attributes)

    vocab_rng = seeds.stream(cfg.seed, "synth-vocab")
    basis = normalize_rows(vocab_rng.standard_normal((cfg.n_attributes, cfg.dim)))
    vocab = Vocab(tuple(tokens), EmbeddingMatrix(basis, normalized=True))

    attr_rng = seeds.stream(cfg.seed, "synth-attrs")
    seen: set[frozenset[int]] = set()
    items = []
    ground = np.empty((cfg.n_items, cfg.dim), dtype=np.float32)
    for item_id in range(cfg.n_items):
        for _ in range(1000):
            picked = attr_rng.choice(cfg.n_attributes, cfg.attrs_per_item, replace=False)
            key = frozenset(int(a) for a in picked)
            if key not in seen:
                break
        else:
            raise RuntimeError("failed to sample a distinct attribute set")
        seen.add(key)
        attr_tokens = [tokens[int(a)] for a in picked]
        items.append(
            Item(
                id=item_id,
                text=" ".join(attr_tokens),
                attributes=frozenset(attr_tokens),
                image_uri=None,
            )
        )
        ground[item_id] = _mean_normalized(basis[picked])

    def noised(stream_name: str) -> EmbeddingMatrix:
        if cfg.noise_sigma == 0.0:
            return EmbeddingMatrix(ground, normalized=True)
        rng = seeds.stream(cfg.seed, stream_name)
        noise = rng.standard_normal((cfg.n_items, cfg.dim))
        rows = ground.astype(np.float64) + cfg.noise_sigma * noise
        return EmbeddingMatrix(normalize_rows(rows), normalized=True)

    retrieval = noised("synth-noise-retrieval")
    preference = noised("synth-noise-preference")

    n_test = max(1, cfg.n_items // 10)
    split_rng = seeds.stream(cfg.seed, "synth-splits")
    test_ids = sorted(int(i) for i in split_rng.choice(cfg.n_items, n_test, replace=False))
    train_ids = sorted(set(range(cfg.n_items)) - set(test_ids))
    splits = Splits(tuple(train_ids), tuple(test_ids))

    return Dataset(tuple(items), retrieval, preference, vocab, splits)


# ---------------------------------------------------------------------------
# On-disk formats
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sIIQ")  # magic, version, dim, count


def write_embeddings(path: str | Path, rows: np.ndarray) -> None:
    """Write a matrix in the binary embedding format (little-endian f32)."""
    rows32 = np.ascontiguousarray(rows, dtype=np.float32)
    n, d = rows32.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(EMBEDDING_MAGIC, EMBEDDING_VERSION, d, n))
        fh.write(rows32.astype("<f4", copy=False).tobytes())


def read_embeddings(path: str | Path) -> np.ndarray:
    """Read a binary embedding file, validating header and payload."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, dim, count = _HEADER.unpack_from(raw)
    if magic != EMBEDDING_MAGIC:
        raise FormatError(f"{path}: magic mismatch (got {magic!r})")
    if version != EMBEDDING_VERSION:
        raise FormatError(f"{path}: version mismatch (got {version})")
    if dim <= 0:
        raise FormatError(f"{path}: dim must be positive (got {dim})")
    payload = raw[_HEADER.size :]
    expected = count * dim * 4
    if len(payload) != expected:
        rows_present = len(payload) // (dim * 4)
        raise FormatError(
            f"{path}: row count mismatch (header says {count}, file holds {rows_present})"
        )
    rows = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    rows = np.ascontiguousarray(rows, dtype=np.float32)
    if not np.all(np.isfinite(rows)):
        bad = int(np.argwhere(~np.isfinite(rows).all(axis=1))[0, 0])
        raise FormatError(f"{path}: non-finite value at row {bad}")
    return rows


def write_vocab(emb_path: str | Path, tokens_path: str | Path, vocab: Vocab) -> None:
    write_embeddings(emb_path, vocab.matrix.rows)
    Path(tokens_path).write_text("\n".join(vocab.tokens) + "\n", encoding="utf-8")


def read_vocab(emb_path: str | Path, tokens_path: str | Path) -> Vocab:
    rows = read_embeddings(emb_path)
    text = Path(tokens_path).read_text(encoding="utf-8")
    tokens = [line for line in text.splitlines() if line]
    if len(tokens) != rows.shape[0]:
        raise FormatError(
            f"{tokens_path}: row count mismatch "
            f"({len(tokens)} tokens vs {rows.shape[0]} rows)"
        )
    return Vocab(tuple(tokens), EmbeddingMatrix(normalize_rows(rows), normalized=True))


def write_items(path: str | Path, items: tuple[Item, ...]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for it in items:
            fh.write(
                json.dumps(
                    {
                        "id": it.id,
                        "text": it.text,
                        "attributes": sorted(it.attributes),
                        "image_uri": it.image_uri,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_items(path: str | Path) -> tuple[Item, ...]:
    items = []
    seen_ids: set[int] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            item_id = int(obj["id"])
            if item_id in seen_ids:
                raise FormatError(f"{path}:{lineno}: duplicate id {item_id}")
            seen_ids.add(item_id)
            items.append(
                Item(
                    id=item_id,
                    text=str(obj["text"]),
                    attributes=frozenset(obj.get("attributes") or ()),
                    image_uri=obj.get("image_uri"),
                )
            )
    items.sort(key=lambda it: it.id)
    return tuple(items)


def write_splits(path: str | Path, splits: Splits) -> None:
    Path(path).write_text(
        json.dumps({"train": list(splits.train), "test": list(splits.test)}) + "\n",
        encoding="utf-8",
    )


def read_splits(path: str | Path) -> Splits:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return Splits(tuple(int(i) for i in obj["train"]), tuple(int(i) for i in obj["test"]))


def ingest(
    embeddings_path: str | Path,
    metadata_path: str | Path,
    *,
    preference_path: str | Path | None = None,
    vocab_path: str | Path | None = None,
    vocab_tokens_path: str | Path | None = None,
    splits_path: str | Path | None = None,
) -> Dataset:
    """Load a dataset from disk, normalizing embedding rows on the way in.

    Only the retrieval embeddings and item metadata are mandatory.  Without
    a preference file the oracle sees the retrieval space; without a splits
    file every item is a test query; without a vocab only precomputed query
    vectors can be used.
    """
    retrieval_rows = read_embeddings(embeddings_path)
    items = read_items(metadata_path)
    if len(items) != retrieval_rows.shape[0]:
        raise FormatError(
            f"row count mismatch: {retrieval_rows.shape[0]} embedding rows "
            f"vs {len(items)} metadata lines"
        )
    retrieval = EmbeddingMatrix(normalize_rows(retrieval_rows), normalized=True)

    if preference_path is not None:
        pref_rows = read_embeddings(preference_path)
        if pref_rows.shape != retrieval.rows.shape:
            raise FormatError("row count mismatch between retrieval and preference")
        preference = EmbeddingMatrix(normalize_rows(pref_rows), normalized=True)
    else:
        preference = retrieval

    if vocab_path is not None:
        if vocab_tokens_path is None:
            vocab_tokens_path = str(vocab_path) + ".txt"
        vocab = read_vocab(vocab_path, vocab_tokens_path)
    else:
        vocab = Vocab.empty(retrieval.dim)

    if splits_path is not None:
        splits = read_splits(splits_path)
    else:
        splits = Splits((), tuple(range(len(items))))

    return Dataset(items, retrieval, preference, vocab, splits)


BUNDLE_FILES = {
    "retrieval": "retrieval.emb",
    "preference": "preference.emb",
    "vocab": "vocab.emb",
    "vocab_tokens": "vocab.emb.txt",
    "items": "items.jsonl",
    "splits": "splits.json",
}


def save_bundle(dataset: Dataset, directory: str | Path) -> Path:
    """Write a dataset as a directory bundle; returns the directory path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_embeddings(directory / BUNDLE_FILES["retrieval"], dataset.retrieval_images.rows)
    write_embeddings(directory / BUNDLE_FILES["preference"], dataset.preference_images.rows)
    write_vocab(
        directory / BUNDLE_FILES["vocab"],
        directory / BUNDLE_FILES["vocab_tokens"],
        dataset.vocab,
    )
    write_items(directory / BUNDLE_FILES["items"], dataset.items)
    write_splits(directory / BUNDLE_FILES["splits"], dataset.splits)
    return directory


def load_bundle(directory: str | Path) -> Dataset:
    directory = Path(directory)
    return ingest(
        directory / BUNDLE_FILES["retrieval"],
        directory / BUNDLE_FILES["items"],
        preference_path=directory / BUNDLE_FILES["preference"],
        vocab_path=directory / BUNDLE_FILES["vocab"],
        vocab_tokens_path=directory / BUNDLE_FILES["vocab_tokens"],
        splits_path=directory / BUNDLE_FILES["splits"],
    )


def dataset_checksum(dataset: Dataset) -> str:
    """Stable sha256 over every array and metadata field of a dataset."""
    h = hashlib.sha256()
    h.update(dataset.retrieval_images.rows.astype("<f4", copy=False).tobytes())
    h.update(dataset.preference_images.rows.astype("<f4", copy=False).tobytes())
    h.update(dataset.vocab.matrix.rows.astype("<f4", copy=False).tobytes())
    h.update("\x00".join(dataset.vocab.tokens).encode("utf-8"))
    for it in dataset.items:
        h.update(
            json.dumps(
                [it.id, it.text, sorted(it.attributes), it.image_uri], sort_keys=True
            ).encode("utf-8")
        )
    h.update(json.dumps([list(dataset.splits.train), list(dataset.splits.test)]).encode())
    return h.hexdigest()
