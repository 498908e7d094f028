"""Linear embedding adapters and the encoder stack.

An :class:`Adapter` is a trainable d x d map applied on top of frozen base
embeddings; the adapted embedding of a vector v is normalize(W @ v).  The
stack holds one adapter for text and either one shared image adapter or,
in the separate-encoder variant, distinct adapters for cross-modal
(text-to-image) and unimodal (image-to-image) similarity.

Adapters start at identity, so an untrained stack reproduces plain cosine
scoring over the base embeddings exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .store import Dataset, FormatError, normalize_rows

ADAPTER_MAGIC = b"CFA1"
ADAPTER_VERSION = 1


class Adapter:
    """A d x d linear map over frozen base embeddings.

    Weights are kept in float64 (training precision); encoded outputs are
    rounded to float32 like everything else the engine scores with.
    """

    def __init__(self, weight: np.ndarray):
        weight = np.array(weight, dtype=np.float64)
        if weight.ndim != 2 or weight.shape[0] != weight.shape[1]:
            raise ValueError("adapter weight must be a square matrix")
        if not np.all(np.isfinite(weight)):
            raise ValueError("adapter weight contains non-finite values")
        self.weight = weight

    @classmethod
    def identity(cls, dim: int) -> "Adapter":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return int(self.weight.shape[0])

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.weight, np.eye(self.dim)))

    def copy(self) -> "Adapter":
        return Adapter(self.weight.copy())

    def encode_rows(self, rows: np.ndarray, *, already_normalized: bool = False) -> np.ndarray:
        """Apply the adapter to rows and re-normalize, float32 out.

        The identity fast path returns normalized inputs untouched, keeping
        the untrained stack bit-identical to raw cosine scoring.
        """
        rows32 = np.ascontiguousarray(rows, dtype=np.float32)
        if self.is_identity:
            return rows32 if already_normalized else normalize_rows(rows32)
        projected = rows32.astype(np.float64) @ self.weight.T
        return normalize_rows(projected)

    def encode_vec(self, vec: np.ndarray, *, already_normalized: bool = False) -> np.ndarray:
        return self.encode_rows(
            np.asarray(vec, dtype=np.float32)[None, :],
            already_normalized=already_normalized,
        )[0]


class EncoderStack:
    """Text adapter plus one or two image adapters.

    With ``sep_enc`` off the cross-modal and unimodal roles alias a single
    adapter object, so a gradient step through either role moves both.
    """

    def __init__(
        self,
        text_adapter: Adapter,
        image_crossmodal: Adapter,
        image_unimodal: Adapter | None = None,
    ):
        self.text_adapter = text_adapter
        self.image_crossmodal = image_crossmodal
        self.sep_enc = image_unimodal is not None
        self.image_unimodal = image_unimodal if self.sep_enc else image_crossmodal
        dims = {text_adapter.dim, image_crossmodal.dim, self.image_unimodal.dim}
        if len(dims) != 1:
            raise ValueError("adapter dimensions disagree")

    @classmethod
    def identity(cls, dim: int, sep_enc: bool = False) -> "EncoderStack":
        return cls(
            Adapter.identity(dim),
            Adapter.identity(dim),
            Adapter.identity(dim) if sep_enc else None,
        )

    @property
    def dim(self) -> int:
        return self.text_adapter.dim

    def copy(self) -> "EncoderStack":
        return EncoderStack(
            self.text_adapter.copy(),
            self.image_crossmodal.copy(),
            self.image_unimodal.copy() if self.sep_enc else None,
        )

    def trainable(self) -> dict[str, Adapter]:
        """Named trainable adapters; aliased roles appear once."""
        if self.sep_enc:
            return {
                "text": self.text_adapter,
                "image_crossmodal": self.image_crossmodal,
                "image_unimodal": self.image_unimodal,
            }
        return {"text": self.text_adapter, "image": self.image_crossmodal}

    def encode_text_vec(self, vec: np.ndarray) -> np.ndarray:
        return self.text_adapter.encode_vec(vec)


@dataclass(frozen=True)
class EncodedIndex:
    """Adapted item matrices the ranker scores against.

    ``crossmodal`` rows live in the text-query space; ``unimodal`` rows are
    what feedback and diversity similarities are computed in.  The two are
    the same array unless the stack uses separate image encoders.
    """

    crossmodal: np.ndarray
    unimodal: np.ndarray

    @property
    def n_items(self) -> int:
        return int(self.crossmodal.shape[0])

    @property
    def dim(self) -> int:
        return int(self.crossmodal.shape[1])


def encode_dataset(dataset: Dataset, stack: EncoderStack | None = None) -> EncodedIndex:
    """Encode the retrieval matrix through a stack (identity when None)."""
    base = dataset.retrieval_images
    if stack is None:
        return EncodedIndex(base.rows, base.rows)
    cross = stack.image_crossmodal.encode_rows(base.rows, already_normalized=base.normalized)
    if stack.image_unimodal is stack.image_crossmodal:
        uni = cross
    else:
        uni = stack.image_unimodal.encode_rows(base.rows, already_normalized=base.normalized)
    return EncodedIndex(cross, uni)


def save_checkpoint(path: str | Path, stack: EncoderStack) -> None:
    """Write adapter weights: magic, version, dim, sep_enc flag, matrices.

    Matrix order is text, cross-modal image, then the unimodal image
    adapter only when the stack uses separate encoders.
    """
    adapters = [stack.text_adapter, stack.image_crossmodal]
    if stack.sep_enc:
        adapters.append(stack.image_unimodal)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIIB", ADAPTER_MAGIC, ADAPTER_VERSION, stack.dim, int(stack.sep_enc)))
        for adapter in adapters:
            fh.write(adapter.weight.astype("<f4").tobytes())


def load_checkpoint(path: str | Path) -> EncoderStack:
    raw = Path(path).read_bytes()
    header = struct.Struct("<4sIIB")
    if len(raw) < header.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, dim, sep_enc = header.unpack_from(raw)
    if magic != ADAPTER_MAGIC:
        raise FormatError(f"{path}: magic mismatch (got {magic!r})")
    if version != ADAPTER_VERSION:
        raise FormatError(f"{path}: version mismatch (got {version})")
    if dim <= 0:
        raise FormatError(f"{path}: dim must be positive (got {dim})")
    n_mats = 3 if sep_enc else 2
    expected = header.size + n_mats * dim * dim * 4
    if len(raw) != expected:
        raise FormatError(f"{path}: size mismatch (expected {expected} bytes, got {len(raw)})")
    mats = []
    offset = header.size
    for _ in range(n_mats):
        flat = np.frombuffer(raw, dtype="<f4", count=dim * dim, offset=offset)
        mats.append(Adapter(flat.reshape(dim, dim).astype(np.float64)))
        offset += dim * dim * 4
    if sep_enc:
        return EncoderStack(mats[0], mats[1], mats[2])
    return EncoderStack(mats[0], mats[1])


__all__ = [
    "Adapter",
    "EncoderStack",
    "EncodedIndex",
    "encode_dataset",
    "save_checkpoint",
    "load_checkpoint",
    "ADAPTER_MAGIC",
    "ADAPTER_VERSION",
]
