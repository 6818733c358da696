"""Fixed-dimension vectors for glosses and targets-in-context, plus cosine.

Vectors come from two places: a binary embedding file produced by an external
encoder, or the built-in deterministic baseline embedder.  The baseline is a
seeded hashed bag-of-words; it exists so the whole pipeline runs and tests
reproducibly with no model runtime.  Storage is 32-bit floats, all dot
products and norms accumulate in 64-bit.

Store key conventions:
    g:<gloss_id>                 gloss definition sentence
    c:<gloss_id>:<example_idx>   target word inside gloss example #idx
    q:<instance_id>              target word inside an evaluation context
"""

from __future__ import annotations

import logging
import math
import re
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .inventory import ExampleSentence, Inventory

log = logging.getLogger("sense_align.embedding")

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF

MIN_DIM = 8


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """Immutable 1-D float32 vector; finite by construction."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 1 or arr.size == 0:
            raise DataError("embedding vector must be 1-D and non-empty")
        if not np.all(np.isfinite(arr)):
            raise DataError("embedding vector contains a non-finite value")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.size)

    @property
    def is_zero(self) -> bool:
        return not self.values.any()

    def normalize(self) -> "EmbeddingVector":
        """Unit L2 norm; the zero vector is left as zero (callers check is_zero)."""
        v = self.values.astype(np.float64)
        norm = math.sqrt(math.fsum(x * x for x in v))
        if norm == 0.0:
            log.warning("normalize() called on the zero vector")
            return self
        return EmbeddingVector((v / norm).astype(np.float32))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return self.values.tobytes() == other.values.tobytes()

    def __repr__(self) -> str:
        return f"EmbeddingVector(dim={self.dim})"


def cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """dot/(|u||v|) with 64-bit exact-rounded sums, clamped to [-1, 1].

    Summation always runs index 0..dim-1 (math.fsum), so the value is
    reproducible across platforms and symmetric in its arguments.
    """
    if u.dim != v.dim:
        raise DataError(f"cosine dim mismatch: {u.dim} vs {v.dim}")
    a = u.values.astype(np.float64)
    b = v.values.astype(np.float64)
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(x * x for x in b))
    if na == 0.0 or nb == 0.0:
        raise DataError("cosine undefined for the zero vector")
    dot = math.fsum(x * y for x, y in zip(a, b))
    return min(1.0, max(-1.0, dot / (na * nb)))


def _tokens(text: str) -> list[tuple[str, int, int]]:
    """(lowercased token, start, end) over the original text, in order."""
    return [(m.group(0).lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _U64
    return h


def _token_hash(token: str, seed: int) -> int:
    return _fnv1a64((seed & _U64).to_bytes(8, "little") + token.encode("utf-8"))


def _accumulate(tokens: list[str], dim: int, seed: int) -> np.ndarray:
    """Signed bag-of-words counts; exact in float64, so order-insensitive."""
    acc = np.zeros(dim, dtype=np.float64)
    for tok in tokens:
        h = _token_hash(tok, seed)
        bucket = h % dim
        sign = 1.0 if ((h // dim) & 1) == 0 else -1.0
        acc[bucket] += sign
    return acc


def _unit(acc: np.ndarray) -> np.ndarray:
    norm = math.sqrt(math.fsum(x * x for x in acc))
    return acc if norm == 0.0 else acc / norm


def baseline_embed_sentence(text: str, dim: int, seed: int) -> EmbeddingVector:
    """Deterministic hashed bag-of-words sentence vector, unit L2 norm.

    Tokens are maximal alphanumeric runs, lowercased.  Each token hashes
    (FNV-1a 64 over seed little-endian bytes then UTF-8 token) to a bucket
    ``h mod dim`` with sign from the next bit ``(h // dim) & 1``.  A text with
    no tokens yields the zero vector, flagged via is_zero and a warning.
    """
    if dim < MIN_DIM:
        raise DataError(f"embedding dim must be >= {MIN_DIM}, got {dim}")
    acc = _accumulate([t for t, _s, _e in _tokens(text)], dim, seed)
    if not acc.any():
        log.warning("text %r has no tokens; emitting the zero vector", text[:40])
        return EmbeddingVector(acc.astype(np.float32))
    return EmbeddingVector(_unit(acc).astype(np.float32))


def resolve_target_span(sentence: ExampleSentence, lemma: str) -> tuple[int, int]:
    """Explicit span if present, else first case-insensitive lemma occurrence."""
    if sentence.target_span is not None:
        return sentence.target_span
    m = re.search(re.escape(lemma), sentence.text, re.IGNORECASE)
    if m is None:
        raise DataError(
            f"lemma {lemma!r} not found in {sentence.text!r} and no target span given"
        )
    return (m.start(), m.end())


def baseline_embed_target(
    sentence: ExampleSentence, lemma: str, dim: int, seed: int
) -> EmbeddingVector:
    """Target-in-context vector: span token mean averaged 50/50 with the
    sentence vector, then normalized.  The target's meaning depends on both
    the word itself and its surroundings, hence the even split.
    """
    if dim < MIN_DIM:
        raise DataError(f"embedding dim must be >= {MIN_DIM}, got {dim}")
    start, end = resolve_target_span(sentence, lemma)
    toks = _tokens(sentence.text)
    span_toks = [t for t, s, e in toks if s < end and e > start]
    if not span_toks:
        raise DataError(
            f"target span ({start}, {end}) covers no token in {sentence.text!r}"
        )
    # Each single-token vector is an exact signed one-hot in float64.
    target = np.zeros(dim, dtype=np.float64)
    for tok in span_toks:
        target += _unit(_accumulate([tok], dim, seed))
    target /= len(span_toks)
    context = _unit(_accumulate([t for t, _s, _e in toks], dim, seed))
    combined = 0.5 * target + 0.5 * context
    if not combined.any():
        raise DataError(
            f"degenerate target embedding (all buckets cancel) in {sentence.text!r}"
        )
    return EmbeddingVector(_unit(combined).astype(np.float32))


@dataclass(frozen=True)
class EmbeddingStore:
    """Immutable key -> vector map with one shared dimension."""

    dim: int
    records: dict[str, EmbeddingVector]

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise DataError(f"store dim must be positive, got {self.dim}")
        for key, vec in self.records.items():
            if vec.dim != self.dim:
                raise DataError(
                    f"vector for key {key!r} has dim {vec.dim}, store dim is {self.dim}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, key: str) -> bool:
        return key in self.records

    def get(self, key: str) -> EmbeddingVector:
        try:
            return self.records[key]
        except KeyError:
            raise DataError(f"no embedding stored for key {key!r}") from None


_HEADER = struct.Struct("<4sBIQ")
_KEYLEN = struct.Struct("<H")
_MAGIC = b"SEMB"
_VERSION = 1


def write_store(store: EmbeddingStore, path: str) -> None:
    """Binary little-endian format; records sorted by key for a canonical file."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, store.dim, len(store.records)))
        for key in sorted(store.records):
            kb = key.encode("utf-8")
            if len(kb) > 0xFFFF:
                raise DataError(f"key too long to serialize ({len(kb)} bytes)")
            fh.write(_KEYLEN.pack(len(kb)))
            fh.write(kb)
            fh.write(store.records[key].values.astype("<f4").tobytes())


def load_store(path: str) -> EmbeddingStore:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read embedding file {path}: {exc}") from None
    if len(blob) < _HEADER.size:
        raise DataError(f"{path}: truncated header")
    magic, version, dim, count = _HEADER.unpack_from(blob, 0)
    if magic != _MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, not an embedding file")
    if version != _VERSION:
        raise DataError(f"{path}: unsupported format version {version}")
    if dim <= 0:
        raise DataError(f"{path}: invalid dim {dim}")
    offset = _HEADER.size
    vec_bytes = 4 * dim
    records: dict[str, EmbeddingVector] = {}
    for i in range(count):
        if offset + _KEYLEN.size > len(blob):
            raise DataError(f"{path}: truncated at record {i} (key length)")
        (key_len,) = _KEYLEN.unpack_from(blob, offset)
        offset += _KEYLEN.size
        if offset + key_len + vec_bytes > len(blob):
            raise DataError(f"{path}: truncated at record {i}")
        key = blob[offset : offset + key_len].decode("utf-8")
        offset += key_len
        raw = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset)
        offset += vec_bytes
        if key in records:
            raise DataError(f"{path}: duplicate key {key!r}")
        if not np.all(np.isfinite(raw)):
            raise DataError(f"{path}: non-finite value in vector for key {key!r}")
        records[key] = EmbeddingVector(raw)
    if offset != len(blob):
        raise DataError(f"{path}: {len(blob) - offset} trailing bytes after records")
    return EmbeddingStore(dim, records)


def gloss_key(gloss_id) -> str:
    return f"g:{gloss_id}"


def example_key(gloss_id, example_index: int) -> str:
    return f"c:{gloss_id}:{example_index}"


def instance_key(instance_id: str) -> str:
    return f"q:{instance_id}"


def embed_inventory_baseline(inv: Inventory, dim: int, seed: int) -> dict[str, EmbeddingVector]:
    """Baseline vectors for every gloss (g:) and example target (c:) of one inventory."""
    records: dict[str, EmbeddingVector] = {}
    for gloss in inv.all_glosses():
        records[gloss_key(gloss.id)] = baseline_embed_sentence(gloss.definition, dim, seed)
        for i, example in enumerate(gloss.examples):
            try:
                records[example_key(gloss.id, i)] = baseline_embed_target(
                    example, gloss.lemma, dim, seed
                )
            except DataError as exc:
                raise DataError(f"gloss {gloss.id} example {i}: {exc}") from None
    return records
