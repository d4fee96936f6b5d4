"""Dataset ingestion, deterministic splits, the embedding interchange
formats, and batch assembly.

File formats
------------
Dataset: UTF-8 lines, header ``#schema=23`` or ``#schema=14``, then one
record per line: ``id<TAB>label;label;...<TAB>text``.

Word embeddings (WEMB): magic ``WEMB``, u32 version=1, u32 vocab count,
u32 dim, then per token a u16 byte length, the UTF-8 token, and dim
little-endian float32 values.

Sentence embeddings (SEMB): magic ``SEMB``, u32 version=1, u32 dim,
u64 record count, then per record a u16 post-id byte length, the UTF-8 id,
a u16 sentence count, and count*dim little-endian float32 values.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    CoverageError,
    DimensionError,
    FormatError,
    SchemaError,
    SplitError,
)
from .schema import DEFAULT_SCHEMA, LabelSchema
from .text import preprocess, split_sentences


@dataclass
class Post:
    """One classification unit; ``text`` is stored preprocessed."""

    id: str
    text: str
    labels: set[str]
    label_space: int  # 23 or 14

    def sentences(self) -> list[list[str]]:
        return split_sentences(self.text)


# ---------------------------------------------------------------------------
# dataset text format


def load_dataset(path, schema: LabelSchema = DEFAULT_SCHEMA, require_labels=True):
    """Parse the dataset format; returns (posts, label_space)."""
    posts = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header not in ("#schema=23", "#schema=14"):
            raise FormatError(f"{path}: first line must be '#schema=23' or '#schema=14'")
        space = int(header.split("=")[1])
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 tab-separated fields")
            post_id, label_field, text = parts
            labels = {l for l in (s.strip() for s in label_field.split(";")) if l}
            if require_labels and not labels:
                raise SchemaError(f"{path}:{lineno}: post {post_id!r} has no labels")
            schema.validate_labels(labels, space)
            posts.append(Post(post_id, preprocess(text), labels, space))
    if not posts:
        raise FormatError(f"{path}: no records")
    seen = set()
    for post in posts:
        if post.id in seen:
            raise FormatError(f"{path}: duplicate post id {post.id!r}")
        seen.add(post.id)
    return posts, space


def save_dataset(path, posts, space: int):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#schema={space}\n")
        for post in posts:
            labels = ";".join(sorted(post.labels))
            fh.write(f"{post.id}\t{labels}\t{post.text}\n")


def to_label_space_14(posts, schema: LabelSchema = DEFAULT_SCHEMA):
    """Map 23-space posts onto the merged space; 14-space posts pass through."""
    out = []
    for post in posts:
        if post.label_space == 14:
            out.append(post)
        else:
            out.append(Post(post.id, post.text, schema.merge_labels(post.labels), 14))
    return out


def encode_labels(labelsets, names) -> np.ndarray:
    index = {name: j for j, name in enumerate(names)}
    y = np.zeros((len(labelsets), len(names)), dtype=np.int64)
    for i, labels in enumerate(labelsets):
        for label in labels:
            if label not in index:
                raise SchemaError(f"label {label!r} not in the model's label space")
            y[i, index[label]] = 1
    return y


# ---------------------------------------------------------------------------
# deterministic splits


def split_dataset(posts, seed: int, merge_val_into_train: bool = False):
    """Seeded shuffle then 70/15/15; the flag folds validation into train
    for final runs."""
    if len(posts) < 10:
        raise SplitError(f"need at least 10 posts to split, got {len(posts)}")
    order = np.random.default_rng(seed).permutation(len(posts))
    shuffled = [posts[i] for i in order]
    n = len(posts)
    n_test = int(n * 0.15)
    n_val = int(n * 0.15)
    test = shuffled[:n_test]
    val = shuffled[n_test : n_test + n_val]
    train = shuffled[n_test + n_val :]
    if merge_val_into_train:
        train = train + val
        val = []
    return train, val, test


# ---------------------------------------------------------------------------
# binary interchange formats

_WEMB_MAGIC = b"WEMB"
_SEMB_MAGIC = b"SEMB"
_FORMAT_VERSION = 1


class _Reader:
    def __init__(self, path):
        with open(path, "rb") as fh:
            self.buf = fh.read()
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise FormatError(f"{self.path}: truncated file", offset=self.pos)
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))

    def expect_done(self):
        if self.pos != len(self.buf):
            raise FormatError(f"{self.path}: trailing bytes", offset=self.pos)


def _check_header(reader: _Reader, magic: bytes):
    got = reader.take(4)
    if got != magic:
        raise FormatError(
            f"{reader.path}: bad magic {got!r}, expected {magic!r}", offset=0
        )
    (version,) = reader.unpack("I")
    if version != _FORMAT_VERSION:
        raise FormatError(f"{reader.path}: unsupported version {version}", offset=4)


def _encode_token(token: str) -> bytes:
    raw = token.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise FormatError(f"token too long for the format: {token[:32]!r}...")
    return struct.pack("<H", len(raw)) + raw


class EmbeddingTable:
    """Word-vector table; out-of-vocabulary tokens map to the zero vector."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray] | None = None):
        if dim < 1:
            raise DimensionError("embedding dim must be positive")
        self.dim = dim
        self.vectors: dict[str, np.ndarray] = {}
        if vectors:
            for token, vec in vectors.items():
                self.add(token, vec)
        self._zero = np.zeros(dim, dtype=np.float32)

    def add(self, token: str, vec):
        vec = np.asarray(vec, dtype=np.float32)
        if vec.shape != (self.dim,):
            raise DimensionError(
                f"vector for {token!r} has shape {vec.shape}, expected ({self.dim},)"
            )
        self.vectors[token] = vec

    def lookup(self, token: str) -> np.ndarray:
        return self.vectors.get(token, self._zero)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(_WEMB_MAGIC)
            fh.write(struct.pack("<III", _FORMAT_VERSION, len(self.vectors), self.dim))
            for token, vec in self.vectors.items():
                fh.write(_encode_token(token))
                fh.write(vec.astype("<f4").tobytes())

    @classmethod
    def load(cls, path, expect_dim: int | None = None) -> "EmbeddingTable":
        reader = _Reader(path)
        _check_header(reader, _WEMB_MAGIC)
        count, dim = reader.unpack("II")
        if expect_dim is not None and dim != expect_dim:
            raise ConfigError(f"{path}: dim {dim} != configured {expect_dim}")
        table = cls(dim)
        for _ in range(count):
            (length,) = reader.unpack("H")
            token = reader.take(length).decode("utf-8")
            vec = np.frombuffer(reader.take(4 * dim), dtype="<f4")
            table.add(token, vec)
        reader.expect_done()
        return table


class SentenceEmbeddingStore:
    """(post id, sentence index) -> vector, stored per post as a matrix."""

    def __init__(self, dim: int):
        if dim < 1:
            raise DimensionError("embedding dim must be positive")
        self.dim = dim
        self._rows: dict[str, np.ndarray] = {}

    def add(self, post_id: str, matrix):
        matrix = np.asarray(matrix, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape[1] != self.dim:
            raise DimensionError(
                f"sentence matrix for {post_id!r} has shape {matrix.shape}, "
                f"expected (*, {self.dim})"
            )
        self._rows[post_id] = matrix

    def sentence_count(self, post_id: str) -> int:
        if post_id not in self._rows:
            raise CoverageError(f"no sentence embeddings for post {post_id!r}")
        return self._rows[post_id].shape[0]

    def lookup(self, post_id: str, index: int) -> np.ndarray:
        if post_id not in self._rows:
            raise CoverageError(f"no sentence embeddings for post {post_id!r}")
        rows = self._rows[post_id]
        if not 0 <= index < rows.shape[0]:
            raise CoverageError(f"post {post_id!r} has no sentence {index}")
        return rows[index]

    def __contains__(self, post_id: str) -> bool:
        return post_id in self._rows

    def __len__(self) -> int:
        return len(self._rows)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(_SEMB_MAGIC)
            fh.write(struct.pack("<IIQ", _FORMAT_VERSION, self.dim, len(self._rows)))
            for post_id, rows in self._rows.items():
                fh.write(_encode_token(post_id))
                fh.write(struct.pack("<H", rows.shape[0]))
                fh.write(rows.astype("<f4").tobytes())

    @classmethod
    def load(cls, path, expect_dim: int | None = None) -> "SentenceEmbeddingStore":
        reader = _Reader(path)
        _check_header(reader, _SEMB_MAGIC)
        dim, count = reader.unpack("IQ")
        if expect_dim is not None and dim != expect_dim:
            raise ConfigError(f"{path}: dim {dim} != configured {expect_dim}")
        store = cls(dim)
        for _ in range(count):
            (length,) = reader.unpack("H")
            post_id = reader.take(length).decode("utf-8")
            (n_sent,) = reader.unpack("H")
            flat = np.frombuffer(reader.take(4 * dim * n_sent), dtype="<f4")
            store.add(post_id, flat.reshape(n_sent, dim))
        reader.expect_done()
        return store


def load_word_embeddings(path, expect_dim: int | None = None) -> EmbeddingTable:
    return EmbeddingTable.load(path, expect_dim=expect_dim)


def load_sentence_embeddings(path, expect_dim: int | None = None) -> SentenceEmbeddingStore:
    return SentenceEmbeddingStore.load(path, expect_dim=expect_dim)


# ---------------------------------------------------------------------------
# batching


@dataclass
class PostBatch:
    """Padded tensors for one batch of posts.

    word_arrays: source id -> (B, S, W, d) float32
    sent_arrays: source id -> (B, S, d) float32
    masks mark contiguous valid prefixes.
    """

    ids: list[str]
    tokens: list[list[list[str]]]
    word_arrays: dict[str, np.ndarray]
    sent_arrays: dict[str, np.ndarray]
    word_mask: np.ndarray  # (B, S, W)
    sent_mask: np.ndarray  # (B, S)
    labels: np.ndarray  # (B, L)

    @property
    def size(self) -> int:
        return len(self.ids)


def _assemble_batch(posts, tables, stores, label_names, max_sentences, max_words):
    b = len(posts)
    word_mask = np.zeros((b, max_sentences, max_words), dtype=np.float32)
    sent_mask = np.zeros((b, max_sentences), dtype=np.float32)
    word_arrays = {
        src: np.zeros((b, max_sentences, max_words, table.dim), dtype=np.float32)
        for src, table in tables.items()
    }
    sent_arrays = {
        src: np.zeros((b, max_sentences, store.dim), dtype=np.float32)
        for src, store in stores.items()
    }
    tokens = []
    for i, post in enumerate(posts):
        sentences = post.sentences()
        for src, store in stores.items():
            have = store.sentence_count(post.id)
            if have != len(sentences):
                raise CoverageError(
                    f"store {src!r} has {have} sentences for post {post.id!r}, "
                    f"splitter produced {len(sentences)}"
                )
        kept = sentences[:max_sentences]  # tail-first truncation
        tokens.append(kept)
        for s, words in enumerate(kept):
            words = words[:max_words]
            sent_mask[i, s] = 1.0
            word_mask[i, s, : len(words)] = 1.0
            for src, table in tables.items():
                for w, token in enumerate(words):
                    word_arrays[src][i, s, w] = table.lookup(token)
            for src, store in stores.items():
                sent_arrays[src][i, s] = store.lookup(post.id, s)
    labels = encode_labels([post.labels for post in posts], label_names).astype(np.float32)
    return PostBatch(
        ids=[post.id for post in posts],
        tokens=tokens,
        word_arrays=word_arrays,
        sent_arrays=sent_arrays,
        word_mask=word_mask,
        sent_mask=sent_mask,
        labels=labels,
    )


def make_batches(
    posts,
    tables: dict[str, EmbeddingTable],
    stores: dict[str, SentenceEmbeddingStore],
    label_names,
    batch_size: int,
    max_sentences: int,
    max_words: int,
    seed: int | None = None,
):
    """Yield PostBatch objects; a seed shuffles post order for the epoch."""
    if batch_size < 1:
        raise ConfigError("batch size must be positive")
    order = list(range(len(posts)))
    if seed is not None:
        order = np.random.default_rng(seed).permutation(len(posts)).tolist()
    for start in range(0, len(order), batch_size):
        chunk = [posts[i] for i in order[start : start + batch_size]]
        yield _assemble_batch(chunk, tables, stores, label_names, max_sentences, max_words)
