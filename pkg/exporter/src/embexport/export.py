"""Export jobs: static word tables, contextual word encoders pooled to
static per-token vectors, and sentence encoders."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import read_dataset, vocabulary
from .encoders import resolve_encoder
from .writers import write_semb, write_wemb

KINDS = ("word-table", "word-encoder", "sentence-encoder")


class ExportError(ValueError):
    pass


@dataclass
class ExportJob:
    kind: str  # one of KINDS
    model: str  # table path, or encoder spec (stub:<dim> / hf:<path>)
    data: str  # dataset path
    out: str  # output file

    def validate(self) -> "ExportJob":
        if self.kind not in KINDS:
            raise ExportError(f"kind must be one of {KINDS}, got {self.kind!r}")
        return self


def read_text_table(path) -> tuple[int, dict]:
    """GloVe-style text table: one ``token v1 .. vd`` line per token."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            token, values = parts[0], parts[1:]
            try:
                vec = np.array([float(v) for v in values], dtype=np.float32)
            except ValueError as exc:
                raise ExportError(f"{path}:{lineno}: bad float") from exc
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise ExportError(
                    f"{path}:{lineno}: dim {vec.shape[0]} != {dim} seen earlier"
                )
            vectors[token] = vec
    if not vectors:
        raise ExportError(f"{path}: empty table")
    return dim, vectors


def export_word_table(job: ExportJob) -> dict:
    """Restrict a static table to the dataset vocabulary and write WEMB.
    Tokens absent from the source are omitted (the engine zero-fills)."""
    job.validate()
    posts = read_dataset(job.data)
    vocab = vocabulary(posts)
    dim, source = read_text_table(job.model)
    kept = {token: source[token] for token in vocab if token in source}
    write_wemb(job.out, dim, kept)
    return {"dim": dim, "tokens": len(kept), "vocabulary": len(vocab), "out": job.out}


def export_word_encoder(job: ExportJob) -> dict:
    """Contextual word vectors pooled to one static vector per token: the
    mean over every occurrence in the dataset."""
    job.validate()
    posts = read_dataset(job.data)
    encoder = resolve_encoder(job.model)
    sums: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    for post in posts:
        for sentence in post.sentences:
            for i, token in enumerate(sentence):
                vec = encoder.encode_word_occurrence(sentence, i)
                if token in sums:
                    sums[token] = sums[token] + vec
                    counts[token] += 1
                else:
                    sums[token] = vec.astype(np.float64)
                    counts[token] = 1
    pooled = {
        token: (sums[token] / counts[token]).astype(np.float32) for token in sorted(sums)
    }
    write_wemb(job.out, encoder.dim, pooled)
    return {"dim": encoder.dim, "tokens": len(pooled), "out": job.out}


def export_sentences(job: ExportJob) -> dict:
    """Encode every split sentence of every post and write SEMB; record
    counts follow this package's splitter, which is pinned to the engine's."""
    job.validate()
    posts = read_dataset(job.data)
    encoder = resolve_encoder(job.model)
    records = {}
    failures = []
    for post in posts:
        try:
            rows = [encoder.encode_sentence(words) for words in post.sentences]
            records[post.id] = np.stack(rows) if rows else np.zeros((0, encoder.dim))
        except Exception as exc:  # report per post, then abort the job
            failures.append((post.id, str(exc)))
    if failures:
        detail = "; ".join(f"{post_id}: {msg}" for post_id, msg in failures[:5])
        raise ExportError(f"{len(failures)} posts failed to encode ({detail})")
    write_semb(job.out, encoder.dim, records)
    total = sum(r.shape[0] for r in records.values())
    return {"dim": encoder.dim, "posts": len(records), "sentences": total, "out": job.out}


def run_job(job: ExportJob) -> dict:
    job.validate()
    if job.kind == "word-table":
        return export_word_table(job)
    if job.kind == "word-encoder":
        return export_word_encoder(job)
    return export_sentences(job)
