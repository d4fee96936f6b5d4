"""Minimal reader for the engine's dataset text format.

The exporter only needs post ids and tokenized sentences; labels are
carried through untouched when present.
"""

from __future__ import annotations

from dataclasses import dataclass

from .textprep import sentences_of


class DatasetError(ValueError):
    pass


@dataclass
class DatasetPost:
    id: str
    sentences: list  # list of word lists
    labels: str  # raw label field, unused by the exporter


def read_dataset(path) -> list[DatasetPost]:
    posts = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header not in ("#schema=23", "#schema=14"):
            raise DatasetError(f"{path}: missing '#schema=' header")
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DatasetError(f"{path}:{lineno}: expected 3 tab-separated fields")
            post_id, labels, text = parts
            posts.append(DatasetPost(post_id, sentences_of(text), labels))
    if not posts:
        raise DatasetError(f"{path}: no records")
    return posts


def vocabulary(posts) -> list[str]:
    vocab = set()
    for post in posts:
        for sentence in post.sentences:
            vocab.update(sentence)
    return sorted(vocab)
