import numpy as np
import pytest


def _conformance_texts(n=50):
    """Raw texts exercising the tricky preprocessing paths: messy casing,
    dropped symbols, punctuation runs, whitespace runs, hard-wrap lengths."""
    rng = np.random.default_rng(404)
    fillers = ["it", "was", "SO", "unfair", "at", "Work", "today", "really", "don't"]
    texts = []
    for i in range(n):
        n_sent = int(rng.integers(1, 4))
        sentences = []
        for _ in range(n_sent):
            n_words = int(rng.choice([3, 5, 9, 40, 75], p=[0.3, 0.3, 0.2, 0.1, 0.1]))
            words = [str(rng.choice(fillers)) for _ in range(n_words)]
            if rng.random() < 0.3:
                words.insert(0, "@#$")
            sentence = " ".join(words)
            if rng.random() < 0.3:
                sentence = sentence.replace(" ", "   ", 1)
            mark = str(rng.choice([".", "!", "?", "!!", "?!", "..."]))
            sentences.append(sentence + mark)
        texts.append(" ".join(sentences))
    return texts


@pytest.fixture(scope="session")
def conformance_corpus(tmp_path_factory):
    """50-post dataset file with raw (unnormalized) text."""
    directory = tmp_path_factory.mktemp("conformance")
    path = directory / "corpus.txt"
    lines = ["#schema=14"]
    for i, text in enumerate(_conformance_texts(50)):
        lines.append(f"c{i}\tOther\t{text}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
