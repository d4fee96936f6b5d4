"""Per-word linguistic feature vectors built from pluggable lexicon files.

Fixed 33-slot layout:

* 10 binary slots, in order: assertive verbs, implicative verbs, hedges,
  factive verbs, report verbs, entailment, strong subjective,
  weak subjective, positive words, negative words;
* 10 PERMA slots: the five factors for the positive polarity, then the
  five for the negative polarity;
* 10 emotion-lexicon slots: anger, fear, anticipation, trust, surprise,
  sadness, joy, disgust, then the negative and positive sentiments;
* 3 affect slots: valence, arousal, dominance.

Binary lexicons are one-token-per-line ``<name>.txt`` files; scored
dimensions are ``<name>.tsv`` files with ``token<TAB>score`` lines.
Tokens missing from a binary lexicon score 0; tokens missing from a
scored lexicon get the mean of that dimension over the fitted (training)
vocabulary.
"""

from __future__ import annotations

import os

import numpy as np

from .data import EmbeddingTable
from .errors import ConfigError, FormatError

BINARY_LEXICONS = (
    "assertive_verbs",
    "implicative_verbs",
    "hedges",
    "factive_verbs",
    "report_verbs",
    "entailment",
    "strong_subjective",
    "weak_subjective",
    "positive_words",
    "negative_words",
)

SCORED_LEXICONS = (
    "perma_pos_positive_emotion",
    "perma_pos_engagement",
    "perma_pos_relationships",
    "perma_pos_meaning",
    "perma_pos_accomplishment",
    "perma_neg_positive_emotion",
    "perma_neg_engagement",
    "perma_neg_relationships",
    "perma_neg_meaning",
    "perma_neg_accomplishment",
    "emotion_anger",
    "emotion_fear",
    "emotion_anticipation",
    "emotion_trust",
    "emotion_surprise",
    "emotion_sadness",
    "emotion_joy",
    "emotion_disgust",
    "sentiment_negative",
    "sentiment_positive",
    "affect_valence",
    "affect_arousal",
    "affect_dominance",
)

FEATURE_WIDTH = len(BINARY_LEXICONS) + len(SCORED_LEXICONS)  # 33

LING_SOURCE_ID = "ling"
LEXICON_DIR_ENV = "HIERLABEL_LEXICONS"


def _read_binary(path) -> frozenset[str]:
    tokens = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            token = line.strip()
            if token and not token.startswith("#"):
                tokens.add(token.lower())
    return frozenset(tokens)


def _read_scored(path) -> dict[str, float]:
    scores = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'token<TAB>score'")
            try:
                scores[parts[0].strip().lower()] = float(parts[1])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: bad score {parts[1]!r}")
    return scores


class LexiconSet:
    """Loaded lexicons plus per-dimension imputation means.

    Means default to each scored lexicon's own average and are re-fitted to
    the training vocabulary with :meth:`fit_means` so evaluation tokens
    never leak into the imputation statistics.
    """

    def __init__(self, binary: dict, scored: dict):
        self.binary = {name: frozenset(binary.get(name, ())) for name in BINARY_LEXICONS}
        self.scored = {name: dict(scored.get(name, {})) for name in SCORED_LEXICONS}
        self.means = {
            name: (float(np.mean(list(vals.values()))) if vals else 0.0)
            for name, vals in self.scored.items()
        }

    @classmethod
    def load(cls, directory) -> "LexiconSet":
        """Read every recognized lexicon file under ``directory``; missing
        files load as empty lexicons."""
        if not os.path.isdir(directory):
            raise ConfigError(f"lexicon directory not found: {directory}")
        binary = {}
        for name in BINARY_LEXICONS:
            path = os.path.join(directory, f"{name}.txt")
            if os.path.exists(path):
                binary[name] = _read_binary(path)
        scored = {}
        for name in SCORED_LEXICONS:
            path = os.path.join(directory, f"{name}.tsv")
            if os.path.exists(path):
                scored[name] = _read_scored(path)
        return cls(binary, scored)

    def fit_means(self, train_vocab) -> "LexiconSet":
        """Recompute imputation means over the given (training) vocabulary.
        Dimensions with no overlap fall back to 0.0."""
        vocab = {t.lower() for t in train_vocab}
        for name, scores in self.scored.items():
            overlap = [scores[t] for t in vocab if t in scores]
            self.means[name] = float(np.mean(overlap)) if overlap else 0.0
        return self

    def featurize_word(self, token: str) -> np.ndarray:
        """33-slot feature vector for one (lower-cased) token."""
        vec = np.zeros(FEATURE_WIDTH, dtype=np.float32)
        for i, name in enumerate(BINARY_LEXICONS):
            if token in self.binary[name]:
                vec[i] = 1.0
        base = len(BINARY_LEXICONS)
        for i, name in enumerate(SCORED_LEXICONS):
            scores = self.scored[name]
            vec[base + i] = scores.get(token, self.means[name])
        return vec


def featurize_word(token: str, lex: LexiconSet) -> np.ndarray:
    return lex.featurize_word(token)


def _vocab_of(posts) -> set[str]:
    vocab = set()
    for post in posts:
        for sentence in post.sentences():
            vocab.update(sentence)
    return vocab


def build_ling_source(posts, lex: LexiconSet, mean_posts=None) -> EmbeddingTable:
    """One 33-dim vector per vocabulary token of ``posts``; plugs into
    wl/wc groups like any other word source.

    Imputation means are fitted on the vocabulary of ``mean_posts`` when
    given (pass the training split to keep evaluation tokens out of the
    statistics), otherwise on ``posts`` itself."""
    vocab = _vocab_of(posts)
    if not vocab:
        raise ConfigError("cannot build linguistic features from an empty vocabulary")
    lex.fit_means(_vocab_of(mean_posts) if mean_posts is not None else vocab)
    table = EmbeddingTable(FEATURE_WIDTH)
    for token in sorted(vocab):
        table.add(token, lex.featurize_word(token))
    return table
