"""Multi-label classification of short texts with a configurable
hierarchical word/sentence architecture, imbalance-corrected losses, an
adaptive prediction cutoff, and problem-transformation baselines."""

from .arch import ArchExpr, Group, parse_arch, render_arch
from .data import (
    EmbeddingTable,
    Post,
    PostBatch,
    SentenceEmbeddingStore,
    load_dataset,
    make_batches,
    save_dataset,
    split_dataset,
    to_label_space_14,
)
from .errors import EngineError
from .layers import AttentionLayer, BiLstmLayer, ConvBlock
from .lexicons import LexiconSet, build_ling_source, featurize_word
from .losses import (
    ebce_loss,
    ebce_weights,
    nce_loss,
    nce_weights,
    predict_maxgap,
    predict_sigmoid,
)
from .metrics import (
    MetricsReport,
    average_kappa,
    breakdown_by_label_count,
    cohens_kappa,
    compute_report,
    example_accuracy,
    example_f1,
    label_f1,
)
from .model import Model, ModelConfig, build, explain
from .optim import Adam
from .schema import CATEGORIES_14, CATEGORIES_23, DEFAULT_SCHEMA, LabelSchema
from .tensor import Tensor
from .text import preprocess, split_sentences
from .training import ModelArtifact, RunConfig, evaluate, predict, train

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "ArchExpr",
    "AttentionLayer",
    "BiLstmLayer",
    "CATEGORIES_14",
    "CATEGORIES_23",
    "ConvBlock",
    "DEFAULT_SCHEMA",
    "EmbeddingTable",
    "EngineError",
    "Group",
    "LabelSchema",
    "LexiconSet",
    "MetricsReport",
    "Model",
    "ModelArtifact",
    "ModelConfig",
    "Post",
    "PostBatch",
    "RunConfig",
    "SentenceEmbeddingStore",
    "Tensor",
    "average_kappa",
    "breakdown_by_label_count",
    "build",
    "build_ling_source",
    "cohens_kappa",
    "compute_report",
    "ebce_loss",
    "ebce_weights",
    "evaluate",
    "example_accuracy",
    "example_f1",
    "explain",
    "featurize_word",
    "label_f1",
    "load_dataset",
    "make_batches",
    "nce_loss",
    "nce_weights",
    "parse_arch",
    "predict",
    "predict_maxgap",
    "predict_sigmoid",
    "preprocess",
    "render_arch",
    "save_dataset",
    "split_dataset",
    "split_sentences",
    "to_label_space_14",
    "train",
]
