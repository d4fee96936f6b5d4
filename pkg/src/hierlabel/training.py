"""Training, evaluation, prediction and explanation runs, plus model
persistence.

A run trains ``runs`` models with seeds ``seed + 0 .. seed + runs-1`` on a
deterministic 70/15/15 split and reports per-run and averaged metrics on
the test part.  All defaults (Adam at lr 0.001, 10 epochs, batch 64,
dropout 0.25, three runs) are overridable via the config file or flags.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import tensor as T
from .arch import parse_arch, render_arch
from .baselines import lp_encode
from .data import (
    EmbeddingTable,
    SentenceEmbeddingStore,
    encode_labels,
    load_dataset,
    make_batches,
    split_dataset,
    to_label_space_14,
)
from .errors import ConfigError, FormatError, SchemaError
from .lexicons import LING_SOURCE_ID, LexiconSet, build_ling_source
from .losses import (
    cross_entropy_loss,
    ebce_loss,
    ebce_weights,
    nce_loss,
    nce_weights,
    predict_maxgap,
    predict_sigmoid,
)
from .metrics import MetricsReport, compute_report
from .model import Explanation, Model, ModelConfig, build, explain
from .optim import Adam
from .schema import CATEGORIES_14

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    arch: str = "s(wl(w1), s1)"
    data: str = ""
    emb: dict = field(default_factory=dict)  # source id -> path
    lexicons: str | None = None
    out: str | None = None
    loss: str = "ebce"
    lstm_dim: int = 100
    attn_dim: int = 200
    filters_per_kernel: int = 100
    max_sentences: int = 8
    max_words: int = 35
    dropout: float = 0.25
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 10
    batch_size: int = 64
    runs: int = 3
    seed: int = 13
    merge_val: bool = False

    def model_config(self, seed: int) -> ModelConfig:
        return ModelConfig(
            lstm_dim=self.lstm_dim,
            attn_dim=self.attn_dim,
            filters_per_kernel=self.filters_per_kernel,
            max_sentences=self.max_sentences,
            max_words=self.max_words,
            dropout=self.dropout,
            loss=self.loss,
            seed=seed,
        )


# tuned dimensions shipped as named presets, keyed by the canonical
# architecture string: (lstm_dim, attn_dim, filters_per_kernel)
HYPERPARAMETER_PRESETS = {
    "s(wl(elmo), tbert)": (300, 600, None),
    "s(wl(elmo, glove), tbert)": (100, 100, None),
    "s(wl(elmo), wl(glove), tbert)": (100, 200, None),
    "s(wl(elmo), wl(glove), tbert, use)": (300, 600, None),
    "s(wl(elmo), wl(glove), wl(ling), tbert)": (300, 600, None),
    "s(wc(elmo), wc(glove), tbert)": (300, 600, 100),
    "s(wc(elmo), wl(elmo), wc(glove), wl(glove), tbert)": (300, 500, 100),
}


def apply_preset(cfg: RunConfig) -> RunConfig:
    """Overwrite the three tuned dimensions from the preset table; the
    architecture (canonical form) must have a shipped preset."""
    canonical = render_arch(parse_arch(cfg.arch))
    if canonical not in HYPERPARAMETER_PRESETS:
        raise ConfigError(f"no hyperparameter preset for {canonical!r}")
    lstm_dim, attn_dim, filters = HYPERPARAMETER_PRESETS[canonical]
    cfg.lstm_dim = lstm_dim
    cfg.attn_dim = attn_dim
    if filters is not None:
        cfg.filters_per_kernel = filters
    return cfg


_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def parse_config_file(path) -> dict:
    """Line-oriented ``key = value`` file mirroring RunConfig; embedding
    paths use ``emb.<id> = <path>`` keys."""
    values: dict = {}
    emb: dict = {}
    typed = {f.name: f.type for f in fields(RunConfig)}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key.startswith("emb."):
                emb[key[4:].lower()] = raw
                continue
            if key not in typed:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            if key in ("arch", "data", "lexicons", "out", "loss"):
                values[key] = raw
            elif key == "merge_val":
                if raw.lower() not in _BOOL_VALUES:
                    raise ConfigError(f"{path}:{lineno}: bad boolean {raw!r}")
                values[key] = _BOOL_VALUES[raw.lower()]
            elif key in ("dropout", "lr", "beta1", "beta2", "eps"):
                values[key] = float(raw)
            else:
                values[key] = int(raw)
    if emb:
        values["emb"] = emb
    return values


def load_embedding_file(path):
    """Dispatch on the file magic; returns ('word', table) or ('sent', store)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == b"WEMB":
        return "word", EmbeddingTable.load(path)
    if magic == b"SEMB":
        return "sent", SentenceEmbeddingStore.load(path)
    raise FormatError(f"{path}: unrecognized embedding magic {magic!r}", offset=0)


def load_sources(cfg: RunConfig, arch, all_posts, train_posts):
    """Load every declared embedding path and build the linguistic source
    on demand: it covers the whole dataset's vocabulary, but imputation
    means are fitted on the training split only."""
    tables: dict[str, EmbeddingTable] = {}
    stores: dict[str, SentenceEmbeddingStore] = {}
    for source_id, path in cfg.emb.items():
        kind, obj = load_embedding_file(path)
        if kind == "word":
            tables[source_id.lower()] = obj
        else:
            stores[source_id.lower()] = obj
    if LING_SOURCE_ID in arch.word_sources and LING_SOURCE_ID not in tables:
        if not cfg.lexicons:
            raise ConfigError(
                "architecture uses the 'ling' source but no --lexicons directory was given"
            )
        tables[LING_SOURCE_ID] = build_ling_source(
            all_posts, LexiconSet.load(cfg.lexicons), mean_posts=train_posts
        )
    for src in arch.word_sources:
        if src not in tables:
            raise ConfigError(f"word source {src!r} has no embedding table")
    for src in arch.sentence_sources:
        if src not in stores:
            raise ConfigError(f"sentence source {src!r} has no embedding store")
    return tables, stores


# ---------------------------------------------------------------------------
# loss/prediction strategy per configured loss


class _LossPlan:
    def __init__(self, loss: str, train_posts, label_names):
        self.loss = loss
        self.label_names = list(label_names)
        gold = [post.labels for post in train_posts]
        y = encode_labels(gold, self.label_names)
        self.mapping = None
        if loss == "ebce":
            self.weights = ebce_weights(y)
            self.n_outputs = len(self.label_names)
        elif loss == "nce":
            self.weights = nce_weights(y)
            self.n_outputs = len(self.label_names)
        elif loss == "lp_ce":
            _, self.mapping = lp_encode(gold)
            self.n_outputs = len(self.mapping)
        else:
            raise ConfigError(f"unknown loss {loss!r}")

    def batch_loss(self, probs, batch):
        if self.loss == "ebce":
            return ebce_loss(probs, batch.labels.astype(np.int64), self.weights)
        if self.loss == "nce":
            return nce_loss(probs, batch.labels.astype(np.int64), self.weights)
        name_index = {name: j for j, name in enumerate(self.label_names)}
        sets = [
            frozenset(self.label_names[j] for j in np.flatnonzero(row))
            for row in batch.labels
        ]
        ids = np.array([self.mapping.lookup(s) for s in sets], dtype=np.int64)
        return cross_entropy_loss(probs, ids)

    def predict(self, probs: np.ndarray) -> list[set[int]]:
        """Label-index sets per row."""
        if self.loss == "ebce":
            return predict_sigmoid(probs)
        if self.loss == "nce":
            return predict_maxgap(probs)
        index = {name: j for j, name in enumerate(self.label_names)}
        out = []
        for row in probs:
            decoded = self.mapping.decode(int(row.argmax()))
            out.append({index[name] for name in decoded})
        return out

    def meta(self) -> dict:
        out = {"loss": self.loss}
        if self.loss in ("ebce", "nce"):
            out["weights"] = np.asarray(self.weights).tolist()
        if self.mapping is not None:
            out["powerset"] = [sorted(self.mapping.decode(i)) for i in range(len(self.mapping))]
        return out


# ---------------------------------------------------------------------------
# artifacts


@dataclass
class ModelArtifact:
    model: Model
    meta: dict
    # linguistic word table, persisted so inference needs no lexicon files
    ling_table: EmbeddingTable | None = None

    def save(self, path):
        arrays = {f"param/{name}": p.data for name, p in self.model.parameters()}
        arrays["__meta__"] = np.array(json.dumps(self.meta))
        if self.ling_table is not None:
            tokens = sorted(self.ling_table.vectors)
            arrays["ling/tokens"] = np.array(tokens)
            arrays["ling/vectors"] = np.stack([self.ling_table.vectors[t] for t in tokens])
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path) -> "ModelArtifact":
        with np.load(path, allow_pickle=False) as bundle:
            if "__meta__" not in bundle:
                raise FormatError(f"{path}: not a model artifact")
            meta = json.loads(str(bundle["__meta__"]))
            arrays = {k[len("param/") :]: bundle[k] for k in bundle.files if k.startswith("param/")}
            ling_table = None
            if "ling/tokens" in bundle:
                vectors = bundle["ling/vectors"]
                ling_table = EmbeddingTable(vectors.shape[1])
                for token, vec in zip(bundle["ling/tokens"], vectors):
                    ling_table.add(str(token), vec)
        cfg = ModelConfig(**meta["model_config"])
        model = build(meta["arch"], cfg, meta["dims"], meta["n_outputs"])
        params = dict(model.parameters())
        if set(params) != set(arrays):
            raise FormatError(f"{path}: parameter names do not match the architecture")
        for name, value in arrays.items():
            if params[name].data.shape != value.shape:
                raise FormatError(f"{path}: parameter {name!r} has shape {value.shape}")
            params[name].data = value.astype(params[name].data.dtype)
        return cls(model, meta, ling_table)

    @property
    def label_names(self):
        return self.meta["label_names"]

    def resolve_tables(self, tables: dict) -> dict:
        """Inject the persisted linguistic table unless the caller already
        supplied one."""
        if self.ling_table is None or LING_SOURCE_ID in tables:
            return tables
        if LING_SOURCE_ID not in self.model.arch.word_sources:
            return tables
        out = dict(tables)
        out[LING_SOURCE_ID] = self.ling_table
        return out


def _rename_per_label(report: MetricsReport, label_names) -> MetricsReport:
    report.per_label = {label_names[j]: v for j, v in report.per_label.items()}
    return report


# ---------------------------------------------------------------------------
# core loops


def train_single(
    cfg: RunConfig,
    run_seed: int,
    train_posts,
    tables,
    stores,
    plan: _LossPlan,
):
    """One model, one seed; returns (model, per-epoch mean losses)."""
    model = build(parse_arch(cfg.arch), cfg.model_config(run_seed), _dims(tables, stores), plan.n_outputs)
    optimizer = Adam(
        model.parameters(), lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps
    )
    log = []
    for epoch in range(cfg.epochs):
        model.reseed_dropout(run_seed * 100_003 + epoch)
        epoch_losses = []
        batches = make_batches(
            train_posts,
            tables,
            stores,
            plan.label_names,
            cfg.batch_size,
            cfg.max_sentences,
            cfg.max_words,
            seed=run_seed * 59_999 + epoch,
        )
        for batch in batches:
            optimizer.zero_grad()
            probs, _ = model.forward(batch, train=True)
            loss = plan.batch_loss(probs, batch)
            T.backward(loss)
            optimizer.step()
            epoch_losses.append(loss.item())
        log.append(float(np.mean(epoch_losses)))
        logger.info("seed %d epoch %d: loss %.5f", run_seed, epoch, log[-1])
    return model, log


def _dims(tables, stores) -> dict:
    dims = {src: table.dim for src, table in tables.items()}
    dims.update({src: store.dim for src, store in stores.items()})
    return dims


def _model_probs(model: Model, posts, tables, stores, label_names, cfg: RunConfig):
    probs = []
    gold = []
    traces = []
    batch_list = []
    for batch in make_batches(
        posts, tables, stores, label_names, cfg.batch_size, cfg.max_sentences, cfg.max_words
    ):
        p, trace = model.forward(batch, train=False)
        probs.append(p.data)
        gold.extend(set(np.flatnonzero(row).tolist()) for row in batch.labels)
        traces.append(trace)
        batch_list.append(batch)
    return np.concatenate(probs, axis=0), gold, traces, batch_list


def evaluate_model(model, posts, tables, stores, plan: _LossPlan, cfg: RunConfig) -> MetricsReport:
    probs, gold, _, _ = _model_probs(model, posts, tables, stores, plan.label_names, cfg)
    pred = plan.predict(probs)
    report = compute_report(pred, gold, labels=list(range(len(plan.label_names))))
    return _rename_per_label(report, plan.label_names)


@dataclass
class TrainResult:
    reports: list
    averaged: dict
    artifacts: list
    logs: list


def average_summaries(reports) -> dict:
    keys = ("f_example", "acc_example", "f_macro", "f_micro")
    return {k: float(np.mean([getattr(r, k) for r in reports])) for k in keys}


def train(cfg: RunConfig) -> TrainResult:
    """Full file-based run: load, split, train ``cfg.runs`` models, report
    per-run and averaged test metrics, persist artifacts."""
    started = time.time()
    posts, _ = load_dataset(cfg.data)
    posts = to_label_space_14(posts)
    label_names = list(CATEGORIES_14)
    train_posts, _, test_posts = split_dataset(posts, cfg.seed, merge_val_into_train=cfg.merge_val)
    arch = parse_arch(cfg.arch)
    tables, stores = load_sources(cfg, arch, posts, train_posts)
    # surface coverage problems before epoch 1
    for post in posts:
        for src, store in stores.items():
            have = store.sentence_count(post.id)
            want = len(post.sentences())
            if have != want:
                raise ConfigError(
                    f"store {src!r} covers {have} sentences of post {post.id!r}, "
                    f"splitter yields {want}"
                )
    plan = _LossPlan(cfg.loss, train_posts, label_names)

    reports, artifacts, logs = [], [], []
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
    for run in range(cfg.runs):
        run_seed = cfg.seed + run
        model, log = train_single(cfg, run_seed, train_posts, tables, stores, plan)
        report = evaluate_model(model, test_posts, tables, stores, plan, cfg)
        meta = {
            "arch": render_arch(arch),
            "model_config": {
                f.name: getattr(cfg.model_config(run_seed), f.name)
                for f in fields(ModelConfig)
            },
            "dims": _dims(tables, stores),
            "n_outputs": plan.n_outputs,
            "label_names": label_names,
            "training_log": log,
            "run_seed": run_seed,
            **plan.meta(),
        }
        artifact = ModelArtifact(model, meta, ling_table=tables.get(LING_SOURCE_ID))
        if cfg.out:
            path = os.path.join(cfg.out, f"run{run}.model.npz")
            artifact.save(path)
            with open(os.path.join(cfg.out, f"run{run}.report.json"), "w") as fh:
                fh.write(report.to_json())
            with open(os.path.join(cfg.out, f"run{run}.report.txt"), "w") as fh:
                fh.write(report.to_text() + "\n")
        reports.append(report)
        artifacts.append(artifact)
        logs.append(log)
    averaged = average_summaries(reports)
    averaged["runs"] = cfg.runs
    averaged["seconds"] = time.time() - started
    if cfg.out:
        with open(os.path.join(cfg.out, "average.report.json"), "w") as fh:
            json.dump(averaged, fh, indent=2, sort_keys=True)
    return TrainResult(reports, averaged, artifacts, logs)


# ---------------------------------------------------------------------------
# artifact-driven entry points


def _plan_from_artifact(artifact: ModelArtifact) -> _LossPlan:
    plan = _LossPlan.__new__(_LossPlan)
    plan.loss = artifact.meta["loss"]
    plan.label_names = list(artifact.label_names)
    plan.mapping = None
    if "weights" in artifact.meta:
        plan.weights = np.asarray(artifact.meta["weights"])
    if "powerset" in artifact.meta:
        from .baselines import PowersetMapping

        mapping = PowersetMapping()
        for combo in artifact.meta["powerset"]:
            mapping.encode(frozenset(combo))
        plan.mapping = mapping
    plan.n_outputs = artifact.meta["n_outputs"]
    return plan


def _cfg_from_artifact(artifact: ModelArtifact, batch_size: int = 64) -> RunConfig:
    mc = artifact.meta["model_config"]
    return RunConfig(
        arch=artifact.meta["arch"],
        loss=artifact.meta["loss"],
        lstm_dim=mc["lstm_dim"],
        attn_dim=mc["attn_dim"],
        filters_per_kernel=mc["filters_per_kernel"],
        max_sentences=mc["max_sentences"],
        max_words=mc["max_words"],
        dropout=mc["dropout"],
        batch_size=batch_size,
    )


def evaluate(artifact: ModelArtifact, posts, tables, stores) -> MetricsReport:
    """Schema compatibility is checked against the artifact's label space."""
    tables = artifact.resolve_tables(tables)
    plan = _plan_from_artifact(artifact)
    for post in posts:
        unknown = post.labels - set(plan.label_names)
        if unknown:
            raise SchemaError(
                f"post {post.id!r} carries labels outside the model's space: {sorted(unknown)}"
            )
    cfg = _cfg_from_artifact(artifact)
    return evaluate_model(artifact.model, posts, tables, stores, plan, cfg)


def predict(artifact: ModelArtifact, posts, tables, stores):
    """Returns [(post id, predicted label-name set, probability row)]."""
    tables = artifact.resolve_tables(tables)
    plan = _plan_from_artifact(artifact)
    cfg = _cfg_from_artifact(artifact)
    probs, _, _, batches = _model_probs(
        artifact.model, posts, tables, stores, plan.label_names, cfg
    )
    pred = plan.predict(probs)
    ids = [post_id for batch in batches for post_id in batch.ids]
    out = []
    for i, (post_id, indices) in enumerate(zip(ids, pred)):
        names = {plan.label_names[j] for j in indices}
        out.append((post_id, names, probs[i]))
    return out


def explain_posts(artifact: ModelArtifact, posts, tables, stores, k: int = 2):
    """Attention report: top-k words per sentence plus sentence ranking."""
    tables = artifact.resolve_tables(tables)
    plan = _plan_from_artifact(artifact)
    cfg = _cfg_from_artifact(artifact)
    out: list[Explanation] = []
    for batch in make_batches(
        posts, tables, stores, plan.label_names, cfg.batch_size, cfg.max_sentences, cfg.max_words
    ):
        _, trace = artifact.model.forward(batch, train=False)
        out.extend(explain(trace, batch, k=k))
    return out


def format_explanation(item: Explanation) -> str:
    """Render one explanation in the two-words-per-sentence table style."""
    cells = ", ".join("(" + ", ".join(w for w, _ in words) + ")" for words in item.top_words)
    ranking = " > ".join(str(s) for s in item.sentence_ranking)
    return f"{item.post_id}\t{cells}\tsentences: {ranking}"
