"""Command-line interface.

Subcommands: train, eval, predict, explain, kappa, baseline.  Every
failure on a user-facing path exits nonzero with one categorized line on
stderr: ``error: <category>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .baselines import (
    avg_word_embedding,
    br_predict,
    br_train,
    build_tfidf_vocab,
    logreg_train,
    lp_encode,
    tfidf_featurize,
)
from .data import encode_labels, load_dataset, split_dataset, to_label_space_14
from .errors import ConfigError, EngineError, SchemaError
from .metrics import average_kappa, cohens_kappa, compute_report
from .schema import CATEGORIES_14, CATEGORIES_23
from .lexicons import LEXICON_DIR_ENV
from .training import (
    ModelArtifact,
    RunConfig,
    apply_preset,
    evaluate,
    explain_posts,
    format_explanation,
    load_embedding_file,
    parse_config_file,
    predict,
    train,
)


def _parse_emb(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--emb expects id=path, got {pair!r}")
        source_id, _, path = pair.partition("=")
        out[source_id.strip().lower()] = path.strip()
    return out


def _add_common(parser):
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--data", help="dataset file")
    parser.add_argument(
        "--emb",
        action="append",
        metavar="ID=PATH",
        help="embedding file (repeatable); WEMB/SEMB detected by magic",
    )
    parser.add_argument("--lexicons", help="lexicon directory for the 'ling' source")
    parser.add_argument("--out", help="output directory or file")
    parser.add_argument("--seed", type=int, help="base seed")


def _build_runconfig(args) -> RunConfig:
    values = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for key in ("arch", "data", "lexicons", "out", "loss", "runs", "seed"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    emb = _parse_emb(args.emb)
    if emb:
        merged = dict(values.get("emb", {}))
        merged.update(emb)
        values["emb"] = merged
    cfg = RunConfig(**values)
    if not cfg.lexicons and os.environ.get(LEXICON_DIR_ENV):
        cfg.lexicons = os.environ[LEXICON_DIR_ENV]
    if not cfg.data:
        raise ConfigError("no dataset given (--data or config)")
    if getattr(args, "preset", False):
        apply_preset(cfg)
    return cfg


def _load_eval_inputs(args):
    if not args.data:
        raise ConfigError("--data is required")
    posts, _ = load_dataset(args.data, require_labels=not getattr(args, "unlabeled", False))
    posts = to_label_space_14(posts)
    tables, stores = {}, {}
    for source_id, path in _parse_emb(args.emb).items():
        kind, obj = load_embedding_file(path)
        (tables if kind == "word" else stores)[source_id] = obj
    return posts, tables, stores


def _cmd_train(args) -> int:
    cfg = _build_runconfig(args)
    result = train(cfg)
    for run, report in enumerate(result.reports):
        print(f"# run {run}")
        print(report.to_text())
    print("# average over runs")
    for key, value in result.averaged.items():
        print(f"{key} = {value}")
    return 0


def _cmd_eval(args) -> int:
    artifact = ModelArtifact.load(args.model)
    posts, tables, stores = _load_eval_inputs(args)
    report = evaluate(artifact, posts, tables, stores)
    print(report.to_text())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.to_json())
    return 0


def _cmd_predict(args) -> int:
    artifact = ModelArtifact.load(args.model)
    posts, tables, stores = _load_eval_inputs(args)
    rows = predict(artifact, posts, tables, stores)
    lines = []
    for post_id, names, probs in rows:
        labels = ";".join(sorted(names))
        scores = ",".join(f"{p:.6f}" for p in probs)
        lines.append(f"{post_id}\t{labels}\t{scores}")
    output = "\n".join(lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(output + "\n")
    else:
        print(output)
    return 0


def _cmd_explain(args) -> int:
    artifact = ModelArtifact.load(args.model)
    posts, tables, stores = _load_eval_inputs(args)
    for item in explain_posts(artifact, posts, tables, stores, k=args.k):
        print(format_explanation(item))
    return 0


def _cmd_kappa(args) -> int:
    posts_a, space_a = load_dataset(args.data_a)
    posts_b, space_b = load_dataset(args.data_b)
    if space_a != space_b:
        raise SchemaError(f"label spaces differ: {space_a} vs {space_b}")
    by_id_a = {p.id: p for p in posts_a}
    by_id_b = {p.id: p for p in posts_b}
    if set(by_id_a) != set(by_id_b):
        raise SchemaError("the two files do not annotate the same post ids")
    ids = sorted(by_id_a)
    names = list(CATEGORIES_23 if space_a == 23 else CATEGORIES_14)
    mat_a = encode_labels([by_id_a[i].labels for i in ids], names)
    mat_b = encode_labels([by_id_b[i].labels for i in ids], names)
    for j, name in enumerate(names):
        print(f"kappa[{name}] = {cohens_kappa(mat_a[:, j], mat_b[:, j]):.4f}")
    print(f"kappa_average = {average_kappa(mat_a, mat_b):.4f}")
    return 0


def _cmd_baseline(args) -> int:
    posts, tables, stores = _load_eval_inputs(args)
    seed = args.seed if args.seed is not None else 13
    train_posts, _, test_posts = split_dataset(posts, seed)
    label_names = list(CATEGORIES_14)

    if args.features in ("tfidf-word", "tfidf-char"):
        mode = "word" if args.features.endswith("word") else "char"
        vocab = build_tfidf_vocab([p.text for p in train_posts], mode=mode)
        x_train = tfidf_featurize([p.text for p in train_posts], vocab).toarray()
        x_test = tfidf_featurize([p.text for p in test_posts], vocab).toarray()
    elif args.features == "avg-emb":
        if not tables:
            raise ConfigError("avg-emb features need a word --emb table")
        table = next(iter(tables.values()))
        x_train = np.stack([avg_word_embedding(p.text, table) for p in train_posts])
        x_test = np.stack([avg_word_embedding(p.text, table) for p in test_posts])
    else:
        raise ConfigError(f"unknown feature kind {args.features!r}")

    gold_test = [
        set(np.flatnonzero(row).tolist())
        for row in encode_labels([p.labels for p in test_posts], label_names)
    ]
    if args.transform == "lp":
        ids, mapping = lp_encode([p.labels for p in train_posts])
        model = logreg_train(x_train, ids, "multiclass", seed=seed, epochs=args.epochs)
        index = {name: j for j, name in enumerate(label_names)}
        pred = [
            {index[n] for n in mapping.decode(int(c))} for c in model.predict(x_test)
        ]
    elif args.transform == "br":
        y_train = encode_labels([p.labels for p in train_posts], label_names)
        model = br_train(x_train, y_train, seed=seed, epochs=args.epochs)
        pred = br_predict(model, x_test)
    else:
        raise ConfigError(f"unknown transform {args.transform!r}")

    report = compute_report(pred, gold_test, labels=list(range(len(label_names))))
    report.per_label = {label_names[j]: v for j, v in report.per_label.items()}
    print(report.to_text())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hierlabel",
        description="Multi-label classification of short texts with a "
        "configurable hierarchical architecture.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one or more models and report test metrics")
    _add_common(p_train)
    p_train.add_argument("--arch", help="architecture expression, e.g. 's(wl(glove), tbert)'")
    p_train.add_argument("--loss", choices=("ebce", "nce", "lp_ce"))
    p_train.add_argument("--runs", type=int)
    p_train.add_argument(
        "--preset",
        action="store_true",
        help="apply the shipped tuned dimensions for this architecture",
    )
    p_train.set_defaults(func=_cmd_train)

    for name, fn, extra in (
        ("eval", _cmd_eval, ()),
        ("predict", _cmd_predict, ("unlabeled",)),
        ("explain", _cmd_explain, ("unlabeled", "k")),
    ):
        p = sub.add_parser(name, help=f"{name} with a saved model artifact")
        _add_common(p)
        p.add_argument("--model", required=True, help="model artifact (.npz)")
        if "unlabeled" in extra:
            p.add_argument(
                "--unlabeled", action="store_true", help="accept posts without labels"
            )
        if "k" in extra:
            p.add_argument("-k", type=int, default=2, help="words per sentence")
        p.set_defaults(func=fn)

    p_kappa = sub.add_parser("kappa", help="per-category agreement between two annotation files")
    p_kappa.add_argument("--data-a", required=True)
    p_kappa.add_argument("--data-b", required=True)
    p_kappa.set_defaults(func=_cmd_kappa)

    p_base = sub.add_parser("baseline", help="label-powerset / binary-relevance baselines")
    _add_common(p_base)
    p_base.add_argument("--transform", required=True, choices=("lp", "br"))
    p_base.add_argument(
        "--features",
        required=True,
        choices=("tfidf-word", "tfidf-char", "avg-emb"),
    )
    p_base.add_argument("--epochs", type=int, default=200)
    p_base.set_defaults(func=_cmd_baseline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
