"""Acceptance gate: every exit criterion at its stated tolerance, one
pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as
they print.
"""

import contextlib
import math
import time

import numpy as np
import pytest

from hierlabel import tensor as T
from hierlabel.arch import parse_arch, render_arch
from hierlabel.baselines import br_train, logreg_train, lp_encode
from hierlabel.data import load_dataset, make_batches, to_label_space_14
from hierlabel.errors import ParseError
from hierlabel.layers import AttentionLayer, BiLstmLayer, ConvBlock, DenseLayer
from hierlabel.losses import (
    ebce_loss,
    ebce_weights,
    nce_loss,
    nce_weights,
    predict_maxgap,
)
from hierlabel.metrics import cohens_kappa, example_accuracy, example_f1, label_f1
from hierlabel.schema import CATEGORIES_14, CATEGORIES_23, DEFAULT_SCHEMA
from hierlabel.training import ModelArtifact, RunConfig, train

from helpers import central_differences, rel_err
from synthcorpus import write_corpus
from test_losses import (
    ebce_weights_oracle,
    maxgap_oracle,
    nce_weights_oracle,
)
from test_metrics import (
    dice_oracle,
    jaccard_oracle,
    macro_oracle,
    micro_oracle,
    random_sets,
)


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"FAIL: {name}")
        raise
    print(f"PASS: {name}")


def _grad_check(build_loss, params, tol=1e-5, h=1e-5):
    for p in params:
        p.zero_grad()
    loss = build_loss()
    T.backward(loss)
    analytic = [p.grad.copy() for p in params]
    numeric = central_differences(lambda: build_loss().item(), params, h=h)
    worst = max(rel_err(a, n) for a, n in zip(analytic, numeric))
    assert worst <= tol, f"worst rel err {worst:.2e} > {tol}"


def test_gradient_suite():
    """Every layer and both losses vs central finite differences
    (64-bit shadow, rel err <= 1e-5, >= 20 random shapes each, < 60 s)."""
    started = time.monotonic()
    rng = np.random.default_rng(314)
    with criterion("gradient suite (layers + losses, 64-bit, <=1e-5, <60s)"):
        with T.use_dtype(np.float64):
            for trial in range(20):
                t = int(rng.integers(2, 5))
                d = int(rng.integers(1, 4))
                h_dim = int(rng.integers(1, 3))
                n = int(rng.integers(1, 3))
                lengths = rng.integers(1, t + 1, size=n)
                mask = np.zeros((n, t))
                for i, l in enumerate(lengths):
                    mask[i, :l] = 1.0

                lstm = BiLstmLayer(d, h_dim, rng)
                x = T.Tensor(rng.normal(size=(n, t, d)), requires_grad=True)
                probe = rng.normal(size=(n, t, 2 * h_dim))
                params = [p for _, p in lstm.parameters()] + [x]
                _grad_check(
                    lambda: T.tsum(T.mul(lstm.forward(x, mask), probe)), params
                )

                attn = AttentionLayer(2 * h_dim, int(rng.integers(1, 4)), rng)
                states = T.Tensor(rng.normal(size=(n, t, 2 * h_dim)), requires_grad=True)
                vec_probe = rng.normal(size=(n, 2 * h_dim))
                params = [p for _, p in attn.parameters()] + [states]
                _grad_check(
                    lambda: T.tsum(T.mul(attn.forward(states, mask)[0], vec_probe)),
                    params,
                )

                w = int(rng.integers(4, 7))
                wmask = np.zeros((n, w))
                for i, l in enumerate(rng.integers(1, w + 1, size=n)):
                    wmask[i, :l] = 1.0
                conv = ConvBlock(d, int(rng.integers(1, 3)), rng)
                words = T.Tensor(rng.normal(size=(n, w, d)), requires_grad=True)
                params = [p for _, p in conv.parameters()] + [words]
                _grad_check(lambda: T.tsum(conv.forward(words, wmask)), params)

                dense = DenseLayer(d, h_dim, rng)
                xd = T.Tensor(rng.normal(size=(n, d)), requires_grad=True)
                params = [p for _, p in dense.parameters()] + [xd]
                _grad_check(lambda: T.tsum(T.tanh(dense.forward(xd))), params)

                n_labels = int(rng.integers(2, 5))
                rows = int(rng.integers(1, 5))
                y = (rng.random((rows, n_labels)) < 0.5).astype(int)
                y[y.sum(axis=1) == 0, 0] = 1
                logits = T.Tensor(rng.normal(size=(rows, n_labels)), requires_grad=True)
                w_e = ebce_weights(y)
                _grad_check(lambda: ebce_loss(T.sigmoid(logits), y, w_e), [logits])
                w_n = nce_weights(y)
                _grad_check(lambda: nce_loss(T.softmax(logits), y, w_n), [logits])
        elapsed = time.monotonic() - started
        assert elapsed < 60.0, f"gradient suite took {elapsed:.1f}s"


def test_loss_identities():
    rng = np.random.default_rng(271)
    with criterion("loss identities (unit-weight reductions, weight oracles exact)"):
        with T.use_dtype(np.float64):
            # EBCE with unit weights == mean binary cross entropy
            p = rng.uniform(0.05, 0.95, size=(8, 5))
            y = (rng.random((8, 5)) < 0.5).astype(int)
            ours = ebce_loss(T.Tensor(p), y, np.ones((5, 2))).item()
            bce = -np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))
            assert abs(ours - bce) <= 1e-6

            # NCE with single-label rows and unit weights == standard CE
            raw = rng.uniform(0.1, 1.0, size=(8, 5))
            p = raw / raw.sum(axis=1, keepdims=True)
            y = np.zeros((8, 5), dtype=int)
            picks = rng.integers(0, 5, size=8)
            y[np.arange(8), picks] = 1
            ours = nce_loss(T.Tensor(p), y, np.ones(5)).item()
            ce = -np.mean(np.log(p[np.arange(8), picks]))
            assert abs(ours - ce) <= 1e-6

        # weight formulas: exact agreement with loop oracles
        for _ in range(100):
            rows = int(rng.integers(2, 30))
            n_labels = int(rng.integers(1, 8))
            y = (rng.random((rows, n_labels)) < 0.4).astype(int)
            np.testing.assert_array_equal(ebce_weights(y), ebce_weights_oracle(y))
            y[y.sum(axis=1) == 0, 0] = 1
            np.testing.assert_array_equal(nce_weights(y), nce_weights_oracle(y))


def test_maxgap_cutoff_against_brute_force():
    rng = np.random.default_rng(1618)
    with criterion("max-gap cutoff == brute force on 10^4 random vectors"):
        for _ in range(10_000):
            p = rng.random(int(rng.integers(2, 15)))
            assert predict_maxgap(p) == maxgap_oracle(p.tolist())


def test_metrics_against_oracles():
    rng = np.random.default_rng(999)
    with criterion("metrics vs set/count oracles (<=1e-9), Acc<=F, kappa=0.5"):
        labels = list(range(7))
        for _ in range(1000):
            rows = int(rng.integers(1, 25))
            pred = random_sets(rng, rows, 7)
            gold = random_sets(rng, rows, 7)
            f_i = example_f1(pred, gold)
            acc = example_accuracy(pred, gold)
            assert abs(f_i - dice_oracle(pred, gold)) <= 1e-9
            assert abs(acc - jaccard_oracle(pred, gold)) <= 1e-9
            assert abs(label_f1(pred, gold, "macro", labels) - macro_oracle(pred, gold, labels)) <= 1e-9
            assert abs(label_f1(pred, gold, "micro", labels) - micro_oracle(pred, gold, labels)) <= 1e-9
            assert acc <= f_i + 1e-12
        assert cohens_kappa(np.array([1, 1, 0, 0]), np.array([1, 0, 0, 0])) == pytest.approx(0.5, abs=1e-12)


def test_parser_acceptance():
    reported = [
        "s(wl(ELMo), tBERT)",
        "s(wl(ELMo, GloVe), tBERT)",
        "s(wc(ELMo), wc(GloVe), tBERT)",
        "s(wl(ELMo), wl(GloVe), tBERT)",
        "s(wl(ELMo), wl(GloVe), tBERT, USE)",
        "s(wl(ELMo), wl(GloVe), wl(Ling), tBERT)",
        "s(wc(ELMo), wl(ELMo), wc(GloVe), wl(GloVe), tBERT)",
    ]
    with criterion("parser: reported architectures, round-trip, positioned errors"):
        for text in reported:
            expr = parse_arch(text)
            n_groups = text.count("wl(") + text.count("wc(")
            assert len(expr.groups) == n_groups
            assert expr.sentence_sources[0] == "tbert"
            canonical = render_arch(expr)
            assert parse_arch(canonical) == expr
            assert render_arch(parse_arch(canonical)) == canonical
        for bad in ("s()", "s(wl())", "s(wl(a)", "x(a)", "s(a,)", "s(s(a))"):
            with pytest.raises(ParseError) as exc:
                parse_arch(bad)
            assert exc.value.offset is not None


def test_schema_acceptance():
    golden = {
        "Menstruation-related discrimination": "Motherhood and menstruation related discrimination",
        "Motherhood-related discrimination": "Motherhood and menstruation related discrimination",
        "Mansplaining": "Other",
        "Gaslighting": "Other",
        "Religion-based sexism": "Other",
        "Physical violence (excluding sexual violence)": "Other",
        "Pay gap": "Hostile work environment",
        "Hostile work environment (excluding pay gap)": "Hostile work environment",
        "Tone policing": "Moral policing and victim blaming",
        "Moral policing (excluding tone policing)": "Moral policing and victim blaming",
        "Victim blaming": "Moral policing and victim blaming",
        "Rape": "Sexual assault",
        "Sexual assault (excluding rape)": "Sexual assault",
    }
    with criterion("schema: golden merge table, 23->14 surjective"):
        for child, parent in golden.items():
            assert DEFAULT_SCHEMA.merge_map[child] == parent
        for name in CATEGORIES_23:
            if name not in golden:
                assert DEFAULT_SCHEMA.merge_map[name] == name
        assert len(CATEGORIES_23) == 23
        assert len(CATEGORIES_14) == 14
        assert {DEFAULT_SCHEMA.merge_map[c] for c in CATEGORIES_23} == set(CATEGORIES_14)


@pytest.fixture(scope="module")
def big_corpus(tmp_path_factory):
    directory = tmp_path_factory.mktemp("bigcorpus")
    return write_corpus(directory, 2000, seed=5)


def _e2e_config(paths, **overrides):
    base = dict(
        arch="s(wl(w1), s1)",
        data=paths["data"],
        emb={"w1": paths["wemb"], "s1": paths["semb"]},
        loss="ebce",
        lr=0.01,
        lstm_dim=24,
        attn_dim=24,
        max_sentences=4,
        max_words=12,
        epochs=10,
        batch_size=64,
        runs=3,
        seed=3,
    )
    base.update(overrides)
    return RunConfig(**base)


def test_synthetic_end_to_end(big_corpus):
    """2000 posts, 14 labels, 32-dim words + 48-dim sentences, 10 epochs,
    3 runs: EBCE averaged F_I and F_micro >= 0.90; NCE+maxgap F_I >= 0.80;
    all inside 5 minutes."""
    started = time.monotonic()
    with criterion("synthetic end-to-end (EBCE >= 0.90, NCE+maxgap >= 0.80, <5min)"):
        ebce = train(_e2e_config(big_corpus))
        assert ebce.averaged["f_example"] >= 0.90, ebce.averaged
        assert ebce.averaged["f_micro"] >= 0.90, ebce.averaged
        nce = train(_e2e_config(big_corpus, loss="nce"))
        assert nce.averaged["f_example"] >= 0.80, nce.averaged
        elapsed = time.monotonic() - started
        assert elapsed < 300.0, f"end-to-end took {elapsed:.0f}s"


def test_reproducibility(big_corpus, tmp_path):
    with criterion("reproducibility: identical metrics, bitwise probe after reload"):
        cfg = _e2e_config(big_corpus, runs=1, epochs=2, seed=77)
        a = train(cfg)
        b = train(cfg)
        assert a.reports[0].summary() == b.reports[0].summary()
        assert a.logs == b.logs

        posts, _ = load_dataset(big_corpus["data"])
        posts = to_label_space_14(posts)[:16]
        from hierlabel.training import load_embedding_file

        _, table = load_embedding_file(big_corpus["wemb"])
        _, store = load_embedding_file(big_corpus["semb"])
        batch = next(
            make_batches(posts, {"w1": table}, {"s1": store}, CATEGORIES_14, 16, 4, 12)
        )
        before, _ = a.artifacts[0].model.forward(batch)
        path = tmp_path / "probe.npz"
        a.artifacts[0].save(path)
        reloaded = ModelArtifact.load(path)
        after, _ = reloaded.model.forward(batch)
        assert before.data.tobytes() == after.data.tobytes()


def test_lp_br_acceptance():
    rng = np.random.default_rng(4242)
    with criterion("LP class count, BR model count, LR separable >= 0.98"):
        for _ in range(20):
            sets = []
            for _ in range(int(rng.integers(5, 60))):
                s = {l for l in range(6) if rng.random() < 0.35} or {int(rng.integers(6))}
                sets.append(frozenset(s))
            _, mapping = lp_encode(sets)
            assert len(mapping) == len(set(sets))

        x = rng.normal(size=(120, 2)).astype(np.float32)
        y = np.stack(
            [(x[:, 0] > 0).astype(int), (x[:, 1] > 0).astype(int), np.ones(120, dtype=int)],
            axis=1,
        )
        model = br_train(x, y, epochs=10)
        assert len(model) == 3

        y_bin = (x[:, 0] + x[:, 1] > 0).astype(int)
        x_sep = x.copy()
        x_sep[y_bin == 1] += 1.5
        x_sep[y_bin == 0] -= 1.5
        lr_model = logreg_train(x_sep, y_bin, "binary", seed=1)
        assert (lr_model.predict(x_sep) == y_bin).mean() >= 0.98
