"""Optional checkpoint-backend test: builds a tiny randomly initialized
BERT locally (no downloads) and exports through it."""

import os

import numpy as np
import pytest

torch = pytest.importorskip("torch")
transformers = pytest.importorskip("transformers")

from transformers import BertConfig, BertModel, BertTokenizerFast  # noqa: E402

from embexport.export import ExportJob, export_sentences  # noqa: E402

engine_data = pytest.importorskip("hierlabel.data")

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")


@pytest.fixture(scope="module")
def tiny_checkpoint(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("tinybert")
    vocab = [
        "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
        "hello", "world", "nice", "day", "another", "entirely",
        "second", "sentence", "here",
    ]
    vocab_file = tmp / "vocab.txt"
    vocab_file.write_text("\n".join(vocab))
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=True)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=16,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=64,
    )
    torch.manual_seed(0)
    model = BertModel(config)
    ckpt = tmp / "ckpt"
    model.save_pretrained(ckpt)
    tokenizer.save_pretrained(ckpt)
    return str(ckpt)


def test_hf_sentence_export_validates(tmp_path, tiny_checkpoint):
    data = tmp_path / "d.txt"
    data.write_text(
        "#schema=14\n"
        "h1\tOther\tHello nice world. second sentence here!\n"
        "h2\tOther\tAnother day entirely\n",
        encoding="utf-8",
    )
    out = tmp_path / "hf.semb"
    summary = export_sentences(
        ExportJob("sentence-encoder", f"hf:{tiny_checkpoint}", str(data), str(out))
    )
    assert summary["dim"] == 16
    store = engine_data.SentenceEmbeddingStore.load(out)
    assert store.sentence_count("h1") == 2
    assert np.isfinite(store.lookup("h1", 0)).all()
