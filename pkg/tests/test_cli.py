import json

import numpy as np
import pytest

from essvec.cli import main, parse_config_file
from essvec.corpus import load_corpus
from essvec.model_io import load_embeddings, load_model


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def workspace(tmp_path, capsys):
    """A tiny synthetic corpus with a built vocabulary."""
    corpus = tmp_path / "corpus.jsonl"
    vocab = tmp_path / "vocab.txt"
    assert run("make-synthetic", "--num-topics", 2, "--docs-per-topic", 6,
               "--doc-length", 25, "--vocab-size", 60,
               "--background-mass", 0.4, "--seed", 5,
               "--out", corpus) == 0
    assert run("build-vocab", "--corpus", corpus, "--min-count", 1,
               "--out", vocab) == 0
    capsys.readouterr()
    return tmp_path


def train_tiny(ws, out_name="model.evm", seed=3, epochs=2, extra=()):
    return run("train-ev", "--corpus", ws / "corpus.jsonl",
               "--vocab", ws / "vocab.txt", "--out", ws / out_name,
               "--embedding-dim", 4, "--f-hidden", "6", "--g-hidden", "6",
               "--h-hidden", "6", "--epochs", epochs, "--batch-size", 4,
               "--seed", seed, *extra)


class TestMakeSyntheticAndVocab:
    def test_outputs_exist(self, workspace):
        docs = load_corpus(workspace / "corpus.jsonl")
        assert len(docs) == 12
        labels = (workspace / "corpus.jsonl.labels.tsv").read_text()
        assert labels.startswith("id\ttopic")
        assert len(labels.strip().split("\n")) == 13

    def test_seed_required(self, tmp_path, capsys):
        code = run("make-synthetic", "--out", tmp_path / "c.jsonl")
        assert code == 2
        assert "seed" in capsys.readouterr().err

    def test_rerun_is_byte_identical(self, workspace):
        blob = (workspace / "corpus.jsonl").read_bytes()
        assert run("make-synthetic", "--num-topics", 2,
                   "--docs-per-topic", 6, "--doc-length", 25,
                   "--vocab-size", 60, "--background-mass", 0.4,
                   "--seed", 5, "--out", workspace / "again.jsonl") == 0
        assert (workspace / "again.jsonl").read_bytes() == blob


class TestTrainEncode:
    def test_train_writes_model_and_config(self, workspace, capsys):
        assert train_tiny(workspace) == 0
        model = load_model(workspace / "model.evm")
        assert model.architecture.embedding_dim == 4
        resolved = (workspace / "model.evm.config").read_text()
        assert "seed = 3" in resolved
        assert "epochs = 2" in resolved

    def test_history_sidecar(self, workspace):
        assert train_tiny(workspace, extra=("--history",
                                            workspace / "h.tsv")) == 0
        lines = (workspace / "h.tsv").read_text().strip().split("\n")
        assert len(lines) == 3  # header + 2 epochs

    def test_training_deterministic(self, workspace):
        assert train_tiny(workspace, "a.evm") == 0
        assert train_tiny(workspace, "b.evm") == 0
        assert (workspace / "a.evm").read_bytes() == \
            (workspace / "b.evm").read_bytes()

    def test_encode_round_trips_ids(self, workspace, capsys):
        assert train_tiny(workspace) == 0
        out = workspace / "emb.jsonl"
        assert run("encode", "--model", workspace / "model.evm",
                   "--vocab", workspace / "vocab.txt",
                   "--corpus", workspace / "corpus.jsonl",
                   "--out", out) == 0
        ids, mat = load_embeddings(out)
        docs = load_corpus(workspace / "corpus.jsonl")
        assert ids == [d.id for d in docs]
        assert mat.shape == (12, 4)

    def test_encode_rejects_mismatched_vocab(self, workspace, tmp_path,
                                             capsys):
        assert train_tiny(workspace) == 0
        other_vocab = tmp_path / "other.txt"
        assert run("build-vocab", "--corpus", workspace / "corpus.jsonl",
                   "--min-count", 2, "--out", other_vocab) == 0
        code = run("encode", "--model", workspace / "model.evm",
                   "--vocab", other_vocab,
                   "--corpus", workspace / "corpus.jsonl",
                   "--out", workspace / "emb.jsonl")
        assert code == 2
        assert not (workspace / "emb.jsonl").exists()

    def test_divergence_exit_code(self, workspace, capsys):
        code = train_tiny(workspace, "diverged.evm",
                          extra=("--learning-rate", "1e12"))
        assert code == 3
        assert not (workspace / "diverged.evm").exists()
        assert "diverged" in capsys.readouterr().err

    def test_train_dev_needs_clean_field(self, workspace, capsys):
        code = run("train-dev", "--corpus", workspace / "corpus.jsonl",
                   "--vocab", workspace / "vocab.txt",
                   "--out", workspace / "dev.evm", "--seed", 1)
        assert code == 2
        assert "clean" in capsys.readouterr().err


class TestSummarizeRouge:
    def test_summarize_pipeline(self, workspace, capsys):
        assert train_tiny(workspace) == 0
        docs = load_corpus(workspace / "corpus.jsonl")
        manifest = workspace / "clusters.json"
        manifest.write_text(json.dumps({
            "c0": [d.id for d in docs[:6]],
            "c1": [d.id for d in docs[6:]],
        }))
        out = workspace / "summaries.json"
        assert run("summarize", "--model", workspace / "model.evm",
                   "--vocab", workspace / "vocab.txt",
                   "--corpus", workspace / "corpus.jsonl",
                   "--manifest", manifest, "--budget-kind", "words",
                   "--budget-limit", 30, "--out", out) == 0
        summaries = json.loads(out.read_text())
        assert [s["cluster_id"] for s in summaries] == ["c0", "c1"]
        for s in summaries:
            assert s["summary"]
            assert all(x["score"] >= 0.0 for x in s["sentences"])

    def test_summarize_unknown_doc_in_manifest(self, workspace, capsys):
        assert train_tiny(workspace) == 0
        manifest = workspace / "clusters.json"
        manifest.write_text(json.dumps({"c0": ["nope"]}))
        code = run("summarize", "--model", workspace / "model.evm",
                   "--vocab", workspace / "vocab.txt",
                   "--corpus", workspace / "corpus.jsonl",
                   "--manifest", manifest,
                   "--out", workspace / "summaries.json")
        assert code == 2
        assert not (workspace / "summaries.json").exists()

    def test_rouge_command(self, tmp_path, capsys):
        cand = tmp_path / "cand.txt"
        ref = tmp_path / "ref.txt"
        cand.write_text("a b c\n\nx y\n")
        ref.write_text("a b\n\nx y\n")
        assert run("rouge", "--candidate", cand, "--references",
                   str(ref)) == 0
        out = capsys.readouterr().out
        lines = out.strip().split("\n")
        assert lines[0] == "variant\tprecision\trecall\tf"
        scores = {parts[0]: [float(x) for x in parts[1:]]
                  for parts in (l.split("\t") for l in lines[1:])}
        # block 2 is identical, block 1 matches 2 of 3 candidate unigrams
        assert scores["rouge1"][0] == pytest.approx((2 / 3 + 1.0) / 2)
        assert scores["rouge1"][1] == pytest.approx(1.0)

    def test_rouge_block_count_mismatch(self, tmp_path, capsys):
        cand = tmp_path / "cand.txt"
        ref = tmp_path / "ref.txt"
        cand.write_text("a b\n")
        ref.write_text("a b\n\nmore\n")
        assert run("rouge", "--candidate", cand, "--references",
                   str(ref)) == 2


class TestSentimentCv:
    def _dataset(self, workspace):
        docs = load_corpus(workspace / "corpus.jsonl")
        path = workspace / "labeled.jsonl"
        with open(path, "w") as fh:
            for d in docs:
                label = "pos" if d.id.startswith("t00") else "neg"
                fh.write(json.dumps({"id": d.id, "text": d.text,
                                     "label": label}) + "\n")
        return path

    def test_bow_and_model_features(self, workspace, capsys):
        assert train_tiny(workspace) == 0
        dataset = self._dataset(workspace)
        out = workspace / "cv.tsv"
        assert run("sentiment-cv", "--dataset", dataset,
                   "--vocab", workspace / "vocab.txt",
                   "--model", workspace / "model.evm",
                   "--features", "bow,ev,bow+ev", "--k", 3,
                   "--seed", 2, "--out", out) == 0
        table = out.read_text().strip().split("\n")
        assert table[0].split("\t")[0] == "featurizer"
        names = [l.split("\t")[0] for l in table[1:]]
        assert names == ["bow", "ev", "bow+ev"]

    def test_ev_features_require_a_model(self, workspace, capsys):
        dataset = self._dataset(workspace)
        code = run("sentiment-cv", "--dataset", dataset,
                   "--vocab", workspace / "vocab.txt",
                   "--features", "ev", "--k", 3, "--seed", 2)
        assert code == 2


class TestGradcheck:
    def test_passes_at_default_tolerance(self, capsys):
        assert run("gradcheck", "--seed", 1) == 0
        out = capsys.readouterr().out
        assert "ev" in out and "dev" in out

    def test_fails_at_absurd_tolerance(self, capsys):
        assert run("gradcheck", "--seed", 1, "--tolerance", "1e-18") == 1

    def test_kind_selection(self, capsys):
        assert run("gradcheck", "--seed", 1, "--kind", "ev") == 0
        out = capsys.readouterr().out
        assert "dev" not in out


class TestConfigFile:
    def test_parse_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nepochs = 7\nembedding-dim = 5\n\n"
                       "seed=9\n")
        values = parse_config_file(cfg)
        assert values == {"epochs": "7", "embedding_dim": "5",
                          "seed": "9"}

    def test_flags_beat_config_beats_defaults(self, workspace, capsys):
        cfg = workspace / "run.cfg"
        cfg.write_text("epochs = 5\nbatch-size = 4\nseed = 3\n"
                       "embedding-dim = 4\nf-hidden = 6\ng-hidden = 6\n"
                       "h-hidden = 6\n")
        assert run("train-ev", "--config", cfg,
                   "--corpus", workspace / "corpus.jsonl",
                   "--vocab", workspace / "vocab.txt",
                   "--out", workspace / "m.evm", "--epochs", 1) == 0
        resolved = (workspace / "m.evm.config").read_text()
        assert "epochs = 1" in resolved        # flag wins
        assert "batch_size = 4" in resolved    # config wins over default
        assert "learning_rate = 0.001" in resolved  # default

    def test_resolved_config_is_reusable(self, workspace, capsys):
        assert train_tiny(workspace, "a.evm") == 0
        cfg = workspace / "a.evm.config"
        assert run("train-ev", "--config", cfg,
                   "--out", workspace / "b.evm") == 0
        assert (workspace / "a.evm").read_bytes() == \
            (workspace / "b.evm").read_bytes()

    def test_bad_config_line(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("no equals sign\n")
        code = run("train-ev", "--config", cfg, "--corpus", "x",
                   "--vocab", "y", "--out", "z")
        assert code == 2
