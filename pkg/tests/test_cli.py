"""
Tests for the rptm command-line interface.
"""

import json

import pytest

from rptm import __version__
from rptm.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from rptm.evalrank import load_embeddings, read_split
from rptm.learn import load_checkpoint
from rptm.relational import DatasetManifest, load_matrix
from rptm.tabular import read_csv

SMALL_RUN = {
    "train": {"epochs": 2, "batch_size": 4, "batch_p": 2, "batch_k": 2,
              "hidden_dim": 8, "embed_dim": 4},
    "feature": {"max_features": 2000},
}
SMALL_SYNTH = {"n_ids": 2, "poses_per_id": 2, "images_per_pose": 2, "image_size": 96}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Synthetic dataset, config and relational matrix built through the CLI"""
    root = tmp_path_factory.mktemp("cli")
    (root / "spec.json").write_text(json.dumps(SMALL_SYNTH))
    (root / "run.yaml").write_text(
        "train:\n"
        + "".join(f"  {k}: {v}\n" for k, v in SMALL_RUN["train"].items())
        + "feature:\n  max_features: 2000\n"
    )
    data = root / "data"
    assert main(["-q", "synth", "--spec", str(root / "spec.json"), "--out", str(data)]) == 0
    assert main(["-q", "--threads", "2", "matrix", "--manifest", str(data / "manifest.csv"),
                 "--config", str(root / "run.yaml"), "--out", str(root / "matrix.bin")]) == 0
    return root


def train_args(root, out, history):
    data = root / "data"
    return ["-q", "train", "--manifest", str(data / "manifest.csv"),
            "--matrix", str(root / "matrix.bin"), "--config", str(root / "run.yaml"),
            "--out", str(out), "--history", str(history)]


class TestBasics:
    """Test help, version and exit codes"""

    def test_help(self, capsys):
        assert main(["--help"]) == EXIT_OK
        assert "Relation preserving triplet mining" in capsys.readouterr().out

    def test_version(self, capsys):
        assert main(["--version"]) == EXIT_OK
        assert __version__ in capsys.readouterr().out

    def test_config_golden(self, capsys, data_dir):
        assert main(["config"]) == EXIT_OK
        assert capsys.readouterr().out == (data_dir / "default_config.json").read_text()

    def test_config_validates_document(self, tmp_path, capsys):
        (tmp_path / "bad.json").write_text('{"gms": {"alpha": -1}}')
        assert main(["config", "--config", str(tmp_path / "bad.json")]) == EXIT_DATA
        assert "gms.alpha" in capsys.readouterr().err

    def test_missing_option(self, capsys):
        assert main(["matrix"]) == EXIT_USAGE
        assert "--manifest" in capsys.readouterr().err

    def test_unknown_command(self):
        assert main(["frobnicate"]) == EXIT_USAGE

    def test_missing_file(self, tmp_path, capsys):
        code = main(["matrix", "--manifest", str(tmp_path / "absent.csv"),
                     "--out", str(tmp_path / "m.bin")])
        assert code == EXIT_DATA
        assert "absent.csv" in capsys.readouterr().err


class TestPipeline:
    """synth, matrix, mine, train, eval and rerank end to end"""

    def test_dataset_and_matrix(self, workspace):
        manifest = DatasetManifest.load(workspace / "data" / "manifest.csv")
        assert len(manifest) == 8
        mx = load_matrix(workspace / "matrix.bin")
        assert mx.manifest_hash == manifest.content_hash()
        mx.check_invariants(manifest.ids)

    def test_mine(self, workspace):
        out = workspace / "positives.csv"
        code = main(["-q", "mine", "--manifest", str(workspace / "data" / "manifest.csv"),
                     "--matrix", str(workspace / "matrix.bin"), "--policy", "max",
                     "--out", str(out)])
        assert code == EXIT_OK
        rows = read_csv(out, ("anchor", "positive", "count", "tau"))
        assert [r[0] for r in rows] == [str(i) for i in range(8)]

    def test_mine_writes_triplets(self, workspace, tmp_path):
        data = workspace / "data"
        manifest = DatasetManifest.load(data / "manifest.csv")
        mx = load_matrix(workspace / "matrix.bin")
        out = tmp_path / "triplets.csv"
        code = main(["-q", "mine", "--manifest", str(data / "manifest.csv"),
                     "--matrix", str(workspace / "matrix.bin"), "--config",
                     str(workspace / "run.yaml"), "--out", str(tmp_path / "positives.csv"),
                     "--triplets-out", str(out)])
        assert code == EXIT_OK
        rows = [tuple(int(v) for v in r) for r in read_csv(out, ("anchor", "positive", "negative"))]
        assert rows
        ids = manifest.ids
        for anchor, positive, negative in rows:
            assert anchor != positive
            assert ids[anchor] == ids[positive]
            assert ids[anchor] != ids[negative]
            assert mx.counts[anchor, positive] > 0

    def test_mine_triplets_on_checkpoint(self, workspace, tmp_path):
        data = workspace / "data"
        ckpt = tmp_path / "model.bin"
        assert main(train_args(workspace, ckpt, tmp_path / "h.csv")) == EXIT_OK
        out = tmp_path / "triplets.csv"
        code = main(["-q", "mine", "--manifest", str(data / "manifest.csv"),
                     "--matrix", str(workspace / "matrix.bin"), "--config",
                     str(workspace / "run.yaml"), "--checkpoint", str(ckpt),
                     "--out", str(tmp_path / "positives.csv"), "--triplets-out", str(out)])
        assert code == EXIT_OK
        assert read_csv(out, ("anchor", "positive", "negative"))

    def test_mine_rejects_foreign_matrix(self, workspace, tmp_path):
        (tmp_path / "other.csv").write_text("path,id\na.pgm,x\nb.pgm,x\n")
        code = main(["-q", "mine", "--manifest", str(tmp_path / "other.csv"),
                     "--matrix", str(workspace / "matrix.bin"), "--out",
                     str(tmp_path / "p.csv")])
        assert code == EXIT_DATA

    def test_train_eval_rerank(self, workspace, tmp_path):
        data = workspace / "data"
        ckpt = tmp_path / "model.bin"
        history = tmp_path / "history.csv"
        assert main(train_args(workspace, ckpt, history)) == EXIT_OK
        model, manifest_hash = load_checkpoint(ckpt)
        assert model.dims == (64, 8, 4, 2)
        assert manifest_hash == DatasetManifest.load(data / "manifest.csv").content_hash()
        rows = read_csv(history, ("epoch", "e_tri", "e_ent", "total", "active_triplets", "lr"))
        assert [r[0] for r in rows] == ["0", "1"]

        metrics = tmp_path / "metrics.csv"
        embeddings = tmp_path / "emb.bin"
        assert main(["-q", "eval", "--checkpoint", str(ckpt),
                     "--manifest", str(data / "manifest.csv"),
                     "--split", str(data / "split.csv"), "--out", str(metrics),
                     "--embeddings-out", str(embeddings)]) == EXIT_OK
        values = dict(read_csv(metrics, ("metric", "value")))
        assert list(values) == ["mAP", "cmc@1", "cmc@5", "cmc@10"]
        assert all(0.0 <= float(v) <= 1.0 for v in values.values())
        assert load_embeddings(embeddings).shape == (8, 4)
        assert read_split(tmp_path / "emb.csv") == read_split(data / "split.csv")

        reranked = tmp_path / "reranked.csv"
        assert main(["-q", "rerank", "--embeddings", str(embeddings),
                     "--ids", str(tmp_path / "emb.csv"), "--k1", "4", "--k2", "2",
                     "--eta", "1.0", "--out", str(reranked)]) == EXIT_OK
        assert dict(read_csv(reranked, ("metric", "value"))) == values

    def test_training_is_reproducible(self, workspace, tmp_path):
        for name in ("a", "b"):
            assert main(train_args(workspace, tmp_path / f"{name}.bin",
                                   tmp_path / f"{name}.csv")) == EXIT_OK
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
        assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()

    def test_rerun_from_scratch_gives_identical_metrics(self, workspace, tmp_path):
        outputs = []
        for name in ("first", "second"):
            root = tmp_path / name
            data = root / "data"
            assert main(["-q", "synth", "--spec", str(workspace / "spec.json"),
                         "--out", str(data)]) == EXIT_OK
            assert main(["-q", "matrix", "--manifest", str(data / "manifest.csv"),
                         "--config", str(workspace / "run.yaml"),
                         "--out", str(root / "matrix.bin")]) == EXIT_OK
            assert main(["-q", "train", "--manifest", str(data / "manifest.csv"),
                         "--matrix", str(root / "matrix.bin"),
                         "--config", str(workspace / "run.yaml"), "--out", str(root / "model.bin"),
                         "--history", str(root / "history.csv")]) == EXIT_OK
            assert main(["-q", "eval", "--checkpoint", str(root / "model.bin"),
                         "--manifest", str(data / "manifest.csv"),
                         "--split", str(data / "split.csv"),
                         "--out", str(root / "metrics.csv")]) == EXIT_OK
            outputs.append((root / "metrics.csv").read_bytes())
        assert outputs[0] == outputs[1]

    def test_invalid_rerank_coefficients(self, workspace, tmp_path):
        data = workspace / "data"
        ckpt = tmp_path / "model.bin"
        assert main(train_args(workspace, ckpt, tmp_path / "h.csv")) == EXIT_OK
        code = main(["-q", "eval", "--checkpoint", str(ckpt),
                     "--manifest", str(data / "manifest.csv"),
                     "--split", str(data / "split.csv"), "--k1", "2", "--k2", "5",
                     "--rerank", "--out", str(tmp_path / "m.csv")])
        assert code == EXIT_DATA


class TestExperiment:
    """Test the experiment command"""

    def test_lambda_sweep(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(["-q", "experiment", "lambda-sweep", "--epochs", "1", "--seeds", "1",
                     "--out", str(out)])
        assert code == EXIT_OK
        rows = read_csv(out, ("arm", "seed", "mAP", "cmc@1", "cmc@5", "cmc@10",
                              "first_total", "final_total", "descent"))
        assert [r[0] for r in rows] == ["lambda_tri=0.5", "lambda_tri=1", "lambda_tri=2"]
