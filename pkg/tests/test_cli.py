import itertools
import json
from pathlib import Path

import numpy as np
import pytest

from feattrans import affinity as aff
from feattrans.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Synthetic two-member dataset plus trained models for every ordered pair."""
    root = tmp_path_factory.mktemp("ws")
    data = root / "data"
    assert main([
        "synth", "--out", str(data), "--n", "120", "--dim", "16",
        "--latent-dim", "8", "--clusters", "4", "--noise", "0.01",
        "--seed", "1", "--members", "fx:orthogonal_linear,fy:orthogonal_linear",
    ]) == 0
    cfg = str(data / "config.json")
    models = root / "models"
    for s, t in itertools.product(("fx", "fy"), repeat=2):
        assert main([
            "train", "--config", cfg, "--source", s, "--target", t,
            "--latent", "8", "--lr", "1e-3", "--epochs", "15",
            "--patience", "15", "--seed", "0", "--out", str(models),
        ]) == 0
    return root


def test_synth_outputs_exist(workspace):
    data = workspace / "data"
    for name in ("fx", "fy"):
        assert (data / f"{name}.vec").exists()
        assert (data / f"{name}.ids").exists()
    assert (data / "gt.tsv").exists()
    registry = json.loads((data / "config.json").read_text())
    assert set(registry["features"]) == {"fx", "fy"}


def test_synth_idempotent(workspace, tmp_path):
    again = tmp_path / "again"
    assert main([
        "synth", "--out", str(again), "--n", "120", "--dim", "16",
        "--latent-dim", "8", "--clusters", "4", "--noise", "0.01",
        "--seed", "1", "--members", "fx:orthogonal_linear,fy:orthogonal_linear",
    ]) == 0
    for name in ("fx.vec", "fx.ids", "gt.tsv"):
        assert (again / name).read_bytes() == (workspace / "data" / name).read_bytes()


def test_train_produces_loadable_model(workspace):
    from feattrans import translator

    model = translator.load_model(workspace / "models" / "fx2fy.haet")
    assert model.kind == "hae"
    assert model.source_name == "fx"
    log = (workspace / "models" / "fx2fy.trainlog.csv").read_text().splitlines()
    assert log[0].startswith("epoch,")
    assert len(log) == 16  # header + 15 epochs


def test_train_mlp_kind(workspace, tmp_path):
    from feattrans import translator

    cfg = str(workspace / "data" / "config.json")
    assert main([
        "train", "--config", cfg, "--source", "fx", "--target", "fy",
        "--kind", "mlp", "--lr", "1e-3", "--epochs", "3", "--patience", "3",
        "--out", str(tmp_path),
    ]) == 0
    assert translator.load_model(tmp_path / "fx2fy.haet").kind == "mlp_baseline"


def test_train_missing_input_path_names_it(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"features": {
        "fx": {"vec": str(tmp_path / "nope.vec"), "ids": str(tmp_path / "nope.ids")},
        "fy": {"vec": str(tmp_path / "nope.vec"), "ids": str(tmp_path / "nope.ids")},
    }}))
    code = main(["train", "--config", str(cfg), "--source", "fx", "--target", "fy",
                 "--out", str(tmp_path)])
    assert code == 3
    assert "nope.vec" in capsys.readouterr().err


def test_translate(workspace, tmp_path):
    cfg = str(workspace / "data" / "config.json")
    assert main([
        "translate", "--config", cfg, "--model", str(workspace / "models" / "fx2fy.haet"),
        "--source", "fx", "--out", str(tmp_path),
    ]) == 0
    assert (tmp_path / "fx2fy.vec").exists()


def test_eval_reports_difference(workspace, tmp_path, capsys):
    cfg = str(workspace / "data" / "config.json")
    assert main([
        "eval", "--config", cfg, "--model", str(workspace / "models" / "fx2fy.haet"),
        "--source", "fx", "--target", "fy", "--out", str(tmp_path),
    ]) == 0
    out = capsys.readouterr().out
    assert "target mAP(%)" in out
    assert "translated mAP(%)" in out
    assert "difference" in out
    assert (tmp_path / "fx2fy.eval.csv").exists()


def test_affinity_writes_four_matrices(workspace, tmp_path):
    cfg = str(workspace / "data" / "config.json")
    assert main([
        "affinity", "--config", cfg, "--models-dir", str(workspace / "models"),
        "--jobs", "2", "--out", str(tmp_path),
    ]) == 0
    for label in "MRCU":
        m = aff.read_matrix_csv(tmp_path / f"{label}.csv", kind=aff.DIRECTED_M)
        assert m.values.shape == (2, 2)
    u = aff.read_matrix_csv(tmp_path / "U.csv", kind=aff.UNDIRECTED_U)
    assert np.array_equal(u.values, u.values.T)


def test_affinity_missing_model(workspace, tmp_path, capsys):
    cfg = str(workspace / "data" / "config.json")
    code = main([
        "affinity", "--config", cfg, "--models-dir", str(tmp_path / "empty"),
        "--out", str(tmp_path),
    ])
    assert code == 3
    assert "no trained model" in capsys.readouterr().err


def test_mst_from_affinity(workspace, tmp_path):
    cfg = str(workspace / "data" / "config.json")
    matrices = tmp_path / "matrices"
    assert main([
        "affinity", "--config", cfg, "--models-dir", str(workspace / "models"),
        "--out", str(matrices),
    ]) == 0
    assert main(["mst", "--input", str(matrices / "U.csv"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "mst.dot").exists()
    payload = json.loads((tmp_path / "mst.json").read_text())
    assert len(payload["edges"]) == 1


def test_mst_rejects_asymmetric(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(",a,b\na,0.0,0.5\nb,0.25,0.0\n")
    assert main(["mst", "--input", str(bad), "--out", str(tmp_path)]) == 3


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["train"])  # missing required flags
    assert exc.value.code == 2


def test_train_idempotent_bytes(workspace, tmp_path):
    cfg = str(workspace / "data" / "config.json")
    for out in ("one", "two"):
        assert main([
            "train", "--config", cfg, "--source", "fx", "--target", "fy",
            "--latent", "8", "--lr", "1e-3", "--epochs", "5",
            "--patience", "5", "--seed", "0", "--out", str(tmp_path / out),
        ]) == 0
    assert (tmp_path / "one" / "fx2fy.haet").read_bytes() == (
        tmp_path / "two" / "fx2fy.haet"
    ).read_bytes()
