"""End-to-end CLI runs through main(argv): outputs, files and exit codes."""

import json

import numpy as np
import pytest

from moltiers.cli import main

SMALL_CORPUS = "CCO ethanol\nCC(=O)O acetic-acid\nO=Cc1ccc(O)c(OC)c1 vanillin\n"


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "mols.smi"
    path.write_text(SMALL_CORPUS)
    return str(path)


@pytest.fixture
def trained_dir(tmp_path, corpus_file):
    out = tmp_path / "run"
    code = main([
        "train", "--input", corpus_file, "--out", str(out),
        "--dims", "3,3,3", "--layers", "2", "--epochs", "2", "--seed", "7",
    ])
    assert code == 0
    return out


def test_parse_reports_each_molecule(corpus_file, capsys):
    assert main(["parse", "--input", corpus_file]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "ethanol: atoms=9 bonds=8 rings=0 formula=C2H6O"
    assert lines[1] == "acetic-acid: atoms=8 bonds=7 rings=0 formula=C2H4O2"
    assert lines[2] == "vanillin: atoms=19 bonds=19 rings=1 formula=C8H8O3"


def test_parse_flags_bad_lines(tmp_path, capsys):
    path = tmp_path / "bad.smi"
    path.write_text("CCO fine\nC@C broken\n")
    assert main(["parse", "--input", str(path)]) == 1
    captured = capsys.readouterr()
    assert "line 2" in captured.err
    assert "fine" in captured.out


def test_missing_input_file_exits_2(tmp_path, capsys):
    assert main(["parse", "--input", str(tmp_path / "absent.smi")]) == 2
    assert "i/o error" in capsys.readouterr().err


def test_partition_json_structure(corpus_file, tmp_path):
    out = tmp_path / "partition.json"
    assert main(["partition", "--input", corpus_file, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    by_name = {m["name"]: m for m in doc["molecules"]}
    vanillin = by_name["vanillin"]
    assert [g["kind"] for g in vanillin["groups"]] == ["FG", "FG", "FG", "AromaticRing"]
    assert [g["formula"] for g in vanillin["groups"]] == ["CHO", "HO", "CH3O", "C6H3"]
    membership = np.array(vanillin["membership"]["rows"])
    assert membership.shape == (19, 4)
    assert np.allclose(membership.sum(axis=1), 1.0)
    # degenerate single-group molecule still emits a valid column
    acetic = by_name["acetic-acid"]
    assert len(acetic["groups"]) == 1
    assert np.array(acetic["membership"]["rows"]).shape == (8, 1)


def test_partition_writes_to_stdout_by_default(corpus_file, capsys):
    assert main(["partition", "--input", corpus_file]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["molecules"]) == 3


def test_train_writes_checkpoint_and_trace(trained_dir, capsys):
    assert (trained_dir / "checkpoint.json").exists()
    trace = (trained_dir / "trace.csv").read_text()
    lines = trace.strip().splitlines()
    assert lines[0] == "epoch,loss"
    assert len(lines) == 3
    assert lines[1].startswith("1,")


def test_train_zero_epochs_header_only(tmp_path, corpus_file):
    out = tmp_path / "zero"
    code = main([
        "train", "--input", corpus_file, "--out", str(out),
        "--dims", "2,2,2", "--layers", "1", "--epochs", "0",
    ])
    assert code == 0
    assert (out / "trace.csv").read_text() == "epoch,loss\n"
    assert (out / "checkpoint.json").exists()


def test_train_vgae_trace_format(tmp_path, corpus_file):
    out = tmp_path / "vrun"
    code = main([
        "train", "--input", corpus_file, "--out", str(out), "--model", "vgae",
        "--dims", "2,2,2", "--layers", "1", "--epochs", "2", "--beta", "0.5",
    ])
    assert code == 0
    lines = (out / "trace.csv").read_text().strip().splitlines()
    assert lines[0] == "epoch,elbo,kl"
    assert len(lines) == 3
    kl_values = [float(line.split(",")[2]) for line in lines[1:]]
    assert all(v >= 0.0 for v in kl_values)
    doc = json.loads((out / "checkpoint.json").read_text())
    assert doc["model_kind"] == "vgae"


def test_train_rejects_bad_dims(corpus_file, tmp_path, capsys):
    with pytest.raises(SystemExit) as err:
        main(["train", "--input", corpus_file, "--out", str(tmp_path / "x"),
              "--dims", "4,4"])
    assert err.value.code == 2
    assert "expected D1,D2,D3" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["train", "--input", corpus_file, "--out", str(tmp_path / "x"),
              "--dims", "4,0,4"])


def test_train_on_unparseable_corpus_exits_1(tmp_path, capsys):
    path = tmp_path / "bad.smi"
    path.write_text("C@C nope\n")
    assert main(["train", "--input", str(path), "--out", str(tmp_path / "o")]) == 1


def test_embed_graph_tier(trained_dir, corpus_file, tmp_path):
    out = tmp_path / "emb.json"
    code = main([
        "embed", str(trained_dir / "checkpoint.json"),
        "--input", corpus_file, "--out", str(out),
    ])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["tier"] == "graph"
    assert len(doc["molecules"]) == 3
    for mol in doc["molecules"]:
        assert mol["embeddings"]["shape"] == [1, 3]


def test_embed_node_and_group_tiers(trained_dir, corpus_file, tmp_path):
    out = tmp_path / "emb.json"
    code = main([
        "embed", str(trained_dir / "checkpoint.json"),
        "--input", corpus_file, "--tier", "node", "--out", str(out),
    ])
    assert code == 0
    doc = json.loads(out.read_text())
    by_name = {m["name"]: m for m in doc["molecules"]}
    assert by_name["vanillin"]["embeddings"]["shape"] == [19, 3]
    assert len(by_name["vanillin"]["elements"]) == 19

    code = main([
        "embed", str(trained_dir / "checkpoint.json"),
        "--input", corpus_file, "--tier", "group", "--out", str(out),
    ])
    assert code == 0
    doc = json.loads(out.read_text())
    by_name = {m["name"]: m for m in doc["molecules"]}
    assert by_name["vanillin"]["embeddings"]["shape"] == [4, 3]
    assert by_name["vanillin"]["group_kinds"] == ["FG", "FG", "FG", "AromaticRing"]


def test_embed_with_corrupt_checkpoint_exits_4(tmp_path, corpus_file, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["embed", str(bad), "--input", corpus_file]) == 4
    assert "checkpoint error" in capsys.readouterr().err


def test_interp_output_structure(trained_dir, tmp_path):
    out = tmp_path / "interp.json"
    code = main([
        "interp", str(trained_dir / "checkpoint.json"),
        "CCO", "CC(=O)O", "--steps", "4", "--out", str(out),
    ])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["steps"] == 4
    assert len(doc["vectors"]) == 4
    alphas = [d["alpha"] for d in doc["decoded"]]
    assert alphas == [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]
    assert doc["vectors"][0] == doc["endpoints"]["a"]["embedding"]
    assert doc["vectors"][-1] == doc["endpoints"]["b"]["embedding"]
    for step in doc["decoded"]:
        assert 0.0 < step["mean_edge_probability"] < 1.0
        assert len(step["top_edges"]) <= 10
        probs = [e["probability"] for e in step["top_edges"]]
        assert probs == sorted(probs, reverse=True)


def test_interp_bad_endpoint_exits_1(trained_dir, capsys):
    code = main(["interp", str(trained_dir / "checkpoint.json"), "C@C", "CCO"])
    assert code == 1
    assert "cannot parse endpoint" in capsys.readouterr().err


def test_interp_rejects_single_step(trained_dir, capsys):
    with pytest.raises(SystemExit):
        main(["interp", str(trained_dir / "checkpoint.json"), "CCO", "CC", "--steps", "1"])
    assert "steps must be at least 2" in capsys.readouterr().err


def test_unknown_subcommand_exits_via_argparse():
    with pytest.raises(SystemExit):
        main(["compress", "--input", "x"])
