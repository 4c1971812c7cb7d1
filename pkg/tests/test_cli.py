import json
import shutil

import numpy as np
import pytest

from biascope.cli import main
from biascope.conll import read_documents
from biascope.store import open_store, read_vectors


def run(argv):
    return main([str(a) for a in argv])


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 2


def test_missing_input_exits_1(tmp_path, capsys):
    code = run(["stats", "--corpus", tmp_path / "nope.txt", "--out-dir", tmp_path])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_stats_cli(tmp_path, fixtures_dir):
    out = tmp_path / "stats.json"
    code = run(
        ["stats", "--corpus", fixtures_dir / "corpus_200.txt", "--out", out]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert set(doc["cooc"]) == {"M_M", "M_F", "F_M", "F_F"}
    assert doc["sentences_seen"] == 200
    assert doc["meta"]["cooc_counting"] == "all-pairs-per-sentence"


def test_stats_threads_identical_output(tmp_path, fixtures_dir):
    outs = []
    for threads in (1, 2, 8):
        out = tmp_path / f"stats_{threads}.json"
        assert run(
            [
                "stats", "--corpus", fixtures_dir / "corpus_200.txt",
                "--threads", threads, "--out", out,
            ]
        ) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_swap_text_cli(tmp_path):
    src = tmp_path / "in.txt"
    src.write_text("He met his brother .\nthe report arrived\n")
    out = tmp_path / "out.txt"
    assert run(["swap", "--in", src, "--out", out]) == 0
    assert out.read_text() == "She met her sister .\nthe report arrived\n"


def test_swap_conll_cli(tmp_path, fixtures_dir):
    out = tmp_path / "swapped.conll"
    code = run(
        [
            "swap", "--in", fixtures_dir / "docs_20.conll",
            "--format", "conll", "--out", out,
        ]
    )
    assert code == 0
    docs = read_documents(out)
    assert len(docs) == 20


def test_augment_cli(tmp_path, fixtures_dir):
    out = tmp_path / "augmented.conll"
    assert run(["augment", "--in", fixtures_dir / "docs_20.conll", "--out", out]) == 0
    docs = read_documents(out)
    assert len(docs) == 40
    assert docs[20].doc_id.endswith("_swapped")


def test_pca_cli(tmp_path, fixtures_dir):
    code = run(
        [
            "pca",
            "--pairs-a", fixtures_dir / "orig.cemb",
            "--pairs-b", fixtures_dir / "swapped.cemb",
            "--targets", fixtures_dir / "targets.jsonl",
            "--k", 6,
            "--out-dir", tmp_path,
        ]
    )
    assert code == 0
    scree = (tmp_path / "scree.csv").read_text().splitlines()
    assert scree[0] == "component_index,explained_ratio"
    assert len(scree) == 7
    ratios = [float(line.split(",")[1]) for line in scree[1:]]
    assert all(b <= a + 1e-12 for a, b in zip(ratios, ratios[1:]))
    scatter = (tmp_path / "scatter.csv").read_text().splitlines()
    assert scatter[0] == "sentence_id,surface,context_gender,pc1,pc2"
    genders = {line.split(",")[2] for line in scatter[1:]}
    assert genders == {"M", "F"}
    # context flips between the paired variants: 24 sentences x 2 rows
    assert len(scatter) - 1 == 48


def test_probe_train_eval_cli(tmp_path, fixtures_dir):
    model_path = tmp_path / "model.json"
    report_path = tmp_path / "train_report.json"
    code = run(
        [
            "probe-train", "--dataset", fixtures_dir / "probe_manifest.jsonl",
            "--nu", 0.4, "--out", model_path, "--report", report_path,
        ]
    )
    assert code == 0
    assert json.loads(report_path.read_text())["metadata"]["kkt_residual"] <= 1e-3
    eval_path = tmp_path / "probe_eval.json"
    code = run(
        [
            "probe-eval", "--model", model_path,
            "--dataset", fixtures_dir / "probe_manifest.jsonl",
            "--out", eval_path,
        ]
    )
    assert code == 0
    report = json.loads(eval_path.read_text())
    assert set(report["groups"]) == {"M", "F"}
    assert report["overall"] >= 90.0  # the synthetic gender signal is strong


def test_probe_tune_cli(tmp_path, fixtures_dir):
    model_path = tmp_path / "model.json"
    report_path = tmp_path / "tuning.json"
    code = run(
        [
            "probe-train", "--dataset", fixtures_dir / "probe_manifest.jsonl",
            "--tune", "--grid", "0.2,0.4", "--out", model_path, "--report", report_path,
        ]
    )
    assert code == 0
    tuning = json.loads(report_path.read_text())["tuning"]
    assert [t["nu"] for t in tuning] == [0.2, 0.4]


def test_neutralize_cli(tmp_path, fixtures_dir):
    out = tmp_path / "neutral.cemb"
    code = run(
        [
            "neutralize", "--store", fixtures_dir / "orig.cemb",
            "--swapped-store", fixtures_dir / "swapped.cemb", "--out", out,
        ]
    )
    assert code == 0
    neutral = open_store(out)
    orig = open_store(fixtures_dir / "orig.cemb")
    swapped = open_store(fixtures_dir / "swapped.cemb")
    assert neutral.layer == "avg(top,top)"
    for sid in list(orig.sentence_ids())[:3]:
        expected = (read_vectors(orig, sid) + read_vectors(swapped, sid)) / np.float32(2)
        assert read_vectors(neutral, sid).tobytes() == expected.tobytes()


def test_eval_cli(tmp_path, fixtures_dir):
    out = tmp_path / "report.json"
    csv_out = tmp_path / "report.csv"
    code = run(
        [
            "eval",
            "--gold-pro", fixtures_dir / "winobias_pro.txt",
            "--gold-anti", fixtures_dir / "winobias_anti.txt",
            "--pred-pro", fixtures_dir / "preds_pro.jsonl",
            "--pred-anti", fixtures_dir / "preds_anti.jsonl",
            "--condition-label", "fixture",
            "--out", out, "--csv", csv_out,
        ]
    )
    assert code == 0
    report = json.loads(out.read_text())
    # predictions are correct on 10/12 pro and 6/12 anti with zero-credit misses
    assert report["pro_f1"] == 83.3
    assert report["anti_f1"] == 50.0
    assert report["avg_f1"] == 66.7
    assert report["abs_diff"] == 33.3
    lines = csv_out.read_text().splitlines()
    assert lines[0] == "condition,subset,pro,anti,avg,abs_diff,p_value"
    assert lines[1].startswith("fixture,semantics,83.3,50.0,66.7,33.3,")


def audit_args(fixtures_dir, out):
    return [
        "audit",
        "--corpus", fixtures_dir / "corpus_200.txt",
        "--pairs-a", fixtures_dir / "orig.cemb",
        "--pairs-b", fixtures_dir / "swapped.cemb",
        "--targets", fixtures_dir / "targets.jsonl",
        "--probe-dataset", fixtures_dir / "probe_manifest.jsonl",
        "--k", 6,
        "--out", out,
    ]


def test_audit_cli_full_bundle(tmp_path, fixtures_dir):
    out = tmp_path / "audit.json"
    assert run(audit_args(fixtures_dir, out)) == 0
    doc = json.loads(out.read_text())
    assert {name: s["status"] for name, s in doc["sections"].items()} == {
        "corpus_stats": "ok", "subspace": "ok", "probe": "ok",
    }
    assert doc["sections"]["subspace"]["k"] == 6
    assert "explained_ratio_uncentered" in doc["sections"]["subspace"]


def test_audit_skips_missing_probe_dataset(tmp_path, fixtures_dir):
    out = tmp_path / "audit.json"
    args = [
        "audit", "--corpus", fixtures_dir / "corpus_200.txt", "--out", out,
    ]
    assert run(args) == 0
    doc = json.loads(out.read_text())
    assert doc["sections"]["probe"]["status"] == "skipped"
    assert doc["sections"]["subspace"]["status"] == "skipped"


def test_audit_strict_fails_on_corrupt_store(tmp_path, fixtures_dir, capsys):
    bad_dir = tmp_path / "bundle"
    bad_dir.mkdir()
    for name in (
        "corpus_200.txt", "orig.cemb", "orig.cemb.manifest",
        "swapped.cemb", "swapped.cemb.manifest", "targets.jsonl",
    ):
        shutil.copy(fixtures_dir / name, bad_dir / name)
    raw = bytearray((bad_dir / "orig.cemb").read_bytes())
    raw[:4] = b"ZZZZ"
    (bad_dir / "orig.cemb").write_bytes(bytes(raw))
    out = tmp_path / "audit.json"
    args = [
        "audit", "--corpus", bad_dir / "corpus_200.txt",
        "--pairs-a", bad_dir / "orig.cemb", "--pairs-b", bad_dir / "swapped.cemb",
        "--targets", bad_dir / "targets.jsonl", "--out", out, "--strict",
    ]
    assert run(args) == 1
    doc = json.loads(out.read_text())  # report written before the failing exit
    assert doc["sections"]["corpus_stats"]["status"] == "ok"
    assert doc["sections"]["subspace"]["status"] == "failed"


def test_audit_byte_deterministic(tmp_path, fixtures_dir):
    out1, out2 = tmp_path / "a1.json", tmp_path / "a2.json"
    assert run(audit_args(fixtures_dir, out1) + ["--seed", "3"]) == 0
    assert run(audit_args(fixtures_dir, out2) + ["--seed", "3"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
