"""End-to-end command-line behaviour: artifacts, exit codes, determinism."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from tamperkit.cli import DEFAULT_DISTORT_AMOUNTS, main
from tamperkit.dataset import read_pair_manifest
from tamperkit.errors import TamperkitError
from tamperkit.geometry import rectify_face
from tamperkit.raster import read_png, write_png

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def run_cli(*argv: str) -> int:
    try:
        return main(list(argv))
    except SystemExit as exc:  # argparse's own usage failures
        return int(exc.code)


def read_rows(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def tree_bytes(root: Path, skip: tuple[str, ...] = ("run_config.json",)) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name not in skip
    }


@pytest.fixture(scope="module")
def bench(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    out = root / "bench"
    rc = run_cli("synth", "--parcels", "4", "--images-per-parcel", "2",
                 "--tamper-fraction", "0.5", "--seed", "7", "--out", str(out))
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def scored(bench, tmp_path_factory):
    work = tmp_path_factory.mktemp("scores")
    train_csv = work / "train.csv"
    test_csv = work / "test.csv"
    assert run_cli("score", "--dataset", str(bench), "--pairs", "pairs_train.csv",
                   "--out", str(train_csv), "--jobs", "2") == 0
    assert run_cli("score", "--dataset", str(bench), "--pairs", "pairs_test.csv",
                   "--out", str(test_csv), "--jobs", "2") == 0
    return train_csv, test_csv


@pytest.fixture(scope="module")
def stumps(bench, scored, tmp_path_factory):
    train_csv, _ = scored
    path = tmp_path_factory.mktemp("model") / "stumps.json"
    assert run_cli("train", "--scores", str(train_csv),
                   "--pairs", str(bench / "pairs_train.csv"),
                   "--out", str(path)) == 0
    return path


# ------------------------------------------------------------------ synth

class TestSynth:
    def test_manifest_and_echo(self, bench):
        manifest = json.loads((bench / "manifest.json").read_text())
        assert len(manifest["parcels"]) == 4
        echoed = json.loads((bench / "run_config.json").read_text())
        assert echoed["command"] == "synth"
        assert echoed["seed"] == 7

    def test_same_flags_identical_dataset(self, bench, tmp_path):
        again = tmp_path / "again"
        assert run_cli("synth", "--parcels", "4", "--images-per-parcel", "2",
                       "--tamper-fraction", "0.5", "--seed", "7",
                       "--out", str(again)) == 0
        assert tree_bytes(again) == tree_bytes(bench)

    def test_zero_parcels_usage_error(self, tmp_path):
        assert run_cli("synth", "--parcels", "0", "--out", str(tmp_path / "x")) == 2

    def test_bad_fraction_usage_error(self, tmp_path):
        assert run_cli("synth", "--parcels", "1", "--tamper-fraction", "1.5",
                       "--out", str(tmp_path / "x")) == 2

    def test_unknown_subcommand_exits_2(self):
        assert run_cli("nonsense") == 2


# ---------------------------------------------------------------- rectify

class TestRectify:
    def test_three_views_matching_library_output(self, bench, tmp_path):
        from tamperkit.dataset import load_annotations

        records = load_annotations(bench / "annotations.json")
        rec = records[0]
        image = bench / rec.image
        out = tmp_path / "rect"
        assert run_cli("rectify", "--image", str(image),
                       "--annotations", str(bench / "annotations.json"),
                       "--out", str(out)) == 0
        produced = sorted(p.name for p in out.glob("*.png"))
        assert produced == sorted(f"{image.stem}_{f}.png" for f in rec.faces)
        img = read_png(image)
        for face in rec.faces:
            expected = tmp_path / f"exp_{face}.png"
            write_png(rectify_face(img, rec.face_quad(face)), expected)
            got = (out / f"{image.stem}_{face}.png").read_bytes()
            assert got == expected.read_bytes(), face

    def test_invalid_annotation_exits_1_with_rule(self, bench, tmp_path, capsys):
        docs = json.loads((bench / "annotations.json").read_text())
        kp = docs[0]["keypoints"]
        kp[2], kp[3] = kp[3], kp[2]  # break the K2-left-of-K3 rule
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(docs))
        image = bench / docs[0]["image"]
        rc = run_cli("rectify", "--image", str(image),
                     "--annotations", str(bad), "--out", str(tmp_path / "o"))
        assert rc == 1
        assert "K2-leftmost" in capsys.readouterr().err

    def test_unknown_image_exits_1(self, bench, tmp_path):
        ghost = tmp_path / "ghost.png"
        write_png(read_png(bench / "images" / "P000_t0.png"), ghost)
        assert run_cli("rectify", "--image", str(ghost),
                       "--annotations", str(bench / "annotations.json"),
                       "--out", str(tmp_path / "o")) == 1


# ------------------------------------------------------------------ score

class TestScore:
    def test_row_count_and_columns(self, bench, scored):
        train_csv, _ = scored
        rows = read_rows(train_csv)
        n_pairs = len(read_pair_manifest(bench / "pairs_train.csv"))
        assert len(rows) == n_pairs * 4 * 5  # methods x metrics
        assert list(rows[0]) == ["pair_id", "method", "metric", "value",
                                 "dissimilarity"]
        assert sorted({r["method"] for r in rows}) == ["canny", "laplacian",
                                                       "meanch", "none"]

    def test_jobs_do_not_change_bytes(self, bench, scored, tmp_path):
        _, test_csv = scored
        serial = tmp_path / "serial.csv"
        assert run_cli("score", "--dataset", str(bench),
                       "--pairs", "pairs_test.csv",
                       "--out", str(serial), "--jobs", "1") == 0
        assert serial.read_bytes() == test_csv.read_bytes()

    def test_env_var_parallelism(self, bench, scored, tmp_path, monkeypatch):
        _, test_csv = scored
        monkeypatch.setenv("TAMPERKIT_JOBS", "3")
        out = tmp_path / "env.csv"
        assert run_cli("score", "--dataset", str(bench),
                       "--pairs", "pairs_test.csv", "--out", str(out)) == 0
        assert out.read_bytes() == test_csv.read_bytes()

    def test_unknown_method_usage_error(self, bench, tmp_path):
        assert run_cli("score", "--dataset", str(bench), "--methods", "sobel",
                       "--out", str(tmp_path / "x.csv")) == 2

    def test_missing_dataset_exits_1(self, tmp_path):
        assert run_cli("score", "--dataset", str(tmp_path / "nope"),
                       "--out", str(tmp_path / "x.csv")) == 1

    def test_precomputed_merge(self, bench, scored, tmp_path):
        from tamperkit.cli import _dataset_pairs

        _, test_csv = scored
        pairs = _dataset_pairs(bench, bench / "pairs_test.csv")
        ext_dir = tmp_path / "extedges"
        ext_dir.mkdir()
        for p in pairs:
            a, b = p.views()
            write_png(a, ext_dir / f"{p.pair_id}_a.png")
            write_png(b, ext_dir / f"{p.pair_id}_b.png")
        ext_csv = tmp_path / "ext.csv"
        ext_csv.write_text(
            "pair_id,method,metric,value,dissimilarity\n"
            f"{pairs[0].pair_id},lpips,mae,0.25,0.25\n"
            f"{pairs[0].pair_id},none,mae,999.0,999.0\n"
        )
        out = tmp_path / "mixed.csv"
        assert run_cli("score", "--dataset", str(bench),
                       "--pairs", "pairs_test.csv", "--methods", "none",
                       "--precomputed", str(ext_dir),
                       "--precomputed", str(ext_csv),
                       "--out", str(out)) == 0
        rows = read_rows(out)
        assert sorted({r["method"] for r in rows}) == ["extedges", "lpips", "none"]
        assert len(rows) == len(pairs) * 5 * 2 + 1
        none_mae = [r for r in rows
                    if r["method"] == "none" and r["metric"] == "mae"]
        # the colliding external row must not displace the computed one
        assert all(float(r["value"]) < 1.0 for r in none_mae)
        # "none" on the raw views matches the precomputed copies up to the
        # 8-bit quantization the PNG round trip applies (hog is excluded:
        # rounding reorients near-zero gradients)
        by_key = {(r["pair_id"], r["method"], r["metric"]): float(r["value"])
                  for r in rows}
        for p in pairs:
            for metric in ("mae", "ssim"):
                assert by_key[(p.pair_id, "none", metric)] == pytest.approx(
                    by_key[(p.pair_id, "extedges", metric)], abs=5e-3
                )


# ------------------------------------------------------------ train / eval

class TestTrainEval:
    def test_trained_stumps_sorted_by_method(self, stumps):
        docs = json.loads(stumps.read_text())
        assert [d["method"] for d in docs] == sorted(d["method"] for d in docs)
        assert set(docs[0]) == {"metric", "threshold", "polarity", "method"}

    def test_separable_scores_train_to_perfect_accuracy(self, tmp_path):
        pairs_csv = tmp_path / "pairs.csv"
        scores_csv = tmp_path / "scores.csv"
        with open(pairs_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["pair_id", "parcel_id", "face_id", "label", "type",
                        "difficulty"])
            for i in range(10):
                tampered = i % 2 == 0
                w.writerow([f"p{i:02d}", f"P{i:03d}", "front",
                            "1" if tampered else "0",
                            "label" if tampered else "",
                            "easy" if tampered else ""])
        with open(scores_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["pair_id", "method", "metric", "value", "dissimilarity"])
            for i in range(10):
                hi = i % 2 == 0
                for metric in ("mae", "ssim", "ms_ssim", "cw_ssim", "hog"):
                    d = (0.8 if hi else 0.1) if metric == "mae" else 0.5
                    w.writerow([f"p{i:02d}", "none", metric, str(d), str(d)])
        out = tmp_path / "stumps.json"
        assert run_cli("train", "--scores", str(scores_csv),
                       "--pairs", str(pairs_csv), "--out", str(out)) == 0
        doc = json.loads(out.read_text())[0]
        assert doc["metric"] == "mae"
        assert 0.1 < doc["threshold"] < 0.8
        assert doc["polarity"] == "greater-is-tampered"

    def test_eval_report_shapes(self, bench, scored, stumps, tmp_path):
        _, test_csv = scored
        out = tmp_path / "report"
        assert run_cli("eval", "--scores", str(test_csv),
                       "--pairs", str(bench / "pairs_test.csv"),
                       "--stumps", str(stumps), "--out-dir", str(out)) == 0
        table = read_rows(out / "report.csv")
        assert [r["method"] for r in table] == ["canny", "laplacian", "meanch",
                                                "none"]
        assert list(table[0]) == ["method", "n_pairs", "accuracy", "precision",
                                  "recall", "f1", "roc_auc"]
        for row in table:
            assert 0.0 <= float(row["accuracy"]) <= 1.0
            assert 0.0 <= float(row["roc_auc"]) <= 1.0
        by_type = read_rows(out / "recall_by_type.csv")
        assert list(by_type[0]) == ["method", "type", "difficulty", "n_samples",
                                    "recall"]
        assert {r["method"] for r in by_type} == {r["method"] for r in table}
        doc = json.loads((out / "report.json").read_text())
        assert doc["n_pairs"] == len(read_pair_manifest(bench / "pairs_test.csv"))
        for method in doc["methods"]:
            block = doc["methods"][method]["parcel"]
            assert set(block) == {"n_parcels", "accuracy", "precision", "recall"}
        for fig in ("fig_methods.png", "fig_recall_by_type.png"):
            assert (out / fig).read_bytes()[:8] == PNG_MAGIC

    def test_eval_rerun_byte_identical(self, bench, scored, stumps, tmp_path):
        _, test_csv = scored
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run_cli("eval", "--scores", str(test_csv),
                           "--pairs", str(bench / "pairs_test.csv"),
                           "--stumps", str(stumps), "--out-dir", str(out)) == 0
        assert tree_bytes(a) == tree_bytes(b)

    def test_eval_missing_stumps_exits_1(self, bench, scored, tmp_path, capsys):
        _, test_csv = scored
        rc = run_cli("eval", "--scores", str(test_csv),
                     "--pairs", str(bench / "pairs_test.csv"),
                     "--stumps", str(tmp_path / "missing.json"),
                     "--out-dir", str(tmp_path / "r"))
        assert rc == 1
        assert "stump file not found" in capsys.readouterr().err

    def test_train_missing_pair_scores_exits_1(self, bench, scored, tmp_path):
        train_csv, _ = scored
        rows = read_rows(train_csv)
        victim = rows[0]["pair_id"]
        pruned = tmp_path / "pruned.csv"
        with open(pruned, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["pair_id", "method", "metric", "value", "dissimilarity"])
            for r in rows:
                if r["pair_id"] != victim:
                    w.writerow([r["pair_id"], r["method"], r["metric"],
                                r["value"], r["dissimilarity"]])
        assert run_cli("train", "--scores", str(pruned),
                       "--pairs", str(bench / "pairs_train.csv"),
                       "--out", str(tmp_path / "s.json")) == 1


# ---------------------------------------------------------------- distort

class TestDistort:
    def test_zero_amount_reproduces_source(self, bench, tmp_path):
        out = tmp_path / "dist"
        assert run_cli("distort", "--dataset", str(bench), "--amounts", "0",
                       "--out", str(out)) == 0
        assert (json.loads((out / "A_0" / "annotations.json").read_text())
                == json.loads((bench / "annotations.json").read_text()))
        for img in sorted((bench / "images").glob("*.png")):
            a = read_png(img)
            b = read_png(out / "A_0" / "images" / img.name)
            assert np.array_equal(a.data, b.data), img.name

    def test_default_amounts_and_summary(self, bench, tmp_path):
        out = tmp_path / "dist"
        assert run_cli("distort", "--dataset", str(bench),
                       "--out", str(out)) == 0
        summary = read_rows(out / "summary.csv")
        assert [float(r["A"]) for r in summary] == list(DEFAULT_DISTORT_AMOUNTS)
        n_records = len(json.loads((bench / "annotations.json").read_text()))
        for row in summary:
            assert int(row["kept"]) + int(row["discarded"]) == n_records
            var = out / f"A_{float(row['A']):g}"
            kept = len(json.loads((var / "annotations.json").read_text()))
            assert kept == int(row["kept"])
            assert len(list((var / "images").glob("*.png"))) == kept

    def test_out_of_frame_keypoints_are_discarded(self, tmp_path):
        from conftest import make_cuboid
        from tamperkit.dataset import (AnnotationRecord, save_annotations)
        from tamperkit.geometry import (annotation_faces, order_keypoints,
                                        project_cuboid)
        from tamperkit.raster import Raster

        ds = tmp_path / "edge"
        (ds / "images").mkdir(parents=True)
        cub = make_cuboid(yaw=30.0, pitch=25.0)
        proj = project_cuboid(cub)
        rec = AnnotationRecord("images/edge.png", "P000",
                               order_keypoints(proj), annotation_faces(proj), {})
        save_annotations([rec], ds / "annotations.json")
        # crop the claimed frame tight around the parcel so outward
        # pincushion motion pushes the extreme corners over the border
        w = int(np.ceil(proj.points[:, 0].max())) + 3
        h = int(np.ceil(proj.points[:, 1].max())) + 3
        write_png(Raster(np.full((h, w, 3), 0.5)), ds / "images/edge.png")
        out = tmp_path / "dist"
        assert run_cli("distort", "--dataset", str(ds), "--amounts=-0.08,0.16",
                       "--out", str(out)) == 0
        summary = {float(r["A"]): r for r in read_rows(out / "summary.csv")}
        assert int(summary[-0.08]["discarded"]) == 1  # moved outward, clipped
        assert int(summary[0.16]["kept"]) == 1  # moved inward, still valid


# ------------------------------------------------------------ sweep-angle

class TestSweepAngle:
    def test_rows_join_manifest(self, bench, scored, stumps, tmp_path):
        _, test_csv = scored
        out = tmp_path / "sweep"
        assert run_cli("sweep-angle", "--dataset", str(bench),
                       "--scores", str(test_csv), "--stumps", str(stumps),
                       "--method", "meanch", "--out-dir", str(out)) == 0
        rows = read_rows(out / "sweep_angle.csv")
        manifest = read_pair_manifest(bench / "pairs_test.csv")
        assert sorted(r["pair_id"] for r in rows) == sorted(
            p.pair_id for p in manifest
        )
        labels = {p.pair_id: p.label for p in manifest}
        for row in rows:
            assert 0.0 <= float(row["angle_deg"]) <= 90.0
            assert row["label"] == ("1" if labels[row["pair_id"]] else "0")
            expected = "1" if (row["verdict"] == row["label"]) else "0"
            assert row["correct"] == expected
        assert (out / "fig_sweep_angle.png").read_bytes()[:8] == PNG_MAGIC

    def test_method_required_when_ambiguous(self, bench, scored, stumps,
                                            tmp_path):
        _, test_csv = scored
        assert run_cli("sweep-angle", "--dataset", str(bench),
                       "--scores", str(test_csv), "--stumps", str(stumps),
                       "--out-dir", str(tmp_path / "s")) == 2


# ----------------------------------------------------------- config files

class TestConfigPrecedence:
    def test_flags_beat_config_beat_defaults(self, bench, scored, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "dataset": str(bench),
            "pairs": "pairs_test.csv",
            "methods": ["none", "meanch"],
        }))
        out = tmp_path / "flagged.csv"
        assert run_cli("score", "--config", str(cfg), "--methods", "meanch",
                       "--out", str(out)) == 0
        assert {r["method"] for r in read_rows(out)} == {"meanch"}  # flag wins
        out2 = tmp_path / "conf.csv"
        assert run_cli("score", "--config", str(cfg), "--out", str(out2)) == 0
        assert {r["method"] for r in read_rows(out2)} == {"none", "meanch"}
        echoed = json.loads((tmp_path / "run_config.json").read_text())
        assert echoed["methods"] == ["none", "meanch"]

    def test_unknown_config_key_usage_error(self, bench, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"dataset": str(bench), "bogus": 1}))
        assert run_cli("score", "--config", str(cfg),
                       "--out", str(tmp_path / "x.csv")) == 2

    def test_missing_required_option_usage_error(self, bench):
        assert run_cli("score", "--dataset", str(bench)) == 2  # no --out
