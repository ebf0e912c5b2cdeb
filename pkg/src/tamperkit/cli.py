"""Command-line surface for the full pipeline.

Subcommands: synth, rectify, score, train, eval, distort, sweep-angle.
Exit codes: 0 success, 1 runtime/data error, 2 usage error.  Option
precedence is flags > --config file > built-in defaults, and every run
echoes its effective configuration into the output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .classify import (
    aggregate_parcel,
    evaluate_binary,
    load_stumps,
    predict,
    save_stumps,
    stump_score,
    train_stump,
    training_accuracy,
)
from .dataset import (
    TextureStore,
    build_pairs,
    load_annotations,
    parcel_labels,
    read_pair_manifest,
    save_annotations,
    validate_record,
)
from .errors import InvalidInputError, TamperkitError
from .geometry import (
    DistortionParams,
    Keypoints8,
    apply_barrel_distortion,
    distortion_geometry,
    rectify_face,
    undistort_point,
    viewing_angle,
)
from .homogenize import BUILTIN_METHODS, PrecomputedPairs
from .raster import read_png, write_png
from .similarity import METRIC_IDS, MetricScore, SimilarityVector, score_pair
from .synth import SceneConfig, generate_benchmark

SCORE_COLUMNS = ("pair_id", "method", "metric", "value", "dissimilarity")
DEFAULT_DISTORT_AMOUNTS = (-0.08, -0.04, -0.02, 0.04, 0.08, 0.16)

_REQUIRED = object()


class UsageError(Exception):
    """Bad flags or config values; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    """Effective, serializable settings of one CLI run."""

    command: str
    inputs: dict
    outputs: dict
    methods: tuple[str, ...] | None = None
    distortion_amounts: tuple[float, ...] | None = None
    seed: int | None = None
    jobs: int = 1

    def effective_dict(self) -> dict:
        doc: dict = {
            "command": self.command,
            "inputs": dict(self.inputs),
            "outputs": dict(self.outputs),
        }
        if self.methods is not None:
            doc["methods"] = list(self.methods)
        if self.distortion_amounts is not None:
            doc["distortion_amounts"] = list(self.distortion_amounts)
        if self.seed is not None:
            doc["seed"] = self.seed
        # jobs changes wall time only, never output bytes, so it is not
        # part of the provenance record
        return doc


def _echo_config(cfg: RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    text = json.dumps(cfg.effective_dict(), indent=2, sort_keys=True) + "\n"
    (out_dir / "run_config.json").write_text(text)


# ------------------------------------------------------------- option glue

def _merge_options(args: argparse.Namespace, schema: dict) -> dict:
    """flags > config file > defaults; missing required keys are usage errors."""
    file_cfg: dict = {}
    config_path = getattr(args, "config", None)
    if config_path:
        path = Path(config_path)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            file_cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}")
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(file_cfg) - set(schema))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    merged = {}
    for key, default in schema.items():
        value = getattr(args, key, None)
        if value is None:
            value = file_cfg.get(key, default)
        if value is _REQUIRED:
            raise UsageError(f"missing required option --{key.replace('_', '-')}")
        merged[key] = value
    return merged


def _as_int(value, key: str) -> int:
    try:
        return int(str(value))
    except ValueError:
        raise UsageError(f"{key} must be an integer, got {value!r}")


def _as_float(value, key: str) -> float:
    try:
        return float(str(value))
    except ValueError:
        raise UsageError(f"{key} must be a number, got {value!r}")


def _as_list(value) -> list[str]:
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [part.strip() for part in str(value).split(",") if part.strip()]


def _resolve_jobs(value) -> int:
    if value is None:
        value = os.environ.get("TAMPERKIT_JOBS") or 1
    jobs = _as_int(value, "jobs")
    if jobs < 1:
        raise UsageError(f"jobs must be >= 1, got {jobs}")
    return jobs


def _run_parallel(fn, items, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _input_file(value, key: str) -> Path:
    path = Path(value)
    if not path.is_file():
        raise InvalidInputError(f"{key} file not found: {path}")
    return path


def _pairs_path(dataset: Path, value) -> Path:
    path = Path(value)
    if path.is_file():
        return path
    candidate = dataset / path
    if candidate.is_file():
        return candidate
    raise InvalidInputError(f"pair manifest not found: {path}")


# ----------------------------------------------------------- shared loads

def _dataset_pairs(dataset: Path, pairs_csv: Path):
    """Reconstruct computable side pairs for every manifest row."""
    records = load_annotations(dataset / "annotations.json")
    store = TextureStore(dataset / "references")
    by_id = {p.pair_id: p for p in build_pairs(records, store, dataset)}
    rows = read_pair_manifest(pairs_csv)
    missing = [r.pair_id for r in rows if r.pair_id not in by_id]
    if missing:
        raise InvalidInputError(
            f"{len(missing)} manifest pairs missing from the dataset, "
            f"first: {missing[0]!r}"
        )
    return [by_id[r.pair_id] for r in rows]


def _read_scores(path: Path) -> dict[str, dict[str, dict[str, tuple[float, float]]]]:
    """scores.csv -> {method: {pair_id: {metric: (value, dissimilarity)}}}."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != SCORE_COLUMNS:
            raise InvalidInputError(
                f"score file {path} must have columns {','.join(SCORE_COLUMNS)}"
            )
        table: dict[str, dict[str, dict[str, tuple[float, float]]]] = {}
        for row in reader:
            if len(row) != len(SCORE_COLUMNS):
                raise InvalidInputError(f"malformed score row: {row}")
            pair_id, method, metric, value, dissim = row
            table.setdefault(method, {}).setdefault(pair_id, {})[metric] = (
                float(value),
                float(dissim),
            )
    return table


def _vector(pair_id: str, method: str, metric_map: dict) -> SimilarityVector:
    missing = [m for m in METRIC_IDS if m not in metric_map]
    if missing:
        raise InvalidInputError(
            f"pair {pair_id!r} method {method!r} lacks metrics {missing}"
        )
    scores = tuple(MetricScore(m, *metric_map[m]) for m in METRIC_IDS)
    return SimilarityVector(pair_id, method, scores)


def _method_vectors(table: dict, method: str, rows) -> list[SimilarityVector]:
    if method not in table:
        raise InvalidInputError(f"no scores for method {method!r}")
    per_pair = table[method]
    out = []
    for row in rows:
        if row.pair_id not in per_pair:
            raise InvalidInputError(
                f"method {method!r} has no scores for pair {row.pair_id!r}"
            )
        out.append(_vector(row.pair_id, method, per_pair[row.pair_id]))
    return out


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# -------------------------------------------------------------- commands

def cmd_synth(args: argparse.Namespace) -> int:
    opts = _merge_options(args, {
        "parcels": _REQUIRED,
        "images_per_parcel": 3,
        "tamper_fraction": 0.5,
        "seed": 0,
        "out": _REQUIRED,
    })
    parcels = _as_int(opts["parcels"], "parcels")
    images = _as_int(opts["images_per_parcel"], "images-per-parcel")
    fraction = _as_float(opts["tamper_fraction"], "tamper-fraction")
    seed = _as_int(opts["seed"], "seed")
    if parcels < 1 or images < 1:
        raise UsageError("parcels and images-per-parcel must be >= 1")
    if not 0.0 <= fraction <= 1.0:
        raise UsageError(f"tamper-fraction must be within [0, 1], got {fraction}")
    out = Path(opts["out"])
    manifest = generate_benchmark(
        parcels, images, fraction, base=SceneConfig(seed=seed), out_dir=out
    )
    _echo_config(
        RunConfig("synth", inputs={}, outputs={"out": str(opts["out"])}, seed=seed),
        out,
    )
    print(f"synthesized {len(manifest['parcels'])} parcels under {out}")
    return 0


def cmd_rectify(args: argparse.Namespace) -> int:
    opts = _merge_options(args, {
        "image": _REQUIRED,
        "annotations": _REQUIRED,
        "out": _REQUIRED,
        "size": 400,
    })
    size = _as_int(opts["size"], "size")
    if size < 2:
        raise UsageError(f"size must be >= 2, got {size}")
    image_path = _input_file(opts["image"], "image")
    records = load_annotations(_input_file(opts["annotations"], "annotations"))
    matches = [r for r in records if Path(r.image).name == image_path.name]
    if not matches:
        raise InvalidInputError(f"no annotation record for image {image_path.name!r}")
    if len(matches) > 1:
        raise InvalidInputError(
            f"{len(matches)} annotation records match {image_path.name!r}"
        )
    record = matches[0]
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    img = read_png(image_path)
    written = []
    for face in sorted(record.faces):
        view = rectify_face(img, record.face_quad(face), size)
        target = out / f"{image_path.stem}_{face}.png"
        write_png(view, target)
        written.append(target.name)
    _echo_config(
        RunConfig(
            "rectify",
            inputs={"image": str(opts["image"]), "annotations": str(opts["annotations"])},
            outputs={"out": str(opts["out"])},
        ),
        out,
    )
    print(f"rectified {len(written)} faces: {', '.join(written)}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    opts = _merge_options(args, {
        "dataset": _REQUIRED,
        "pairs": "pairs_test.csv",
        "methods": ",".join(BUILTIN_METHODS),
        "precomputed": (),
        "out": _REQUIRED,
        "jobs": None,
    })
    dataset = Path(opts["dataset"])
    jobs = _resolve_jobs(opts["jobs"])
    methods = _as_list(opts["methods"])
    unknown = [m for m in methods if m not in BUILTIN_METHODS]
    if unknown:
        raise UsageError(
            f"unknown methods {unknown}; built-ins are {', '.join(BUILTIN_METHODS)}"
        )
    external_dirs: list[PrecomputedPairs] = []
    external_csvs: list[Path] = []
    for entry in _as_list(opts["precomputed"]):
        path = Path(entry)
        if path.is_dir():
            external_dirs.append(PrecomputedPairs(path))
        elif path.is_file() and path.suffix == ".csv":
            external_csvs.append(path)
        else:
            raise UsageError(
                f"precomputed entry must be a directory or .csv file: {entry}"
            )

    pairs_csv = _pairs_path(dataset, opts["pairs"])
    pairs = _dataset_pairs(dataset, pairs_csv)

    tasks = [(pair, m) for pair in pairs for m in methods]
    tasks += [(pair, pc) for pair in pairs for pc in external_dirs]

    def compute(task) -> SimilarityVector:
        pair, method = task
        if isinstance(method, PrecomputedPairs):
            a, b = method.load(pair.pair_id)
            vec = score_pair(a, b, "none", pair.pair_id)
            return SimilarityVector(pair.pair_id, method.name, vec.scores)
        a, b = pair.views()
        return score_pair(a, b, method, pair.pair_id)

    vectors = _run_parallel(compute, tasks, jobs)

    seen: set[tuple[str, str, str]] = set()
    rows = []
    for vec in vectors:
        for s in vec.scores:
            seen.add((vec.pair_id, vec.method, s.metric))
            rows.append([vec.pair_id, vec.method, s.metric,
                         str(s.value), str(s.dissimilarity)])
    for path in external_csvs:
        for method, per_pair in sorted(_read_scores(path).items()):
            for pair_id, metric_map in sorted(per_pair.items()):
                for metric, (value, dissim) in sorted(metric_map.items()):
                    key = (pair_id, method, metric)
                    if key in seen:
                        continue
                    seen.add(key)
                    rows.append([pair_id, method, metric, str(value), str(dissim)])

    metric_rank = {m: i for i, m in enumerate(METRIC_IDS)}
    rows.sort(key=lambda r: (r[0], r[1], metric_rank.get(r[2], len(METRIC_IDS)), r[2]))
    out = Path(opts["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(out, SCORE_COLUMNS, rows)
    _echo_config(
        RunConfig(
            "score",
            inputs={"dataset": str(opts["dataset"]), "pairs": str(opts["pairs"]),
                    "precomputed": _as_list(opts["precomputed"])},
            outputs={"out": str(opts["out"])},
            methods=tuple(methods) + tuple(pc.name for pc in external_dirs),
        ),
        out.parent,
    )
    print(f"wrote {len(rows)} score rows to {out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    opts = _merge_options(args, {
        "scores": _REQUIRED,
        "pairs": _REQUIRED,
        "methods": None,
        "out": _REQUIRED,
    })
    rows = read_pair_manifest(_input_file(opts["pairs"], "pairs"))
    table = _read_scores(_input_file(opts["scores"], "scores"))
    methods = _as_list(opts["methods"]) if opts["methods"] is not None else sorted(table)
    labels = [r.label for r in rows]
    stumps = {}
    for method in methods:
        vectors = _method_vectors(table, method, rows)
        stumps[method] = train_stump(vectors, labels)
        acc = training_accuracy(stumps[method], vectors, labels)
        print(f"{method}: metric={stumps[method].metric} "
              f"threshold={stumps[method].threshold:.6g} "
              f"polarity={stumps[method].polarity} train-accuracy={acc:.3f}")
    out = Path(opts["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    save_stumps(stumps, out)
    _echo_config(
        RunConfig(
            "train",
            inputs={"scores": str(opts["scores"]), "pairs": str(opts["pairs"])},
            outputs={"out": str(opts["out"])},
            methods=tuple(methods),
        ),
        out.parent,
    )
    return 0


def _parcel_block(rows, predictions) -> dict:
    by_parcel: dict[str, list[bool]] = {}
    for row, pred in zip(rows, predictions):
        by_parcel.setdefault(row.parcel_id, []).append(pred)
    truth = parcel_labels(rows)
    verdicts = {pid: aggregate_parcel(preds) for pid, preds in by_parcel.items()}
    ids = sorted(by_parcel)
    tp = sum(1 for p in ids if verdicts[p] and truth[p])
    fp = sum(1 for p in ids if verdicts[p] and not truth[p])
    fn = sum(1 for p in ids if not verdicts[p] and truth[p])
    tn = len(ids) - tp - fp - fn
    return {
        "n_parcels": len(ids),
        "accuracy": (tp + tn) / len(ids) if ids else 0.0,
        "precision": tp / (tp + fp) if tp + fp else 0.0,
        "recall": tp / (tp + fn) if tp + fn else 0.0,
    }


def cmd_eval(args: argparse.Namespace) -> int:
    opts = _merge_options(args, {
        "scores": _REQUIRED,
        "pairs": _REQUIRED,
        "stumps": _REQUIRED,
        "out_dir": _REQUIRED,
    })
    rows = read_pair_manifest(_input_file(opts["pairs"], "pairs"))
    table = _read_scores(_input_file(opts["scores"], "scores"))
    stumps = load_stumps(opts["stumps"])
    if not stumps:
        raise InvalidInputError(f"stump file {opts['stumps']} holds no stumps")
    labels = [r.label for r in rows]
    kinds = [(r.tamper_type, r.difficulty) if r.label else None for r in rows]

    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_rows = []
    recall_rows = []
    doc: dict = {"n_pairs": len(rows), "methods": {}}
    for method in sorted(stumps):
        vectors = _method_vectors(table, method, rows)
        preds = [predict(stumps[method], v) for v in vectors]
        svals = [stump_score(stumps[method], v) for v in vectors]
        report = evaluate_binary(preds, labels, scores=svals, tamper_kinds=kinds)
        parcel = _parcel_block(rows, preds)
        doc["methods"][method] = {**report.to_dict(), "parcel": parcel}
        summary_rows.append([method, str(len(rows)),
                             str(report.accuracy), str(report.precision),
                             str(report.recall), str(report.f1),
                             str(report.roc_auc)])
        for tr in report.per_type:
            recall_rows.append([method, tr.tamper_type, tr.difficulty,
                                str(tr.n_samples), str(tr.recall)])
        print(f"{method}: accuracy={report.accuracy:.3f} "
              f"auc={report.roc_auc:.3f} parcel-recall={parcel['recall']:.3f}")

    _write_csv(out_dir / "report.csv",
               ("method", "n_pairs", "accuracy", "precision", "recall", "f1",
                "roc_auc"), summary_rows)
    _write_csv(out_dir / "recall_by_type.csv",
               ("method", "type", "difficulty", "n_samples", "recall"),
               recall_rows)
    (out_dir / "report.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n"
    )

    from . import plots

    plots.save_method_summary(
        out_dir / "fig_methods.png",
        [{"method": r[0], "accuracy": float(r[2]), "roc_auc": float(r[6])}
         for r in summary_rows],
    )
    plots.save_recall_by_type(
        out_dir / "fig_recall_by_type.png",
        [{"method": r[0], "type": r[1], "difficulty": r[2], "recall": float(r[4])}
         for r in recall_rows],
    )
    _echo_config(
        RunConfig(
            "eval",
            inputs={"scores": str(opts["scores"]), "pairs": str(opts["pairs"]),
                    "stumps": str(opts["stumps"])},
            outputs={"out_dir": str(opts["out_dir"])},
            methods=tuple(sorted(stumps)),
        ),
        out_dir,
    )
    return 0


def cmd_distort(args: argparse.Namespace) -> int:
    opts = _merge_options(args, {
        "dataset": _REQUIRED,
        "amounts": DEFAULT_DISTORT_AMOUNTS,
        "out": _REQUIRED,
    })
    dataset = Path(opts["dataset"])
    try:
        amounts = [float(v) for v in _as_list(opts["amounts"])]
    except ValueError:
        raise UsageError(f"amounts must be numbers, got {opts['amounts']!r}")
    if not amounts:
        raise UsageError("need at least one distortion amount")
    records = load_annotations(dataset / "annotations.json")
    out = Path(opts["out"])

    kept = {a: [] for a in amounts}
    discarded = {a: 0 for a in amounts}
    for rec in records:
        img = read_png(_input_file(dataset / rec.image, "image"))
        center, norm_radius = distortion_geometry(img.width, img.height)
        for a in amounts:
            params = DistortionParams(a=a)
            moved = np.empty_like(rec.keypoints.points)
            ok = True
            for i, point in enumerate(rec.keypoints.points):
                try:
                    moved[i] = undistort_point(point, params, center, norm_radius)
                except InvalidInputError:
                    ok = False
                    break
                if not (-0.5 <= moved[i, 0] <= img.width - 0.5
                        and -0.5 <= moved[i, 1] <= img.height - 0.5):
                    ok = False
                    break
            if ok:
                new_rec = replace(
                    rec, keypoints=Keypoints8(moved, rec.keypoints.visibility)
                )
                try:
                    validate_record(new_rec)
                except TamperkitError:
                    ok = False
            if not ok:
                discarded[a] += 1
                continue
            kept[a].append(new_rec)
            target = out / f"A_{a:g}" / rec.image
            target.parent.mkdir(parents=True, exist_ok=True)
            write_png(apply_barrel_distortion(img, params), target)

    summary = []
    for a in amounts:
        var_dir = out / f"A_{a:g}"
        var_dir.mkdir(parents=True, exist_ok=True)
        save_annotations(kept[a], var_dir / "annotations.json")
        summary.append([f"{a:g}", str(len(kept[a])), str(discarded[a])])
    _write_csv(out / "summary.csv", ("A", "kept", "discarded"), summary)
    _echo_config(
        RunConfig(
            "distort",
            inputs={"dataset": str(opts["dataset"])},
            outputs={"out": str(opts["out"])},
            distortion_amounts=tuple(amounts),
        ),
        out,
    )
    for a, k, d in summary:
        print(f"A={a}: kept {k}, discarded {d}")
    return 0


def cmd_sweep_angle(args: argparse.Namespace) -> int:
    opts = _merge_options(args, {
        "dataset": _REQUIRED,
        "pairs": "pairs_test.csv",
        "scores": _REQUIRED,
        "stumps": _REQUIRED,
        "method": None,
        "out_dir": _REQUIRED,
    })
    dataset = Path(opts["dataset"])
    rows = read_pair_manifest(_pairs_path(dataset, opts["pairs"]))
    table = _read_scores(_input_file(opts["scores"], "scores"))
    stumps = load_stumps(opts["stumps"])
    method = opts["method"]
    if method is None:
        if len(stumps) != 1:
            raise UsageError(
                f"--method required; stump file offers {', '.join(sorted(stumps))}"
            )
        method = next(iter(stumps))
    if method not in stumps:
        raise InvalidInputError(f"no stump for method {method!r}")
    stump = stumps[method]

    records = load_annotations(dataset / "annotations.json")
    by_stem = {Path(r.image).stem: r for r in records}
    out_rows = []
    plot_rows = []
    for row in rows:
        stem, _, face = row.pair_id.rpartition("__")
        if stem not in by_stem:
            raise InvalidInputError(f"no annotation record for pair {row.pair_id!r}")
        angle = viewing_angle(by_stem[stem].face_quad(face))
        vector = _method_vectors(table, method, [row])[0]
        verdict = predict(stump, vector)
        dissim = vector.dissimilarity(stump.metric)
        correct = verdict == row.label
        out_rows.append([row.pair_id, str(angle), str(dissim),
                         "1" if verdict else "0", "1" if row.label else "0",
                         "1" if correct else "0"])
        plot_rows.append({"angle_deg": angle, "dissimilarity": dissim,
                          "correct": correct})
    out_rows.sort(key=lambda r: r[0])

    out_dir = Path(opts["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "sweep_angle.csv",
               ("pair_id", "angle_deg", "dissimilarity", "verdict", "label",
                "correct"), out_rows)

    from . import plots

    plots.save_angle_scatter(out_dir / "fig_sweep_angle.png", plot_rows)
    _echo_config(
        RunConfig(
            "sweep-angle",
            inputs={"dataset": str(opts["dataset"]), "pairs": str(opts["pairs"]),
                    "scores": str(opts["scores"]), "stumps": str(opts["stumps"])},
            outputs={"out_dir": str(opts["out_dir"])},
            methods=(method,),
        ),
        out_dir,
    )
    print(f"wrote {len(out_rows)} angle rows for method {method!r}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tamperkit",
        description="Parcel side-surface tampering detection pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, configure):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with defaults for any option")
        configure(p)
        p.set_defaults(func=func)

    def synth_args(p):
        p.add_argument("--parcels", type=int)
        p.add_argument("--images-per-parcel", type=int, dest="images_per_parcel")
        p.add_argument("--tamper-fraction", type=float, dest="tamper_fraction")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")

    def rectify_args(p):
        p.add_argument("--image")
        p.add_argument("--annotations")
        p.add_argument("--out")
        p.add_argument("--size", type=int)

    def score_args(p):
        p.add_argument("--dataset")
        p.add_argument("--pairs")
        p.add_argument("--methods")
        p.add_argument("--precomputed", action="append")
        p.add_argument("--out")
        p.add_argument("--jobs", type=int)

    def train_args(p):
        p.add_argument("--scores")
        p.add_argument("--pairs")
        p.add_argument("--methods")
        p.add_argument("--out")

    def eval_args(p):
        p.add_argument("--scores")
        p.add_argument("--pairs")
        p.add_argument("--stumps")
        p.add_argument("--out-dir", dest="out_dir")

    def distort_args(p):
        p.add_argument("--dataset")
        p.add_argument("--amounts")
        p.add_argument("--out")

    def sweep_args(p):
        p.add_argument("--dataset")
        p.add_argument("--pairs")
        p.add_argument("--scores")
        p.add_argument("--stumps")
        p.add_argument("--method")
        p.add_argument("--out-dir", dest="out_dir")

    add("synth", cmd_synth, synth_args)
    add("rectify", cmd_rectify, rectify_args)
    add("score", cmd_score, score_args)
    add("train", cmd_train, train_args)
    add("eval", cmd_eval, eval_args)
    add("distort", cmd_distort, distort_args)
    add("sweep-angle", cmd_sweep_angle, sweep_args)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except TamperkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
