"""Annotation ingestion, reference texture maps, and side-pair construction.

The annotation file is a JSON array of records::

    {"image": "images/P003_t1.png",
     "parcel_id": "P003",
     "keypoints": [[x, y, v], ...8 entries...],
     "faces": {"front": [1, 3, 2, 0], "top": [...], "side_b": [...]},
     "tampering": [{"face": "front", "type": "tape", "difficulty": "easy"}]}

Keypoints follow the canonical 8-slot corner order; ``v`` is 2 for a
visible corner and 1 for slot 5, which is annotated but self-occluded.
Each ``faces`` value lists the 4 keypoint slots of one visible face in
texture order: entry i of the cycle lands on corner i of the rectified
view (top-left, top-right, bottom-right, bottom-left).  The back face —
opposite the identifier side — never appears.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    AnnotationError,
    IncompleteTextureError,
    InvalidInputError,
    InvalidPairError,
    MissingReferenceError,
)
from .geometry import DEFAULT_RECTIFIED_SIZE, FaceQuad, Keypoints8, rectify_face
from .raster import Raster, read_png, write_png

TAMPER_TYPES = ("label", "tape", "writing")
DIFFICULTIES = ("easy", "hard")

#: Intrinsic face identities that can appear in an annotation (no "back").
ANNOTATABLE_FACES = ("front", "side_a", "side_b", "top", "bottom")

#: The three visible quads in keypoint-slot terms: every valid 3-face view
#: exposes exactly these corner sets (the shared corner is slot 0; slot 5
#: never appears).  Cycles are listed in one admissible texture order.
CANONICAL_QUADS = {
    frozenset({0, 1, 2, 3}): (0, 2, 1, 3),
    frozenset({0, 2, 4, 6}): (0, 2, 6, 4),
    frozenset({0, 3, 4, 7}): (0, 3, 7, 4),
}

#: Cross-layout grid cells (row, col) in a 3x3 arrangement.
LAYOUT_CELLS = {
    "top": (0, 1),
    "side_a": (1, 0),
    "front": (1, 1),
    "side_b": (1, 2),
    "bottom": (2, 1),
}


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotated capture: an image path, its parcel, the 8 ordered
    corner keypoints, the visible faces' corner cycles, and any tampering
    present on those faces."""

    image: str
    parcel_id: str
    keypoints: Keypoints8
    faces: dict[str, tuple[int, int, int, int]]
    tampering: dict[str, tuple[str, str]] = field(default_factory=dict)

    def face_quad(self, face_id: str) -> FaceQuad:
        """Image-space quad of a visible face, in texture corner order."""
        if face_id not in self.faces:
            raise InvalidInputError(
                f"face {face_id!r} not visible in record for {self.image!r}"
            )
        cycle = list(self.faces[face_id])
        return FaceQuad(self.keypoints.points[cycle], face_id)


@dataclass
class ParcelTextureMap:
    """All five reference face textures of one parcel plus a cross-shaped
    contact-sheet raster (presentation only, never scored)."""

    parcel_id: str
    faces: dict[str, Raster]
    layout: Raster

    def __post_init__(self) -> None:
        if sorted(self.faces) != sorted(ANNOTATABLE_FACES):
            raise InvalidInputError(
                f"texture map needs exactly the faces {ANNOTATABLE_FACES}, "
                f"got {sorted(self.faces)}"
            )
        sizes = {(r.height, r.width) for r in self.faces.values()}
        if len(sizes) != 1 or any(h != w for h, w in sizes):
            raise InvalidInputError(f"face textures must be equal squares, got {sizes}")
        side = next(iter(sizes))[0]
        if (self.layout.height, self.layout.width) != (3 * side, 3 * side):
            raise InvalidInputError("layout must be a 3x3 grid of face cells")


@dataclass
class SidePair:
    """An input face view matched to its stored reference by (parcel, face).

    Views are rectified lazily on each access so that large pair lists stay
    cheap; call :meth:`views` to obtain both in one pass.
    """

    pair_id: str
    parcel_id: str
    face_id: str
    label: bool
    tamper_type: str | None = None
    difficulty: str | None = None
    loader: Callable[[], tuple[Raster, Raster]] | None = field(
        default=None, repr=False, compare=False
    )

    def views(self) -> tuple[Raster, Raster]:
        if self.loader is None:
            raise InvalidInputError(f"pair {self.pair_id!r} has no view loader")
        input_view, reference_view = self.loader()
        if (input_view.height, input_view.width) != (
            reference_view.height,
            reference_view.width,
        ):
            raise InvalidPairError(
                f"pair {self.pair_id!r}: input {input_view.height}x{input_view.width} "
                f"vs reference {reference_view.height}x{reference_view.width}"
            )
        return input_view, reference_view

    @property
    def input_view(self) -> Raster:
        return self.views()[0]

    @property
    def reference_view(self) -> Raster:
        return self.views()[1]


@lru_cache(maxsize=4)
def _load_image(path: str) -> Raster:
    return read_png(path)


def clear_image_cache() -> None:
    """Drop cached source images (needed if a path is rewritten in-process)."""
    _load_image.cache_clear()


# ----------------------------------------------------------------- loading

def _check(cond: bool, index: int, fieldpath: str, message: str) -> None:
    if not cond:
        raise AnnotationError(message, record_index=index, field=fieldpath)


def _parse_keypoints(raw: object, index: int) -> Keypoints8:
    _check(
        isinstance(raw, list) and len(raw) == 8,
        index, "keypoints", "keypoint-count: need exactly 8 [x, y, v] entries",
    )
    pts = np.empty((8, 2))
    vis = np.empty(8, dtype=bool)
    for k, entry in enumerate(raw):
        _check(
            isinstance(entry, list) and len(entry) == 3,
            index, f"keypoints[{k}]", "keypoint-shape: entry must be [x, y, v]",
        )
        x, y, v = entry
        _check(
            all(isinstance(c, (int, float)) and np.isfinite(c) for c in (x, y)),
            index, f"keypoints[{k}]", "keypoint-coords: x and y must be finite numbers",
        )
        expected_v = 1 if k == 5 else 2
        _check(
            v == expected_v,
            index, f"keypoints[{k}]",
            f"visibility-flags: slot {k} must carry v={expected_v} "
            f"(slot 5 is the self-occluded corner), got v={v!r}",
        )
        pts[k] = (x, y)
        vis[k] = v == 2
    return Keypoints8(pts, vis)


def _parse_faces(
    raw: object, kp: Keypoints8, index: int
) -> dict[str, tuple[int, int, int, int]]:
    _check(
        isinstance(raw, dict) and len(raw) == 3,
        index, "faces", "face-count: exactly 3 visible faces required",
    )
    assert isinstance(raw, dict)
    _check(
        "back" not in raw,
        index, "faces", "back-never-visible: the face opposite the identifier "
        "side cannot appear in a capture",
    )
    for name in raw:
        _check(
            name in ANNOTATABLE_FACES,
            index, f"faces.{name}",
            f"face-names: unknown face (expected one of {ANNOTATABLE_FACES})",
        )
    seen_sets = []
    faces: dict[str, tuple[int, int, int, int]] = {}
    for name, cycle in raw.items():
        path = f"faces.{name}"
        _check(
            isinstance(cycle, list) and len(cycle) == 4
            and all(isinstance(c, int) and 0 <= c <= 7 for c in cycle),
            index, path, "face-cycle-shape: need 4 keypoint slots in 0..7",
        )
        key = frozenset(cycle)
        _check(
            key in CANONICAL_QUADS and len(key) == 4,
            index, path,
            f"face-index-sets: corner set {sorted(set(cycle))} is not one of "
            f"the three visible quads {[sorted(s) for s in CANONICAL_QUADS]}",
        )
        base = CANONICAL_QUADS[key]
        base_edges = {frozenset((base[i], base[(i + 1) % 4])) for i in range(4)}
        got_edges = {frozenset((cycle[i], cycle[(i + 1) % 4])) for i in range(4)}
        _check(
            got_edges == base_edges,
            index, path,
            "face-cycle-adjacency: consecutive slots must share a face edge, "
            f"got cycle {cycle}",
        )
        _check(
            key not in seen_sets,
            index, path, "face-index-sets: corner set declared twice",
        )
        seen_sets.append(key)
        try:
            # builds the quad in annotation order; enforces positive winding,
            # simplicity, and minimum area
            FaceQuad(kp.points[list(cycle)], name)
        except Exception as exc:
            raise AnnotationError(
                f"face-quad-degenerate: {exc}", record_index=index, field=path
            ) from exc
        faces[name] = tuple(cycle)
    return faces


def _parse_tampering(
    raw: object, faces: Mapping[str, tuple[int, ...]], index: int
) -> dict[str, tuple[str, str]]:
    if raw is None:
        return {}
    _check(isinstance(raw, list), index, "tampering", "tampering-shape: must be a list")
    assert isinstance(raw, list)
    out: dict[str, tuple[str, str]] = {}
    for k, entry in enumerate(raw):
        path = f"tampering[{k}]"
        _check(
            isinstance(entry, dict)
            and {"face", "type", "difficulty"} <= set(entry),
            index, path, "tampering-shape: need face, type and difficulty keys",
        )
        face, kind, diff = entry["face"], entry["type"], entry["difficulty"]
        _check(
            face in faces,
            index, path,
            f"tampering-face: {face!r} is not a visible face of this record",
        )
        _check(
            kind in TAMPER_TYPES,
            index, path, f"tampering-type: {kind!r} not in {TAMPER_TYPES}",
        )
        _check(
            diff in DIFFICULTIES,
            index, path, f"tampering-difficulty: {diff!r} not in {DIFFICULTIES}",
        )
        _check(face not in out, index, path, f"tampering-face: {face!r} listed twice")
        out[face] = (kind, diff)
    return out


def _parse_record(obj: object, index: int) -> AnnotationRecord:
    _check(isinstance(obj, dict), index, "", "record-shape: must be a JSON object")
    assert isinstance(obj, dict)
    for name in ("image", "parcel_id"):
        _check(
            isinstance(obj.get(name), str) and obj[name] != "",
            index, name, f"record-shape: {name} must be a non-empty string",
        )
    kp = _parse_keypoints(obj.get("keypoints"), index)
    _check(
        float(kp.points[2, 0]) < float(kp.points[3, 0]),
        index, "keypoints",
        f"K2-leftmost: K2 must be left of K3 "
        f"(K2.x={kp.points[2, 0]:.3f}, K3.x={kp.points[3, 0]:.3f})",
    )
    _check(
        float(kp.points[6, 0]) < float(kp.points[7, 0]),
        index, "keypoints",
        f"K6-leftmost: K6 must be left of K7 "
        f"(K6.x={kp.points[6, 0]:.3f}, K7.x={kp.points[7, 0]:.3f})",
    )
    faces = _parse_faces(obj.get("faces"), kp, index)
    tampering = _parse_tampering(obj.get("tampering"), faces, index)
    return AnnotationRecord(obj["image"], obj["parcel_id"], kp, faces, tampering)


def load_annotations(path: str | Path) -> list[AnnotationRecord]:
    """Load and validate an annotation file; raises with the record index,
    field path, and violated rule on any bad entry."""
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"annotation file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"annotation file is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise InvalidInputError("annotation file must contain a JSON array")
    return [_parse_record(obj, i) for i, obj in enumerate(data)]


def _record_doc(rec: AnnotationRecord) -> dict:
    kps = [
        [float(x), float(y), 1 if k == 5 else 2]
        for k, (x, y) in enumerate(rec.keypoints.points)
    ]
    return {
        "image": rec.image,
        "parcel_id": rec.parcel_id,
        "keypoints": kps,
        "faces": {
            name: list(rec.faces[name])
            for name in ANNOTATABLE_FACES
            if name in rec.faces
        },
        "tampering": [
            {"face": f, "type": t, "difficulty": d}
            for f, (t, d) in sorted(rec.tampering.items())
        ],
    }


def save_annotations(records: Sequence[AnnotationRecord], path: str | Path) -> None:
    """Serialize records back to the documented JSON schema (round-trips
    through load_annotations)."""
    Path(path).write_text(
        json.dumps([_record_doc(rec) for rec in records], indent=1) + "\n"
    )


def validate_record(record: AnnotationRecord, index: int = 0) -> AnnotationRecord:
    """Re-run every schema rule on one in-memory record.

    Raises AnnotationError exactly as load_annotations would for the same
    content; useful after transforming keypoints (e.g. lens distortion).
    """
    return _parse_record(_record_doc(record), index)


# ----------------------------------------------------------- texture maps

def compose_texture_map(
    records: Sequence[AnnotationRecord],
    image_root: str | Path,
    out_size: int = DEFAULT_RECTIFIED_SIZE,
) -> ParcelTextureMap:
    """Build a parcel's reference map from untampered multi-view captures.

    Each face is rectified from the record where its projected quad is
    largest; all five faces must be covered.
    """
    if not records:
        raise InvalidInputError("no records to compose a texture map from")
    parcel_ids = {r.parcel_id for r in records}
    if len(parcel_ids) != 1:
        raise InvalidInputError(f"records span multiple parcels: {sorted(parcel_ids)}")
    tampered = [r.image for r in records if r.tampering]
    if tampered:
        raise InvalidInputError(
            f"reference captures must be untampered, got tampering in {tampered}"
        )
    image_root = Path(image_root)

    best: dict[str, tuple[float, int]] = {}
    for i, rec in enumerate(records):
        for face in rec.faces:
            area = rec.face_quad(face).area
            if face not in best or area > best[face][0]:
                best[face] = (area, i)
    missing = sorted(set(ANNOTATABLE_FACES) - set(best))
    if missing:
        raise IncompleteTextureError(
            f"reference captures do not cover faces: {', '.join(missing)}"
        )

    faces: dict[str, Raster] = {}
    for face, (_, i) in best.items():
        rec = records[i]
        img = _load_image(str((image_root / rec.image).resolve()))
        faces[face] = rectify_face(img, rec.face_quad(face), out_size)
    return ParcelTextureMap(next(iter(parcel_ids)), faces, compose_layout(faces))


def compose_layout(faces: Mapping[str, Raster]) -> Raster:
    """Cross-shaped contact sheet: top row holds Top, middle row SideA /
    Front / SideB, bottom row Bottom."""
    side = next(iter(faces.values())).height
    channels = max(r.channels for r in faces.values())
    shape = (3 * side, 3 * side) if channels == 1 else (3 * side, 3 * side, 3)
    canvas = np.zeros(shape)
    for name, (row, col) in LAYOUT_CELLS.items():
        tile = faces[name].data
        if channels == 3 and tile.ndim == 2:
            tile = np.repeat(tile[:, :, None], 3, axis=2)
        canvas[row * side:(row + 1) * side, col * side:(col + 1) * side] = tile
    return Raster(canvas)


def save_texture_map(tmap: ParcelTextureMap, root: str | Path) -> Path:
    """Write ``<root>/<parcel_id>/<face>.png`` plus ``layout.png``."""
    parcel_dir = Path(root) / tmap.parcel_id
    parcel_dir.mkdir(parents=True, exist_ok=True)
    for face, raster in sorted(tmap.faces.items()):
        write_png(raster, parcel_dir / f"{face}.png")
    write_png(tmap.layout, parcel_dir / "layout.png")
    return parcel_dir


class TextureStore:
    """Directory-backed reference textures: ``<root>/<parcel_id>/<face>.png``."""

    def __init__(self, root: str | Path, cache_size: int = 16):
        self.root = Path(root)
        if not self.root.is_dir():
            raise InvalidInputError(f"texture store directory not found: {self.root}")
        self._load = lru_cache(maxsize=cache_size)(self._load_uncached)

    def has_parcel(self, parcel_id: str) -> bool:
        return (self.root / parcel_id).is_dir()

    def require_parcel(self, parcel_id: str) -> None:
        if not self.has_parcel(parcel_id):
            raise MissingReferenceError(
                f"no reference textures for parcel {parcel_id!r} under {self.root}"
            )

    def face(self, parcel_id: str, face_id: str) -> Raster:
        return self._load(parcel_id, face_id)

    def _load_uncached(self, parcel_id: str, face_id: str) -> Raster:
        self.require_parcel(parcel_id)
        path = self.root / parcel_id / f"{face_id}.png"
        if not path.is_file():
            raise MissingReferenceError(
                f"parcel {parcel_id!r} has no stored {face_id!r} texture ({path})"
            )
        return read_png(path)


# ------------------------------------------------------------------- pairs

def build_pairs(
    records: Sequence[AnnotationRecord],
    store: TextureStore,
    image_root: str | Path,
    out_size: int = DEFAULT_RECTIFIED_SIZE,
) -> list[SidePair]:
    """One SidePair per visible face of every record, matched to the stored
    reference by (parcel_id, face_id) and labeled from the annotation."""
    image_root = Path(image_root)
    pairs: list[SidePair] = []
    seen: set[str] = set()
    for rec in records:
        store.require_parcel(rec.parcel_id)
        stem = Path(rec.image).stem
        for face in (f for f in ANNOTATABLE_FACES if f in rec.faces):
            pair_id = f"{stem}__{face}"
            if pair_id in seen:
                raise InvalidInputError(f"duplicate pair id {pair_id!r}")
            seen.add(pair_id)
            kind = rec.tampering.get(face)
            pairs.append(
                SidePair(
                    pair_id=pair_id,
                    parcel_id=rec.parcel_id,
                    face_id=face,
                    label=kind is not None,
                    tamper_type=kind[0] if kind else None,
                    difficulty=kind[1] if kind else None,
                    loader=_pair_loader(rec, face, store, image_root, out_size),
                )
            )
    return pairs


def _pair_loader(
    rec: AnnotationRecord,
    face: str,
    store: TextureStore,
    image_root: Path,
    out_size: int,
) -> Callable[[], tuple[Raster, Raster]]:
    def load() -> tuple[Raster, Raster]:
        img = _load_image(str((image_root / rec.image).resolve()))
        input_view = rectify_face(img, rec.face_quad(face), out_size)
        return input_view, store.face(rec.parcel_id, face)

    return load


MANIFEST_COLUMNS = ("pair_id", "parcel_id", "face_id", "label", "type", "difficulty")


def write_pair_manifest(pairs: Sequence[SidePair], path: str | Path) -> None:
    """CSV manifest sorted by pair_id (the canonical output ordering)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for p in sorted(pairs, key=lambda p: p.pair_id):
            writer.writerow(
                [
                    p.pair_id,
                    p.parcel_id,
                    p.face_id,
                    int(p.label),
                    p.tamper_type or "",
                    p.difficulty or "",
                ]
            )


def read_pair_manifest(path: str | Path) -> list[SidePair]:
    """Read back a manifest; the returned pairs carry metadata only (no
    view loaders)."""
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"pair manifest not found: {path}")
    rows: list[SidePair] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != MANIFEST_COLUMNS:
            raise InvalidInputError(
                f"manifest header {header} != expected {MANIFEST_COLUMNS}"
            )
        for row in reader:
            if len(row) != len(MANIFEST_COLUMNS):
                raise InvalidInputError(f"malformed manifest row: {row}")
            pair_id, parcel_id, face_id, label, kind, diff = row
            rows.append(
                SidePair(
                    pair_id=pair_id,
                    parcel_id=parcel_id,
                    face_id=face_id,
                    label=label == "1",
                    tamper_type=kind or None,
                    difficulty=diff or None,
                )
            )
    return rows


def parcel_labels(pairs: Sequence[SidePair]) -> dict[str, bool]:
    """Ground-truth parcel verdicts: OR over each parcel's pair labels."""
    out: dict[str, bool] = {}
    for p in pairs:
        out[p.parcel_id] = out.get(p.parcel_id, False) or p.label
    return out
