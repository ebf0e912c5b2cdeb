"""Synthetic parcel benchmark: textured cuboids rendered under a pinhole
camera, with seeded tampering injected into face textures.

Everything is reproducible from integer seeds: texture generation, pose
sampling, tampering placement, and benchmark assembly all derive from
substream generators spawned off one master seed, so regenerating with the
same arguments is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import (
    ANNOTATABLE_FACES,
    DIFFICULTIES,
    TAMPER_TYPES,
    AnnotationRecord,
    TextureStore,
    build_pairs,
    clear_image_cache,
    compose_texture_map,
    save_annotations,
    save_texture_map,
    write_pair_manifest,
)
from .errors import DegeneratePoseError, InvalidInputError
from .geometry import (
    DEFAULT_RECTIFIED_SIZE,
    FACE_CYCLES,
    FACE_NAMES,
    Cuboid,
    annotation_faces,
    apply_homography,
    estimate_homography,
    order_keypoints,
    project_cuboid,
    rotation_from_euler,
)
from .raster import Raster, gaussian_blur, sample_bilinear, write_png

#: The six (type, difficulty) combinations, in round-robin assignment order.
TAMPER_COMBOS = tuple((t, d) for t in TAMPER_TYPES for d in DIFFICULTIES)


@dataclass(frozen=True)
class TextureSpec:
    """Knobs for the procedural cardboard-and-print face textures."""

    base_range: tuple[float, float] = (0.52, 0.72)
    tint: tuple[float, float, float] = (1.0, 0.87, 0.70)
    noise_amp: float = 0.05
    marks_range: tuple[int, int] = (1, 4)
    smooth_sigma: float = 1.1


@dataclass(frozen=True)
class SceneConfig:
    """One render's full recipe: the parcel box, camera, pose ranges, and
    texture spec.  Pose angles are drawn inside the ranges; signs are random
    unless pinned via yaw_sign/pitch_sign (used for reference captures)."""

    seed: int
    dims_mm: tuple[float, float, float] = (300.0, 260.0, 220.0)
    distance_range: tuple[float, float] = (2.6, 3.4)
    yaw_range: tuple[float, float] = (20.0, 45.0)
    pitch_range: tuple[float, float] = (20.0, 45.0)
    roll_limit: float = 8.0
    image_size: int = 1024
    focal: float = 1250.0
    margin_px: float = 8.0
    yaw_sign: int = 0
    pitch_sign: int = 0
    brightness_range: tuple[float, float] = (0.85, 1.15)
    texture: TextureSpec = field(default_factory=TextureSpec)

    def __post_init__(self) -> None:
        for name, rng_ in (("yaw", self.yaw_range), ("pitch", self.pitch_range)):
            if not 2.0 <= rng_[0] <= rng_[1]:
                raise InvalidInputError(
                    f"{name}_range must stay at least 2 degrees from face-on "
                    f"and be ordered, got {rng_}"
                )
        if any(d <= 0 for d in self.dims_mm):
            raise InvalidInputError(f"dims must be positive, got {self.dims_mm}")
        if self.distance_range[0] > self.distance_range[1] or self.distance_range[0] <= 1.0:
            raise InvalidInputError(f"bad distance range {self.distance_range}")
        if self.yaw_sign not in (-1, 0, 1) or self.pitch_sign not in (-1, 0, 1):
            raise InvalidInputError("pose signs must be -1, 0 (random) or 1")
        if self.image_size < 64:
            raise InvalidInputError("image size too small")
        b_lo, b_hi = self.brightness_range
        if not 0.0 < b_lo <= b_hi:
            raise InvalidInputError(f"bad brightness range {self.brightness_range}")


@dataclass(frozen=True)
class TamperSpec:
    """A seeded tampering instance for one face.

    ``face_size_mm`` feeds the physical-unit mapping: artifact sizes given
    in millimetres convert to texture pixels via the face's mm -> px scale.
    """

    type: str
    difficulty: str
    face_id: str
    seed: int
    face_size_mm: tuple[float, float] = (300.0, 300.0)

    def __post_init__(self) -> None:
        if self.type not in TAMPER_TYPES:
            raise InvalidInputError(f"type {self.type!r} not in {TAMPER_TYPES}")
        if self.difficulty not in DIFFICULTIES:
            raise InvalidInputError(
                f"difficulty {self.difficulty!r} not in {DIFFICULTIES}"
            )


def face_size_mm(dims_mm: Sequence[float], face_name: str) -> tuple[float, float]:
    """Physical (horizontal, vertical) extent of a face's texture plane."""
    w, h, d = dims_mm
    spans = {
        "front": (w, h), "back": (w, h),
        "side_a": (d, h), "side_b": (d, h),
        "top": (w, d), "bottom": (w, d),
    }
    return spans[face_name]


def mm_to_px(
    mm: float,
    face_mm: tuple[float, float],
    size: int = DEFAULT_RECTIFIED_SIZE,
) -> float:
    """Physical millimetres to texture pixels via the face's mean side."""
    return mm * size / float(np.mean(face_mm))


# ---------------------------------------------------------------- textures

def _paint_rotated_rect(arr, center, angle_deg, length, width, color, alpha=1.0):
    """Blend a rotated rectangle into ``arr`` (in place)."""
    h, w = arr.shape[:2]
    ang = math.radians(angle_deg)
    u = np.array([math.cos(ang), math.sin(ang)])
    v = np.array([-math.sin(ang), math.cos(ang)])
    half = (abs(u[0]) * length + abs(v[0]) * width) / 2, (
        abs(u[1]) * length + abs(v[1]) * width
    ) / 2
    x0 = max(int(center[0] - half[0] - 1), 0)
    x1 = min(int(center[0] + half[0] + 2), w)
    y0 = max(int(center[1] - half[1] - 1), 0)
    y1 = min(int(center[1] + half[1] + 2), h)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx, dy = xs - center[0], ys - center[1]
    inside = (np.abs(dx * u[0] + dy * u[1]) <= length / 2) & (
        np.abs(dx * v[0] + dy * v[1]) <= width / 2
    )
    region = arr[y0:y1, x0:x1]
    col = np.asarray(color) if region.ndim == 3 else float(np.mean(color))
    region[inside] = (1 - alpha) * region[inside] + alpha * col


def _paint_polyline(arr, pts, width, color, alpha=1.0):
    """Blend a stroked polyline into ``arr`` (in place)."""
    h, w = arr.shape[:2]
    r = width / 2
    col = np.asarray(color) if arr.ndim == 3 else float(np.mean(color))
    for (ax, ay), (bx, by) in zip(pts[:-1], pts[1:]):
        x0 = max(int(min(ax, bx) - r - 1), 0)
        x1 = min(int(max(ax, bx) + r + 2), w)
        y0 = max(int(min(ay, by) - r - 1), 0)
        y1 = min(int(max(ay, by) + r + 2), h)
        if x0 >= x1 or y0 >= y1:
            continue
        ys, xs = np.mgrid[y0:y1, x0:x1]
        ex, ey = bx - ax, by - ay
        seg2 = ex * ex + ey * ey
        if seg2 < 1e-12:
            t = np.zeros_like(xs, dtype=float)
        else:
            t = np.clip(((xs - ax) * ex + (ys - ay) * ey) / seg2, 0.0, 1.0)
        d2 = (xs - (ax + t * ex)) ** 2 + (ys - (ay + t * ey)) ** 2
        inside = d2 <= r * r
        region = arr[y0:y1, x0:x1]
        region[inside] = (1 - alpha) * region[inside] + alpha * col


def generate_face_textures(
    seed: int, spec: TextureSpec | None = None, size: int = DEFAULT_RECTIFIED_SIZE
) -> dict[str, Raster]:
    """Procedural textures for all six faces: tinted cardboard with gentle
    noise, printed marks, and a shipping label on the identifier (front)
    side.  Pre-smoothed so re-rendering survives bilinear resampling."""
    spec = spec or TextureSpec()
    rng = np.random.default_rng(seed)
    base_value = rng.uniform(*spec.base_range)
    tint = np.asarray(spec.tint)
    out: dict[str, Raster] = {}
    for name in FACE_NAMES:
        value = np.clip(base_value + rng.uniform(-0.04, 0.04), 0.05, 0.9)
        arr = np.empty((size, size, 3))
        noise = rng.random((size, size))
        noise = gaussian_blur(Raster(noise), 3.0).data
        lo, hi = noise.min(), noise.max()
        noise = (noise - lo) / max(hi - lo, 1e-9) - 0.5
        arr[:] = (value + spec.noise_amp * noise)[:, :, None] * tint
        n_marks = int(rng.integers(spec.marks_range[0], spec.marks_range[1] + 1))
        for _ in range(n_marks):
            center = rng.uniform(0.12 * size, 0.88 * size, 2)
            angle = rng.uniform(0.0, 180.0)
            length = rng.uniform(0.10, 0.30) * size
            width = rng.uniform(0.03, 0.12) * size
            shade = rng.uniform(0.05, 0.35)
            _paint_rotated_rect(arr, center, angle, length, width,
                                (shade, shade, shade * 1.2), alpha=0.9)
        if name == "front":
            # the identifier-side shipping label every parcel carries
            center = rng.uniform(0.35 * size, 0.65 * size, 2)
            angle = rng.uniform(-10.0, 10.0)
            lw, lh = 0.42 * size, 0.30 * size
            _paint_rotated_rect(arr, center, angle, lw, lh, (0.96, 0.96, 0.94))
            for k in range(6):
                off = (k - 2.5) * lh / 8.0
                ang = math.radians(angle)
                bc = (center[0] - math.sin(ang) * off, center[1] + math.cos(ang) * off)
                _paint_rotated_rect(arr, bc, angle, lw * 0.8, lh / 22.0,
                                    (0.05, 0.05, 0.08))
        arr = gaussian_blur(Raster(np.clip(arr, 0.0, 1.0)), spec.smooth_sigma).data
        out[name] = Raster(np.clip(arr, 0.0, 1.0))
    return out


# --------------------------------------------------------------- tampering

def apply_tampering(texture: Raster, spec: TamperSpec) -> Raster:
    """Inject one tampering artifact into a face texture.

    The placement draws are identical across difficulties for a given seed;
    only size parameters differ, so the easy variant of any seed always
    changes a strictly larger pixel fraction than the hard one.
    """
    rng = np.random.default_rng(spec.seed)
    size = texture.height
    if texture.width != size:
        raise InvalidInputError("face textures must be square")
    arr = texture.data.copy()

    # difficulty-independent placement draws (keep count fixed!)
    center = rng.uniform(0.25 * size, 0.75 * size, 2)
    angle = rng.uniform(0.0, 180.0)
    u_size = rng.random()
    u_aspect = rng.random()

    hard = spec.difficulty == "hard"
    if spec.type == "label":
        frac = (0.08 + 0.07 * u_size) if hard else (0.35 + 0.15 * u_size)
        width = frac * size
        height = width * (0.55 + 0.35 * u_aspect)
        ang = (angle - 90.0) % 60.0 - 30.0  # labels sit mostly upright
        shade = 0.93 if hard else 0.97
        _paint_rotated_rect(arr, center, ang, width, height,
                            (shade, shade, shade - 0.02))
        if not hard:
            n_bars = 4 + int(rng.integers(0, 5))
            rad = math.radians(ang)
            for k in range(n_bars):
                off = (k - (n_bars - 1) / 2) * height * 0.6 / n_bars
                bc = (center[0] - math.sin(rad) * off, center[1] + math.cos(rad) * off)
                _paint_rotated_rect(arr, bc, ang, width * 0.75, height / (3 * n_bars),
                                    (0.06, 0.06, 0.1))
    elif spec.type == "tape":
        mm_w, mm_h = spec.face_size_mm
        long_axis = 0.0 if mm_w >= mm_h else 90.0
        ang = long_axis + (angle / 180.0 - 0.5) * 24.0
        length = (0.10 + 0.15 * u_size) * size if hard else (0.55 + 0.25 * u_size) * size
        width = 0.12 * size
        _paint_rotated_rect(arr, center, ang, length, width,
                            (0.88, 0.88, 0.85), alpha=0.35)
    else:  # writing
        n_strokes = 2 + int(3 * u_aspect)
        paths = []
        for _ in range(n_strokes):
            start = center + rng.uniform(-0.22, 0.22, 2) * size
            n_seg = 3 + int(rng.integers(0, 3))
            steps = rng.uniform(-0.16, 0.16, (n_seg, 2)) * size
            paths.append(np.clip(np.cumsum(np.vstack([start, steps]), axis=0),
                                 4.0, size - 5.0))
        mm = (1.5 + 1.5 * u_size) if hard else (5.0 + 10.0 * u_size)
        px = mm_to_px(mm, spec.face_size_mm, size)
        for path in paths:
            _paint_polyline(arr, path, px, (0.10, 0.10, 0.24), alpha=0.85)

    return Raster(np.clip(arr, 0.0, 1.0))


# --------------------------------------------------------------- rendering

def _sample_pose(cfg: SceneConfig, rng: np.random.Generator) -> Cuboid:
    size = cfg.image_size
    for _ in range(120):
        yaw_sign = cfg.yaw_sign or rng.choice([-1.0, 1.0])
        pitch_sign = cfg.pitch_sign or rng.choice([-1.0, 1.0])
        yaw = yaw_sign * rng.uniform(*cfg.yaw_range)
        pitch = pitch_sign * rng.uniform(*cfg.pitch_range)
        roll = rng.uniform(-cfg.roll_limit, cfg.roll_limit)
        dist = rng.uniform(*cfg.distance_range) * max(cfg.dims_mm)
        offset = rng.uniform(-0.03, 0.03, 2) * size
        cub = Cuboid(
            dims=tuple(cfg.dims_mm),
            rotation=rotation_from_euler(yaw, pitch, roll),
            translation=np.array([offset[0], offset[1], dist]),
            focal=cfg.focal,
            principal_point=(size / 2.0, size / 2.0),
        )
        proj = project_cuboid(cub)
        visible = proj.visible_faces()
        if len(visible) != 3 or FACE_NAMES.index("front") not in visible:
            continue
        lo, hi = cfg.margin_px, size - 1 - cfg.margin_px
        if proj.points.min() < lo or proj.points.max() > hi:
            continue
        try:
            order_keypoints(proj)
        except Exception:
            continue
        return cub
    raise DegeneratePoseError(
        "config does not admit a three-face pose with the identifier side "
        "visible and the parcel inside the frame"
    )


# rotated-grid supersampling offsets (in scene pixels): 4 taps per pixel
# averaged to keep foreshortened faces from aliasing
_SS_OFFSETS = np.array(
    [(-0.375, -0.125), (0.125, -0.375), (0.375, 0.125), (-0.125, 0.375)]
)


def _paint_projected_face(canvas, quad, texture, brightness):
    """Warp one face texture into the scene through its homography."""
    h, w = canvas.shape[:2]
    s = texture.height
    tex_corners = np.array([[0, 0], [s - 1, 0], [s - 1, s - 1], [0, s - 1]], float)
    hom = estimate_homography(quad, tex_corners)
    x0 = max(int(quad[:, 0].min()), 0)
    x1 = min(int(quad[:, 0].max()) + 2, w)
    y0 = max(int(quad[:, 1].min()), 0)
    y1 = min(int(quad[:, 1].max()) + 2, h)
    if x0 >= x1 or y0 >= y1:
        return
    pts = np.empty(((y1 - y0) * (x1 - x0), 2))
    pts[:, 0] = np.tile(np.arange(x0, x1, dtype=np.float64), y1 - y0)
    pts[:, 1] = np.repeat(np.arange(y0, y1, dtype=np.float64), x1 - x0)
    tex_pts = apply_homography(hom, pts)
    tx, ty = tex_pts[:, 0], tex_pts[:, 1]
    inside = (tx >= -0.5) & (tx <= s - 0.5) & (ty >= -0.5) & (ty <= s - 0.5)
    if not inside.any():
        return
    taps = apply_homography(
        hom, (pts[inside, None, :] + _SS_OFFSETS).reshape(-1, 2)
    ).clip(-0.5, s - 0.5)
    values = sample_bilinear(texture, taps[:, 0], taps[:, 1])
    if values.ndim == 1:
        values = values[:, None]
    values = values.reshape(-1, len(_SS_OFFSETS), values.shape[-1]).mean(axis=1)
    values = np.clip(values * brightness, 0.0, 1.0)
    region = canvas[y0:y1, x0:x1].reshape(-1, canvas.shape[2])
    region[inside] = values
    canvas[y0:y1, x0:x1] = region.reshape(y1 - y0, x1 - x0, canvas.shape[2])


def render_scene(
    cfg: SceneConfig,
    textures: Mapping[str, Raster],
    image_name: str = "scene.png",
    parcel_id: str = "parcel",
) -> tuple[Raster, AnnotationRecord]:
    """Render one capture and its exact ground-truth annotation.

    The pose is drawn from the config ranges with the config seed;
    identical inputs give a bit-identical image and record.  Each visible
    face is warped through its true homography with a seeded per-face
    brightness factor; the background is a seeded solid color.
    """
    missing = [f for f in FACE_NAMES if f not in textures]
    if missing:
        raise InvalidInputError(f"textures missing for faces: {missing}")
    rng = np.random.default_rng(cfg.seed)
    cub = _sample_pose(cfg, rng)
    proj = project_cuboid(cub)

    background = rng.uniform(0.06, 0.30, 3)
    canvas = np.broadcast_to(background, (cfg.image_size, cfg.image_size, 3)).copy()
    for f in proj.visible_faces():
        name = FACE_NAMES[f]
        quad = proj.points[list(FACE_CYCLES[f])]
        brightness = rng.uniform(*cfg.brightness_range)
        _paint_projected_face(canvas, quad, textures[name], brightness)

    record = AnnotationRecord(
        image=image_name,
        parcel_id=parcel_id,
        keypoints=order_keypoints(proj),
        faces=annotation_faces(proj),
        tampering={},
    )
    return Raster(np.clip(canvas, 0.0, 1.0)), record


# --------------------------------------------------------------- benchmark

def _split_alternating(
    indices: Sequence[int], start: int = 0
) -> tuple[list[int], list[int]]:
    train = [p for k, p in enumerate(indices, start) if k % 2 == 0]
    test = [p for k, p in enumerate(indices, start) if k % 2 == 1]
    return train, test


def generate_benchmark(
    n_parcels: int,
    images_per_parcel: int = 3,
    tamper_fraction: float = 0.5,
    base: SceneConfig | None = None,
    out_dir: str | Path = "bench",
) -> dict:
    """Generate a complete on-disk benchmark and return its manifest.

    Layout: ``images/*.png``, ``annotations.json`` (reference and test
    captures), ``references/<parcel>/<face>.png`` texture maps,
    ``manifest.json`` with every seed, plus parcel-split pair manifests
    ``pairs_train.csv`` / ``pairs_test.csv``.
    """
    if n_parcels < 1:
        raise InvalidInputError("need at least one parcel")
    if images_per_parcel < 1:
        raise InvalidInputError("need at least one capture per parcel")
    if not 0.0 <= tamper_fraction <= 1.0:
        raise InvalidInputError("tamper fraction must be inside [0, 1]")
    base = base if base is not None else SceneConfig(seed=0)
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    clear_image_cache()  # output paths may shadow earlier runs in-process

    master = np.random.default_rng(base.seed)
    n_tampered = int(round(n_parcels * tamper_fraction))
    tampered_set = set(master.permutation(n_parcels)[:n_tampered].tolist())
    parcel_seeds = master.integers(2**62, size=n_parcels)

    ref_cfg = replace(base, yaw_range=(22.0, 42.0), pitch_range=(22.0, 42.0))
    records: list[AnnotationRecord] = []
    test_records: list[AnnotationRecord] = []
    manifest_parcels = []
    # The parcel split alternates, so a single global round-robin would
    # alias against it and starve one half of whole combos; cycling the
    # combos per split half keeps every (type, difficulty) in both halves.
    split_half = {p: k % 2 for k, p in enumerate(sorted(tampered_set))}
    combo_counters = [0, 0]

    for i in range(n_parcels):
        pid = f"P{i:03d}"
        prng = np.random.default_rng(parcel_seeds[i])
        dims = tuple(float(v) for v in prng.uniform(200.0, 400.0, 3))
        texture_seed = int(prng.integers(2**62))
        textures = generate_face_textures(texture_seed, base.texture)

        # two reference captures at opposite pose signs covering all 5 faces
        for _ in range(40):
            seeds = [int(prng.integers(2**62)) for _ in range(2)]
            cfgs = [
                replace(ref_cfg, seed=seeds[0], dims_mm=dims, yaw_sign=1, pitch_sign=1),
                replace(ref_cfg, seed=seeds[1], dims_mm=dims, yaw_sign=-1, pitch_sign=-1),
            ]
            refs = [
                render_scene(c, textures, f"images/{pid}_ref{k}.png", pid)
                for k, c in enumerate(cfgs)
            ]
            covered = set(refs[0][1].faces) | set(refs[1][1].faces)
            if covered == set(ANNOTATABLE_FACES):
                break
        else:
            raise DegeneratePoseError(
                f"could not cover all five faces of {pid} with two references"
            )
        ref_seeds = seeds

        tampered = i in tampered_set
        specs: list[TamperSpec] = []
        if tampered:
            face_pick = sorted(
                prng.choice(len(ANNOTATABLE_FACES), size=3, replace=False).tolist()
            )
            half = split_half[i]
            for j, f_idx in enumerate(face_pick):
                face = ANNOTATABLE_FACES[f_idx]
                kind, diff = TAMPER_COMBOS[
                    (combo_counters[half] + j) % len(TAMPER_COMBOS)
                ]
                specs.append(
                    TamperSpec(
                        type=kind,
                        difficulty=diff,
                        face_id=face,
                        seed=int(prng.integers(2**62)),
                        face_size_mm=face_size_mm(dims, face),
                    )
                )
            combo_counters[half] += len(face_pick)
        test_textures = dict(textures)
        for spec in specs:
            test_textures[spec.face_id] = apply_tampering(
                textures[spec.face_id], spec
            )
        tampered_faces = {s.face_id: (s.type, s.difficulty) for s in specs}

        # test captures; for tampered parcels, retry until every tampered
        # face is visible in at least one capture so each artifact yields
        # at least one pair
        for _ in range(25):
            test_seeds = [int(prng.integers(2**62)) for _ in range(images_per_parcel)]
            shots = [
                render_scene(
                    replace(base, seed=s, dims_mm=dims),
                    test_textures,
                    f"images/{pid}_t{j}.png",
                    pid,
                )
                for j, s in enumerate(test_seeds)
            ]
            seen = set().union(*(set(rec.faces) for _, rec in shots))
            if set(tampered_faces) <= seen:
                break

        for img, rec in refs:
            write_png(img, out / rec.image)
            records.append(rec)
        for img, rec in shots:
            write_png(img, out / rec.image)
            rec = replace(
                rec,
                tampering={
                    f: tampered_faces[f] for f in rec.faces if f in tampered_faces
                },
            )
            records.append(rec)
            test_records.append(rec)

        ref_records = [rec for _, rec in refs]
        save_texture_map(
            compose_texture_map(ref_records, out), out / "references"
        )
        manifest_parcels.append(
            {
                "parcel_id": pid,
                "parcel_seed": int(parcel_seeds[i]),
                "dims_mm": list(dims),
                "texture_seed": texture_seed,
                "reference_seeds": ref_seeds,
                "test_seeds": test_seeds,
                "tampered": tampered,
                "tampering": [
                    {
                        "face": s.face_id,
                        "type": s.type,
                        "difficulty": s.difficulty,
                        "seed": s.seed,
                        "face_size_mm": list(s.face_size_mm),
                    }
                    for s in specs
                ],
            }
        )

    save_annotations(records, out / "annotations.json")

    store = TextureStore(out / "references")
    pairs = build_pairs(test_records, store, out)
    tampered_sorted = sorted(p for p in range(n_parcels) if p in tampered_set)
    clean_sorted = sorted(p for p in range(n_parcels) if p not in tampered_set)
    # parity carries across the groups so tiny datasets still get a test half
    train_idx, test_idx = [], []
    offset = 0
    for group in (tampered_sorted, clean_sorted):
        tr, te = _split_alternating(group, offset)
        train_idx += tr
        test_idx += te
        offset += len(group)
    train_parcels = {f"P{i:03d}" for i in train_idx}
    write_pair_manifest(
        [p for p in pairs if p.parcel_id in train_parcels], out / "pairs_train.csv"
    )
    write_pair_manifest(
        [p for p in pairs if p.parcel_id not in train_parcels], out / "pairs_test.csv"
    )

    manifest = {
        "seed": base.seed,
        "n_parcels": n_parcels,
        "images_per_parcel": images_per_parcel,
        "tamper_fraction": tamper_fraction,
        "image_size": base.image_size,
        "train_parcels": sorted(f"P{i:03d}" for i in train_idx),
        "test_parcels": sorted(f"P{i:03d}" for i in test_idx),
        "parcels": manifest_parcels,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    return manifest
