"""Cuboid projection, corner ordering, face rectification, and lens distortion.

Coordinate conventions: camera at the origin of a right-handed frame with
x right, y down, z forward (into the scene). Image coordinates are
(x=column, y=row) with the center of pixel (row r, col c) at (c, r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import (
    AmbiguousOrderingError,
    DegenerateConfigurationError,
    DegenerateFaceError,
    DegeneratePoseError,
    InvalidInputError,
    OutOfBoundsError,
    UnsupportedViewError,
)
from .raster import Raster, _bilinear_gather

DEFAULT_RECTIFIED_SIZE = 400
MIN_FACE_AREA = 25.0  # px^2; smaller quads are useless for comparison
X_TIE_TOLERANCE = 1e-9

# Direction scored against visible-face normals to pick the "front" face
# for corner ordering: mostly toward the camera, leaning to one side so the
# choice is unique for generic poses.
FRONT_SELECTOR = np.array([1.0, 0.0, -0.5]) / math.sqrt(1.25)

# Model-space corners: corner i has coordinate signs from its bits
# (bit 0 -> x, bit 1 -> y, bit 2 -> z), sign +1 when the bit is set.
CORNER_SIGNS = np.array([[1 if i & b else -1 for b in (1, 2, 4)] for i in range(8)], dtype=np.float64)

# The six faces in a fixed order, each with its outward model normal and a
# corner cycle wound so that a visible face projects with positive shoelace
# area in image coordinates. The first cycle entry anchors the texture
# origin for that face, so the same physical corner maps to the top-left of
# the rectified view in every image.
FACE_NAMES = ("front", "back", "side_a", "side_b", "top", "bottom")
FACE_NORMALS = np.array(
    [
        [0.0, 0.0, -1.0],  # front
        [0.0, 0.0, 1.0],  # back
        [-1.0, 0.0, 0.0],  # side_a
        [1.0, 0.0, 0.0],  # side_b
        [0.0, -1.0, 0.0],  # top
        [0.0, 1.0, 0.0],  # bottom
    ]
)
FACE_CYCLES = (
    (0, 1, 3, 2),  # front
    (4, 6, 7, 5),  # back
    (4, 0, 2, 6),  # side_a
    (1, 5, 7, 3),  # side_b
    (4, 5, 1, 0),  # top
    (2, 3, 7, 6),  # bottom
)

# corner index -> the 3 face indices meeting there
CORNER_FACES = tuple(
    tuple(f for f, cyc in enumerate(FACE_CYCLES) if i in cyc) for i in range(8)
)

OPPOSITE_FACE = {"front": "back", "back": "front", "side_a": "side_b",
                 "side_b": "side_a", "top": "bottom", "bottom": "top"}


def polygon_area(corners: np.ndarray) -> float:
    """Signed shoelace area of a polygon in image coordinates."""
    pts = np.asarray(corners, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p1, p2, p3, p4) -> bool:
    """True if open segments p1-p2 and p3-p4 properly intersect."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != d2 and d3 != d4


@dataclass(frozen=True, eq=False)
class Cuboid:
    """A box of physical dimensions `dims` posed in front of a pinhole camera."""

    dims: tuple[float, float, float]  # (width, height, depth) along model x, y, z
    rotation: np.ndarray  # 3x3, model -> camera
    translation: np.ndarray  # model origin in camera coordinates
    focal: float  # focal length in pixels
    principal_point: tuple[float, float]

    def __post_init__(self):
        if any(not (d > 0) for d in self.dims):
            raise InvalidInputError(f"cuboid dims must be positive, got {self.dims}")
        if not (self.focal > 0):
            raise InvalidInputError(f"focal length must be positive, got {self.focal}")
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise InvalidInputError(f"rotation must be 3x3, got {r.shape}")
        if np.max(np.abs(r @ r.T - np.eye(3))) > 1e-9:
            raise InvalidInputError("rotation matrix is not orthonormal (tolerance 1e-9)")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def corners_model(self) -> np.ndarray:
        return CORNER_SIGNS * (np.asarray(self.dims) / 2.0)


@dataclass(frozen=True, eq=False)
class ProjectedCuboid:
    """Projection of a cuboid: 8 image points plus face incidence and visibility."""

    points: np.ndarray  # (8, 2) image coordinates
    face_visibility: np.ndarray  # (6,) bool, FACE_NAMES order
    face_normals_cam: np.ndarray  # (6, 3) outward unit normals in camera coordinates

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        vis = np.array(self.face_visibility, dtype=bool)
        nrm = np.array(self.face_normals_cam, dtype=np.float64)
        if pts.shape != (8, 2) or vis.shape != (6,) or nrm.shape != (6, 3):
            raise InvalidInputError("projected cuboid has wrong field shapes")
        for a in (pts, vis, nrm):
            a.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "face_visibility", vis)
        object.__setattr__(self, "face_normals_cam", nrm)

    def visible_faces(self) -> list[int]:
        return [i for i in range(6) if self.face_visibility[i]]


@dataclass(frozen=True, eq=False)
class Keypoints8:
    """The 8 cuboid corners in canonical order (see order_keypoints)."""

    points: np.ndarray  # (8, 2)
    visibility: np.ndarray  # (8,) bool

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        vis = np.array(self.visibility, dtype=bool)
        if pts.shape != (8, 2):
            raise InvalidInputError(f"keypoints must be (8, 2), got {pts.shape}")
        if vis.shape != (8,):
            raise InvalidInputError(f"visibility must be (8,), got {vis.shape}")
        pts.flags.writeable = False
        vis.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "visibility", vis)


@dataclass(frozen=True, eq=False)
class FaceQuad:
    """Four image corners of one parcel face, in canonical winding.

    The corner order is meaningful: corners[0] maps to the top-left of the
    rectified view, and the cycle must run with positive shoelace area.
    """

    corners: np.ndarray  # (4, 2)
    face_id: str | None = None

    def __post_init__(self):
        pts = np.array(self.corners, dtype=np.float64)
        if pts.shape != (4, 2):
            raise InvalidInputError(f"quad must be (4, 2), got {pts.shape}")
        area = polygon_area(pts)
        if _segments_cross(pts[0], pts[1], pts[2], pts[3]) or _segments_cross(pts[1], pts[2], pts[3], pts[0]):
            raise DegenerateFaceError(f"face quad self-intersects (face_id={self.face_id})")
        if area < MIN_FACE_AREA:
            raise DegenerateFaceError(
                f"face quad area {area:.3f} px^2 below minimum {MIN_FACE_AREA} "
                f"or wrong winding (face_id={self.face_id})"
            )
        pts.flags.writeable = False
        object.__setattr__(self, "corners", pts)

    @property
    def area(self) -> float:
        return polygon_area(self.corners)


@dataclass(frozen=True)
class DistortionParams:
    """Radial polynomial r_src = r_dist * (a*r^3 + b*r^2 + c*r + d)."""

    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 1.0

    def radial_factor(self, r: np.ndarray | float):
        return self.a * r**3 + self.b * r**2 + self.c * r + self.d

    def is_identity(self) -> bool:
        return self.a == 0.0 and self.b == 0.0 and self.c == 0.0 and self.d == 1.0


def rotation_from_euler(yaw_deg: float, pitch_deg: float, roll_deg: float = 0.0) -> np.ndarray:
    """Rotation matrix from yaw (about y), pitch (about x), roll (about z), in degrees.

    Composed as R = Rz(roll) @ Rx(pitch) @ Ry(yaw), i.e. yaw applied first.
    """
    cy, sy = math.cos(math.radians(yaw_deg)), math.sin(math.radians(yaw_deg))
    cp, sp = math.cos(math.radians(pitch_deg)), math.sin(math.radians(pitch_deg))
    cr, sr = math.cos(math.radians(roll_deg)), math.sin(math.radians(roll_deg))
    ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]])
    rz = np.array([[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]])
    return rz @ rx @ ry


def project_cuboid(cuboid: Cuboid) -> ProjectedCuboid:
    """Project all 8 corners and decide which faces the camera can see."""
    cam = cuboid.corners_model() @ cuboid.rotation.T + cuboid.translation
    if np.any(cam[:, 2] <= 1e-9):
        raise DegeneratePoseError("cuboid corner at or behind the camera plane")
    pts = cuboid.focal * cam[:, :2] / cam[:, 2:3] + np.asarray(cuboid.principal_point)
    normals_cam = FACE_NORMALS @ cuboid.rotation.T
    visibility = np.empty(6, dtype=bool)
    for f in range(6):
        center = cam[list(FACE_CYCLES[f])].mean(axis=0)
        visibility[f] = float(normals_cam[f] @ center) < 0.0
    return ProjectedCuboid(pts, visibility, normals_cam)


def order_assignment(proj: ProjectedCuboid) -> tuple[int, ...]:
    """Map canonical keypoint slots to model corner indices.

    Slot semantics (counting visible faces that meet at each corner):
      0: on all three visible faces
      1: front-face corner where the other two faces are hidden
      2/3: left/right front-face corners on two visible faces
      4: rear corner on two visible faces
      5: fully self-occluded corner
      6/7: left/right rear corners on one visible face
    "Front" is the visible face whose outward normal best matches
    FRONT_SELECTOR; left/right are decided on image x with ties rejected.
    """
    visible = proj.visible_faces()
    if len(visible) != 3:
        raise UnsupportedViewError(f"expected exactly 3 visible faces, got {len(visible)}")
    alpha = [sum(1 for f in CORNER_FACES[i] if proj.face_visibility[f]) for i in range(8)]

    k0s = [i for i in range(8) if alpha[i] == 3]
    k5s = [i for i in range(8) if alpha[i] == 0]
    if len(k0s) != 1 or len(k5s) != 1:
        raise UnsupportedViewError("visible faces do not meet at a single shared corner")
    k0, k5 = k0s[0], k5s[0]

    scores = [float(proj.face_normals_cam[f] @ FRONT_SELECTOR) for f in visible]
    front = visible[int(np.argmax(scores))]

    ones = [i for i in range(8) if alpha[i] == 1]
    twos = [i for i in range(8) if alpha[i] == 2]
    k1s = [i for i in ones if front in CORNER_FACES[i]]
    rear_ones = [i for i in ones if front not in CORNER_FACES[i]]
    front_twos = [i for i in twos if front in CORNER_FACES[i]]
    k4s = [i for i in twos if front not in CORNER_FACES[i]]
    if len(k1s) != 1 or len(rear_ones) != 2 or len(front_twos) != 2 or len(k4s) != 1:
        raise UnsupportedViewError("corner incidence does not match a 3-visible-face view")

    def left_right(pair):
        xa, xb = proj.points[pair[0], 0], proj.points[pair[1], 0]
        if abs(xa - xb) <= X_TIE_TOLERANCE:
            raise AmbiguousOrderingError(
                f"left/right tie: corners {pair[0]} and {pair[1]} share x={xa:.12g}"
            )
        return (pair[0], pair[1]) if xa < xb else (pair[1], pair[0])

    k2, k3 = left_right(front_twos)
    k6, k7 = left_right(rear_ones)
    return (k0, k1s[0], k2, k3, k4s[0], k5, k6, k7)


def order_keypoints(proj: ProjectedCuboid) -> Keypoints8:
    """Arrange the projected corners into the canonical 8-slot order."""
    assignment = order_assignment(proj)
    vis = np.ones(8, dtype=bool)
    vis[5] = False
    return Keypoints8(proj.points[list(assignment)], vis)


def annotation_faces(proj: ProjectedCuboid) -> dict[str, tuple[int, int, int, int]]:
    """Keypoint-slot cycle of every visible face, keyed by intrinsic name.

    Each cycle lists the slots in the face's texture corner order (the same
    physical corner lands at the rectified top-left in every view), which is
    exactly what annotation records store.
    """
    assignment = order_assignment(proj)
    slot_of = {corner: slot for slot, corner in enumerate(assignment)}
    return {
        FACE_NAMES[f]: tuple(slot_of[c] for c in FACE_CYCLES[f])
        for f in proj.visible_faces()
    }


def _canonical_cycle(pts: np.ndarray, idx: tuple[int, int, int, int]) -> np.ndarray:
    """Order cycle to positive shoelace area, keeping the first entry fixed."""
    cyc = list(idx)
    if polygon_area(pts[cyc]) < 0:
        cyc = [cyc[0], cyc[3], cyc[2], cyc[1]]
    return pts[cyc]


def visible_face_quads(kp: Keypoints8) -> list[FaceQuad]:
    """The three visible face quads implied by the canonical keypoint order.

    Returns view-relative quads: the front face, then the side sharing the
    left front corner, then the side sharing the right front corner. Quads
    from annotated records carry parcel-intrinsic face ids instead; these
    only know where they sit in the view.
    """
    pts = kp.points
    return [
        FaceQuad(_canonical_cycle(pts, (0, 2, 1, 3)), "front"),
        FaceQuad(_canonical_cycle(pts, (0, 2, 6, 4)), "left"),
        FaceQuad(_canonical_cycle(pts, (0, 3, 7, 4)), "right"),
    ]


def _normalization_transform(pts: np.ndarray) -> np.ndarray:
    """Similarity transform moving points to centroid 0, mean distance sqrt(2)."""
    centroid = pts.mean(axis=0)
    dist = np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean()
    if dist < 1e-12:
        raise DegenerateConfigurationError("all points coincide")
    s = math.sqrt(2.0) / dist
    return np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])


def estimate_homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Direct linear transform with point normalization.

    Both inputs are (N, 2), N >= 4, row i of src corresponding to row i of
    dst. The result maps src -> dst in homogeneous coordinates and is
    scaled so H[2, 2] == 1 whenever that entry is nonzero.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.ndim != 2 or src.shape[1] != 2 or src.shape != dst.shape or src.shape[0] < 4:
        raise InvalidInputError(f"need matching (N>=4, 2) point arrays, got {src.shape} and {dst.shape}")
    t_src = _normalization_transform(src)
    t_dst = _normalization_transform(dst)
    sn = src @ t_src[:2, :2].T + t_src[:2, 2]
    dn = dst @ t_dst[:2, :2].T + t_dst[:2, 2]

    n = src.shape[0]
    a = np.zeros((2 * n, 9))
    a[0::2, 0:2] = sn
    a[0::2, 2] = 1.0
    a[0::2, 6:8] = -sn * dn[:, :1]
    a[0::2, 8] = -dn[:, 0]
    a[1::2, 3:5] = sn
    a[1::2, 5] = 1.0
    a[1::2, 6:8] = -sn * dn[:, 1:2]
    a[1::2, 8] = -dn[:, 1]

    _, sv, vt = np.linalg.svd(a)
    if sv[-2] < 1e-10 * max(sv[0], 1e-300):
        raise DegenerateConfigurationError("point configuration is degenerate (collinear or repeated)")
    hn = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ hn @ t_src
    if abs(h[2, 2]) > 1e-12:
        h = h / h[2, 2]
    return h


def apply_homography(h: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Apply a 3x3 homography to (N, 2) points (or a single point)."""
    pts = np.asarray(pts, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    x, y = pts[:, 0], pts[:, 1]
    w = h[2, 0] * x + h[2, 1] * y + h[2, 2]
    if np.any(np.abs(w) < 1e-300):
        raise DegenerateConfigurationError("point maps to infinity under homography")
    out = np.empty_like(pts)
    out[:, 0] = (h[0, 0] * x + h[0, 1] * y + h[0, 2]) / w
    out[:, 1] = (h[1, 0] * x + h[1, 1] * y + h[1, 2]) / w
    return out[0] if single else out


def _out_square(out_size: int) -> np.ndarray:
    """Pixel centers of the rectified view's corner pixels: TL, TR, BR, BL."""
    s = float(out_size - 1)
    return np.array([[0.0, 0.0], [s, 0.0], [s, s], [0.0, s]])


def rectify_face(img: Raster, quad: FaceQuad, out_size: int = DEFAULT_RECTIFIED_SIZE) -> Raster:
    """Warp one face quad to a fronto-parallel out_size x out_size view.

    quad.corners[i] lands on the i-th corner pixel of the output
    (TL, TR, BR, BL). Every quad corner must lie inside the source image
    (within [-0.5, dim - 0.5] on each axis).
    """
    if out_size < 2:
        raise InvalidInputError(f"out_size must be >= 2, got {out_size}")
    offenders = []
    for i, (x, y) in enumerate(quad.corners):
        if not (-0.5 <= x <= img.width - 0.5 and -0.5 <= y <= img.height - 0.5):
            offenders.append(f"corner {i} at ({x:.2f}, {y:.2f})")
    if offenders:
        raise OutOfBoundsError(
            f"quad corners outside {img.width}x{img.height} image: " + "; ".join(offenders)
        )
    h = estimate_homography(_out_square(out_size), quad.corners)
    grid = np.arange(out_size, dtype=np.float64)
    gx, gy = np.meshgrid(grid, grid)
    denom = h[2, 0] * gx + h[2, 1] * gy + h[2, 2]
    xs = (h[0, 0] * gx + h[0, 1] * gy + h[0, 2]) / denom
    ys = (h[1, 0] * gx + h[1, 1] * gy + h[1, 2]) / denom
    return Raster(np.clip(_bilinear_gather(img.data, xs, ys), 0.0, 1.0))


def distortion_geometry(img_w: int, img_h: int) -> tuple[np.ndarray, float]:
    """Distortion center (pixel-center of the image) and normalization radius."""
    center = np.array([(img_w - 1) / 2.0, (img_h - 1) / 2.0])
    return center, min(img_w, img_h) / 2.0


def distort_point(point: np.ndarray, params: DistortionParams,
                  center: np.ndarray, norm_radius: float) -> np.ndarray:
    """Map a point in the distorted image to its source-image position.

    This is the same radial map the image warp applies per pixel: a point at
    normalized radius r in the distorted output samples the source at
    r * (a r^3 + b r^2 + c r + d).
    """
    point = np.asarray(point, dtype=np.float64)
    delta = point - center
    r = float(np.hypot(*delta)) / norm_radius
    return center + delta * params.radial_factor(r)


def undistort_point(point: np.ndarray, params: DistortionParams,
                    center: np.ndarray, norm_radius: float) -> np.ndarray:
    """Inverse of distort_point: where a source-image point lands after distortion.

    Solves r_dist * factor(r_dist) = r_src for the nonnegative root closest
    to the identity solution, then rescales the radial direction.
    """
    point = np.asarray(point, dtype=np.float64)
    delta = point - center
    r_src = float(np.hypot(*delta)) / norm_radius
    if r_src == 0.0:
        return center.copy()
    if params.a == 0.0 and params.b == 0.0 and params.c == 0.0:
        # constant radial factor inverts analytically (identity stays exact)
        return center + delta / params.d

    def g(r):
        return r * params.radial_factor(r) - r_src

    hi = max(r_src, 1e-6)
    for _ in range(80):
        if g(hi) > 0:
            break
        hi *= 1.5
    else:
        raise InvalidInputError(f"cannot invert radial distortion for r_src={r_src:g}")
    r_dist = brentq(g, 0.0, hi, xtol=1e-12, rtol=1e-15)
    return center + delta * (r_dist / r_src)


def apply_barrel_distortion(img: Raster, params: DistortionParams) -> Raster:
    """Resample an image through the radial polynomial distortion model.

    Each output pixel at normalized radius r pulls from the source at radius
    r * (a r^3 + b r^2 + c r + d); radius is normalized by half the smaller
    image dimension. Samples falling outside the source are black. The
    identity parameters (0, 0, 0, 1) reproduce the input exactly.
    """
    center, norm_radius = distortion_geometry(img.width, img.height)
    gx, gy = np.meshgrid(np.arange(img.width, dtype=np.float64),
                         np.arange(img.height, dtype=np.float64))
    dx = gx - center[0]
    dy = gy - center[1]
    r = np.hypot(dx, dy) / norm_radius
    factor = params.radial_factor(r)
    xs = center[0] + dx * factor
    ys = center[1] + dy * factor
    inside = (xs >= -0.5) & (xs <= img.width - 0.5) & (ys >= -0.5) & (ys <= img.height - 0.5)
    out = np.clip(_bilinear_gather(img.data, xs, ys), 0.0, 1.0)
    out[~inside] = 0.0
    return Raster(out)


def viewing_angle(quad: FaceQuad) -> float:
    """Worst-axis obliqueness of a face quad, in degrees within [0, 90].

    Measures the angle of the top edge (corners 0 -> 1) against the image
    x-axis and of the left edge (corners 0 -> 3) against the y-axis, both
    folded into [0, 90], and returns the larger. 0 for an axis-aligned
    square; 45 for one rotated by 45 degrees.
    """
    c = quad.corners
    top = c[1] - c[0]
    left = c[3] - c[0]
    ang_top = math.degrees(math.atan2(abs(top[1]), abs(top[0])))
    ang_left = math.degrees(math.atan2(abs(left[0]), abs(left[1])))
    return max(ang_top, ang_left)
