"""Projection, corner ordering, homography, rectification, and distortion."""

import itertools
import math

import numpy as np
import pytest

from conftest import checker, make_cuboid, random_pose_cuboid, smooth_noise
from tamperkit.errors import (
    AmbiguousOrderingError,
    DegenerateConfigurationError,
    DegenerateFaceError,
    DegeneratePoseError,
    InvalidInputError,
    OutOfBoundsError,
    UnsupportedViewError,
)
from tamperkit.geometry import (
    CORNER_FACES,
    FACE_CYCLES,
    FRONT_SELECTOR,
    Cuboid,
    DistortionParams,
    FaceQuad,
    Keypoints8,
    ProjectedCuboid,
    apply_barrel_distortion,
    apply_homography,
    distort_point,
    estimate_homography,
    order_assignment,
    order_keypoints,
    polygon_area,
    project_cuboid,
    rectify_face,
    rotation_from_euler,
    undistort_point,
    viewing_angle,
    visible_face_quads,
)
from tamperkit.raster import Raster, sample_bilinear


# ---------------------------------------------------------------- oracles

def assignment_satisfies_rules(perm, proj) -> bool:
    """Independent check of a corner labeling against the ordering rules."""
    vis = proj.face_visibility
    alpha = [sum(1 for f in CORNER_FACES[i] if vis[f]) for i in range(8)]
    visible = [f for f in range(6) if vis[f]]
    if len(visible) != 3:
        return False
    front = max(visible, key=lambda f: float(proj.face_normals_cam[f] @ FRONT_SELECTOR))
    x = proj.points[:, 0]
    k0, k1, k2, k3, k4, k5, k6, k7 = perm
    return (
        alpha[k0] == 3
        and alpha[k1] == 1 and front in CORNER_FACES[k1]
        and alpha[k2] == 2 and front in CORNER_FACES[k2]
        and alpha[k3] == 2 and front in CORNER_FACES[k3]
        and x[k2] < x[k3]
        and alpha[k4] == 2 and front not in CORNER_FACES[k4]
        and alpha[k5] == 0
        and alpha[k6] == 1 and front not in CORNER_FACES[k6]
        and alpha[k7] == 1 and front not in CORNER_FACES[k7]
        and x[k6] < x[k7]
    )


def flipped_projection(proj, image_height: float) -> ProjectedCuboid:
    """Mirror a projection about the horizontal midline (y -> H - y)."""
    pts = proj.points.copy()
    pts[:, 1] = image_height - pts[:, 1]
    normals = proj.face_normals_cam.copy()
    normals[:, 1] *= -1.0
    return ProjectedCuboid(pts, proj.face_visibility.copy(), normals)


# ---------------------------------------------------------------- projection

class TestProjectCuboid:
    def test_behind_camera_rejected(self):
        c = make_cuboid()
        bad = Cuboid(c.dims, c.rotation, np.array([0.0, 0.0, -100.0]), c.focal, c.principal_point)
        with pytest.raises(DegeneratePoseError):
            project_cuboid(bad)

    def test_head_on_shows_one_face(self):
        proj = project_cuboid(make_cuboid(yaw=0.0, pitch=0.0))
        assert len(proj.visible_faces()) == 1

    def test_generic_pose_shows_three_faces(self):
        proj = project_cuboid(make_cuboid(yaw=30.0, pitch=20.0))
        assert len(proj.visible_faces()) == 3

    def test_visible_faces_never_include_opposite_pairs(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            proj = project_cuboid(random_pose_cuboid(rng))
            vis = proj.visible_faces()
            for a, b in [(0, 1), (2, 3), (4, 5)]:
                assert not (a in vis and b in vis)

    def test_rotation_must_be_orthonormal(self):
        with pytest.raises(InvalidInputError):
            Cuboid((1, 1, 1), np.eye(3) * 1.001, np.array([0, 0, 10.0]), 100.0, (50, 50))


# ---------------------------------------------------------------- ordering

class TestOrderKeypoints:
    def test_matches_rule_oracle_on_random_poses(self):
        rng = np.random.default_rng(123)
        for _ in range(200):
            proj = project_cuboid(random_pose_cuboid(rng))
            assert assignment_satisfies_rules(order_assignment(proj), proj)

    def test_unique_over_full_permutation_space(self):
        # Exhaustive: exactly one of the 8! labelings satisfies every rule.
        rng = np.random.default_rng(7)
        for _ in range(12):
            proj = project_cuboid(random_pose_cuboid(rng))
            valid = [p for p in itertools.permutations(range(8))
                     if assignment_satisfies_rules(p, proj)]
            assert valid == [order_assignment(proj)]

    def test_vertical_flip_invariance(self):
        rng = np.random.default_rng(99)
        for _ in range(100):
            proj = project_cuboid(random_pose_cuboid(rng))
            assert order_assignment(proj) == order_assignment(flipped_projection(proj, 1024.0))

    def test_horizontal_flip_changes_assignment(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            proj = project_cuboid(random_pose_cuboid(rng))
            pts = proj.points.copy()
            pts[:, 0] = 1024.0 - pts[:, 0]
            normals = proj.face_normals_cam.copy()
            normals[:, 0] *= -1.0
            mirrored = ProjectedCuboid(pts, proj.face_visibility.copy(), normals)
            assert order_assignment(mirrored) != order_assignment(proj)

    def test_left_right_rules_hold(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            kp = order_keypoints(project_cuboid(random_pose_cuboid(rng)))
            assert kp.points[2, 0] < kp.points[3, 0]
            assert kp.points[6, 0] < kp.points[7, 0]
            assert not kp.visibility[5] and kp.visibility.sum() == 7

    def test_face_on_view_rejected(self):
        with pytest.raises(UnsupportedViewError):
            order_keypoints(project_cuboid(make_cuboid(yaw=0.0, pitch=0.0)))

    def test_two_face_view_rejected(self):
        with pytest.raises(UnsupportedViewError):
            order_keypoints(project_cuboid(make_cuboid(yaw=25.0, pitch=0.0)))

    def test_x_tie_is_ambiguous(self):
        proj = project_cuboid(make_cuboid(yaw=30.0, pitch=20.0))
        assignment = order_assignment(proj)
        pts = proj.points.copy()
        pts[assignment[3], 0] = pts[assignment[2], 0]  # force K2/K3 tie
        tied = ProjectedCuboid(pts, proj.face_visibility.copy(), proj.face_normals_cam.copy())
        with pytest.raises(AmbiguousOrderingError):
            order_assignment(tied)


# ---------------------------------------------------------------- face quads

class TestVisibleFaceQuads:
    def test_quads_match_projected_faces(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            cub = random_pose_cuboid(rng)
            proj = project_cuboid(cub)
            kp = order_keypoints(proj)
            quad_sets = [frozenset(map(tuple, q.corners)) for q in visible_face_quads(kp)]
            face_sets = [
                frozenset(map(tuple, proj.points[list(FACE_CYCLES[f])]))
                for f in proj.visible_faces()
            ]
            assert sorted(quad_sets, key=sorted) == sorted(face_sets, key=sorted)

    def test_quads_are_positively_wound_and_start_at_k0(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            kp = order_keypoints(project_cuboid(random_pose_cuboid(rng)))
            for q in visible_face_quads(kp):
                assert polygon_area(q.corners) > 0
                assert tuple(q.corners[0]) == tuple(kp.points[0])

    def test_tiny_quad_rejected(self):
        with pytest.raises(DegenerateFaceError):
            FaceQuad(np.array([[0, 0], [4, 0], [4, 4], [0, 4]], dtype=float))

    def test_bowtie_rejected(self):
        with pytest.raises(DegenerateFaceError):
            FaceQuad(np.array([[0, 0], [100, 100], [100, 0], [0, 100]], dtype=float))


# ---------------------------------------------------------------- homography

class TestHomography:
    def test_exact_on_random_quads(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            src = rng.uniform(0, 500, size=(4, 2))
            dst = rng.uniform(0, 500, size=(4, 2))
            if abs(polygon_area(src)) < 2000 or abs(polygon_area(dst)) < 2000:
                continue
            h = estimate_homography(src, dst)
            assert np.max(np.abs(apply_homography(h, src) - dst)) < 1e-9

    def test_scale_invariance_of_estimate(self):
        rng = np.random.default_rng(14)
        src = rng.uniform(0, 1, size=(4, 2))
        dst = rng.uniform(0, 1, size=(4, 2))
        h_small = estimate_homography(src, dst)
        h_big = estimate_homography(src * 1000 + 5000, dst)
        probe = rng.uniform(0.2, 0.8, size=(10, 2))
        np.testing.assert_allclose(
            apply_homography(h_small, probe),
            apply_homography(h_big, probe * 1000 + 5000),
            atol=1e-7,
        )

    def test_h22_normalized(self):
        h = estimate_homography(
            np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float),
            np.array([[2, 3], [7, 3.5], [6.5, 9], [1.5, 8]], dtype=float),
        )
        assert h[2, 2] == pytest.approx(1.0)

    def test_collinear_points_rejected(self):
        src = np.array([[0, 0], [1, 1], [2, 2], [3, 3]], dtype=float)
        dst = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
        with pytest.raises(DegenerateConfigurationError):
            estimate_homography(src, dst)

    def test_too_few_points_rejected(self):
        pts = np.zeros((3, 2))
        with pytest.raises(InvalidInputError):
            estimate_homography(pts, pts)


# ---------------------------------------------------------------- rectification

class TestRectifyFace:
    def test_identity_when_quad_is_the_image(self):
        rng = np.random.default_rng(21)
        arr = rng.random((400, 400))
        quad = FaceQuad(np.array([[0, 0], [399, 0], [399, 399], [0, 399]], dtype=float))
        out = rectify_face(Raster(arr), quad, 400)
        assert np.max(np.abs(out.data - arr)) < 1.0 / 255.0

    def test_round_trip_psnr(self):
        rng = np.random.default_rng(22)
        arr = smooth_noise(rng, 480, 480)
        quad = FaceQuad(np.array([[90, 60], [420, 100], [390, 430], [60, 380]], dtype=float))
        rect = rectify_face(Raster(arr), quad, 400)
        # warp the rectified view back onto the quad and compare inside it
        h = estimate_homography(quad.corners,
                                np.array([[0, 0], [399, 0], [399, 399], [0, 399]], dtype=float))
        yy, xx = np.mgrid[120:360, 120:360].astype(float)
        back = apply_homography(h, np.column_stack([xx.ravel(), yy.ravel()]))
        redrawn = sample_bilinear(rect.data, back[:, 0], back[:, 1])
        mse = np.mean((redrawn - arr[120:360, 120:360].ravel()) ** 2)
        psnr = 10 * math.log10(1.0 / mse)
        assert psnr > 30.0

    def test_out_of_bounds_corner_reported(self):
        img = Raster(np.zeros((100, 100)))
        quad = FaceQuad(np.array([[-3, 10], [80, 10], [80, 80], [10, 80]], dtype=float))
        with pytest.raises(OutOfBoundsError, match="corner 0"):
            rectify_face(img, quad, 50)


# ---------------------------------------------------------------- distortion

class TestDistortion:
    def test_identity_parameters_are_exact(self):
        rng = np.random.default_rng(23)
        arr = rng.integers(0, 256, size=(120, 160)).astype(float) / 255.0
        out = apply_barrel_distortion(Raster(arr), DistortionParams())
        np.testing.assert_array_equal(out.data, arr)

    def test_point_at_unit_radius(self):
        p = DistortionParams(a=0.16)
        center = np.array([0.0, 0.0])
        out = distort_point(np.array([100.0, 0.0]), p, center, 100.0)
        assert out[0] == pytest.approx(116.0, abs=1e-9)

    def test_inverse_round_trip(self):
        p = DistortionParams(a=0.08)
        center = np.array([200.0, 150.0])
        rng = np.random.default_rng(29)
        for _ in range(50):
            pt = center + rng.uniform(-1, 1, size=2) * 140.0
            src = distort_point(pt, p, center, 150.0)
            back = undistort_point(src, p, center, 150.0)
            assert np.max(np.abs(back - pt)) < 0.1

    def test_barrel_blanks_the_corners(self):
        img = Raster(np.ones((101, 101)))
        out = apply_barrel_distortion(img, DistortionParams(a=0.16))
        assert out.data[0, 0] == 0.0 and out.data[-1, -1] == 0.0
        assert out.data[50, 50] == 1.0

    def test_border_maps_strictly_inward_for_positive_a(self):
        p = DistortionParams(a=0.08)
        center = np.array([50.0, 50.0])
        edge = np.array([100.0, 50.0])
        src = distort_point(edge, p, center, 50.0)
        assert np.hypot(*(src - center)) > np.hypot(*(edge - center))


# ---------------------------------------------------------------- viewing angle

class TestViewingAngle:
    def test_axis_aligned_square(self):
        q = FaceQuad(np.array([[10, 10], [110, 10], [110, 110], [10, 110]], dtype=float))
        assert viewing_angle(q) == pytest.approx(0.0, abs=1e-12)

    def test_rotated_square(self):
        for deg in (30.0, 45.0):
            r = math.radians(deg)
            rot = np.array([[math.cos(r), -math.sin(r)], [math.sin(r), math.cos(r)]])
            base = np.array([[-50, -50], [50, -50], [50, 50], [-50, 50]], dtype=float)
            q = FaceQuad(base @ rot.T + 200.0)
            assert viewing_angle(q) == pytest.approx(deg, abs=1e-9)

    def test_result_bounded(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            kp = order_keypoints(project_cuboid(random_pose_cuboid(rng)))
            for q in visible_face_quads(kp):
                assert 0.0 <= viewing_angle(q) <= 90.0
