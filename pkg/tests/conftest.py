"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np

from tamperkit.geometry import Cuboid, rotation_from_euler


def make_cuboid(yaw=30.0, pitch=20.0, roll=0.0, dims=(300.0, 260.0, 220.0),
                dist_factor=2.8, focal=1250.0, image_size=1024,
                offset=(0.0, 0.0)) -> Cuboid:
    """A parcel posed at the given Euler angles, centered-ish in the frame."""
    dist = dist_factor * max(dims)
    return Cuboid(
        dims=tuple(dims),
        rotation=rotation_from_euler(yaw, pitch, roll),
        translation=np.array([offset[0], offset[1], dist]),
        focal=focal,
        principal_point=(image_size / 2.0, image_size / 2.0),
    )


def random_pose_cuboid(rng: np.random.Generator, min_angle=4.0, max_angle=55.0,
                       image_size=1024) -> Cuboid:
    """Random generic pose with three visible faces (both angles away from face-on).

    Perspective makes visibility depend on more than the Euler angles, so
    draws that do not show exactly three faces are rejected and resampled.
    """
    from tamperkit.geometry import project_cuboid

    for _ in range(200):
        yaw = rng.uniform(min_angle, max_angle) * rng.choice([-1.0, 1.0])
        pitch = rng.uniform(min_angle, max_angle) * rng.choice([-1.0, 1.0])
        roll = rng.uniform(-8.0, 8.0)
        dims = tuple(rng.uniform(220.0, 360.0, size=3))
        cub = make_cuboid(yaw, pitch, roll, dims=dims,
                          dist_factor=rng.uniform(2.6, 3.4), image_size=image_size,
                          offset=tuple(rng.uniform(-30.0, 30.0, size=2)))
        if len(project_cuboid(cub).visible_faces()) == 3:
            return cub
    raise RuntimeError("could not sample a three-face pose")


def checker(h, w, period=8):
    """Checkerboard test pattern in [0, 1]."""
    yy, xx = np.mgrid[0:h, 0:w]
    return (((yy // period) + (xx // period)) % 2).astype(np.float64)


def smooth_noise(rng: np.random.Generator, h, w, blur_sigma=2.0):
    """Band-limited random texture: blurred noise stretched to [0.1, 0.9]."""
    from tamperkit.raster import Raster, gaussian_blur

    base = rng.random((h, w))
    arr = gaussian_blur(Raster(base), blur_sigma).data
    lo, hi = arr.min(), arr.max()
    return 0.1 + 0.8 * (arr - lo) / (hi - lo)
