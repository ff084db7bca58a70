"""Crop, clean and resample one object from a synthetic LiDAR scene.

The scene holds a pedestrian-sized blob 12 m ahead, a wall behind it that
shares the same image box, and clutter elsewhere.
"""

import numpy as np

from logitbayes import BBox2D, CalibrationSet, PointCloud, cluster_foreground, crop_to_bbox, project_to_image, resample

rng = np.random.default_rng(1)

P = np.array([[721.5, 0.0, 609.6, 0.0], [0.0, 721.5, 172.9, 0.0], [0.0, 0.0, 1.0, 0.0]])
# Velodyne axes (x forward, y left, z up) to camera axes (x right, y down, z forward)
T = np.array([[0.0, -1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0], [1.0, 0.0, 0.0, 0.0]])
calib = CalibrationSet(P, np.eye(3), T)

person = rng.normal([12.0, 1.0, -0.6], [0.15, 0.2, 0.45], size=(364, 3))
wall = np.column_stack([np.full(150, 20.0), rng.uniform(-1, 3, 150), rng.uniform(-1.5, 1.5, 150)])
clutter = rng.uniform([3, -15, -2], [40, 15, 2], size=(2000, 3))
scene = PointCloud(np.vstack([person, wall, clutter]))

uv = project_to_image(PointCloud(person), calib)[:, :2]
box = BBox2D(*uv.min(axis=0), *uv.max(axis=0))
print(f"image box {box}")

crop = crop_to_bbox(scene, calib, box)
print(f"crop: {len(crop)} of {len(scene)} scene points")

fg = cluster_foreground(crop)
d = np.linalg.norm(fg.xyz, axis=1)
print(f"foreground: {len(fg)} points between {d.min():.1f} m and {d.max():.1f} m")

fixed = resample(fg, 512, seed=0)
print(f"resampled: {len(fg)} -> {len(fixed)} points")
