"""LiDAR object crops: box cropping, distance-gap clustering, resampling.

Conventions follow the KITTI object benchmark: Velodyne frame with x
forward, binary scans of little-endian float32 ``(x, y, z, reflectance)``
records, and calibration text files with one ``name: values`` matrix per
line.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import ParameterError, ParseError

__all__ = [
    "PointCloud",
    "CalibrationSet",
    "BBox2D",
    "project_to_image",
    "crop_to_bbox",
    "cluster_foreground",
    "resample",
    "read_velodyne_bin",
    "write_velodyne_bin",
    "read_calibration",
]

MIN_FORWARD = 5.0


@dataclass(frozen=True, eq=False)
class PointCloud:
    """``points`` is an (n, 4) array of x, y, z in metres and reflectance.

    An (n, 3) array gets zero reflectance.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1 and pts.size == 0:
            pts = pts.reshape(0, 4)
        if pts.ndim != 2 or pts.shape[1] not in (3, 4):
            raise ParameterError(f"points must have shape (n, 3) or (n, 4), got {pts.shape}")
        if pts.shape[1] == 3:
            pts = np.column_stack([pts, np.zeros(len(pts))])
        if not np.all(np.isfinite(pts)):
            raise ParameterError("point coordinates must be finite")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def xyz(self):
        return self.points[:, :3]

    @property
    def reflectance(self):
        return self.points[:, 3]


def _homogeneous(m, what):
    m = np.asarray(m, dtype=float)
    if m.shape == (3, 3):
        out = np.eye(4)
        out[:3, :3] = m
        return out
    if m.shape == (3, 4):
        return np.vstack([m, [0.0, 0.0, 0.0, 1.0]])
    if m.shape == (4, 4):
        return m.copy()
    raise ParameterError(f"{what} must be 3x3, 3x4 or 4x4, got {m.shape}")


@dataclass(frozen=True, eq=False)
class CalibrationSet:
    """Camera projection, rectification and LiDAR-to-camera transform.

    ``R_rect`` may be given as 3x3 and ``T_lidar_cam`` as 3x4; both are
    stored as 4x4 homogeneous matrices.
    """

    P_rect: np.ndarray
    R_rect: np.ndarray
    T_lidar_cam: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P_rect, dtype=float)
        if P.shape != (3, 4):
            raise ParameterError(f"P_rect must be 3x4, got {P.shape}")
        R = _homogeneous(self.R_rect, "R_rect")
        T = _homogeneous(self.T_lidar_cam, "T_lidar_cam")
        for name, m in (("P_rect", P), ("R_rect", R), ("T_lidar_cam", T)):
            if not np.all(np.isfinite(m)):
                raise ParameterError(f"{name} must be finite")
        rot = T[:3, :3]
        if not np.allclose(rot @ rot.T, np.eye(3), rtol=0, atol=1e-6):
            raise ParameterError("rotation block of T_lidar_cam is not orthonormal")
        object.__setattr__(self, "P_rect", P)
        object.__setattr__(self, "R_rect", R)
        object.__setattr__(self, "T_lidar_cam", T)

    @property
    def matrix(self):
        """The 3x4 map from homogeneous LiDAR points to image coordinates."""
        return self.P_rect @ self.R_rect @ self.T_lidar_cam


@dataclass(frozen=True)
class BBox2D:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for name in ("x_min", "y_min", "x_max", "y_max"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ParameterError(f"degenerate box {self}")


def project_to_image(pc: PointCloud, calib: CalibrationSet, return_index=False):
    """Project points onto the image plane.

    Returns an (m, 3) array of ``(u, v, depth)``; points with depth <= 0
    (behind the camera) are dropped. With ``return_index`` the indices of
    the kept points are returned as well.
    """
    pts = pc.points
    hom = np.column_stack([pts[:, :3], np.ones(len(pts))])
    proj = hom @ calib.matrix.T
    depth = proj[:, 2]
    keep = np.flatnonzero(depth > 0)
    uvd = np.column_stack([proj[keep, 0] / depth[keep], proj[keep, 1] / depth[keep], depth[keep]])
    if return_index:
        return uvd, keep
    return uvd


def crop_to_bbox(pc: PointCloud, calib: CalibrationSet, box: BBox2D, min_forward=MIN_FORWARD) -> PointCloud:
    """Points whose projection falls inside ``box``.

    Points with forward coordinate ``x < min_forward`` are discarded first.
    The box test is inclusive and widened by one pixel on the maximum
    edges: ``x_min <= u <= x_max + 1`` and ``y_min <= v <= y_max + 1``.
    """
    ahead = pc.points[pc.points[:, 0] >= min_forward]
    uvd, idx = project_to_image(PointCloud(ahead), calib, return_index=True)
    u, v = uvd[:, 0], uvd[:, 1]
    inside = (u >= box.x_min) & (u <= box.x_max + 1) & (v >= box.y_min) & (v <= box.y_max + 1)
    return PointCloud(ahead[idx[inside]])


def cluster_foreground(pc: PointCloud, gap=0.25, confidence=1.0) -> PointCloud:
    """Keep the dominant range cluster of an object crop.

    Points are sorted by distance from the sensor origin and split into
    clusters wherever consecutive distances differ by more than ``gap``.
    Cluster ``k`` (1-based, nearest first) of ``cl`` clusters is scored by
    ``size_k * (confidence - (k - 1) / cl)``; the best score wins, with ties
    going to the nearer cluster. Points are returned nearest first.
    """
    if len(pc) == 0:
        raise ParameterError("cannot cluster an empty point cloud")
    dist = np.linalg.norm(pc.xyz, axis=1)
    order = np.argsort(dist, kind="stable")
    steps = np.diff(dist[order]) > gap
    ids = np.concatenate([[0], np.cumsum(steps)])
    counts = np.bincount(ids)
    cl = counts.size
    weighted = counts * (confidence - np.arange(cl) / cl)
    chosen = int(np.argmax(weighted))
    return PointCloud(pc.points[order[ids == chosen]])


def resample(pc: PointCloud, target=512, k=4, seed=None) -> PointCloud:
    """Resize a crop to exactly ``target`` points.

    Larger crops are subsampled uniformly without replacement. Smaller crops
    keep every original point and gain synthetic points, each the midpoint
    (reflectance included) of a random original point and one of its ``k``
    nearest original neighbours.
    """
    n = len(pc)
    if n == 0:
        raise ParameterError("cannot resample an empty point cloud")
    if target < 1 or k < 1:
        raise ParameterError("target and k must be >= 1")
    rng = np.random.default_rng(seed)
    pts = pc.points
    if n == target:
        return PointCloud(pts.copy())
    if n > target:
        keep = np.sort(rng.choice(n, size=target, replace=False))
        return PointCloud(pts[keep])

    k_eff = min(k, n - 1)
    extra = target - n
    anchors = rng.integers(0, n, size=extra)
    if k_eff == 0:
        partners = anchors
    else:
        _, nbr = cKDTree(pc.xyz).query(pc.xyz, k=k_eff + 1)
        nbr = np.asarray(nbr).reshape(n, k_eff + 1)
        # drop each point's own index (duplicates may displace it from column 0)
        own = nbr == np.arange(n)[:, None]
        own[~own.any(axis=1), -1] = True
        nbr = nbr[~own].reshape(n, k_eff)
        partners = nbr[anchors, rng.integers(0, k_eff, size=extra)]
    synth = 0.5 * (pts[anchors] + pts[partners])
    return PointCloud(np.vstack([pts, synth]))


def read_velodyne_bin(path) -> PointCloud:
    raw = np.fromfile(path, dtype="<f4")
    if raw.size % 4:
        raise ParseError(f"{raw.size} floats is not a whole number of (x, y, z, r) records", path=path)
    return PointCloud(raw.reshape(-1, 4).astype(float))


def write_velodyne_bin(pc: PointCloud, path):
    pc.points.astype("<f4").tofile(os.fspath(path))


def read_calibration(path, camera=2) -> CalibrationSet:
    """Read a KITTI object calibration file.

    Uses ``P<camera>``, ``R0_rect`` and ``Tr_velo_to_cam``. Raw-sequence
    names (``P_rect_0<camera>``, ``R_rect_00``, ``Tr``) are accepted too.
    """
    mats = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if ":" not in line:
                raise ParseError("expected 'name: values'", line=lineno, path=path)
            key, values = line.split(":", 1)
            try:
                mats[key.strip()] = np.array([float(v) for v in values.split()])
            except ValueError:
                # non-numeric entries (e.g. calib_time) are not matrices
                continue

    def pick(*names, size):
        for name in names:
            if name in mats:
                if mats[name].size != size:
                    raise ParseError(f"{name} has {mats[name].size} values, expected {size}", path=path)
                return mats[name]
        raise ParseError(f"missing matrix {names[0]}", path=path)

    P = pick(f"P{camera}", f"P_rect_0{camera}", size=12).reshape(3, 4)
    R = pick("R0_rect", "R_rect_00", "R_rect", size=9).reshape(3, 3)
    T = pick("Tr_velo_to_cam", "Tr_velo_cam", "Tr", size=12).reshape(3, 4)
    return CalibrationSet(P, R, T)
