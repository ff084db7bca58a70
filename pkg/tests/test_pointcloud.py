import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.spatial.transform import Rotation

from logitbayes.exceptions import ParameterError
from logitbayes.pointcloud import (
    BBox2D,
    CalibrationSet,
    PointCloud,
    cluster_foreground,
    crop_to_bbox,
    project_to_image,
    read_calibration,
    read_velodyne_bin,
    resample,
    write_velodyne_bin,
)

from .oracles import cluster_pseudocode, crop_membership

P_IDENTITY = np.hstack([np.eye(3), np.zeros((3, 1))])
# Velodyne (x fwd, y left, z up) to camera (x right, y down, z fwd)
VELO_TO_CAM = np.array([[0.0, -1.0, 0.0, 0.0], [0.0, 0.0, -1.0, -0.08], [1.0, 0.0, 0.0, -0.27]])
P_KITTI_LIKE = np.array([[700.0, 0.0, 600.0, 45.0], [0.0, 700.0, 180.0, -0.3], [0.0, 0.0, 1.0, 0.005]])


@pytest.fixture
def identity_calib():
    return CalibrationSet(P_IDENTITY, np.eye(3), np.eye(4))


@pytest.fixture
def kitti_calib():
    return CalibrationSet(P_KITTI_LIKE, Rotation.from_euler("xyz", [0.4, -0.3, 0.2], degrees=True).as_matrix(), VELO_TO_CAM)


def _scene(rng, n=400):
    pts = np.column_stack([
        rng.uniform(-3, 40, n), rng.uniform(-10, 10, n), rng.uniform(-2, 2, n), rng.uniform(0, 1, n)
    ])
    return PointCloud(pts)


class TestProjection:
    def test_axis_point(self, identity_calib):
        uvd = project_to_image(PointCloud([[0.0, 0.0, 2.0]]), identity_calib)
        assert uvd.tolist() == [[0.0, 0.0, 2.0]]

    def test_perspective_division(self, identity_calib):
        uvd = project_to_image(PointCloud([[2.0, 4.0, 2.0]]), identity_calib)
        assert uvd[0, :2].tolist() == [1.0, 2.0]

    def test_optical_axis_hits_principal_point(self):
        P = np.array([[700.0, 0, 600, 0], [0, 700.0, 180, 0], [0, 0, 1.0, 0]])
        calib = CalibrationSet(P, np.eye(3), VELO_TO_CAM[:, :3])
        uvd = project_to_image(PointCloud([[10.0, 0.0, 0.0]]), calib)
        assert_allclose(uvd[0], [600.0, 180.0, 10.0])

    def test_behind_camera_dropped(self, identity_calib):
        uvd, idx = project_to_image(PointCloud([[0, 0, -1.0], [1, 1, 1.0], [0, 0, 0.0]]), identity_calib, return_index=True)
        assert idx.tolist() == [1]

    def test_rigid_pretransform_commutes(self, kitti_calib, rng):
        pc = _scene(rng)
        T = np.eye(4)
        T[:3, :3] = Rotation.from_euler("z", 7, degrees=True).as_matrix()
        T[:3, 3] = [0.5, -0.2, 0.1]
        moved = PointCloud(np.column_stack([(pc.xyz @ T[:3, :3].T) + T[:3, 3], pc.reflectance]))
        composed = CalibrationSet(kitti_calib.P_rect, kitti_calib.R_rect, kitti_calib.T_lidar_cam @ T)
        a, ia = project_to_image(moved, kitti_calib, return_index=True)
        b, ib = project_to_image(pc, composed, return_index=True)
        assert ia.tolist() == ib.tolist()
        assert_allclose(a, b, rtol=1e-10, atol=1e-8)

    def test_non_orthonormal_rejected(self):
        T = np.eye(4)
        T[0, 0] = 1.1
        with pytest.raises(ParameterError):
            CalibrationSet(P_IDENTITY, np.eye(3), T)


class TestCrop:
    def test_full_containment_minus_near_field(self, identity_calib):
        pts = np.array([[6.0, 0.0, 1.0, 0.1], [8.0, 1.0, 1.0, 0.2], [3.0, 0.0, 1.0, 0.3]])
        box = BBox2D(-100, -100, 100, 100)
        out = crop_to_bbox(PointCloud(pts), identity_calib, box)
        assert out.points.tolist() == pts[:2].tolist()

    def test_near_field_cull(self, identity_calib):
        pts = np.column_stack([np.ones(5), np.arange(5.0), np.ones(5)])
        assert len(crop_to_bbox(PointCloud(pts), identity_calib, BBox2D(-1e9, -1e9, 1e9, 1e9))) == 0

    def test_plus_one_margin(self, identity_calib):
        # identity projection with z = 1 maps (x, y) straight to (u, v)
        box = BBox2D(5.0, 0.0, 10.0, 4.0)
        pts = np.array([
            [11.0, 2.0, 1.0],   # u = x_max + 1 -> kept
            [11.01, 2.0, 1.0],  # just past the margin
            [8.0, 5.0, 1.0],    # v = y_max + 1 -> kept
            [8.0, -0.01, 1.0],  # below y_min
            [5.0, 0.0, 1.0],    # corner, inclusive
        ])
        out = crop_to_bbox(PointCloud(pts), identity_calib, box)
        assert out.xyz.tolist() == pts[[0, 2, 4]].tolist()

    def test_matches_brute_force(self, kitti_calib, rng):
        for _ in range(20):
            pc = _scene(rng)
            x0, y0 = rng.uniform(0, 1000), rng.uniform(0, 300)
            box = BBox2D(x0, y0, x0 + rng.uniform(20, 400), y0 + rng.uniform(20, 150))
            expected = crop_membership(pc.points, kitti_calib.P_rect, kitti_calib.R_rect,
                                       kitti_calib.T_lidar_cam, (box.x_min, box.y_min, box.x_max, box.y_max))
            out = crop_to_bbox(pc, kitti_calib, box)
            assert out.points.tolist() == [list(p) for p in expected]

    def test_bad_box(self):
        with pytest.raises(ParameterError):
            BBox2D(5, 0, 5, 1)


def _shell(rng, n, radius, spread=0.05):
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs * (radius + rng.uniform(-spread, spread, (n, 1)))


class TestCluster:
    def test_single_cluster(self, rng):
        pts = _shell(rng, 15, 5.0)
        out = cluster_foreground(PointCloud(pts))
        assert sorted(map(tuple, out.xyz)) == sorted(map(tuple, pts))

    def test_near_large_cluster_wins(self, rng):
        near, far = _shell(rng, 10, 2.0), _shell(rng, 3, 8.0)
        out = cluster_foreground(PointCloud(np.vstack([near, far])))
        assert sorted(map(tuple, out.xyz)) == sorted(map(tuple, near))

    def test_both_regimes(self, rng):
        near, far = _shell(rng, 3, 2.0), _shell(rng, 10, 8.0)
        pc = PointCloud(np.vstack([near, far]))
        # weighted counts 3 * 1 vs 10 * 0.5: the far cluster wins
        out = cluster_foreground(pc)
        assert sorted(map(tuple, out.xyz)) == sorted(map(tuple, far))
        # a lower confidence shrinks the far weight to 10 * 0.1 < 3 * 0.6
        out = cluster_foreground(pc, confidence=0.6)
        assert sorted(map(tuple, out.xyz)) == sorted(map(tuple, near))

    def test_matches_pseudocode(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 21))
            pts = np.column_stack([rng.uniform(0, 3, (n, 3)), rng.uniform(0, 1, n)])
            if rng.random() < 0.3:
                pts[: n // 2] = pts[0]
            gap = float(rng.choice([0.05, 0.25, 0.6]))
            got = cluster_foreground(PointCloud(pts), gap=gap).points.tolist()
            assert got == [list(p) for p in cluster_pseudocode(pts.tolist(), gap=gap)]

    def test_nearest_first(self, rng):
        out = cluster_foreground(PointCloud(_shell(rng, 30, 4.0, spread=0.1)))
        d = np.linalg.norm(out.xyz, axis=1)
        assert np.all(np.diff(d) >= 0)

    def test_empty(self):
        with pytest.raises(ParameterError):
            cluster_foreground(PointCloud(np.empty((0, 4))))


class TestResample:
    def test_pedestrian_upsample(self, rng):
        pc = PointCloud(np.column_stack([rng.normal(0, [0.3, 0.3, 0.8], (364, 3)), rng.uniform(0, 1, 364)]))
        out = resample(pc, 512, seed=0)
        assert len(out) == 512
        assert np.array_equal(out.points[:364], pc.points)

    def test_identity(self, rng):
        pc = PointCloud(rng.normal(size=(512, 4)))
        assert np.array_equal(resample(pc, 512, seed=1).points, pc.points)

    def test_downsample_subset(self, rng):
        pc = PointCloud(rng.normal(size=(1000, 4)))
        out = resample(pc, 512, seed=3)
        assert len(out) == 512
        rows = set(map(tuple, pc.points))
        assert all(tuple(p) in rows for p in out.points)
        assert len(set(map(tuple, out.points))) == 512

    def test_synthetic_points_are_neighbour_midpoints(self, rng):
        pts = rng.normal(size=(40, 4))
        out = resample(PointCloud(pts), 100, k=3, seed=9).points
        from scipy.spatial import cKDTree

        _, nbr = cKDTree(pts[:, :3]).query(pts[:, :3], k=4)
        mids = {tuple(0.5 * (pts[i] + pts[j])) for i in range(40) for j in nbr[i, 1:]}
        assert all(tuple(p) in mids for p in out[40:])

    def test_single_point(self):
        out = resample(PointCloud([[1.0, 2.0, 3.0, 0.5]]), 4, seed=0)
        assert out.points.tolist() == [[1.0, 2.0, 3.0, 0.5]] * 4

    def test_deterministic(self, rng):
        pc = PointCloud(rng.normal(size=(50, 4)))
        assert np.array_equal(resample(pc, 200, seed=4).points, resample(pc, 200, seed=4).points)

    def test_empty(self):
        with pytest.raises(ParameterError):
            resample(PointCloud(np.empty((0, 4))))


class TestKittiFiles:
    def test_bin_round_trip(self, tmp_path, rng):
        pc = PointCloud(rng.normal(size=(33, 4)).astype(np.float32))
        path = tmp_path / "000001.bin"
        write_velodyne_bin(pc, path)
        assert path.stat().st_size == 33 * 16
        assert np.array_equal(read_velodyne_bin(path).points, pc.points)

    def test_calibration_file(self, tmp_path):
        lines = [
            "P0: " + " ".join(["0"] * 12),
            "P2: " + " ".join(map(str, P_KITTI_LIKE.ravel())),
            "R0_rect: 1 0 0 0 1 0 0 0 1",
            "Tr_velo_to_cam: " + " ".join(map(str, VELO_TO_CAM.ravel())),
            "Tr_imu_to_velo: " + " ".join(["0"] * 12),
        ]
        path = tmp_path / "000001.txt"
        path.write_text("\n".join(lines) + "\n")
        calib = read_calibration(path)
        assert_allclose(calib.P_rect, P_KITTI_LIKE)
        assert_allclose(calib.T_lidar_cam[:3], VELO_TO_CAM)
        assert calib.R_rect.shape == (4, 4)
