import numpy as np
import pytest

from dstile.errors import NormalizationError
from dstile.geometry import (
    GeometryArtifact,
    VoxelGrid,
    align_and_score,
    centroid,
    chamfer_distance,
    edge_chamfer_distance,
    gyration_radius,
    invalid_penalty,
    make_artifact,
    normalize,
    rasterize,
    rigid_candidates,
    rotations24,
    voxel_iou,
)


def brute_force_chamfer(p, q):
    """All-pairs oracle for the KD-tree path."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = np.linalg.norm(p[:, None, :] - q[None, :, :], axis=2)
    return d.min(axis=1).mean() / 2 + d.min(axis=0).mean() / 2


def random_cloud(rng, n=400, stretch=(1.0, 0.6, 0.3), shift=(0.0, 0.0, 0.0)):
    return rng.uniform(-1, 1, size=(n, 3)) * np.array(stretch) + np.array(shift)


class TestCentroidGyration:
    def test_symmetric_pair(self):
        pts = np.array([[1.0, 0, 0], [-1.0, 0, 0]])
        assert np.allclose(centroid(pts), 0)
        assert gyration_radius(pts) == pytest.approx(1.0)

    def test_single_point(self):
        pts = np.array([[2.0, 3.0, 4.0]])
        assert np.allclose(centroid(pts), [2, 3, 4])
        assert gyration_radius(pts) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            centroid(np.empty((0, 3)))
        with pytest.raises(ValueError):
            gyration_radius(np.empty((0, 3)))

    def test_sphere_shell_monte_carlo(self):
        # uniform samples on a radius-3 shell have R_g -> 3
        rng = np.random.default_rng(42)
        direction = rng.normal(size=(200_000, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        pts = 3.0 * direction
        assert gyration_radius(pts) == pytest.approx(3.0, rel=0.01)


class TestNormalize:
    def test_postconditions(self):
        rng = np.random.default_rng(0)
        art = make_artifact(random_cloud(rng, shift=(5, -2, 1)), resolution=32)
        norm = normalize(art)
        assert np.abs(norm.centroid).max() < 1e-9
        assert abs(norm.gyration_radius - 1.0) < 1e-9

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        art = make_artifact(random_cloud(rng), resolution=32)
        once = normalize(art)
        twice = normalize(once)
        assert np.abs(twice.surface - once.surface).max() < 1e-12

    def test_recovers_scaled_shifted_cloud(self):
        rng = np.random.default_rng(2)
        base = make_artifact(random_cloud(rng), resolution=32)
        canon = normalize(base)
        moved = make_artifact(canon.surface * 5.0 + np.array([1.0, 2.0, 3.0]), resolution=32)
        recovered = normalize(moved)
        assert np.abs(recovered.surface - canon.surface).max() < 1e-9

    def test_degenerate_rejected(self):
        art = invalid_penalty(16)
        with pytest.raises(NormalizationError):
            normalize(art)


class TestRotations:
    def test_exactly_24_with_identity_first(self):
        rots = rotations24()
        assert len(rots) == 24
        assert np.array_equal(rots[0], np.eye(3, dtype=int))
        assert len({r.tobytes() for r in rots}) == 24

    def test_integer_proper_rotations(self):
        for r in rotations24():
            assert set(np.unique(r)).issubset({-1, 0, 1})
            assert round(np.linalg.det(r)) == 1
            assert np.array_equal(r @ r.T, np.eye(3, dtype=r.dtype))

    def test_group_closure(self):
        rots = rotations24()
        keys = {r.tobytes() for r in rots}
        for a in rots:
            for b in rots:
                assert (a @ b).tobytes() in keys

    def test_inverses_present(self):
        rots = rotations24()
        keys = {r.tobytes() for r in rots}
        for r in rots:
            assert r.T.tobytes() in keys


class TestChamfer:
    def test_identity_zero(self):
        rng = np.random.default_rng(3)
        pts = random_cloud(rng, n=100)
        assert chamfer_distance(pts, pts) == 0.0

    def test_singleton_pair(self):
        assert chamfer_distance([[0, 0, 0]], [[1, 0, 0]]) == pytest.approx(1.0)

    def test_two_against_one(self):
        p = np.array([[0.0, 0, 0], [2.0, 0, 0]])
        q = np.array([[1.0, 0, 0]])
        assert chamfer_distance(p, q) == pytest.approx(1.0)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            p = random_cloud(rng, n=rng.integers(1, 60))
            q = random_cloud(rng, n=rng.integers(1, 60), shift=(0.3, 0, 0))
            assert chamfer_distance(p, q) == pytest.approx(
                brute_force_chamfer(p, q), abs=1e-12
            )

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        p = random_cloud(rng, n=50)
        q = random_cloud(rng, n=70, shift=(0.5, 0.1, 0))
        assert chamfer_distance(p, q) == chamfer_distance(q, p)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(6)
        p = random_cloud(rng, n=80)
        q = random_cloud(rng, n=60, shift=(0.2, 0.4, 0))
        base = chamfer_distance(p, q)
        theta = 0.7
        rot = np.array(
            [
                [np.cos(theta), -np.sin(theta), 0],
                [np.sin(theta), np.cos(theta), 0],
                [0, 0, 1],
            ]
        )
        assert abs(chamfer_distance(p @ rot.T, q @ rot.T) - base) < 1e-9

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            chamfer_distance(np.empty((0, 3)), np.zeros((1, 3)))

    def test_edge_variant_same_contract(self):
        p = np.array([[0.0, 0, 0]])
        q = np.array([[0.0, 1.0, 0]])
        assert edge_chamfer_distance(p, p) == 0.0
        assert edge_chamfer_distance(p, q) == pytest.approx(1.0)


class TestVoxelIoU:
    def make_grid(self, cells):
        occ = np.zeros((8, 8, 8), dtype=bool)
        for c in cells:
            occ[c] = True
        return VoxelGrid(origin=np.full(3, -2.0), cell=0.5, resolution=8, occ=occ)

    def test_identical(self):
        a = self.make_grid([(1, 1, 1), (2, 2, 2)])
        assert voxel_iou(a, a) == 1.0

    def test_disjoint(self):
        a = self.make_grid([(1, 1, 1)])
        b = self.make_grid([(5, 5, 5)])
        assert voxel_iou(a, b) == 0.0

    def test_one_third_overlap(self):
        a = self.make_grid([(1, 1, 1), (2, 2, 2)])
        b = self.make_grid([(2, 2, 2), (3, 3, 3)])
        assert voxel_iou(a, b) == pytest.approx(1 / 3)

    def test_empty_union_is_zero(self):
        a = self.make_grid([])
        assert voxel_iou(a, a) == 0.0

    def test_mismatched_grids_rejected(self):
        a = self.make_grid([(1, 1, 1)])
        b = VoxelGrid(origin=np.zeros(3), cell=0.5, resolution=8, occ=a.occ.copy())
        with pytest.raises(ValueError):
            voxel_iou(a, b)


class TestRasterize:
    def test_points_outside_cube_dropped(self):
        grid = rasterize(np.array([[10.0, 0, 0], [0.1, 0.1, 0.1]]), resolution=16)
        assert grid.count() >= 1

    def test_solid_fill_closes_interior(self):
        # sample a dense cube shell; the filled grid must contain the center
        rng = np.random.default_rng(7)
        n = 4000
        face_pts = rng.uniform(-1, 1, size=(n, 3))
        axis = rng.integers(0, 3, size=n)
        side = rng.choice([-1.0, 1.0], size=n)
        face_pts[np.arange(n), axis] = side
        grid = rasterize(face_pts, resolution=32)
        assert grid.occ[16, 16, 16]

    def test_no_fill_keeps_shell_hollow(self):
        rng = np.random.default_rng(8)
        n = 4000
        face_pts = rng.uniform(-1, 1, size=(n, 3))
        axis = rng.integers(0, 3, size=n)
        side = rng.choice([-1.0, 1.0], size=n)
        face_pts[np.arange(n), axis] = side
        grid = rasterize(face_pts, resolution=32, solid_fill=False)
        assert not grid.occ[16, 16, 16]


class TestAlignAndScore:
    def test_identical_solids(self):
        rng = np.random.default_rng(9)
        pts = random_cloud(rng, n=600, shift=(2.0, 1.0, 0.0))
        q = make_artifact(pts, pts[:40], resolution=32)
        p = make_artifact(pts.copy(), pts[:40].copy(), resolution=32)
        m = align_and_score(p, q, resolution=32)
        assert m.vsr_valid
        assert m.iou == 1.0
        assert m.cd < 1e-12
        assert m.ecd < 1e-12
        assert m.best_transform.rotation_index == 0

    def test_synthetic_candidate_recovery(self):
        rng = np.random.default_rng(10)
        rots = rotations24()
        for trial in range(5):
            base = make_artifact(random_cloud(rng, n=500), resolution=32)
            canon = normalize(base, 32)
            rot = rots[int(rng.integers(24))].astype(float)
            scale = float(rng.uniform(0.5, 3.0))
            shift = rng.uniform(-2, 2, size=3)
            moved_surface = (canon.surface * scale) @ rot.T + shift
            moved_edges = (canon.edges * scale) @ rot.T + shift if len(canon.edges) else None
            p = make_artifact(moved_surface, moved_edges, resolution=32)
            m = align_and_score(p, base, resolution=32)
            assert m.iou >= 0.95
            assert m.cd <= 1e-6

    def test_penalty_conventions(self):
        rng = np.random.default_rng(11)
        q = make_artifact(random_cloud(rng, n=300), resolution=32)
        m = align_and_score(invalid_penalty(32), q, valid=False, resolution=32)
        assert not m.vsr_valid
        assert m.iou == 0.0
        assert m.best_transform is None
        q_norm = normalize(q, 32)
        assert m.cd == pytest.approx(chamfer_distance(np.zeros((1, 3)), q_norm.surface))

    def test_penalty_cd_hand_value(self):
        # CD(origin, {±(1,0,0)}) = 0.5·1 + 0.5·(1+1)/2 = 1.0
        assert chamfer_distance(
            np.zeros((1, 3)), np.array([[1.0, 0, 0], [-1.0, 0, 0]])
        ) == pytest.approx(1.0)

    def test_candidate_set_size(self):
        rng = np.random.default_rng(12)
        p = make_artifact(random_cloud(rng, n=50), resolution=16)
        q = make_artifact(random_cloud(rng, n=50), resolution=16)
        assert len(rigid_candidates(p, q)) == 96

    def test_edgeless_falls_back_to_surface(self):
        rng = np.random.default_rng(13)
        pts = random_cloud(rng, n=200)
        q = make_artifact(pts, None, resolution=32)
        p = make_artifact(pts.copy(), None, resolution=32)
        m = align_and_score(p, q, resolution=32)
        assert m.ecd_on_surface
        assert m.ecd < 1e-12


class TestArtifactSerialization:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(14)
        art = make_artifact(random_cloud(rng, n=120), random_cloud(rng, n=30), resolution=16)
        path = tmp_path / "artifact.json"
        art.save(path)
        loaded = GeometryArtifact.load(path)
        assert np.array_equal(loaded.surface, art.surface)
        assert np.array_equal(loaded.edges, art.edges)
        assert np.array_equal(loaded.voxels.occ, art.voxels.occ)
        assert loaded.voxels.same_geometry(art.voxels)
        assert np.array_equal(loaded.centroid, art.centroid)
        assert loaded.gyration_radius == art.gyration_radius

    def test_penalty_artifact_shape(self):
        pen = invalid_penalty(16)
        assert pen.surface.shape == (1, 3)
        assert np.array_equal(pen.surface, np.zeros((1, 3)))
        assert pen.voxels.count() == 1
        assert pen.gyration_radius == 0.0
