import numpy as np
import pytest

from cadrunner.minikernel import (
    NO_PENDING_WIRES,
    NULL_ENTITY,
    Cylinder,
    Prism,
    Union,
    Workplane,
    collect_primitives,
)


class TestPrimitives:
    def test_prism_membership(self):
        prism = Prism([(-1, -1), (1, -1), (1, 1), (-1, 1)], 0, 2, np.eye(3), np.zeros(3))
        pts = np.array([[0, 0, 1], [0, 0, -0.1], [1.5, 0, 1], [0.99, 0.99, 1.99]])
        assert prism.contains(pts).tolist() == [True, False, False, True]

    def test_nonconvex_prism_membership(self):
        # L-shape: the notch at (+u, +v) is outside
        poly = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
        prism = Prism(poly, 0, 1, np.eye(3), np.zeros(3))
        pts = np.array([[0.5, 0.5, 0.5], [1.5, 1.5, 0.5], [0.5, 1.5, 0.5]])
        assert prism.contains(pts).tolist() == [True, False, True]

    def test_cylinder_membership(self):
        cyl = Cylinder((0, 0), 1.0, 0, 2, np.eye(3), np.zeros(3))
        pts = np.array([[0, 0, 1], [0.99, 0, 1], [1.01, 0, 1], [0, 0, 2.1]])
        assert cyl.contains(pts).tolist() == [True, True, False, False]

    def test_transformed_prism(self):
        # frame mapping local +z to world +y
        R = np.array([[1.0, 0, 0], [0, 0, 1.0], [0, -1.0, 0]])
        prism = Prism([(-1, -1), (1, -1), (1, 1), (-1, 1)], 0, 3, R, np.zeros(3))
        lo, hi = prism.bbox()
        assert hi[1] - lo[1] == pytest.approx(3.0)

    def test_volumes(self):
        prism = Prism([(-1, -1), (1, -1), (1, 1), (-1, 1)], 0, 2, np.eye(3), np.zeros(3))
        assert prism.volume() == pytest.approx(8.0)
        cyl = Cylinder((0, 0), 1.0, 0, 2, np.eye(3), np.zeros(3))
        assert cyl.volume() == pytest.approx(2 * np.pi)

    def test_surface_samples_on_boundary(self):
        prism = Prism([(-1, -1), (1, -1), (1, 1), (-1, 1)], -1, 1, np.eye(3), np.zeros(3))
        rng = np.random.default_rng(0)
        pts, nrm = prism.sample_surface(rng, 500)
        on_face = (
            (np.abs(np.abs(pts[:, 0]) - 1) < 1e-12)
            | (np.abs(np.abs(pts[:, 1]) - 1) < 1e-12)
            | (np.abs(np.abs(pts[:, 2]) - 1) < 1e-12)
        )
        assert on_face.all()
        assert np.allclose(np.linalg.norm(nrm, axis=1), 1.0)


class TestWorkplane:
    def test_box_and_val(self):
        wp = Workplane("XY").box(2, 2, 2)
        assert wp.val().contains(np.array([[0.0, 0, 0]]))[0]

    def test_extrude_requires_pending_wires(self):
        with pytest.raises(ValueError, match=NO_PENDING_WIRES):
            Workplane("XY").extrude(5)

    def test_circle_extrude_makes_cylinder(self):
        wp = Workplane("XY").circle(1.0).extrude(2.0)
        node = wp.val()
        assert node.contains(np.array([[0.0, 0, 1.0]]))[0]
        assert not node.contains(np.array([[0.0, 0, -0.1]]))[0]

    def test_negative_extrude(self):
        wp = Workplane("XY").circle(1.0).extrude(-2.0)
        assert wp.val().contains(np.array([[0.0, 0, -1.0]]))[0]

    def test_polyline_close_extrude(self):
        wp = (
            Workplane("XY")
            .polyline([(0, 0), (2, 0), (2, 1), (0, 1)])
            .close()
            .extrude(1)
        )
        assert wp.val().contains(np.array([[1.0, 0.5, 0.5]]))[0]

    def test_cut_removes_material(self):
        box = Workplane("XY").box(4, 4, 2)
        tool = Workplane("XY").circle(0.5).extrude(3)
        cut = box.cut(tool)
        assert not cut.val().contains(np.array([[0.0, 0, 0.5]]))[0]
        assert cut.val().contains(np.array([[1.5, 1.5, 0.0]]))[0]

    def test_union_adds_material(self):
        a = Workplane("XY").box(2, 2, 2)
        b = Workplane("XY").box(2, 2, 2).translate((3, 0, 0))
        fused = a.union(b)
        assert fused.val().contains(np.array([[3.0, 0, 0]]))[0]

    def test_cut_null_entity(self):
        tool = Workplane("XY").box(1, 1, 1)
        with pytest.raises(ValueError, match=NULL_ENTITY):
            Workplane("XY").cut(tool)
        with pytest.raises(ValueError, match=NULL_ENTITY):
            Workplane("XY").box(1, 1, 1).cut(Workplane("XY"))

    def test_faces_workplane_cutthruall(self):
        wp = (
            Workplane("XY")
            .box(4, 4, 2)
            .faces(">Z")
            .workplane()
            .circle(0.8)
            .cutThruAll()
        )
        node = wp.val()
        assert not node.contains(np.array([[0.0, 0, 0.0]]))[0]
        assert not node.contains(np.array([[0.0, 0, 0.99]]))[0]
        assert node.contains(np.array([[1.5, 1.5, 0.0]]))[0]

    def test_hole(self):
        wp = Workplane("XY").box(4, 4, 2).faces(">Z").workplane().hole(1.0)
        assert not wp.val().contains(np.array([[0.0, 0, 0.0]]))[0]

    def test_nonexistent_method_is_attribute_error(self):
        wp = Workplane("XY").box(1, 1, 1)
        with pytest.raises(AttributeError):
            wp.scale(2.0)

    def test_xz_plane_extrudes_along_minus_y(self):
        wp = Workplane("XZ").circle(0.5).extrude(2.0)
        # local +w is world -Y for the XZ frame
        assert wp.val().contains(np.array([[0.0, -1.0, 0.0]]))[0]
        assert not wp.val().contains(np.array([[0.0, 1.0, 0.0]]))[0]

    def test_translate(self):
        wp = Workplane("XY").box(2, 2, 2).translate((5, 0, 0))
        assert wp.val().contains(np.array([[5.0, 0, 0]]))[0]
        assert not wp.val().contains(np.array([[0.0, 0, 0]]))[0]

    def test_chaining_is_nonmutating(self):
        base = Workplane("XY").box(2, 2, 2)
        base.faces(">Z").workplane().circle(0.5).cutThruAll()
        # original still solid at the center
        assert base.val().contains(np.array([[0.0, 0, 0]]))[0]

    def test_collect_primitives(self):
        wp = Workplane("XY").box(2, 2, 2).faces(">Z").workplane().circle(0.5).cutThruAll()
        prims = collect_primitives(wp.val())
        assert len(prims) == 2

    def test_union_bbox(self):
        a = Workplane("XY").box(2, 2, 2)
        b = Workplane("XY").box(2, 2, 2).translate((4, 0, 0))
        node = Union(a.val(), b.val())
        lo, hi = node.bbox()
        assert lo[0] == pytest.approx(-1.0)
        assert hi[0] == pytest.approx(5.0)
