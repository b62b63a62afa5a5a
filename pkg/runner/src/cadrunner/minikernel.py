"""Embedded parametric CAD kernel with a CadQuery-compatible surface.

Scripts executed by the runner see this module as ``cadquery``: it provides a
chainable ``Workplane`` over a small CSG core (extruded polygons and
cylinders, union/difference).  Solids support exact point membership, area-
weighted surface sampling, edge-curve sampling and axis-aligned bounding
boxes — everything geometry export needs.

Kernel misuse raises ValueError with the canonical messages the failure
classifier keys on: "No pending wires present", "null-entity operation",
"non-coplanar operation".
"""

from __future__ import annotations

import math

import numpy as np

NO_PENDING_WIRES = "No pending wires present"
NULL_ENTITY = "null-entity operation"
NON_COPLANAR = "non-coplanar operation"

# Right-handed local frames (u, v, w) per named plane.
PLANE_FRAMES = {
    "XY": np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]]).T,
    "XZ": np.array([[1.0, 0, 0], [0, 0, 1.0], [0, -1.0, 0]]).T,
    "YZ": np.array([[0, 1.0, 0], [0, 0, 1.0], [1.0, 0, 0]]).T,
}


def _poly_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(
        np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    )


def _point_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd ray casting, vectorized over points; boundary-inclusive via
    a tiny outward tolerance handled by the callers' probe offsets."""
    inside = np.zeros(len(points), dtype=bool)
    x, y = points[:, 0], points[:, 1]
    m = len(poly)
    for i in range(m):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % m]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < np.where(crosses, x_at, np.inf))
    return inside


class _EdgeCurve:
    """A sampled edge curve: world points plus its two adjacent-face normals
    (used to decide whether the edge survives on the CSG boundary)."""

    def __init__(self, length: float, sampler):
        self.length = length
        self._sampler = sampler

    def sample(self, ts: np.ndarray):
        return self._sampler(ts)


class Prism:
    """A simple polygon swept along local +z between z0 and z1, placed by a
    rigid transform (rotation columns R, translation t)."""

    def __init__(self, poly_uv, z0: float, z1: float, R: np.ndarray, t: np.ndarray):
        poly = np.asarray(poly_uv, dtype=float)
        if len(poly) < 3:
            raise ValueError(f"{NULL_ENTITY}: polygon needs at least 3 vertices")
        if _poly_area(poly) < 0:
            poly = poly[::-1]
        if z1 < z0:
            z0, z1 = z1, z0
        self.poly = poly
        self.z0, self.z1 = float(z0), float(z1)
        self.R = np.asarray(R, dtype=float)
        self.t = np.asarray(t, dtype=float)

    def _to_local(self, points: np.ndarray) -> np.ndarray:
        return (points - self.t) @ self.R

    def _to_world(self, points: np.ndarray) -> np.ndarray:
        return points @ self.R.T + self.t

    def contains(self, points: np.ndarray) -> np.ndarray:
        local = self._to_local(points)
        in_z = (local[:, 2] >= self.z0) & (local[:, 2] <= self.z1)
        out = np.zeros(len(points), dtype=bool)
        if in_z.any():
            out[in_z] = _point_in_polygon(local[in_z, :2], self.poly)
        return out

    def bbox(self):
        corners = []
        for z in (self.z0, self.z1):
            pts = np.column_stack([self.poly, np.full(len(self.poly), z)])
            corners.append(self._to_world(pts))
        corners = np.vstack(corners)
        return corners.min(axis=0), corners.max(axis=0)

    def volume(self) -> float:
        return abs(_poly_area(self.poly)) * (self.z1 - self.z0)

    def _side_faces(self):
        height = self.z1 - self.z0
        faces = []
        m = len(self.poly)
        for i in range(m):
            p, q = self.poly[i], self.poly[(i + 1) % m]
            edge = q - p
            length = float(np.hypot(*edge))
            if length == 0:
                continue
            outward = np.array([edge[1], -edge[0]]) / length  # CCW polygon
            faces.append((p, q, outward, length * height))
        return faces

    def surface_areas(self) -> float:
        cap = abs(_poly_area(self.poly))
        return 2 * cap + sum(a for *_, a in self._side_faces())

    def sample_surface(self, rng: np.random.Generator, n: int):
        cap_area = abs(_poly_area(self.poly))
        sides = self._side_faces()
        weights = [cap_area, cap_area] + [a for *_, a in sides]
        total = sum(weights)
        counts = rng.multinomial(n, np.asarray(weights) / total)
        points, normals = [], []

        lo = self.poly.min(axis=0)
        hi = self.poly.max(axis=0)
        for face, count in zip(("bottom", "top"), counts[:2]):
            if count == 0:
                continue
            got = []
            while len(got) < count:
                cand = rng.uniform(lo, hi, size=(count * 3, 2))
                got.extend(cand[_point_in_polygon(cand, self.poly)][: count - len(got)])
            uv = np.asarray(got)
            z = self.z0 if face == "bottom" else self.z1
            w = -1.0 if face == "bottom" else 1.0
            points.append(np.column_stack([uv, np.full(count, z)]))
            normals.append(np.tile([0.0, 0.0, w], (count, 1)))

        for (p, q, outward, _), count in zip(sides, counts[2:]):
            if count == 0:
                continue
            s = rng.uniform(0, 1, size=count)
            z = rng.uniform(self.z0, self.z1, size=count)
            uv = p[None, :] + s[:, None] * (q - p)[None, :]
            points.append(np.column_stack([uv, z]))
            normals.append(np.tile([outward[0], outward[1], 0.0], (count, 1)))

        pts = np.vstack(points) if points else np.empty((0, 3))
        nrm = np.vstack(normals) if normals else np.empty((0, 3))
        return self._to_world(pts), nrm @ self.R.T

    def edge_curves(self):
        curves = []
        m = len(self.poly)
        sides = self._side_faces()

        def ring(z, cap_normal):
            for i in range(m):
                p, q = self.poly[i], self.poly[(i + 1) % m]
                length = float(np.hypot(*(q - p)))
                if length == 0:
                    continue
                outward = sides[i % len(sides)][2] if sides else np.array([1.0, 0.0])

                def sampler(ts, p=p, q=q, z=z, outward=outward, cap=cap_normal):
                    uv = p[None, :] + ts[:, None] * (q - p)[None, :]
                    pts = np.column_stack([uv, np.full(len(ts), z)])
                    n1 = np.tile([outward[0], outward[1], 0.0], (len(ts), 1))
                    n2 = np.tile([0.0, 0.0, cap], (len(ts), 1))
                    return self._to_world(pts), n1 @ self.R.T, n2 @ self.R.T

                curves.append(_EdgeCurve(length, sampler))

        ring(self.z0, -1.0)
        ring(self.z1, 1.0)

        for i in range(m):
            prev_face = sides[(i - 1) % m][2] if sides else np.array([1.0, 0.0])
            this_face = sides[i % len(sides)][2] if sides else np.array([0.0, 1.0])
            vertex = self.poly[i]
            height = self.z1 - self.z0

            def sampler(ts, vertex=vertex, n_a=prev_face, n_b=this_face):
                pts = np.column_stack(
                    [np.tile(vertex, (len(ts), 1)), self.z0 + ts * (self.z1 - self.z0)]
                )
                n1 = np.tile([n_a[0], n_a[1], 0.0], (len(ts), 1))
                n2 = np.tile([n_b[0], n_b[1], 0.0], (len(ts), 1))
                return self._to_world(pts), n1 @ self.R.T, n2 @ self.R.T

            curves.append(_EdgeCurve(height, sampler))
        return curves


class Cylinder:
    """A circular cylinder along local +z, placed by a rigid transform."""

    def __init__(self, center_uv, radius: float, z0: float, z1: float, R, t):
        if radius <= 0:
            raise ValueError(f"{NULL_ENTITY}: non-positive radius")
        if z1 < z0:
            z0, z1 = z1, z0
        self.center = np.asarray(center_uv, dtype=float)
        self.radius = float(radius)
        self.z0, self.z1 = float(z0), float(z1)
        self.R = np.asarray(R, dtype=float)
        self.t = np.asarray(t, dtype=float)

    def _to_local(self, points: np.ndarray) -> np.ndarray:
        return (points - self.t) @ self.R

    def _to_world(self, points: np.ndarray) -> np.ndarray:
        return points @ self.R.T + self.t

    def contains(self, points: np.ndarray) -> np.ndarray:
        local = self._to_local(points)
        in_z = (local[:, 2] >= self.z0) & (local[:, 2] <= self.z1)
        radial = np.hypot(local[:, 0] - self.center[0], local[:, 1] - self.center[1])
        return in_z & (radial <= self.radius)

    def bbox(self):
        theta = np.linspace(0, 2 * math.pi, 256, endpoint=False)
        rim = np.column_stack(
            [
                self.center[0] + self.radius * np.cos(theta),
                self.center[1] + self.radius * np.sin(theta),
            ]
        )
        pts = np.vstack(
            [np.column_stack([rim, np.full(len(rim), z)]) for z in (self.z0, self.z1)]
        )
        world = self._to_world(pts)
        pad = self.radius * 1e-3
        return world.min(axis=0) - pad, world.max(axis=0) + pad

    def volume(self) -> float:
        return math.pi * self.radius**2 * (self.z1 - self.z0)

    def surface_areas(self) -> float:
        return 2 * math.pi * self.radius * (self.z1 - self.z0) + 2 * math.pi * self.radius**2

    def sample_surface(self, rng: np.random.Generator, n: int):
        height = self.z1 - self.z0
        side = 2 * math.pi * self.radius * height
        disk = math.pi * self.radius**2
        counts = rng.multinomial(n, np.array([side, disk, disk]) / (side + 2 * disk))
        points, normals = [], []

        if counts[0]:
            theta = rng.uniform(0, 2 * math.pi, counts[0])
            z = rng.uniform(self.z0, self.z1, counts[0])
            cos, sin = np.cos(theta), np.sin(theta)
            points.append(
                np.column_stack(
                    [self.center[0] + self.radius * cos, self.center[1] + self.radius * sin, z]
                )
            )
            normals.append(np.column_stack([cos, sin, np.zeros(counts[0])]))
        for cap, (z, w) in zip(counts[1:], ((self.z0, -1.0), (self.z1, 1.0))):
            if cap == 0:
                continue
            theta = rng.uniform(0, 2 * math.pi, cap)
            r = self.radius * np.sqrt(rng.uniform(0, 1, cap))
            points.append(
                np.column_stack(
                    [
                        self.center[0] + r * np.cos(theta),
                        self.center[1] + r * np.sin(theta),
                        np.full(cap, z),
                    ]
                )
            )
            normals.append(np.tile([0.0, 0.0, w], (cap, 1)))

        pts = np.vstack(points) if points else np.empty((0, 3))
        nrm = np.vstack(normals) if normals else np.empty((0, 3))
        return self._to_world(pts), nrm @ self.R.T

    def edge_curves(self):
        circumference = 2 * math.pi * self.radius
        curves = []
        for z, cap in ((self.z0, -1.0), (self.z1, 1.0)):

            def sampler(ts, z=z, cap=cap):
                theta = ts * 2 * math.pi
                cos, sin = np.cos(theta), np.sin(theta)
                pts = np.column_stack(
                    [
                        self.center[0] + self.radius * cos,
                        self.center[1] + self.radius * sin,
                        np.full(len(ts), z),
                    ]
                )
                n1 = np.column_stack([cos, sin, np.zeros(len(ts))])
                n2 = np.tile([0.0, 0.0, cap], (len(ts), 1))
                return self._to_world(pts), n1 @ self.R.T, n2 @ self.R.T

            curves.append(_EdgeCurve(circumference, sampler))
        return curves


class Union:
    def __init__(self, a, b):
        self.a, self.b = a, b

    def contains(self, points):
        return self.a.contains(points) | self.b.contains(points)

    def bbox(self):
        (alo, ahi), (blo, bhi) = self.a.bbox(), self.b.bbox()
        return np.minimum(alo, blo), np.maximum(ahi, bhi)

    def volume(self):  # upper bound, used only for "largest solid" discovery
        return self.a.volume() + self.b.volume()


class Difference:
    def __init__(self, a, b):
        self.a, self.b = a, b

    def contains(self, points):
        return self.a.contains(points) & ~self.b.contains(points)

    def bbox(self):
        return self.a.bbox()

    def volume(self):
        return self.a.volume()


def collect_primitives(node) -> list:
    if isinstance(node, (Prism, Cylinder)):
        return [node]
    return collect_primitives(node.a) + collect_primitives(node.b)


def translate_node(node, vec: np.ndarray):
    vec = np.asarray(vec, dtype=float)
    if isinstance(node, (Prism, Cylinder)):
        import copy

        moved = copy.copy(node)
        moved.t = node.t + vec
        return moved
    return type(node)(translate_node(node.a, vec), translate_node(node.b, vec))


class Workplane:
    """Chainable modelling API over the CSG core.

    Supported operations: box, rect, circle, polyline/close, extrude,
    cutThruAll, hole, cut, union, translate, faces(selector).workplane(),
    val/vals/findSolid.  Anything else raises AttributeError, like calling a
    non-existent CadQuery method.
    """

    def __init__(self, plane: str = "XY", origin=(0.0, 0.0, 0.0)):
        if isinstance(plane, str):
            if plane not in PLANE_FRAMES:
                raise ValueError(f"unknown workplane {plane!r}")
            self._frame = PLANE_FRAMES[plane]
        else:
            self._frame = np.asarray(plane, dtype=float)
        self._origin = np.asarray(origin, dtype=float)
        self._solid = None
        self._pending: list = []
        self._open_polyline: list | None = None
        self._selected_face: str | None = None

    def _clone(self) -> "Workplane":
        wp = Workplane.__new__(Workplane)
        wp._frame = self._frame
        wp._origin = self._origin
        wp._solid = self._solid
        wp._pending = list(self._pending)
        wp._open_polyline = list(self._open_polyline) if self._open_polyline else None
        wp._selected_face = self._selected_face
        return wp

    def _combine(self, solid):
        return solid if self._solid is None else Union(self._solid, solid)

    # -- profiles -----------------------------------------------------------

    def rect(self, xlen: float, ylen: float) -> "Workplane":
        wp = self._clone()
        hx, hy = xlen / 2.0, ylen / 2.0
        wp._pending.append(("poly", [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)]))
        return wp

    def circle(self, radius: float) -> "Workplane":
        wp = self._clone()
        wp._pending.append(("circle", (0.0, 0.0), float(radius)))
        return wp

    def polyline(self, points) -> "Workplane":
        wp = self._clone()
        wp._open_polyline = [tuple(map(float, p)) for p in points]
        return wp

    def close(self) -> "Workplane":
        if not self._open_polyline:
            raise ValueError(NO_PENDING_WIRES)
        wp = self._clone()
        wp._pending.append(("poly", list(self._open_polyline)))
        wp._open_polyline = None
        return wp

    # -- solids -------------------------------------------------------------

    def box(self, length: float, width: float, height: float, centered: bool = True) -> "Workplane":
        hx, hy = length / 2.0, width / 2.0
        z0, z1 = (-height / 2.0, height / 2.0) if centered else (0.0, height)
        prism = Prism(
            [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)], z0, z1, self._frame, self._origin
        )
        wp = self._clone()
        wp._solid = wp._combine(prism)
        return wp

    def _extruded(self, profile, z0: float, z1: float):
        kind = profile[0]
        if kind == "circle":
            _, center, radius = profile
            return Cylinder(center, radius, z0, z1, self._frame, self._origin)
        _, poly = profile
        return Prism(poly, z0, z1, self._frame, self._origin)

    def extrude(self, distance: float, combine: bool = True) -> "Workplane":
        if not self._pending:
            raise ValueError(NO_PENDING_WIRES)
        z0, z1 = (0.0, distance) if distance >= 0 else (distance, 0.0)
        solids = [self._extruded(p, z0, z1) for p in self._pending]
        merged = solids[0]
        for s in solids[1:]:
            merged = Union(merged, s)
        wp = self._clone()
        wp._pending = []
        wp._solid = wp._combine(merged) if combine else merged
        return wp

    def cutThruAll(self) -> "Workplane":
        if not self._pending:
            raise ValueError(NO_PENDING_WIRES)
        if self._solid is None:
            raise ValueError(f"{NULL_ENTITY}: nothing to cut from")
        # The tool spans exactly the solid's extent along the plane normal,
        # so the cut rims land on the entry/exit faces and stay sharp edges.
        lo, hi = self._solid.bbox()
        corners = np.array(
            [[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])]
        )
        local_z = (corners - self._origin) @ self._frame[:, 2]
        tools = [
            self._extruded(p, float(local_z.min()), float(local_z.max()))
            for p in self._pending
        ]
        wp = self._clone()
        wp._pending = []
        solid = self._solid
        for tool in tools:
            solid = Difference(solid, tool)
        wp._solid = solid
        return wp

    def hole(self, diameter: float, depth: float | None = None) -> "Workplane":
        if self._solid is None:
            raise ValueError(f"{NULL_ENTITY}: nothing to cut from")
        lo, hi = self._solid.bbox()
        reach = float(np.linalg.norm(hi - lo)) + 1.0
        z0 = -(depth if depth is not None else reach)
        tool = Cylinder((0.0, 0.0), diameter / 2.0, z0, reach, self._frame, self._origin)
        wp = self._clone()
        wp._solid = Difference(self._solid, tool)
        return wp

    def _other_solid(self, other):
        solid = other._solid if isinstance(other, Workplane) else other
        if solid is None:
            raise ValueError(f"{NULL_ENTITY}: operand has no solid")
        return solid

    def cut(self, other) -> "Workplane":
        if self._solid is None:
            raise ValueError(f"{NULL_ENTITY}: nothing to cut from")
        wp = self._clone()
        wp._solid = Difference(self._solid, self._other_solid(other))
        return wp

    def union(self, other) -> "Workplane":
        if self._solid is None:
            raise ValueError(f"{NULL_ENTITY}: nothing to fuse into")
        wp = self._clone()
        wp._solid = Union(self._solid, self._other_solid(other))
        return wp

    def translate(self, vec) -> "Workplane":
        if self._solid is None:
            raise ValueError(f"{NULL_ENTITY}: nothing to translate")
        wp = self._clone()
        wp._solid = translate_node(self._solid, np.asarray(vec, dtype=float))
        return wp

    # -- face selection -----------------------------------------------------

    _SELECTORS = {">Z": 2, "<Z": 2, ">X": 0, "<X": 0, ">Y": 1, "<Y": 1}

    def faces(self, selector: str) -> "Workplane":
        if selector not in self._SELECTORS:
            raise ValueError(f"unsupported face selector {selector!r}")
        if self._solid is None:
            raise ValueError(f"{NULL_ENTITY}: no solid to select faces from")
        wp = self._clone()
        wp._selected_face = selector
        return wp

    def workplane(self, offset: float = 0.0) -> "Workplane":
        if self._selected_face is None:
            return self._clone()
        axis = self._SELECTORS[self._selected_face]
        positive = self._selected_face[0] == ">"
        lo, hi = self._solid.bbox()
        center = (lo + hi) / 2.0
        origin = center.copy()
        origin[axis] = (hi[axis] if positive else lo[axis]) + (
            offset if positive else -offset
        )
        w = np.zeros(3)
        w[axis] = 1.0 if positive else -1.0
        u = np.zeros(3)
        u[(axis + 1) % 3] = 1.0
        v = np.cross(w, u)
        frame = np.column_stack([u, v, w])
        wp = Workplane.__new__(Workplane)
        wp._frame = frame
        wp._origin = origin
        wp._solid = self._solid
        wp._pending = []
        wp._open_polyline = None
        wp._selected_face = None
        return wp

    # -- access -------------------------------------------------------------

    def val(self):
        if self._solid is None:
            raise ValueError(f"{NULL_ENTITY}: no solid in workplane")
        return self._solid

    def vals(self):
        return [self.val()]

    def findSolid(self):
        return self.val()
