"""Geometry export: turn a kernel solid into the interchange artifact.

The artifact matches the evaluator's file schema: surface and edge point
clouds, a voxel occupancy grid (origin/cell/resolution plus a base64 bitset
in C order), and centroid/gyration-radius stats computed from the surface
samples.  All sampling is driven by one seeded generator, so a fixed seed
reproduces the artifact byte for byte.
"""

from __future__ import annotations

import base64

import numpy as np

from cadrunner.minikernel import NULL_ENTITY, Workplane, collect_primitives

MAX_ROUNDS = 8


class ExportError(ValueError):
    pass


def _resolve_solid(solid):
    if isinstance(solid, Workplane):
        return solid.val()
    return solid


def _take(pool: np.ndarray, target: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded subsample without replacement; keeps the pool's area-uniform
    density instead of biasing toward whichever primitive collected first."""
    if len(pool) <= target:
        return pool
    return pool[rng.choice(len(pool), size=target, replace=False)]


def _boundary_mask(root, points, normals, eps: float) -> np.ndarray:
    # On the result boundary iff exactly one probe side is inside; the XOR
    # keeps cut surfaces, whose material lies on the +normal side.
    above = root.contains(points + eps * normals)
    below = root.contains(points - eps * normals)
    return above != below


def _sample_visible_surface(root, rng, target: int, eps: float) -> np.ndarray:
    prims = collect_primitives(root)
    areas = np.array([p.surface_areas() for p in prims])
    weights = areas / areas.sum()

    collected: list[np.ndarray] = []
    have = 0
    for _ in range(MAX_ROUNDS):
        need = max(target - have, 1)
        batch = need * 3
        counts = rng.multinomial(batch, weights)
        for prim, count in zip(prims, counts):
            if count == 0:
                continue
            pts, nrm = prim.sample_surface(rng, count)
            keep = _boundary_mask(root, pts, nrm, eps)
            if keep.any():
                collected.append(pts[keep])
        have = sum(len(c) for c in collected)
        if have >= target:
            break
    if have == 0:
        raise ExportError(f"{NULL_ENTITY}: solid has no visible surface")
    return _take(np.vstack(collected), target, rng)


def _sample_visible_edges(root, rng, target: int, eps: float) -> np.ndarray:
    curves = [c for p in collect_primitives(root) for c in p.edge_curves()]
    if not curves:
        return np.empty((0, 3))
    lengths = np.array([c.length for c in curves])
    weights = lengths / lengths.sum()

    collected: list[np.ndarray] = []
    have = 0
    for _ in range(MAX_ROUNDS):
        need = max(target - have, 1)
        counts = rng.multinomial(need * 3, weights)
        for curve, count in zip(curves, counts):
            if count == 0:
                continue
            ts = rng.uniform(0, 1, count)
            pts, n1, n2 = curve.sample(ts)
            keep = _boundary_mask(root, pts, n1, eps) | _boundary_mask(root, pts, n2, eps)
            if keep.any():
                collected.append(pts[keep])
        have = sum(len(c) for c in collected)
        if have >= target:
            break
    if have == 0:
        return np.empty((0, 3))
    return _take(np.vstack(collected), target, rng)


def _voxelize(root, surface: np.ndarray, resolution: int) -> dict:
    lo, hi = root.bbox()
    center = (np.asarray(lo) + np.asarray(hi)) / 2.0
    half = float(np.max(np.asarray(hi) - np.asarray(lo))) / 2.0 * 1.05 + 1e-9
    origin = center - half
    cell = 2.0 * half / resolution

    axes = origin[None, :] + (np.arange(resolution) + 0.5)[:, None] * cell
    gx, gy, gz = np.meshgrid(
        axes[:, 0], axes[:, 1], axes[:, 2], indexing="ij"
    )
    centers = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    occ = root.contains(centers).reshape((resolution, resolution, resolution))

    idx = np.floor((surface - origin) / cell).astype(int)
    inside = np.all((idx >= 0) & (idx < resolution), axis=1)
    idx = idx[inside]
    if len(idx):
        occ[idx[:, 0], idx[:, 1], idx[:, 2]] = True

    return {
        "origin": [float(x) for x in origin],
        "cell": float(cell),
        "resolution": int(resolution),
        "bitset": base64.b64encode(np.packbits(occ.ravel(order="C")).tobytes()).decode(
            "ascii"
        ),
    }


def export_geometry(
    solid,
    seed: int = 0,
    surface_points: int = 4096,
    edge_points: int = 1024,
    resolution: int = 64,
) -> dict:
    """Sample the solid into the interchange artifact dict."""
    root = _resolve_solid(solid)
    rng = np.random.default_rng(seed)
    lo, hi = root.bbox()
    diag = float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))
    eps = max(diag, 1.0) * 1e-6

    surface = _sample_visible_surface(root, rng, surface_points, eps)
    edges = _sample_visible_edges(root, rng, edge_points, eps)

    centroid = surface.mean(axis=0)
    gyration = float(np.sqrt(np.mean(np.sum((surface - centroid) ** 2, axis=1))))
    return {
        "surface": [[float(x) for x in p] for p in surface],
        "edges": [[float(x) for x in p] for p in edges],
        "voxels": _voxelize(root, surface, resolution),
        "stats": {
            "centroid": [float(x) for x in centroid],
            "gyration_radius": gyration,
        },
    }
