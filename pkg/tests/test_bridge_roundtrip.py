"""Round-trip across the bridge: a solid built by the runner re-parses in
the evaluator with identical point counts and voxel bitsets, and feeds the
scoring path.  Skipped when the runner package is not installed."""

import sys

import numpy as np
import pytest

pytest.importorskip("cadrunner")

from dstile.bridge import BridgeRunner
from dstile.geometry import GeometryArtifact, align_and_score

BRIDGE_CMD = f"{sys.executable} -m cadrunner.bridge"

SCRIPT = """\
import cadquery as cq
result = cq.Workplane("XY").box(4, 4, 2).faces(">Z").workplane().circle(0.8).cutThruAll()
"""


@pytest.fixture(scope="module")
def run_result():
    with BridgeRunner(BRIDGE_CMD) as runner:
        yield runner.run(
            "roundtrip-1",
            SCRIPT,
            timeout=60.0,
            seed=11,
            surface_points=500,
            edge_points=120,
            resolution=32,
        )


def test_runner_reports_ok(run_result):
    assert run_result.status == "ok", run_result.message
    assert run_result.failure_class is None
    assert run_result.wall_time > 0


def test_artifact_reparses_with_identical_counts(run_result):
    raw = run_result.artifact
    artifact = GeometryArtifact.from_dict(raw)
    assert artifact.surface.shape == (len(raw["surface"]), 3)
    assert artifact.edges.shape == (len(raw["edges"]), 3)
    assert artifact.surface.shape[0] == 500


def test_voxel_bitset_survives_reserialization(run_result):
    raw = run_result.artifact
    artifact = GeometryArtifact.from_dict(raw)
    assert artifact.to_dict()["voxels"]["bitset"] == raw["voxels"]["bitset"]
    assert artifact.voxels.count() > 0


def test_point_values_survive_exactly(run_result):
    raw = run_result.artifact
    artifact = GeometryArtifact.from_dict(raw)
    assert np.array_equal(artifact.surface, np.asarray(raw["surface"], dtype=float))
    assert np.array_equal(artifact.edges, np.asarray(raw["edges"], dtype=float))


def test_artifact_feeds_scoring(run_result):
    artifact = GeometryArtifact.from_dict(run_result.artifact)
    metrics = align_and_score(artifact, artifact, resolution=32)
    assert metrics.vsr_valid
    assert metrics.iou == 1.0
    assert metrics.cd < 1e-12


def test_bridge_serves_sequential_requests():
    with BridgeRunner(BRIDGE_CMD) as runner:
        first = runner.run(
            "seq-1", SCRIPT, timeout=60.0, seed=1,
            surface_points=200, edge_points=50, resolution=16,
        )
        second = runner.run(
            "seq-2", "import cadquery as cq\nbad = cq.Workplane('XY').extrude(1)\n",
            timeout=60.0, seed=1,
            surface_points=200, edge_points=50, resolution=16,
        )
    assert first.status == "ok"
    assert second.status == "fail"
    assert second.failure_class == "TypeIII"
