import numpy as np
import pytest

from cadrunner.runner import RunResult, SamplingConfig, run_script

FAST = SamplingConfig(surface_points=300, edge_points=80, resolution=16)

GOOD_SCRIPT = """\
import cadquery as cq
result = cq.Workplane("XY").box(4, 4, 2).faces(">Z").workplane().circle(0.8).cutThruAll()
"""

SYNTAX_ERROR_SCRIPT = """\
import cadquery as cq
result = cq.Workplane("XY".box(4, 4, 2
"""

API_MISUSE_SCRIPT = """\
import cadquery as cq
result = cq.Workplane("XY").box(2, 2, 2).scale(0.5)
"""

GEOMETRY_ERROR_SCRIPT = """\
import cadquery as cq
result = cq.Workplane("XY").extrude(5)
"""


def run_fast(code: str, **kwargs) -> RunResult:
    return run_script(code, timeout=kwargs.pop("timeout", 30.0), sampling=FAST, **kwargs)


class TestFixtureScripts:
    def test_known_good_box_with_hole(self):
        result = run_fast(GOOD_SCRIPT, seed=5)
        assert result.status == "ok", result.message
        assert result.failure_class is None
        art = result.artifact
        assert len(art["surface"]) == FAST.surface_points
        assert len(art["edges"]) > 0
        assert art["voxels"]["resolution"] == 16
        assert result.wall_time > 0

    def test_syntax_error_is_type1(self):
        result = run_fast(SYNTAX_ERROR_SCRIPT)
        assert result.status == "fail"
        assert result.failure_class == "TypeI"
        assert result.artifact is None

    def test_nonexistent_method_is_type2(self):
        result = run_fast(API_MISUSE_SCRIPT)
        assert result.status == "fail"
        assert result.failure_class == "TypeII"
        assert "scale" in result.message

    def test_pending_wires_violation_is_type3(self):
        result = run_fast(GEOMETRY_ERROR_SCRIPT)
        assert result.status == "fail"
        assert result.failure_class == "TypeIII"
        assert "No pending wires present" in result.message

    def test_vsr_over_batch_is_25_percent(self):
        batch = [GOOD_SCRIPT, SYNTAX_ERROR_SCRIPT, API_MISUSE_SCRIPT, GEOMETRY_ERROR_SCRIPT]
        results = [run_fast(code) for code in batch]
        ok = sum(r.status == "ok" for r in results)
        assert ok / len(results) == 0.25


class TestDiscovery:
    def test_conventional_name_wins(self):
        code = """\
import cadquery as cq
decoy = cq.Workplane("XY").box(10, 10, 10)
result = cq.Workplane("XY").box(1, 1, 1)
"""
        result = run_fast(code, seed=2)
        assert result.status == "ok"
        surf = np.asarray(result.artifact["surface"])
        assert np.abs(surf).max() <= 0.5 + 1e-9

    def test_largest_solid_fallback(self):
        code = """\
import cadquery as cq
small_thing = cq.Workplane("XY").box(1, 1, 1)
big_thing = cq.Workplane("XY").box(6, 6, 6)
"""
        result = run_fast(code, seed=2)
        assert result.status == "ok"
        surf = np.asarray(result.artifact["surface"])
        assert np.abs(surf).max() > 2.0

    def test_no_solid_is_type3(self):
        result = run_fast("x = 41 + 1\n")
        assert result.status == "fail"
        assert result.failure_class == "TypeIII"
        assert "no solid" in result.message


class TestSandbox:
    def test_network_blocked(self):
        code = """\
import socket
socket.create_connection(("127.0.0.1", 9))
"""
        result = run_fast(code)
        assert result.status == "fail"
        assert "sandbox" in result.message

    def test_write_outside_workdir_blocked(self, tmp_path):
        target = tmp_path / "escape.txt"
        code = f"open({str(target)!r}, 'w').write('leak')\n"
        result = run_fast(code)
        assert result.status == "fail"
        assert "sandbox" in result.message
        assert not target.exists()

    def test_write_inside_workdir_allowed(self):
        code = """\
import cadquery as cq
with open("scratch.txt", "w") as fh:
    fh.write("local files are fine")
result = cq.Workplane("XY").box(1, 1, 1)
"""
        result = run_fast(code, seed=1)
        assert result.status == "ok"

    def test_subprocess_blocked(self):
        code = """\
import subprocess
subprocess.run(["true"])
"""
        result = run_fast(code)
        assert result.status == "fail"
        assert "sandbox" in result.message

    def test_timeout_is_type3(self):
        result = run_fast("while True:\n    pass\n", timeout=1.5)
        assert result.status == "fail"
        assert result.failure_class == "TypeIII"
        assert result.message == "timeout"
        assert result.wall_time >= 1.5


def test_deterministic_artifact_bytes():
    import json

    a = run_fast(GOOD_SCRIPT, seed=7).artifact
    b = run_fast(GOOD_SCRIPT, seed=7).artifact
    assert json.dumps(a) == json.dumps(b)
