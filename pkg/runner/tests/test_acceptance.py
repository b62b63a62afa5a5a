"""Runner acceptance: fixture batch classification, VSR arithmetic, and the
sandbox policy, each printing a PASS line.  Run with ``pytest -v -s``."""

from cadrunner.runner import SamplingConfig, run_script

FAST = SamplingConfig(surface_points=300, edge_points=80, resolution=16)

FIXTURES = {
    "good": (
        'import cadquery as cq\n'
        'result = cq.Workplane("XY").box(4, 4, 2)'
        '.faces(">Z").workplane().circle(0.8).cutThruAll()\n'
    ),
    "type1": 'import cadquery as cq\nresult = cq.Workplane("XY".box(4, 4, 2\n',
    "type2": 'import cadquery as cq\nresult = cq.Workplane("XY").box(2, 2, 2).scale(0.5)\n',
    "type3": 'import cadquery as cq\nresult = cq.Workplane("XY").extrude(5)\n',
}


def report_pass(name: str, detail: str = ""):
    suffix = f" ({detail})" if detail else ""
    print(f"\nACCEPTANCE {name}: PASS{suffix}")


def test_fixture_batch_classification_and_vsr():
    """Known-good script runs ok with non-empty clouds; the three authored
    failures classify as Type I/II/III; VSR over the batch is 25%."""
    results = {name: run_script(code, timeout=30.0, sampling=FAST) for name, code in FIXTURES.items()}

    good = results["good"]
    assert good.status == "ok"
    assert len(good.artifact["surface"]) > 0
    assert len(good.artifact["edges"]) > 0

    assert results["type1"].status == "fail"
    assert results["type1"].failure_class == "TypeI"
    assert results["type2"].status == "fail"
    assert results["type2"].failure_class == "TypeII"
    assert results["type3"].status == "fail"
    assert results["type3"].failure_class == "TypeIII"
    assert "No pending wires present" in results["type3"].message

    vsr = sum(r.status == "ok" for r in results.values()) / len(results)
    assert vsr == 0.25
    report_pass("runner-fixture-batch", "Type I/II/III classified, VSR 25%")


def test_sandbox_policy():
    """Scripts opening sockets or writing outside the work directory fail."""
    net = run_script(
        'import socket\nsocket.create_connection(("127.0.0.1", 9))\n',
        timeout=30.0,
        sampling=FAST,
    )
    assert net.status == "fail"
    assert "sandbox" in net.message

    escape = run_script(
        "open('/tmp/cadrunner-escape-attempt', 'w').write('x')\n",
        timeout=30.0,
        sampling=FAST,
    )
    assert escape.status == "fail"
    assert "sandbox" in escape.message
    import os

    assert not os.path.exists("/tmp/cadrunner-escape-attempt")
    report_pass("runner-sandbox-policy", "network and out-of-tree writes blocked")
