"""Bridge server: JSON-per-line over stdin/stdout.

Request:  {"id", "code", "timeout", "seed", "sampling": {"surface_points",
           "edge_points", "resolution"}}
Response: {"id", "status", "failure_class", "message", "wall_time",
           "artifact"} (artifact inlined).

Exit codes: 0 on clean shutdown (EOF), 2 on a protocol error.

Run with ``python -m cadrunner.bridge``.
"""

from __future__ import annotations

import json
import sys

from cadrunner.runner import DEFAULT_TIMEOUT, RunResult, SamplingConfig, run_script

EXIT_PROTOCOL_ERROR = 2


def serve(stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            request_id = request["id"]
            code = request["code"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            sys.stderr.write(f"protocol error: {exc}\n")
            return EXIT_PROTOCOL_ERROR
        cfg = request.get("sampling", {})
        result: RunResult = run_script(
            code,
            timeout=float(request.get("timeout", DEFAULT_TIMEOUT)),
            seed=int(request.get("seed", 0)),
            sampling=SamplingConfig(
                surface_points=int(cfg.get("surface_points", 4096)),
                edge_points=int(cfg.get("edge_points", 1024)),
                resolution=int(cfg.get("resolution", 64)),
            ),
        )
        response = {"id": request_id, **result.to_dict()}
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(serve())
