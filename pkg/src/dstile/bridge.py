"""Client side of the geometry-runner bridge.

The runner is a separate executable speaking JSON-per-line over
stdin/stdout: each request is ``{"id", "code", "timeout", "seed",
"sampling": {"surface_points", "edge_points", "resolution"}}`` and each
response is a run result ``{"id", "status", "failure_class", "message",
"wall_time", "artifact"}`` with the artifact inlined (or referenced via
``artifact_path``).
"""

from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

STATUS_OK = "ok"
STATUS_FAIL = "fail"
TYPE_I = "TypeI"
TYPE_II = "TypeII"
TYPE_III = "TypeIII"


@dataclass
class RunResult:
    status: str
    failure_class: str | None = None
    message: str = ""
    artifact: dict | None = None
    wall_time: float = 0.0

    @classmethod
    def from_dict(cls, data: dict) -> "RunResult":
        artifact = data.get("artifact")
        if artifact is None and data.get("artifact_path"):
            artifact = json.loads(Path(data["artifact_path"]).read_text(encoding="utf-8"))
        return cls(
            status=data["status"],
            failure_class=data.get("failure_class"),
            message=data.get("message", ""),
            artifact=artifact,
            wall_time=float(data.get("wall_time", 0.0)),
        )


class BridgeRunner:
    """Spawns the runner executable and round-trips requests over its pipes."""

    def __init__(self, command: str):
        self.command = command
        self._proc: subprocess.Popen | None = None

    def __enter__(self) -> "BridgeRunner":
        self._proc = subprocess.Popen(
            shlex.split(self.command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait(timeout=10)
            self._proc = None

    def run(
        self,
        request_id: str,
        code: str,
        *,
        timeout: float = 30.0,
        seed: int = 0,
        surface_points: int = 4096,
        edge_points: int = 1024,
        resolution: int = 64,
    ) -> RunResult:
        if self._proc is None or self._proc.stdin is None or self._proc.stdout is None:
            raise RuntimeError("runner process is not started")
        request = {
            "id": request_id,
            "code": code,
            "timeout": timeout,
            "seed": seed,
            "sampling": {
                "surface_points": surface_points,
                "edge_points": edge_points,
                "resolution": resolution,
            },
        }
        self._proc.stdin.write(json.dumps(request) + "\n")
        self._proc.stdin.flush()
        line = self._proc.stdout.readline()
        if not line:
            raise RuntimeError("runner closed the bridge unexpectedly")
        response = json.loads(line)
        if response.get("id") != request_id:
            raise RuntimeError(
                f"bridge response id {response.get('id')!r} != request {request_id!r}"
            )
        return RunResult.from_dict(response)
