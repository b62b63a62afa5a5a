"""Parent-side script runner: one fresh sandboxed subprocess per script,
wall-clock timeout, failure classification, artifact pass-through."""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass

from cadrunner.classify import TYPE_III, classify_error

DEFAULT_TIMEOUT = 30.0


@dataclass
class SamplingConfig:
    surface_points: int = 4096
    edge_points: int = 1024
    resolution: int = 64

    def to_dict(self) -> dict:
        return {
            "surface_points": self.surface_points,
            "edge_points": self.edge_points,
            "resolution": self.resolution,
        }


@dataclass
class RunResult:
    status: str  # "ok" | "fail"
    failure_class: str | None = None
    message: str = ""
    artifact: dict | None = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "failure_class": self.failure_class,
            "message": self.message,
            "artifact": self.artifact,
            "wall_time": self.wall_time,
        }


def run_script(
    code: str,
    timeout: float = DEFAULT_TIMEOUT,
    *,
    seed: int = 0,
    sampling: SamplingConfig | None = None,
) -> RunResult:
    """Execute one CAD script in an isolated subprocess.

    The child gets a private temp working directory, no network and no
    subprocesses; exceptions map onto the Type I/II/III taxonomy and a
    timeout is Type III by convention.
    """
    sampling = sampling or SamplingConfig()
    started = time.monotonic()
    with tempfile.TemporaryDirectory(prefix="cadrun-") as workdir:
        request = json.dumps(
            {
                "code": code,
                "seed": seed,
                "sampling": sampling.to_dict(),
                "workdir": workdir,
            }
        )
        try:
            proc = subprocess.run(
                [sys.executable, "-m", "cadrunner.sandbox_exec"],
                input=request,
                capture_output=True,
                text=True,
                timeout=timeout,
                cwd=workdir,
            )
        except subprocess.TimeoutExpired:
            return RunResult(
                status="fail",
                failure_class=TYPE_III,
                message="timeout",
                wall_time=time.monotonic() - started,
            )
        wall = time.monotonic() - started

        outcome = None
        try:
            with open(f"{workdir}/_result.json", encoding="utf-8") as fh:
                outcome = json.load(fh)
        except FileNotFoundError:
            pass
        if outcome is None:
            detail = (proc.stderr or "").strip().splitlines()
            return RunResult(
                status="fail",
                failure_class=TYPE_III,
                message="runner crashed: " + (detail[-1] if detail else "no output"),
                wall_time=wall,
            )

    if outcome["ok"]:
        return RunResult(status="ok", artifact=outcome["artifact"], wall_time=wall)
    failure, note = classify_error(outcome["kind"], outcome["message"])
    message = f"{outcome['kind']}: {outcome['message']}"
    if note:
        message += f" ({note})"
    return RunResult(
        status="fail", failure_class=failure, message=message, wall_time=wall
    )
