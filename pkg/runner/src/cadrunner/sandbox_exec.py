"""Child-process script executor.

Reads one request ``{"code", "seed", "sampling", "workdir"}`` from stdin,
executes the code against the embedded kernel inside an audit-hook sandbox
(no sockets, no subprocesses, no writes outside the work directory), then
writes the outcome to ``<workdir>/_result.json``:

    {"ok": true, "artifact": {...}}
    {"ok": false, "kind": "<ExceptionName>", "message": "..."}

Run as ``python -m cadrunner.sandbox_exec``; the parent owns timeouts.
"""

from __future__ import annotations

import json
import os
import sys
import types

# Heavy imports happen before the audit hook goes live.
import numpy  # noqa: F401  (preloaded so user code import is hook-safe)

from cadrunner import minikernel, sampling

SOLID_NAME_CONVENTION = ("result", "res", "model", "solid", "part", "shape", "r", "wp")

BLOCKED_EVENT_PREFIXES = ("socket.",)
BLOCKED_EVENTS = (
    "subprocess.Popen",
    "os.system",
    "os.exec",
    "os.posix_spawn",
    "os.spawn",
    "os.fork",
    "os.forkpty",
    "ftplib.connect",
    "smtplib.connect",
    "urllib.Request",
)
WRITE_MODES = set("wax+")
FS_WRITE_EVENTS = {
    "os.mkdir": 0,
    "os.remove": 0,
    "os.rename": 0,
    "os.rmdir": 0,
    "os.truncate": 0,
    "os.link": 0,
    "os.symlink": 0,
}


def install_sandbox(workdir: str) -> None:
    root = os.path.realpath(workdir)

    def inside(path) -> bool:
        if isinstance(path, int):  # file descriptor
            return True
        try:
            real = os.path.realpath(os.fspath(path))
        except TypeError:
            return False
        return real == root or real.startswith(root + os.sep)

    def hook(event: str, args) -> None:
        if event.startswith(BLOCKED_EVENT_PREFIXES) or event in BLOCKED_EVENTS:
            raise RuntimeError(f"sandbox: blocked {event}")
        if event == "open":
            path, mode = args[0], args[1] or "r"
            if any(c in WRITE_MODES for c in mode) and not inside(path):
                raise RuntimeError(f"sandbox: write outside work directory: {path}")
        elif event in FS_WRITE_EVENTS:
            if not inside(args[FS_WRITE_EVENTS[event]]):
                raise RuntimeError(f"sandbox: filesystem change outside work directory")

    sys.addaudithook(hook)


def install_kernel_alias() -> None:
    """Scripts import ``cadquery``; the runner always serves the embedded
    kernel so every run is hermetic and deterministic."""
    alias = types.ModuleType("cadquery")
    alias.Workplane = minikernel.Workplane
    sys.modules["cadquery"] = alias


def discover_solid(namespace: dict):
    def usable(value):
        return isinstance(value, minikernel.Workplane) and value._solid is not None

    for name in SOLID_NAME_CONVENTION:
        if name in namespace and usable(namespace[name]):
            return namespace[name]
    candidates = sorted(
        (name for name, value in namespace.items() if usable(value)),
        key=lambda name: (-namespace[name]._solid.volume(), name),
    )
    if candidates:
        return namespace[candidates[0]]
    return None


def main() -> int:
    request = json.loads(sys.stdin.read())
    workdir = request["workdir"]
    os.chdir(workdir)
    result_path = os.path.join(workdir, "_result.json")

    install_kernel_alias()
    install_sandbox(workdir)

    outcome: dict
    try:
        compiled = compile(request["code"], "<generated>", "exec")
        namespace = {"__name__": "__main__", "__builtins__": __builtins__}
        exec(compiled, namespace)
        solid = discover_solid(namespace)
        if solid is None:
            outcome = {
                "ok": False,
                "kind": "ValueError",
                "message": "no solid found in script namespace",
            }
        else:
            cfg = request.get("sampling", {})
            artifact = sampling.export_geometry(
                solid,
                seed=int(request.get("seed", 0)),
                surface_points=int(cfg.get("surface_points", 4096)),
                edge_points=int(cfg.get("edge_points", 1024)),
                resolution=int(cfg.get("resolution", 64)),
            )
            outcome = {"ok": True, "artifact": artifact}
    except BaseException as exc:  # every failure becomes a classified record
        outcome = {"ok": False, "kind": type(exc).__name__, "message": str(exc)}

    with open(result_path, "w", encoding="utf-8") as fh:
        json.dump(outcome, fh)
    return 0


if __name__ == "__main__":
    sys.exit(main())
