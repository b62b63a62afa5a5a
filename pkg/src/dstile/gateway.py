"""Chat-completion gateway with a record/replay cassette.

A cassette is a JSONL file of ``{"prompt_sha256", "model", "response"}``
entries keyed by a hash of the serialized messages plus the model id.
Replay mode answers from the cassette only and never touches the network.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from dstile.errors import CassetteMissError, GatewayError
from dstile.prompting import Prompt

MODE_LIVE = "live"
MODE_RECORD = "record"
MODE_REPLAY = "replay"

API_KEY_ENV = "DSTILE_API_KEY"


@dataclass
class GatewayConfig:
    base_url: str = ""
    model: str = "stub"
    temperature: float = 0.0
    max_tokens: int = 2048
    timeout: float = 60.0
    max_retries: int = 3
    mode: str = MODE_REPLAY
    cassette_path: str | None = None
    concurrency: int = 4
    backoff_base: float = 1.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.mode not in (MODE_LIVE, MODE_RECORD, MODE_REPLAY):
            raise ValueError(f"unknown gateway mode {self.mode!r}")
        if self.mode in (MODE_RECORD, MODE_REPLAY) and not self.cassette_path:
            raise ValueError(f"{self.mode} mode requires a cassette path")


def prompt_hash(prompt: Prompt, model: str) -> str:
    """Stable hash over the serialized messages and the model id."""
    payload = json.dumps(
        {"model": model, "messages": prompt.as_messages()},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class Cassette:
    path: Path
    entries: dict[str, str] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def load(cls, path: str | Path) -> "Cassette":
        p = Path(path)
        entries = {}
        if p.exists():
            with p.open(encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    entries[record["prompt_sha256"]] = record["response"]
        return cls(path=p, entries=entries)

    def get(self, key: str) -> str | None:
        return self.entries.get(key)

    def put(self, key: str, model: str, response: str) -> None:
        with self._lock:
            if key in self.entries:
                return
            self.entries[key] = response
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {"prompt_sha256": key, "model": model, "response": response}
                    )
                    + "\n"
                )


class Gateway:
    """Synchronous completion client; in-flight requests are bounded by a
    semaphore so callers can fan out across threads."""

    def __init__(self, config: GatewayConfig):
        self.config = config
        self.cassette = (
            Cassette.load(config.cassette_path) if config.cassette_path else None
        )
        self._semaphore = threading.Semaphore(config.concurrency)

    def complete(self, prompt: Prompt) -> str:
        key = prompt_hash(prompt, self.config.model)
        if self.config.mode == MODE_REPLAY:
            assert self.cassette is not None
            response = self.cassette.get(key)
            if response is None:
                raise CassetteMissError(
                    f"no cassette entry for prompt {key[:12]}… "
                    f"(model {self.config.model})"
                )
            return response
        if self.config.mode == MODE_RECORD and self.cassette is not None:
            cached = self.cassette.get(key)
            if cached is not None:
                return cached
        response = self._call_endpoint(prompt)
        if self.config.mode == MODE_RECORD and self.cassette is not None:
            self.cassette.put(key, self.config.model, response)
        return response

    def _call_endpoint(self, prompt: Prompt) -> str:
        body = {
            "model": self.config.model,
            "messages": prompt.as_messages(),
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        url = self.config.base_url.rstrip("/") + "/chat/completions"

        last_error: Exception | None = None
        with self._semaphore:
            for attempt in range(self.config.max_retries + 1):
                if attempt > 0:
                    delay = self.config.backoff_base * (2 ** (attempt - 1))
                    time.sleep(delay * (1.0 + random.random() * 0.1))
                try:
                    resp = httpx.post(
                        url, json=body, headers=headers, timeout=self.config.timeout
                    )
                except httpx.TransportError as exc:
                    last_error = exc
                    continue
                if resp.status_code >= 500:
                    last_error = GatewayError(f"server error {resp.status_code}")
                    continue
                if resp.status_code != 200:
                    raise GatewayError(
                        f"endpoint returned {resp.status_code}: {resp.text[:200]}"
                    )
                data = resp.json()
                return data["choices"][0]["message"]["content"]
        raise GatewayError(
            f"exhausted {self.config.max_retries} retries against {url}: {last_error}"
        )
