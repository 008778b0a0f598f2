"""Transport clients for the three pipeline stages.

A backend is addressed by a descriptor: the stage it implements, the
transport it speaks, and an endpoint (command line or URL). Each client
turns one request object into one response object; retry policy and
error mapping live in the pipeline.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Callable

from .protocol import ProtocolError, encode_line

KINDS = ("detector", "segmenter", "classifier")
TRANSPORTS = ("in-process-mock", "child-process-stdio", "http")


class TransportError(RuntimeError):
    """The backend process or endpoint failed to produce a response."""


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str
    transport: str
    endpoint: str = ""
    parallel_safe: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.transport not in TRANSPORTS:
            raise ValueError(f"unknown transport {self.transport!r}")
        if self.transport != "in-process-mock" and not self.endpoint:
            raise ValueError(f"{self.transport} backend requires an endpoint")


def descriptor_from_cli(kind: str, value: str) -> BackendDescriptor:
    """Interpret a CLI backend argument: URLs go over HTTP, anything else
    is a child-process command line."""
    if value.startswith("http://") or value.startswith("https://"):
        return BackendDescriptor(kind=kind, transport="http", endpoint=value)
    return BackendDescriptor(kind=kind, transport="child-process-stdio", endpoint=value)


class InProcessBackend:
    """Directly invokes a handler callable; the mock transport."""

    parallel_safe = True

    def __init__(self, handler: Callable[[dict], dict]):
        self._handler = handler

    def request(self, message: dict) -> dict:
        return self._handler(message)

    def close(self) -> None:
        pass


class StdioBackend:
    """One child process, one request in flight at a time."""

    parallel_safe = False

    def __init__(self, command: str):
        self._command = command
        self._lock = threading.Lock()
        self._proc: subprocess.Popen | None = None

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    shlex.split(self._command),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise TransportError(f"cannot start backend {self._command!r}: {exc}") from exc
        return self._proc

    def request(self, message: dict) -> dict:
        with self._lock:
            proc = self._ensure_started()
            try:
                assert proc.stdin is not None and proc.stdout is not None
                proc.stdin.write(encode_line(message) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise TransportError(f"backend {self._command!r} pipe failure: {exc}") from exc
            if not line:
                raise TransportError(f"backend {self._command!r} closed its output stream")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"backend response is not valid JSON: {exc}", line) from exc

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.stdin is not None:
                try:
                    self._proc.stdin.close()
                except OSError:
                    pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
            self._proc = None


class HttpBackend:
    """One JSON POST per request."""

    parallel_safe = True

    def __init__(self, url: str, timeout: float = 30.0):
        self._url = url
        self._timeout = timeout

    def request(self, message: dict) -> dict:
        body = encode_line(message).encode("utf-8")
        req = urllib.request.Request(
            self._url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self._timeout) as resp:
                text = resp.read().decode("utf-8")
        except (urllib.error.URLError, OSError) as exc:
            raise TransportError(f"backend {self._url} unreachable: {exc}") from exc
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"backend response is not valid JSON: {exc}", text) from exc

    def close(self) -> None:
        pass


def open_backend(descriptor: BackendDescriptor, handler: Callable[[dict], dict] | None = None):
    if descriptor.transport == "in-process-mock":
        if handler is None:
            raise ValueError("in-process backend requires a handler")
        return InProcessBackend(handler)
    if descriptor.transport == "child-process-stdio":
        return StdioBackend(descriptor.endpoint)
    return HttpBackend(descriptor.endpoint)


@dataclass
class BackendSet:
    """The three stage clients used by one pipeline run."""

    detector: InProcessBackend | StdioBackend | HttpBackend
    segmenter: InProcessBackend | StdioBackend | HttpBackend
    classifier: InProcessBackend | StdioBackend | HttpBackend

    def close(self) -> None:
        for client in (self.detector, self.segmenter, self.classifier):
            client.close()

    def __enter__(self) -> "BackendSet":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
