"""In-process stub of an OpenAI-compatible completions endpoint.

Used by the test-suite and for offline demos: tokenizes like the mock
provider, omits the first token's log-probability as real endpoints do, and
can inject transient failures or broken tokenizations.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Optional

from .mock import mock_logprob, mock_tokenize

Script = Callable[[str], tuple[list[str], list[Optional[float]]]]


def default_script(text: str, namespace: str = "stub") -> tuple[list[str], list[Optional[float]]]:
    pieces = mock_tokenize(text)
    values: list[Optional[float]] = [mock_logprob(namespace, p, i) for i, p in enumerate(pieces)]
    if values:
        values[0] = None
    return pieces, values


class StubCompletionServer:
    """Threaded HTTP server on localhost; use as a context manager."""

    def __init__(self, script: Optional[Script] = None, api_key: Optional[str] = None) -> None:
        self.script = script or default_script
        self.api_key = api_key
        self.requests = 0
        self.successes = 0
        self.prompts: list[str] = []
        self._fail_next: list[int] = []
        self._lock = threading.Lock()
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), self._handler())
        self._thread: Optional[threading.Thread] = None

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1"

    def fail_next(self, count: int = 1, status: int = 503) -> None:
        with self._lock:
            self._fail_next.extend([status] * count)

    def start(self) -> "StubCompletionServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self) -> "StubCompletionServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def _respond(self, prompt: str) -> dict:
        tokens, values = self.script(prompt)
        offsets, pos = [], 0
        for tok in tokens:
            offsets.append(pos)
            pos += len(tok)
        return {
            "object": "text_completion",
            "choices": [
                {
                    "text": prompt,
                    "index": 0,
                    "logprobs": {"tokens": tokens, "token_logprobs": values, "text_offset": offsets},
                    "finish_reason": "length",
                }
            ],
        }

    def _handler(self):
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args) -> None:
                pass

            def _send(self, status: int, body: dict) -> None:
                data = json.dumps(body).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_POST(self) -> None:
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                with stub._lock:
                    stub.requests += 1
                    failure = stub._fail_next.pop(0) if stub._fail_next else None
                if failure is not None:
                    self._send(failure, {"error": {"message": "injected failure"}})
                    return
                if stub.api_key and self.headers.get("Authorization") != f"Bearer {stub.api_key}":
                    self._send(401, {"error": {"message": "invalid api key"}})
                    return
                if not self.path.rstrip("/").endswith("/completions"):
                    self._send(404, {"error": {"message": "not found"}})
                    return
                try:
                    payload = json.loads(raw.decode("utf-8"))
                    prompt = payload["prompt"]
                except (ValueError, KeyError):
                    self._send(400, {"error": {"message": "bad request"}})
                    return
                body = stub._respond(prompt)
                with stub._lock:
                    stub.successes += 1
                    stub.prompts.append(prompt)
                self._send(200, body)

        return Handler
