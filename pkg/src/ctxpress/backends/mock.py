"""Deterministic mock provider used as a test oracle."""

from __future__ import annotations

import hashlib
import re
import threading

from .base import ProviderToken, build_tokens

_MOCK_TOKEN = re.compile(r"\s*\S+|\s+")


def mock_tokenize(text: str) -> list[str]:
    """Each word together with its leading whitespace is one token."""
    return _MOCK_TOKEN.findall(text)


def mock_hash(namespace: str, token: str, index: int) -> int:
    payload = f"{namespace}\x1f{token}\x1f{index}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def mock_logprob(namespace: str, token: str, index: int) -> float:
    return -(1.0 + (mock_hash(namespace, token, index) % 1000) / 250.0)


def fetch_logprobs_mock(seed_namespace: str, text: str) -> list[ProviderToken]:
    pieces = mock_tokenize(text)
    return build_tokens(text, pieces, [mock_logprob(seed_namespace, p, i) for i, p in enumerate(pieces)])


class MockProvider:
    """Pure provider; ``calls`` counts requests for accounting tests."""

    def __init__(self, model_id: str = "mock") -> None:
        self.model_id = model_id
        self.calls = 0
        self._lock = threading.Lock()

    def fetch(self, text: str) -> list[ProviderToken]:
        with self._lock:
            self.calls += 1
        return fetch_logprobs_mock(self.model_id, text)
