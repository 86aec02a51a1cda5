"""Client for OpenAI-compatible completion endpoints that echo prompt logprobs."""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import httpx

from .base import BackendError, ConfigurationError, ProviderToken, RetryableBackendError, build_tokens, check_tiling

log = logging.getLogger(__name__)

API_KEY_ENV = "CTXPRESS_API_KEY"
DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_BACKOFF = (0.5, 2.0, 8.0)


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str = DEFAULT_BASE_URL
    model_id: str = "davinci-002"
    api_key: Optional[str] = field(default=None, repr=False)
    timeout: float = 30.0
    max_parallel: int = 4

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ValueError("base_url must be non-empty")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")

    @classmethod
    def from_env(cls, **kwargs) -> "ProviderConfig":
        kwargs.setdefault("api_key", os.environ.get(API_KEY_ENV))
        return cls(**kwargs)


def completion_payload(model_id: str, text: str) -> dict:
    return {"model": model_id, "prompt": text, "max_tokens": 0, "echo": True, "logprobs": 1}


def parse_completion(text: str, body: dict) -> list[ProviderToken]:
    try:
        lp = body["choices"][0]["logprobs"]
        tokens = lp["tokens"]
        values = lp["token_logprobs"]
    except (KeyError, IndexError, TypeError) as exc:
        raise BackendError(f"response lacks echoed logprobs: {exc}") from exc
    tokens_out = build_tokens(text, tokens, values, lp.get("text_offset"))
    check_tiling(text, tokens_out)
    return tokens_out


class HttpProvider:
    """Scores text through ``POST {base_url}/completions`` with ``echo=true``.

    Transport errors, 429 and 5xx responses are retried up to ``attempts``
    times in total, sleeping ``backoff[i]`` seconds before retry ``i``.
    """

    def __init__(
        self,
        config: ProviderConfig,
        *,
        transport: Optional[httpx.BaseTransport] = None,
        attempts: int = 3,
        backoff: Sequence[float] = DEFAULT_BACKOFF,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.config = config
        self.model_id = config.model_id
        self.attempts = attempts
        self.backoff = tuple(backoff)
        self._sleep = sleep
        headers = {"Content-Type": "application/json"}
        if config.api_key:
            headers["Authorization"] = f"Bearer {config.api_key}"
        limits = httpx.Limits(max_connections=config.max_parallel)
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            headers=headers,
            timeout=config.timeout,
            transport=transport,
            limits=limits,
        )

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "HttpProvider":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _request_once(self, text: str) -> list[ProviderToken]:
        try:
            resp = self._client.post("/completions", json=completion_payload(self.model_id, text))
        except httpx.TransportError as exc:
            raise RetryableBackendError(f"transport failure: {exc}") from exc
        if resp.status_code in (401, 403):
            raise ConfigurationError(f"authentication rejected ({resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            raise RetryableBackendError(f"server returned {resp.status_code}")
        if resp.status_code >= 400:
            raise BackendError(f"request rejected ({resp.status_code}): {resp.text[:200]}")
        try:
            body = resp.json()
        except ValueError as exc:
            raise RetryableBackendError("response is not JSON") from exc
        return parse_completion(text, body)

    def fetch(self, text: str) -> list[ProviderToken]:
        if not text:
            raise ValueError("cannot score empty text")
        last: Optional[RetryableBackendError] = None
        for attempt in range(self.attempts):
            if attempt:
                delay = self.backoff[min(attempt - 1, len(self.backoff) - 1)] if self.backoff else 0.0
                log.warning("retrying request (attempt %d/%d) after %.1fs: %s", attempt + 1, self.attempts, delay, last)
                self._sleep(delay)
            try:
                return self._request_once(text)
            except RetryableBackendError as exc:
                last = exc
        assert last is not None
        raise RetryableBackendError(f"gave up after {self.attempts} attempts: {last}") from last
