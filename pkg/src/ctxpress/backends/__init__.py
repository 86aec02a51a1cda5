"""Log-probability providers, the score cache and an offline stub server."""

from .base import (
    BackendError,
    ConfigurationError,
    LogprobProvider,
    ProviderToken,
    RetryableBackendError,
    TilingError,
    build_tokens,
    check_tiling,
)
from .cache import CacheKey, ScoreCache
from .http import API_KEY_ENV, HttpProvider, ProviderConfig
from .mock import MockProvider, fetch_logprobs_mock, mock_tokenize
from .stub import StubCompletionServer

__all__ = [
    "API_KEY_ENV",
    "BackendError",
    "CacheKey",
    "ConfigurationError",
    "HttpProvider",
    "LogprobProvider",
    "MockProvider",
    "ProviderConfig",
    "ProviderToken",
    "RetryableBackendError",
    "ScoreCache",
    "StubCompletionServer",
    "TilingError",
    "build_tokens",
    "check_tiling",
    "fetch_logprobs_mock",
    "mock_tokenize",
]
