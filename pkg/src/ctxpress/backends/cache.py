"""Content-addressed, write-once score cache on the local filesystem."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..model import Span
from .base import ProviderToken

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CacheKey:
    digest: str

    @classmethod
    def for_request(cls, model_id: str, scoring_mode: str, text: str) -> "CacheKey":
        h = hashlib.sha256()
        for part in (model_id, scoring_mode, text):
            data = part.encode("utf-8")
            h.update(len(data).to_bytes(8, "big"))
            h.update(data)
        return cls(h.hexdigest())


def _encode(tokens: list[ProviderToken]) -> bytes:
    rows = [{"text": t.text, "logprob_nat": t.logprob_nat, "span": t.span.to_list()} for t in tokens]
    return json.dumps(rows, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def _decode(payload: bytes) -> list[ProviderToken]:
    rows = json.loads(payload.decode("utf-8"))
    return [ProviderToken(r["text"], r["logprob_nat"], Span.from_list(r["span"])) for r in rows]


class ScoreCache:
    """Stores provider token lists under ``{root}/{digest[:2]}/{digest}.json``."""

    def __init__(self, root: str | os.PathLike) -> None:
        self.root = Path(root)
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

    def path_for(self, key: CacheKey) -> Path:
        return self.root / key.digest[:2] / f"{key.digest}.json"

    def get(self, key: CacheKey) -> Optional[list[ProviderToken]]:
        path = self.path_for(key)
        try:
            value = _decode(path.read_bytes())
        except FileNotFoundError:
            value = None
        except (ValueError, KeyError, TypeError) as exc:
            log.warning("corrupt cache entry %s treated as miss: %s", path, exc)
            value = None
            path.unlink(missing_ok=True)
        with self._lock:
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
        return value

    def put(self, key: CacheKey, value: list[ProviderToken]) -> bool:
        """Write an entry once; returns False when it already existed."""
        path = self.path_for(key)
        if path.exists():
            return False
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(_encode(value))
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except FileNotFoundError:
                pass
            raise
        return True
