"""64-bit FNV-1a digests for file payloads and config fingerprints."""

from __future__ import annotations

import json

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """FNV-1a over a byte string, 64-bit. Pure python, ~0.1 s per MB."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return h


def fnv1a64_hex(data: bytes) -> str:
    return f"{fnv1a64(data):016x}"


def config_digest(config: dict) -> str:
    """Digest of a JSON-serializable mapping, stable under key order."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return fnv1a64_hex(canon.encode("utf-8"))
