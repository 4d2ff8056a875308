"""Deterministic random-number streams.

All Monte-Carlo code in this package draws from numpy Philox generators,
a counter-based 64-bit bit generator.  Independent streams are derived
from a master seed and a list of string/int labels via SHA-256, so that

* the same (seed, labels) always yields the same stream, independently
  of platform hash randomization, and
* replicas fanned out across workers get non-overlapping streams that do
  not depend on the worker assignment (stream id = hash of labels, not
  of execution order).
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["stream", "spawn"]


def _key(seed: int, labels: tuple) -> int:
    text = "steinpp|%d|%s" % (seed, "/".join(str(x) for x in labels))
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def stream(seed: int, *labels) -> np.random.Generator:
    """Generator for the stream named by ``labels`` under ``seed``.

    The split rule is documented and stable: the Philox key is the first
    128 bits of SHA-256 of ``"steinpp|<seed>|<label0>/<label1>/..."``.
    """
    return np.random.Generator(np.random.Philox(key=_key(seed, labels)))


def spawn(seed: int, base_label, n: int) -> list[np.random.Generator]:
    """n replica streams labelled (base_label, 0..n-1)."""
    return [stream(seed, base_label, i) for i in range(n)]
