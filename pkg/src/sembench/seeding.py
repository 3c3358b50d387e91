"""Deterministic random streams.

Every stochastic operation in the package draws from a counter-based
generator (Philox) keyed by a ``Seed``: a user-facing 64-bit integer plus
two stream labels, an item index and a free-form purpose tag.  The key is
the first 128 bits of ``SHA-256(f"{value}|{index}|{purpose}")``, so streams
for different labels are statistically independent and a given triple
always reproduces the same draws, independent of platform or call order
elsewhere in the program.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np

__all__ = ["Seed"]


@dataclass(frozen=True)
class Seed:
    """A reproducible random stream label.

    value   : base seed, any Python int (hashed, so range is unrestricted)
    index   : per-item counter, e.g. the position of an image in a batch
    purpose : what the stream is consumed for ("params", "noise", "mask")
    """

    value: int
    index: int = 0
    purpose: str = ""

    def __post_init__(self):
        if not isinstance(self.value, int) or not isinstance(self.index, int):
            raise TypeError("seed value and index must be integers")

    def substream(self, index: int | None = None, purpose: str | None = None) -> "Seed":
        """Return a copy with the given labels replaced."""
        kw = {}
        if index is not None:
            kw["index"] = index
        if purpose is not None:
            kw["purpose"] = purpose
        return replace(self, **kw)

    def key(self) -> int:
        digest = hashlib.sha256(
            f"{self.value}|{self.index}|{self.purpose}".encode()
        ).digest()
        return int.from_bytes(digest[:16], "little")

    def generator(self) -> np.random.Generator:
        """A fresh Generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(key=self.key()))

    def to_dict(self) -> dict:
        return {"value": self.value, "index": self.index, "purpose": self.purpose}

    @classmethod
    def from_dict(cls, d: dict) -> "Seed":
        return cls(int(d["value"]), int(d.get("index", 0)), str(d.get("purpose", "")))
