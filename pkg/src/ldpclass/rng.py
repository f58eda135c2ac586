"""Seeded random streams with order-independent substreams.

A stream is identified by ``(seed, path)``.  Two kinds of draws hang off it:

* :meth:`RngStream.generator` gives a ``numpy`` Generator (PCG64) for data
  sampling;
* :meth:`RngStream.uniform_rows` gives rows of uniforms on the open interval
  ``(-1/2, 1/2)`` from a counter-based Philox keyed by ``(seed, path)``.  Row
  ``i`` occupies its own counter range, so it is a pure function of
  ``(seed, path, i, width)`` and never depends on which other rows are
  generated, in what order, or by which worker.

The harness uses path ``(r,)`` for replication ``r`` and row ``i`` for client
``i`` of that replication.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_NOISE_TAG = 0x4C41504C  # separates Philox keys from the PCG64 seed sequence
_DATA_TAG = 0x44415441
_TWO_M53 = 2.0**-53


@dataclass(frozen=True)
class RngStream:
    seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))

    def child(self, *ids: int) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(ids))

    def _seq(self, tag: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=self.path + (tag,))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self._seq(_DATA_TAG)))

    def uniform_rows(self, n_rows: int, width: int, first_row: int = 0) -> np.ndarray:
        """Rows ``first_row .. first_row + n_rows - 1`` of open uniforms, shape ``(n_rows, width)``."""
        if n_rows < 0 or width < 0 or first_row < 0:
            raise ValueError("row counts and offsets must be nonnegative")
        blocks = -(-width // 4)  # Philox4x64 emits 4 words per counter step
        if n_rows == 0 or blocks == 0:
            return np.zeros((n_rows, width))
        key = self._seq(_NOISE_TAG).generate_state(2, np.uint64)
        bitgen = np.random.Philox(key=key)
        if first_row:
            bitgen.advance(first_row * blocks)
        raw = bitgen.random_raw(n_rows * blocks * 4).reshape(n_rows, blocks * 4)[:, :width]
        # 53-bit midpoint grid: strictly inside (0, 1), hence strictly inside (-1/2, 1/2) after shift
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53 - 0.5


class ZeroNoise:
    """Test hook standing in for an :class:`RngStream`; every uniform is 0, so Laplace draws are 0."""

    def uniform_rows(self, n_rows: int, width: int, first_row: int = 0) -> np.ndarray:
        return np.zeros((n_rows, width))
