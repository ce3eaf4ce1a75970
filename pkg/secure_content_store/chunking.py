"""Single-level chunking: static (SC) and content-defined (CDC) boundaries.

CDC uses a polynomial Karp-Rabin hash over a sliding window of W bytes,

    hash(c_0 .. c_{W-1}) = sum(c_j * B^(W-1-j)) mod 2^64,

and makes position i (the end offset of a full window) a cut point iff the hash of
content[i-W:i] mod T == T-1. A cut point is the end offset of the preceding chunk.
Multiplier and criterion are part of the store format and are recorded in the manifest.
"""

import logging
from collections import deque
from typing import Optional

import numpy as np

from .models.chunker_spec import ChunkerSpec, SCHEME_SC

_LOGGER = logging.getLogger(__name__)

ROLLING_HASH_MULTIPLIER = 0x9E3779B97F4A7C15
HASH_MASK = (1 << 64) - 1
BOUNDARY_CRITERION = "karp-rabin window hash mod T == T-1"
CUT_POINT_CONVENTION = "cut point is the exclusive end of the preceding chunk"


class RollingHash:
    """Byte-at-a-time Karp-Rabin hash over the last `window` bytes pushed."""

    def __init__(self, window: int) -> None:
        self.window = window
        self.value = 0
        self._bytes = deque()
        self._outgoing_factor = pow(ROLLING_HASH_MULTIPLIER, window, 1 << 64)

    @property
    def full(self) -> bool:
        return len(self._bytes) == self.window

    def push(self, byte: int) -> int:
        self.value = (self.value * ROLLING_HASH_MULTIPLIER + byte) & HASH_MASK
        self._bytes.append(byte)
        if len(self._bytes) > self.window:
            self.value = (self.value - self._bytes.popleft() * self._outgoing_factor) & HASH_MASK
        return self.value


def window_hashes(content: bytes, window: int) -> np.ndarray:
    """Hash of every full window: element t is the hash of content[t:t+window].

    Computed by doubling, combining the hash A of a window of length a at t and the hash
    B of a window of length b at t+a as A * M^b + B, with uint64 arithmetic wrapping.
    """
    n = len(content)
    if n < window:
        return np.zeros(0, dtype=np.uint64)

    block = np.frombuffer(content, dtype=np.uint8).astype(np.uint64)
    block_length = 1
    result, result_length = None, 0
    remaining = window
    while remaining:
        if remaining & 1:
            if result is None:
                result, result_length = block, block_length
            else:
                size = n - (result_length + block_length) + 1
                factor = np.uint64(pow(ROLLING_HASH_MULTIPLIER, block_length, 1 << 64))
                result = result[:size] * factor + block[result_length:result_length + size]
                result_length += block_length
        remaining >>= 1
        if remaining:
            size = n - 2 * block_length + 1
            factor = np.uint64(pow(ROLLING_HASH_MULTIPLIER, block_length, 1 << 64))
            block = block[:size] * factor + block[block_length:block_length + size]
            block_length *= 2
    return result


def _apply_limits(candidates: list[int], length: int, min_length: Optional[int], max_length: Optional[int]) -> list[int]:
    """Drop cut points closer than min_length to the previous one and force one every max_length bytes."""
    if min_length is None and max_length is None:
        return candidates
    cuts = []
    last = 0
    for candidate in candidates:
        while max_length is not None and candidate - last > max_length:
            last += max_length
            cuts.append(last)
        if min_length is not None and candidate - last < min_length:
            continue
        cuts.append(candidate)
        last = candidate
    while max_length is not None and length - last > max_length:
        last += max_length
        cuts.append(last)
    return cuts


class ContentChunker:
    """Chunks arbitrary sub-ranges of one content with any target length.

    The window hashes are computed once per content. A sub-range is chunked exactly as if
    it were a content of its own: windows reaching before its start are ignored.
    """

    def __init__(self, spec: ChunkerSpec, content: bytes) -> None:
        self.spec = spec
        self.content = content
        self._hashes: Optional[np.ndarray] = None
        self._candidates: dict[int, np.ndarray] = {}

    def _candidate_ends(self, target: int) -> np.ndarray:
        """Sorted end offsets (in the whole content) of all windows meeting the criterion."""
        if target not in self._candidates:
            if self._hashes is None:
                self._hashes = window_hashes(self.content, self.spec.window)
            if target <= HASH_MASK:
                hits = self._hashes % np.uint64(target) == np.uint64(target - 1)
            elif target - 1 <= HASH_MASK:
                hits = self._hashes == np.uint64(target - 1)
            else:
                hits = np.zeros(len(self._hashes), dtype=bool)
            self._candidates[target] = np.flatnonzero(hits) + self.spec.window
        return self._candidates[target]

    def cut_points(self, start: int = 0, end: Optional[int] = None, target: Optional[int] = None) -> list[int]:
        """Cut points of content[start:end], as offsets relative to start."""
        end = len(self.content) if end is None else end
        target = self.spec.target_length if target is None else target
        length = end - start
        if self.spec.scheme == SCHEME_SC:
            return list(range(target, length, target))

        ends = self._candidate_ends(target)
        low = np.searchsorted(ends, start + self.spec.window, side="left")
        high = np.searchsorted(ends, end, side="left")
        candidates = (ends[low:high] - start).tolist()
        return _apply_limits(candidates, length, self.spec.min_length, self.spec.max_length)

    def chunk_ranges(self, start: int = 0, end: Optional[int] = None, target: Optional[int] = None) -> list[tuple[int, int]]:
        """Absolute (start, end) ranges of the chunks of content[start:end]; at least one range."""
        end = len(self.content) if end is None else end
        offsets = [start] + [start + cut for cut in self.cut_points(start, end, target)] + [end]
        return list(zip(offsets, offsets[1:]))


def boundaries(spec: ChunkerSpec, content: bytes) -> list[int]:
    """Strictly increasing cut points in (0, len(content))."""
    return ContentChunker(spec, content).cut_points()


def split(spec: ChunkerSpec, content: bytes) -> list[bytes]:
    """Chunks whose concatenation is content; empty content gives a single empty chunk."""
    return [content[start:end] for start, end in ContentChunker(spec, content).chunk_ranges()]
