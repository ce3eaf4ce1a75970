from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
from secure_content_store.chunking import ContentChunker, RollingHash, boundaries, split, window_hashes
from secure_content_store.models import ChunkerSpec

CDC_128 = ChunkerSpec("cdc", 128)
MIB = 1 << 20


def random_content(seed, size):
    return np.random.default_rng(seed).bytes(size)


def test_static_chunking_cuts_at_multiples():
    assert boundaries(ChunkerSpec("sc", 4), bytes(10)) == [4, 8]
    assert boundaries(ChunkerSpec("sc", 4), bytes(8)) == [4]
    assert split(ChunkerSpec("sc", 4), b"0123456789") == [b"0123", b"4567", b"89"]


@given(st.binary(max_size=600))
def test_static_boundaries_depend_only_on_length(content):
    spec = ChunkerSpec("sc", 64)
    assert boundaries(spec, content) == boundaries(spec, bytes(len(content)))


@pytest.mark.parametrize("spec", [ChunkerSpec("sc", 64), CDC_128])
def test_empty_content_gives_one_empty_chunk(spec):
    assert boundaries(spec, b"") == []
    assert split(spec, b"") == [b""]


def test_short_content_is_a_single_chunk():
    assert boundaries(CDC_128, random_content(0, 47)) == []
    assert split(CDC_128, b"abc") == [b"abc"]


@given(st.binary(max_size=2000), st.integers(1, 64), st.integers(1, 16))
def test_rolling_hash_matches_window_hashes(content, target, window):
    hashes = window_hashes(content, window)
    rolling = RollingHash(window)
    expected = []
    for byte in content:
        value = rolling.push(byte)
        if rolling.full:
            expected.append(value)
    assert [int(value) for value in hashes] == expected

    spec = ChunkerSpec("cdc", target, window=window)
    cuts = [index + 1 for index in range(window - 1, len(content) - 1) if expected[index - window + 1] % target == target - 1]
    assert boundaries(spec, content) == cuts


@given(st.binary(max_size=3000), st.sampled_from([ChunkerSpec("sc", 100), ChunkerSpec("cdc", 16, window=8)]))
def test_split_reconstructs_content(content, spec):
    chunks = split(spec, content)
    assert b"".join(chunks) == content
    cuts = boundaries(spec, content)
    assert len(chunks) == len(cuts) + 1
    assert all(0 < cut < len(content) for cut in cuts)
    assert cuts == sorted(set(cuts))


@given(st.binary(min_size=1, max_size=3000), st.integers(0, 255))
@settings(max_examples=50)
def test_minimum_and_maximum_lengths(content, fill):
    spec = ChunkerSpec("cdc", 8, window=4, min_length=6, max_length=20)
    chunks = split(spec, content + bytes([fill]) * 100)
    assert all(len(chunk) <= 20 for chunk in chunks)
    assert all(len(chunk) >= 6 for chunk in chunks[:-1])


@given(st.data())
@settings(max_examples=50)
def test_sub_range_is_chunked_like_a_separate_content(data):
    content = random_content(data.draw(st.integers(0, 1000)), 4096)
    start = data.draw(st.integers(0, 4096))
    end = data.draw(st.integers(start, 4096))
    target = data.draw(st.sampled_from([16, 64, 512]))
    chunker = ContentChunker(ChunkerSpec("cdc", 64, window=12), content)
    assert chunker.cut_points(start, end, target) == boundaries(ChunkerSpec("cdc", target, window=12), content[start:end])


def test_huge_target_never_cuts():
    chunker = ContentChunker(CDC_128, random_content(1, 10000))
    assert chunker.cut_points(target=1 << 70) == []
    assert chunker.chunk_ranges(0, 10000, 1 << 70) == [(0, 10000)]


def test_mean_chunk_length_is_close_to_target():
    lengths = [MIB / len(split(CDC_128, random_content(seed, MIB))) for seed in range(20)]
    assert sum(lengths) / len(lengths) == pytest.approx(128, rel=0.1)


@given(st.integers(0, 4095), st.integers(1, 255))
@settings(max_examples=50)
def test_changed_byte_only_moves_boundaries_within_reach(offset, xor):
    content = random_content(7, 4096)
    changed = bytearray(content)
    changed[offset] ^= xor
    spec = ChunkerSpec("cdc", 16, window=8)

    def outside(cuts):
        return [cut for cut in cuts if not offset + 1 <= cut <= offset + spec.window]

    assert outside(boundaries(spec, content)) == outside(boundaries(spec, bytes(changed)))


def test_insert_preserves_most_chunks():
    preserved = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        content = rng.bytes(MIB)
        offset = int(rng.integers(0, MIB + 1))
        modified = content[:offset] + b"\x00" + content[offset:]
        before, after = Counter(split(CDC_128, content)), Counter(split(CDC_128, modified))
        preserved.append(sum((before & after).values()) / sum(before.values()))
    assert min(preserved) >= 0.95


def test_prepending_a_byte():
    content = random_content(3, 64 * 1024)
    shifted = b"\x00" + content

    static = ChunkerSpec("sc", 128)
    assert not set(split(static, content)[:-1]) & set(split(static, shifted))

    old, new = split(CDC_128, content), split(CDC_128, shifted)
    # a new cut can only appear at the first full window of the shifted content
    head = len(new) - len(old) + 1
    assert new[head:] == old[1:]
    assert b"".join(new[:head]) == b"\x00" + old[0]
