"""Closed-form storage cost bounds, used as oracles for the measured storage deltas.

All functions are real-valued; nothing is rounded to whole bytes.
"""

import math

from .content_store import tree_height
from .exceptions import ConfigurationException
from .models.chunker_spec import DEFAULT_WINDOW, SCHEME_SC
from .models.store_config import MAC_SIZE, REFERENCE_SIZE


def exp_nodes(n: int, chunk_size: int) -> float:
    """Expected total number of tree nodes for a content of n bytes: ceil(2n / S)."""
    return float(math.ceil(2 * n / chunk_size))


def storage_full(n: int, chunk_size: int, mac_size: int = MAC_SIZE) -> float:
    """Expected storage for a content sharing nothing with the store: (D + S) * ExpN."""
    return (mac_size + chunk_size) * exp_nodes(n, chunk_size)


def add_strg_sc(height: int, chunk_size: int, mac_size: int = MAC_SIZE) -> float:
    """ML-SC cost of a one-byte change: one new node per level."""
    return float((mac_size + chunk_size) * (height + 1))


def exp_new_nodes_cdc(
    height: int,
    chunk_size: int,
    reference_size: int = REFERENCE_SIZE,
    window: int = DEFAULT_WINDOW,
) -> float:
    """Expected number of nodes differing between the trees of two contents one byte apart (ML-CDC)."""
    total = 1.0
    for level in range(height):
        # a position is a boundary at this level with probability R^h' / S^(h'+1)
        p = reference_size ** level / chunk_size ** (level + 1)
        total += 1 + 3 * window * (1 - p) * p
    return total


def exp_chunk_size_cdc(chunk_size: int) -> float:
    """Upper bound on the expected size of the chunk covering a uniformly random position."""
    return 2.0 * chunk_size


def add_strg_cdc(
    height: int,
    chunk_size: int,
    mac_size: int = MAC_SIZE,
    window: int = DEFAULT_WINDOW,
    reference_size: int = REFERENCE_SIZE,
) -> float:
    """ML-CDC cost of a one-byte change: (D + 2S) * ExpNN."""
    return (mac_size + exp_chunk_size_cdc(chunk_size)) * exp_new_nodes_cdc(height, chunk_size, reference_size, window)


def add_strg(
    scheme: str,
    height: int,
    chunk_size: int,
    mac_size: int = MAC_SIZE,
    window: int = DEFAULT_WINDOW,
    reference_size: int = REFERENCE_SIZE,
) -> float:
    if scheme == SCHEME_SC:
        return add_strg_sc(height, chunk_size, mac_size)
    return add_strg_cdc(height, chunk_size, mac_size, window, reference_size)


def delta_strg(
    scheme: str,
    height: int,
    delta: int,
    chunk_size: int,
    mac_size: int = MAC_SIZE,
    window: int = DEFAULT_WINDOW,
    reference_size: int = REFERENCE_SIZE,
) -> float:
    """Cost of a content differing from a stored one in a single run of delta >= 2 bytes.

    Both ends of the run cost one single-byte change; the bytes in between cost at most as
    much as storing them as a separate content.
    """
    if delta < 2:
        raise ConfigurationException(f"delta_strg needs delta >= 2, got {delta}; use add_strg for single bytes")
    return 2 * add_strg(scheme, height, chunk_size, mac_size, window, reference_size) + storage_full(
        delta - 2, chunk_size, mac_size
    )


def modification_bound(
    scheme: str,
    n: int,
    delta: int,
    chunk_size: int,
    mac_size: int = MAC_SIZE,
    window: int = DEFAULT_WINDOW,
    reference_size: int = REFERENCE_SIZE,
) -> float:
    """Bound for a delta-byte modification of an n-byte content, picking the matching formula."""
    height = tree_height(n, chunk_size, reference_size)
    if delta == 1:
        return add_strg(scheme, height, chunk_size, mac_size, window, reference_size)
    return delta_strg(scheme, height, delta, chunk_size, mac_size, window, reference_size)
