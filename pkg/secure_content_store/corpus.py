"""Synthetic version-history corpus: one directory per snapshot of a slowly evolving file set.

Edits are insert-heavy, like the history of a source tree: most edits insert a short run of
printable bytes, some overwrite one and a few delete one.
"""

import logging
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationException

_LOGGER = logging.getLogger(__name__)

DEFAULT_VERSIONS = 200
DEFAULT_FILE_SIZE = 64 * 1024
DEFAULT_FILE_COUNT = 1
DEFAULT_EDITS_PER_VERSION = 1
MAX_EDIT_LENGTH = 32

EDIT_INSERT = "insert"
EDIT_OVERWRITE = "overwrite"
EDIT_DELETE = "delete"
EDIT_KINDS = (EDIT_INSERT, EDIT_OVERWRITE, EDIT_DELETE)
EDIT_WEIGHTS = (0.6, 0.25, 0.15)


def snapshot_name(version: int) -> str:
    return "v%05d" % version


def file_name(index: int) -> str:
    return "file%03d.txt" % index


def _printable(rng: np.random.Generator, length: int) -> bytes:
    return rng.integers(32, 127, size=length, dtype=np.uint8).tobytes()


def apply_random_edit(rng: np.random.Generator, content: bytes) -> bytes:
    """One random insert, overwrite or delete of 1..32 bytes."""
    kind = EDIT_KINDS[rng.choice(len(EDIT_KINDS), p=EDIT_WEIGHTS)]
    length = int(rng.integers(1, MAX_EDIT_LENGTH + 1))
    if kind != EDIT_INSERT and len(content) <= length:
        kind = EDIT_INSERT
    if kind == EDIT_INSERT:
        offset = int(rng.integers(0, len(content) + 1))
        return content[:offset] + _printable(rng, length) + content[offset:]
    offset = int(rng.integers(0, len(content) - length + 1))
    if kind == EDIT_OVERWRITE:
        return content[:offset] + _printable(rng, length) + content[offset + length:]
    return content[:offset] + content[offset + length:]


def generate_corpus(
    path,
    versions: int = DEFAULT_VERSIONS,
    file_size: int = DEFAULT_FILE_SIZE,
    file_count: int = DEFAULT_FILE_COUNT,
    edits_per_version: int = DEFAULT_EDITS_PER_VERSION,
    seed: int = 0,
) -> list[Path]:
    """Write `versions` snapshot directories under path and return them in order.

    Snapshot 0 holds fresh random files; each later snapshot applies edits_per_version
    random edits, each to a randomly picked file, to the previous snapshot.
    """
    if versions < 1 or file_count < 1 or file_size < 1 or edits_per_version < 0:
        raise ConfigurationException("Corpus needs at least one version, one file and one byte per file")
    root = Path(path)
    if root.exists() and any(root.iterdir()):
        _LOGGER.error("Refusing to write corpus into non-empty directory %s", root)
        raise ConfigurationException(f"Corpus directory {root} is not empty")

    rng = np.random.default_rng(seed)
    files = [_printable(rng, file_size) for _ in range(file_count)]
    snapshots = []
    for version in range(versions):
        if version:
            for _ in range(edits_per_version):
                index = int(rng.integers(0, file_count))
                files[index] = apply_random_edit(rng, files[index])
        snapshot = root / snapshot_name(version)
        snapshot.mkdir(parents=True)
        for index, data in enumerate(files):
            (snapshot / file_name(index)).write_bytes(data)
        snapshots.append(snapshot)
    _LOGGER.info("Wrote %s snapshots of %s files to %s", versions, file_count, root)
    return snapshots
