"""Key-value backends: the untrusted Put/Get store that chunks are persisted in."""

import asyncio
import json
import logging
import os
import tempfile
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Callable, Optional

from .exceptions import ConfigurationException, KvsException, RefcountException
from .models import StorageReport

_LOGGER = logging.getLogger(__name__)

RETRY_ATTEMPTS = range(3)
RETRY_DELAY = 0.05

OBJECTS_DIR = "objects"
MANIFEST_FILE = "manifest.json"
REFCOUNTS_FILE = "refcounts"
CONTENT_COUNTER_PREFIX = "content"


def _atomic_write(path: Path, data: bytes) -> None:
    """Write data to path so that readers see either the old or the new file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=".tmp-", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as tmp:
            tmp.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


class KeyValueStore(ABC):
    """Put/Get persistence interface with byte-exact accounting.

    Concurrent gets are safe; mutations must be serialized by the caller.
    """

    refcounted = False

    async def __aenter__(self):
        return self

    async def __aexit__(self, exc_type, exc_value, traceback):
        await self.async_close()

    @abstractmethod
    async def async_put(self, key: bytes, value: bytes) -> None:
        """Persist value under key; re-putting an identical pair changes nothing."""

    @abstractmethod
    async def async_get(self, key: bytes) -> Optional[bytes]:
        """Return the value stored under key, or None."""

    @abstractmethod
    async def async_delete(self, key: bytes) -> bool:
        """Remove key; returns whether it existed."""

    @abstractmethod
    async def async_keys(self) -> list[bytes]:
        """All stored keys in sorted order."""

    @abstractmethod
    async def async_report(self) -> StorageReport:
        """Element count and sum of |k|+|v| over all elements."""

    @abstractmethod
    async def async_load_manifest(self) -> Optional[dict]:
        """The store manifest, or None for an uninitialized store."""

    @abstractmethod
    async def async_save_manifest(self, manifest: dict) -> None:
        """Persist the store manifest."""

    async def async_count(self, key: bytes) -> int:
        raise RefcountException("Backend does not keep reference counters")

    async def async_incr(self, key: bytes) -> int:
        raise RefcountException("Backend does not keep reference counters")

    async def async_decr(self, key: bytes) -> int:
        raise RefcountException("Backend does not keep reference counters")

    async def async_content_count(self, content_key: bytes) -> int:
        raise RefcountException("Backend does not keep content counters")

    async def async_content_incr(self, content_key: bytes) -> int:
        raise RefcountException("Backend does not keep content counters")

    async def async_content_decr(self, content_key: bytes) -> int:
        raise RefcountException("Backend does not keep content counters")

    async def async_flush(self) -> None:
        """Persist buffered metadata."""

    async def async_close(self) -> None:
        """Release resources held by the backend."""


class MemoryKeyValueStore(KeyValueStore):
    """Dictionary-backed store, used by the experiments and tests."""

    def __init__(self) -> None:
        self._data: dict[bytes, bytes] = {}
        self._manifest: Optional[dict] = None
        self._total_bytes = 0

    async def async_put(self, key: bytes, value: bytes) -> None:
        key, value = bytes(key), bytes(value)
        old = self._data.get(key)
        if old == value:
            return
        if old is not None:
            self._total_bytes -= len(key) + len(old)
        self._data[key] = value
        self._total_bytes += len(key) + len(value)

    async def async_get(self, key: bytes) -> Optional[bytes]:
        return self._data.get(bytes(key))

    async def async_delete(self, key: bytes) -> bool:
        old = self._data.pop(bytes(key), None)
        if old is None:
            return False
        self._total_bytes -= len(key) + len(old)
        return True

    async def async_keys(self) -> list[bytes]:
        return sorted(self._data)

    async def async_report(self) -> StorageReport:
        return StorageReport(element_count=len(self._data), total_bytes=self._total_bytes)

    async def async_load_manifest(self) -> Optional[dict]:
        return self._manifest

    async def async_save_manifest(self, manifest: dict) -> None:
        self._manifest = dict(manifest)


class DirectoryKeyValueStore(KeyValueStore):
    """One file per element under objects/<hex[0:2]>/<hex[2:4]>/<hex>, value stored verbatim."""

    def __init__(self, root, retry_delay: float = RETRY_DELAY) -> None:
        """Open (and create if necessary) a directory store rooted at root."""
        self.root = Path(root)
        self._objects = self.root / OBJECTS_DIR
        self._retry_delay = retry_delay
        self._report: Optional[StorageReport] = None

    def object_path(self, key: bytes) -> Path:
        if not key:
            raise KvsException("Keys must not be empty")
        name = key.hex()
        fan_out = name.ljust(4, "0")
        return self._objects / fan_out[0:2] / fan_out[2:4] / name

    async def _with_retries(self, description: str, function: Callable, *args):
        """Run blocking I/O in a worker thread, retrying transient OS errors."""
        for attempt in RETRY_ATTEMPTS:
            try:
                return await asyncio.to_thread(function, *args)
            except FileNotFoundError:
                raise
            except OSError as e:
                _LOGGER.error("I/O error during %s (attempt %s): %s", description, attempt + 1, e)
            await asyncio.sleep(self._retry_delay)
        raise KvsException(f"Failed to {description} after {len(RETRY_ATTEMPTS)} attempts")

    def _scan(self) -> StorageReport:
        report = StorageReport()
        for dirpath, _, filenames in os.walk(self._objects):
            for filename in filenames:
                if filename.startswith("."):
                    continue
                report.element_count += 1
                report.total_bytes += len(filename) // 2 + os.path.getsize(os.path.join(dirpath, filename))
        return report

    async def _ensure_report(self) -> StorageReport:
        """Scan the object directory once, then keep the totals up to date."""
        if self._report is None:
            self._report = await self._with_retries(f"scan {self._objects}", self._scan)
            _LOGGER.debug("Opened directory store %s with %s elements", self.root, self._report.element_count)
        return self._report

    def _write_object(self, path: Path, value: bytes) -> Optional[int]:
        """Write the value; returns the previous size, None if new, or -1 if unchanged."""
        try:
            old = path.read_bytes()
        except FileNotFoundError:
            old = None
        if old == value:
            return -1
        _atomic_write(path, value)
        return None if old is None else len(old)

    async def async_put(self, key: bytes, value: bytes) -> None:
        key, value = bytes(key), bytes(value)
        report = await self._ensure_report()
        path = self.object_path(key)
        old_size = await self._with_retries(f"put {path}", self._write_object, path, value)
        if old_size == -1:
            return
        if old_size is None:
            report.element_count += 1
            report.total_bytes += len(key) + len(value)
        else:
            report.total_bytes += len(value) - old_size

    async def async_get(self, key: bytes) -> Optional[bytes]:
        path = self.object_path(bytes(key))
        try:
            return await self._with_retries(f"get {path}", path.read_bytes)
        except FileNotFoundError:
            return None

    def _remove_object(self, path: Path) -> int:
        size = path.stat().st_size
        path.unlink()
        return size

    async def async_delete(self, key: bytes) -> bool:
        report = await self._ensure_report()
        path = self.object_path(bytes(key))
        try:
            size = await self._with_retries(f"delete {path}", self._remove_object, path)
        except FileNotFoundError:
            return False
        report.element_count -= 1
        report.total_bytes -= len(key) + size
        return True

    def _list_keys(self) -> list[bytes]:
        keys = []
        for _, _, filenames in os.walk(self._objects):
            keys.extend(bytes.fromhex(name) for name in filenames if not name.startswith("."))
        return sorted(keys)

    async def async_keys(self) -> list[bytes]:
        return await self._with_retries(f"list {self._objects}", self._list_keys)

    async def async_report(self) -> StorageReport:
        report = await self._ensure_report()
        return StorageReport(report.element_count, report.total_bytes)

    def _read_manifest(self) -> Optional[dict]:
        try:
            return json.loads((self.root / MANIFEST_FILE).read_text())
        except FileNotFoundError:
            return None

    async def async_load_manifest(self) -> Optional[dict]:
        return await self._with_retries("read manifest", self._read_manifest)

    async def async_save_manifest(self, manifest: dict) -> None:
        data = json.dumps(manifest, indent=2, sort_keys=True).encode()
        await self._with_retries("write manifest", _atomic_write, self.root / MANIFEST_FILE, data)


class RefCountingKeyValueStore(KeyValueStore):
    """Wrapper keeping per-key reference counters out of band.

    A key whose counter drops to zero is removed from the wrapped store. Insertions of whole
    contents are counted separately so that a content cannot be deleted more often than it
    was inserted. Counters are persisted to a newline-delimited sidecar file on flush, with
    'hexkey<TAB>count' lines for elements and 'content<TAB>hexkey<TAB>count' lines for contents.
    """

    refcounted = True

    def __init__(
        self,
        inner: KeyValueStore,
        sidecar_path=None,
        include_in_report: bool = False,
    ) -> None:
        """
        Wrap a backend with reference counters.

        :param inner: The backend holding the elements.
        :param sidecar_path: File the counters are persisted to; None keeps them in memory only.
        :param include_in_report: Whether the sidecar lines count towards total_bytes.
        """
        self._inner = inner
        self._sidecar_path = Path(sidecar_path) if sidecar_path is not None else None
        self._include_in_report = include_in_report
        self._counts: Optional[dict[bytes, int]] = None
        self._content_counts: dict[bytes, int] = {}
        self._dirty = False

    def _read_sidecar(self) -> tuple[dict[bytes, int], dict[bytes, int]]:
        counts, content_counts = {}, {}
        try:
            text = self._sidecar_path.read_text()
        except FileNotFoundError:
            return counts, content_counts
        for line_number, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            fields = line.split("\t")
            try:
                if len(fields) == 3 and fields[0] == CONTENT_COUNTER_PREFIX:
                    content_counts[bytes.fromhex(fields[1])] = int(fields[2])
                elif len(fields) == 2:
                    counts[bytes.fromhex(fields[0])] = int(fields[1])
                else:
                    raise ValueError(line)
            except ValueError:
                _LOGGER.error("Malformed refcount line %s in %s", line_number, self._sidecar_path)
                raise RefcountException(f"Malformed refcount sidecar {self._sidecar_path} at line {line_number}")
        return counts, content_counts

    async def _ensure_counts(self) -> dict[bytes, int]:
        if self._counts is None:
            if self._sidecar_path is None:
                self._counts = {}
            else:
                self._counts, self._content_counts = await asyncio.to_thread(self._read_sidecar)
                _LOGGER.debug(
                    "Loaded %s reference counters and %s content counters from %s",
                    len(self._counts), len(self._content_counts), self._sidecar_path,
                )
        return self._counts

    async def _ensure_content_counts(self) -> dict[bytes, int]:
        await self._ensure_counts()
        return self._content_counts

    @staticmethod
    def _sidecar_line(key: bytes, count: int) -> str:
        return f"{key.hex()}\t{count}\n"

    @staticmethod
    def _content_sidecar_line(key: bytes, count: int) -> str:
        return f"{CONTENT_COUNTER_PREFIX}\t{key.hex()}\t{count}\n"

    def _sidecar_lines(self) -> list[str]:
        lines = [self._sidecar_line(key, self._counts[key]) for key in sorted(self._counts)]
        lines += [
            self._content_sidecar_line(key, self._content_counts[key]) for key in sorted(self._content_counts)
        ]
        return lines

    async def async_count(self, key: bytes) -> int:
        counts = await self._ensure_counts()
        return counts.get(bytes(key), 0)

    async def async_incr(self, key: bytes) -> int:
        counts = await self._ensure_counts()
        key = bytes(key)
        counts[key] = counts.get(key, 0) + 1
        self._dirty = True
        return counts[key]

    async def async_decr(self, key: bytes) -> int:
        counts = await self._ensure_counts()
        key = bytes(key)
        count = counts.get(key, 0)
        if count < 1:
            _LOGGER.error("Reference counter underflow for %s", key.hex())
            raise RefcountException(f"No references left for {key.hex()}")
        count -= 1
        self._dirty = True
        if count:
            counts[key] = count
        else:
            del counts[key]
            await self._inner.async_delete(key)
        return count

    async def async_content_count(self, content_key: bytes) -> int:
        content_counts = await self._ensure_content_counts()
        return content_counts.get(bytes(content_key), 0)

    async def async_content_incr(self, content_key: bytes) -> int:
        content_counts = await self._ensure_content_counts()
        content_key = bytes(content_key)
        content_counts[content_key] = content_counts.get(content_key, 0) + 1
        self._dirty = True
        return content_counts[content_key]

    async def async_content_decr(self, content_key: bytes) -> int:
        content_counts = await self._ensure_content_counts()
        content_key = bytes(content_key)
        count = content_counts.get(content_key, 0)
        if count < 1:
            _LOGGER.error("Content counter underflow for %s", content_key.hex())
            raise RefcountException(f"No insertions left for {content_key.hex()}")
        count -= 1
        self._dirty = True
        if count:
            content_counts[content_key] = count
        else:
            del content_counts[content_key]
        return count

    async def async_put(self, key: bytes, value: bytes) -> None:
        await self._inner.async_put(key, value)

    async def async_get(self, key: bytes) -> Optional[bytes]:
        return await self._inner.async_get(key)

    async def async_delete(self, key: bytes) -> bool:
        counts = await self._ensure_counts()
        if counts.pop(bytes(key), None) is not None:
            self._dirty = True
        return await self._inner.async_delete(key)

    async def async_keys(self) -> list[bytes]:
        return await self._inner.async_keys()

    async def async_report(self) -> StorageReport:
        report = await self._inner.async_report()
        if self._include_in_report:
            await self._ensure_counts()
            report.total_bytes += sum(len(line) for line in self._sidecar_lines())
        return report

    async def async_load_manifest(self) -> Optional[dict]:
        return await self._inner.async_load_manifest()

    async def async_save_manifest(self, manifest: dict) -> None:
        await self._inner.async_save_manifest(manifest)

    async def async_flush(self) -> None:
        if self._sidecar_path is None or not self._dirty:
            return
        counts = await self._ensure_counts()
        data = "".join(self._sidecar_lines()).encode()
        await asyncio.to_thread(_atomic_write, self._sidecar_path, data)
        self._dirty = False
        _LOGGER.debug(
            "Wrote %s reference counters and %s content counters to %s",
            len(counts), len(self._content_counts), self._sidecar_path,
        )

    async def async_close(self) -> None:
        await self.async_flush()
        await self._inner.async_close()


class Mutation:
    """A modification of a stored value; apply returns None to delete the element."""

    def __init__(self, name: str, function: Callable[[bytes], Optional[bytes]]) -> None:
        self.name = name
        self._function = function

    def apply(self, value: bytes) -> Optional[bytes]:
        return self._function(value)

    def __repr__(self) -> str:
        return f"Mutation({self.name})"

    @classmethod
    def flip_bit(cls, offset: int, bit: int = 0):
        def function(value: bytes) -> bytes:
            mutated = bytearray(value)
            mutated[offset] ^= 1 << bit
            return bytes(mutated)

        return cls(f"flip_bit({offset}, {bit})", function)

    @classmethod
    def flip_byte(cls, offset: int):
        def function(value: bytes) -> bytes:
            mutated = bytearray(value)
            mutated[offset] ^= 0xFF
            return bytes(mutated)

        return cls(f"flip_byte({offset})", function)

    @classmethod
    def truncate(cls, length: Optional[int] = None):
        """Cut the value to length bytes; by default drop the last byte."""
        return cls(
            f"truncate({length})",
            lambda value: value[: len(value) - 1 if length is None else length],
        )

    @classmethod
    def substitute(cls, replacement: bytes):
        return cls("substitute", lambda value: bytes(replacement))

    @classmethod
    def delete(cls):
        return cls("delete", lambda value: None)


class TamperingKeyValueStore(KeyValueStore):
    """Adversarial wrapper with full read/write access to the wrapped backend."""

    def __init__(self, inner: KeyValueStore) -> None:
        self._inner = inner

    @property
    def refcounted(self) -> bool:
        return self._inner.refcounted

    async def async_tamper(self, key: bytes, mutation: Mutation) -> None:
        value = await self._inner.async_get(key)
        if value is None:
            raise KvsException(f"Cannot tamper with absent key {key.hex()}")
        mutated = mutation.apply(value)
        _LOGGER.debug("Tampering with %s: %s", key.hex(), mutation)
        if mutated is None:
            await self._inner.async_delete(key)
        else:
            await self._inner.async_put(key, mutated)

    async def async_swap(self, first: bytes, second: bytes) -> None:
        """Exchange the values stored under two keys."""
        first_value = await self._inner.async_get(first)
        second_value = await self._inner.async_get(second)
        if first_value is None or second_value is None:
            raise KvsException("Cannot swap absent keys")
        await self._inner.async_put(first, second_value)
        await self._inner.async_put(second, first_value)

    async def async_put(self, key: bytes, value: bytes) -> None:
        await self._inner.async_put(key, value)

    async def async_get(self, key: bytes) -> Optional[bytes]:
        return await self._inner.async_get(key)

    async def async_delete(self, key: bytes) -> bool:
        return await self._inner.async_delete(key)

    async def async_keys(self) -> list[bytes]:
        return await self._inner.async_keys()

    async def async_report(self) -> StorageReport:
        return await self._inner.async_report()

    async def async_load_manifest(self) -> Optional[dict]:
        return await self._inner.async_load_manifest()

    async def async_save_manifest(self, manifest: dict) -> None:
        await self._inner.async_save_manifest(manifest)

    async def async_count(self, key: bytes) -> int:
        return await self._inner.async_count(key)

    async def async_incr(self, key: bytes) -> int:
        return await self._inner.async_incr(key)

    async def async_decr(self, key: bytes) -> int:
        return await self._inner.async_decr(key)

    async def async_content_count(self, content_key: bytes) -> int:
        return await self._inner.async_content_count(content_key)

    async def async_content_incr(self, content_key: bytes) -> int:
        return await self._inner.async_content_incr(content_key)

    async def async_content_decr(self, content_key: bytes) -> int:
        return await self._inner.async_content_decr(content_key)

    async def async_flush(self) -> None:
        await self._inner.async_flush()

    async def async_close(self) -> None:
        await self._inner.async_close()


def open_backend(spec: str, refcounted: bool = False) -> KeyValueStore:
    """Create a backend from 'memory' or 'dir:PATH', optionally wrapped with reference counters."""
    if spec == "memory":
        backend = MemoryKeyValueStore()
        sidecar = None
    elif spec.startswith("dir:") and len(spec) > 4:
        backend = DirectoryKeyValueStore(spec[4:])
        sidecar = backend.root / REFCOUNTS_FILE
    else:
        raise ConfigurationException(f"Unknown backend: {spec}")
    if refcounted:
        return RefCountingKeyValueStore(backend, sidecar_path=sidecar)
    return backend
