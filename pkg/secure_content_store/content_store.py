import logging
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .chunking import BOUNDARY_CRITERION, CUT_POINT_CONVENTION, ROLLING_HASH_MULTIPLIER, ContentChunker
from .crypto import DaeScheme, HmacSivScheme, MasterKey
from .exceptions import (
    AuthenticityException,
    ConfigurationException,
    MalformedChunkException,
    ManifestMismatchException,
    MissingChunkException,
    RefcountException,
    UnknownContentException,
)
from .kvs import KeyValueStore
from .models import ContentKey, NodeInfo, StorageReport, StoreConfig, StoreManifest, TreeStats

_LOGGER = logging.getLogger(__name__)


def tree_height(n: int, chunk_size: int, reference_size: int) -> int:
    """Smallest h with n <= S^(h+1) / R^h; 0 for contents of at most S bytes (and for n = 0)."""
    if chunk_size <= reference_size:
        raise ConfigurationException(
            f"Target chunk size {chunk_size} must exceed the reference size {reference_size}"
        )
    height = 0
    while n * reference_size ** height > chunk_size ** (height + 1):
        height += 1
    return height


@lru_cache(maxsize=None)
def level_target(height: int, chunk_size: int, reference_size: int) -> int:
    """Target chunk length S^h / R^(h-1), rounded, used to split a height-h node into children."""
    if height < 1:
        raise ConfigurationException("Leaves are not chunked; level targets start at height 1")
    return max(1, round(Fraction(chunk_size ** height, reference_size ** (height - 1))))


class SecureContentStore:
    """Deduplicating, encrypted and authenticated content store over an untrusted backend.

    Contents are split into chunk trees whose nodes are encrypted with a deterministic
    authenticated encryption scheme and stored under their MAC tags. Use as an async
    context manager, or call async_open before the first operation.
    """

    def __init__(
        self,
        backend: KeyValueStore,
        key: MasterKey,
        config: StoreConfig,
        cipher: Optional[DaeScheme] = None,
    ) -> None:
        """Create a store handle; nothing is touched in the backend until async_open."""
        self._backend = backend
        self._config = config
        self._cipher = cipher or HmacSivScheme(key)
        if self._cipher.tag_size != config.mac_size:
            raise ConfigurationException(
                f"Cipher produces {self._cipher.tag_size}-byte tags, configuration expects {config.mac_size}"
            )
        if config.refcounted and not backend.refcounted:
            raise ConfigurationException("Reference-counted configuration needs a reference-counting backend")
        self._refcounted = config.refcounted

    @property
    def config(self) -> StoreConfig:
        return self._config

    @property
    def backend(self) -> KeyValueStore:
        return self._backend

    @property
    def manifest(self) -> StoreManifest:
        return StoreManifest(
            config=self._config,
            rolling_hash_multiplier=ROLLING_HASH_MULTIPLIER,
            boundary_criterion=BOUNDARY_CRITERION,
            cut_point_convention=CUT_POINT_CONVENTION,
            cipher_suite=self._cipher.name,
        )

    @classmethod
    async def async_from_backend(cls, backend: KeyValueStore, key: MasterKey, cipher: Optional[DaeScheme] = None):
        """Open an initialized store using the configuration recorded in its manifest."""
        data = await backend.async_load_manifest()
        if data is None:
            _LOGGER.error("Backend holds no store manifest")
            raise ConfigurationException("Store is not initialized")
        store = cls(backend, key, StoreManifest.from_dict(data).config, cipher)
        await store.async_open()
        return store

    async def async_open(self) -> None:
        """Create the manifest of a fresh store, or verify the existing one."""
        expected = self.manifest
        data = await self._backend.async_load_manifest()
        if data is None:
            await self._backend.async_save_manifest(expected.to_dict())
            _LOGGER.debug("Initialized store with %s", self._config)
            return
        mismatches = expected.mismatches(StoreManifest.from_dict(data))
        if mismatches:
            _LOGGER.error("Store manifest mismatch in %s", ", ".join(mismatches))
            raise ManifestMismatchException(f"Store was created with different parameters: {', '.join(mismatches)}")

    async def __aenter__(self):
        await self.async_open()
        return self

    async def __aexit__(self, exc_type, exc_value, traceback):
        await self.async_close()

    async def async_close(self) -> None:
        await self._backend.async_close()

    def height_for(self, length: int) -> int:
        if self._config.height is not None:
            return self._config.height
        return tree_height(length, self._config.chunk_size, self._config.reference_size)

    def _level_target(self, height: int) -> int:
        return level_target(height, self._config.chunk_size, self._config.reference_size)

    async def async_put_content(self, content: bytes) -> ContentKey:
        """Insert a content and return its key; inserting it again stores nothing new."""
        content = bytes(content)
        height = self.height_for(len(content))
        chunker = ContentChunker(self._config.chunker_spec(), content)
        root = await self._async_put_chunk(chunker, 0, len(content), height)
        key = ContentKey(root, height)
        if self._refcounted:
            await self._backend.async_content_incr(key.to_bytes())
        await self._backend.async_flush()
        _LOGGER.debug("Inserted %s bytes as %s", len(content), key)
        return key

    async def _async_put_chunk(self, chunker: ContentChunker, start: int, end: int, height: int) -> bytes:
        if height == 0:
            ciphertext, ref = self._cipher.enc_auth(chunker.content[start:end])
            await self._backend.async_put(ref, ciphertext)
        else:
            children = [
                await self._async_put_chunk(chunker, child_start, child_end, height - 1)
                for child_start, child_end in chunker.chunk_ranges(start, end, self._level_target(height))
            ]
            ciphertext, ref = self._cipher.enc_auth(b"".join(children))
            # only insert new superchunks
            if await self._backend.async_get(ref) is None:
                await self._backend.async_put(ref, ciphertext)
        if self._refcounted:
            await self._backend.async_incr(ref)
        return ref

    async def _async_fetch(self, ref: bytes) -> bytes:
        """Retrieve and verify one node."""
        ciphertext = await self._backend.async_get(ref)
        if ciphertext is None:
            _LOGGER.error("Missing chunk %s", ref.hex())
            raise MissingChunkException(f"Chunk {ref.hex()} does not exist", ref=ref)
        try:
            return self._cipher.dec_vrfy(ciphertext, ref)
        except AuthenticityException:
            _LOGGER.error("Authenticity check failed for chunk %s", ref.hex())
            raise

    def _children(self, plaintext: bytes, ref: bytes) -> list[bytes]:
        size = self._config.reference_size
        if len(plaintext) % size:
            _LOGGER.error("Superchunk %s has %s bytes, not a multiple of %s", ref.hex(), len(plaintext), size)
            raise MalformedChunkException(f"Superchunk {ref.hex()} is not a list of references", ref=ref)
        return [plaintext[offset:offset + size] for offset in range(0, len(plaintext), size)]

    async def _async_collect(self, ref: bytes, height: int, parts: list[bytes]) -> None:
        plaintext = await self._async_fetch(ref)
        if height == 0:
            parts.append(plaintext)
            return
        for child in self._children(plaintext, ref):
            await self._async_collect(child, height - 1, parts)

    async def async_get_chunk(self, ref: bytes, height: int) -> bytes:
        """Content represented by any stored node, verifying every node on the way."""
        parts = []
        await self._async_collect(bytes(ref), height, parts)
        return b"".join(parts)

    async def async_get_content(self, key: ContentKey) -> bytes:
        """Exactly the content inserted under key, or a RetrievalException."""
        return await self.async_get_chunk(key.root, key.height)

    async def _async_describe(self, ref: bytes, height: int, offset: int, nodes: list[NodeInfo]) -> int:
        plaintext = await self._async_fetch(ref)
        if height == 0:
            length = len(plaintext)
        else:
            length = 0
            for child in self._children(plaintext, ref):
                length += await self._async_describe(child, height - 1, offset + length, nodes)
        nodes.append(NodeInfo(height=height, offset=offset, length=length, size=len(plaintext), ref=ref))
        return length

    async def async_describe_tree(self, key: ContentKey) -> TreeStats:
        """Per-level node counts and sizes of the stored tree of key."""
        nodes = []
        await self._async_describe(key.root, key.height, 0, nodes)
        return TreeStats(key.height, nodes, key_size=self._config.mac_size)

    async def _async_collect_refs(self, ref: bytes, height: int, refs: list[bytes]) -> None:
        if height > 0:
            for child in self._children(await self._async_fetch(ref), ref):
                await self._async_collect_refs(child, height - 1, refs)
        refs.append(ref)

    async def async_delete_content(self, key: ContentKey) -> None:
        """Drop one insertion of key; chunks no longer referenced by any content are removed.

        Raises UnknownContentException once key has been deleted as often as it was inserted.
        """
        if not self._refcounted:
            _LOGGER.error("Deletion attempted on a store without reference counters")
            raise RefcountException("Deletion requires a reference-counted store")
        if await self._backend.async_content_count(key.to_bytes()) < 1:
            _LOGGER.error("Cannot delete unknown content %s", key)
            raise UnknownContentException(f"Content {key} is not stored")

        refs = []
        await self._async_collect_refs(key.root, key.height, refs)
        for ref, needed in Counter(refs).items():
            if await self._backend.async_count(ref) < needed:
                _LOGGER.error("Reference counter underflow for %s while deleting %s", ref.hex(), key)
                raise RefcountException(f"Reference counters of {key} are inconsistent")
        await self._backend.async_content_decr(key.to_bytes())
        for ref in refs:
            await self._backend.async_decr(ref)
        await self._backend.async_flush()
        _LOGGER.debug("Deleted %s (%s node occurrences)", key, len(refs))

    async def async_report(self) -> StorageReport:
        return await self._backend.async_report()
