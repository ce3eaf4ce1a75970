"""Deterministic authenticated encryption whose tags double as chunk references.

SIV composition: the tag is HMAC-SHA-256 of the plaintext under the MAC subkey, and the
ciphertext is the plaintext XORed with the AES-256-CTR keystream under the encryption
subkey, using the first 16 tag bytes as initial counter block. Ciphertexts are exactly as
long as their plaintexts; no nonce is stored.
"""

import logging
import os
from abc import ABC, abstractmethod
from pathlib import Path
from typing import NewType

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, hmac
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .exceptions import AuthenticityException, CryptoException

_LOGGER = logging.getLogger(__name__)

TAG_SIZE = 32
SUBKEY_SIZE = 32
KEY_FILE_SIZE = 2 * SUBKEY_SIZE
COUNTER_BLOCK_SIZE = 16
KEY_FILE_MODE = 0o600

ChunkRef = NewType("ChunkRef", bytes)


class MasterKey:
    """Secret key material: a MAC subkey and an encryption subkey, never used in each other's role."""

    def __init__(self, mac_subkey: bytes, enc_subkey: bytes) -> None:
        """Create a Master Key object."""
        if len(mac_subkey) != SUBKEY_SIZE or len(enc_subkey) != SUBKEY_SIZE:
            raise CryptoException(f"Subkeys must be {SUBKEY_SIZE} bytes each")
        self.mac_subkey = bytes(mac_subkey)
        self.enc_subkey = bytes(enc_subkey)

    @classmethod
    def generate(cls):
        """Draw fresh, independent subkeys from the operating system's CSPRNG."""
        try:
            material = os.urandom(KEY_FILE_SIZE)
        except (NotImplementedError, OSError) as e:
            _LOGGER.error("Randomness source unavailable: %s", e)
            raise CryptoException("Failed to generate key material") from e
        return cls.from_bytes(material)

    def to_bytes(self) -> bytes:
        return self.mac_subkey + self.enc_subkey

    @classmethod
    def from_bytes(cls, data: bytes):
        if len(data) != KEY_FILE_SIZE:
            raise CryptoException(f"Key material must be exactly {KEY_FILE_SIZE} bytes, got {len(data)}")
        return cls(mac_subkey=data[:SUBKEY_SIZE], enc_subkey=data[SUBKEY_SIZE:])

    def save(self, path) -> None:
        """Write the 64 raw key bytes to a new file readable by the owner only."""
        path = Path(path)
        fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_EXCL, KEY_FILE_MODE)
        with os.fdopen(fd, "wb") as key_file:
            key_file.write(self.to_bytes())
        _LOGGER.debug("Wrote key file %s", path)

    @classmethod
    def load(cls, path):
        try:
            data = Path(path).read_bytes()
        except OSError as e:
            _LOGGER.error("Cannot read key file %s: %s", path, e)
            raise CryptoException(f"Cannot read key file {path}") from e
        return cls.from_bytes(data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MasterKey):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()

    def __repr__(self) -> str:
        return "MasterKey(<secret>)"


class DaeScheme(ABC):
    """Deterministic authenticated encryption producing length-preserving ciphertexts."""

    name = "abstract"
    tag_size = TAG_SIZE

    @abstractmethod
    def enc_auth(self, plaintext: bytes) -> tuple[bytes, ChunkRef]:
        """Return (ciphertext, tag); equal plaintexts give equal outputs."""

    @abstractmethod
    def dec_vrfy(self, ciphertext: bytes, ref: bytes) -> bytes:
        """Return the plaintext, or raise AuthenticityException."""


class HmacSivScheme(DaeScheme):
    """HMAC-SHA-256 tags as synthetic IVs for AES-256-CTR."""

    name = "HMAC-SHA256-SIV/AES-256-CTR"

    def __init__(self, key: MasterKey) -> None:
        self._key = key
        self._aes = algorithms.AES(key.enc_subkey)

    def _tag(self, plaintext: bytes) -> hmac.HMAC:
        mac = hmac.HMAC(self._key.mac_subkey, hashes.SHA256())
        mac.update(plaintext)
        return mac

    def _apply_keystream(self, data: bytes, ref: bytes) -> bytes:
        if not data:
            return b""
        encryptor = Cipher(self._aes, modes.CTR(ref[:COUNTER_BLOCK_SIZE])).encryptor()
        return encryptor.update(data) + encryptor.finalize()

    def enc_auth(self, plaintext: bytes) -> tuple[bytes, ChunkRef]:
        ref = ChunkRef(self._tag(plaintext).finalize())
        return self._apply_keystream(plaintext, ref), ref

    def dec_vrfy(self, ciphertext: bytes, ref: bytes) -> bytes:
        if len(ref) != TAG_SIZE:
            raise AuthenticityException(f"Chunk reference must be {TAG_SIZE} bytes", ref=bytes(ref))
        plaintext = self._apply_keystream(ciphertext, ref)
        try:
            # constant-time comparison
            self._tag(plaintext).verify(ref)
        except InvalidSignature:
            raise AuthenticityException(f"MAC verification failed for chunk {bytes(ref).hex()}", ref=bytes(ref))
        return plaintext


def gen() -> MasterKey:
    return MasterKey.generate()


def enc_auth(key: MasterKey, plaintext: bytes) -> tuple[bytes, ChunkRef]:
    return HmacSivScheme(key).enc_auth(plaintext)


def dec_vrfy(key: MasterKey, ciphertext: bytes, ref: bytes) -> bytes:
    return HmacSivScheme(key).dec_vrfy(ciphertext, ref)
