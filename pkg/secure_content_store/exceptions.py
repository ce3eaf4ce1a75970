class SecureContentStoreException(Exception):
    """Base exception for every error raised by the secure content store."""
    pass


class ConfigurationException(SecureContentStoreException):
    """Invalid store, chunker or experiment parameters."""
    pass


class ManifestMismatchException(ConfigurationException):
    """The store on disk was created with different parameters."""
    pass


class KvsException(SecureContentStoreException):
    """Backend I/O failure that persisted after retrying."""
    pass


class RefcountException(SecureContentStoreException):
    """Invalid reference counter operation."""
    pass


class CryptoException(SecureContentStoreException):
    """Key material or randomness problem."""
    pass


class UnknownContentException(SecureContentStoreException):
    """Deletion of a content that is not (or no longer) stored."""
    pass


class RetrievalException(SecureContentStoreException):
    """A chunk tree could not be retrieved."""

    def __init__(self, message: str, ref: bytes | None = None) -> None:
        super().__init__(message)
        self.ref = ref


class MissingChunkException(RetrievalException):
    """A referenced chunk does not exist in the backend."""
    pass


class AuthenticityException(RetrievalException):
    """A chunk failed MAC verification."""
    pass


class MalformedChunkException(RetrievalException):
    """A superchunk plaintext is not a list of chunk references."""
    pass
