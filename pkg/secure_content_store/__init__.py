from .content_store import SecureContentStore, level_target, tree_height
from .crypto import HmacSivScheme, MasterKey
from .exceptions import (
    AuthenticityException,
    ConfigurationException,
    CryptoException,
    KvsException,
    MalformedChunkException,
    ManifestMismatchException,
    MissingChunkException,
    RefcountException,
    RetrievalException,
    SecureContentStoreException,
    UnknownContentException,
)
from .kvs import (
    DirectoryKeyValueStore,
    KeyValueStore,
    MemoryKeyValueStore,
    RefCountingKeyValueStore,
    TamperingKeyValueStore,
    open_backend,
)
from .models import ContentKey, StorageReport, StoreConfig
