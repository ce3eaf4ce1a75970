from typing import Optional

from ..exceptions import ConfigurationException
from .chunker_spec import ChunkerSpec, DEFAULT_WINDOW, SCHEME_CDC, SCHEME_SC
from .content_key import MAX_HEIGHT

CHUNK_SIZE_FIELD = "chunkSize"
SCHEME_FIELD = "scheme"
HEIGHT_POLICY_FIELD = "heightPolicy"
WINDOW_FIELD = "window"
MIN_CHUNK_FIELD = "minChunk"
MAX_CHUNK_FIELD = "maxChunk"
REFERENCE_SIZE_FIELD = "referenceSize"
MAC_SIZE_FIELD = "macSize"
REFCOUNTED_FIELD = "refcounted"

REFERENCE_SIZE = 32
MAC_SIZE = 32

HEIGHT_AUTO = "auto"

# name -> (scheme, fixed height or None for Auto)
SCHEME_VARIANTS = {
    "wfc": (SCHEME_SC, 0),
    "sc": (SCHEME_SC, 1),
    "cdc": (SCHEME_CDC, 1),
    "ml-sc": (SCHEME_SC, None),
    "ml-cdc": (SCHEME_CDC, None),
}


def parse_height_policy(text: str) -> Optional[int]:
    """Parse 'auto' or a non-negative integer height."""
    if text == HEIGHT_AUTO:
        return None
    try:
        height = int(text)
    except (TypeError, ValueError):
        raise ConfigurationException(f"Invalid height policy: {text}")
    if not 0 <= height <= MAX_HEIGHT:
        raise ConfigurationException(f"Fixed height must be within 0..{MAX_HEIGHT}, got {height}")
    return height


def format_height_policy(height: Optional[int]) -> str:
    return HEIGHT_AUTO if height is None else str(height)


class StoreConfig:
    """Parameters fixed at store initialization."""

    def __init__(
        self,
        chunk_size: int,
        scheme: str = SCHEME_CDC,
        height: Optional[int] = None,
        window: int = DEFAULT_WINDOW,
        min_chunk: Optional[int] = None,
        max_chunk: Optional[int] = None,
        reference_size: int = REFERENCE_SIZE,
        mac_size: int = MAC_SIZE,
        refcounted: bool = False,
    ) -> None:
        """Create a store configuration; S must be at least 2R and R must equal D."""
        if reference_size != mac_size:
            raise ConfigurationException(
                f"Chunk references are MAC tags: reference size {reference_size} != MAC size {mac_size}"
            )
        if chunk_size < 2 * reference_size:
            raise ConfigurationException(
                f"Target chunk size {chunk_size} must be at least twice the reference size {reference_size}"
            )
        if height is not None and not 0 <= height <= MAX_HEIGHT:
            raise ConfigurationException(f"Fixed height must be within 0..{MAX_HEIGHT}, got {height}")

        self.chunk_size = chunk_size
        self.scheme = scheme
        self.height = height
        self.window = window
        self.min_chunk = min_chunk
        self.max_chunk = max_chunk
        self.reference_size = reference_size
        self.mac_size = mac_size
        self.refcounted = refcounted
        # validates scheme, window and min/max
        self.chunker_spec()

    @classmethod
    def for_variant(cls, variant: str, chunk_size: int, **kwargs):
        """Create a configuration for one of the named scheme variants (wfc, sc, cdc, ml-sc, ml-cdc)."""
        if variant not in SCHEME_VARIANTS:
            raise ConfigurationException(f"Unknown scheme variant: {variant}")
        scheme, height = SCHEME_VARIANTS[variant]
        return cls(chunk_size=chunk_size, scheme=scheme, height=height, **kwargs)

    @property
    def height_policy(self) -> str:
        return format_height_policy(self.height)

    def chunker_spec(self, target_length: Optional[int] = None) -> ChunkerSpec:
        """Single-level chunker parameters; the target defaults to S."""
        return ChunkerSpec(
            scheme=self.scheme,
            target_length=self.chunk_size if target_length is None else target_length,
            window=self.window,
            min_length=self.min_chunk,
            max_length=self.max_chunk,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, StoreConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return (
            f"StoreConfig(S={self.chunk_size}, scheme={self.scheme!r}, height={self.height_policy}, "
            f"W={self.window}, refcounted={self.refcounted})"
        )

    def to_dict(self) -> dict:
        return {
            CHUNK_SIZE_FIELD: self.chunk_size,
            SCHEME_FIELD: self.scheme,
            HEIGHT_POLICY_FIELD: self.height_policy,
            WINDOW_FIELD: self.window,
            MIN_CHUNK_FIELD: self.min_chunk,
            MAX_CHUNK_FIELD: self.max_chunk,
            REFERENCE_SIZE_FIELD: self.reference_size,
            MAC_SIZE_FIELD: self.mac_size,
            REFCOUNTED_FIELD: self.refcounted,
        }

    @classmethod
    def from_dict(cls, data: dict):
        """Create a StoreConfig object from a dictionary."""
        return cls(
            chunk_size=data.get(CHUNK_SIZE_FIELD),
            scheme=data.get(SCHEME_FIELD, SCHEME_CDC),
            height=parse_height_policy(data.get(HEIGHT_POLICY_FIELD, HEIGHT_AUTO)),
            window=data.get(WINDOW_FIELD, DEFAULT_WINDOW),
            min_chunk=data.get(MIN_CHUNK_FIELD),
            max_chunk=data.get(MAX_CHUNK_FIELD),
            reference_size=data.get(REFERENCE_SIZE_FIELD, REFERENCE_SIZE),
            mac_size=data.get(MAC_SIZE_FIELD, MAC_SIZE),
            refcounted=data.get(REFCOUNTED_FIELD, False),
        )
