from ..exceptions import ConfigurationException

ROOT_FIELD = "root"
HEIGHT_FIELD = "height"

ROOT_SIZE = 32
MAX_HEIGHT = 255


class ContentKey:
    """Handle of a stored content: the root chunk reference plus the chunk tree height.

    Binary form is the 32-byte root reference followed by one height byte; the text form
    is 64 hex characters, a colon and the decimal height.
    """

    def __init__(self, root: bytes, height: int) -> None:
        """Create a Content Key object."""
        if len(root) != ROOT_SIZE:
            raise ConfigurationException(f"Root reference must be {ROOT_SIZE} bytes, got {len(root)}")
        if not 0 <= height <= MAX_HEIGHT:
            raise ConfigurationException(f"Tree height must be within 0..{MAX_HEIGHT}, got {height}")
        self.root = bytes(root)
        self.height = height

    def to_bytes(self) -> bytes:
        return self.root + bytes([self.height])

    @classmethod
    def from_bytes(cls, data: bytes):
        if len(data) != ROOT_SIZE + 1:
            raise ConfigurationException(f"Content key must be {ROOT_SIZE + 1} bytes, got {len(data)}")
        return cls(root=data[:ROOT_SIZE], height=data[ROOT_SIZE])

    @classmethod
    def parse(cls, text: str):
        """Parse the '<hex root>:<height>' text form."""
        root_hex, separator, height_text = text.strip().partition(":")
        if not separator:
            raise ConfigurationException(f"Content key text lacks a height: {text}")
        try:
            root = bytes.fromhex(root_hex)
            height = int(height_text)
        except ValueError:
            raise ConfigurationException(f"Malformed content key: {text}")
        return cls(root=root, height=height)

    def __str__(self) -> str:
        return f"{self.root.hex()}:{self.height}"

    def __repr__(self) -> str:
        return f"ContentKey({self})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, ContentKey):
            return NotImplemented
        return self.root == other.root and self.height == other.height

    def __hash__(self) -> int:
        return hash((self.root, self.height))

    def to_dict(self) -> dict:
        return {ROOT_FIELD: self.root.hex(), HEIGHT_FIELD: self.height}

    @classmethod
    def from_dict(cls, data: dict):
        """Create a Content Key object from a dictionary."""
        return cls(root=bytes.fromhex(data.get(ROOT_FIELD, "")), height=data.get(HEIGHT_FIELD, 0))
