ELEMENT_COUNT_FIELD = "elementCount"
TOTAL_BYTES_FIELD = "totalBytes"


class StorageReport:
    """Represents the backend accounting: element count and the sum of |k|+|v|."""

    def __init__(self, element_count: int = 0, total_bytes: int = 0) -> None:
        """Create a Storage Report object."""
        self.element_count = element_count
        self.total_bytes = total_bytes

    def delta(self, before: "StorageReport") -> "StorageReport":
        """Difference between this snapshot and an earlier one (may be negative after deletes)."""
        return StorageReport(
            element_count=self.element_count - before.element_count,
            total_bytes=self.total_bytes - before.total_bytes,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, StorageReport):
            return NotImplemented
        return self.element_count == other.element_count and self.total_bytes == other.total_bytes

    def __repr__(self) -> str:
        return f"StorageReport(element_count={self.element_count}, total_bytes={self.total_bytes})"

    def to_dict(self) -> dict:
        return {ELEMENT_COUNT_FIELD: self.element_count, TOTAL_BYTES_FIELD: self.total_bytes}

    @classmethod
    def from_dict(cls, data: dict):
        """Create a Storage Report object from a dictionary."""
        return cls(
            element_count=data.get(ELEMENT_COUNT_FIELD, 0),
            total_bytes=data.get(TOTAL_BYTES_FIELD, 0),
        )
