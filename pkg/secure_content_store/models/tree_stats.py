from bisect import bisect_right


class NodeInfo:
    """One occurrence of a node in a chunk tree."""

    def __init__(self, height: int, offset: int, length: int, size: int, ref: bytes) -> None:
        """
        Create a NodeInfo object.

        :param height: Height of the node (0 for leaves).
        :param offset: Offset of the represented content within the root content.
        :param length: Length of the represented content.
        :param size: Size of the persisted plaintext (length for leaves, children * R otherwise).
        :param ref: Chunk reference of the node.
        """
        self.height = height
        self.offset = offset
        self.length = length
        self.size = size
        self.ref = ref

    def __repr__(self) -> str:
        return f"NodeInfo(h={self.height}, offset={self.offset}, length={self.length}, size={self.size})"


class LevelStats:
    """Aggregated node statistics for one tree height."""

    def __init__(self, height: int, node_count: int = 0, size_bytes: int = 0, stored_bytes: int = 0) -> None:
        """Create a Level Stats object; stored_bytes includes the key of every node."""
        self.height = height
        self.node_count = node_count
        self.size_bytes = size_bytes
        self.stored_bytes = stored_bytes

    def to_dict(self) -> dict:
        return {
            "height": self.height,
            "nodeCount": self.node_count,
            "sizeBytes": self.size_bytes,
            "storedBytes": self.stored_bytes,
        }

    def __repr__(self) -> str:
        return f"LevelStats(h={self.height}, nodes={self.node_count}, stored_bytes={self.stored_bytes})"


class TreeStats:
    """Per-level description of a stored chunk tree, in left-to-right node order."""

    def __init__(self, height: int, nodes: list[NodeInfo], key_size: int) -> None:
        """Create a Tree Stats object."""
        self.height = height
        self.nodes = nodes
        self.levels = {h: LevelStats(h) for h in range(height + 1)}
        self._by_level: dict[int, list[NodeInfo]] = {h: [] for h in range(height + 1)}
        for node in nodes:
            level = self.levels[node.height]
            level.node_count += 1
            level.size_bytes += node.size
            level.stored_bytes += key_size + node.size
            self._by_level[node.height].append(node)
        for level_nodes in self._by_level.values():
            level_nodes.sort(key=lambda node: node.offset)
        self._offsets = {h: [node.offset for node in level_nodes] for h, level_nodes in self._by_level.items()}

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def stored_bytes(self) -> int:
        """Storage the tree would occupy without any deduplication."""
        return sum(level.stored_bytes for level in self.levels.values())

    def level_nodes(self, height: int) -> list[NodeInfo]:
        return list(self._by_level[height])

    def covering(self, offset: int, height: int) -> NodeInfo:
        """The node at the given height whose represented content contains offset."""
        index = bisect_right(self._offsets[height], offset) - 1
        return self._by_level[height][max(index, 0)]
