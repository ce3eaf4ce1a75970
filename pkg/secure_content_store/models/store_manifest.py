from .store_config import StoreConfig

FORMAT_VERSION_FIELD = "formatVersion"
CONFIG_FIELD = "config"
ROLLING_HASH_MULTIPLIER_FIELD = "rollingHashMultiplier"
BOUNDARY_CRITERION_FIELD = "boundaryCriterion"
CUT_POINT_CONVENTION_FIELD = "cutPointConvention"
CIPHER_SUITE_FIELD = "cipherSuite"

FORMAT_VERSION = 1


class StoreManifest:
    """Everything that must match for two processes to agree on chunk references."""

    def __init__(
        self,
        config: StoreConfig,
        rolling_hash_multiplier: int,
        boundary_criterion: str,
        cut_point_convention: str,
        cipher_suite: str,
        format_version: int = FORMAT_VERSION,
    ) -> None:
        """Create a Store Manifest object."""
        self.config = config
        self.rolling_hash_multiplier = rolling_hash_multiplier
        self.boundary_criterion = boundary_criterion
        self.cut_point_convention = cut_point_convention
        self.cipher_suite = cipher_suite
        self.format_version = format_version

    def mismatches(self, other: "StoreManifest") -> list[str]:
        """Names of the fields that differ between two manifests."""
        ours, theirs = self.to_dict(), other.to_dict()
        differing = [name for name in ours if name != CONFIG_FIELD and ours[name] != theirs.get(name)]
        config_ours, config_theirs = ours[CONFIG_FIELD], theirs.get(CONFIG_FIELD, {})
        differing.extend(
            f"{CONFIG_FIELD}.{name}" for name in config_ours if config_ours[name] != config_theirs.get(name)
        )
        return differing

    def to_dict(self) -> dict:
        return {
            FORMAT_VERSION_FIELD: self.format_version,
            CONFIG_FIELD: self.config.to_dict(),
            ROLLING_HASH_MULTIPLIER_FIELD: f"0x{self.rolling_hash_multiplier:016x}",
            BOUNDARY_CRITERION_FIELD: self.boundary_criterion,
            CUT_POINT_CONVENTION_FIELD: self.cut_point_convention,
            CIPHER_SUITE_FIELD: self.cipher_suite,
        }

    @classmethod
    def from_dict(cls, data: dict):
        """Create a Store Manifest object from a dictionary."""
        return cls(
            config=StoreConfig.from_dict(data.get(CONFIG_FIELD, {})),
            rolling_hash_multiplier=int(data.get(ROLLING_HASH_MULTIPLIER_FIELD, "0"), 16),
            boundary_criterion=data.get(BOUNDARY_CRITERION_FIELD),
            cut_point_convention=data.get(CUT_POINT_CONVENTION_FIELD),
            cipher_suite=data.get(CIPHER_SUITE_FIELD),
            format_version=data.get(FORMAT_VERSION_FIELD, FORMAT_VERSION),
        )
