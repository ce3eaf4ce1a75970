from .chunker_spec import ChunkerSpec
from .store_config import StoreConfig
from .store_manifest import StoreManifest
from .content_key import ContentKey
from .storage_report import StorageReport
from .tree_stats import NodeInfo, LevelStats, TreeStats
from .experiment_config import ExperimentConfig
from .measurement_record import MeasurementRecord
