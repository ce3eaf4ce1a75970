from typing import Optional

from ..exceptions import ConfigurationException
from .chunker_spec import DEFAULT_WINDOW
from .store_config import REFERENCE_SIZE, SCHEME_VARIANTS

EXPERIMENT_FIELD = "experiment"
CONTENT_SIZE_FIELD = "contentSize"
CHUNK_SIZES_FIELD = "chunkSizes"
VARIANTS_FIELD = "variants"
DELTAS_FIELD = "deltas"
VERSION_COUNT_FIELD = "versionCount"
TRIALS_FIELD = "trials"
SEED_FIELD = "seed"
WINDOW_FIELD = "window"
MIN_CHUNK_FIELD = "minChunk"
MAX_CHUNK_FIELD = "maxChunk"
OUTPUT_FIELD = "output"
CORPUS_PATH_FIELD = "corpusPath"

EXPERIMENTS = ("delta", "expansion", "overwrite", "insert", "versions", "corpus")
DEFAULT_TRIALS = 20


class ExperimentConfig:
    """Parameters of one harness experiment run."""

    def __init__(
        self,
        experiment: str,
        content_size: int = 1 << 20,
        chunk_sizes: Optional[list[int]] = None,
        variants: Optional[list[str]] = None,
        deltas: Optional[list[int]] = None,
        version_count: int = 125,
        trials: int = DEFAULT_TRIALS,
        seed: int = 0,
        window: int = DEFAULT_WINDOW,
        min_chunk: Optional[int] = None,
        max_chunk: Optional[int] = None,
        output: Optional[str] = None,
        corpus_path: Optional[str] = None,
    ) -> None:
        """Create an Experiment Config object, rejecting invalid combinations."""
        chunk_sizes = chunk_sizes or [128]
        variants = variants or ["ml-cdc"]
        deltas = deltas or [1]

        if experiment not in EXPERIMENTS:
            raise ConfigurationException(f"Unknown experiment: {experiment}")
        if trials < 1:
            raise ConfigurationException(f"At least one trial is required, got {trials}")
        if content_size < 0:
            raise ConfigurationException(f"Content size must not be negative, got {content_size}")
        for chunk_size in chunk_sizes:
            if chunk_size < 2 * REFERENCE_SIZE:
                raise ConfigurationException(
                    f"Chunk size {chunk_size} is below twice the reference size {REFERENCE_SIZE}"
                )
        for variant in variants:
            if variant not in SCHEME_VARIANTS:
                raise ConfigurationException(f"Unknown scheme variant: {variant}")
        if experiment == "delta":
            for delta in deltas:
                if not 0 < delta <= content_size:
                    raise ConfigurationException(f"Delta must be within 1..{content_size}, got {delta}")
        if experiment in ("overwrite", "insert", "versions") and content_size < 1:
            raise ConfigurationException("Modification experiments need a non-empty content")
        if experiment == "versions" and version_count < 1:
            raise ConfigurationException(f"At least one version is required, got {version_count}")
        if experiment == "corpus" and not corpus_path:
            raise ConfigurationException("The corpus experiment needs a corpus path")

        self.experiment = experiment
        self.content_size = content_size
        self.chunk_sizes = list(chunk_sizes)
        self.variants = list(variants)
        self.deltas = list(deltas)
        self.version_count = version_count
        self.trials = trials
        self.seed = seed
        self.window = window
        self.min_chunk = min_chunk
        self.max_chunk = max_chunk
        self.output = output
        self.corpus_path = corpus_path

    def to_dict(self) -> dict:
        return {
            EXPERIMENT_FIELD: self.experiment,
            CONTENT_SIZE_FIELD: self.content_size,
            CHUNK_SIZES_FIELD: self.chunk_sizes,
            VARIANTS_FIELD: self.variants,
            DELTAS_FIELD: self.deltas,
            VERSION_COUNT_FIELD: self.version_count,
            TRIALS_FIELD: self.trials,
            SEED_FIELD: self.seed,
            WINDOW_FIELD: self.window,
            MIN_CHUNK_FIELD: self.min_chunk,
            MAX_CHUNK_FIELD: self.max_chunk,
            OUTPUT_FIELD: self.output,
            CORPUS_PATH_FIELD: self.corpus_path,
        }

    @classmethod
    def from_dict(cls, data: dict):
        """Create an Experiment Config object from a dictionary."""
        return cls(
            experiment=data.get(EXPERIMENT_FIELD),
            content_size=data.get(CONTENT_SIZE_FIELD, 1 << 20),
            chunk_sizes=data.get(CHUNK_SIZES_FIELD),
            variants=data.get(VARIANTS_FIELD),
            deltas=data.get(DELTAS_FIELD),
            version_count=data.get(VERSION_COUNT_FIELD, 125),
            trials=data.get(TRIALS_FIELD, DEFAULT_TRIALS),
            seed=data.get(SEED_FIELD, 0),
            window=data.get(WINDOW_FIELD, DEFAULT_WINDOW),
            min_chunk=data.get(MIN_CHUNK_FIELD),
            max_chunk=data.get(MAX_CHUNK_FIELD),
            output=data.get(OUTPUT_FIELD),
            corpus_path=data.get(CORPUS_PATH_FIELD),
        )
