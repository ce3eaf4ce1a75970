from typing import Optional

EXPERIMENT_FIELD = "experiment"
SCHEME_FIELD = "scheme"
HEIGHT_POLICY_FIELD = "height_policy"
CHUNK_SIZE_FIELD = "S"
CONTENT_SIZE_FIELD = "n"
DELTA_FIELD = "delta"
TRIAL_FIELD = "trial"
BYTES_BEFORE_FIELD = "bytes_before"
BYTES_AFTER_FIELD = "bytes_after"
DELTA_BYTES_FIELD = "delta_bytes"
MODEL_BOUND_FIELD = "model_bound"
VERSION_FIELD = "version"
OFFSET_FIELD = "offset"

CSV_COLUMNS = [
    EXPERIMENT_FIELD,
    SCHEME_FIELD,
    HEIGHT_POLICY_FIELD,
    CHUNK_SIZE_FIELD,
    CONTENT_SIZE_FIELD,
    DELTA_FIELD,
    TRIAL_FIELD,
    BYTES_BEFORE_FIELD,
    BYTES_AFTER_FIELD,
    DELTA_BYTES_FIELD,
    MODEL_BOUND_FIELD,
    VERSION_FIELD,
    OFFSET_FIELD,
]


class MeasurementRecord:
    """One CSV row of an experiment."""

    def __init__(
        self,
        experiment: str,
        scheme: str,
        height_policy: str,
        chunk_size: int,
        content_size: int,
        trial: int,
        bytes_before: int,
        bytes_after: int,
        delta: Optional[int] = None,
        model_bound: Optional[float] = None,
        version: Optional[int] = None,
        offset: Optional[int] = None,
    ) -> None:
        """Create a Measurement Record object."""
        self.experiment = experiment
        self.scheme = scheme
        self.height_policy = height_policy
        self.chunk_size = chunk_size
        self.content_size = content_size
        self.delta = delta
        self.trial = trial
        self.bytes_before = bytes_before
        self.bytes_after = bytes_after
        self.model_bound = model_bound
        self.version = version
        self.offset = offset

    @property
    def delta_bytes(self) -> int:
        return self.bytes_after - self.bytes_before

    def to_row(self) -> dict:
        """CSV row; absent optional values become empty cells and bounds get two decimals."""
        return {
            EXPERIMENT_FIELD: self.experiment,
            SCHEME_FIELD: self.scheme,
            HEIGHT_POLICY_FIELD: self.height_policy,
            CHUNK_SIZE_FIELD: self.chunk_size,
            CONTENT_SIZE_FIELD: self.content_size,
            DELTA_FIELD: "" if self.delta is None else self.delta,
            TRIAL_FIELD: self.trial,
            BYTES_BEFORE_FIELD: self.bytes_before,
            BYTES_AFTER_FIELD: self.bytes_after,
            DELTA_BYTES_FIELD: self.delta_bytes,
            MODEL_BOUND_FIELD: "" if self.model_bound is None else f"{self.model_bound:.2f}",
            VERSION_FIELD: "" if self.version is None else self.version,
            OFFSET_FIELD: "" if self.offset is None else self.offset,
        }

    @classmethod
    def from_dict(cls, data: dict):
        """Create a Measurement Record object from a CSV row."""

        def optional_int(name):
            value = data.get(name)
            return None if value in (None, "") else int(value)

        bound = data.get(MODEL_BOUND_FIELD)
        return cls(
            experiment=data.get(EXPERIMENT_FIELD),
            scheme=data.get(SCHEME_FIELD),
            height_policy=data.get(HEIGHT_POLICY_FIELD),
            chunk_size=int(data.get(CHUNK_SIZE_FIELD)),
            content_size=int(data.get(CONTENT_SIZE_FIELD)),
            trial=int(data.get(TRIAL_FIELD)),
            bytes_before=int(data.get(BYTES_BEFORE_FIELD)),
            bytes_after=int(data.get(BYTES_AFTER_FIELD)),
            delta=optional_int(DELTA_FIELD),
            model_bound=None if bound in (None, "") else float(bound),
            version=optional_int(VERSION_FIELD),
            offset=optional_int(OFFSET_FIELD),
        )
