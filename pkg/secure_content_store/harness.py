"""Storage-efficiency experiments over fresh in-memory stores, emitting one record per measurement.

Every trial draws its randomness from numpy.random.default_rng([seed, trial]); the same
trial data is replayed for every (chunk size, scheme variant) combination, each in its
own store.
"""

import csv
import logging
import sys
from pathlib import Path
from statistics import fmean
from typing import Iterable, Iterator, Optional, TextIO

import numpy as np

from .content_store import SecureContentStore
from .cost_model import add_strg, modification_bound, storage_full
from .crypto import KEY_FILE_SIZE, MasterKey
from .exceptions import ConfigurationException
from .kvs import MemoryKeyValueStore
from .models import ContentKey, ExperimentConfig, MeasurementRecord, StoreConfig
from .models.chunker_spec import SCHEME_CDC
from .models.measurement_record import CSV_COLUMNS

_LOGGER = logging.getLogger(__name__)

KEY_STREAM = 1


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def experiment_key(seed: int, trial: int) -> MasterKey:
    """Reproducible (and therefore not secret) key for an experiment store."""
    return MasterKey.from_bytes(np.random.default_rng([seed, trial, KEY_STREAM]).bytes(KEY_FILE_SIZE))


def random_replacement(rng: np.random.Generator, original: bytes) -> bytes:
    """Uniformly random bytes of the same length that differ from original."""
    while True:
        replacement = rng.bytes(len(original))
        if replacement != original:
            return replacement


def insert_byte(content: bytes, offset: int, value: int) -> bytes:
    return content[:offset] + bytes([value]) + content[offset:]


def overwrite(content: bytes, offset: int, replacement: bytes) -> bytes:
    return content[:offset] + replacement + content[offset + len(replacement):]


def _store_config(cfg: ExperimentConfig, variant: str, chunk_size: int) -> StoreConfig:
    return StoreConfig.for_variant(
        variant,
        chunk_size,
        window=cfg.window,
        min_chunk=cfg.min_chunk,
        max_chunk=cfg.max_chunk,
    )


async def _fresh_store(cfg: ExperimentConfig, variant: str, chunk_size: int, trial: int) -> SecureContentStore:
    store = SecureContentStore(MemoryKeyValueStore(), experiment_key(cfg.seed, trial), _store_config(cfg, variant, chunk_size))
    await store.async_open()
    return store


def _record(cfg: ExperimentConfig, store: SecureContentStore, **kwargs) -> MeasurementRecord:
    return MeasurementRecord(
        experiment=cfg.experiment,
        scheme=store.config.scheme,
        height_policy=store.config.height_policy,
        chunk_size=store.config.chunk_size,
        **kwargs,
    )


def _combinations(cfg: ExperimentConfig) -> Iterator[tuple[int, str]]:
    for chunk_size in cfg.chunk_sizes:
        for variant in cfg.variants:
            yield chunk_size, variant


def _bound(store: SecureContentStore, n: int, delta: int, cfg: ExperimentConfig) -> Optional[float]:
    """Analytical bound for ML-* trees; single-level and whole-file schemes have none."""
    config = store.config
    if config.height is not None:
        return None
    return modification_bound(config.scheme, n, delta, config.chunk_size, config.mac_size, cfg.window, config.reference_size)


async def _measure_pair(store: SecureContentStore, first: bytes, second: bytes) -> tuple[int, int]:
    await store.async_put_content(first)
    before = (await store.async_report()).total_bytes
    await store.async_put_content(second)
    after = (await store.async_report()).total_bytes
    return before, after


async def exp_delta(cfg: ExperimentConfig) -> list[MeasurementRecord]:
    """Replace a random delta-byte substring and measure the cost of the modified content."""
    records = []
    n = cfg.content_size
    for trial in range(cfg.trials):
        rng = trial_rng(cfg.seed, trial)
        content = rng.bytes(n)
        # one relative position per trial, so different deltas modify nested regions
        position = rng.random()
        for delta in cfg.deltas:
            offset = int(position * (n - delta + 1))
            modified = overwrite(content, offset, random_replacement(rng, content[offset:offset + delta]))
            for chunk_size, variant in _combinations(cfg):
                store = await _fresh_store(cfg, variant, chunk_size, trial)
                before, after = await _measure_pair(store, content, modified)
                records.append(_record(
                    cfg, store, content_size=n, delta=delta, trial=trial, bytes_before=before,
                    bytes_after=after, model_bound=_bound(store, n, delta, cfg), offset=offset,
                ))
        _LOGGER.debug("delta experiment: finished trial %s", trial)
    return records


async def exp_expansion(cfg: ExperimentConfig) -> list[MeasurementRecord]:
    """Total storage of one random content in a fresh store; expansion = delta_bytes / n."""
    records = []
    n = cfg.content_size
    for trial in range(cfg.trials):
        content = trial_rng(cfg.seed, trial).bytes(n)
        for chunk_size, variant in _combinations(cfg):
            store = await _fresh_store(cfg, variant, chunk_size, trial)
            await store.async_put_content(content)
            report = await store.async_report()
            bound = storage_full(n, chunk_size, store.config.mac_size) if store.config.height is None else None
            records.append(_record(
                cfg, store, content_size=n, trial=trial, bytes_before=0,
                bytes_after=report.total_bytes, model_bound=bound,
            ))
    return records


async def _exp_single_byte(cfg: ExperimentConfig, insert: bool) -> list[MeasurementRecord]:
    records = []
    n = cfg.content_size
    for trial in range(cfg.trials):
        rng = trial_rng(cfg.seed, trial)
        content = rng.bytes(n)
        if insert:
            offset = int(rng.integers(0, n + 1))
            modified = insert_byte(content, offset, int(rng.integers(0, 256)))
        else:
            offset = int(rng.integers(0, n))
            modified = overwrite(content, offset, random_replacement(rng, content[offset:offset + 1]))
        for chunk_size, variant in _combinations(cfg):
            store = await _fresh_store(cfg, variant, chunk_size, trial)
            before, after = await _measure_pair(store, content, modified)
            bound = _bound(store, n, 1, cfg)
            if insert and store.config.scheme != SCHEME_CDC:
                # static chunking is not robust against shifting
                bound = None
            records.append(_record(
                cfg, store, content_size=n, delta=1, trial=trial, bytes_before=before,
                bytes_after=after, model_bound=bound, offset=offset,
            ))
    return records


async def exp_overwrite(cfg: ExperimentConfig) -> list[MeasurementRecord]:
    """Second content differs from the first in a single overwritten byte."""
    return await _exp_single_byte(cfg, insert=False)


async def exp_insert(cfg: ExperimentConfig) -> list[MeasurementRecord]:
    """Second content has one random byte inserted, shifting the tail."""
    return await _exp_single_byte(cfg, insert=True)


async def exp_versions(cfg: ExperimentConfig) -> list[MeasurementRecord]:
    """Cumulative storage over a chain of versions, each one random byte insert away from the last."""
    records = []
    n = cfg.content_size
    for trial in range(cfg.trials):
        rng = trial_rng(cfg.seed, trial)
        content = rng.bytes(n)
        edits = [
            (int(rng.integers(0, n + version + 1)), int(rng.integers(0, 256)))
            for version in range(cfg.version_count)
        ]
        for chunk_size, variant in _combinations(cfg):
            store = await _fresh_store(cfg, variant, chunk_size, trial)
            current = content
            await store.async_put_content(current)
            total = (await store.async_report()).total_bytes
            records.append(_record(
                cfg, store, content_size=n, trial=trial, bytes_before=0, bytes_after=total, version=0,
            ))
            for version, (offset, value) in enumerate(edits, start=1):
                current = insert_byte(current, offset, value)
                before = total
                await store.async_put_content(current)
                total = (await store.async_report()).total_bytes
                bound = None
                if store.config.height is None and store.config.scheme == SCHEME_CDC:
                    bound = add_strg(
                        store.config.scheme, store.height_for(len(current)), chunk_size,
                        store.config.mac_size, cfg.window, store.config.reference_size,
                    )
                records.append(_record(
                    cfg, store, content_size=len(current), delta=1, trial=trial, bytes_before=before,
                    bytes_after=total, model_bound=bound, version=version, offset=offset,
                ))
            _LOGGER.debug("versions experiment: trial %s, %s S=%s done", trial, variant, chunk_size)
    return records


def iter_corpus(path) -> Iterator[tuple[str, list[Path]]]:
    """Snapshot directories (first-level subdirectories, lexicographic) with their files in path order."""
    root = Path(path)
    if not root.is_dir():
        _LOGGER.error("Corpus path %s is not a directory", root)
        raise ConfigurationException(f"Corpus path {root} is not a directory")
    for snapshot in sorted(entry for entry in root.iterdir() if entry.is_dir()):
        files = sorted(
            (entry for entry in snapshot.rglob("*") if entry.is_file()),
            key=lambda entry: entry.relative_to(snapshot).as_posix(),
        )
        yield snapshot.name, files


def _read_file(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as e:
        _LOGGER.error("Cannot read corpus file %s: %s", path, e)
        raise ConfigurationException(f"Cannot read corpus file {path}") from e


async def exp_corpus(cfg: ExperimentConfig) -> list[MeasurementRecord]:
    """Insert every file of every snapshot and report cumulative storage after each snapshot."""
    records = []
    snapshots = list(iter_corpus(cfg.corpus_path))
    for chunk_size, variant in _combinations(cfg):
        store = await _fresh_store(cfg, variant, chunk_size, 0)
        total = 0
        for version, (name, files) in enumerate(snapshots):
            before = total
            snapshot_size = 0
            for path in files:
                data = _read_file(path)
                snapshot_size += len(data)
                await store.async_put_content(data)
            total = (await store.async_report()).total_bytes
            records.append(_record(
                cfg, store, content_size=snapshot_size, trial=0, bytes_before=before,
                bytes_after=total, version=version,
            ))
        _LOGGER.debug("corpus experiment: %s S=%s stored %s bytes", variant, chunk_size, total)
    return records


EXPERIMENT_RUNNERS = {
    "delta": exp_delta,
    "expansion": exp_expansion,
    "overwrite": exp_overwrite,
    "insert": exp_insert,
    "versions": exp_versions,
    "corpus": exp_corpus,
}


async def run_experiment(cfg: ExperimentConfig) -> list[MeasurementRecord]:
    return await EXPERIMENT_RUNNERS[cfg.experiment](cfg)


def write_csv(records: Iterable[MeasurementRecord], out: Optional[TextIO] = None) -> None:
    """Write records with the documented column order; '\\n' line endings keep output byte-identical."""
    writer = csv.DictWriter(out or sys.stdout, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow(record.to_row())


def read_csv(source: TextIO) -> list[MeasurementRecord]:
    return [MeasurementRecord.from_dict(row) for row in csv.DictReader(source)]


def group_means(records: Iterable[MeasurementRecord]) -> dict[tuple, tuple[float, Optional[float]]]:
    """Mean delta_bytes (and mean bound) per (experiment, scheme, height policy, S, n, delta, version)."""
    groups: dict[tuple, list[MeasurementRecord]] = {}
    for record in records:
        group_key = (
            record.experiment, record.scheme, record.height_policy, record.chunk_size,
            record.content_size, record.delta, record.version,
        )
        groups.setdefault(group_key, []).append(record)
    means = {}
    for group_key, group in groups.items():
        bounds = [record.model_bound for record in group if record.model_bound is not None]
        means[group_key] = (
            fmean(record.delta_bytes for record in group),
            fmean(bounds) if bounds else None,
        )
    return means


async def sample_chunk_sizes(
    store: SecureContentStore,
    key: ContentKey,
    rng: np.random.Generator,
    samples: int,
) -> dict[int, list[int]]:
    """Stored size of the chunk covering each of `samples` uniformly random offsets, per non-root height."""
    tree = await store.async_describe_tree(key)
    length = tree.level_nodes(key.height)[0].length
    if not length:
        raise ConfigurationException("Cannot sample offsets of an empty content")
    offsets = rng.integers(0, length, size=samples)
    return {
        height: [tree.covering(int(offset), height).size for offset in offsets]
        for height in range(key.height)
    }
