"""Command line interface: store operations, key and corpus generation, and experiments."""

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from . import corpus, harness
from .content_store import SecureContentStore
from .crypto import MasterKey
from .exceptions import (
    AuthenticityException,
    ConfigurationException,
    MalformedChunkException,
    MissingChunkException,
    SecureContentStoreException,
    UnknownContentException,
)
from .kvs import open_backend
from .models import ContentKey, ExperimentConfig, StoreConfig, StoreManifest
from .models.chunker_spec import DEFAULT_WINDOW, SCHEMES
from .models.experiment_config import EXPERIMENTS
from .models.store_config import SCHEME_VARIANTS, parse_height_policy

_LOGGER = logging.getLogger(__name__)

PROG = "sec-cs"

EXIT_SUCCESS = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_MISSING_CHUNK = 3
EXIT_AUTHENTICITY = 4
EXIT_MALFORMED = 5
EXIT_UNKNOWN_CONTENT = 6

# most specific first
EXIT_CODES = (
    (MissingChunkException, EXIT_MISSING_CHUNK),
    (AuthenticityException, EXIT_AUTHENTICITY),
    (MalformedChunkException, EXIT_MALFORMED),
    (UnknownContentException, EXIT_UNKNOWN_CONTENT),
    (ConfigurationException, EXIT_USAGE),
    (SecureContentStoreException, EXIT_ERROR),
    (OSError, EXIT_ERROR),
)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def variant_for(scheme: str, height: Optional[int]) -> str:
    """Name of the scheme variant with the given chunker and height policy."""
    for name, (variant_scheme, variant_height) in SCHEME_VARIANTS.items():
        if variant_scheme == scheme and variant_height == height:
            return name
    raise ConfigurationException(f"Experiments support heights auto, 0 (sc only) and 1, not {scheme} with {height}")


def _write_stdout(data: bytes) -> None:
    sys.stdout.buffer.write(data)
    sys.stdout.flush()


async def _async_open_store(args) -> SecureContentStore:
    """Open an initialized store, wrapping the backend with reference counters if it was created with them."""
    data = await open_backend(args.backend).async_load_manifest()
    if data is None:
        _LOGGER.error("No store found at %s", args.backend)
        raise ConfigurationException(f"No store at {args.backend}; run '{PROG} init' first")
    manifest = StoreManifest.from_dict(data)
    backend = open_backend(args.backend, refcounted=manifest.config.refcounted)
    return await SecureContentStore.async_from_backend(backend, MasterKey.load(args.key_file))


async def async_do_init(args) -> int:
    """Initialize a store with the given chunking parameters."""
    config = StoreConfig(
        chunk_size=args.chunk_size,
        scheme=args.scheme,
        height=parse_height_policy(args.height),
        window=args.window,
        min_chunk=args.min_chunk,
        max_chunk=args.max_chunk,
        refcounted=args.refcount,
    )
    backend = open_backend(args.backend, refcounted=args.refcount)
    async with SecureContentStore(backend, MasterKey.load(args.key_file), config) as store:
        print(json.dumps(store.manifest.to_dict(), indent=2, sort_keys=True))
    return EXIT_SUCCESS


async def async_do_put(args) -> int:
    """Insert a file and print its content key."""
    content = Path(args.file).read_bytes()
    async with await _async_open_store(args) as store:
        key = await store.async_put_content(content)
    print(key)
    return EXIT_SUCCESS


async def async_do_get(args) -> int:
    """Retrieve a content by key and write it to a file or stdout."""
    key = ContentKey.parse(args.key)
    async with await _async_open_store(args) as store:
        content = await store.async_get_content(key)
    if args.output:
        Path(args.output).write_bytes(content)
    else:
        _write_stdout(content)
    return EXIT_SUCCESS


async def async_do_delete(args) -> int:
    """Drop one insertion of a content from a reference-counted store."""
    key = ContentKey.parse(args.key)
    async with await _async_open_store(args) as store:
        await store.async_delete_content(key)
    return EXIT_SUCCESS


async def async_do_stats(args) -> int:
    """Print the storage report, and the per-level tree statistics of a key if one is given."""
    async with await _async_open_store(args) as store:
        output = (await store.async_report()).to_dict()
        if args.key:
            tree = await store.async_describe_tree(ContentKey.parse(args.key))
            output["levels"] = [tree.levels[height].to_dict() for height in sorted(tree.levels)]
    print(json.dumps(output, indent=2, sort_keys=True))
    return EXIT_SUCCESS


async def async_do_gen_key(args) -> int:
    """Write a fresh 64-byte key file readable by the owner only."""
    MasterKey.generate().save(args.key_file)
    return EXIT_SUCCESS


async def async_do_gen_corpus(args) -> int:
    """Write a synthetic snapshot corpus of an evolving file set."""
    corpus.generate_corpus(
        args.path,
        versions=args.versions,
        file_size=args.size,
        file_count=args.files,
        edits_per_version=args.edits,
        seed=args.seed,
    )
    return EXIT_SUCCESS


def experiment_config(args) -> ExperimentConfig:
    variants = list(args.variant or [])
    if args.scheme or args.height:
        variants.append(variant_for(args.scheme or "cdc", parse_height_policy(args.height or "auto")))
    return ExperimentConfig(
        experiment=args.experiment,
        content_size=args.size,
        chunk_sizes=args.chunk_size,
        variants=variants or None,
        deltas=args.delta,
        version_count=args.versions,
        trials=args.trials,
        seed=args.seed,
        window=args.window,
        min_chunk=args.min_chunk,
        max_chunk=args.max_chunk,
        output=args.out,
        corpus_path=args.corpus,
    )


async def async_do_exp(args) -> int:
    """Run one storage experiment and write its measurements as CSV."""
    cfg = experiment_config(args)
    records = await harness.run_experiment(cfg)
    if cfg.output:
        with open(cfg.output, "w", newline="") as out:
            harness.write_csv(records, out)
    else:
        harness.write_csv(records, sys.stdout)
    _LOGGER.info("Experiment %s produced %s records", cfg.experiment, len(records))
    return EXIT_SUCCESS


def _add_chunking_options(parser, repeatable: bool) -> None:
    if repeatable:
        parser.add_argument("--chunk-size", type=int, action="append", metavar="S",
                            help="target chunk size S; may be given multiple times (default 128)")
    else:
        parser.add_argument("--chunk-size", type=int, required=True, metavar="S", help="target chunk size S")
    parser.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="rolling hash window W (default %(default)s)")
    parser.add_argument("--min-chunk", type=int, default=None, help="minimum CDC chunk length (default unset)")
    parser.add_argument("--max-chunk", type=int, default=None, help="maximum CDC chunk length (default unset)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Secure deduplicating content store")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug output")

    store_parser = argparse.ArgumentParser(add_help=False)
    store_parser.add_argument("--backend", required=True, metavar="{memory,dir:PATH}", help="key-value backend")
    store_parser.add_argument("--key-file", required=True, metavar="PATH", help="64-byte master key file")

    subparsers = parser.add_subparsers(title="commands", metavar="<command>", required=True)

    subparser = subparsers.add_parser("init", parents=[store_parser], help="initialize a store")
    subparser.set_defaults(func=async_do_init)
    subparser.add_argument("--scheme", choices=SCHEMES, default="cdc", help="chunking scheme (default %(default)s)")
    subparser.add_argument("--height", default="auto", help="'auto' or a fixed tree height (default %(default)s)")
    subparser.add_argument("--refcount", action="store_true", help="keep reference counters so contents can be deleted")
    _add_chunking_options(subparser, repeatable=False)

    subparser = subparsers.add_parser("put", parents=[store_parser], help="insert a file, print its key")
    subparser.set_defaults(func=async_do_put)
    subparser.add_argument("file", help="file to insert")

    subparser = subparsers.add_parser("get", parents=[store_parser], help="retrieve a content by key")
    subparser.set_defaults(func=async_do_get)
    subparser.add_argument("key", help="content key as printed by put")
    subparser.add_argument("-o", "--output", default=None, help="output file (default stdout)")

    subparser = subparsers.add_parser("delete", parents=[store_parser], help="delete one insertion of a content")
    subparser.set_defaults(func=async_do_delete)
    subparser.add_argument("key", help="content key as printed by put")

    subparser = subparsers.add_parser("stats", parents=[store_parser], help="print the storage report")
    subparser.set_defaults(func=async_do_stats)
    subparser.add_argument("key", nargs="?", default=None, help="also describe the tree of this content")

    subparser = subparsers.add_parser("gen-key", help="write a new key file")
    subparser.set_defaults(func=async_do_gen_key)
    subparser.add_argument("--key-file", required=True, metavar="PATH", help="key file to create")

    subparser = subparsers.add_parser("gen-corpus", help="write a synthetic snapshot corpus")
    subparser.set_defaults(func=async_do_gen_corpus)
    subparser.add_argument("path", help="empty or missing target directory")
    subparser.add_argument("--versions", type=int, default=corpus.DEFAULT_VERSIONS, help="number of snapshots")
    subparser.add_argument("--size", type=int, default=corpus.DEFAULT_FILE_SIZE, help="initial file size")
    subparser.add_argument("--files", type=int, default=corpus.DEFAULT_FILE_COUNT, help="number of files")
    subparser.add_argument("--edits", type=int, default=corpus.DEFAULT_EDITS_PER_VERSION, help="edits per snapshot")
    subparser.add_argument("--seed", type=int, default=0, help="random seed")

    subparser = subparsers.add_parser("exp", help="run a storage experiment and write CSV")
    subparser.set_defaults(func=async_do_exp)
    subparser.add_argument("experiment", choices=EXPERIMENTS)
    subparser.add_argument("--variant", action="append", choices=sorted(SCHEME_VARIANTS),
                           help="scheme variant; may be given multiple times (default ml-cdc)")
    subparser.add_argument("--scheme", choices=SCHEMES, default=None, help="chunker of an additional variant")
    subparser.add_argument("--height", default=None, help="height policy of an additional variant")
    subparser.add_argument("--size", type=int, default=1 << 20, help="content size n (default %(default)s)")
    subparser.add_argument("--delta", type=int, action="append", help="modified substring length; repeatable")
    subparser.add_argument("--versions", type=int, default=125, help="number of versions (default %(default)s)")
    subparser.add_argument("--trials", type=int, default=20, help="trials per combination (default %(default)s)")
    subparser.add_argument("--seed", type=int, default=0, help="random seed (default %(default)s)")
    subparser.add_argument("--corpus", default=None, metavar="PATH", help="snapshot directory for the corpus experiment")
    subparser.add_argument("--out", default=None, metavar="CSV", help="output file (default stdout)")
    _add_chunking_options(subparser, repeatable=True)
    return parser


def exit_code_for(error: BaseException) -> int:
    for exception_type, code in EXIT_CODES:
        if isinstance(error, exception_type):
            return code
    return EXIT_ERROR


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format=LOG_FORMAT)
    try:
        return asyncio.run(args.func(args))
    except (SecureContentStoreException, OSError) as e:
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return exit_code_for(e)


def run() -> None:  # pragma: no cover
    sys.exit(main())
