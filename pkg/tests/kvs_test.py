import pytest
import pytest_asyncio
from secure_content_store.exceptions import ConfigurationException, KvsException, RefcountException
from secure_content_store.kvs import (
    DirectoryKeyValueStore,
    MemoryKeyValueStore,
    Mutation,
    RefCountingKeyValueStore,
    TamperingKeyValueStore,
    open_backend,
)
from secure_content_store.models import StorageReport

KEY_A = bytes([0xAA]) * 32
KEY_B = bytes([0xBB]) * 32


@pytest_asyncio.fixture(params=["memory", "directory"])
async def backend(request, tmp_path):
    if request.param == "memory":
        return MemoryKeyValueStore()
    return DirectoryKeyValueStore(tmp_path / "store", retry_delay=0)


@pytest.mark.asyncio
async def test_put_get_and_accounting(backend):
    assert await backend.async_report() == StorageReport(0, 0)
    assert await backend.async_get(KEY_A) is None

    await backend.async_put(KEY_A, b"hello")
    await backend.async_put(KEY_B, b"")
    assert await backend.async_get(KEY_A) == b"hello"
    assert await backend.async_get(KEY_B) == b""
    assert await backend.async_report() == StorageReport(2, 32 + 5 + 32)
    assert await backend.async_keys() == [KEY_A, KEY_B]


@pytest.mark.asyncio
async def test_identical_put_changes_nothing(backend):
    await backend.async_put(KEY_A, b"value")
    before = await backend.async_report()
    await backend.async_put(KEY_A, b"value")
    assert await backend.async_report() == before


@pytest.mark.asyncio
async def test_overwrite_is_last_write_wins(backend):
    await backend.async_put(KEY_A, b"value")
    await backend.async_put(KEY_A, b"longer value")
    assert await backend.async_get(KEY_A) == b"longer value"
    assert await backend.async_report() == StorageReport(1, 32 + 12)


@pytest.mark.asyncio
async def test_delete(backend):
    await backend.async_put(KEY_A, b"value")
    assert await backend.async_delete(KEY_A) is True
    assert await backend.async_delete(KEY_A) is False
    assert await backend.async_get(KEY_A) is None
    assert await backend.async_report() == StorageReport(0, 0)


@pytest.mark.asyncio
async def test_manifest(backend):
    assert await backend.async_load_manifest() is None
    await backend.async_save_manifest({"formatVersion": 1})
    assert await backend.async_load_manifest() == {"formatVersion": 1}


@pytest.mark.asyncio
async def test_directory_store_should_rescan_on_reopen(tmp_path):
    backend = DirectoryKeyValueStore(tmp_path)
    await backend.async_put(KEY_A, b"0123456789")
    await backend.async_put(b"\x01", b"x")

    reopened = DirectoryKeyValueStore(tmp_path)
    assert await reopened.async_report() == StorageReport(2, 32 + 10 + 1 + 1)
    assert await reopened.async_get(KEY_A) == b"0123456789"
    assert reopened.object_path(KEY_A) == tmp_path / "objects" / "aa" / "aa" / KEY_A.hex()
    assert reopened.object_path(KEY_A).read_bytes() == b"0123456789"


@pytest.mark.asyncio
async def test_directory_store_should_give_up_after_three_attempts(tmp_path):
    backend = DirectoryKeyValueStore(tmp_path, retry_delay=0)
    attempts = []

    def failing_write(path, value):
        attempts.append(path)
        raise PermissionError("read-only file system")

    backend._write_object = failing_write
    with pytest.raises(KvsException):
        await backend.async_put(KEY_A, b"value")
    assert len(attempts) == 3


@pytest.mark.asyncio
async def test_plain_backend_should_not_count_references():
    with pytest.raises(RefcountException):
        await MemoryKeyValueStore().async_incr(KEY_A)


@pytest.mark.asyncio
async def test_refcounting_should_delete_at_zero():
    backend = RefCountingKeyValueStore(MemoryKeyValueStore())
    await backend.async_put(KEY_A, b"value")
    assert await backend.async_incr(KEY_A) == 1
    assert await backend.async_incr(KEY_A) == 2
    assert await backend.async_decr(KEY_A) == 1
    assert await backend.async_get(KEY_A) == b"value"
    assert await backend.async_decr(KEY_A) == 0
    assert await backend.async_get(KEY_A) is None
    assert await backend.async_count(KEY_A) == 0
    with pytest.raises(RefcountException):
        await backend.async_decr(KEY_A)


@pytest.mark.asyncio
async def test_refcount_sidecar_should_persist_counters(tmp_path):
    sidecar = tmp_path / "refcounts"
    backend = RefCountingKeyValueStore(DirectoryKeyValueStore(tmp_path), sidecar_path=sidecar)
    await backend.async_put(KEY_A, b"value")
    await backend.async_incr(KEY_A)
    await backend.async_incr(KEY_A)
    await backend.async_close()
    assert sidecar.read_text() == f"{KEY_A.hex()}\t2\n"

    reopened = RefCountingKeyValueStore(DirectoryKeyValueStore(tmp_path), sidecar_path=sidecar)
    assert await reopened.async_count(KEY_A) == 2


@pytest.mark.asyncio
async def test_refcount_sidecar_can_be_included_in_report():
    backend = RefCountingKeyValueStore(MemoryKeyValueStore(), include_in_report=True)
    await backend.async_put(KEY_A, b"value")
    await backend.async_incr(KEY_A)
    report = await backend.async_report()
    assert report.total_bytes == 32 + 5 + len(f"{KEY_A.hex()}\t1\n")


@pytest.mark.asyncio
async def test_malformed_sidecar(tmp_path):
    sidecar = tmp_path / "refcounts"
    sidecar.write_text("not a counter line\n")
    backend = RefCountingKeyValueStore(MemoryKeyValueStore(), sidecar_path=sidecar)
    with pytest.raises(RefcountException):
        await backend.async_count(KEY_A)


@pytest.mark.asyncio
async def test_tampering_store_mutations():
    inner = MemoryKeyValueStore()
    backend = TamperingKeyValueStore(inner)
    await backend.async_put(KEY_A, b"\x00\x01\x02")
    await backend.async_put(KEY_B, b"other")

    await backend.async_tamper(KEY_A, Mutation.flip_bit(1, 3))
    assert await inner.async_get(KEY_A) == b"\x00\x09\x02"
    await backend.async_tamper(KEY_A, Mutation.flip_byte(0))
    assert await inner.async_get(KEY_A) == b"\xff\x09\x02"
    await backend.async_tamper(KEY_A, Mutation.truncate())
    assert await inner.async_get(KEY_A) == b"\xff\x09"
    await backend.async_swap(KEY_A, KEY_B)
    assert await inner.async_get(KEY_A) == b"other"
    await backend.async_tamper(KEY_B, Mutation.substitute(b"forged"))
    assert await inner.async_get(KEY_B) == b"forged"
    await backend.async_tamper(KEY_B, Mutation.delete())
    assert await inner.async_get(KEY_B) is None
    with pytest.raises(KvsException):
        await backend.async_tamper(KEY_B, Mutation.flip_byte(0))


def test_open_backend(tmp_path):
    assert isinstance(open_backend("memory"), MemoryKeyValueStore)
    backend = open_backend(f"dir:{tmp_path}", refcounted=True)
    assert backend.refcounted
    assert isinstance(open_backend(f"dir:{tmp_path}"), DirectoryKeyValueStore)
    with pytest.raises(ConfigurationException):
        open_backend("s3://bucket")


@pytest.mark.asyncio
async def test_content_counters_are_kept_apart_from_element_counters(tmp_path):
    sidecar = tmp_path / "refcounts"
    backend = RefCountingKeyValueStore(DirectoryKeyValueStore(tmp_path), sidecar_path=sidecar)
    content_key = KEY_A + b"\x02"
    await backend.async_put(KEY_A, b"value")
    await backend.async_incr(KEY_A)
    assert await backend.async_content_incr(content_key) == 1
    assert await backend.async_content_incr(content_key) == 2
    await backend.async_close()
    assert sidecar.read_text() == f"{KEY_A.hex()}\t1\ncontent\t{content_key.hex()}\t2\n"

    reopened = RefCountingKeyValueStore(DirectoryKeyValueStore(tmp_path), sidecar_path=sidecar)
    assert await reopened.async_content_count(content_key) == 2
    assert await reopened.async_count(content_key) == 0
    assert await reopened.async_content_decr(content_key) == 1
    assert await reopened.async_content_decr(content_key) == 0
    assert await reopened.async_get(KEY_A) == b"value"
    with pytest.raises(RefcountException):
        await reopened.async_content_decr(content_key)


@pytest.mark.asyncio
async def test_plain_backend_has_no_content_counters():
    with pytest.raises(RefcountException):
        await MemoryKeyValueStore().async_content_incr(KEY_A + b"\x00")
