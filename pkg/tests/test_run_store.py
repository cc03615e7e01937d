import asyncio
import json

import numpy as np
import pytest

from errors import UsageError
from modeling.run_store import RunStore


def test_write_and_read_runset(tmp_path, make_runset):
    runset = make_runset([np.arange(12).reshape(4, 3), np.arange(12, 24).reshape(4, 3)])

    asyncio.run(RunStore.write_runset(runset, tmp_path, "abc"))
    loaded = asyncio.run(RunStore.read_runset(tmp_path))

    assert sorted(path.name for path in tmp_path.iterdir()) == [
        "run_001.csv", "run_001.json", "run_002.csv", "run_002.json",
    ]
    assert loaded.vocabulary == runset.vocabulary
    assert all(np.array_equal(a, b) for a, b in zip(loaded.runs, runset.runs))
    assert loaded.seeds == runset.seeds


def test_csv_layout(tmp_path, make_runset):
    runset = make_runset([[[1, 2], [3, 4]]])

    asyncio.run(RunStore.write_runset(runset, tmp_path, "abc"))

    lines = (tmp_path / "run_001.csv").read_text(encoding="utf-8").splitlines()
    assert lines == ["word,topic_1,topic_2", "w0000,1,2", "w0001,3,4"]


def test_sidecar(tmp_path, make_runset):
    runset = make_runset([[[1, 2], [3, 4]], [[0, 2], [3, 5]]])

    asyncio.run(RunStore.write_runset(runset, tmp_path, "abc"))

    sidecar = json.loads((tmp_path / "run_002.json").read_text(encoding="utf-8"))
    assert sidecar == {
        "K": 2, "alpha": 0.5, "beta": 0.5, "iterations": 270, "seed": 1, "corpus_hash": "abc", "run_index": 1,
    }


def test_writing_twice_is_byte_identical(tmp_path, make_runset):
    runset = make_runset([[[1, 2], [3, 4]]])

    asyncio.run(RunStore.write_runset(runset, tmp_path / "a", "abc"))
    asyncio.run(RunStore.write_runset(runset, tmp_path / "b", "abc"))

    for name in ["run_001.csv", "run_001.json"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_words_that_look_like_numbers_or_missing_values_survive(tmp_path, make_runset):
    runset = make_runset([[[1], [2], [3]]])
    runset.vocabulary[:] = ["nan", "null", "true"]

    asyncio.run(RunStore.write_runset(runset, tmp_path, "abc"))
    loaded = asyncio.run(RunStore.read_runset(tmp_path))

    assert loaded.vocabulary == ["nan", "null", "true"]


def test_vocabulary_mismatch(tmp_path, make_runset):
    asyncio.run(RunStore.write_runset(make_runset([[[1], [2]], [[3], [4]]]), tmp_path, "abc"))
    path = tmp_path / "run_002.csv"
    path.write_text(path.read_text(encoding="utf-8").replace("w0001", "other"), encoding="utf-8")

    with pytest.raises(UsageError):
        asyncio.run(RunStore.read_runset(tmp_path))


def test_missing_directory(tmp_path):
    with pytest.raises(UsageError):
        asyncio.run(RunStore.read_runset(tmp_path / "missing"))


def test_missing_sidecar(tmp_path, make_runset):
    asyncio.run(RunStore.write_runset(make_runset([[[1], [2]]]), tmp_path, "abc"))
    (tmp_path / "run_001.json").unlink()

    with pytest.raises(UsageError):
        asyncio.run(RunStore.read_runset(tmp_path))
