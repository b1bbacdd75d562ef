"""
Test Suite for Persistence
Codeword files and the transcript store
"""

import json
import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from agents.models import RepairTranscript
from memory.codeword_io import load_codeword, save_codeword, to_file
from memory.transcript_store import TranscriptStore, load_transcript_file, scan_transcripts
from tools.array_code import ArrayCode, ArrayCodeParams
from utils.errors import CodewordFormatError


@pytest.fixture(scope="module")
def code16():
    """Extension field instance so symbols are stored as coefficient lists"""
    return ArrayCode(ArrayCodeParams(q=16, u=3, n_bar=4, k=7, d_bar=3))


def _transcript(host=0, ok=True):
    return RepairTranscript(code="array", scheme="base", host=host, failed=[1], helpers=[1, 2, 3],
                            downloaded_symbols=24, downloads_per_m=[24], accessed_symbols=72,
                            ok=ok)


# Codeword files
def test_codeword_file_round_trip(tmp_path, code16):
    cw = code16.encode(code16.random_message(np.random.default_rng(0))).erase([4])
    path = str(tmp_path / "cw.json")
    save_codeword(path, code16, cw, corrupted_racks=[2])
    code, loaded, data = load_codeword(path)
    assert loaded.erased == [4]
    assert data.corrupted_racks == [2]
    assert code.params == code16.params
    assert np.array_equal(loaded.grid, cw.grid)

    raw = json.loads(open(path).read())
    assert raw["columns"][4] is None
    assert len(raw["columns"][0][0]) == 4
    assert raw["field"]["p"] == 2 and raw["field"]["m"] == 4


def test_tampered_field_descriptor(tmp_path, code16):
    cw = code16.encode(code16.random_message(np.random.default_rng(1)))
    data = to_file(code16, cw)
    data.field["modulus"] = [1, 1, 0, 0, 1] if data.field["modulus"] != [1, 1, 0, 0, 1] \
        else [1, 0, 0, 1, 1]
    path = tmp_path / "bad.json"
    path.write_text(data.model_dump_json())
    with pytest.raises(CodewordFormatError, match="field descriptor"):
        load_codeword(str(path))


def test_malformed_codeword_files(tmp_path, code16):
    garbage = tmp_path / "garbage.json"
    garbage.write_text("{not json")
    with pytest.raises(CodewordFormatError):
        load_codeword(str(garbage))

    data = to_file(code16, code16.encode(code16.random_message(np.random.default_rng(2))))
    short = data.model_copy(update={"columns": data.columns[:5]})
    path = tmp_path / "short.json"
    path.write_text(short.model_dump_json())
    with pytest.raises(CodewordFormatError, match="expected 12 columns"):
        load_codeword(str(path))

    bad_params = data.model_copy(update={"params": dict(data.params, q=7)})
    path.write_text(bad_params.model_dump_json())
    with pytest.raises(CodewordFormatError, match="parameter header"):
        load_codeword(str(path))


# Transcript store
def test_store_save_load_delete(tmp_path):
    store = TranscriptStore(str(tmp_path / "store"))
    run_id = store.save_transcript(_transcript(host=2), run_id="first")
    assert run_id == "first"
    assert store.load_transcript("first").host == 2

    store.save_transcript(_transcript(), run_id="second")
    assert store.list_transcripts() == ["first", "second"]
    assert store.list_transcripts(code="rs") == []

    reopened = TranscriptStore(str(tmp_path / "store"))
    assert reopened.list_transcripts() == ["first", "second"]
    assert reopened.delete_transcript("first")
    assert not reopened.delete_transcript("first")
    assert not os.path.exists(tmp_path / "store" / "first.json")


def test_generated_run_ids_are_distinct(tmp_path):
    store = TranscriptStore(str(tmp_path))
    ids = {store.save_transcript(_transcript()) for _ in range(3)}
    assert len(ids) == 3


def test_scan_skips_index_and_foreign_files(tmp_path):
    store = TranscriptStore(str(tmp_path / "runs"))
    store.save_transcript(_transcript(host=0), run_id="a")
    nested = TranscriptStore(str(tmp_path / "runs" / "nested"))
    nested.save_transcript(_transcript(host=1, ok=False), run_id="b")
    (tmp_path / "runs" / "notes.json").write_text('{"hello": 1}')

    found = scan_transcripts(str(tmp_path / "runs"))
    assert sorted(t.host for t in found) == [0, 1]
    assert [t.ok for t in found if t.host == 1] == [False]
    with pytest.raises(CodewordFormatError):
        load_transcript_file(str(tmp_path / "runs" / "notes.json"))


def test_corrupt_index_is_tolerated(tmp_path):
    (tmp_path / "index.json").write_text("[[[")
    store = TranscriptStore(str(tmp_path))
    assert store.list_transcripts() == []


def test_transcript_summary():
    assert "ok" in _transcript().summary()
    assert "FAILED" in _transcript(ok=False).summary()
