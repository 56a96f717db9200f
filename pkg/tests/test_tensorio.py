import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from emoreg.errors import (
    BadMagicError,
    LabelError,
    LengthMismatchError,
    ManifestError,
    NonFiniteError,
    TruncatedError,
)
from emoreg.labels import Emotion
from emoreg.tensorio import (
    EmbeddingSet,
    decode_matrix,
    encode_matrix,
    load_embedding_set,
    load_manifest,
    read_matrix,
    read_vector,
    save_labels,
    save_manifest,
    write_matrix,
)


def test_one_by_one_file_size(tmp_path):
    # 4 magic + 12 header (version, rows, cols) + 4 data
    p = tmp_path / "m.emo"
    write_matrix(np.array([[0.0]]), p)
    assert p.stat().st_size == 20
    raw = p.read_bytes()
    assert raw[:4] == b"EMO1"
    assert struct.unpack("<III", raw[4:16]) == (1, 1, 1)
    assert raw[16:] == b"\x00\x00\x00\x00"


def test_roundtrip_2x3(tmp_path):
    m = np.arange(6, dtype=np.float32).reshape(2, 3) / 7
    p = tmp_path / "m.emo"
    write_matrix(m, p)
    back = read_matrix(p)
    assert back.shape == (2, 3)
    assert back.dtype == np.float32
    assert np.array_equal(back, m)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_nonfinite_rejected_on_write(tmp_path, bad):
    with pytest.raises(NonFiniteError):
        write_matrix(np.array([[1.0, bad]]), tmp_path / "m.emo")


def test_float64_overflow_rejected():
    with pytest.raises(NonFiniteError):
        encode_matrix(np.array([[1e300]]))


def test_bad_magic(tmp_path):
    p = tmp_path / "m.emo"
    write_matrix(np.ones((2, 2)), p)
    raw = bytearray(p.read_bytes())
    raw[:4] = b"XXXX"
    p.write_bytes(bytes(raw))
    with pytest.raises(BadMagicError):
        read_matrix(p)


def test_truncated_payload(tmp_path):
    p = tmp_path / "m.emo"
    header = struct.pack("<4sIII", b"EMO1", 1, 10, 10)
    p.write_bytes(header + np.zeros(50, dtype="<f4").tobytes())
    with pytest.raises(TruncatedError):
        read_matrix(p)


def test_truncated_header():
    with pytest.raises(TruncatedError):
        decode_matrix(b"EMO1\x01\x00")


def test_trailing_bytes_rejected():
    buf = encode_matrix(np.ones((1, 2))) + b"\x00"
    with pytest.raises(TruncatedError):
        decode_matrix(buf)


def test_nan_in_file_rejected():
    buf = struct.pack("<4sIII", b"EMO1", 1, 1, 1) + np.array([np.nan], dtype="<f4").tobytes()
    with pytest.raises(NonFiniteError):
        decode_matrix(buf)


def test_little_endian_on_disk():
    buf = encode_matrix(np.array([[1.0]]))
    assert buf[16:] == struct.pack("<f", 1.0)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float32, st.tuples(st.integers(0, 6), st.integers(0, 6)),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=32)))
def test_roundtrip_bit_exact(m):
    back = decode_matrix(encode_matrix(m))
    assert back.shape == m.shape
    assert back.tobytes() == np.ascontiguousarray(m, dtype="<f4").tobytes()


def test_read_vector(tmp_path):
    p = tmp_path / "v.emo"
    write_matrix(np.array([1.0, 2.0, 3.0]), p)
    v = read_vector(p)
    assert v.shape == (3,) and v.dtype == np.float64
    write_matrix(np.ones((2, 3)), p)
    with pytest.raises(Exception):
        read_vector(p)


def _labeled(tmp_path, labels, rows=4):
    mp, lp = tmp_path / "e.emo", tmp_path / "l.json"
    write_matrix(np.arange(rows * 3, dtype=float).reshape(rows, 3), mp)
    lp.write_text(json.dumps(labels))
    return mp, lp


def test_load_embedding_set(tmp_path):
    es = load_embedding_set(*_labeled(tmp_path, ["Neutral", "Angry", "Sad", "Happy"]))
    assert len(es) == 4
    assert es.labels[1] is Emotion.ANGRY
    assert es.dim == 3


def test_label_length_mismatch(tmp_path):
    with pytest.raises(LengthMismatchError):
        load_embedding_set(*_labeled(tmp_path, ["Neutral", "Angry", "Sad"]))


def test_unknown_label(tmp_path):
    with pytest.raises(LabelError):
        load_embedding_set(*_labeled(tmp_path, ["Neutral", "Angry", "Sad", "Surprise"]))


def test_embedding_set_readonly_and_centroid():
    es = EmbeddingSet(np.array([[0.0, 0.0], [2.0, 4.0], [4.0, 0.0]]),
                      (Emotion.NEUTRAL, Emotion.NEUTRAL, Emotion.SAD))
    assert np.array_equal(es.centroid("Neutral"), [1.0, 2.0])
    with pytest.raises(ValueError):
        es.embeddings[0, 0] = 1.0


def test_save_labels_roundtrip(tmp_path):
    p = tmp_path / "l.json"
    save_labels([Emotion.SAD, "Happy"], p)
    assert json.loads(p.read_text()) == ["Sad", "Happy"]


def test_manifest_roundtrip(tmp_path):
    m = np.arange(4.0).reshape(2, 2)
    save_manifest(tmp_path / "s", "schedule", {"beta0": 0.05, "beta1": 20.0, "t_min": 1e-3}, {"x": m})
    man, mats = load_manifest(tmp_path / "s")
    assert man.kind == "schedule"
    assert np.array_equal(mats["x"], m)


def test_manifest_missing_keys(tmp_path):
    with pytest.raises(ManifestError):
        save_manifest(tmp_path / "s", "schedule", {"beta0": 0.05}, {})


def test_manifest_missing_file(tmp_path):
    save_manifest(tmp_path / "p", "phoneme-table",
                  {"phonemes": ["A"], "counts": [1], "channels": 2}, {"averages": np.ones((1, 2))})
    (tmp_path / "p" / "averages.emo").unlink()
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "p")


def test_manifest_wrong_kind(tmp_path):
    save_manifest(tmp_path / "s", "schedule", {"beta0": 0.05, "beta1": 20.0, "t_min": 1e-3}, {})
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "s", "gmm")
