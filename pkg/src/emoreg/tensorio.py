"""EMO1 binary matrices, labeled embedding sets and JSON model manifests.

EMO1 layout (all little-endian)::

    b"EMO1" | u32 version (=1) | u32 rows | u32 cols | rows*cols float32, row-major
"""
from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .errors import (
    BadMagicError,
    DimensionMismatchError,
    LengthMismatchError,
    ManifestError,
    NonFiniteError,
    TruncatedError,
    ValidationError,
)
from .labels import Emotion

MAGIC = b"EMO1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")
_DTYPE = np.dtype("<f4")

PathLike = str | os.PathLike


def as_matrix(m: Any) -> np.ndarray:
    """Coerce to a 2-D float32 array; 1-D input becomes a single row."""
    arr = np.asarray(m)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimensionMismatchError(f"matrix must be 1-D or 2-D, got shape {arr.shape}")
    with np.errstate(over="ignore"):  # overflow to inf is caught by the finiteness check
        return np.ascontiguousarray(arr, dtype=_DTYPE)


def encode_matrix(m: Any) -> bytes:
    arr = as_matrix(m)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("matrix contains NaN or Inf (after float32 conversion)")
    rows, cols = arr.shape
    return _HEADER.pack(MAGIC, FORMAT_VERSION, rows, cols) + arr.tobytes(order="C")


def decode_matrix(buf: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagicError(f"{source}: bad magic {bytes(buf[:4])!r}, expected {MAGIC!r}")
    if len(buf) < _HEADER.size:
        raise TruncatedError(f"{source}: header truncated ({len(buf)} bytes)")
    _, version, rows, cols = _HEADER.unpack_from(buf)
    if version != FORMAT_VERSION:
        raise ValidationError(f"{source}: unsupported EMO1 version {version}")
    expected = _HEADER.size + rows * cols * _DTYPE.itemsize
    if len(buf) < expected:
        raise TruncatedError(
            f"{source}: header claims {rows}x{cols} but payload holds "
            f"{(len(buf) - _HEADER.size) // _DTYPE.itemsize} values")
    if len(buf) > expected:
        raise TruncatedError(f"{source}: {len(buf) - expected} trailing bytes after payload")
    data = np.frombuffer(buf, dtype=_DTYPE, count=rows * cols, offset=_HEADER.size)
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"{source}: payload contains NaN or Inf")
    return data.reshape(rows, cols).copy()


def write_matrix(m: Any, path: PathLike) -> None:
    payload = encode_matrix(m)
    with open(path, "wb") as fh:
        fh.write(payload)


def read_matrix(path: PathLike) -> np.ndarray:
    """Read an EMO1 file into a ``(rows, cols)`` float32 array."""
    with open(path, "rb") as fh:
        buf = fh.read()
    return decode_matrix(buf, source=str(path))


def read_vector(path: PathLike) -> np.ndarray:
    """Read a 1xD (or Dx1) EMO1 file as a float64 vector."""
    m = read_matrix(path)
    if 1 not in m.shape:
        raise DimensionMismatchError(f"{path}: expected a single row, got {m.shape}")
    return m.astype(np.float64).ravel()


def file_sha256(path: PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# --------------------------------------------------------------------------
# embedding sets


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    embeddings: np.ndarray  # (N, D) float64
    labels: tuple[Emotion, ...]

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=np.float64)
        if emb.ndim != 2:
            raise DimensionMismatchError(f"embeddings must be 2-D, got {emb.shape}")
        labels = tuple(Emotion.parse(x) for x in self.labels)
        if len(labels) != emb.shape[0]:
            raise LengthMismatchError(
                f"{emb.shape[0]} embedding rows but {len(labels)} labels")
        if not np.all(np.isfinite(emb)):
            raise NonFiniteError("embeddings contain NaN or Inf")
        emb.setflags(write=False)
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def __len__(self) -> int:
        return self.embeddings.shape[0]

    def select(self, emotion: Emotion | str) -> np.ndarray:
        emotion = Emotion.parse(emotion)
        mask = np.fromiter((lab is emotion for lab in self.labels), bool, len(self.labels))
        return self.embeddings[mask]

    def centroid(self, emotion: Emotion | str) -> np.ndarray:
        rows = self.select(emotion)
        if rows.shape[0] == 0:
            raise ValidationError(f"no embeddings labeled {Emotion.parse(emotion)}")
        return rows.mean(axis=0)

    def counts(self) -> dict[Emotion, int]:
        out = {e: 0 for e in Emotion}
        for lab in self.labels:
            out[lab] += 1
        return out


def load_labels(path: PathLike) -> list[Emotion]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        raise ValidationError(f"{path}: labels file must be a JSON array of strings")
    return [Emotion.parse(x) for x in raw]


def save_labels(labels: Iterable[Emotion | str], path: PathLike) -> None:
    payload = [Emotion.parse(x).value for x in labels]
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_embedding_set(matrix_path: PathLike, labels_path: PathLike) -> EmbeddingSet:
    emb = read_matrix(matrix_path)
    labels = load_labels(labels_path)
    return EmbeddingSet(emb, tuple(labels))


def save_embedding_set(es: EmbeddingSet, matrix_path: PathLike, labels_path: PathLike) -> None:
    write_matrix(es.embeddings, matrix_path)
    save_labels(es.labels, labels_path)


# --------------------------------------------------------------------------
# manifests

REQUIRED_METADATA: dict[str, tuple[str, ...]] = {
    "gmm": ("k", "dim", "seed", "iterations", "final_log_likelihood"),
    "pca": ("dim", "n_components", "total_variance"),
    "dvm": ("dim", "n_components", "targets", "source", "gmm_k", "gmm_seeds", "submodels"),
    "scorenet": ("channels", "cond_dim", "time_dim", "hidden", "layer_shapes"),
    "schedule": ("beta0", "beta1", "t_min"),
    "phoneme-table": ("phonemes", "counts", "channels"),
}
REQUIRED_MATRICES: dict[str, tuple[str, ...]] = {
    "gmm": ("weights", "means", "covariances"),
    "pca": ("mean", "components", "eigenvalues"),
    "dvm": (),
    "scorenet": (),
    "schedule": (),
    "phoneme-table": ("averages",),
}
MANIFEST_NAME = "manifest.json"


@dataclass
class ModelManifest:
    kind: str
    metadata: dict[str, Any]
    matrices: dict[str, str] = field(default_factory=dict)  # name -> file, relative to manifest dir
    version: int = 1

    def to_json(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "version": self.version,
            "metadata": self.metadata,
            "matrices": [{"name": k, "file": v} for k, v in self.matrices.items()],
        }


def _validate_manifest(man: ModelManifest) -> None:
    if man.kind not in REQUIRED_METADATA:
        raise ManifestError(f"unknown manifest kind {man.kind!r}")
    missing = [k for k in REQUIRED_METADATA[man.kind] if k not in man.metadata]
    if missing:
        raise ManifestError(f"{man.kind} manifest missing metadata keys {missing}")
    missing = [k for k in REQUIRED_MATRICES[man.kind] if k not in man.matrices]
    if missing:
        raise ManifestError(f"{man.kind} manifest missing matrices {missing}")


def save_manifest(directory: PathLike, kind: str, metadata: dict[str, Any],
                  matrices: dict[str, Any]) -> Path:
    """Write each matrix as ``<name>.emo`` next to ``manifest.json`` in *directory*."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    refs = {}
    for name, value in matrices.items():
        fname = f"{name}.emo"
        write_matrix(value, directory / fname)
        refs[name] = fname
    man = ModelManifest(kind=kind, metadata=metadata, matrices=refs)
    _validate_manifest(man)
    path = directory / MANIFEST_NAME
    path.write_text(json.dumps(man.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_manifest(path: PathLike, kind: str | None = None) -> tuple[ModelManifest, dict[str, np.ndarray]]:
    """Load a manifest (file or its directory) and every matrix it references."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from exc
    try:
        man = ModelManifest(
            kind=raw["kind"],
            version=int(raw["version"]),
            metadata=dict(raw["metadata"]),
            matrices={m["name"]: m["file"] for m in raw["matrices"]},
        )
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"{path}: malformed manifest ({exc})") from exc
    if kind is not None and man.kind != kind:
        raise ManifestError(f"{path}: expected kind {kind!r}, found {man.kind!r}")
    _validate_manifest(man)
    mats = {}
    for name, fname in man.matrices.items():
        fpath = path.parent / fname
        if not fpath.exists():
            raise ManifestError(f"{path}: referenced matrix {fname} does not exist")
        mats[name] = read_matrix(fpath)
    return man, mats
