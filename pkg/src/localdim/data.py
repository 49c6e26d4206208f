"""Sample files and datasets: sample CSV I/O, Gaussian blobs, IDX files."""

from __future__ import annotations

import csv
import gzip
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

# --- sample CSV ---------------------------------------------------------------
# One column per example, one row per input coordinate; an optional first row
# of non-numeric labels is treated as a header.


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_sample_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise ConfigurationError(f"{path}: no sample values")
    try:
        X = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    if not np.all(np.isfinite(X)):
        raise ConfigurationError(f"{path}: sample contains non-finite values")
    return X


def write_sample_csv(path, X, header: bool = True) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"x{i}" for i in range(X.shape[1])])
        for row in X:
            writer.writerow([repr(float(v)) for v in row])


# --- synthetic classification data ------------------------------------------

def blob_centers(n_classes: int = 3, radius: float = 2.0) -> np.ndarray:
    angles = 2 * np.pi * np.arange(n_classes) / n_classes
    return radius * np.stack([np.cos(angles), np.sin(angles)])


def make_blobs(n: int, seed=None, n_classes: int = 3, spread: float = 1.0, radius: float = 2.0):
    """Isotropic Gaussian blobs in the plane with balanced random labels.

    Returns ``(X, labels, Y)``: inputs (2, n), integer labels (n,) and one-hot
    targets (n_classes, n).
    """
    if n < 1:
        raise ConfigurationError("n must be positive")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, n_classes, size=n)
    X = blob_centers(n_classes, radius)[:, labels] + spread * rng.standard_normal((2, n))
    return X, labels, one_hot(labels, n_classes)


def one_hot(labels, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    Y = np.zeros((n_classes, labels.size))
    Y[labels, np.arange(labels.size)] = 1.0
    return Y


# --- IDX files ------------------------------------------------------------------

_IDX_TYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


def read_idx(path) -> np.ndarray:
    """Read an IDX file (optionally gzip-compressed): 2 zero bytes, a type
    code, the number of dimensions, then big-endian int32 sizes and data."""
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise ConfigurationError(f"{path}: bad IDX magic")
    code, ndim = raw[2], raw[3]
    if code not in _IDX_TYPES:
        raise ConfigurationError(f"{path}: unknown IDX type code 0x{code:02x}")
    dims = struct.unpack(f">{ndim}i", raw[4:4 + 4 * ndim])
    dtype = _IDX_TYPES[code]
    count = int(np.prod(dims)) if dims else 1
    body = raw[4 + 4 * ndim:]
    if len(body) != count * dtype.itemsize:
        raise ConfigurationError(f"{path}: expected {count} items, file has {len(body) // dtype.itemsize}")
    return np.frombuffer(body, dtype=dtype).reshape(dims).astype(dtype.newbyteorder("="))


def write_idx(path, array) -> None:
    array = np.asarray(array)
    codes = {v.newbyteorder("="): k for k, v in _IDX_TYPES.items()}
    dt = array.dtype.newbyteorder("=")
    if dt not in codes:
        raise ConfigurationError(f"dtype {array.dtype} has no IDX type code")
    head = bytes([0, 0, codes[dt], array.ndim]) + struct.pack(f">{array.ndim}i", *array.shape)
    Path(path).write_bytes(head + array.astype(_IDX_TYPES[codes[dt]]).tobytes())


def _find(data_dir: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz", stem.replace("-idx", ".idx"), stem.replace("-idx", ".idx") + ".gz"):
        if (data_dir / name).exists():
            return data_dir / name
    raise ConfigurationError(f"{data_dir}: no file {stem}[.gz]")


def load_idx_classification(data_dir, split: str = "train"):
    """Images and labels in the usual ``{train,t10k}-{images-idx3,labels-idx1}-ubyte``
    layout. Returns ``(X, labels, Y)`` with pixels scaled to [0, 1] and
    flattened into columns."""
    data_dir = Path(data_dir)
    prefix = "train" if split == "train" else "t10k"
    images = read_idx(_find(data_dir, f"{prefix}-images-idx3-ubyte"))
    labels = read_idx(_find(data_dir, f"{prefix}-labels-idx1-ubyte")).astype(np.int64)
    if images.shape[0] != labels.shape[0]:
        raise ConfigurationError("image and label counts differ")
    X = images.reshape(images.shape[0], -1).T.astype(np.float64) / 255.0
    n_classes = int(labels.max()) + 1
    return X, labels, one_hot(labels, n_classes)
