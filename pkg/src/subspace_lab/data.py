"""Dataset ingestion (IDX images, numeric CSV), centering, PCA surrogate bases and synthetic streams."""

from __future__ import annotations

import csv
import gzip
import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import SpikedModel, sample

IDX_IMAGE_MAGIC = 0x00000803


class IdxFormatError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class CsvFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class DatasetMatrix:
    samples: np.ndarray
    mean: np.ndarray
    centered: bool = False
    image_shape: tuple | None = None

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 2:
            raise ValueError("samples must be an N x n matrix")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        if self.centered and x.shape[0] and np.abs(x.mean(axis=0)).max() >= 1e-8:
            raise ValueError("dataset flagged as centered but column means are not zero")

    @property
    def shape(self):
        return self.samples.shape


def _read_bytes(path) -> bytes:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        return gzip.decompress(raw)
    return raw


def parse_idx_images(raw: bytes) -> DatasetMatrix:
    if len(raw) < 16:
        raise IdxFormatError(f"header needs 16 bytes, file has {len(raw)}", len(raw))
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise IdxFormatError(f"wrong magic word: expected 0x{IDX_IMAGE_MAGIC:08x}, found 0x{magic:08x}", 0)
    size = count * rows * cols
    if size > 2**40:
        raise IdxFormatError(f"declared payload of {size} bytes is implausibly large", 4)
    have = len(raw) - 16
    if have != size:
        kind = "truncated" if have < size else "trailing bytes in"
        raise IdxFormatError(f"{kind} payload: header declares {size} bytes, found {have}", 16 + min(have, size))
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, rows * cols)
    n = rows * cols
    return DatasetMatrix(pixels.astype(float) / 255.0, np.zeros(n), False, (rows, cols))


def load_idx_images(path) -> DatasetMatrix:
    """Read an IDX3 unsigned-byte image file (optionally gzip-compressed), pixels scaled to [0, 1]."""
    return parse_idx_images(_read_bytes(path))


def _parse_number(cell: str, line: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise CsvFormatError(f"non-numeric cell {cell!r}", line) from None


def load_csv_matrix(path) -> DatasetMatrix:
    """Rectangular numeric CSV with an optional single header row."""
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    out = []
    width = None
    for i, row in enumerate(rows, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if i == 1:
            try:
                [float(c) for c in row]
            except ValueError:
                width = len(row)
                continue  # header
        if width is not None and len(row) != width:
            raise CsvFormatError(f"expected {width} fields, found {len(row)}", i)
        width = len(row)
        out.append([_parse_number(c.strip(), i) for c in row])
    if not out:
        raise CsvFormatError("no data rows", len(rows))
    x = np.array(out)
    return DatasetMatrix(x, np.zeros(x.shape[1]), False)


def save_csv_matrix(path, matrix, header=None) -> None:
    """Write with shortest round-trip decimal formatting (``repr`` of each float)."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    lines = []
    if header is not None:
        lines.append(",".join(header))
    lines += [",".join(repr(float(v)) for v in row) for row in m]
    Path(path).write_text("\n".join(lines) + "\n")


def center(ds: DatasetMatrix) -> DatasetMatrix:
    if ds.centered:
        return ds
    mu = ds.samples.mean(axis=0) if ds.samples.shape[0] else np.zeros(ds.samples.shape[1])
    return DatasetMatrix(ds.samples - mu, ds.mean + mu, True, ds.image_shape)


def pca_surrogate(ds: DatasetMatrix, k: int, return_values: bool = False):
    """Top-``k`` eigenvectors of ``X^T X / N`` as an orthonormal ``n x k`` matrix.

    Eigenvalues are descending; each eigenvector is signed so its
    largest-magnitude entry is positive.
    """
    if not ds.centered:
        raise ValueError("pca_surrogate expects a centered dataset")
    x = ds.samples
    N, n = x.shape
    if not 1 <= k <= min(N, n):
        raise ValueError(f"k={k} must lie in [1, min(N, n)] = [1, {min(N, n)}]")
    cov = x.T @ x / N
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    top = evals[0]
    rank = int(np.sum(evals > 1e-12 * top)) if top > 0 else 0
    if k > rank:
        raise ValueError(f"k={k} exceeds the effective rank {rank} of the data")
    basis = evecs[:, :k]
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(k)])
    basis = basis * signs
    return (basis, evals[:k]) if return_values else basis


def spiked_stream(model: SpikedModel, count: int, rng):
    """Lazily yield ``count`` samples ``y`` from ``model``."""
    for _ in range(count):
        yield sample(model, rng)[0]


def shuffled_epochs(ds: DatasetMatrix, epochs: int, rng):
    """Rows of ``ds`` for ``epochs`` passes, all in one seeded shuffled order."""
    order = rng.permutation(ds.samples.shape[0])
    for _ in range(epochs):
        for i in order:
            yield ds.samples[i]
