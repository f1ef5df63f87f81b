"""
IDX reader for the MNIST containers.

Layout (big-endian):
    images: magic 0x00000803, count, rows, cols, then count*rows*cols unsigned bytes
    labels: magic 0x00000801, count, then count unsigned bytes
Files may be gzip-compressed; compression is detected from the 0x1f8b magic, not the name.
"""

import gzip
import os
import struct

import numpy as np

from config.settings import DATA_ROOT, MNIST_FILES
from core.errors import FormatError
from data.task_sequences import Dataset
from utils.logger import get_logger

logger = get_logger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
GZIP_MAGIC = b"\x1f\x8b"


def _read_bytes(path: str) -> bytes:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == GZIP_MAGIC:
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise FormatError(f"{path}: corrupt gzip stream ({exc})") from None
    return raw


def _header(buf: bytes, path: str, magic: int, n_dims: int) -> tuple[int, ...]:
    size = 4 * (1 + n_dims)
    if len(buf) < size:
        raise FormatError(f"{path}: truncated header at byte offset {len(buf)}, need {size} bytes")
    found, *dims = struct.unpack(">" + "I" * (1 + n_dims), buf[:size])
    if found != magic:
        raise FormatError(f"{path}: unexpected magic 0x{found:08x} at byte offset 0, expected 0x{magic:08x}")
    return tuple(dims)


def _payload(buf: bytes, path: str, offset: int, n_bytes: int) -> np.ndarray:
    if len(buf) < offset + n_bytes:
        raise FormatError(f"{path}: truncated at byte offset {len(buf)}, "
                          f"expected {n_bytes} data bytes from offset {offset}")
    return np.frombuffer(buf, dtype=np.uint8, count=n_bytes, offset=offset)


def read_idx_images(path: str) -> np.ndarray:
    """Raw pixels as uint8, shape (N, rows * cols)."""
    buf = _read_bytes(path)
    count, rows, cols = _header(buf, path, IMAGE_MAGIC, 3)
    pixels = _payload(buf, path, 16, count * rows * cols)
    return pixels.reshape(count, rows * cols)


def read_idx_labels(path: str) -> np.ndarray:
    buf = _read_bytes(path)
    (count,) = _header(buf, path, LABEL_MAGIC, 1)
    return _payload(buf, path, 8, count).astype(np.int64)


def load_idx(images_path: str, labels_path: str, split: str = "train") -> Dataset:
    """
    Parses one IDX image/label pair.

    Args:
        images_path (str): Image file (plain or gzip).
        labels_path (str): Label file (plain or gzip).
        split (str): Tag stored on the Dataset.

    Returns:
        Dataset: Pixels divided by 255.0 as float64, labels as int64.
    """
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise FormatError(f"count mismatch at byte offset 4: {images_path} holds {len(images)} images, "
                          f"{labels_path} holds {len(labels)} labels")
    logger.info(f"[DATA] Loaded {len(labels)} {split} samples of width {images.shape[1]} from {images_path}")
    return Dataset(images.astype(np.float64) / 255.0, labels, split)


def _resolve(data_root: str, stem: str) -> str:
    plain = os.path.join(data_root, stem)
    if os.path.exists(plain):
        return plain
    if os.path.exists(plain + ".gz"):
        return plain + ".gz"
    raise FileNotFoundError(f"MNIST file {stem}(.gz) not found under {data_root}")


def load_mnist(data_root: str = DATA_ROOT) -> tuple[Dataset, Dataset]:
    """(train, test) from the four standard MNIST files under `data_root`."""
    train = load_idx(_resolve(data_root, MNIST_FILES["train_images"]),
                     _resolve(data_root, MNIST_FILES["train_labels"]), "train")
    test = load_idx(_resolve(data_root, MNIST_FILES["test_images"]),
                    _resolve(data_root, MNIST_FILES["test_labels"]), "test")
    return train, test
