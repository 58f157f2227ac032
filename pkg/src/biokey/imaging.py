"""Raster primitives shared by both biometric pipelines.

Images are plain numpy arrays indexed [row, col] with the origin at the
top-left: uint8 2-D for gray rasters, float64 2-D for intermediate filter
outputs, uint8 {0, 1} for binary masks.  Pixel column is x, pixel row is y.
"""

import math

import numpy as np
from scipy import ndimage

GRAY_LEVELS = 256


class PgmError(ValueError):
    """A PGM file could not be parsed."""


class PgmFormatError(PgmError):
    """Not a binary (P5) PGM header."""


class PgmDepthError(PgmError):
    """Sample depth above 8 bits (maxval > 255)."""


class PgmTruncatedError(PgmError):
    """Pixel payload shorter than width * height bytes."""


def load_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5) file into a uint8 array of shape (height, width).

    Pixel values are returned exactly as stored; no maxval rescaling.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P5":
        raise PgmFormatError(f"{path}: not a binary PGM (P5) file")
    (width, height, maxval), offset = _header_fields(data, path)
    if width <= 0 or height <= 0:
        raise PgmFormatError(f"{path}: non-positive dimensions {width}x{height}")
    if maxval > 255:
        raise PgmDepthError(f"{path}: maxval {maxval} exceeds 8-bit samples")
    if maxval <= 0:
        raise PgmFormatError(f"{path}: invalid maxval {maxval}")
    expected = width * height
    payload = data[offset:offset + expected]
    if len(payload) < expected:
        raise PgmTruncatedError(
            f"{path}: expected {expected} pixel bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()


def _header_fields(data, path):
    # Three numeric fields follow the magic; '#' starts a comment to end of line.
    fields = []
    i, n = 2, len(data)
    while len(fields) < 3:
        while i < n and data[i] in b" \t\r\n":
            i += 1
        if i < n and data[i] in b"#":
            while i < n and data[i] not in b"\r\n":
                i += 1
            continue
        j = i
        while j < n and data[j] not in b" \t\r\n#":
            j += 1
        if j == i:
            raise PgmFormatError(f"{path}: truncated PGM header")
        try:
            fields.append(int(data[i:j]))
        except ValueError:
            raise PgmFormatError(
                f"{path}: non-numeric header field {data[i:j]!r}") from None
        i = j
    if i >= n or data[i] not in b" \t\r\n":
        raise PgmFormatError(f"{path}: missing whitespace after maxval")
    return fields, i + 1


def save_pgm(img: np.ndarray, path) -> None:
    """Write a uint8 gray image as binary PGM; load_pgm round-trips bit-exactly."""
    a = np.asarray(img)
    if a.ndim != 2 or a.dtype != np.uint8:
        raise ValueError("save_pgm expects a 2-D uint8 array")
    header = f"P5\n{a.shape[1]} {a.shape[0]}\n255\n".encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(a.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write PGM to {path}: {exc}") from exc


def quantize_u8(img: np.ndarray) -> np.ndarray:
    """Re-quantize a float raster: clamp to [0, 255], then round half-up."""
    return np.floor(np.clip(img, 0.0, 255.0) + 0.5).astype(np.uint8)


def convolve(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """True 2-D convolution with replicate-edge sampling, same-size output.

    out(i, j) = sum_{u,v} kernel(u, v) * img(i - u, j - v) with (u, v) running
    over offsets centered on the kernel middle.  Kernel dimensions must be odd.
    """
    k = np.asarray(kernel, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
        raise ValueError(f"kernel dimensions must be odd, got {k.shape}")
    return ndimage.convolve(np.asarray(img, dtype=np.float64), k, mode="nearest")


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled 2-D Gaussian, half-width ceil(3*sigma), re-normalized to sum 1."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    hw = math.ceil(3.0 * sigma)
    y, x = np.mgrid[-hw:hw + 1, -hw:hw + 1].astype(np.float64)
    k = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    return k / k.sum()


def central_gradients(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel central-difference gradients (gx, gy) with replicate edges."""
    a = np.asarray(img, dtype=np.float64)
    gx = ndimage.correlate1d(a, [-0.5, 0.0, 0.5], axis=1, mode="nearest")
    gy = ndimage.correlate1d(a, [-0.5, 0.0, 0.5], axis=0, mode="nearest")
    return gx, gy
