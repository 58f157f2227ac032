"""Fingerprint minutiae extraction.

Pipeline stages: histogram equalization, adaptive Wiener denoising, block
segmentation, gradient-based orientation estimation, Gaussian and oriented
Gabor enhancement, Otsu binarization, two-subiteration thinning, and
crossing-number minutiae detection.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from . import imaging

BLOCK = 16                # segmentation / orientation block edge, pixels
GAUSS_SIGMA = 1.0         # pre-enhancement low-pass sigma
GABOR_F0 = 1.0 / 7.0      # ridge frequency, cycles/pixel (typical period ~7 px)
GABOR_SIGMA = 4.0         # Gaussian envelope sigma for the oriented filter
BORDER_MARGIN = 16        # px; minutiae this close to the mask border are dropped

RIDGE_ENDING = "E"
BIFURCATION = "B"


@dataclass(frozen=True)
class SegmentationMask:
    """Per-block foreground mask over a fixed 16x16 grid."""

    blocks: np.ndarray  # bool grid, True = foreground
    width: int
    height: int
    block: int = BLOCK

    def pixel_mask(self) -> np.ndarray:
        """Expand the block grid to a per-pixel boolean mask."""
        full = np.repeat(np.repeat(self.blocks, self.block, axis=0), self.block, axis=1)
        return full[:self.height, :self.width]


@dataclass(frozen=True)
class OrientationField:
    """Per-block ridge direction, radians in [0, pi)."""

    theta: np.ndarray  # float grid
    block: int
    valid: np.ndarray  # bool grid; False = orientation undefined (background)


@dataclass(frozen=True)
class Minutia:
    x: int     # pixel column
    y: int     # pixel row
    kind: str  # RIDGE_ENDING or BIFURCATION


def histogram_equalize(img: np.ndarray) -> np.ndarray:
    """Map intensities through round(255 * CDF(v)); monotone non-decreasing."""
    a = np.asarray(img)
    if a.size == 0:
        raise ValueError("cannot equalize an empty image")
    counts = np.bincount(a.ravel(), minlength=imaging.GRAY_LEVELS)
    cdf = np.cumsum(counts) / a.size
    lut = np.floor(255.0 * cdf + 0.5).astype(np.uint8)
    return lut[a]


def wiener_filter(img: np.ndarray, window: int = 3) -> np.ndarray:
    """Adaptive local-statistics denoising.

    Per pixel: mean and variance over a window x window neighborhood
    (replicate edges); the noise variance is the image-wide mean of the local
    variances; output = mu + max(var - noise, 0) / var * (value - mu).
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    x = np.asarray(img, dtype=np.float64)
    mu = ndimage.uniform_filter(x, window, mode="nearest")
    ex2 = ndimage.uniform_filter(x * x, window, mode="nearest")
    var = np.maximum(ex2 - mu * mu, 0.0)
    noise = var.mean()
    gain = np.maximum(var - noise, 0.0) / np.maximum(var, 1e-12)
    return imaging.quantize_u8(mu + gain * (x - mu))


def segment(img: np.ndarray, threshold: float | None = None) -> SegmentationMask:
    """Mark 16x16 blocks whose summed gradient spread exceeds the threshold.

    threshold=None picks 0.05 * the largest block score seen on this image.
    """
    if threshold is not None and threshold <= 0:
        raise ValueError("segmentation threshold must be positive")
    a = np.asarray(img)
    gx, gy = imaging.central_gradients(a)
    h, w = a.shape
    gh, gw = -(-h // BLOCK), -(-w // BLOCK)
    scores = np.zeros((gh, gw))
    for bi in range(gh):
        for bj in range(gw):
            sl = (slice(bi * BLOCK, min((bi + 1) * BLOCK, h)),
                  slice(bj * BLOCK, min((bj + 1) * BLOCK, w)))
            scores[bi, bj] = gx[sl].std() + gy[sl].std()
    if threshold is None:
        threshold = 0.05 * scores.max()
    return SegmentationMask(blocks=scores > threshold, width=w, height=h)


def orientation_field(img: np.ndarray, block: int = BLOCK,
                      mask: SegmentationMask | None = None) -> OrientationField:
    """Estimate per-block ridge direction from squared-gradient averages.

    theta = atan2(sum 2*gx*gy, sum gx^2 - gy^2) / 2 + pi/2, reduced to [0, pi).
    Blocks outside the segmentation mask (when given) are flagged invalid.
    """
    if block < 3:
        raise ValueError("orientation block size must be at least 3")
    a = np.asarray(img)
    gx, gy = imaging.central_gradients(a)
    h, w = a.shape
    gh, gw = -(-h // block), -(-w // block)
    theta = np.zeros((gh, gw))
    for bi in range(gh):
        for bj in range(gw):
            sl = (slice(bi * block, min((bi + 1) * block, h)),
                  slice(bj * block, min((bj + 1) * block, w)))
            num = np.sum(2.0 * gx[sl] * gy[sl])
            den = np.sum(gx[sl] ** 2 - gy[sl] ** 2)
            theta[bi, bj] = (0.5 * math.atan2(num, den) + 0.5 * math.pi) % math.pi
    if mask is None:
        valid = np.ones((gh, gw), dtype=bool)
    else:
        if mask.block != block or mask.blocks.shape != (gh, gw):
            raise ValueError("segmentation mask grid does not match block size")
        valid = mask.blocks
    return OrientationField(theta=theta, block=block, valid=valid)


def gaussian_lowpass(img: np.ndarray, sigma: float) -> np.ndarray:
    """Blur with a normalized sampled Gaussian of half-width ceil(3*sigma)."""
    k = imaging.gaussian_kernel(sigma)
    return imaging.quantize_u8(imaging.convolve(np.asarray(img, np.float64), k))


def gabor_kernel(theta: float, f0: float, sigma_x: float, sigma_y: float) -> np.ndarray:
    """Oriented Gabor kernel; the origin value is exp(0) * cos(0) = 1.

    Rotation: x_t = x sin(theta) + y cos(theta), y_t = -x cos(theta) + y sin(theta);
    the cosine carrier runs along x_t with frequency f0.
    """
    if f0 <= 0 or sigma_x <= 0 or sigma_y <= 0:
        raise ValueError("f0 and sigmas must be positive")
    hw = math.ceil(3.0 * max(sigma_x, sigma_y))
    dy, dx = np.mgrid[-hw:hw + 1, -hw:hw + 1].astype(np.float64)
    xt = dx * math.sin(theta) + dy * math.cos(theta)
    yt = -dx * math.cos(theta) + dy * math.sin(theta)
    env = np.exp(-0.5 * (xt ** 2 / sigma_x ** 2 + yt ** 2 / sigma_y ** 2))
    return env * np.cos(2.0 * math.pi * f0 * xt)


def gabor_enhance(img: np.ndarray, field: OrientationField,
                  f0: float = GABOR_F0, sigma_x: float = GABOR_SIGMA,
                  sigma_y: float = GABOR_SIGMA) -> np.ndarray:
    """Filter each block with the Gabor kernel oriented by its block angle.

    Blocks with undefined orientation pass the input through unchanged.
    """
    x = np.asarray(img, dtype=np.float64)
    h, w = x.shape
    b = field.block
    hw = math.ceil(3.0 * max(sigma_x, sigma_y))
    padded = np.pad(x, hw, mode="edge")
    out = np.array(img, dtype=np.uint8, copy=True)
    kernels: dict[float, np.ndarray] = {}
    for bi in range(field.theta.shape[0]):
        for bj in range(field.theta.shape[1]):
            if not field.valid[bi, bj]:
                continue
            r0, c0 = bi * b, bj * b
            if r0 >= h or c0 >= w:
                continue
            r1, c1 = min(r0 + b, h), min(c0 + b, w)
            angle = float(field.theta[bi, bj])
            kernel = kernels.get(angle)
            if kernel is None:
                kernel = kernels[angle] = gabor_kernel(angle, f0, sigma_x, sigma_y)
            patch = padded[r0:r1 + 2 * hw, c0:c1 + 2 * hw]
            resp = signal.fftconvolve(patch, kernel, mode="valid")
            out[r0:r1, c0:c1] = imaging.quantize_u8(resp)
    return out


def _otsu_threshold(values: np.ndarray) -> int:
    counts = np.bincount(values, minlength=imaging.GRAY_LEVELS).astype(np.float64)
    w0 = np.cumsum(counts)
    w1 = values.size - w0
    cum = np.cumsum(counts * np.arange(imaging.GRAY_LEVELS))
    mu0 = cum / np.maximum(w0, 1.0)
    mu1 = (cum[-1] - cum) / np.maximum(w1, 1.0)
    between = np.where((w0 > 0) & (w1 > 0), w0 * w1 * (mu0 - mu1) ** 2, -1.0)
    return int(np.argmax(between))


def binarize(img: np.ndarray, mask: SegmentationMask,
             ridge_bright: bool = False) -> np.ndarray:
    """Threshold foreground pixels with Otsu's method; ridge phase maps to 1.

    Ridges are the darker phase by default (set ridge_bright to flip).
    Background-mask pixels are always 0; a single-level foreground yields all 0.
    """
    a = np.asarray(img)
    fg = mask.pixel_mask()
    out = np.zeros(a.shape, dtype=np.uint8)
    values = a[fg]
    if values.size == 0 or values.min() == values.max():
        return out
    t = _otsu_threshold(values)
    ridge = (a > t) if ridge_bright else (a <= t)
    out[ridge & fg] = 1
    return out


def _neighbor_planes(a: np.ndarray) -> tuple[np.ndarray, ...]:
    """x1..x8 neighbor planes: east first, counter-clockwise; zeros past the border."""
    p = np.pad(a, 1)
    return (
        p[1:-1, 2:],    # x1 east
        p[:-2, 2:],     # x2 north-east
        p[:-2, 1:-1],   # x3 north
        p[:-2, :-2],    # x4 north-west
        p[1:-1, :-2],   # x5 west
        p[2:, :-2],     # x6 south-west
        p[2:, 1:-1],    # x7 south
        p[2:, 2:],      # x8 south-east
    )


def thinning_conditions(neighbors) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate the erasure tests (G1, G2, G3, G3') over eight {0,1} arrays.

    G1: exactly one 0 -> 1 crossing pattern around the ring;
    G2: 2 <= min(n1, n2) <= 3 where n1/n2 count occupied edge pairs;
    G3 / G3': directional end conditions for the two subiterations.
    """
    x1, x2, x3, x4, x5, x6, x7, x8 = (np.asarray(v, dtype=np.uint8) for v in neighbors)
    ring = (x1, x2, x3, x4, x5, x6, x7, x8, x1)
    crossings = sum(
        ((ring[2 * i] == 0) & ((ring[2 * i + 1] == 1) | (ring[2 * i + 2] == 1))).astype(np.uint8)
        for i in range(4)
    )
    g1 = crossings == 1
    n1 = (x1 | x2).astype(np.int32) + (x3 | x4) + (x5 | x6) + (x7 | x8)
    n2 = (x2 | x3).astype(np.int32) + (x4 | x5) + (x6 | x7) + (x8 | x1)
    m = np.minimum(n1, n2)
    g2 = (m >= 2) & (m <= 3)
    g3 = ((x2 | x3 | (1 - x8)) & x1) == 0
    g3p = ((x6 | x7 | (1 - x4)) & x5) == 0
    return g1, g2, g3, g3p


def thin(img: np.ndarray) -> np.ndarray:
    """Erode a binary image to a one-pixel-wide skeleton.

    Each pass runs two subiterations: the first erases every pixel satisfying
    G1, G2 and G3 simultaneously; the second uses G3' in place of G3.  Passes
    repeat until no pixel is erased.
    """
    a = (np.asarray(img) > 0).astype(np.uint8)
    while True:
        erased = False
        for second in (False, True):
            g1, g2, g3, g3p = thinning_conditions(_neighbor_planes(a))
            cond = g1 & g2 & (g3p if second else g3)
            erase = (a == 1) & cond
            if erase.any():
                a[erase] = 0
                erased = True
        if not erased:
            return a


def crossing_numbers(skeleton: np.ndarray) -> np.ndarray:
    """Crossing number per pixel: half the sum of |x_i - x_{i+1}| around the ring."""
    planes = [p.astype(np.int16) for p in _neighbor_planes((np.asarray(skeleton) > 0).astype(np.uint8))]
    ring = planes + [planes[0]]
    total = sum(np.abs(ring[i] - ring[i + 1]) for i in range(8))
    return total // 2


def extract_minutiae(skeleton: np.ndarray, mask: SegmentationMask) -> list[Minutia]:
    """Classify skeleton pixels by crossing number (1 = ending, 3 = bifurcation).

    Points within BORDER_MARGIN pixels of the foreground border (or the image
    edge) are discarded.  The result is sorted by (y, x).
    """
    sk = (np.asarray(skeleton) > 0).astype(np.uint8)
    cn = crossing_numbers(sk)
    inner = ndimage.binary_erosion(
        mask.pixel_mask(),
        structure=np.ones((2 * BORDER_MARGIN - 1,) * 2, dtype=bool),
        border_value=0,
    )
    points = []
    for kind, value in ((RIDGE_ENDING, 1), (BIFURCATION, 3)):
        ys, xs = np.nonzero((sk == 1) & (cn == value) & inner)
        points.extend(Minutia(int(x), int(y), kind) for x, y in zip(xs, ys))
    points.sort(key=lambda m: (m.y, m.x))
    return points


def format_minutiae(minutiae: list[Minutia]) -> str:
    """Serialize as one "x y kind" line per minutia, LF endings."""
    return "".join(f"{m.x} {m.y} {m.kind}\n" for m in minutiae)


def parse_minutiae(text: str) -> list[Minutia]:
    points = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        x, y, kind = line.split()
        if kind not in (RIDGE_ENDING, BIFURCATION):
            raise ValueError(f"unknown minutia kind {kind!r}")
        points.append(Minutia(int(x), int(y), kind))
    return points


def minutiae_pipeline(img: np.ndarray, *, seg_threshold: float | None = None,
                      gauss_sigma: float = GAUSS_SIGMA, gabor_f0: float = GABOR_F0,
                      gabor_sigma_x: float = GABOR_SIGMA, gabor_sigma_y: float = GABOR_SIGMA,
                      ridge_bright: bool = False) -> tuple[list[Minutia], dict[str, np.ndarray]]:
    """Run the full minutiae extraction stage.

    Returns the sorted minutiae list and a dict of per-stage rasters for dumps.
    """
    equalized = histogram_equalize(img)
    denoised = wiener_filter(equalized)
    mask = segment(denoised, seg_threshold)
    field = orientation_field(denoised, BLOCK, mask)
    smoothed = gaussian_lowpass(denoised, gauss_sigma)
    enhanced = gabor_enhance(smoothed, field, gabor_f0, gabor_sigma_x, gabor_sigma_y)
    binary = binarize(enhanced, mask, ridge_bright)
    skeleton = thin(binary)
    minutiae = extract_minutiae(skeleton, mask)
    stages = {
        "equalized": equalized,
        "wiener": denoised,
        "segmented": np.where(mask.pixel_mask(), denoised, 0).astype(np.uint8),
        "enhanced": enhanced,
        "binarized": (binary * 255).astype(np.uint8),
        "thinned": (skeleton * 255).astype(np.uint8),
    }
    return minutiae, stages
