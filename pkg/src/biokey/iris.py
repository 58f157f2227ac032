"""Iris texture feature extraction.

Stages: Canny edge detection, circular Hough localization of the pupil and
iris boundaries, eyelid/eyelash noise masking, rubber-sheet normalization to
a fixed polar raster, and 1-D log-Gabor filtering of the raster rows.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import imaging

CANNY_SIGMA = 2.0
CANNY_HIGH = 0.2           # fraction of the max gradient magnitude
CANNY_LOW_RATIO = 0.4      # low threshold = ratio * high
PUPIL_RANGE = (15.0, 80.0)
IRIS_RANGE = (80.0, 150.0)
MERIDIAN_DEG = 30.0        # iris-boundary edges kept within this of horizontal
LASH_THRESHOLD = 60
REFLECTION_THRESHOLD = 250
RADIAL_RES = 20
ANGULAR_RES = 240
LOG_GABOR_F0 = 1.0 / 18.0  # center frequency, cycles/sample
LOG_GABOR_SIGMA_RATIO = 0.5


class LocalizationError(ValueError):
    """Pupil/iris geometry could not be recovered from the image."""


class CircleNotFoundError(LocalizationError):
    """No circle candidate in the requested radius range."""


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("circle radius must be positive")


@dataclass(frozen=True)
class IrisGeometry:
    """Pupil and iris boundary circles; pupil center lies inside the iris."""

    pupil: Circle
    iris: Circle

    def __post_init__(self):
        if self.pupil.r >= self.iris.r:
            raise ValueError("pupil radius must be smaller than iris radius")
        d = math.hypot(self.pupil.cx - self.iris.cx, self.pupil.cy - self.iris.cy)
        if d >= self.iris.r:
            raise ValueError("pupil center must lie inside the iris circle")


@dataclass(frozen=True)
class NormalizedIris:
    """Polar raster (radial_res x angular_res) plus an aligned validity mask."""

    raster: np.ndarray  # uint8
    valid: np.ndarray   # uint8 {0,1}; 0 = sample was noise-masked or out of bounds

    def __post_init__(self):
        if self.raster.shape != self.valid.shape:
            raise ValueError("raster and validity mask shapes differ")


@dataclass(frozen=True)
class IrisFeatureVectors:
    """Real and imaginary feature sequences of equal length."""

    i1: np.ndarray
    i2: np.ndarray

    def __post_init__(self):
        if len(self.i1) != len(self.i2):
            raise ValueError("feature vectors must have equal length")


def canny_edges(img: np.ndarray, sigma: float = CANNY_SIGMA,
                low: float = CANNY_LOW_RATIO * CANNY_HIGH,
                high: float = CANNY_HIGH) -> np.ndarray:
    """Multi-stage edge detector returning a {0,1} edge map.

    Gaussian smoothing, central-difference gradients, non-maximum suppression,
    then double thresholding at low/high fractions of the maximum gradient
    magnitude; weak pixels survive only in 8-connected components that contain
    a strong pixel.
    """
    if not 0 < low < high:
        raise ValueError("thresholds must satisfy 0 < low < high")
    smooth = imaging.convolve(np.asarray(img, np.float64), imaging.gaussian_kernel(sigma))
    gx, gy = imaging.central_gradients(smooth)
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak == 0:
        return np.zeros(mag.shape, dtype=np.uint8)

    # Non-maximum suppression along the quantized gradient direction.
    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    p = np.pad(mag, 1, mode="edge")
    east, west = p[1:-1, 2:], p[1:-1, :-2]
    north, south = p[:-2, 1:-1], p[2:, 1:-1]
    ne, sw = p[:-2, 2:], p[2:, :-2]
    nw, se = p[:-2, :-2], p[2:, 2:]
    sector = np.zeros(mag.shape, dtype=np.uint8)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3
    fwd = np.choose(sector, [east, se, south, sw])
    bwd = np.choose(sector, [west, nw, north, ne])
    suppressed = np.where((mag > fwd) & (mag >= bwd), mag, 0.0)

    strong = suppressed >= high * peak
    candidate = suppressed >= low * peak
    labels, count = ndimage.label(candidate, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return np.zeros(mag.shape, dtype=np.uint8)
    seeded = np.zeros(count + 1, dtype=bool)
    seeded[np.unique(labels[strong])] = True
    seeded[0] = False
    return (candidate & seeded[labels]).astype(np.uint8)


def _circle_offsets(r: int) -> tuple[np.ndarray, np.ndarray]:
    n = max(8, int(math.ceil(2.0 * math.pi * r)) * 2)
    phi = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    pts = np.unique(np.stack(
        [np.round(r * np.cos(phi)).astype(np.int64),
         np.round(r * np.sin(phi)).astype(np.int64)], axis=1), axis=0)
    return pts[:, 0], pts[:, 1]


def circular_hough(edges: np.ndarray, rmin: float, rmax: float) -> Circle:
    """Vote over (cx, cy, r) for every edge pixel and return the global maximum.

    Ties break toward smaller r, then smaller (cy, cx).  Centers are restricted
    to the image bounds.
    """
    if not 0 < rmin < rmax:
        raise ValueError("radius range must satisfy 0 < rmin < rmax")
    e = np.asarray(edges)
    ys, xs = np.nonzero(e)
    if ys.size == 0:
        raise CircleNotFoundError("no edge pixels to vote from")
    h, w = e.shape
    best_votes, best = -1, None
    for r in range(math.ceil(rmin), math.floor(rmax) + 1):
        ox, oy = _circle_offsets(r)
        cxs = (xs[:, None] + ox[None, :]).ravel()
        cys = (ys[:, None] + oy[None, :]).ravel()
        ok = (cxs >= 0) & (cxs < w) & (cys >= 0) & (cys < h)
        votes = np.bincount(cys[ok] * w + cxs[ok], minlength=h * w)
        top = int(votes.max())
        if top > best_votes:
            best_votes = top
            idx = int(votes.argmax())
            best = Circle(cx=float(idx % w), cy=float(idx // w), r=float(r))
    if best is None:
        raise CircleNotFoundError("radius range contains no integer radius")
    return best


def locate_boundaries(img: np.ndarray, *, edges: np.ndarray | None = None,
                      pupil_range: tuple[float, float] = PUPIL_RANGE,
                      iris_range: tuple[float, float] = IRIS_RANGE,
                      sigma: float = CANNY_SIGMA, high: float = CANNY_HIGH,
                      low: float | None = None,
                      meridian_deg: float = MERIDIAN_DEG) -> IrisGeometry:
    """Find the pupil and iris circles.

    The pupil is the Hough maximum over all edges in pupil_range; the iris
    search keeps only edges within meridian_deg of the horizontal through the
    pupil center, dodging eyelid contamination at the top and bottom.
    """
    if edges is None:
        edges = canny_edges(img, sigma, (CANNY_LOW_RATIO * high) if low is None else low, high)
    try:
        pupil = circular_hough(edges, *pupil_range)
        ys, xs = np.nonzero(edges)
        ang = np.arctan2(ys - pupil.cy, xs - pupil.cx)
        window = math.radians(meridian_deg)
        near = (np.abs(ang) <= window) | (np.abs(ang) >= math.pi - window)
        meridian = np.zeros(edges.shape, dtype=np.uint8)
        meridian[ys[near], xs[near]] = 1
        iris = circular_hough(meridian, *iris_range)
    except CircleNotFoundError as exc:
        raise LocalizationError(f"iris localization failed: {exc}") from exc
    if pupil.r >= iris.r:
        raise LocalizationError("pupil radius not smaller than iris radius")
    if math.hypot(pupil.cx - iris.cx, pupil.cy - iris.cy) >= iris.r:
        raise LocalizationError("pupil center outside the iris circle")
    return IrisGeometry(pupil=pupil, iris=iris)


def _dominant_line(xs: np.ndarray, ys: np.ndarray, shape: tuple[int, int],
                   window_deg: float = 25.0) -> tuple[float, float, int] | None:
    """Strongest near-horizontal line x*cos(t) + y*sin(t) = rho through the points."""
    if xs.size == 0:
        return None
    thetas = np.radians(np.arange(90.0 - window_deg, 90.0 + window_deg + 1.0))
    rho_max = int(math.ceil(math.hypot(*shape))) + 1
    best = None
    for t in thetas:
        rho = np.round(xs * math.cos(t) + ys * math.sin(t)).astype(np.int64) + rho_max
        votes = np.bincount(rho, minlength=2 * rho_max)
        top = int(votes.max())
        if best is None or top > best[2]:
            best = (float(votes.argmax() - rho_max), float(t), top)
    return best


def isolate_eyelids(img: np.ndarray, geom: IrisGeometry, *,
                    edges: np.ndarray | None = None, sigma: float = CANNY_SIGMA,
                    high: float = CANNY_HIGH, low: float | None = None,
                    min_votes_frac: float = 0.8) -> np.ndarray:
    """Mask rows occluded by the upper and lower eyelids.

    A near-horizontal line is fitted (Hough) to edge pixels in each half of
    the iris disc, excluding the boundary circles themselves.  The masked
    region is bounded by the horizontal line through the fitted line's
    intersection with the iris circle nearest the pupil center.  Halves with
    no dominant line contribute nothing.
    """
    if edges is None:
        edges = canny_edges(img, sigma, (CANNY_LOW_RATIO * high) if low is None else low, high)
    h, w = edges.shape
    yy, xx = np.indices((h, w))
    d_pupil = np.hypot(xx - geom.pupil.cx, yy - geom.pupil.cy)
    d_iris = np.hypot(xx - geom.iris.cx, yy - geom.iris.cy)
    region = (edges > 0) & (d_iris <= geom.iris.r) \
        & (np.abs(d_iris - geom.iris.r) > 3.0) & (np.abs(d_pupil - geom.pupil.r) > 3.0)
    min_votes = max(20, int(min_votes_frac * geom.iris.r))
    mask = np.zeros((h, w), dtype=np.uint8)
    for upper in (True, False):
        half = region & ((yy <= geom.pupil.cy) if upper else (yy >= geom.pupil.cy))
        pts_y, pts_x = np.nonzero(half)
        line = _dominant_line(pts_x.astype(np.float64), pts_y.astype(np.float64), (h, w))
        if line is None or line[2] < min_votes:
            continue
        rho, theta, _ = line
        cut = _iris_intersection_y(rho, theta, geom)
        if cut is None:
            continue
        if upper:
            mask[:min(max(cut + 1, 0), h), :] = 1
        else:
            mask[max(min(cut, h - 1), 0):, :] = 1
    return mask


def _iris_intersection_y(rho: float, theta: float, geom: IrisGeometry) -> int | None:
    # Intersections of the line with the iris circle; keep the point nearest
    # the pupil center ("maximum isolation" cut).
    nx, ny = math.cos(theta), math.sin(theta)
    along = rho - (geom.iris.cx * nx + geom.iris.cy * ny)
    fx, fy = geom.iris.cx + along * nx, geom.iris.cy + along * ny
    half2 = geom.iris.r ** 2 - along ** 2
    if half2 < 0:
        return None
    half = math.sqrt(half2)
    candidates = [(fx - half * ny, fy + half * nx), (fx + half * ny, fy - half * nx)]
    best = min(candidates, key=lambda p: math.hypot(p[0] - geom.pupil.cx, p[1] - geom.pupil.cy))
    return int(round(best[1]))


def isolate_eyelashes(img: np.ndarray, lash_threshold: int = LASH_THRESHOLD) -> np.ndarray:
    """Mark pixels darker than the threshold as eyelash noise."""
    if not 0 <= lash_threshold <= 255:
        raise ValueError("lash threshold must be in [0, 255]")
    return (np.asarray(img) < lash_threshold).astype(np.uint8)


def rubber_sheet_grid(geom: IrisGeometry, radial_res: int,
                      angular_res: int) -> tuple[np.ndarray, np.ndarray]:
    """Cartesian sample coordinates (x, y) of the polar grid.

    Row k sits at r = k / (radial_res - 1) in [0, 1]; column j at
    theta = 2*pi*j / angular_res.  A sample is the (1 - r) / r blend of the
    pupil and iris boundary points along theta.
    """
    r = np.linspace(0.0, 1.0, radial_res)[:, None]
    theta = (2.0 * math.pi * np.arange(angular_res) / angular_res)[None, :]
    xp = geom.pupil.cx + geom.pupil.r * np.cos(theta)
    yp = geom.pupil.cy + geom.pupil.r * np.sin(theta)
    xi = geom.iris.cx + geom.iris.r * np.cos(theta)
    yi = geom.iris.cy + geom.iris.r * np.sin(theta)
    return (1.0 - r) * xp + r * xi, (1.0 - r) * yp + r * yi


def normalize_rubber_sheet(img: np.ndarray, geom: IrisGeometry,
                           noise: np.ndarray | None = None,
                           radial_res: int = RADIAL_RES,
                           angular_res: int = ANGULAR_RES) -> NormalizedIris:
    """Unwrap the iris annulus onto a fixed radial_res x angular_res raster.

    Intensities are sampled bilinearly.  Samples falling outside the image, or
    whose bilinear support touches a noise-masked pixel, are flagged invalid.
    """
    if radial_res < 2:
        raise ValueError("radial resolution must be at least 2")
    if angular_res < 8:
        raise ValueError("angular resolution must be at least 8")
    a = np.asarray(img, dtype=np.float64)
    h, w = a.shape
    x, y = rubber_sheet_grid(geom, radial_res, angular_res)
    inb = (x >= 0.0) & (x <= w - 1.0) & (y >= 0.0) & (y <= h - 1.0)
    x0 = np.clip(np.floor(x), 0, w - 2).astype(np.int64)
    y0 = np.clip(np.floor(y), 0, h - 2).astype(np.int64)
    fx = np.clip(x - x0, 0.0, 1.0)
    fy = np.clip(y - y0, 0.0, 1.0)
    w00 = (1.0 - fy) * (1.0 - fx)
    w01 = (1.0 - fy) * fx
    w10 = fy * (1.0 - fx)
    w11 = fy * fx
    values = (w00 * a[y0, x0] + w01 * a[y0, x0 + 1]
              + w10 * a[y0 + 1, x0] + w11 * a[y0 + 1, x0 + 1])
    valid = inb.copy()
    if noise is not None:
        n = np.asarray(noise, dtype=np.float64)
        hit = (w00 * n[y0, x0] + w01 * n[y0, x0 + 1]
               + w10 * n[y0 + 1, x0] + w11 * n[y0 + 1, x0 + 1])
        valid &= hit <= 1e-9
    raster = imaging.quantize_u8(np.where(inb, values, 0.0))
    return NormalizedIris(raster=raster, valid=valid.astype(np.uint8))


def log_gabor_gain(freqs: np.ndarray, f0: float, sigma_ratio: float) -> np.ndarray:
    """Frequency response exp(-(log(f/f0))^2 / (2 (log(sigma_ratio))^2)); zero at f = 0."""
    f = np.asarray(freqs, dtype=np.float64)
    out = np.zeros_like(f)
    pos = f > 0
    out[pos] = np.exp(-np.log(f[pos] / f0) ** 2 / (2.0 * math.log(sigma_ratio) ** 2))
    return out


def log_gabor_features(norm: NormalizedIris, f0: float = LOG_GABOR_F0,
                       sigma_ratio: float = LOG_GABOR_SIGMA_RATIO) -> IrisFeatureVectors:
    """Filter each raster row with a 1-D log-Gabor and collect complex samples.

    Rows are zero-padded to the next power of two; only positive-frequency
    bins carry gain (the DC and negative bins are zeroed), so the response is
    complex.  Real parts populate i1 and imaginary parts i2, row-major,
    skipping samples whose validity mask is 0.
    """
    if not 0.0 < sigma_ratio < 1.0:
        raise ValueError("sigma ratio must be in (0, 1)")
    if not 0.0 < f0 < 0.5:
        raise ValueError("center frequency must be in (0, 0.5)")
    rows = norm.raster.astype(np.float64) / 255.0
    n = rows.shape[1]
    size = 1 << (n - 1).bit_length()
    gain = log_gabor_gain(np.arange(size) / size, f0, sigma_ratio)
    gain[size // 2 + 1:] = 0.0
    spectrum = np.fft.fft(rows, n=size, axis=1) * gain[None, :]
    response = np.fft.ifft(spectrum, axis=1)[:, :n]
    keep = norm.valid.astype(bool)
    return IrisFeatureVectors(i1=response.real[keep], i2=response.imag[keep])


def draw_boundaries(img: np.ndarray, geom: IrisGeometry) -> np.ndarray:
    """Overlay the located circles (1-px white rings) for stage dumps."""
    out = np.array(img, dtype=np.uint8, copy=True)
    yy, xx = np.indices(out.shape)
    for c in (geom.pupil, geom.iris):
        ring = np.abs(np.hypot(xx - c.cx, yy - c.cy) - c.r) <= 1.0
        out[ring] = 255
    return out


def iris_pipeline(img: np.ndarray, *, canny_sigma: float = CANNY_SIGMA,
                  canny_high: float = CANNY_HIGH, canny_low: float | None = None,
                  pupil_range: tuple[float, float] = PUPIL_RANGE,
                  iris_range: tuple[float, float] = IRIS_RANGE,
                  meridian_deg: float = MERIDIAN_DEG,
                  lash_threshold: int = LASH_THRESHOLD,
                  reflection_threshold: int = REFLECTION_THRESHOLD,
                  radial_res: int = RADIAL_RES, angular_res: int = ANGULAR_RES,
                  log_gabor_f0: float = LOG_GABOR_F0,
                  log_gabor_sigma_ratio: float = LOG_GABOR_SIGMA_RATIO,
                  ) -> tuple[IrisFeatureVectors, dict[str, np.ndarray]]:
    """Run the full iris feature extraction stage.

    Returns the raw (unquantized) feature vectors and per-stage rasters.
    """
    low = CANNY_LOW_RATIO * canny_high if canny_low is None else canny_low
    edges = canny_edges(img, canny_sigma, low, canny_high)
    geom = locate_boundaries(img, edges=edges, pupil_range=pupil_range,
                             iris_range=iris_range, meridian_deg=meridian_deg)
    lids = isolate_eyelids(img, geom, edges=edges)
    lashes = isolate_eyelashes(img, lash_threshold)
    reflections = (np.asarray(img) > reflection_threshold).astype(np.uint8)
    noise = lids | lashes | reflections
    norm = normalize_rubber_sheet(img, geom, noise, radial_res, angular_res)
    features = log_gabor_features(norm, log_gabor_f0, log_gabor_sigma_ratio)
    stages = {
        "edges": (edges * 255).astype(np.uint8),
        "boundaries": draw_boundaries(img, geom),
        "normalized": norm.raster,
        "normalized_mask": (norm.valid * 255).astype(np.uint8),
    }
    return features, stages
