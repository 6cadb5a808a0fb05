"""Tactile localization: binarize, find markers, map density, track contact.

The pipeline binarizes a grayscale pad image, detects bright markers at local
maxima of the scale-normalized Hessian determinant, builds a Gaussian kernel
density field over the marker centroids, and reads contact as a density
depression: the field minimum is the contact center, frame-to-frame motion of
that center past a threshold is slip, and one-minus-SSIM against the
undeformed reference serves as a deformation (hence force) proxy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter, maximum_filter

DEFAULT_THRESHOLD = 180
SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class CropRect:
    """Crop window in full-frame pixel coordinates."""

    x0: int = 0
    y0: int = 0
    width: int = 240
    height: int = 240


@dataclass(frozen=True)
class BinaryImage:
    """Thresholded crop; pixel True where intensity exceeded the threshold."""

    mask: np.ndarray
    crop: CropRect


@dataclass(frozen=True)
class MarkerSet:
    """Detected marker centroids (x, y) in full-frame pixels with responses."""

    positions: np.ndarray
    scores: np.ndarray

    @property
    def count(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class GridSpec:
    """Evaluation lattice for the density field, in full-frame pixels."""

    x0: float = 0.0
    y0: float = 0.0
    step: float = 1.0
    nx: int = 240
    ny: int = 240

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.step * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.y0 + self.step * np.arange(self.ny)


@dataclass(frozen=True)
class DensityGrid:
    values: np.ndarray  # (ny, nx), all >= 0
    spec: GridSpec
    kernel_width: float


@dataclass(frozen=True)
class ContactEstimate:
    is_contact: bool
    center: tuple[float, float] | None = None
    contact_area: float = 0.0  # px^2


@dataclass(frozen=True)
class SlipState:
    is_contact: bool = False
    is_slip: bool = False
    center: tuple[float, float] | None = None
    displacement: float = 0.0


@dataclass(frozen=True)
class Calibration:
    """Deformation-to-force line through the origin."""

    force_slope: float = 40.0  # N per unit deformation; 0.05 -> 2 N
    deformation_target: float = 0.05

    def __post_init__(self) -> None:
        if self.force_slope <= 0:
            raise ValueError("force_slope must be positive")


def preprocess(frame: np.ndarray, crop: CropRect | None = None, threshold: int = DEFAULT_THRESHOLD) -> BinaryImage:
    """Binarize the crop: True strictly above the intensity threshold."""
    frame = np.asarray(frame)
    h, w = frame.shape
    if crop is None:
        crop = CropRect(0, 0, w, h)
    if crop.width <= 0 or crop.height <= 0:
        raise ValueError("empty crop")
    if crop.x0 < 0 or crop.y0 < 0 or crop.x0 + crop.width > w or crop.y0 + crop.height > h:
        raise ValueError("crop outside frame")
    window = frame[crop.y0 : crop.y0 + crop.height, crop.x0 : crop.x0 + crop.width]
    return BinaryImage(mask=window > threshold, crop=crop)


def _hessian_determinant(smoothed: np.ndarray, sigma: float) -> np.ndarray:
    """Scale-normalized det(H) from central second differences."""
    lxx = np.zeros_like(smoothed)
    lyy = np.zeros_like(smoothed)
    lxy = np.zeros_like(smoothed)
    sigma = smoothed.dtype.type(sigma)
    lxx[:, 1:-1] = smoothed[:, 2:] - 2.0 * smoothed[:, 1:-1] + smoothed[:, :-2]
    lyy[1:-1, :] = smoothed[2:, :] - 2.0 * smoothed[1:-1, :] + smoothed[:-2, :]
    lxy[1:-1, 1:-1] = 0.25 * (
        smoothed[2:, 2:] - smoothed[2:, :-2] - smoothed[:-2, 2:] + smoothed[:-2, :-2]
    )
    return sigma**4 * (lxx * lyy - lxy * lxy)


def detect_markers_doh(
    binary: BinaryImage,
    sigma_min: float = 2.0,
    sigma_max: float = 6.0,
    n_scales: int = 3,
    response_floor: float = 0.1,
) -> MarkerSet:
    """Blob detection on the binarized pad image.

    Smooth at each sampled scale, form det(H) from central second
    differences, keep strict 8-neighborhood maxima above a floor relative to
    the global best response, then suppress anything within the winning
    detection's sigma. An all-dark image yields an empty set.
    """
    if not sigma_min < sigma_max:
        raise ValueError("need sigma_min < sigma_max")
    # float32 stack: localization tolerance is 1 px, bandwidth matters
    img = binary.mask.astype(np.float32)
    if not binary.mask.any():
        return MarkerSet(positions=np.empty((0, 2)), scores=np.empty(0))
    sigmas = np.linspace(sigma_min, sigma_max, n_scales)
    stacks = [
        _hessian_determinant(gaussian_filter(img, s, truncate=3.0), s) for s in sigmas
    ]
    peak = max(float(d.max()) for d in stacks)
    if peak <= 0.0:
        return MarkerSet(positions=np.empty((0, 2)), scores=np.empty(0))
    floor = response_floor * peak

    candidates = []  # (response, x, y, sigma)
    for sigma, det in zip(sigmas, stacks):
        is_peak = (det == maximum_filter(det, size=3)) & (det > floor)
        is_peak[0, :] = is_peak[-1, :] = False
        is_peak[:, 0] = is_peak[:, -1] = False
        for y, x in zip(*np.nonzero(is_peak)):
            window = det[y - 1 : y + 2, x - 1 : x + 2]
            if np.count_nonzero(window == det[y, x]) == 1:  # strict maximum
                candidates.append((float(det[y, x]), float(x), float(y), float(sigma)))

    candidates.sort(key=lambda c: (-c[0], c[2], c[1]))
    kept: list[tuple[float, float, float, float]] = []
    for resp, x, y, sigma in candidates:
        if any(math.hypot(x - kx, y - ky) <= ks for _, kx, ky, ks in kept):
            continue
        kept.append((resp, x, y, sigma))

    positions = np.array([(x + binary.crop.x0, y + binary.crop.y0) for _, x, y, _ in kept])
    scores = np.array([resp for resp, *_ in kept])
    if positions.size == 0:
        positions = np.empty((0, 2))
    return MarkerSet(positions=positions, scores=scores)


def kernel_width(markers: MarkerSet | np.ndarray) -> float:
    """Mean nearest-neighbor distance over the marker set, px."""
    pos = markers.positions if isinstance(markers, MarkerSet) else np.asarray(markers, dtype=float)
    if pos.shape[0] < 2:
        raise ValueError("kernel width needs at least two markers")
    d = np.hypot(pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1])
    np.fill_diagonal(d, np.inf)
    return float(d.min(axis=1).mean())


def density_map(markers: MarkerSet | np.ndarray, h: float, spec: GridSpec) -> DensityGrid:
    """Gaussian kernel density of marker centroids on the grid.

    Evaluates (1/M) * sum_m exp(-|p - p_m|^2 / (2 h^2)) / (sqrt(2 pi) h^2),
    with the prefactor kept in exactly that form: every decision downstream
    is invariant to the overall density scale.
    """
    pos = markers.positions if isinstance(markers, MarkerSet) else np.asarray(markers, dtype=float)
    if pos.shape[0] == 0:
        raise ValueError("density map needs at least one marker")
    if h <= 0:
        raise ValueError("kernel width must be positive")
    xs = spec.xs
    ys = spec.ys
    dx2 = (xs[None, :] - pos[:, 0, None]) ** 2  # (M, nx)
    dy2 = (ys[None, :] - pos[:, 1, None]) ** 2  # (M, ny)
    inv = 1.0 / (2.0 * h * h)
    ex = np.exp(-dx2 * inv)
    ey = np.exp(-dy2 * inv)
    values = np.einsum("my,mx->yx", ey, ex)
    values *= 1.0 / (pos.shape[0] * SQRT_2PI * h * h)
    return DensityGrid(values=values, spec=spec, kernel_width=h)


def contact_estimate(
    density: DensityGrid, baseline: DensityGrid, contact_factor: float = 0.6
) -> ContactEstimate:
    """Contact when the density minimum dips below the scaled baseline minimum.

    The contact center is the grid argmin (ties: lowest y, then x); the area
    counts cells below the scaled baseline cell-by-cell.
    """
    if density.values.shape != baseline.values.shape:
        raise ValueError("density grids must be congruent")
    if not 0.0 < contact_factor < 1.0:
        raise ValueError("contact_factor must lie in (0, 1)")
    vals = density.values
    is_contact = bool(vals.min() < contact_factor * baseline.values.min())
    if not is_contact:
        return ContactEstimate(is_contact=False)
    flat = int(np.argmin(vals))  # C order: lowest y wins, then lowest x
    iy, ix = divmod(flat, vals.shape[1])
    center = (float(density.spec.xs[ix]), float(density.spec.ys[iy]))
    below = vals < contact_factor * baseline.values
    area = float(below.sum()) * density.spec.step**2
    return ContactEstimate(is_contact=True, center=center, contact_area=area)


def detect_slip(prev: SlipState, estimate: ContactEstimate, threshold: float = 3.0) -> SlipState:
    """Slip when both frames held contact and the center jumped past threshold."""
    if threshold <= 0:
        raise ValueError("slip threshold must be positive")
    if not estimate.is_contact:
        return SlipState(is_contact=False)
    if not prev.is_contact or prev.center is None:
        return SlipState(is_contact=True, center=estimate.center)
    disp = math.hypot(
        estimate.center[0] - prev.center[0], estimate.center[1] - prev.center[1]
    )
    return SlipState(
        is_contact=True,
        is_slip=disp > threshold,
        center=estimate.center,
        displacement=disp,
    )


def _window_sums(img: np.ndarray, win: int) -> np.ndarray:
    """Sliding-window sums over all win x win windows (valid positions)."""
    c = np.zeros((img.shape[0] + 1, img.shape[1] + 1))
    np.cumsum(img, axis=0, out=c[1:, 1:])
    np.cumsum(c[1:, 1:], axis=1, out=c[1:, 1:])
    return c[win:, win:] - c[:-win, win:] - c[win:, :-win] + c[:-win, :-win]


def deformation(frame: np.ndarray, reference: np.ndarray, window: int = 8) -> float:
    """One minus the mean structural similarity over sliding windows.

    SSIM uses uniform windows (default 8x8, every valid position) and the
    standard constants C1=(0.01*255)^2, C2=(0.03*255)^2. Identical frames
    give exactly 0.
    """
    frame = np.asarray(frame, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if frame.shape != reference.shape:
        raise ValueError("frames must be congruent")
    if min(frame.shape) < window:
        raise ValueError("frames smaller than the SSIM window")
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    n = float(window * window)
    mu1 = _window_sums(frame, window) / n
    mu2 = _window_sums(reference, window) / n
    e11 = _window_sums(frame * frame, window) / n
    e22 = _window_sums(reference * reference, window) / n
    e12 = _window_sums(frame * reference, window) / n
    var1 = e11 - mu1 * mu1
    var2 = e22 - mu2 * mu2
    cov = e12 - mu1 * mu2
    ssim_map = ((2.0 * mu1 * mu2 + c1) * (2.0 * cov + c2)) / (
        (mu1 * mu1 + mu2 * mu2 + c1) * (var1 + var2 + c2)
    )
    return float(1.0 - ssim_map.mean())


def force_from_deformation(d: float, cal: Calibration) -> float:
    """Contact force from the deformation proxy via the linear calibration."""
    if not 0.0 <= d <= 1.0:
        raise ValueError("deformation must lie in [0, 1]")
    return cal.force_slope * d
