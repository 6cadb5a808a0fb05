"""Synthetic marker-pad sensor: ground-truth marker motion and frame render.

The fingertip sensor is modeled as a 2D membrane carrying bright markers on a
dark background. An indentation pushes markers radially away from its center
with a smooth falloff, thinning marker density there; rendered frames feed
the perception pipeline and double as its ground-truth oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Rendered discs carry a 1 px anti-aliasing ramp placed so that binarizing at
# the default intensity threshold (180) recovers the nominal disc area
# (calibrated empirically on the default layout: +2.3% at 0.75).
EDGE_BIAS = 0.75

# Contact halo: the pressed pad region brightens with depth, far below the
# marker threshold so binarization and detection never see it.
HALO_GAIN = 150.0


def hex_positions(rings: int = 4, pitch: float = 24.0, center: tuple[float, float] = (120.0, 120.0)) -> np.ndarray:
    """Hexagonal marker lattice: 1 + 3*rings*(rings+1) points, NN distance = pitch."""
    cx, cy = center
    pts = []
    for q in range(-rings, rings + 1):
        for r_ in range(-rings, rings + 1):
            s = -q - r_
            if max(abs(q), abs(r_), abs(s)) > rings:
                continue
            x = cx + pitch * (q + r_ / 2.0)
            y = cy + pitch * (r_ * math.sqrt(3.0) / 2.0)
            pts.append((x, y))
    return np.array(pts, dtype=float)


def default_positions(jitter: float = 2.0, seed: int = 0) -> np.ndarray:
    """Default sensor field: jittered hex lattice.

    The jitter breaks the lattice periodicity; on a perfect lattice, radial
    displacement at certain depths lands inner markers onto outer markers'
    original spots, which makes image similarity non-monotone in depth.
    """
    pos = hex_positions()
    rng = np.random.default_rng(seed)
    return pos + rng.uniform(-jitter, jitter, pos.shape)


@dataclass(frozen=True)
class MarkerLayout:
    """Marker field geometry of one sensor."""

    positions: np.ndarray = field(default_factory=default_positions)
    marker_radius: float = 4.0
    image_size: tuple[int, int] = (240, 240)  # (W, H)

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "positions", pos)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 4:
            raise ValueError("need at least 4 markers as an (M, 2) array")
        w, h = self.image_size
        m = self.marker_radius
        if (pos[:, 0] < m).any() or (pos[:, 0] > w - 1 - m).any():
            raise ValueError("marker outside image bounds (x)")
        if (pos[:, 1] < m).any() or (pos[:, 1] > h - 1 - m).any():
            raise ValueError("marker outside image bounds (y)")
        d = np.hypot(pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1])
        np.fill_diagonal(d, np.inf)
        if d.min() <= 2 * m:
            raise ValueError("markers overlap: min pairwise distance must exceed a diameter")

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    def to_dict(self) -> dict:
        return {
            "positions": self.positions.tolist(),
            "marker_radius": self.marker_radius,
            "image_size": list(self.image_size),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarkerLayout":
        return cls(
            positions=np.array(d["positions"], dtype=float),
            marker_radius=d.get("marker_radius", 4.0),
            image_size=tuple(d.get("image_size", (240, 240))),
        )


@dataclass(frozen=True)
class Indentation:
    """Pressing stimulus: center (px), unitless depth in [0, 1], reach radius (px)."""

    center: tuple[float, float] = (120.0, 120.0)
    depth: float = 0.0
    radius: float = 60.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.depth <= 1.0:
            raise ValueError("depth must lie in [0, 1]")
        if self.radius <= 0:
            raise ValueError("radius must be positive")


def _falloff(s: np.ndarray, kind: str) -> np.ndarray:
    if kind == "cos2":
        return np.cos(0.5 * math.pi * s) ** 2
    if kind == "linear":
        return 1.0 - s
    raise ValueError(f"unknown falloff {kind!r}")


def displace_markers(layout: MarkerLayout, ind: Indentation, falloff: str = "cos2") -> np.ndarray:
    """Push markers radially out of the indentation footprint.

    A marker at distance d < radius moves outward by depth*radius*g(d/radius)
    where g is a smooth monotone falloff with g(0)=1, g(1)=0. The marker at
    the exact center stays put (no radial direction by symmetry); markers
    outside the footprint are untouched.
    """
    pos = layout.positions.copy()
    if ind.depth == 0.0:
        return pos
    delta = pos - np.asarray(ind.center)
    dist = np.hypot(delta[:, 0], delta[:, 1])
    inside = (dist > 0.0) & (dist < ind.radius)
    if not inside.any():
        return pos
    s = dist[inside] / ind.radius
    magnitude = ind.depth * ind.radius * _falloff(s, falloff)
    pos[inside] += delta[inside] / dist[inside, None] * magnitude[:, None]
    return pos


def render_frame(
    markers: np.ndarray, layout: MarkerLayout, indentation: Indentation | None = None
) -> np.ndarray:
    """Draw bright anti-aliased discs on a black frame (uint8 H x W).

    Marker intensity is 255 in the core and ramps to 0 across one pixel at
    the rim; the ramp is biased by EDGE_BIAS so the standard threshold keeps
    the nominal disc area. A pressed pad additionally shows a dim halo over
    the contact footprint (area and brightness grow with depth, capped at
    HALO_GAIN, well under the binarization threshold). Out-of-bounds markers
    are clamped into the frame.
    """
    w, h = layout.image_size
    frame = np.zeros((h, w), dtype=np.uint8)
    if indentation is not None and indentation.depth > 0.0:
        cx, cy = indentation.center
        footprint = indentation.radius * (0.4 + 0.6 * indentation.depth)
        gx0 = max(int(math.floor(cx - footprint)), 0)
        gx1 = min(int(math.ceil(cx + footprint)), w - 1)
        gy0 = max(int(math.floor(cy - footprint)), 0)
        gy1 = min(int(math.ceil(cy + footprint)), h - 1)
        if gx0 <= gx1 and gy0 <= gy1:
            ys, xs = np.mgrid[gy0 : gy1 + 1, gx0 : gx1 + 1]
            s = np.clip(np.hypot(xs - cx, ys - cy) / footprint, 0.0, 1.0)
            glow = _falloff(s, "cos2") * HALO_GAIN * indentation.depth
            frame[gy0 : gy1 + 1, gx0 : gx1 + 1] = np.rint(glow).astype(np.uint8)
    r = layout.marker_radius
    reach = r + 1.0
    for mx, my in np.asarray(markers, dtype=float):
        mx = min(max(mx, 0.0), w - 1.0)
        my = min(max(my, 0.0), h - 1.0)
        x0 = max(int(math.floor(mx - reach)), 0)
        x1 = min(int(math.ceil(mx + reach)), w - 1)
        y0 = max(int(math.floor(my - reach)), 0)
        y1 = min(int(math.ceil(my + reach)), h - 1)
        ys, xs = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
        dist = np.hypot(xs - mx, ys - my)
        coverage = np.clip(r + EDGE_BIAS - dist, 0.0, 1.0)
        patch = np.rint(coverage * 255.0).astype(np.uint8)
        np.maximum(frame[y0 : y1 + 1, x0 : x1 + 1], patch, out=frame[y0 : y1 + 1, x0 : x1 + 1])
    return frame


@dataclass(frozen=True)
class SensorCoupling:
    """Maps a phalanx contact to an indentation on the fingertip sensor.

    Contact position along the distal phalanx (0 at the DIP joint, 1 at the
    tip) lands on a pixel span across the pad; penetration saturates at
    max_penetration into full depth.
    """

    max_penetration: float = 4.0  # mm of soft-skin travel mapped onto depth 1
    span_px: tuple[float, float] = (84.0, 156.0)  # along-phalanx window, inside the density grid
    cross_px: float = 120.0
    radius_px: float = 60.0

    def to_dict(self) -> dict:
        return {
            "max_penetration": self.max_penetration,
            "span_px": list(self.span_px),
            "cross_px": self.cross_px,
            "radius_px": self.radius_px,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SensorCoupling":
        return cls(
            max_penetration=d.get("max_penetration", 4.0),
            span_px=tuple(d.get("span_px", (60.0, 180.0))),
            cross_px=d.get("cross_px", 120.0),
            radius_px=d.get("radius_px", 60.0),
        )


def indentation_from_contact(
    penetration: float, along_fraction: float, coupling: SensorCoupling
) -> Indentation:
    """Turn a contact (penetration mm, position along the pad) into a stimulus."""
    if penetration < 0:
        raise ValueError("penetration must be >= 0")
    depth = min(max(penetration / coupling.max_penetration, 0.0), 1.0)
    lo, hi = coupling.span_px
    t = min(max(along_fraction, 0.0), 1.0)
    return Indentation(
        center=(lo + t * (hi - lo), coupling.cross_px),
        depth=depth,
        radius=coupling.radius_px,
    )


def write_pgm(path, frame: np.ndarray) -> None:
    """Binary PGM (P5, maxval 255)."""
    frame = np.asarray(frame, dtype=np.uint8)
    h, w = frame.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(frame.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError("not a binary PGM (P5) file")
    # header: magic, width, height, maxval, then raster
    fields = []
    idx = 2
    while len(fields) < 3:
        while idx < len(data) and data[idx : idx + 1].isspace():
            idx += 1
        if data[idx : idx + 1] == b"#":
            while data[idx : idx + 1] not in (b"\n", b""):
                idx += 1
            continue
        start = idx
        while idx < len(data) and not data[idx : idx + 1].isspace():
            idx += 1
        fields.append(int(data[start:idx]))
    idx += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError("only maxval 255 supported")
    raster = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=idx)
    return raster.reshape(h, w).copy()
