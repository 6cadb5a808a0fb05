"""Synthetic sensor tests: marker displacement, rendering, contact coupling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tendonhand.tactile import (
    Indentation,
    MarkerLayout,
    SensorCoupling,
    displace_markers,
    hex_positions,
    indentation_from_contact,
    read_pgm,
    render_frame,
    write_pgm,
)

LAYOUT = MarkerLayout()


class TestLayout:
    def test_hex_count_and_pitch(self):
        pos = hex_positions(rings=4, pitch=24.0)
        assert pos.shape == (61, 2)
        d = np.hypot(pos[:, None, 0] - pos[None, :, 0], pos[:, None, 1] - pos[None, :, 1])
        np.fill_diagonal(d, np.inf)
        assert d.min() == pytest.approx(24.0, abs=1e-9)

    def test_rejects_overlapping_markers(self):
        with pytest.raises(ValueError):
            MarkerLayout(positions=np.array([(50, 50), (52, 50), (100, 100), (150, 150)], float))

    def test_rejects_out_of_bounds(self):
        with pytest.raises(ValueError):
            MarkerLayout(positions=np.array([(1, 50), (60, 50), (100, 100), (150, 150)], float))


class TestDisplacement:
    def test_zero_depth_no_motion(self):
        out = displace_markers(LAYOUT, Indentation(center=(120, 120), depth=0.0))
        assert np.array_equal(out, LAYOUT.positions)

    def test_center_marker_stays(self):
        # pure hex layout has a marker exactly at (120, 120)
        layout = MarkerLayout(positions=hex_positions())
        ind = Indentation(center=(120.0, 120.0), depth=1.0)
        out = displace_markers(layout, ind)
        idx = np.argmin(np.hypot(*(layout.positions - (120, 120)).T))
        assert tuple(out[idx]) == tuple(layout.positions[idx])

    def test_linear_falloff_half_radius(self):
        layout = MarkerLayout(
            positions=np.array([(150.0, 120.0), (60.0, 60.0), (60.0, 180.0), (180.0, 60.0)])
        )
        ind = Indentation(center=(120.0, 120.0), depth=1.0, radius=60.0)
        out = displace_markers(layout, ind, falloff="linear")
        # marker at distance R/2 moves outward by depth*R*g(1/2) = R/2
        assert out[0] == pytest.approx((180.0, 120.0))

    def test_marker_count_conserved(self):
        out = displace_markers(LAYOUT, Indentation(center=(100, 130), depth=0.7))
        assert out.shape == LAYOUT.positions.shape

    @given(st.floats(0.05, 1.0), st.floats(0.0, 2 * math.pi))
    @settings(max_examples=40)
    def test_rotation_about_center_commutes(self, depth, angle):
        center = np.array([120.0, 120.0])
        ind = Indentation(center=tuple(center), depth=depth, radius=40.0)
        rot = np.array(
            [[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]]
        )

        def rotate(pts):
            return (pts - center) @ rot.T + center

        base = MarkerLayout(positions=hex_positions(rings=2, pitch=24.0))
        rotated = MarkerLayout(positions=rotate(base.positions))
        lhs = displace_markers(rotated, ind)
        rhs = rotate(displace_markers(base, ind))
        assert np.max(np.abs(lhs - rhs)) < 1e-9

    def test_displacement_is_radial_and_outward(self):
        center = np.array([120.0, 120.0])
        ind = Indentation(center=tuple(center), depth=0.8)
        pos = LAYOUT.positions
        moved = displace_markers(LAYOUT, ind)
        d_before = pos - center
        d_after = moved - center
        r_before = np.hypot(*d_before.T)
        inside = (r_before > 0) & (r_before < ind.radius)
        cross = d_before[inside, 0] * d_after[inside, 1] - d_before[inside, 1] * d_after[inside, 0]
        assert np.max(np.abs(cross)) < 1e-9
        assert (np.hypot(*d_after.T)[inside] >= r_before[inside]).all()

    def test_mean_distance_monotone_in_depth(self):
        center = (120.0, 120.0)
        means = []
        for depth in np.linspace(0.0, 1.0, 6):
            out = displace_markers(LAYOUT, Indentation(center=center, depth=float(depth)))
            means.append(np.hypot(*(out - center).T).mean())
        assert all(b >= a - 1e-12 for a, b in zip(means, means[1:]))


class TestRender:
    def test_no_markers_all_dark(self):
        frame = render_frame(np.empty((0, 2)), LAYOUT)
        assert frame.shape == (240, 240)
        assert frame.max() == 0

    def test_single_disc_geometry(self):
        layout = MarkerLayout(
            positions=np.array([(20.0, 20.0), (100.0, 100.0), (200.0, 60.0), (60.0, 200.0)]),
            marker_radius=3.0,
        )
        frame = render_frame(layout.positions, layout)
        assert frame[20, 20] == 255
        assert frame[28, 20] == 0  # (x=20, y=28): row 28, col 20

    def test_deterministic(self):
        a = render_frame(LAYOUT.positions, LAYOUT)
        b = render_frame(LAYOUT.positions, LAYOUT)
        assert np.array_equal(a, b)


class TestCoupling:
    COUPLING = SensorCoupling()

    def test_zero_penetration(self):
        ind = indentation_from_contact(0.0, 0.5, self.COUPLING)
        assert ind.depth == 0.0

    def test_full_penetration_saturates(self):
        ind = indentation_from_contact(self.COUPLING.max_penetration, 0.5, self.COUPLING)
        assert ind.depth == 1.0
        beyond = indentation_from_contact(self.COUPLING.max_penetration * 3, 0.5, self.COUPLING)
        assert beyond.depth == 1.0

    def test_linear_midpoint(self):
        ind = indentation_from_contact(self.COUPLING.max_penetration / 2, 0.0, self.COUPLING)
        assert ind.depth == pytest.approx(0.5)
        assert ind.center == (self.COUPLING.span_px[0], self.COUPLING.cross_px)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            indentation_from_contact(-0.1, 0.5, self.COUPLING)


def test_pgm_round_trip(tmp_path):
    frame = render_frame(LAYOUT.positions, LAYOUT)
    path = tmp_path / "frame.pgm"
    write_pgm(path, frame)
    back = read_pgm(path)
    assert np.array_equal(frame, back)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n240 240\n255\n")
