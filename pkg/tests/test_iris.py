import math

import numpy as np
import pytest

from biokey import iris as ir
from synth import rasterize_circle, synthetic_eye


class TestCannyEdges:
    def test_constant_image_has_no_edges(self):
        img = np.full((40, 40), 90, dtype=np.uint8)
        assert not ir.canny_edges(img).any()

    def test_vertical_step_gives_single_pixel_line(self):
        img = np.full((40, 64), 40, dtype=np.uint8)
        img[:, 32:] = 200
        edges = ir.canny_edges(img, sigma=2.0, low=0.2, high=0.5)
        for row in edges:
            cols = np.nonzero(row)[0]
            assert len(cols) == 1
            assert abs(cols[0] - 31.5) <= 1.5  # within +-1 px of the step

    def test_weak_only_contour_dropped(self):
        # Strong step on the left half; isolated weak step on the right.
        # The weak one sits between the thresholds with no strong seed.
        img = np.full((40, 128), 40, dtype=np.uint8)
        img[:, 16:64] = 240
        img[:, 96:] = 120
        edges = ir.canny_edges(img, sigma=2.0, low=0.2, high=0.5)
        assert edges[:, :80].any()
        assert not edges[:, 80:].any()

    def test_weak_connected_to_strong_survives(self):
        # One contour whose gradient is strong in the top half only; the weak
        # bottom half is 8-connected to it and must be kept.
        img = np.full((60, 64), 40, dtype=np.uint8)
        img[:30, 32:] = 240
        img[30:, 32:] = 140
        edges = ir.canny_edges(img, sigma=1.0, low=0.2, high=0.6)
        assert edges[45, :].any()

    def test_threshold_ordering_enforced(self):
        with pytest.raises(ValueError):
            ir.canny_edges(np.zeros((8, 8), dtype=np.uint8), low=0.5, high=0.2)


class TestCircularHough:
    def test_recovers_single_circle(self):
        edges = rasterize_circle((100, 100), 50, 50, 30)
        c = ir.circular_hough(edges, 20, 40)
        assert abs(c.cx - 50) <= 1 and abs(c.cy - 50) <= 1 and abs(c.r - 30) <= 1

    def test_range_restriction_picks_inner_circle(self):
        edges = rasterize_circle((160, 160), 80, 80, 20)
        edges |= rasterize_circle((160, 160), 80, 80, 60)
        c = ir.circular_hough(edges, 15, 25)
        assert abs(c.r - 20) <= 1
        assert abs(c.cx - 80) <= 1 and abs(c.cy - 80) <= 1

    def test_empty_edge_map_raises(self):
        with pytest.raises(ir.CircleNotFoundError):
            ir.circular_hough(np.zeros((50, 50), dtype=np.uint8), 10, 20)

    def test_bad_range_rejected(self):
        edges = rasterize_circle((60, 60), 30, 30, 15)
        with pytest.raises(ValueError):
            ir.circular_hough(edges, 20, 10)

    def test_random_circles_within_one_pixel(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            r = rng.uniform(10, 45)
            cx = rng.uniform(50, 78)
            cy = rng.uniform(50, 78)
            edges = rasterize_circle((128, 128), cx, cy, r)
            c = ir.circular_hough(edges, 10, 46)
            assert abs(c.cx - cx) <= 1.0
            assert abs(c.cy - cy) <= 1.0
            assert abs(c.r - r) <= 1.0


class TestLocateBoundaries:
    def test_concentric_synthetic_eye(self):
        img = synthetic_eye()
        geom = ir.locate_boundaries(img, pupil_range=(15, 40), iris_range=(50, 90))
        assert abs(geom.pupil.r - 25) <= 2
        assert abs(geom.iris.r - 70) <= 2
        assert abs(geom.pupil.cx - 100) <= 2 and abs(geom.pupil.cy - 100) <= 2

    def test_blank_image_fails(self):
        with pytest.raises(ir.LocalizationError):
            ir.locate_boundaries(np.full((100, 100), 128, dtype=np.uint8),
                                 pupil_range=(10, 20), iris_range=(25, 40))

    def test_offset_pupil_recovered(self):
        img = synthetic_eye(cx=100, cy=100, r_pupil=25, r_iris=70)
        # redraw the pupil disc off-center by (5, 3)
        y, x = np.mgrid[0:200, 0:200].astype(np.float64)
        img = img.copy()
        img[np.hypot(x - 100, y - 100) <= 26] = 120
        img[np.hypot(x - 105, y - 103) <= 25] = 20
        geom = ir.locate_boundaries(img, pupil_range=(15, 40), iris_range=(50, 90))
        assert abs(geom.pupil.cx - 105) <= 2
        assert abs(geom.pupil.cy - 103) <= 2

    def test_geometry_invariants_enforced(self):
        with pytest.raises(ValueError):
            ir.IrisGeometry(pupil=ir.Circle(50, 50, 40), iris=ir.Circle(50, 50, 30))
        with pytest.raises(ValueError):
            ir.IrisGeometry(pupil=ir.Circle(0, 0, 10), iris=ir.Circle(90, 90, 30))


def eye_with_band(depth, **kw):
    """Synthetic eye whose top is occluded by a flat dark band reaching
    `depth` pixels below the top of the iris circle."""
    img = synthetic_eye(**kw)
    cy = kw.get("cy", 100.0)
    r_iris = kw.get("r_iris", 70.0)
    band_bottom = int(cy - r_iris + depth)
    img[:band_bottom, :] = 45
    return img, band_bottom


class TestIsolateEyelids:
    def test_unoccluded_eye_is_clean(self):
        img = synthetic_eye()
        geom = ir.locate_boundaries(img, pupil_range=(15, 40), iris_range=(50, 90))
        mask = ir.isolate_eyelids(img, geom)
        yy, xx = np.mgrid[0:200, 0:200]
        inside = np.hypot(xx - 100, yy - 100) <= 70
        assert not mask[inside].any()

    def test_band_across_top_is_masked(self):
        img, band_bottom = eye_with_band(depth=25)
        geom = ir.locate_boundaries(img, pupil_range=(15, 40), iris_range=(50, 90))
        mask = ir.isolate_eyelids(img, geom)
        yy, xx = np.mgrid[0:200, 0:200]
        inside = np.hypot(xx - 100, yy - 100) <= 70
        band = inside & (yy <= band_bottom - 2)
        assert mask[band].all()

    def test_half_occlusion_masks_at_least_45_percent(self):
        img, _ = eye_with_band(depth=70)  # down to the iris center
        geom = ir.locate_boundaries(img, pupil_range=(15, 40), iris_range=(50, 90))
        mask = ir.isolate_eyelids(img, geom)
        yy, xx = np.mgrid[0:200, 0:200]
        d = np.hypot(xx - 100, yy - 100)
        annulus = (d <= 70) & (d >= 25)
        frac = mask[annulus].sum() / annulus.sum()
        assert frac >= 0.45


class TestIsolateEyelashes:
    def test_zero_threshold_masks_nothing(self):
        img = np.full((20, 20), 7, dtype=np.uint8)
        assert not ir.isolate_eyelashes(img, 0).any()

    def test_threshold_255_masks_everything_below(self):
        img = np.full((20, 20), 254, dtype=np.uint8)
        assert ir.isolate_eyelashes(img, 255).all()

    def test_bimodal_masks_exactly_the_lashes(self):
        rng = np.random.default_rng(32)
        img = np.where(rng.random((30, 30)) < 0.3, 10, 120).astype(np.uint8)
        mask = ir.isolate_eyelashes(img, 50)
        assert np.array_equal(mask, (img == 10).astype(np.uint8))

    def test_threshold_range_validated(self):
        with pytest.raises(ValueError):
            ir.isolate_eyelashes(np.zeros((4, 4), dtype=np.uint8), 300)


def concentric_geometry(cx=100.0, cy=100.0, r_pupil=25.0, r_iris=70.0):
    return ir.IrisGeometry(pupil=ir.Circle(cx, cy, r_pupil),
                           iris=ir.Circle(cx, cy, r_iris))


class TestRubberSheet:
    def test_grid_endpoints_on_boundary_circles(self):
        geom = concentric_geometry()
        x, y = ir.rubber_sheet_grid(geom, 20, 240)
        d0 = np.hypot(x[0] - 100, y[0] - 100)
        d1 = np.hypot(x[-1] - 100, y[-1] - 100)
        assert np.max(np.abs(d0 - 25.0)) <= 0.5
        assert np.max(np.abs(d1 - 70.0)) <= 0.5

    def test_radial_gradient_rows_constant_and_linear(self):
        y, x = np.mgrid[0:200, 0:200].astype(np.float64)
        img = np.clip(np.hypot(x - 100, y - 100) * 2.0, 0, 255).astype(np.uint8)
        geom = concentric_geometry()
        norm = ir.normalize_rubber_sheet(img, geom, None, 20, 240)
        rows = norm.raster.astype(float)
        assert np.all(norm.valid == 1)
        # each row constant within one intensity step
        assert np.max(rows.max(axis=1) - rows.min(axis=1)) <= 1.0
        # row means climb linearly from 2*r_p to 2*r_i
        expected = 2.0 * (25.0 + (70.0 - 25.0) * np.arange(20) / 19.0)
        assert np.max(np.abs(rows.mean(axis=1) - expected)) <= 1.0

    def test_rotation_covariance_shifts_columns(self):
        angular = 240
        shift = 10
        delta = 2.0 * math.pi * shift / angular
        geom = concentric_geometry()
        y, x = np.mgrid[0:200, 0:200].astype(np.float64)
        theta = np.arctan2(y - 100, x - 100)

        def eye(angle_offset):
            img = 127.5 + 100.0 * np.sin(6.0 * (theta - angle_offset))
            return np.floor(np.clip(img, 0, 255) + 0.5).astype(np.uint8)

        base = ir.normalize_rubber_sheet(eye(0.0), geom, None, 20, angular)
        turned = ir.normalize_rubber_sheet(eye(delta), geom, None, 20, angular)
        rolled = np.roll(base.raster.astype(int), shift, axis=1)
        assert np.max(np.abs(turned.raster.astype(int) - rolled)) <= 2

    def test_out_of_bounds_samples_marked_invalid(self):
        geom = concentric_geometry(cx=30.0, cy=50.0, r_pupil=10.0, r_iris=40.0)
        img = np.full((100, 100), 128, dtype=np.uint8)
        norm = ir.normalize_rubber_sheet(img, geom, None, 10, 64)
        assert (norm.valid == 0).any()
        assert (norm.valid == 1).any()

    def test_noise_mask_propagates(self):
        img = np.full((200, 200), 128, dtype=np.uint8)
        noise = np.zeros((200, 200), dtype=np.uint8)
        noise[:100, :] = 1  # upper half masked
        geom = concentric_geometry()
        norm = ir.normalize_rubber_sheet(img, geom, noise, 10, 64)
        assert (norm.valid == 0).any() and (norm.valid == 1).any()
        # columns pointing straight down (theta = pi/2 -> column 16 of 64) stay valid
        assert norm.valid[:, 16].all()

    def test_resolution_bounds_checked(self):
        img = np.full((200, 200), 128, dtype=np.uint8)
        with pytest.raises(ValueError):
            ir.normalize_rubber_sheet(img, concentric_geometry(), None, 1, 64)
        with pytest.raises(ValueError):
            ir.normalize_rubber_sheet(img, concentric_geometry(), None, 10, 4)


class TestLogGabor:
    def test_gain_is_one_at_center_frequency(self):
        g = ir.log_gabor_gain(np.array([0.1]), 0.1, 0.5)
        assert g[0] == pytest.approx(1.0, abs=1e-12)

    def test_gain_at_twice_f0(self):
        g = ir.log_gabor_gain(np.array([0.2]), 0.1, 0.5)
        assert g[0] == pytest.approx(math.exp(-0.5), abs=1e-9)

    def test_gain_matches_closed_form_at_every_bin(self):
        size = 256
        f0, ratio = 1.0 / 18.0, 0.5
        freqs = np.arange(size) / size
        gains = ir.log_gabor_gain(freqs, f0, ratio)
        assert gains[0] == 0.0
        for k in range(1, size):
            f = k / size
            expected = math.exp(-(math.log(f / f0) ** 2) / (2.0 * math.log(ratio) ** 2))
            assert gains[k] == pytest.approx(expected, abs=1e-9)

    def test_constant_rows_give_zero_response(self):
        raster = np.full((4, 256), 173, dtype=np.uint8)  # power-of-two width
        norm = ir.NormalizedIris(raster=raster, valid=np.ones((4, 256), dtype=np.uint8))
        feats = ir.log_gabor_features(norm)
        assert np.max(np.abs(feats.i1)) < 1e-9
        assert np.max(np.abs(feats.i2)) < 1e-9

    def test_masked_samples_are_skipped(self):
        rng = np.random.default_rng(33)
        raster = rng.integers(0, 256, size=(4, 64), dtype=np.uint8)
        valid = (rng.random((4, 64)) < 0.7).astype(np.uint8)
        norm = ir.NormalizedIris(raster=raster, valid=valid)
        feats = ir.log_gabor_features(norm)
        assert len(feats.i1) == int(valid.sum())
        assert len(feats.i1) == len(feats.i2)

    def test_parameter_ranges_validated(self):
        norm = ir.NormalizedIris(raster=np.zeros((2, 16), dtype=np.uint8),
                                 valid=np.ones((2, 16), dtype=np.uint8))
        with pytest.raises(ValueError):
            ir.log_gabor_features(norm, f0=0.7)
        with pytest.raises(ValueError):
            ir.log_gabor_features(norm, sigma_ratio=1.5)


class TestIrisPipeline:
    def test_deterministic_on_sample(self, sample_eye_path):
        from biokey import imaging
        img = imaging.load_pgm(sample_eye_path)
        a, _ = ir.iris_pipeline(img)
        b, _ = ir.iris_pipeline(img)
        assert np.array_equal(a.i1, b.i1)
        assert np.array_equal(a.i2, b.i2)
        assert len(a.i1) >= 1
