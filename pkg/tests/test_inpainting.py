from fractions import Fraction

import numpy as np
import pytest

from craquelure.inpainting import (
    DiffusionConfig,
    ad_fill,
    ad_fill_float,
    fill,
    mtm_fill,
    time_fill,
)


def half_up(mean: Fraction) -> int:
    return (mean + Fraction(1, 2)).__floor__()


def mtm_oracle(image, mask):
    """Pass-by-pass reference fill with exact rational means."""
    img = image.astype(np.int64).copy()
    crack = mask.copy()
    h, w = mask.shape
    channels = 1 if image.ndim == 2 else image.shape[2]
    while crack.any():
        snapshot = img.copy()
        known = ~crack
        updates = []
        for y in range(h):
            for x in range(w):
                if not crack[y, x]:
                    continue
                neigh = [
                    (y + dy, x + dx)
                    for dy in (-1, 0, 1)
                    for dx in (-1, 0, 1)
                    if (dy, dx) != (0, 0)
                    and 0 <= y + dy < h
                    and 0 <= x + dx < w
                    and known[y + dy, x + dx]
                ]
                if not neigh:
                    continue
                if channels == 1:
                    val = half_up(Fraction(sum(int(snapshot[p]) for p in neigh), len(neigh)))
                else:
                    val = [
                        half_up(Fraction(sum(int(snapshot[p][c]) for p in neigh), len(neigh)))
                        for c in range(channels)
                    ]
                updates.append((y, x, val))
        for y, x, val in updates:
            img[y, x] = val
            crack[y, x] = False
    return img.astype(np.uint8)


def ad_scalar_trace(center, neighbor, lam, kappa, iterations):
    """Closed-form recurrence for one crack pixel with 4 equal fixed neighbors."""
    v = float(center)
    history = []
    for _ in range(iterations):
        d = neighbor - v
        c = 1.0 / (1.0 + (abs(d) / kappa) ** 2)
        v = v + lam * 4.0 * c * d
        history.append(v)
    return history


class TestDiffusionConfig:
    def test_defaults(self):
        cfg = DiffusionConfig()
        assert cfg.lam == 0.25
        assert cfg.kappa == 127.0
        assert cfg.iterations == 20

    @pytest.mark.parametrize("kwargs", [
        {"lam": 0.0}, {"lam": 0.3}, {"lam": -0.1},
        {"kappa": 0.0}, {"kappa": -5.0}, {"iterations": -1},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            DiffusionConfig(**kwargs)


class TestMtmFill:
    def test_single_pixel_uniform_neighbors(self):
        img = np.full((3, 3), 100, dtype=np.uint8)
        img[1, 1] = 0
        mask = np.zeros((3, 3), dtype=bool)
        mask[1, 1] = True
        assert mtm_fill(img, mask)[1, 1] == 100

    def test_half_up_rounding(self):
        # neighbors 0,0,0,0,255,255,255,255 -> mean 127.5 -> 128
        img = np.zeros((3, 3), dtype=np.uint8)
        img[0] = [0, 0, 0]
        img[1] = [0, 7, 255]
        img[2] = [0, 255, 255]
        img[1, 0] = 255
        mask = np.zeros((3, 3), dtype=bool)
        mask[1, 1] = True
        out = mtm_fill(img, mask)
        neigh = [img[0, 0], img[0, 1], img[0, 2], img[1, 0], img[1, 2],
                 img[2, 0], img[2, 1], img[2, 2]]
        assert sorted(int(v) for v in neigh) == [0, 0, 0, 0, 255, 255, 255, 255]
        assert out[1, 1] == 128

    def test_three_wide_band_two_pass_trace(self):
        img = np.zeros((5, 9), dtype=np.uint8)
        img[:, :3] = 60
        img[:, 6:] = 180
        img[:, 3:6] = 0
        mask = np.zeros((5, 9), dtype=bool)
        mask[:, 3:6] = True
        out = mtm_fill(img, mask)
        oracle = mtm_oracle(img, mask)
        assert np.array_equal(out, oracle)
        # outer columns come from pass 1, the center from pass-1 results
        assert (out[:, 3] != 0).all() and (out[:, 5] != 0).all() and (out[:, 4] != 0).all()

    def test_all_crack_mask_rejected(self):
        img = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(ValueError, match="no boundary"):
            mtm_fill(img, np.ones((4, 4), dtype=bool))

    def test_identity_off_mask(self):
        rng = np.random.default_rng(4)
        img = rng.integers(0, 256, (12, 12, 3)).astype(np.uint8)
        mask = rng.random((12, 12)) < 0.3
        out = mtm_fill(img, mask)
        assert np.array_equal(out[~mask], img[~mask])

    def test_matches_oracle_random(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            img = rng.integers(0, 256, (16, 16)).astype(np.uint8)
            mask = rng.random((16, 16)) < rng.uniform(0.05, 0.4)
            assert np.array_equal(mtm_fill(img, mask), mtm_oracle(img, mask))

    def test_matches_oracle_rgb(self):
        rng = np.random.default_rng(18)
        for _ in range(5):
            img = rng.integers(0, 256, (10, 10, 3)).astype(np.uint8)
            mask = rng.random((10, 10)) < 0.3
            assert np.array_equal(mtm_fill(img, mask), mtm_oracle(img, mask))

    def test_single_anchor_pixel_fills_everything(self):
        img = np.zeros((6, 6), dtype=np.uint8)
        img[0, 0] = 200
        mask = np.ones((6, 6), dtype=bool)
        mask[0, 0] = False
        out = mtm_fill(img, mask)
        assert (out == 200).all()

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mtm_fill(np.zeros((4, 4), dtype=np.uint8), np.zeros((3, 3), dtype=bool))


class TestAdFill:
    def test_constant_image_identity(self):
        img = np.full((8, 8), 150, dtype=np.uint8)
        mask = np.zeros((8, 8), dtype=bool)
        mask[2:6, 2:6] = True
        assert np.array_equal(ad_fill(img, mask), img)

    def test_zero_iterations_identity(self):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, (8, 8)).astype(np.uint8)
        mask = rng.random((8, 8)) < 0.4
        cfg = DiffusionConfig(iterations=0)
        assert np.array_equal(ad_fill(img, mask, cfg), img)

    def test_single_pixel_one_iteration(self):
        img = np.full((5, 5), 200, dtype=np.uint8)
        img[2, 2] = 0
        mask = np.zeros((5, 5), dtype=bool)
        mask[2, 2] = True
        cfg = DiffusionConfig(iterations=1)
        fl = ad_fill_float(img, mask, cfg)
        c = 1.0 / (1.0 + (200.0 / 127.0) ** 2)
        assert fl[2, 2] == pytest.approx(0.25 * 4.0 * c * 200.0, abs=1e-12)
        out = ad_fill(img, mask, cfg)
        assert out[2, 2] == 57  # 57.47 rounds half-up to 57

    def test_scalar_recurrence_twenty_iterations(self):
        img = np.full((5, 5), 200, dtype=np.uint8)
        img[2, 2] = 0
        mask = np.zeros((5, 5), dtype=bool)
        mask[2, 2] = True
        trace = ad_scalar_trace(0.0, 200.0, 0.25, 127.0, 20)
        for k in range(1, 21):
            fl = ad_fill_float(img, mask, DiffusionConfig(iterations=k))
            assert fl[2, 2] == pytest.approx(trace[k - 1], abs=1e-9)

    def test_identity_off_mask(self):
        rng = np.random.default_rng(6)
        img = rng.integers(0, 256, (10, 10, 3)).astype(np.uint8)
        mask = rng.random((10, 10)) < 0.3
        out = ad_fill(img, mask)
        assert np.array_equal(out[~mask], img[~mask])

    def test_maximum_principle(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            img = rng.integers(0, 256, (12, 12)).astype(np.uint8)
            mask = rng.random((12, 12)) < 0.4
            out = ad_fill(img, mask)
            assert out.min() >= img.min()
            assert out.max() <= img.max()

    def test_border_crack_pixels_get_zero_flux_from_outside(self):
        # corner crack pixel: off-image directions contribute nothing
        img = np.full((3, 3), 100, dtype=np.uint8)
        img[0, 0] = 0
        mask = np.zeros((3, 3), dtype=bool)
        mask[0, 0] = True
        fl = ad_fill_float(img, mask, DiffusionConfig(iterations=1))
        d = 100.0
        c = 1.0 / (1.0 + (d / 127.0) ** 2)
        assert fl[0, 0] == pytest.approx(0.25 * 2.0 * c * d, abs=1e-12)


class TestFillDispatch:
    def test_empty_mask_identity_both_methods(self):
        rng = np.random.default_rng(9)
        img = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
        empty = np.zeros((8, 8), dtype=bool)
        for method in ("mtm", "ad"):
            assert np.array_equal(fill(img, empty, method), img)

    def test_dispatch_matches_direct_calls(self):
        rng = np.random.default_rng(10)
        img = rng.integers(0, 256, (10, 10)).astype(np.uint8)
        mask = rng.random((10, 10)) < 0.25
        assert np.array_equal(fill(img, mask, "mtm"), mtm_fill(img, mask))
        assert np.array_equal(fill(img, mask, "ad"), ad_fill(img, mask, DiffusionConfig()))

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            fill(np.zeros((4, 4), dtype=np.uint8), np.zeros((4, 4), dtype=bool), "magic")

    def test_per_channel_independence(self):
        rng = np.random.default_rng(12)
        base = rng.integers(0, 256, (10, 10)).astype(np.uint8)
        mask = np.zeros((10, 10), dtype=bool)
        mask[4:6, 4:6] = True
        rgb = np.stack([base, base.copy(), base.copy()], axis=-1)
        rgb[mask, 0] = 5  # only red differs across the crack
        for method in ("mtm", "ad"):
            out_rgb = fill(rgb, mask, method)
            out_single = fill(base, mask, method)
            assert np.array_equal(out_rgb[..., 1], out_single)
            assert np.array_equal(out_rgb[..., 2], out_single)

    def test_time_fill(self):
        rng = np.random.default_rng(13)
        img = rng.integers(0, 256, (16, 16)).astype(np.uint8)
        mask = rng.random((16, 16)) < 0.2
        out, seconds = time_fill(img, mask, "ad")
        assert seconds > 0.0
        assert np.array_equal(out, fill(img, mask, "ad"))

    def test_fill_budget_full_size_both_structuring_elements(self):
        # both SE-derived masks complete well under the 30 s/image budget
        # at the default 598x375 working size
        from craquelure.morphology import DetectorConfig, detect, disk2, square3
        from craquelure.synthesis import CrackSpec, generate_triplet, procedural_painting

        painting = procedural_painting(31, target_size=(598, 375), scale=3.6)
        triplet = generate_triplet(painting, CrackSpec(seed=310))
        for se in (disk2(), square3()):
            mask = detect(triplet.damaged, DetectorConfig(se=se))
            for method in ("ad", "mtm"):
                _, seconds = time_fill(triplet.damaged, mask, method)
                assert seconds < 30.0
