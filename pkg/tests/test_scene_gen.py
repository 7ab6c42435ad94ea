"""Tests for procedural scene generation and dataset manifests."""

import math

import numpy as np
import pytest

from spi3d.scene_gen import (
    DatasetManifest,
    DepthMap,
    SceneSpec,
    augment_pose,
    build_manifest,
    gen_scene,
)


class TestDepthMap:
    def test_rejects_non_2d(self):
        with pytest.raises(ValueError):
            DepthMap(np.zeros((8, 8, 3)))

    def test_rejects_small_dims(self):
        with pytest.raises(ValueError):
            DepthMap(np.zeros((4, 64)))

    def test_rejects_out_of_range(self):
        bad = np.zeros((8, 8))
        bad[0, 0] = 1.5
        with pytest.raises(ValueError):
            DepthMap(bad)

    def test_rejects_nan(self):
        bad = np.zeros((8, 8))
        bad[3, 3] = np.nan
        with pytest.raises(ValueError):
            DepthMap(bad)

    def test_dims(self):
        d = DepthMap(np.zeros((16, 32)))
        assert d.height == 16 and d.width == 32


class TestSceneSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            gen_scene(SceneSpec(kind="torus"), 64, 64)

    def test_bad_amplitude(self):
        with pytest.raises(ValueError):
            gen_scene(SceneSpec(kind="hemisphere", amplitude=0.0), 64, 64)
        with pytest.raises(ValueError):
            gen_scene(SceneSpec(kind="hemisphere", amplitude=1.5), 64, 64)

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            gen_scene(SceneSpec(kind="hemisphere", radius=-0.1), 64, 64)

    def test_bad_count(self):
        with pytest.raises(ValueError):
            gen_scene(SceneSpec(kind="composite", count=0), 64, 64)

    def test_bad_dims(self):
        with pytest.raises(ValueError):
            gen_scene(SceneSpec(kind="hemisphere"), 4, 64)


class TestHemisphere:
    def test_matches_pointwise_closed_form(self):
        # Independent per-pixel evaluation of a * sqrt(max(0, R^2 - rho^2)) / R.
        spec = SceneSpec(kind="hemisphere", center=(0.5, 0.5), radius=0.3, amplitude=0.8)
        got = gen_scene(spec, 64, 64).values
        cy, cx = 0.5 * 63, 0.5 * 63
        R = 0.3 * 64
        for r in range(64):
            for c in range(64):
                rho2 = (r - cy) ** 2 + (c - cx) ** 2
                want = 0.8 * math.sqrt(max(0.0, R * R - rho2)) / R
                assert got[r, c] == pytest.approx(want, abs=1e-12)

    def test_zero_outside_radius(self):
        spec = SceneSpec(kind="hemisphere", center=(0.5, 0.5), radius=0.1, amplitude=1.0)
        vals = gen_scene(spec, 64, 64).values
        assert vals[0, 0] == 0.0
        assert vals[0, 63] == 0.0


class TestGaussianBump:
    def test_peak_at_center_pixel(self):
        # center fraction 31/63 lands exactly on pixel (31, 31).
        f = 31 / 63
        spec = SceneSpec(kind="gaussian-bump", center=(f, f), radius=0.2, amplitude=0.7)
        vals = gen_scene(spec, 64, 64).values
        assert vals[31, 31] == pytest.approx(0.7, abs=1e-12)
        assert vals.argmax() == 31 * 64 + 31

    def test_radial_symmetry(self):
        f = 31 / 63
        spec = SceneSpec(kind="gaussian-bump", center=(f, f), radius=0.2, amplitude=0.7)
        vals = gen_scene(spec, 64, 64).values
        assert vals[31, 41] == pytest.approx(vals[31, 21], abs=1e-12)
        assert vals[41, 31] == pytest.approx(vals[21, 31], abs=1e-12)


class TestRamp:
    def test_angle_zero_is_column_gradient(self):
        spec = SceneSpec(kind="ramp", angle=0.0, amplitude=1.0)
        vals = gen_scene(spec, 32, 64).values
        cols = np.arange(64) / 63.0
        assert np.allclose(vals, np.broadcast_to(cols, (32, 64)), atol=1e-12)

    def test_angle_90_is_row_gradient(self):
        spec = SceneSpec(kind="ramp", angle=90.0, amplitude=0.5)
        vals = gen_scene(spec, 64, 32).values
        rows = 0.5 * np.arange(64) / 63.0
        assert np.allclose(vals, rows[:, None], atol=1e-12)

    def test_spans_zero_to_amplitude(self):
        for angle in (13.0, 45.0, 200.0, 301.5):
            vals = gen_scene(SceneSpec(kind="ramp", angle=angle, amplitude=0.9), 64, 64).values
            assert vals.min() == pytest.approx(0.0, abs=1e-12)
            assert vals.max() == pytest.approx(0.9, abs=1e-12)


class TestPolyhedral:
    def test_apex_at_center(self):
        f = 31 / 63
        spec = SceneSpec(kind="polyhedral-heightfield", center=(f, f), count=5, amplitude=0.8, seed=3)
        vals = gen_scene(spec, 64, 64).values
        assert vals[31, 31] == pytest.approx(0.8, abs=1e-12)
        assert vals.max() == pytest.approx(0.8, abs=1e-12)

    def test_seed_changes_facets(self):
        a = gen_scene(SceneSpec(kind="polyhedral-heightfield", seed=1), 64, 64).values
        b = gen_scene(SceneSpec(kind="polyhedral-heightfield", seed=2), 64, 64).values
        assert not np.array_equal(a, b)


class TestComposite:
    def test_deterministic(self):
        spec = SceneSpec(kind="composite", count=4, seed=11)
        a = gen_scene(spec, 64, 64).values
        b = gen_scene(spec, 64, 64).values
        assert np.array_equal(a, b)

    def test_range_property(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            spec = SceneSpec(
                kind="composite",
                count=int(rng.integers(1, 6)),
                amplitude=float(rng.uniform(0.3, 1.0)),
                seed=int(rng.integers(0, 1000)),
            )
            vals = gen_scene(spec, 64, 64).values
            assert np.isfinite(vals).all()
            assert vals.min() >= 0.0 and vals.max() <= 1.0


class TestDeterminism:
    def test_all_kinds_reproducible(self):
        for kind in ("gaussian-bump", "hemisphere", "ramp", "polyhedral-heightfield", "composite"):
            spec = SceneSpec(kind=kind, seed=42, angle=17.0)
            a = gen_scene(spec, 48, 80).values
            b = gen_scene(spec, 48, 80).values
            assert np.array_equal(a, b), kind


class TestAugmentPose:
    def test_count_one_is_identity(self):
        spec = SceneSpec(kind="hemisphere", angle=0.0)
        variants = augment_pose(spec, 1, seed=0)
        assert variants == [spec]

    def test_48_variants_step_7_5_degrees(self):
        spec = SceneSpec(kind="ramp", angle=0.0)
        variants = augment_pose(spec, 48, seed=0)
        assert len(variants) == 48
        angles = [v.angle for v in variants]
        assert angles == pytest.approx([7.5 * i for i in range(48)])

    def test_variant_zero_unjittered(self):
        spec = SceneSpec(kind="gaussian-bump", center=(0.4, 0.6))
        variants = augment_pose(spec, 8, seed=5)
        assert variants[0].center == (0.4, 0.6)

    def test_jitter_bounded(self):
        spec = SceneSpec(kind="gaussian-bump", center=(0.5, 0.5))
        for v in augment_pose(spec, 16, seed=9)[1:]:
            assert abs(v.center[0] - 0.5) <= 0.05 + 1e-12
            assert abs(v.center[1] - 0.5) <= 0.05 + 1e-12

    def test_deterministic(self):
        spec = SceneSpec(kind="composite", count=2)
        assert augment_pose(spec, 6, seed=3) == augment_pose(spec, 6, seed=3)

    def test_bad_count(self):
        with pytest.raises(ValueError):
            augment_pose(SceneSpec(kind="ramp"), 0, seed=0)


class TestBuildManifest:
    def _specs(self, n):
        return [SceneSpec(kind="hemisphere", seed=i) for i in range(n)]

    def test_split_624_at_085(self):
        m = build_manifest(self._specs(624), 0.85, seed=0)
        assert len(m.split_entries("train")) == 530
        assert len(m.split_entries("test")) == 94

    def test_split_single_spec(self):
        m = build_manifest(self._specs(1), 0.85, seed=0)
        assert len(m.split_entries("train")) == 0
        assert len(m.split_entries("test")) == 1

    def test_split_20_at_05_disjoint(self):
        m = build_manifest(self._specs(20), 0.5, seed=7)
        train = {e.scene_id for e in m.split_entries("train")}
        test = {e.scene_id for e in m.split_entries("test")}
        assert len(train) == 10 and len(test) == 10
        assert train.isdisjoint(test)
        assert train | test == {f"scene_{i:04d}" for i in range(20)}

    def test_ids_follow_original_order(self):
        specs = self._specs(10)
        m = build_manifest(specs, 0.5, seed=123)
        for e in m.entries:
            idx = int(e.scene_id.split("_")[1])
            assert e.spec == specs[idx]

    def test_shuffle_deterministic(self):
        a = build_manifest(self._specs(30), 0.8, seed=4)
        b = build_manifest(self._specs(30), 0.8, seed=4)
        assert [e.scene_id for e in a.entries] == [e.scene_id for e in b.entries]

    def test_rates_and_periods_follow_spec_order(self):
        rates = [0.5, 0.25, 0.0625, 0.25]
        periods = [6.0, 7.0, 8.0, 6.5]
        m = build_manifest(self._specs(4), 0.5, seed=2, rates=rates, periods=periods)
        for e in m.entries:
            idx = int(e.scene_id.split("_")[1])
            assert e.rate == rates[idx]
            assert e.period == periods[idx]

    def test_rejects_empty_and_bad_ratio(self):
        with pytest.raises(ValueError):
            build_manifest([], 0.5, seed=0)
        with pytest.raises(ValueError):
            build_manifest(self._specs(3), 1.0, seed=0)
        with pytest.raises(ValueError):
            build_manifest(self._specs(3), 0.5, seed=0, rates=[0.5])

    def test_json_round_trip(self, tmp_path):
        m = build_manifest(self._specs(12), 0.75, seed=9, rates=[0.25] * 12)
        path = tmp_path / "manifest.json"
        m.save(path)
        back = DatasetManifest.load(path)
        assert back == m
