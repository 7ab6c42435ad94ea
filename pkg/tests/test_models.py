"""Tests for networks, losses, training loops, and their file formats."""

import numpy as np
import pytest

from spi3d.fringe_render import FringeImage
from spi3d.models import (
    DEEP_UNET,
    DiscriminatorConfig,
    PatchDiscriminator,
    TrainConfig,
    UNet,
    UNetConfig,
    infer_end_to_end,
    infer_two_stage,
    load_loss_curve,
    load_model,
    load_train_config,
    loss_discriminator,
    loss_generator,
    loss_unet,
    prepare_input,
    save_loss_curve,
    save_model,
    save_train_config,
    step_dropout_seed,
    train_end_to_end,
    train_two_stage,
)
from spi3d.scene_gen import DepthMap
from spi3d.tensor_engine import Tensor

F32 = np.float32


def rand_batch(rng, n, res):
    return rng.random((n, 1, res, res)).astype(F32)


class TestConfigs:
    def test_unet_resolution_must_divide(self):
        with pytest.raises(ValueError):
            UNetConfig(levels=4, resolution=60)

    def test_unet_levels_positive(self):
        with pytest.raises(ValueError):
            UNetConfig(levels=0)

    def test_unet_slope_range(self):
        with pytest.raises(ValueError):
            UNetConfig(leaky_slope=1.0)

    def test_encoder_channels_double_then_cap(self):
        cfg = UNetConfig(levels=6, base_channels=8, resolution=64)
        assert cfg.encoder_channels() == [8, 16, 32, 64, 64, 64]

    def test_discriminator_patch_below_resolution(self):
        # five stride-2 stages plus the scoring conv see 127 px
        with pytest.raises(ValueError):
            DiscriminatorConfig(layer_count=5, resolution=32)

    def test_discriminator_patch_and_map(self):
        cfg = DiscriminatorConfig(layer_count=3, resolution=64)
        assert cfg.patch_size == 31
        assert cfg.map_size == 8

    def test_train_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            TrainConfig(dropout=1.0)
        with pytest.raises(ValueError):
            TrainConfig(rate_mix=(1, 0, 2))
        with pytest.raises(ValueError):
            TrainConfig(rate_mix=(1, 1))


class TestPrepareInput:
    def test_isotropic_block_replication(self):
        lo = np.arange(4.0).reshape(2, 2)
        t = prepare_input(lo, 4)
        assert t.shape == (1, 1, 4, 4)
        assert t.dtype == np.float32
        expected = np.repeat(np.repeat(lo, 2, axis=0), 2, axis=1)
        assert np.array_equal(t.data[0, 0], expected.astype(F32))

    def test_anisotropic_factors(self):
        lo = np.ones((32, 64))
        assert prepare_input(lo, 64).shape == (1, 1, 64, 64)

    def test_non_divisible_rejected(self):
        with pytest.raises(ValueError):
            prepare_input(np.ones((48, 48)), 64)

    def test_rejects_non_2d(self):
        with pytest.raises(ValueError):
            prepare_input(np.ones((2, 4, 4)), 8)


class TestUNet:
    def test_hand_counted_parameters(self):
        # one 3x3 encoder conv (9+1), one 3x3 decoder conv (9+1),
        # one 1x1 head conv (1+1)
        net = UNet(UNetConfig(levels=1, base_channels=1, resolution=2), seed=0)
        assert net.parameter_count == 22

    def test_desk_scale_parameter_count(self):
        # enc: 80+1168+4640+18496; dec: 27680+6928+1736+584; head: 9
        net = UNet(UNetConfig(), seed=0)
        assert net.parameter_count == 61321

    def test_deep_preset_reaches_unit_bottleneck(self):
        assert DEEP_UNET.levels == 6
        assert DEEP_UNET.resolution >> DEEP_UNET.levels == 1
        net = UNet(DEEP_UNET, seed=0)
        out = net.forward(Tensor(np.zeros((1, 1, 64, 64), dtype=F32)))
        assert out.shape == (1, 1, 64, 64)
        assert np.isfinite(out.data).all()
        assert (0.0 < out.data).all() and (out.data < 1.0).all()

    def test_output_shape_and_range(self):
        rng = np.random.default_rng(0)
        net = UNet(UNetConfig(levels=2, resolution=16), seed=1)
        out = net.forward(Tensor(rand_batch(rng, 3, 16)))
        assert out.shape == (3, 1, 16, 16)
        assert (0.0 < out.data).all() and (out.data < 1.0).all()

    def test_rejects_wrong_channel_count(self):
        net = UNet(UNetConfig(levels=2, resolution=16), seed=0)
        with pytest.raises(ValueError):
            net.forward(Tensor(np.zeros((1, 2, 16, 16), dtype=F32)))

    def test_same_seed_same_init(self):
        a = UNet(UNetConfig(levels=2, resolution=16), seed=9)
        b = UNet(UNetConfig(levels=2, resolution=16), seed=9)
        for pa, pb in zip(a.parameters, b.parameters):
            assert np.array_equal(pa.data, pb.data)

    def test_eval_forward_is_deterministic(self):
        rng = np.random.default_rng(2)
        net = UNet(UNetConfig(levels=2, resolution=16), seed=0)
        x = Tensor(rand_batch(rng, 1, 16))
        assert np.array_equal(net.forward(x).data, net.forward(x).data)


class TestDiscriminator:
    def test_patch_score_map_shape(self):
        rng = np.random.default_rng(0)
        disc = PatchDiscriminator(DiscriminatorConfig(), seed=0)
        z = Tensor(rand_batch(rng, 2, 64))
        cand = Tensor(rand_batch(rng, 2, 64))
        assert disc.forward(z, cand).shape == (2, 1, 8, 8)

    def test_scores_are_unbounded(self):
        # least-squares labels need a linear head, not a sigmoid
        rng = np.random.default_rng(1)
        disc = PatchDiscriminator(DiscriminatorConfig(layer_count=2, resolution=16), seed=0)
        big = Tensor(100.0 * rand_batch(rng, 1, 16))
        scores = disc.forward(big, big)
        assert scores.data.min() < 0.0 or scores.data.max() > 1.0


class TestLosses:
    def test_unet_loss_identical_inputs_is_zero(self):
        rng = np.random.default_rng(0)
        x = Tensor(rand_batch(rng, 2, 8))
        assert loss_unet(x, Tensor(x.data.copy())).item() == 0.0

    def test_unet_loss_positive_for_different_inputs(self):
        rng = np.random.default_rng(1)
        a = Tensor(rand_batch(rng, 2, 8))
        b = Tensor(rand_batch(rng, 2, 8))
        assert loss_unet(a, b).item() > 0.0

    def test_generator_loss_perfect_case(self):
        rng = np.random.default_rng(2)
        real = Tensor(rand_batch(rng, 2, 8))
        ones = Tensor(np.ones((2, 1, 2, 2), dtype=F32))
        assert loss_generator(ones, Tensor(real.data.copy()), real).item() == 0.0

    def test_generator_loss_zero_scores_perfect_fringe(self):
        rng = np.random.default_rng(3)
        real = Tensor(rand_batch(rng, 2, 8))
        zeros = Tensor(np.zeros((2, 1, 2, 2), dtype=F32))
        assert loss_generator(zeros, Tensor(real.data.copy()), real).item() == 1.0

    def test_generator_loss_decomposes_with_frozen_scores(self):
        from spi3d.tensor_engine import mse, ssim, sub

        rng = np.random.default_rng(4)
        scores = Tensor(rng.normal(size=(2, 1, 2, 2)).astype(F32))
        fake = Tensor(rand_batch(rng, 2, 8))
        real = Tensor(rand_batch(rng, 2, 8))
        total = loss_generator(scores, fake, real).item()
        realism = mse(scores, Tensor(np.ones(scores.shape, dtype=F32))).item()
        fidelity = sub(1.0, ssim(fake, real, sample_axes=(1, 2, 3)).mean()).item()
        assert abs(total - (realism + 100.0 * fidelity)) < 1e-6

    def test_discriminator_loss_perfect_is_zero(self):
        ones = Tensor(np.ones((1, 1, 4, 4), dtype=F32))
        zeros = Tensor(np.zeros((1, 1, 4, 4), dtype=F32))
        assert loss_discriminator(ones, zeros).item() == 0.0

    def test_discriminator_loss_everywhere_half(self):
        halves = Tensor(np.full((1, 1, 4, 4), 0.5, dtype=F32))
        assert loss_discriminator(halves, Tensor(halves.data.copy())).item() == 0.5

    def test_batch_loss_matches_per_sample_mean(self):
        rng = np.random.default_rng(5)
        net = UNet(UNetConfig(levels=2, resolution=16), seed=0)
        xs, ys = rand_batch(rng, 4, 16), rand_batch(rng, 4, 16)
        batch = loss_unet(net.forward(Tensor(xs)), Tensor(ys)).item()
        singles = [
            loss_unet(net.forward(Tensor(xs[i : i + 1])), Tensor(ys[i : i + 1])).item()
            for i in range(4)
        ]
        assert abs(sum(singles) - 4.0 * batch) <= 1e-5 * max(1.0, abs(sum(singles)))


class TestGradientFlow:
    def test_all_parameters_receive_gradient(self):
        from spi3d.tensor_engine import zero_grads

        rng = np.random.default_rng(6)
        net = UNet(UNetConfig(levels=2, resolution=16), seed=3)
        for trial in range(5):
            xs, ys = rand_batch(rng, 2, 16), rand_batch(rng, 2, 16)
            zero_grads(net.parameters)
            pred = net.forward(Tensor(xs), training=True, dropout_p=0.5, seed=trial)
            loss_unet(pred, Tensor(ys)).backward()
            for p in net.parameters:
                assert p.grad is not None
                assert np.any(p.grad != 0.0)

    def test_discriminator_parameters_receive_gradient(self):
        from spi3d.tensor_engine import zero_grads

        rng = np.random.default_rng(7)
        disc = PatchDiscriminator(DiscriminatorConfig(layer_count=2, resolution=16), seed=0)
        z = Tensor(rand_batch(rng, 2, 16))
        fake = Tensor(rand_batch(rng, 2, 16))
        real = Tensor(rand_batch(rng, 2, 16))
        zero_grads(disc.parameters)
        loss_discriminator(disc.forward(z, real), disc.forward(z, fake)).backward()
        for p in disc.parameters:
            assert p.grad is not None
            assert np.any(p.grad != 0.0)


class TestTraining:
    def small_data(self, n=6, res=16, seed=0):
        rng = np.random.default_rng(seed)
        return rand_batch(rng, n, res), rand_batch(rng, n, res)

    def test_curve_rows_and_step_count(self):
        xs, ys = self.small_data()
        cfg = UNetConfig(levels=2, resolution=16)
        model, curve = train_end_to_end(xs, ys, cfg, TrainConfig(batch_size=4, seed=1), max_steps=5)
        assert [row[0] for row in curve] == [0, 1, 2, 3, 4]
        assert all(np.isfinite(row[2]) for row in curve)
        # 6 samples / batch 4 -> 2 steps per epoch
        assert [row[1] for row in curve] == [0, 0, 1, 1, 2]

    def test_epoch_budget_without_max_steps(self):
        xs, ys = self.small_data()
        cfg = UNetConfig(levels=2, resolution=16)
        tc = TrainConfig(batch_size=4, epochs=2, seed=1)
        _, curve = train_end_to_end(xs, ys, cfg, tc)
        assert len(curve) == 4

    def test_seeded_runs_bit_identical(self):
        xs, ys = self.small_data()
        cfg = UNetConfig(levels=2, resolution=16)
        tc = TrainConfig(batch_size=4, seed=7)
        m1, c1 = train_end_to_end(xs, ys, cfg, tc, max_steps=6)
        m2, c2 = train_end_to_end(xs, ys, cfg, tc, max_steps=6)
        assert c1 == c2
        for p1, p2 in zip(m1.parameters, m2.parameters):
            assert np.array_equal(p1.data, p2.data)

    def test_single_sample_single_step_records_initial_loss(self):
        xs, ys = self.small_data(n=1)
        cfg = UNetConfig(levels=2, resolution=16)
        tc = TrainConfig(batch_size=1, seed=5)
        reference = UNet(cfg, seed=tc.seed)
        pred = reference.forward(
            Tensor(xs), training=True, dropout_p=tc.dropout,
            seed=step_dropout_seed(tc.seed, 0),
        )
        expected = loss_unet(pred, Tensor(ys)).item()
        _, curve = train_end_to_end(xs, ys, cfg, tc, max_steps=1)
        assert curve == [(0, 0, expected)]

    def test_empty_split_rejected(self):
        cfg = UNetConfig(levels=2, resolution=16)
        empty = np.zeros((0, 1, 16, 16), dtype=F32)
        with pytest.raises(ValueError):
            train_end_to_end(empty, empty, cfg, TrainConfig())

    def test_two_stage_curves(self):
        rng = np.random.default_rng(8)
        lo = rand_batch(rng, 6, 16)
        fr = rand_batch(rng, 6, 16)
        dp = rand_batch(rng, 6, 16)
        cfg = UNetConfig(levels=2, resolution=16)
        dcfg = DiscriminatorConfig(layer_count=2, resolution=16)
        tc = TrainConfig(batch_size=4, seed=2)
        gen, disc, depth_net, curve, depth_curve = train_two_stage(
            lo, fr, dp, cfg, dcfg, cfg, tc, max_steps=3
        )
        assert len(curve) == 3 and len(depth_curve) == 3
        for row in curve:
            step, epoch, loss_d, loss_g, ssim_term = row
            assert np.isfinite([loss_d, loss_g, ssim_term]).all()
        assert isinstance(gen, UNet) and isinstance(depth_net, UNet)
        assert isinstance(disc, PatchDiscriminator)

    def test_two_stage_seeded_determinism(self):
        rng = np.random.default_rng(9)
        lo, fr, dp = (rand_batch(rng, 4, 16) for _ in range(3))
        cfg = UNetConfig(levels=2, resolution=16)
        dcfg = DiscriminatorConfig(layer_count=2, resolution=16)
        tc = TrainConfig(batch_size=2, seed=4)
        out1 = train_two_stage(lo, fr, dp, cfg, dcfg, cfg, tc, max_steps=3)
        out2 = train_two_stage(lo, fr, dp, cfg, dcfg, cfg, tc, max_steps=3)
        assert out1[3] == out2[3]
        assert out1[4] == out2[4]


class TestInference:
    def test_end_to_end_returns_depth_map(self):
        rng = np.random.default_rng(0)
        net = UNet(UNetConfig(levels=2, resolution=16), seed=0)
        lo = rng.random((8, 8))
        depth = infer_end_to_end(net, lo)
        assert isinstance(depth, DepthMap)
        assert depth.values.shape == (16, 16)
        assert (0.0 <= depth.values).all() and (depth.values <= 1.0).all()

    def test_end_to_end_deterministic(self):
        rng = np.random.default_rng(1)
        net = UNet(UNetConfig(levels=2, resolution=16), seed=0)
        lo = rng.random((16, 16))
        a = infer_end_to_end(net, lo)
        b = infer_end_to_end(net, lo)
        assert np.array_equal(a.values, b.values)

    def test_two_stage_returns_fringe_and_depth(self):
        rng = np.random.default_rng(2)
        gen = UNet(UNetConfig(levels=2, resolution=16), seed=0)
        depth_net = UNet(UNetConfig(levels=2, resolution=16), seed=1)
        fringe, depth = infer_two_stage(gen, depth_net, rng.random((8, 16)))
        assert isinstance(fringe, FringeImage)
        assert isinstance(depth, DepthMap)
        assert fringe.values.shape == (16, 16)
        assert depth.values.shape == (16, 16)


class TestModelCheckpoints:
    def test_round_trip(self, tmp_path):
        cfg = UNetConfig(levels=2, resolution=16)
        src = UNet(cfg, seed=11)
        path = tmp_path / "unet.ckpt"
        save_model(path, src)
        dst = load_model(path, UNet(cfg, seed=99))
        for name, tensor in src.named_parameters().items():
            assert np.array_equal(dst.named_parameters()[name].data, tensor.data)

    def test_topology_name_mismatch(self, tmp_path):
        path = tmp_path / "unet.ckpt"
        save_model(path, UNet(UNetConfig(levels=2, resolution=16), seed=0))
        with pytest.raises(ValueError):
            load_model(path, UNet(UNetConfig(levels=3, resolution=16), seed=0))

    def test_topology_shape_mismatch(self, tmp_path):
        path = tmp_path / "unet.ckpt"
        save_model(path, UNet(UNetConfig(levels=2, base_channels=8, resolution=16), seed=0))
        with pytest.raises(ValueError):
            load_model(path, UNet(UNetConfig(levels=2, base_channels=4, resolution=16), seed=0))

    def test_discriminator_round_trip(self, tmp_path):
        cfg = DiscriminatorConfig(layer_count=2, resolution=16)
        src = PatchDiscriminator(cfg, seed=3)
        path = tmp_path / "disc.ckpt"
        save_model(path, src)
        dst = load_model(path, PatchDiscriminator(cfg, seed=77))
        for name, tensor in src.named_parameters().items():
            assert np.array_equal(dst.named_parameters()[name].data, tensor.data)


class TestTrainConfigFile:
    def test_round_trip(self, tmp_path):
        cfg = TrainConfig(learning_rate=3e-4, batch_size=4, epochs=7,
                          dropout=0.25, leaky_slope=0.1, rate_mix=(2, 3, 4), seed=12)
        path = tmp_path / "train.cfg"
        save_train_config(path, cfg)
        assert load_train_config(path) == cfg

    def test_exact_key_set(self, tmp_path):
        path = tmp_path / "train.cfg"
        save_train_config(path, TrainConfig())
        keys = [line.split("=", 1)[0] for line in path.read_text().splitlines()]
        assert keys == ["learning_rate", "batch_size", "epochs", "dropout",
                        "leaky_slope", "rate_mix", "seed"]

    def test_extra_key_rejected(self, tmp_path):
        path = tmp_path / "train.cfg"
        save_train_config(path, TrainConfig())
        path.write_text(path.read_text() + "momentum=0.9\n")
        with pytest.raises(ValueError):
            load_train_config(path)

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "train.cfg"
        save_train_config(path, TrainConfig())
        lines = [l for l in path.read_text().splitlines() if not l.startswith("seed=")]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError):
            load_train_config(path)


class TestLossCurveFile:
    def test_end_to_end_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = [(i, i // 3, float(rng.random())) for i in range(9)]
        path = tmp_path / "curve.csv"
        save_loss_curve(path, rows, ["step", "epoch", "loss"])
        header, loaded = load_loss_curve(path)
        assert header == ["step", "epoch", "loss"]
        assert loaded == rows

    def test_two_stage_header_trims_internal_fields(self, tmp_path):
        rows = [(0, 0, 0.5, 1.25, 0.9), (1, 0, 0.4, 1.5, 0.8)]
        path = tmp_path / "curve.csv"
        save_loss_curve(path, rows, ["step", "epoch", "loss_d", "loss_g"])
        header, loaded = load_loss_curve(path)
        assert header == ["step", "epoch", "loss_d", "loss_g"]
        assert loaded == [(0, 0, 0.5, 1.25), (1, 0, 0.4, 1.5)]
