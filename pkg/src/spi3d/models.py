"""Reconstruction networks and training loops.

Two approaches share one toolbox: an end-to-end U-Net that maps a
canonical-size low-res fringe tensor straight to depth, and a two-stage
pipeline where a conditional generator first super-resolves the fringe
(judged by a patch discriminator) and a second U-Net then retrieves depth
from the high-res fringe.

Encoders are stride-2 3x3 convs with leaky ReLU; decoders are nearest
upsample + 3x3 conv + ReLU with skip concatenation at matching scales
(the outermost decoder step has no skip); a 1x1 conv + sigmoid head emits
the [0, 1] image. No normalization layers anywhere. The desk-scale
default (4 levels, base 8) trains on a CPU in minutes; the deep preset
(6 levels) shrinks a 64 px input to a 1x1 bottleneck.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detector_sim import LowResFringe
from .fringe_render import FringeImage
from .scene_gen import DepthMap
from .tensor_engine import (
    OptimizerState,
    Tensor,
    adam_step,
    concat,
    conv2d,
    dropout,
    leaky_relu,
    load_checkpoint,
    mse,
    relu,
    save_checkpoint,
    sigmoid,
    ssim,
    sub,
    upsample_nearest,
    zero_grads,
)

GENERATOR_SSIM_WEIGHT = 100.0


# ── configs ──


@dataclass(frozen=True)
class UNetConfig:
    levels: int = 4
    base_channels: int = 8
    in_channels: int = 1
    out_channels: int = 1
    resolution: int = 64
    leaky_slope: float = 0.2

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if min(self.base_channels, self.in_channels, self.out_channels) < 1:
            raise ValueError("channel counts must be >= 1")
        if self.resolution % (1 << self.levels):
            raise ValueError(
                f"resolution {self.resolution} not divisible by 2^{self.levels}"
            )
        if not 0.0 <= self.leaky_slope < 1.0:
            raise ValueError(f"leaky slope must be in [0, 1), got {self.leaky_slope}")

    def encoder_channels(self) -> list[int]:
        return [min(self.base_channels << i, self.base_channels * 8) for i in range(self.levels)]


DEEP_UNET = UNetConfig(levels=6, base_channels=8)


@dataclass(frozen=True)
class DiscriminatorConfig:
    layer_count: int = 3
    base_channels: int = 8
    in_channels: int = 2  # condition + candidate, channel-concatenated
    resolution: int = 64
    leaky_slope: float = 0.2

    def __post_init__(self):
        if self.layer_count < 1 or self.base_channels < 1:
            raise ValueError("layer_count and base_channels must be >= 1")
        if self.resolution % (1 << self.layer_count):
            raise ValueError(
                f"resolution {self.resolution} not divisible by 2^{self.layer_count}"
            )
        if self.patch_size >= self.resolution:
            raise ValueError(
                f"patch size {self.patch_size} must stay below resolution {self.resolution}"
            )

    @property
    def patch_size(self) -> int:
        """Receptive field of one score-map cell in input pixels."""
        field, jump = 1, 1
        for _ in range(self.layer_count):  # 3x3 stride-2 stages
            field += 2 * jump
            jump *= 2
        return field + 2 * jump  # final 3x3 stride-1 scoring conv

    @property
    def map_size(self) -> int:
        return self.resolution >> self.layer_count


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 8
    epochs: int = 20
    dropout: float = 0.5
    leaky_slope: float = 0.2
    rate_mix: tuple[int, int, int] = (1, 1, 2)
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("learning_rate, batch_size and epochs must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if not 0.0 <= self.leaky_slope < 1.0:
            raise ValueError(f"leaky_slope must be in [0, 1), got {self.leaky_slope}")
        if len(self.rate_mix) != 3 or any(w <= 0 for w in self.rate_mix):
            raise ValueError("rate_mix must be three positive weights")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


_TRAIN_CONFIG_KEYS = (
    "learning_rate",
    "batch_size",
    "epochs",
    "dropout",
    "leaky_slope",
    "rate_mix",
    "seed",
)


def save_train_config(path: str | Path, cfg: TrainConfig) -> None:
    """Flat key=value file with exactly the training regimen parameters."""
    mix = ":".join(str(w) for w in cfg.rate_mix)
    lines = [
        f"learning_rate={cfg.learning_rate!r}",
        f"batch_size={cfg.batch_size}",
        f"epochs={cfg.epochs}",
        f"dropout={cfg.dropout!r}",
        f"leaky_slope={cfg.leaky_slope!r}",
        f"rate_mix={mix}",
        f"seed={cfg.seed}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_train_config(path: str | Path) -> TrainConfig:
    pairs = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line {line!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    if set(pairs) != set(_TRAIN_CONFIG_KEYS):
        raise ValueError(
            f"config must define exactly {sorted(_TRAIN_CONFIG_KEYS)}, got {sorted(pairs)}"
        )
    mix = tuple(int(w) for w in pairs["rate_mix"].split(":"))
    return TrainConfig(
        learning_rate=float(pairs["learning_rate"]),
        batch_size=int(pairs["batch_size"]),
        epochs=int(pairs["epochs"]),
        dropout=float(pairs["dropout"]),
        leaky_slope=float(pairs["leaky_slope"]),
        rate_mix=mix,
        seed=int(pairs["seed"]),
    )


# ── input preparation ──


def prepare_input(lowres, canonical: int) -> Tensor:
    """Nearest-replicate a low-res image up to canonical x canonical.

    Each axis is scaled by its own integer factor, so anisotropic low-res
    grids (tall windows, split pairs) land on the same square tensor.
    """
    values = lowres.values if isinstance(lowres, LowResFringe) else np.asarray(lowres)
    if values.ndim != 2:
        raise ValueError(f"low-res input must be 2-D, got shape {values.shape}")
    height, width = values.shape
    if canonical % height or canonical % width:
        raise ValueError(
            f"canonical size {canonical} not divisible by low-res dims {height}x{width}"
        )
    up = values.repeat(canonical // height, axis=0).repeat(canonical // width, axis=1)
    return Tensor(up[None, None].astype(np.float32))


# ── networks ──


def _init_conv(rng, out_ch, in_ch, k) -> tuple[np.ndarray, np.ndarray]:
    std = np.sqrt(2.0 / (in_ch * k * k))
    weight = rng.normal(0.0, std, size=(out_ch, in_ch, k, k)).astype(np.float32)
    bias = np.zeros((1, out_ch, 1, 1), dtype=np.float32)
    return weight, bias


class UNet:
    """Encoder-decoder with skip connections and a sigmoid head."""

    def __init__(self, cfg: UNetConfig, seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        chans = cfg.encoder_channels()

        self.enc = []
        in_ch = cfg.in_channels
        for out_ch in chans:
            w, b = _init_conv(rng, out_ch, in_ch, 3)
            self.enc.append((Tensor(w, requires_grad=True), Tensor(b, requires_grad=True)))
            in_ch = out_ch

        self.dec = []
        carried = chans[-1]
        for j in range(cfg.levels):
            skip_idx = cfg.levels - j - 2
            skip_ch = chans[skip_idx] if skip_idx >= 0 else 0
            out_ch = chans[skip_idx] if skip_idx >= 0 else cfg.base_channels
            w, b = _init_conv(rng, out_ch, carried + skip_ch, 3)
            self.dec.append((Tensor(w, requires_grad=True), Tensor(b, requires_grad=True)))
            carried = out_ch

        w, b = _init_conv(rng, cfg.out_channels, carried, 1)
        self.head = (Tensor(w, requires_grad=True), Tensor(b, requires_grad=True))

    def forward(self, x: Tensor, training: bool = False, dropout_p: float = 0.0,
                seed: int = 0) -> Tensor:
        if x.ndim != 4 or x.shape[1] != self.cfg.in_channels:
            raise ValueError(f"expected (B,{self.cfg.in_channels},H,W) input, got {x.shape}")
        skips = []
        h = x
        for w, b in self.enc:
            h = leaky_relu(conv2d(h, w, 2, 1) + b, self.cfg.leaky_slope)
            skips.append(h)
        h = skips[-1]
        for j, (w, b) in enumerate(self.dec):
            h = upsample_nearest(h, 2)
            skip_idx = len(self.dec) - j - 2
            if skip_idx >= 0:
                h = concat(h, skips[skip_idx])
            h = relu(conv2d(h, w, 1, 1) + b)
            if training and dropout_p > 0.0 and j < len(self.dec) - 1:
                h = dropout(h, dropout_p, True, seed + j)
        w, b = self.head
        return sigmoid(conv2d(h, w, 1, 0) + b)

    @property
    def parameters(self) -> list[Tensor]:
        out = []
        for w, b in self.enc + self.dec + [self.head]:
            out.extend((w, b))
        return out

    def named_parameters(self) -> dict[str, Tensor]:
        named = {}
        for i, (w, b) in enumerate(self.enc):
            named[f"enc{i}.weight"], named[f"enc{i}.bias"] = w, b
        for i, (w, b) in enumerate(self.dec):
            named[f"dec{i}.weight"], named[f"dec{i}.bias"] = w, b
        named["head.weight"], named["head.bias"] = self.head
        return named

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters)


class PatchDiscriminator:
    """Stacked stride-2 convs ending in a linear grid of patch scores."""

    def __init__(self, cfg: DiscriminatorConfig, seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        self.layers = []
        in_ch = cfg.in_channels
        for i in range(cfg.layer_count):
            out_ch = min(cfg.base_channels << i, cfg.base_channels * 8)
            w, b = _init_conv(rng, out_ch, in_ch, 3)
            self.layers.append((Tensor(w, requires_grad=True), Tensor(b, requires_grad=True)))
            in_ch = out_ch
        w, b = _init_conv(rng, 1, in_ch, 3)
        self.score = (Tensor(w, requires_grad=True), Tensor(b, requires_grad=True))

    def forward(self, condition: Tensor, candidate: Tensor) -> Tensor:
        h = concat(condition, candidate, axis=1)
        if h.shape[1] != self.cfg.in_channels:
            raise ValueError(
                f"condition+candidate give {h.shape[1]} channels, expected {self.cfg.in_channels}"
            )
        for w, b in self.layers:
            h = leaky_relu(conv2d(h, w, 2, 1) + b, self.cfg.leaky_slope)
        w, b = self.score
        return conv2d(h, w, 1, 1) + b

    @property
    def parameters(self) -> list[Tensor]:
        out = []
        for w, b in self.layers + [self.score]:
            out.extend((w, b))
        return out

    def named_parameters(self) -> dict[str, Tensor]:
        named = {}
        for i, (w, b) in enumerate(self.layers):
            named[f"disc{i}.weight"], named[f"disc{i}.bias"] = w, b
        named["score.weight"], named["score.bias"] = self.score
        return named


def save_model(path: str | Path, model) -> None:
    save_checkpoint(path, model.named_parameters())


def load_model(path: str | Path, model):
    """Load a checkpoint into a freshly built model; topology must match."""
    stored = load_checkpoint(path)
    named = model.named_parameters()
    if set(stored) != set(named):
        raise ValueError("checkpoint parameter names do not match model topology")
    for name, tensor in named.items():
        if stored[name].shape != tensor.data.shape:
            raise ValueError(
                f"checkpoint shape {stored[name].shape} != model shape "
                f"{tensor.data.shape} for {name}"
            )
        tensor.data = stored[name].astype(np.float32)
    return model


# ── losses ──


def _batch_ssim(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim == 4:
        return ssim(a, b, sample_axes=(1, 2, 3)).mean()
    return ssim(a, b)


def loss_unet(pred_depth: Tensor, real_depth: Tensor) -> Tensor:
    """Structural dissimilarity: 1 - SSIM, averaged per sample."""
    return sub(1.0, _batch_ssim(pred_depth, real_depth))


def loss_generator(disc_out: Tensor, gen_out: Tensor, real_fringe: Tensor) -> Tensor:
    """Least-squares realism term plus 100x structural fidelity term."""
    ones = Tensor(np.ones(disc_out.shape, dtype=np.float32))
    fidelity = sub(1.0, _batch_ssim(gen_out, real_fringe))
    return mse(disc_out, ones) + GENERATOR_SSIM_WEIGHT * fidelity


def loss_discriminator(score_real: Tensor, score_fake: Tensor) -> Tensor:
    """Least-squares patch labels: real -> 1, fake -> 0."""
    ones = Tensor(np.ones(score_real.shape, dtype=np.float32))
    zeros = Tensor(np.zeros(score_fake.shape, dtype=np.float32))
    return mse(score_real, ones) + mse(score_fake, zeros)


# ── training loops ──


def step_dropout_seed(base_seed: int, step: int) -> int:
    # Spread per-step dropout streams far apart while staying reproducible.
    return base_seed * 100_003 + step * 17


def _check_dataset(inputs: np.ndarray, targets: np.ndarray) -> int:
    if len(inputs) == 0:
        raise ValueError("training split is empty")
    if inputs.shape[0] != targets.shape[0]:
        raise ValueError("inputs and targets must pair up one-to-one")
    return inputs.shape[0]


def train_end_to_end(
    inputs: np.ndarray,
    targets: np.ndarray,
    unet_cfg: UNetConfig,
    train_cfg: TrainConfig,
    max_steps: int | None = None,
):
    """Train a U-Net on (low-res tensor, depth) pairs.

    inputs/targets are (N, 1, R, R) float arrays. Returns the model and
    the per-step loss curve as (step, epoch, loss) rows. max_steps, when
    given, overrides the epoch budget and keeps cycling shuffled epochs
    until that many optimizer steps have run.
    """
    n = _check_dataset(inputs, targets)
    model = UNet(unet_cfg, seed=train_cfg.seed)
    state = OptimizerState(train_cfg.learning_rate)
    rng = np.random.default_rng(train_cfg.seed)
    curve: list[tuple[int, int, float]] = []
    step = 0
    epoch = 0
    while True:
        order = rng.permutation(n)
        for start in range(0, n, train_cfg.batch_size):
            idx = order[start : start + train_cfg.batch_size]
            x = Tensor(inputs[idx].astype(np.float32))
            y = Tensor(targets[idx].astype(np.float32))
            pred = model.forward(
                x, training=True, dropout_p=train_cfg.dropout,
                seed=step_dropout_seed(train_cfg.seed, step),
            )
            loss = loss_unet(pred, y)
            zero_grads(model.parameters)
            loss.backward()
            adam_step(state, model.parameters)
            curve.append((step, epoch, loss.item()))
            step += 1
            if max_steps is not None and step >= max_steps:
                return model, curve
        epoch += 1
        if max_steps is None and epoch >= train_cfg.epochs:
            return model, curve


def train_two_stage(
    lowres_inputs: np.ndarray,
    hires_fringes: np.ndarray,
    depth_targets: np.ndarray,
    gen_cfg: UNetConfig,
    disc_cfg: DiscriminatorConfig,
    unet_cfg: UNetConfig,
    train_cfg: TrainConfig,
    max_steps: int | None = None,
):
    """Stage 1: adversarial fringe super-resolution. Stage 2: depth U-Net.

    Stage 1 alternates one discriminator update and one generator update
    per batch; its curve rows are (step, epoch, loss_d, loss_g,
    ssim_term). Stage 2 trains on ground-truth high-res fringes; the
    generated fringe is only used at inference.
    """
    n = _check_dataset(lowres_inputs, hires_fringes)
    _check_dataset(hires_fringes, depth_targets)
    gen = UNet(gen_cfg, seed=train_cfg.seed)
    disc = PatchDiscriminator(disc_cfg, seed=train_cfg.seed + 1)
    gen_state = OptimizerState(train_cfg.learning_rate)
    disc_state = OptimizerState(train_cfg.learning_rate)
    rng = np.random.default_rng(train_cfg.seed)
    curve: list[tuple[int, int, float, float, float]] = []
    step = 0
    epoch = 0
    done = False
    while not done:
        order = rng.permutation(n)
        for start in range(0, n, train_cfg.batch_size):
            idx = order[start : start + train_cfg.batch_size]
            z = Tensor(lowres_inputs[idx].astype(np.float32))
            real = Tensor(hires_fringes[idx].astype(np.float32))

            fake = gen.forward(
                z, training=True, dropout_p=train_cfg.dropout,
                seed=step_dropout_seed(train_cfg.seed, step),
            )

            zero_grads(disc.parameters)
            d_loss = loss_discriminator(
                disc.forward(z, real), disc.forward(z, fake.detach())
            )
            d_loss.backward()
            adam_step(disc_state, disc.parameters)

            zero_grads(gen.parameters)
            zero_grads(disc.parameters)
            ssim_term = sub(1.0, _batch_ssim(fake, real))
            g_loss = loss_generator(disc.forward(z, fake), fake, real)
            g_loss.backward()
            adam_step(gen_state, gen.parameters)

            curve.append((step, epoch, d_loss.item(), g_loss.item(), ssim_term.item()))
            step += 1
            if max_steps is not None and step >= max_steps:
                done = True
                break
        else:
            epoch += 1
            if max_steps is None and epoch >= train_cfg.epochs:
                done = True

    depth_net, depth_curve = train_end_to_end(
        hires_fringes, depth_targets, unet_cfg, train_cfg, max_steps=max_steps
    )
    return gen, disc, depth_net, curve, depth_curve


# ── inference ──


def infer_end_to_end(model: UNet, lowres) -> DepthMap:
    """Deterministic depth prediction from a low-res fringe image."""
    x = prepare_input(lowres, model.cfg.resolution)
    pred = model.forward(x, training=False)
    values = np.clip(pred.data[0, 0].astype(np.float64), 0.0, 1.0)
    return DepthMap(values)


def infer_two_stage(gen: UNet, depth_net: UNet, lowres) -> tuple[FringeImage, DepthMap]:
    """Super-resolved fringe plus the depth retrieved from it."""
    x = prepare_input(lowres, gen.cfg.resolution)
    fringe_pred = gen.forward(x, training=False)
    fringe_vals = np.clip(fringe_pred.data[0, 0].astype(np.float64), 0.0, 1.0)
    depth_pred = depth_net.forward(fringe_pred, training=False)
    depth_vals = np.clip(depth_pred.data[0, 0].astype(np.float64), 0.0, 1.0)
    return FringeImage(fringe_vals, kind="sinusoidal"), DepthMap(depth_vals)


# ── loss-curve I/O ──


def save_loss_curve(path: str | Path, rows: list, header: list[str]) -> None:
    """CSV with full-precision floats (step,epoch,loss[,loss_d,loss_g])."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [row[0], row[1], *(repr(float(v)) for v in row[2 : len(header)])]
            )


def load_loss_curve(path: str | Path) -> tuple[list[str], list[tuple]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [
            (int(r[0]), int(r[1]), *(float(v) for v in r[2:])) for r in reader
        ]
    return header, rows
