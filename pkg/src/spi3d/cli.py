"""Command-line driver for the full simulation and reconstruction pipeline.

One binary with subcommands: gen-data, sample, train, eval, infer,
nyquist-demo, and compare-patterns. Parameters resolve flag-first, then
an optional key=value config file, then built-in defaults; every command
writes its fully resolved configuration to run_config.json in the output
directory, so identical config+seed reruns are byte-identical. Failures
print a single `error: ...` line on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .detector_sim import acquire, acquire_random, reorder, save_trace
from .fringe_render import NoiseSpec, ProjectionGeometry, add_noise, binarize, render_sinusoid
from .metrics import aggregate, evaluate, format_rate_table, format_report, rate_label, ssim_score
from .models import (
    DiscriminatorConfig,
    TrainConfig,
    UNet,
    UNetConfig,
    infer_end_to_end,
    infer_two_stage,
    load_model,
    prepare_input,
    save_loss_curve,
    save_model,
    save_train_config,
    train_end_to_end,
    train_two_stage,
)
from .pgm import read_pgm, write_depth_pgm, write_fringe_pgm
from .sampling import Window, check_nyquist, make_random_patterns, make_sequence, make_window
from .scene_gen import DatasetManifest, SceneSpec, build_manifest, gen_scene

RATE_MIX_RATES = (0.5, 0.25, 0.0625)


# ── parameter resolution ──


def _read_kv(path: str | Path) -> dict[str, str]:
    pairs = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line {line!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def _resolve(args, table: dict) -> dict:
    """Merge flag > config file > default for every key in the table."""
    file_cfg = _read_kv(args.config) if getattr(args, "config", None) else {}
    unknown = set(file_cfg) - set(table)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    resolved = {}
    for key, (cast, default) in table.items():
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_cfg:
            resolved[key] = cast(file_cfg[key])
        else:
            resolved[key] = default
    return resolved


def _choice(*options):
    def cast(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {options}, got {text!r}")
        return text

    return cast


def _parse_float_range(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"range must look like low:high, got {text!r}")
    low, high = (float(p) for p in parts)
    if low > high:
        raise ValueError(f"range low {low} exceeds high {high}")
    return low, high


def _parse_mix(text: str) -> tuple[int, int, int]:
    parts = tuple(int(p) for p in text.split(":"))
    if len(parts) != 3:
        raise ValueError(f"rate mix must have three weights, got {text!r}")
    return parts


def _parse_extents(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(","))


def _write_run_config(out_dir: Path, command: str, resolved: dict) -> None:
    doc = {"command": command, **resolved}
    text = json.dumps(doc, indent=2, sort_keys=True, default=list) + "\n"
    (out_dir / "run_config.json").write_text(text)


def _cells_for_rate(rate: float) -> int:
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"sampling rate must be in (0, 1], got {rate}")
    n = round(1.0 / rate)
    if abs(n * rate - 1.0) > 1e-9:
        raise ValueError(f"sampling rate {rate} is not 1/N for integer N")
    return n


def _require(resolved: dict, *keys) -> None:
    for key in keys:
        if resolved[key] is None:
            raise ValueError(f"--{key.replace('_', '-')} is required")


# ── gen-data ──


def cmd_gen_data(args) -> int:
    table = {
        "count": (int, None),
        "seed": (int, 0),
        "size": (int, 64),
        "order": (_choice("raster", "swirl"), "raster"),
        "rate": (float, None),
        "period": (float, None),
        "angle_range": (_parse_float_range, (13.0, 17.0)),
        "noise_range": (_parse_float_range, (0.04, 0.14)),
        "split_ratio": (float, 0.85),
        "out": (str, None),
    }
    cfg = _resolve(args, table)
    _require(cfg, "count", "out")
    if cfg["count"] < 1:
        raise ValueError(f"--count must be positive, got {cfg['count']}")
    size = cfg["size"]
    if size < 8 or size % 4:
        raise ValueError(f"--size must be a multiple of 4 and at least 8, got {size}")

    if cfg["rate"] is not None:
        rates = [cfg["rate"]] * cfg["count"]
    else:
        quarter = cfg["count"] // 4
        rates = (
            [RATE_MIX_RATES[0]] * quarter
            + [RATE_MIX_RATES[1]] * quarter
            + [RATE_MIX_RATES[2]] * (cfg["count"] - 2 * quarter)
        )
    for rate in set(rates):
        _cells_for_rate(rate)

    specs, periods, images = [], [], []
    for i, rate in enumerate(rates):
        rng = np.random.default_rng([cfg["seed"], i])
        spec = SceneSpec(kind="composite", count=3, seed=int(rng.integers(1 << 31)))
        period = cfg["period"] if cfg["period"] is not None else float(rng.uniform(6.0, 8.0))
        angle = float(rng.uniform(*cfg["angle_range"]))
        noise_seed = int(rng.integers(1 << 31))

        depth = gen_scene(spec, size, size)
        hi = render_sinusoid(depth, ProjectionGeometry(angle=angle, period=period))
        noisy = add_noise(
            binarize(hi), NoiseSpec(cfg["noise_range"][0], cfg["noise_range"][1], seed=noise_seed)
        )
        seq = make_sequence((size, size), make_window(_cells_for_rate(rate)), cfg["order"])
        lo = reorder(acquire(noisy, seq), seq, mode="rounded")
        specs.append(spec)
        periods.append(period)
        images.append((depth, hi, lo))

    manifest = build_manifest(specs, cfg["split_ratio"], cfg["seed"], rates, periods)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    by_id = {f"scene_{i:04d}": images[i] for i in range(len(images))}
    for entry in manifest.entries:
        depth, hi, lo = by_id[entry.scene_id]
        write_depth_pgm(out / entry.depth_path, depth.values)
        write_fringe_pgm(out / entry.fringe_hi_path, hi.values)
        write_fringe_pgm(out / entry.fringe_lo_path, lo.values)
    manifest.save(out / "manifest.json")
    _write_run_config(out, "gen-data", cfg)
    print(f"wrote {cfg['count']} scenes to {out}")
    return 0


# ── sample ──


def cmd_sample(args) -> int:
    table = {
        "scene": (str, None),
        "rate": (float, 0.25),
        "window": (_choice("rect", "split-pair"), "rect"),
        "order": (_choice("raster", "swirl"), "raster"),
        "mode": (_choice("rounded", "raw"), "rounded"),
        "out": (str, None),
    }
    cfg = _resolve(args, table)
    _require(cfg, "scene", "out")
    values, _ = read_pgm(cfg["scene"])
    n = _cells_for_rate(cfg["rate"])
    shape = "rect" if cfg["window"] == "rect" else "split_pair"
    window = make_window(n, shape=shape)
    seq = make_sequence(values.shape, window, cfg["order"])
    trace = acquire(values, seq, rate=cfg["rate"])
    lowres = reorder(trace, seq, mode=cfg["mode"])

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    save_trace(out / "trace.csv", trace)
    write_fringe_pgm(out / "lowres.pgm", lowres.values)
    seq.save(out / "sequence.json")
    _write_run_config(out, "sample", cfg)
    print(f"acquired {len(trace)} measurements -> {out}")
    return 0


# ── train ──


_TRAIN_TABLE = {
    "manifest": (str, None),
    "approach": (_choice("e2e", "two-stage"), "e2e"),
    "out": (str, None),
    "size": (int, 64),
    "levels": (int, 4),
    "base_channels": (int, 8),
    "disc_layers": (int, 3),
    "steps": (int, None),
    "learning_rate": (float, 1e-4),
    "batch_size": (int, 8),
    "epochs": (int, 20),
    "dropout": (float, 0.5),
    "leaky_slope": (float, 0.2),
    "rate_mix": (_parse_mix, (1, 1, 2)),
    "seed": (int, 0),
}


def _load_split_arrays(manifest_path: str | Path, split: str, size: int):
    manifest = DatasetManifest.load(manifest_path)
    entries = manifest.split_entries(split)
    if not entries:
        raise ValueError(f"manifest has no {split!r} entries")
    root = Path(manifest_path).parent
    lows, fringes, depths = [], [], []
    for entry in entries:
        lo, _ = read_pgm(root / entry.fringe_lo_path)
        hi, _ = read_pgm(root / entry.fringe_hi_path)
        depth, _ = read_pgm(root / entry.depth_path)
        if depth.shape != (size, size):
            raise ValueError(
                f"scene {entry.scene_id} is {depth.shape[0]}x{depth.shape[1]} "
                f"but size is {size}; pass --size {depth.shape[0]}"
            )
        lows.append(prepare_input(lo, size).data[0])
        fringes.append(hi[None].astype(np.float32))
        depths.append(depth[None].astype(np.float32))
    return entries, np.stack(lows), np.stack(fringes), np.stack(depths)


def cmd_train(args) -> int:
    cfg = _resolve(args, _TRAIN_TABLE)
    _require(cfg, "manifest", "out")
    train_cfg = TrainConfig(
        learning_rate=cfg["learning_rate"],
        batch_size=cfg["batch_size"],
        epochs=cfg["epochs"],
        dropout=cfg["dropout"],
        leaky_slope=cfg["leaky_slope"],
        rate_mix=tuple(cfg["rate_mix"]),
        seed=cfg["seed"],
    )
    unet_cfg = UNetConfig(
        levels=cfg["levels"],
        base_channels=cfg["base_channels"],
        resolution=cfg["size"],
        leaky_slope=cfg["leaky_slope"],
    )
    _, lows, fringes, depths = _load_split_arrays(cfg["manifest"], "train", cfg["size"])

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if cfg["approach"] == "e2e":
        model, curve = train_end_to_end(lows, depths, unet_cfg, train_cfg, max_steps=cfg["steps"])
        save_model(out / "unet.ckpt", model)
        save_loss_curve(out / "loss_curve.csv", curve, ["step", "epoch", "loss"])
        final = curve[-1][2]
    else:
        disc_cfg = DiscriminatorConfig(
            layer_count=cfg["disc_layers"],
            base_channels=cfg["base_channels"],
            resolution=cfg["size"],
            leaky_slope=cfg["leaky_slope"],
        )
        gen, disc, depth_net, curve1, curve2 = train_two_stage(
            lows, fringes, depths, unet_cfg, disc_cfg, unet_cfg, train_cfg,
            max_steps=cfg["steps"],
        )
        save_model(out / "generator.ckpt", gen)
        save_model(out / "discriminator.ckpt", disc)
        save_model(out / "depth_net.ckpt", depth_net)
        save_loss_curve(
            out / "loss_curve_stage1.csv", curve1, ["step", "epoch", "loss_d", "loss_g"]
        )
        save_loss_curve(out / "loss_curve_stage2.csv", curve2, ["step", "epoch", "loss"])
        final = curve2[-1][2]
    save_train_config(out / "train_config.txt", train_cfg)
    _write_run_config(out, "train", cfg)
    print(f"trained ({cfg['approach']}), final loss {final:.6f} -> {out}")
    return 0


# ── infer ──


def _load_models(model_dir: Path):
    run_cfg = json.loads((model_dir / "run_config.json").read_text())
    unet_cfg = UNetConfig(
        levels=run_cfg["levels"],
        base_channels=run_cfg["base_channels"],
        resolution=run_cfg["size"],
        leaky_slope=run_cfg["leaky_slope"],
    )
    if run_cfg["approach"] == "e2e":
        model = load_model(model_dir / "unet.ckpt", UNet(unet_cfg))
        return "e2e", model
    gen = load_model(model_dir / "generator.ckpt", UNet(unet_cfg))
    depth_net = load_model(model_dir / "depth_net.ckpt", UNet(unet_cfg))
    return "two-stage", (gen, depth_net)


def cmd_infer(args) -> int:
    table = {
        "model_dir": (str, None),
        "input": (str, None),
        "out": (str, None),
    }
    cfg = _resolve(args, table)
    _require(cfg, "model_dir", "input", "out")
    approach, models = _load_models(Path(cfg["model_dir"]))
    lowres, _ = read_pgm(cfg["input"])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    if approach == "e2e":
        depth = infer_end_to_end(models, lowres)
    else:
        fringe, depth = infer_two_stage(models[0], models[1], lowres)
        write_fringe_pgm(out / "fringe.pgm", fringe.values)
    write_depth_pgm(out / "depth.pgm", depth.values)
    _write_run_config(out, "infer", {**cfg, "approach": approach})
    print(f"inferred depth ({approach}) -> {out}")
    return 0


# ── eval ──


def run_eval(manifest_path: str | Path, split: str, infer_fn, out_dir: str | Path):
    """Score a split with infer_fn(lowres_values, entry) -> depth array.

    The model-free entry point lets tests plug in oracle reconstructions;
    cmd_eval wires in real checkpoints.
    """
    manifest = DatasetManifest.load(manifest_path)
    entries = manifest.split_entries(split)
    if not entries:
        raise ValueError(f"manifest has no {split!r} entries")
    root = Path(manifest_path).parent
    reports, by_rate = [], {}
    for entry in entries:
        lowres, _ = read_pgm(root / entry.fringe_lo_path)
        truth, _ = read_pgm(root / entry.depth_path)
        pred = np.asarray(infer_fn(lowres, entry), dtype=np.float64)
        report = evaluate(pred, truth)
        reports.append(report)
        by_rate.setdefault(entry.rate, []).append(report)

    combined = aggregate(reports)
    rate_reports = {rate: aggregate(rs) for rate, rs in by_rate.items()}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "combined": combined.to_dict(),
        "by_rate": {
            rate_label(rate): rate_reports[rate].to_dict()
            for rate in sorted(rate_reports, reverse=True)
        },
    }
    (out / "eval_report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    text = format_rate_table(rate_reports) + "\n\n" + format_report(combined) + "\n"
    (out / "eval_report.txt").write_text(text)
    return combined


def cmd_eval(args) -> int:
    table = {
        "model_dir": (str, None),
        "manifest": (str, None),
        "split": (_choice("train", "test"), "test"),
        "out": (str, None),
    }
    cfg = _resolve(args, table)
    _require(cfg, "model_dir", "manifest", "out")
    approach, models = _load_models(Path(cfg["model_dir"]))
    if approach == "e2e":
        infer_fn = lambda lowres, entry: infer_end_to_end(models, lowres).values
    else:
        infer_fn = lambda lowres, entry: infer_two_stage(models[0], models[1], lowres)[1].values
    combined = run_eval(cfg["manifest"], cfg["split"], infer_fn, cfg["out"])
    _write_run_config(Path(cfg["out"]), "eval", {**cfg, "approach": approach})
    print(
        f"evaluated {combined.sample_count} scenes: "
        f"alpha={combined.alpha:.6f} delta={combined.delta:.6f} "
        f"gamma={combined.gamma:.6f} ssim={combined.ssim:.6f}"
    )
    return 0


# ── nyquist-demo ──


def dominant_bins(row: np.ndarray) -> list[int]:
    """Indices of the strongest non-DC full-DFT magnitude bins.

    The full spectrum keeps each frequency's conjugate mirror, so a
    carrier sampled below twice its frequency but at least once per
    period still exposes the true cycle count at bin N - folded.
    """
    mag = np.abs(np.fft.fft(row))
    mag[0] = 0.0
    peak = mag.max()
    return [int(k) for k in np.nonzero(mag >= peak - 1e-9 * max(peak, 1.0))[0]]


def _strip_window(extent: int) -> Window:
    return Window(tuple((0, c) for c in range(extent)))


def cmd_nyquist_demo(args) -> int:
    table = {
        "period": (float, 6.0),
        "extents": (_parse_extents, (3, 5, 7)),
        "height": (int, 12),
        "mode": (_choice("rounded", "raw"), "rounded"),
        "out": (str, None),
    }
    cfg = _resolve(args, table)
    _require(cfg, "out")
    period = cfg["period"]
    period_px = round(period)
    if abs(period - period_px) > 1e-9 or period_px < 2:
        raise ValueError(f"demo needs an integer period >= 2, got {period}")
    extents = cfg["extents"]
    if any(m < 1 for m in extents):
        raise ValueError("window extents must be >= 1")

    width = math.lcm(period_px, *extents)
    width *= max(1, math.ceil(96 / width))
    expected_bin = width // period_px

    flat = np.zeros((cfg["height"], width))
    carrier = binarize(render_sinusoid(flat, ProjectionGeometry(angle=15.0, period=float(period_px))))

    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_fringe_pgm(out / "carrier.pgm", carrier.values)
    cases = []
    for extent in extents:
        seq = make_sequence((cfg["height"], width), _strip_window(extent), "raster")
        lowres = reorder(acquire(carrier, seq), seq, mode=cfg["mode"])
        bins = dominant_bins(lowres.values.mean(axis=0))
        shift = min(abs(k - expected_bin) for k in bins)
        regime = check_nyquist(extent, float(period_px))
        cases.append(
            {"extent": extent, "regime": regime, "dominant_bins": bins, "bin_shift": shift}
        )
        write_fringe_pgm(out / f"lowres_m{extent}.pgm", lowres.values)

    doc = {
        "period": period_px,
        "width": width,
        "expected_bin": expected_bin,
        "cases": cases,
    }
    (out / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    lines = [
        f"M={c['extent']}: {c['regime']} (bins {c['dominant_bins']}, shift {c['bin_shift']})"
        for c in cases
    ]
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    _write_run_config(out, "nyquist-demo", cfg)
    print("; ".join(lines))
    return 0


# ── compare-patterns ──


def least_squares_reconstructions(patterns, traces: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares images from random-mask measurements.

    traces is (scenes, measurements); returns (scenes, H, W). Solves the
    normal equations on the measurement side, exact for full-row-rank
    mask matrices (the random masks are underdetermined: fewer
    measurements than pixels).
    """
    height, width = patterns.dims
    a = patterns.patterns.reshape(patterns.count, height * width)
    gram = a @ a.T
    coeffs = np.linalg.solve(gram, traces.T)
    return (a.T @ coeffs).T.reshape(-1, height, width)


def cmd_compare_patterns(args) -> int:
    table = {
        "count": (int, 20),
        "rate": (float, 0.25),
        "seed": (int, 0),
        "size": (int, 64),
        "density": (float, 0.5),
        "out": (str, None),
    }
    cfg = _resolve(args, table)
    _require(cfg, "out")
    if cfg["count"] < 1:
        raise ValueError(f"--count must be positive, got {cfg['count']}")
    size = cfg["size"]
    n = _cells_for_rate(cfg["rate"])
    window = make_window(n)
    seq = make_sequence((size, size), window, "raster")
    budget = len(seq.placements)
    patterns = make_random_patterns((size, size), budget, cfg["density"], seed=cfg["seed"])

    block_h, block_w = window.bounding_box
    active_scores, traces, truths = [], [], []
    for i in range(cfg["count"]):
        rng = np.random.default_rng([cfg["seed"], i])
        spec = SceneSpec(kind="composite", count=3, seed=int(rng.integers(1 << 31)))
        period = float(rng.uniform(6.0, 8.0))
        angle = float(rng.uniform(13.0, 17.0))
        depth = gen_scene(spec, size, size)
        fringe = binarize(render_sinusoid(depth, ProjectionGeometry(angle=angle, period=period)))

        lowres = reorder(acquire(fringe, seq), seq, mode="rounded")
        upsampled = lowres.values.repeat(block_h, axis=0).repeat(block_w, axis=1)
        active_scores.append(ssim_score(upsampled, fringe.values))
        traces.append(acquire_random(fringe, patterns).values)
        truths.append(fringe.values)

    recons = np.clip(least_squares_reconstructions(patterns, np.stack(traces)), 0.0, 1.0)
    random_scores = [ssim_score(recons[i], truths[i]) for i in range(cfg["count"])]

    active_mean = float(np.mean(active_scores))
    random_mean = float(np.mean(random_scores))
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "count": cfg["count"],
        "rate": cfg["rate"],
        "budget": budget,
        "density": cfg["density"],
        "active_mean_ssim": active_mean,
        "random_mean_ssim": random_mean,
        "margin": active_mean - random_mean,
        "per_scene": [
            {"index": i, "active_ssim": active_scores[i], "random_ssim": random_scores[i]}
            for i in range(cfg["count"])
        ],
    }
    (out / "comparison.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _write_run_config(out, "compare-patterns", cfg)
    print(
        f"active mean SSIM {active_mean:.4f} vs random-LS {random_mean:.4f} "
        f"(margin {active_mean - random_mean:+.4f}, budget {budget})"
    )
    return 0


# ── parser ──


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spi3d",
        description="Simulate windowed single-pixel fringe acquisition and reconstruct depth.",
    )
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="key=value file; flags override it")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="base random seed")

    p = sub.add_parser("gen-data", help="generate a procedural scene/fringe dataset")
    common(p)
    p.add_argument("--count", type=int, help="number of scenes")
    p.add_argument("--size", type=int, help="scene resolution in pixels")
    p.add_argument("--order", choices=["raster", "swirl"], help="window scan order")
    p.add_argument("--rate", type=float, help="force one sampling rate instead of the 1:1:2 mix")
    p.add_argument("--period", type=float, help="force one fringe period instead of [6, 8] px")
    p.add_argument("--angle-range", type=_parse_float_range, help="projection angle low:high deg")
    p.add_argument("--noise-range", type=_parse_float_range, help="noise amplitude low:high")
    p.add_argument("--split-ratio", type=float, help="train fraction of the dataset")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("sample", help="acquire one scene image with a sliding window")
    common(p)
    p.add_argument("--scene", help="input PGM image")
    p.add_argument("--rate", type=float, help="sampling rate 1/N")
    p.add_argument("--window", choices=["rect", "split-pair"], help="window family")
    p.add_argument("--order", choices=["raster", "swirl"], help="window scan order")
    p.add_argument("--mode", choices=["rounded", "raw"], help="low-res assembly mode")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="train a reconstruction model on a dataset")
    common(p)
    p.add_argument("--manifest", help="dataset manifest JSON")
    p.add_argument("--approach", choices=["e2e", "two-stage"], help="reconstruction approach")
    p.add_argument("--size", type=int, help="canonical input resolution")
    p.add_argument("--levels", type=int, help="U-Net depth")
    p.add_argument("--base-channels", type=int, help="channels at the first level")
    p.add_argument("--disc-layers", type=int, help="discriminator stride-2 stages")
    p.add_argument("--steps", type=int, help="stop after this many optimizer steps")
    p.add_argument("--lr", dest="learning_rate", type=float, help="learning rate")
    p.add_argument("--batch", dest="batch_size", type=int, help="batch size")
    p.add_argument("--epochs", type=int, help="epoch budget")
    p.add_argument("--dropout", type=float, help="dropout probability")
    p.add_argument("--leaky-slope", type=float, help="LeakyReLU negative slope")
    p.add_argument("--rate-mix", type=_parse_mix, help="rate mix weights a:b:c")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a trained model on a manifest split")
    common(p)
    p.add_argument("--model-dir", help="directory written by train")
    p.add_argument("--manifest", help="dataset manifest JSON")
    p.add_argument("--split", choices=["train", "test"], help="which split to score")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("infer", help="reconstruct depth from one low-res fringe image")
    common(p)
    p.add_argument("--model-dir", help="directory written by train")
    p.add_argument("--input", help="low-res fringe PGM")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("nyquist-demo", help="show strict/relaxed/aliased sampling regimes")
    common(p)
    p.add_argument("--period", type=float, help="carrier fringe period in pixels")
    p.add_argument("--extents", type=_parse_extents, help="window extents, comma-separated")
    p.add_argument("--height", type=int, help="carrier image height")
    p.add_argument("--mode", choices=["rounded", "raw"], help="low-res assembly mode")
    p.set_defaults(func=cmd_nyquist_demo)

    p = sub.add_parser("compare-patterns", help="active windows vs random masks at equal budget")
    common(p)
    p.add_argument("--count", type=int, help="number of held-out scenes")
    p.add_argument("--rate", type=float, help="sampling rate 1/N")
    p.add_argument("--size", type=int, help="scene resolution in pixels")
    p.add_argument("--density", type=float, help="random mask fill probability")
    p.set_defaults(func=cmd_compare_patterns)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
