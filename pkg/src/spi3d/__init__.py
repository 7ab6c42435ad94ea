"""Desk-scale 3D single-pixel imaging: simulation and learned reconstruction.

A fringe-projection scene is measured by a spatially blind detector
through a sliding binary window; the detector trace is reordered into a
low-resolution fringe image, and depth is recovered either end-to-end by
a U-Net or by adversarial fringe super-resolution followed by a second
U-Net. Everything runs on numpy plus a small built-in autodiff engine.
"""

from .detector_sim import (
    LowResFringe,
    SignalTrace,
    acquire,
    acquire_random,
    load_trace,
    measure,
    reorder,
    save_trace,
)
from .fringe_render import (
    FringeImage,
    NoiseSpec,
    ProjectionGeometry,
    add_noise,
    binarize,
    render_sinusoid,
    sample_angle,
)
from .metrics import EvalReport, aggregate, compare_reports, evaluate, evaluate_pairs
from .models import (
    DEEP_UNET,
    DiscriminatorConfig,
    PatchDiscriminator,
    TrainConfig,
    UNet,
    UNetConfig,
    infer_end_to_end,
    infer_two_stage,
    load_model,
    load_train_config,
    loss_discriminator,
    loss_generator,
    loss_unet,
    prepare_input,
    save_model,
    save_train_config,
    train_end_to_end,
    train_two_stage,
)
from .pgm import read_pgm, write_depth_pgm, write_fringe_pgm, write_pgm
from .sampling import (
    PatternSequence,
    RandomPatternSet,
    Window,
    check_nyquist,
    make_random_patterns,
    make_sequence,
    make_window,
)
from .scene_gen import (
    DatasetManifest,
    DepthMap,
    ManifestEntry,
    SceneSpec,
    augment_pose,
    build_manifest,
    gen_scene,
)
from .tensor_engine import OptimizerState, Tensor, adam_step, load_checkpoint, save_checkpoint, ssim

__version__ = "0.1.0"
