"""Learned scan-to-skeleton translation for table images.

An adversarially trained U-Net maps table scans (text plus a partial
grid) to table skeletons (all dividers, no text) at 256x256, paired
with a patch-level discriminator.  Checkpoints and exported skeleton
PNGs follow the <stem>.scan.png / <stem>.skel.png convention, so the
output of `skelgan export` feeds directly into downstream structure
estimation.
"""

from .data import (PairDataset, SCAN_SUFFIX, SKEL_SUFFIX, discover_pairs,
                   load_image_tensor, tensor_to_image)
from .infer import export_skeletons, infer
from .model import (CheckpointError, ConfigError, DatasetError,
                    PatchDiscriminator, SkelganError, TrainConfig,
                    UNetGenerator, build_discriminator, build_generator,
                    init_weights)
from .train import (EpochStats, HISTORY_HEADER, ModelCheckpoint, read_history,
                    train, write_history)

__all__ = [
    "CheckpointError",
    "ConfigError",
    "DatasetError",
    "EpochStats",
    "HISTORY_HEADER",
    "ModelCheckpoint",
    "PairDataset",
    "PatchDiscriminator",
    "SCAN_SUFFIX",
    "SKEL_SUFFIX",
    "SkelganError",
    "TrainConfig",
    "UNetGenerator",
    "build_discriminator",
    "build_generator",
    "discover_pairs",
    "export_skeletons",
    "infer",
    "init_weights",
    "load_image_tensor",
    "read_history",
    "tensor_to_image",
    "train",
    "write_history",
]
