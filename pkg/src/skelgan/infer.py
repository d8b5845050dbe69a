"""Skeleton inference and batch export.

The generator runs in training mode at inference: dropout stays active
as the noise source, and batch normalization over a single image acts
as instance normalization.  Outputs are deterministic for a given
(checkpoint, scan, seed) triple; export derives a per-file seed from
the stem so results do not depend on directory contents.
"""

from __future__ import annotations

import hashlib
import sys
from pathlib import Path

import torch
from PIL import Image

from .data import SCAN_SUFFIX, SKEL_SUFFIX, load_image_tensor, tensor_to_image
from .model import DatasetError
from .train import ModelCheckpoint


def _file_seed(seed: int, stem: str) -> int:
    digest = hashlib.blake2b(f"{seed}:{stem}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def _generate(generator: torch.nn.Module, scan: Path | str | Image.Image,
              image_size: int, seed: int) -> Image.Image:
    x = load_image_tensor(scan, image_size).unsqueeze(0)
    torch.manual_seed(seed)
    with torch.no_grad():
        y = generator(x)
    return tensor_to_image(y[0])


def infer(ckpt: ModelCheckpoint, scan: Path | str | Image.Image,
          seed: int) -> Image.Image:
    """Translate one scan into a skeleton image.

    Returns a grayscale image of the checkpoint's configured size.
    """
    generator = ckpt.build_generator()
    generator.train()
    return _generate(generator, scan, ckpt.config.image_size, seed)


def _scan_stem(path: Path) -> str:
    if path.name.endswith(SCAN_SUFFIX):
        return path.name[:-len(SCAN_SUFFIX)]
    return path.stem


def export_skeletons(ckpt: ModelCheckpoint, scans_dir: Path | str,
                     out_dir: Path | str, seed: int) -> int:
    """Write one <stem>.skel.png per readable scan; return the count.

    Unreadable inputs are reported on stderr and skipped.  An empty
    scan directory yields zero files and succeeds.
    """
    root = Path(scans_dir)
    if not root.is_dir():
        raise DatasetError(f"scan directory not found: {root}")
    scans = sorted(root.glob(f"*{SCAN_SUFFIX}"))
    if not scans:
        scans = sorted(p for p in root.glob("*.png")
                       if not p.name.endswith(SKEL_SUFFIX))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    generator = ckpt.build_generator()
    generator.train()

    written = 0
    for path in scans:
        stem = _scan_stem(path)
        try:
            img = _generate(generator, path, ckpt.config.image_size,
                            _file_seed(seed, stem))
            img.save(out / f"{stem}{SKEL_SUFFIX}")
        except (OSError, ValueError) as exc:
            print(f"skipping {path.name}: {exc}", file=sys.stderr)
            continue
        written += 1
    return written
