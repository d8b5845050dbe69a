"""Paired dataset loading for scan/skeleton directories.

A pair directory holds <stem>.scan.png next to <stem>.skel.png; other
files (genotype JSON, manifests) are ignored.  Images are grayscale,
resized to the configured square size on load and scaled to [-1, 1],
the generator's tanh range.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch.utils.data import Dataset

from .model import DatasetError

SCAN_SUFFIX = ".scan.png"
SKEL_SUFFIX = ".skel.png"


def discover_pairs(pairs_dir: Path | str) -> list[tuple[Path, Path]]:
    """Collect (scan, skeleton) path pairs, sorted by stem.

    Raises DatasetError when the directory holds no pairs or when any
    scan or skeleton file lacks its partner.
    """
    root = Path(pairs_dir)
    if not root.is_dir():
        raise DatasetError(f"pair directory not found: {root}")
    scans = {p.name[:-len(SCAN_SUFFIX)]: p for p in root.glob(f"*{SCAN_SUFFIX}")}
    skels = {p.name[:-len(SKEL_SUFFIX)]: p for p in root.glob(f"*{SKEL_SUFFIX}")}
    unpaired = sorted(set(scans) ^ set(skels))
    if unpaired:
        raise DatasetError(
            f"unpaired stems in {root}: {', '.join(unpaired[:5])}"
            + (" ..." if len(unpaired) > 5 else ""))
    if not scans:
        raise DatasetError(f"no {SCAN_SUFFIX}/{SKEL_SUFFIX} pairs in {root}")
    return [(scans[stem], skels[stem]) for stem in sorted(scans)]


def load_image_tensor(source: Path | str | Image.Image, image_size: int) -> torch.Tensor:
    """Load a grayscale image as a (1, S, S) tensor in [-1, 1]."""
    if isinstance(source, Image.Image):
        img = source
    else:
        img = Image.open(source)
    img = img.convert("L").resize((image_size, image_size), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32) / 127.5 - 1.0
    return torch.from_numpy(arr).unsqueeze(0)


def tensor_to_image(t: torch.Tensor) -> Image.Image:
    """Map a (1, S, S) tensor in [-1, 1] back to a grayscale image."""
    arr = t.detach().squeeze(0).clamp(-1.0, 1.0).numpy()
    gray = np.rint((arr + 1.0) * 127.5).astype(np.uint8)
    return Image.fromarray(gray, "L")


class PairDataset(Dataset):
    """Torch dataset over discovered (scan, skeleton) tensor pairs."""

    def __init__(self, pairs: list[tuple[Path, Path]], image_size: int):
        self.pairs = pairs
        self.image_size = image_size

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, idx: int) -> tuple[torch.Tensor, torch.Tensor]:
        scan_path, skel_path = self.pairs[idx]
        try:
            scan = load_image_tensor(scan_path, self.image_size)
            skel = load_image_tensor(skel_path, self.image_size)
        except OSError as exc:
            raise DatasetError(f"unreadable image pair {scan_path.name}: {exc}") from exc
        return scan, skel
