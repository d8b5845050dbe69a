"""Adversarial training of the scan-to-skeleton generator.

Each batch alternates a discriminator step (real pair scored toward 1,
generated pair toward 0) with a generator step whose loss is the
adversarial term plus lambda_l1 times the L1 distance to the target
skeleton.  Per-epoch means of both generator terms and the
discriminator loss form the loss history.
"""

from __future__ import annotations

import csv
import pickle
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import torch
from torch import nn
from torch.utils.data import DataLoader

from .data import PairDataset, discover_pairs
from .model import (CheckpointError, TrainConfig, build_discriminator,
                    build_generator)

#: Single-file checkpoint name used when saving into a directory.
CHECKPOINT_NAME = "checkpoint.pt"

_FORMAT_VERSION = 1

HISTORY_HEADER = ("epoch", "d_loss", "g_adv", "g_l1")


@dataclass(frozen=True)
class EpochStats:
    """Mean losses over one epoch."""

    epoch: int
    d_loss: float
    g_adv: float
    g_l1: float


@dataclass(frozen=True)
class ModelCheckpoint:
    """Trained weights plus the configuration that produced them."""

    config: TrainConfig
    epoch: int
    generator_state: dict = field(repr=False)
    discriminator_state: dict = field(repr=False)

    def build_generator(self) -> nn.Module:
        gen = build_generator(self.config)
        gen.load_state_dict(self.generator_state)
        return gen

    def build_discriminator(self) -> nn.Module:
        disc = build_discriminator(self.config)
        disc.load_state_dict(self.discriminator_state)
        return disc

    def save(self, path: Path | str) -> Path:
        """Write the checkpoint; a directory target gets CHECKPOINT_NAME."""
        target = Path(path)
        if target.suffix != ".pt":
            target.mkdir(parents=True, exist_ok=True)
            target = target / CHECKPOINT_NAME
        torch.save({
            "format_version": _FORMAT_VERSION,
            "config": asdict(self.config),
            "epoch": self.epoch,
            "generator": self.generator_state,
            "discriminator": self.discriminator_state,
        }, target)
        return target

    @classmethod
    def load(cls, path: Path | str) -> "ModelCheckpoint":
        source = Path(path)
        if source.is_dir():
            source = source / CHECKPOINT_NAME
        if not source.is_file():
            raise CheckpointError(f"checkpoint not found: {source}")
        try:
            payload = torch.load(source)
        except (pickle.UnpicklingError, RuntimeError, EOFError, ValueError) as exc:
            raise CheckpointError(f"not a checkpoint file: {source}: {exc}") from exc
        if not isinstance(payload, dict) or "format_version" not in payload:
            raise CheckpointError(f"not a checkpoint file: {source}")
        version = payload["format_version"]
        if version != _FORMAT_VERSION:
            raise CheckpointError(
                f"unsupported checkpoint version {version} (expected {_FORMAT_VERSION})")
        cfg = TrainConfig(**payload["config"])
        ckpt = cls(config=cfg, epoch=payload["epoch"],
                   generator_state=payload["generator"],
                   discriminator_state=payload["discriminator"])
        try:
            ckpt.build_generator()
            ckpt.build_discriminator()
        except (RuntimeError, KeyError) as exc:
            raise CheckpointError(f"weights do not match config: {exc}") from exc
        return ckpt


def train(pairs_dir: Path | str, cfg: TrainConfig,
          progress: Callable[[EpochStats], None] | None = None,
          ) -> tuple[ModelCheckpoint, list[EpochStats]]:
    """Train generator and discriminator on a pair directory.

    Fully seeded: weight init, batch order and dropout all derive from
    cfg.seed, so repeated runs produce identical checkpoints.
    """
    cfg.validate()
    pairs = discover_pairs(pairs_dir)
    dataset = PairDataset(pairs, cfg.image_size)

    torch.manual_seed(cfg.seed)
    generator = build_generator(cfg)
    discriminator = build_discriminator(cfg)
    generator.train()
    discriminator.train()

    betas = (cfg.beta1, cfg.beta2)
    opt_g = torch.optim.Adam(generator.parameters(), lr=cfg.learning_rate, betas=betas)
    opt_d = torch.optim.Adam(discriminator.parameters(), lr=cfg.learning_rate,
                             betas=betas)
    bce = nn.BCELoss()
    l1 = nn.L1Loss()

    loader = DataLoader(dataset, batch_size=cfg.batch_size, shuffle=True,
                        num_workers=0,
                        generator=torch.Generator().manual_seed(cfg.seed))

    history: list[EpochStats] = []
    for epoch in range(1, cfg.epochs + 1):
        sums = {"d_loss": 0.0, "g_adv": 0.0, "g_l1": 0.0}
        seen = 0
        for scan, skel in loader:
            fake = generator(scan)

            real_prob = discriminator(scan, skel)
            fake_prob = discriminator(scan, fake.detach())
            d_loss = 0.5 * (bce(real_prob, torch.ones_like(real_prob))
                            + bce(fake_prob, torch.zeros_like(fake_prob)))
            opt_d.zero_grad()
            d_loss.backward()
            opt_d.step()

            fake_prob = discriminator(scan, fake)
            g_adv = bce(fake_prob, torch.ones_like(fake_prob))
            g_l1 = l1(fake, skel)
            g_loss = g_adv + cfg.lambda_l1 * g_l1
            opt_g.zero_grad()
            g_loss.backward()
            opt_g.step()

            n = scan.shape[0]
            seen += n
            sums["d_loss"] += d_loss.item() * n
            sums["g_adv"] += g_adv.item() * n
            sums["g_l1"] += g_l1.item() * n

        stats = EpochStats(epoch=epoch, d_loss=sums["d_loss"] / seen,
                           g_adv=sums["g_adv"] / seen, g_l1=sums["g_l1"] / seen)
        history.append(stats)
        if progress is not None:
            progress(stats)

    checkpoint = ModelCheckpoint(
        config=cfg, epoch=cfg.epochs,
        generator_state=generator.state_dict(),
        discriminator_state=discriminator.state_dict())
    return checkpoint, history


def write_history(history: list[EpochStats], path: Path | str) -> None:
    """Write the loss history as CSV with HISTORY_HEADER columns."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_HEADER)
        for s in history:
            writer.writerow([s.epoch, f"{s.d_loss:.6f}", f"{s.g_adv:.6f}",
                             f"{s.g_l1:.6f}"])


def read_history(path: Path | str) -> list[EpochStats]:
    """Read a loss-history CSV written by write_history."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != HISTORY_HEADER:
        raise CheckpointError(f"not a loss-history CSV: {path}")
    return [EpochStats(epoch=int(r[0]), d_loss=float(r[1]), g_adv=float(r[2]),
                       g_l1=float(r[3])) for r in rows[1:]]
