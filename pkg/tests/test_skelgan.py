"""Tests for the learned scan-to-skeleton translator."""

import csv

import numpy as np
import pytest

torch = pytest.importorskip("torch")

from PIL import Image

from skelgan import (CheckpointError, ConfigError, DatasetError, ModelCheckpoint,
                     TrainConfig, build_discriminator, build_generator,
                     discover_pairs, export_skeletons, infer, train)
from skelgan.cli import run

TINY = dict(image_size=32, base_channels=4, batch_size=3)


def _draw_pair(rng, size=64):
    """A toy scan/skeleton pair: full grid on the skeleton, partial on the scan."""
    skel = np.full((size, size), 255, np.uint8)
    rows = [8, 28, 48, 58]
    cols = [6, 30, 54]
    for y in rows:
        skel[y:y + 2, cols[0]:cols[-1]] = 0
    for x in cols:
        skel[rows[0]:rows[-1], x:x + 2] = 0
    scan = skel.copy()
    scan[rows[1]:rows[1] + 2, :] = 255
    for _ in range(6):
        y = rng.integers(10, size - 12)
        x = rng.integers(8, size - 16)
        scan[y:y + 2, x:x + rng.integers(4, 10)] = 40
    return Image.fromarray(scan, "L"), Image.fromarray(skel, "L")


@pytest.fixture(scope="module")
def pair_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("pairs")
    rng = np.random.default_rng(5)
    for i in range(6):
        scan, skel = _draw_pair(rng)
        scan.save(root / f"{i:03d}.scan.png")
        skel.save(root / f"{i:03d}.skel.png")
    return root


@pytest.fixture(scope="module")
def tiny_ckpt(pair_dir):
    ckpt, history = train(pair_dir, TrainConfig(epochs=2, seed=7, **TINY))
    return ckpt, history


def test_generator_output_matches_input_shape():
    gen = build_generator(TrainConfig(**TINY))
    x = torch.rand(2, 1, 32, 32) * 2 - 1
    with torch.no_grad():
        y = gen(x)
    assert y.shape == x.shape
    assert float(y.min()) >= -1.0 and float(y.max()) <= 1.0


def test_discriminator_emits_patch_probability_grid():
    x = torch.rand(1, 1, 256, 256)
    sizes = []
    for layers in (3, 4, 5, 6):
        disc = build_discriminator(
            TrainConfig(discriminator_layers=layers, base_channels=4))
        with torch.no_grad():
            probs = disc(x, x)
        assert probs.shape[:2] == (1, 1)
        assert probs.shape[2] == probs.shape[3] >= 1
        assert float(probs.min()) >= 0.0 and float(probs.max()) <= 1.0
        sizes.append(probs.shape[2])
    # deeper stacks judge coarser patch grids
    assert sizes == sorted(sizes, reverse=True)


def test_config_validation():
    TrainConfig().validate()
    with pytest.raises(ConfigError):
        TrainConfig(discriminator_layers=2).validate()
    with pytest.raises(ConfigError):
        TrainConfig(discriminator_layers=7).validate()
    with pytest.raises(ConfigError):
        TrainConfig(image_size=100).validate()
    with pytest.raises(ConfigError):
        TrainConfig(image_size=16, discriminator_layers=3).validate()
    with pytest.raises(ConfigError):
        TrainConfig(lambda_l1=-1.0).validate()
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0).validate()


def test_training_is_seeded_and_history_finite(pair_dir):
    cfg = TrainConfig(epochs=1, seed=3, **TINY)
    first, hist_a = train(pair_dir, cfg)
    second, hist_b = train(pair_dir, cfg)
    for key, tensor in first.generator_state.items():
        assert torch.equal(tensor, second.generator_state[key])
    assert hist_a == hist_b
    for stats in hist_a:
        assert np.isfinite([stats.d_loss, stats.g_adv, stats.g_l1]).all()


def test_lambda_zero_trains_on_adversarial_loss_alone(pair_dir):
    _, history = train(pair_dir, TrainConfig(epochs=1, seed=3, lambda_l1=0.0, **TINY))
    assert np.isfinite(history[0].g_adv)
    assert np.isfinite(history[0].g_l1)


def test_infer_is_seed_deterministic(tiny_ckpt, pair_dir):
    ckpt, _ = tiny_ckpt
    scan = pair_dir / "000.scan.png"
    a = infer(ckpt, scan, seed=3)
    b = infer(ckpt, scan, seed=3)
    c = infer(ckpt, scan, seed=4)
    assert a.size == (32, 32) and a.mode == "L"
    assert np.array_equal(np.asarray(a), np.asarray(b))
    # dropout is the noise source, so another seed moves the output
    assert not np.array_equal(np.asarray(a), np.asarray(c))


def test_checkpoint_roundtrip_is_bit_identical(tiny_ckpt, pair_dir, tmp_path):
    ckpt, _ = tiny_ckpt
    scan = pair_dir / "001.scan.png"
    before = infer(ckpt, scan, seed=11)
    saved = ckpt.save(tmp_path / "ckpt")
    assert saved.name == "checkpoint.pt"
    reloaded = ModelCheckpoint.load(tmp_path / "ckpt")
    assert reloaded.config == ckpt.config
    assert reloaded.epoch == ckpt.epoch
    after = infer(reloaded, scan, seed=11)
    assert np.array_equal(np.asarray(before), np.asarray(after))


def test_checkpoint_load_rejects_junk(tmp_path):
    with pytest.raises(CheckpointError):
        ModelCheckpoint.load(tmp_path / "missing")
    junk = tmp_path / "junk.pt"
    junk.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        ModelCheckpoint.load(junk)


def test_discover_pairs_rejects_empty_and_unpaired(tmp_path):
    with pytest.raises(DatasetError):
        discover_pairs(tmp_path)
    Image.new("L", (8, 8), 255).save(tmp_path / "a.scan.png")
    with pytest.raises(DatasetError, match="a"):
        discover_pairs(tmp_path)


def test_export_writes_one_skeleton_per_scan(tiny_ckpt, pair_dir, tmp_path, capsys):
    ckpt, _ = tiny_ckpt
    scans = tmp_path / "scans"
    scans.mkdir()
    for i in range(3):
        src = pair_dir / f"{i:03d}.scan.png"
        (scans / src.name).write_bytes(src.read_bytes())
    (scans / "bad.scan.png").write_bytes(b"corrupt image")
    out = tmp_path / "out"
    count = export_skeletons(ckpt, scans, out, seed=1)
    assert count == 3
    files = sorted(p.name for p in out.glob("*.skel.png"))
    assert files == ["000.skel.png", "001.skel.png", "002.skel.png"]
    for name in files:
        img = Image.open(out / name)
        assert img.size == (32, 32) and img.mode == "L"
    assert "bad.scan.png" in capsys.readouterr().err


def test_export_empty_dir_returns_zero(tiny_ckpt, tmp_path):
    ckpt, _ = tiny_ckpt
    empty = tmp_path / "empty"
    empty.mkdir()
    assert export_skeletons(ckpt, empty, tmp_path / "out", seed=1) == 0
    with pytest.raises(DatasetError):
        export_skeletons(ckpt, tmp_path / "nowhere", tmp_path / "out", seed=1)


def test_cli_train_and_export_roundtrip(pair_dir, tmp_path):
    ckpt_dir = tmp_path / "ckpt"
    assert run(["train", "--pairs", str(pair_dir), "--out", str(ckpt_dir),
                "--image-size", "32", "--base-channels", "4", "--batch-size", "3",
                "--epochs", "1", "--seed", "9"]) == 0
    assert (ckpt_dir / "checkpoint.pt").is_file()
    rows = list(csv.reader((ckpt_dir / "history.csv").open()))
    assert rows[0] == ["epoch", "d_loss", "g_adv", "g_l1"]
    assert len(rows) == 2

    first = tmp_path / "out1"
    second = tmp_path / "out2"
    for out in (first, second):
        assert run(["export", "--ckpt", str(ckpt_dir), "--scans", str(pair_dir),
                    "--out", str(out), "--seed", "2"]) == 0
    names = sorted(p.name for p in first.glob("*.skel.png"))
    assert len(names) == 6
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_cli_error_exit_codes(tmp_path):
    assert run(["train", "--pairs", str(tmp_path)]) == 1
    assert run(["train", "--pairs", str(tmp_path / "nope"), "--out",
                str(tmp_path / "c"), "--seed", "1"]) == 2
    assert run(["train", "--pairs", str(tmp_path), "--out", str(tmp_path / "c"),
                "--layers", "9", "--seed", "1"]) == 2
    assert run(["export", "--ckpt", str(tmp_path / "none"), "--scans",
                str(tmp_path), "--out", str(tmp_path / "o"), "--seed", "1"]) == 2
