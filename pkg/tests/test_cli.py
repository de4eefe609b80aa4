import json

import numpy as np
from click.testing import CliRunner
from PIL import Image

from ganspire.cli import main

from conftest import make_ui_image
from test_dataset import random_hierarchy


def test_preprocess_command(tmp_path):
    rng = np.random.RandomState(0)
    src = tmp_path / "src"
    src.mkdir()
    for i, n in enumerate([2, 3, 4]):
        Image.fromarray(make_ui_image(rng, 40)).save(src / f"s{i}.png")
        (src / f"s{i}.json").write_text(json.dumps(random_hierarchy(rng, n)))
    runner = CliRunner()
    result = runner.invoke(main, [
        "preprocess", "--src", str(src), "--out", str(tmp_path / "out"),
        "--min-unique", "3", "--resolution", "32",
    ])
    assert result.exit_code == 0, result.output
    assert "kept 2 screenshots" in result.output
    assert (tmp_path / "out" / "manifest.json").exists()


def test_encode_and_synthesize_commands(tmp_path, trained_checkpoint):
    ckpt = tmp_path / "m.ckpt"
    trained_checkpoint.save(ckpt)
    img_path = tmp_path / "input.png"
    Image.fromarray(make_ui_image(np.random.RandomState(1), 32)).save(img_path)
    runner = CliRunner()
    code_path = tmp_path / "code.bin"
    result = runner.invoke(main, [
        "encode", "--ckpt", str(ckpt), "--image", str(img_path),
        "--out", str(code_path), "--iterations", "3",
    ])
    assert result.exit_code == 0, result.output
    sidecar = json.loads(code_path.with_suffix(".json").read_text())
    assert sidecar["slots"] == trained_checkpoint.config.slots
    assert code_path.stat().st_size == sidecar["slots"] * sidecar["latent_dim"] * 4

    out_dir = tmp_path / "synth"
    result = runner.invoke(main, [
        "synthesize", "--ckpt", str(ckpt), "--source", str(code_path),
        "--targets-mode", "random", "-k", "1", "--out", str(out_dir),
    ])
    assert result.exit_code == 0, result.output
    batch = json.loads((out_dir / "batch.json").read_text())
    s = trained_checkpoint.config.slots
    assert len(batch) == s * (s + 1) // 2


def test_fid_command(tmp_path):
    rng = np.random.RandomState(2)
    for name in ("real", "fake"):
        d = tmp_path / name
        d.mkdir()
        for i in range(4):
            Image.fromarray(make_ui_image(rng, 32)).save(d / f"{i}.png")
    runner = CliRunner()
    result = runner.invoke(main, ["fid", "--real", str(tmp_path / "real"),
                                  "--fake", str(tmp_path / "fake")])
    assert result.exit_code == 0, result.output
    assert "FID =" in result.output
