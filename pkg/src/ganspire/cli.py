"""Command-line entry points for the pipeline stages."""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np
from PIL import Image


@click.group()
def main():
    """UI design inspiration pipeline."""


@main.command()
@click.option("--src", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--min-unique", default=3, show_default=True)
@click.option("--resolution", default=64, show_default=True)
def preprocess(src, out, min_unique, resolution):
    """Filter and resize a screenshot corpus into a training manifest."""
    from .dataset import preprocess as run

    manifest = run(Path(src), Path(out), min_unique, resolution)
    click.echo(f"kept {len(manifest.entries)} screenshots at {resolution}px -> {out}")


@main.command()
@click.option("--corpus", type=click.Path(exists=True), required=True,
              help="Manifest JSON of the preprocessed corpus.")
@click.option("--levels", default=4, show_default=True)
@click.option("--latent-dim", default=64, show_default=True)
@click.option("--steps", default=500, show_default=True)
@click.option("--eval-every", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def train(corpus, levels, latent_dim, steps, eval_every, seed, out):
    """Train the generator/discriminator pair; saves the best-FID checkpoint."""
    from .dataset import load_corpus
    from .gan import GeneratorConfig
    from .gan.train import train as run

    shots = load_corpus(Path(corpus))
    cfg = GeneratorConfig(levels=levels, latent_dim=latent_dim, seed=seed)
    if shots and shots[0].image.shape[0] != cfg.final_resolution:
        raise click.ClickException(
            f"corpus is {shots[0].image.shape[0]}px but {levels} levels imply "
            f"{cfg.final_resolution}px"
        )

    def progress(step, info):
        click.echo(f"step {step}: fid={info['fid']:.2f} "
                   f"d={info['loss_d']:.3f} g={info['loss_g']:.3f}")

    ckpt = run([s.image for s in shots], cfg, max_steps=steps,
               eval_every=eval_every, progress=progress)
    ckpt.save(Path(out))
    best = min(v for _, v in ckpt.fid_history)
    click.echo(f"saved checkpoint (best FID {best:.2f}) -> {out}")


@main.command()
@click.option("--real", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--fake", type=click.Path(exists=True, file_okay=False), required=True)
def fid(real, fake):
    """FID between two directories of PNG images."""
    from .gan.fid import compute_fid

    def load_dir(d):
        return [np.asarray(Image.open(p).convert("RGB"))
                for p in sorted(Path(d).glob("*.png"))]

    value = compute_fid(load_dir(real), load_dir(fake))
    click.echo(f"FID = {value:.4f}")


@main.command()
@click.option("--ckpt", type=click.Path(exists=True), required=True)
@click.option("--image", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--iterations", default=500, show_default=True)
@click.option("--step-size", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
def encode(ckpt, image, out, iterations, step_size, seed):
    """Search the latent code of an image; writes CODE (raw f32) + JSON sidecar."""
    from .encoder import EncodeConfig, encode as run
    from .gan import Checkpoint, GanModel

    model = GanModel(Checkpoint.load(Path(ckpt)))
    target = np.asarray(Image.open(image).convert("RGB"))
    cfg = EncodeConfig(max_iterations=iterations, step_size=step_size, seed=seed)
    result = run(target, model, cfg)
    code = result.code.astype("<f4")
    Path(out).write_bytes(code.tobytes())
    Path(out).with_suffix(".json").write_text(json.dumps({
        "slots": int(code.shape[0]),
        "latent_dim": int(code.shape[1]),
        "final_loss": result.final_loss,
    }, indent=2))
    click.echo(f"final loss {result.final_loss:.5f} -> {out}")


def _load_code(path: Path, model) -> np.ndarray:
    raw = np.frombuffer(Path(path).read_bytes(), dtype="<f4")
    return raw.reshape(model.cfg.slots, model.cfg.latent_dim).astype(np.float32)


@main.command()
@click.option("--ckpt", type=click.Path(exists=True), required=True)
@click.option("--source", type=click.Path(exists=True), required=True,
              help="Style code file produced by `ganspire encode`.")
@click.option("--targets-mode", type=click.Choice(["random", "corpus"]), default="random")
@click.option("--corpus", type=click.Path(exists=True), default=None,
              help="Manifest JSON (required for corpus targets).")
@click.option("-k", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def synthesize(ckpt, source, targets_mode, corpus, k, seed, out):
    """Merge a source code with k targets at every contiguous slot range."""
    from .dataset import load_corpus
    from .gan import Checkpoint, GanModel
    from .stylemerge import make_targets, synthesize_pair

    model = GanModel(Checkpoint.load(Path(ckpt)))
    source_code = _load_code(Path(source), model)
    mode = "random_latent" if targets_mode == "random" else "corpus_image"
    shots = load_corpus(Path(corpus)) if corpus else None
    targets = make_targets(mode, k, model, seed, corpus=shots)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for t_idx, (tid, code) in enumerate(targets):
        batch = synthesize_pair(source_code, code, model, "source", tid)
        for r, img in batch.items:
            name = f"{t_idx}_{r.start}_{r.end}.png"
            Image.fromarray(img).save(out_dir / name)
            manifest.append({"target": tid, "start": r.start, "end": r.end, "file": name})
    (out_dir / "batch.json").write_text(json.dumps(manifest, indent=2))
    click.echo(f"wrote {len(manifest)} images -> {out}")


@main.command()
@click.option("--batch", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--ckpt", type=click.Path(exists=True), required=True)
@click.option("--eps", default=0.9, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def select(batch, ckpt, eps, out):
    """Cluster a synthesized batch and keep the most realistic image per cluster."""
    from .gan import Checkpoint, GanModel
    from .perception import get_backend
    from .selection import select_from_batch

    model = GanModel(Checkpoint.load(Path(ckpt)))
    paths = sorted(Path(batch).glob("*.png"))
    images = [np.asarray(Image.open(p).convert("RGB")) for p in paths]
    reps = select_from_batch(images, model, get_backend(), eps)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = []
    for i, (img, member, score) in enumerate(
        zip(reps.images, reps.member_index_per_cluster, reps.scores)
    ):
        name = f"rep{i:03d}.png"
        Image.fromarray(img).save(out_dir / name)
        report.append({"file": name, "source": paths[member].name, "score": score})
    (out_dir / "representatives.json").write_text(json.dumps(report, indent=2))
    click.echo(f"{len(images)} images -> {len(reps.images)} representatives")


@main.command()
@click.option("--corpus", type=click.Path(exists=True), required=True)
@click.option("--search-corpus", type=click.Path(exists=True), required=True)
@click.option("--ckpt", type=click.Path(exists=True), required=True)
@click.option("--inputs", default=27, show_default=True,
              help="Number of stratified inputs (per-stratum count is inputs/strata).")
@click.option("--strata", default="3:11", show_default=True,
              help="Unique-label-count range lo:hi for stratification.")
@click.option("--seed", default=0, show_default=True)
@click.option("--encode-iterations", default=60, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def evaluate(corpus, search_corpus, ckpt, inputs, strata, seed, encode_iterations, out):
    """Run all six conditions over a stratified input sample."""
    from .dataset import load_corpus
    from .encoder import EncodeConfig
    from .experiments import ExperimentContext, run_experiment, stratified_sample
    from .gan import Checkpoint, GanModel
    from .perception import get_backend

    lo, hi = (int(x) for x in strata.split(":"))
    n_strata = hi - lo + 1
    per_stratum = max(1, inputs // n_strata)
    shots = load_corpus(Path(corpus))
    ctx = ExperimentContext(
        model=GanModel(Checkpoint.load(Path(ckpt))),
        corpus=shots,
        search_corpus=load_corpus(Path(search_corpus)),
        backend=get_backend(),
        seed=seed,
        encode_cfg=EncodeConfig(max_iterations=encode_iterations),
    )
    sample = stratified_sample(shots, (lo, hi), per_stratum, seed)
    result = run_experiment(sample.screenshots, ctx, out_dir=Path(out))
    click.echo(f"{len(result['cells'])} cells, {len(result['failures'])} failures -> {out}")


@main.command()
@click.option("--config", type=click.Path(exists=True), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(config, host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    app = create_app(ServiceConfig.load(Path(config)))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
