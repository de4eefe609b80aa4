"""Checkpoint persistence.

A checkpoint is a single zip archive holding one ``.npy`` file per
parameter/buffer (float32, little-endian) under ``arrays/`` plus a
``header.json`` with the config, training step, and FID history.  Arrays
round-trip bit-exactly.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .nets import Discriminator, GeneratorConfig, MappingNetwork, SynthesisNetwork, build_networks

PREFIXES = ("mapping", "synthesis", "discriminator")


@dataclass
class Checkpoint:
    config: GeneratorConfig
    arrays: dict[str, np.ndarray]  # "mapping/...", "synthesis/...", "discriminator/..."
    step: int = 0
    fid_history: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        steps = [s for s, _ in self.fid_history]
        if steps != sorted(set(steps)):
            raise ValueError("FID history steps must be strictly increasing")

    @classmethod
    def from_modules(
        cls,
        cfg: GeneratorConfig,
        mapping: MappingNetwork,
        synthesis: SynthesisNetwork,
        discriminator: Discriminator,
        step: int = 0,
        fid_history: list[tuple[int, float]] | None = None,
    ) -> "Checkpoint":
        arrays = {}
        for prefix, module in zip(PREFIXES, (mapping, synthesis, discriminator)):
            for name, tensor in module.state_dict().items():
                arrays[f"{prefix}/{name}"] = tensor.detach().cpu().numpy().astype(np.float32)
        return cls(config=cfg, arrays=arrays, step=step, fid_history=list(fid_history or []))

    def build_modules(self, dtype: torch.dtype = torch.float32):
        mapping, synthesis, discriminator = build_networks(self.config)
        for prefix, module in zip(PREFIXES, (mapping, synthesis, discriminator)):
            state = {
                name[len(prefix) + 1:]: torch.from_numpy(arr.copy())
                for name, arr in self.arrays.items()
                if name.startswith(prefix + "/")
            }
            module.load_state_dict(state)
            module.to(dtype)
            module.eval()
        return mapping, synthesis, discriminator

    def save(self, path: Path) -> None:
        header = {
            "config": self.config.to_dict(),
            "step": self.step,
            "fid_history": self.fid_history,
        }
        with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
            zf.writestr("header.json", json.dumps(header, indent=2))
            for name in sorted(self.arrays):
                buf = io.BytesIO()
                np.save(buf, np.ascontiguousarray(self.arrays[name], dtype="<f4"))
                zf.writestr(f"arrays/{name}.npy", buf.getvalue())

    @classmethod
    def load(cls, path: Path) -> "Checkpoint":
        with zipfile.ZipFile(path) as zf:
            header = json.loads(zf.read("header.json"))
            arrays = {}
            for info in zf.infolist():
                if info.filename.startswith("arrays/") and info.filename.endswith(".npy"):
                    name = info.filename[len("arrays/"):-len(".npy")]
                    arrays[name] = np.load(io.BytesIO(zf.read(info)))
        return cls(
            config=GeneratorConfig.from_dict(header["config"]),
            arrays=arrays,
            step=header["step"],
            fid_history=[(int(s), float(v)) for s, v in header["fid_history"]],
        )
